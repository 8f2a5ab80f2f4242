//! Classification rules over the fully categorical view.
//!
//! A rule reads `lhs -> rhs [support, confidence]`: when every left-hand
//! predicate holds for a record, the rule proposes the right-hand target
//! value with its training confidence. Rule sets keep their rules in one
//! canonical order (confidence desc, support desc, shorter lhs first, then
//! lexical) so that "first matching rule fires" is a deterministic
//! conflict-resolution policy.

use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One left-hand-side condition on a single attribute.
///
/// `OneOf` expresses interval conditions over band labels ("grade above a
/// cut" is the union of the bands above it) without a separate numeric
/// comparator; values are kept sorted and distinct.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pred {
    Eq { attr: String, value: String },
    OneOf { attr: String, values: Vec<String> },
}

/// Rendered predicate syntax: `attr=value` or `attr=v1|v2`. Attributes must
/// not contain `=`; neither side may contain the `;` and `|` delimiters or
/// edge whitespace, so the rendering parses back unambiguously.
fn check_token(side: &str, s: &str) -> Result<()> {
    let bad = |msg: String| Err(Error::Model(format!("{side} {s:?}: {msg}")));
    if s.is_empty() {
        return bad("empty".into());
    }
    if s.trim() != s {
        return bad("leading or trailing whitespace".into());
    }
    for c in [';', '|'] {
        if s.contains(c) {
            return bad(format!("contains reserved delimiter {c:?}"));
        }
    }
    Ok(())
}

impl Pred {
    pub fn eq(attr: impl Into<String>, value: impl Into<String>) -> Result<Pred> {
        let (attr, value) = (attr.into(), value.into());
        check_token("attribute", &attr)?;
        check_token("value", &value)?;
        if attr.contains('=') {
            return Err(Error::Model(format!("attribute {attr:?} contains '='")));
        }
        Ok(Pred::Eq { attr, value })
    }

    pub fn one_of(attr: impl Into<String>, values: Vec<String>) -> Result<Pred> {
        let attr = attr.into();
        check_token("attribute", &attr)?;
        if attr.contains('=') {
            return Err(Error::Model(format!("attribute {attr:?} contains '='")));
        }
        if values.is_empty() {
            return Err(Error::Model(format!("predicate on {attr} has no values")));
        }
        let mut values = values;
        for v in &values {
            check_token("value", v)?;
        }
        values.sort();
        values.dedup();
        if values.len() == 1 {
            let value = values.pop().expect("one value");
            return Ok(Pred::Eq { attr, value });
        }
        Ok(Pred::OneOf { attr, values })
    }

    pub fn attr(&self) -> &str {
        match self {
            Pred::Eq { attr, .. } | Pred::OneOf { attr, .. } => attr,
        }
    }

    pub fn matches(&self, value: &str) -> bool {
        match self {
            Pred::Eq { value: want, .. } => want == value,
            Pred::OneOf { values, .. } => values.iter().any(|v| v == value),
        }
    }

    /// Parses the `attr=value` / `attr=v1|v2` rendering.
    pub fn parse(text: &str) -> Result<Pred> {
        let (attr, value) = text
            .split_once('=')
            .ok_or_else(|| Error::Model(format!("predicate {text:?} lacks '='")))?;
        if value.contains('|') {
            Pred::one_of(attr, value.split('|').map(str::to_string).collect())
        } else {
            Pred::eq(attr, value)
        }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pred::Eq { attr, value } => write!(f, "{attr}={value}"),
            Pred::OneOf { attr, values } => write!(f, "{attr}={}", values.join("|")),
        }
    }
}

/// Where a rule came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleOrigin {
    Mined,
    Tree,
}

impl fmt::Display for RuleOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleOrigin::Mined => write!(f, "mined"),
            RuleOrigin::Tree => write!(f, "tree"),
        }
    }
}

impl RuleOrigin {
    fn parse(s: &str) -> Result<RuleOrigin> {
        match s {
            "mined" => Ok(RuleOrigin::Mined),
            "tree" => Ok(RuleOrigin::Tree),
            other => Err(Error::Model(format!("unknown rule origin {other:?}"))),
        }
    }
}

/// One classification rule. Construct through [`Rule::new`], which sorts the
/// left side by attribute and enforces the support/confidence relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Conditions, one per attribute, sorted by attribute name. May be empty
    /// (an always-matching rule, as extracted from a leafless-split tree).
    pub lhs: Vec<Pred>,
    pub rhs_attr: String,
    pub rhs_value: String,
    /// Fraction of training rows matching lhs and rhs together.
    pub support: f64,
    /// Fraction of lhs-matching training rows that also match rhs.
    pub confidence: f64,
    pub origin: RuleOrigin,
}

impl Rule {
    pub fn new(
        lhs: Vec<Pred>,
        rhs_attr: impl Into<String>,
        rhs_value: impl Into<String>,
        support: f64,
        confidence: f64,
        origin: RuleOrigin,
    ) -> Result<Rule> {
        let (rhs_attr, rhs_value) = (rhs_attr.into(), rhs_value.into());
        check_token("attribute", &rhs_attr)?;
        check_token("value", &rhs_value)?;
        let mut lhs = lhs;
        lhs.sort_by(|a, b| a.attr().cmp(b.attr()));
        for pair in lhs.windows(2) {
            if pair[0].attr() == pair[1].attr() {
                return Err(Error::Model(format!(
                    "duplicate lhs attribute {}",
                    pair[0].attr()
                )));
            }
        }
        if lhs.iter().any(|p| p.attr() == rhs_attr) {
            return Err(Error::Model(format!(
                "target {rhs_attr} may not appear on the lhs"
            )));
        }
        for (name, v) in [("support", support), ("confidence", confidence)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Model(format!("{name} {v} outside [0, 1]")));
            }
        }
        // support = confidence * P(lhs) with P(lhs) <= 1
        if support > confidence {
            return Err(Error::Model(format!(
                "support {support} exceeds confidence {confidence}"
            )));
        }
        Ok(Rule {
            lhs,
            rhs_attr,
            rhs_value,
            support,
            confidence,
            origin,
        })
    }

    /// Rendered lhs, `attr=value; attr=v1|v2`, empty string for an empty lhs.
    pub fn lhs_text(&self) -> String {
        self.lhs
            .iter()
            .map(Pred::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn rhs_text(&self) -> String {
        format!("{}={}", self.rhs_attr, self.rhs_value)
    }

    /// Whether every lhs predicate holds for the record, given as
    /// (attribute, value) pairs. An lhs attribute absent from the record is
    /// a contract violation and errors.
    pub fn matches(&self, record: &[(&str, &str)]) -> Result<bool> {
        for pred in &self.lhs {
            let value = record
                .iter()
                .find(|(a, _)| *a == pred.attr())
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    Error::Model(format!("record lacks attribute {}", pred.attr()))
                })?;
            if !pred.matches(value) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} [support {:.4}, confidence {:.4}]",
            self.lhs_text(),
            self.rhs_text(),
            self.support,
            self.confidence
        )
    }
}

/// The canonical rule order. Support and confidence are quotients of row
/// counts; correctly rounded division keeps distinct quotients distinct for
/// any denominator a dataset can produce, so comparing the stored doubles
/// reproduces the exact rational order.
pub fn canonical_cmp(a: &Rule, b: &Rule) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| b.support.total_cmp(&a.support))
        .then_with(|| a.lhs.len().cmp(&b.lhs.len()))
        .then_with(|| a.lhs_text().cmp(&b.lhs_text()))
        .then_with(|| a.rhs_text().cmp(&b.rhs_text()))
}

/// Thresholds and the length cap for rule mining.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MineParams {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_lhs_len: usize,
}

impl Default for MineParams {
    fn default() -> MineParams {
        MineParams {
            min_support: 0.01,
            min_confidence: 0.5,
            max_lhs_len: 4,
        }
    }
}

impl MineParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("min_support", self.min_support),
            ("min_confidence", self.min_confidence),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.max_lhs_len < 1 {
            return Err(Error::Config("max_lhs_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// An ordered rule list plus the fallback used when no rule fires.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Rules in canonical order.
    pub rules: Vec<Rule>,
    /// Majority target value of the training data.
    pub default_class: String,
    /// Training frequency of the default class.
    pub default_prior: f64,
    /// Mining thresholds, `None` for sets extracted from a tree.
    pub params: Option<MineParams>,
}

impl RuleSet {
    /// Builds a set, sorting the rules into canonical order.
    pub fn new(
        rules: Vec<Rule>,
        default_class: impl Into<String>,
        default_prior: f64,
        params: Option<MineParams>,
    ) -> Result<RuleSet> {
        let default_class = default_class.into();
        check_token("value", &default_class)?;
        if !default_prior.is_finite() || !(0.0..=1.0).contains(&default_prior) {
            return Err(Error::Model(format!(
                "default prior {default_prior} outside [0, 1]"
            )));
        }
        let mut rules = rules;
        rules.sort_by(canonical_cmp);
        Ok(RuleSet {
            rules,
            default_class,
            default_prior,
            params,
        })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// First rule in canonical order whose lhs the record satisfies.
    pub fn first_match(&self, record: &[(&str, &str)]) -> Result<Option<&Rule>> {
        for rule in &self.rules {
            if rule.matches(record)? {
                return Ok(Some(rule));
            }
        }
        Ok(None)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_rules_csv(&self.rules, writer)
    }
}

/// Predicts by first-match: the firing rule's rhs value and confidence, or
/// the default class with its training prior when nothing fires.
pub fn predict_rules(rs: &RuleSet, record: &[(&str, &str)]) -> Result<(String, f64)> {
    match rs.first_match(record)? {
        Some(rule) => Ok((rule.rhs_value.clone(), rule.confidence)),
        None => Ok((rs.default_class.clone(), rs.default_prior)),
    }
}

/// Writes `lhs,rhs,support,confidence,origin` rows. Support and confidence
/// use the shortest round-tripping decimal form, so reading the file back
/// restores them bit for bit.
pub fn write_rules_csv<W: Write>(rules: &[Rule], writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["lhs", "rhs", "support", "confidence", "origin"])?;
    for rule in rules {
        csv.write_record([
            rule.lhs_text(),
            rule.rhs_text(),
            rule.support.to_string(),
            rule.confidence.to_string(),
            rule.origin.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads rules written by [`write_rules_csv`], in file order.
pub fn read_rules_csv<R: Read>(reader: R) -> Result<Vec<Rule>> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let headers = csv.headers()?.clone();
    let want = ["lhs", "rhs", "support", "confidence", "origin"];
    let cols: Vec<usize> = want
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::InvalidInput(format!("rules file lacks column {name}")))
        })
        .collect::<Result<_>>()?;
    let mut rules = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(cols[i]).unwrap_or("");
        let parse_num = |i: usize| {
            field(i).parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number {:?}", field(i)),
            })
        };
        let lhs = field(0)
            .split("; ")
            .filter(|s| !s.is_empty())
            .map(Pred::parse)
            .collect::<Result<Vec<_>>>()?;
        let rhs = Pred::parse(field(1))?;
        let Pred::Eq { attr, value } = rhs else {
            return Err(Error::Parse {
                line,
                msg: "rhs must be a single attribute=value pair".into(),
            });
        };
        rules.push(Rule::new(
            lhs,
            attr,
            value,
            parse_num(2)?,
            parse_num(3)?,
            RuleOrigin::parse(field(4))?,
        )?);
    }
    Ok(rules)
}
