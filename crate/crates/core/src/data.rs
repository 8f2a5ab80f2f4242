//! Core record and table types shared by every stage.
//!
//! A [`CandidateRecord`] is one applicant: two continuous attributes (grade,
//! age) and six categorical ones, plus an opaque id and a cohort year used
//! only for splitting. Attribute access is by name so clustering and mining
//! code can stay generic over feature subsets.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Reserved category emitted by missing-value repair under the `unknown`
/// policy. Validation treats it as an explicit "not recorded" level.
pub const UNKNOWN: &str = "unknown";

/// Names of the analysis attributes, in canonical order.
pub const GENDER: &str = "gender";
pub const GRADE: &str = "grade";
pub const AGE: &str = "age";
pub const DIPLOMA: &str = "diploma";
pub const EMPLOYMENT: &str = "employment";
pub const JOB_RELEVANCY: &str = "job_relevancy";
pub const FIELD_GROUP: &str = "field_group";
pub const FIELD: &str = "field";

/// Name of the class column appended by cluster labeling.
pub const CLASS: &str = "class";

/// Canonical category values for the closed-domain attributes.
pub const FEMALE: &str = "Female";
pub const MALE: &str = "Male";
pub const EMPLOYED: &str = "Employed";
pub const UNEMPLOYED: &str = "Unemployed";

/// Lowest admissible age. Grades live on a fixed 0..=20 scale.
pub const MIN_AGE: u32 = 17;
pub const GRADE_MIN: f64 = 0.0;
pub const GRADE_MAX: f64 = 20.0;

/// Whether an attribute is numeric or categorical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttrKind {
    Continuous,
    Categorical,
}

/// One attribute of the schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrDef {
    pub name: String,
    pub kind: AttrKind,
}

/// Ordered attribute list. The candidate schema is fixed; the order here is
/// the tie-break order used wherever "first attribute wins" applies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub attrs: Vec<AttrDef>,
}

impl Schema {
    /// The eight-attribute candidate schema.
    pub fn candidate() -> Schema {
        let def = |name: &str, kind| AttrDef {
            name: name.to_string(),
            kind,
        };
        Schema {
            attrs: vec![
                def(GENDER, AttrKind::Categorical),
                def(GRADE, AttrKind::Continuous),
                def(AGE, AttrKind::Continuous),
                def(DIPLOMA, AttrKind::Categorical),
                def(EMPLOYMENT, AttrKind::Categorical),
                def(JOB_RELEVANCY, AttrKind::Categorical),
                def(FIELD_GROUP, AttrKind::Categorical),
                def(FIELD, AttrKind::Categorical),
            ],
        }
    }

    pub fn kind_of(&self, name: &str) -> Option<AttrKind> {
        self.attrs.iter().find(|a| a.name == name).map(|a| a.kind)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.attrs.iter().map(|a| a.name.as_str())
    }

    pub fn continuous(&self) -> impl Iterator<Item = &str> {
        self.attrs
            .iter()
            .filter(|a| a.kind == AttrKind::Continuous)
            .map(|a| a.name.as_str())
    }

    pub fn categorical(&self) -> impl Iterator<Item = &str> {
        self.attrs
            .iter()
            .filter(|a| a.kind == AttrKind::Categorical)
            .map(|a| a.name.as_str())
    }
}

/// One applicant. `None` marks a missing value; repair policies fill or drop
/// them before clustering and mining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    pub gender: Option<String>,
    pub grade: Option<f64>,
    pub age: Option<u32>,
    pub diploma: Option<String>,
    pub employment: Option<String>,
    pub job_relevancy: Option<String>,
    pub field_group: Option<String>,
    pub field: Option<String>,
    pub cohort_year: i32,
}

impl CandidateRecord {
    /// Empty record with only identity fields set.
    pub fn new(id: impl Into<String>, cohort_year: i32) -> CandidateRecord {
        CandidateRecord {
            id: id.into(),
            gender: None,
            grade: None,
            age: None,
            diploma: None,
            employment: None,
            job_relevancy: None,
            field_group: None,
            field: None,
            cohort_year,
        }
    }

    /// Continuous attribute by name. `None` when missing or not continuous.
    pub fn continuous(&self, attr: &str) -> Option<f64> {
        match attr {
            GRADE => self.grade,
            AGE => self.age.map(f64::from),
            _ => None,
        }
    }

    /// Categorical attribute by name. `None` when missing or not categorical.
    pub fn categorical(&self, attr: &str) -> Option<&str> {
        match attr {
            GENDER => self.gender.as_deref(),
            DIPLOMA => self.diploma.as_deref(),
            EMPLOYMENT => self.employment.as_deref(),
            JOB_RELEVANCY => self.job_relevancy.as_deref(),
            FIELD_GROUP => self.field_group.as_deref(),
            FIELD => self.field.as_deref(),
            _ => None,
        }
    }

    pub fn set_categorical(&mut self, attr: &str, value: String) {
        let slot = match attr {
            GENDER => &mut self.gender,
            DIPLOMA => &mut self.diploma,
            EMPLOYMENT => &mut self.employment,
            JOB_RELEVANCY => &mut self.job_relevancy,
            FIELD_GROUP => &mut self.field_group,
            FIELD => &mut self.field,
            _ => return,
        };
        *slot = Some(value);
    }

    pub fn set_continuous(&mut self, attr: &str, value: f64) {
        match attr {
            GRADE => self.grade = Some(value),
            AGE => self.age = Some(value.round() as u32),
            _ => {}
        }
    }

    /// Attributes still missing, in schema order.
    pub fn missing_attrs(&self, schema: &Schema) -> Vec<String> {
        schema
            .attrs
            .iter()
            .filter(|a| match a.kind {
                AttrKind::Continuous => self.continuous(&a.name).is_none(),
                AttrKind::Categorical => self.categorical(&a.name).is_none(),
            })
            .map(|a| a.name.clone())
            .collect()
    }

    pub fn is_complete(&self, schema: &Schema) -> bool {
        self.missing_attrs(schema).is_empty()
    }

    /// Checks the record-level constraints on whatever values are present.
    ///
    /// Grade stays on the 0..=20 scale, age is at least 17, and employment
    /// status agrees with job relevancy: unemployed pairs with relevancy 0,
    /// employed with 1 or 2. The `unknown` category passes every check.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if let Some(g) = self.grade {
            if !g.is_finite() || !(GRADE_MIN..=GRADE_MAX).contains(&g) {
                return Err(format!("grade {g} outside {GRADE_MIN}..={GRADE_MAX}"));
            }
        }
        if let Some(a) = self.age {
            if a < MIN_AGE {
                return Err(format!("age {a} below minimum {MIN_AGE}"));
            }
        }
        match (self.employment.as_deref(), self.job_relevancy.as_deref()) {
            (Some(e), Some(r)) if e != UNKNOWN && r != UNKNOWN => {
                let consistent = match e {
                    UNEMPLOYED => r == "0",
                    EMPLOYED => r == "1" || r == "2",
                    _ => true,
                };
                if !consistent {
                    return Err(format!(
                        "employment {e} inconsistent with job_relevancy {r}"
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Where a dataset came from and what was done to it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub source: String,
    pub log: Vec<String>,
}

impl Provenance {
    pub fn new(source: impl Into<String>) -> Provenance {
        Provenance {
            source: source.into(),
            log: Vec::new(),
        }
    }

    pub fn note(&mut self, entry: impl Into<String>) {
        self.log.push(entry.into());
    }
}

/// A set of candidate records plus schema and provenance. Row order is
/// meaningful and preserved by every transformation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<CandidateRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(rows: Vec<CandidateRecord>, provenance: Provenance) -> Dataset {
        Dataset {
            schema: Schema::candidate(),
            rows,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.id.clone()).collect()
    }

    /// Rows belonging to one cohort year, order preserved.
    pub fn filter_cohort(&self, year: i32) -> Dataset {
        let rows: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.cohort_year == year)
            .cloned()
            .collect();
        let mut provenance = self.provenance.clone();
        provenance.note(format!("filtered to cohort_year={year}: {} rows", rows.len()));
        Dataset {
            schema: self.schema.clone(),
            rows,
            provenance,
        }
    }

    /// Distinct values of a categorical attribute over present entries,
    /// sorted for deterministic level ordering.
    pub fn levels(&self, attr: &str) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .rows
            .iter()
            .filter_map(|r| r.categorical(attr))
            .collect();
        set.into_iter().map(str::to_string).collect()
    }
}

/// Fully categorical view of a dataset: every continuous attribute replaced
/// by its band label, optionally extended with derived columns such as the
/// class label. This is the input shape for rule mining and tree induction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatTable {
    pub attrs: Vec<String>,
    pub ids: Vec<String>,
    /// `rows[i][j]` is the value of `attrs[j]` for row `i`.
    pub rows: Vec<Vec<String>>,
}

impl CatTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a == name)
    }

    pub fn value(&self, row: usize, attr_idx: usize) -> &str {
        &self.rows[row][attr_idx]
    }

    /// Appends a derived column. Panics if the length does not match; this is
    /// an internal construction step, not an input path.
    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<String>) {
        assert_eq!(values.len(), self.rows.len(), "column length mismatch");
        self.attrs.push(name.into());
        for (row, value) in self.rows.iter_mut().zip(values) {
            row.push(value);
        }
    }

    /// Distinct values of one column, sorted.
    pub fn levels(&self, attr_idx: usize) -> Vec<String> {
        let set: BTreeSet<&str> = self.rows.iter().map(|r| r[attr_idx].as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Row as (attribute, value) pairs for rule matching.
    pub fn row_pairs(&self, row: usize) -> impl Iterator<Item = (&str, &str)> {
        self.attrs
            .iter()
            .map(String::as_str)
            .zip(self.rows[row].iter().map(String::as_str))
    }
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrKind::Continuous => write!(f, "continuous"),
            AttrKind::Categorical => write!(f, "categorical"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_record() -> CandidateRecord {
        CandidateRecord {
            id: "r1".into(),
            gender: Some(FEMALE.into()),
            grade: Some(16.2),
            age: Some(19),
            diploma: Some("Mathematics".into()),
            employment: Some(UNEMPLOYED.into()),
            job_relevancy: Some("0".into()),
            field_group: Some("Computer".into()),
            field: Some("Software".into()),
            cohort_year: 2004,
        }
    }

    #[test]
    fn candidate_schema_shape() {
        let schema = Schema::candidate();
        assert_eq!(schema.attrs.len(), 8);
        assert_eq!(schema.continuous().collect::<Vec<_>>(), vec![GRADE, AGE]);
        assert_eq!(schema.kind_of(GENDER), Some(AttrKind::Categorical));
        assert_eq!(schema.kind_of("nope"), None);
    }

    #[test]
    fn record_attribute_access() {
        let rec = complete_record();
        assert_eq!(rec.continuous(GRADE), Some(16.2));
        assert_eq!(rec.continuous(AGE), Some(19.0));
        assert_eq!(rec.categorical(FIELD), Some("Software"));
        assert_eq!(rec.continuous(GENDER), None);
        assert_eq!(rec.categorical(GRADE), None);
        assert!(rec.is_complete(&Schema::candidate()));
    }

    #[test]
    fn missing_attrs_in_schema_order() {
        let mut rec = complete_record();
        rec.grade = None;
        rec.field = None;
        assert_eq!(rec.missing_attrs(&Schema::candidate()), vec![GRADE, FIELD]);
    }

    #[test]
    fn invariants_accept_complete_consistent_record() {
        assert_eq!(complete_record().check_invariants(), Ok(()));
    }

    #[test]
    fn invariants_reject_out_of_range_values() {
        let mut rec = complete_record();
        rec.grade = Some(20.5);
        assert!(rec.check_invariants().is_err());
        rec.grade = Some(20.0);
        assert_eq!(rec.check_invariants(), Ok(()));
        rec.age = Some(16);
        assert!(rec.check_invariants().is_err());
    }

    #[test]
    fn employment_relevancy_coupling() {
        let mut rec = complete_record();
        rec.job_relevancy = Some("2".into());
        assert!(rec.check_invariants().is_err(), "unemployed with relevancy 2");
        rec.employment = Some(EMPLOYED.into());
        assert_eq!(rec.check_invariants(), Ok(()));
        rec.job_relevancy = Some("0".into());
        assert!(rec.check_invariants().is_err(), "employed with relevancy 0");
        rec.employment = Some(UNKNOWN.into());
        assert_eq!(rec.check_invariants(), Ok(()), "unknown passes");
    }

    #[test]
    fn cohort_filter_keeps_order() {
        let mut a = complete_record();
        a.id = "a".into();
        let mut b = complete_record();
        b.id = "b".into();
        b.cohort_year = 2005;
        let mut c = complete_record();
        c.id = "c".into();
        let ds = Dataset::new(vec![a, b, c], Provenance::new("test"));
        let train = ds.filter_cohort(2004);
        assert_eq!(train.ids(), vec!["a", "c"]);
        assert_eq!(ds.filter_cohort(2005).ids(), vec!["b"]);
        assert!(ds.filter_cohort(1999).is_empty());
    }

    #[test]
    fn cat_table_columns() {
        let mut table = CatTable {
            attrs: vec!["gender".into()],
            ids: vec!["a".into(), "b".into()],
            rows: vec![vec!["Female".into()], vec!["Male".into()]],
        };
        table.push_column("class", vec!["Class-1".into(), "Class-2".into()]);
        assert_eq!(table.attr_index("class"), Some(1));
        assert_eq!(table.value(1, 1), "Class-2");
        assert_eq!(table.levels(0), vec!["Female", "Male"]);
        let pairs: Vec<_> = table.row_pairs(0).collect();
        assert_eq!(pairs, vec![("gender", "Female"), ("class", "Class-1")]);
    }
}
