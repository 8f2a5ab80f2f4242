//! Missing-value repair.
//!
//! Employment and job relevancy are coupled (unemployed pairs with relevancy
//! 0, employed with 1 or 2), so one side of the pair is recovered from the
//! other before any generic policy runs, and relevancy is never imputed
//! unconditionally. All statistics (medians, modes) are computed on the
//! input dataset once, so the result does not depend on processing order and
//! a second pass is the identity.

use std::collections::BTreeMap;

use crate::data::{
    AttrKind, CandidateRecord, Dataset, EMPLOYED, EMPLOYMENT, JOB_RELEVANCY, UNEMPLOYED, UNKNOWN,
};
use crate::error::{Error, Result};

/// Repair policy for missing continuous values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuousPolicy {
    /// Replace with the median of observed values.
    Median,
    /// Drop the row.
    Drop,
}

/// Repair policy for missing categorical values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalPolicy {
    /// Replace with the most frequent observed value (ties break to the
    /// lexically smallest).
    Mode,
    /// Replace with the reserved `unknown` category.
    Unknown,
    /// Drop the row.
    Drop,
}

/// Combined repair policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RepairPolicy {
    pub continuous: ContinuousPolicy,
    pub categorical: CategoricalPolicy,
}

impl Default for RepairPolicy {
    fn default() -> RepairPolicy {
        RepairPolicy {
            continuous: ContinuousPolicy::Median,
            categorical: CategoricalPolicy::Mode,
        }
    }
}

/// Median of observed values, averaging the middle pair for even counts.
fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Most frequent value; ties break to the lexically smallest.
fn mode<'a>(values: impl Iterator<Item = &'a str>) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
        .map(|(v, _)| v.to_string())
}

/// Fills or drops missing values according to `policy` and returns a dataset
/// whose remaining rows are complete and satisfy the record invariants.
pub fn preprocess(ds: &Dataset, policy: RepairPolicy) -> Result<Dataset> {
    let schema = &ds.schema;

    // Statistics from the input, computed once.
    let mut medians: BTreeMap<String, Option<f64>> = BTreeMap::new();
    for attr in schema.continuous() {
        let mut observed: Vec<f64> = ds.rows.iter().filter_map(|r| r.continuous(attr)).collect();
        medians.insert(attr.to_string(), median(&mut observed));
    }
    let mut modes: BTreeMap<String, Option<String>> = BTreeMap::new();
    for attr in schema.categorical() {
        modes.insert(
            attr.to_string(),
            mode(ds.rows.iter().filter_map(|r| r.categorical(attr))),
        );
    }
    // Relevancy for employed rows is recovered from employed rows only, so
    // the coupling constraint cannot be violated by a fill.
    let employed_relevancy_mode = mode(
        ds.rows
            .iter()
            .filter(|r| r.categorical(EMPLOYMENT) == Some(EMPLOYED))
            .filter_map(|r| r.categorical(JOB_RELEVANCY))
            .filter(|v| *v == "1" || *v == "2"),
    );

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut dropped = 0usize;
    let mut coupled = 0usize;
    let mut rows: Vec<CandidateRecord> = Vec::with_capacity(ds.rows.len());

    'rows: for rec in &ds.rows {
        let mut rec = rec.clone();

        // Coupled pair first: recover whichever side the other determines.
        let emp = rec.employment.clone();
        let rel = rec.job_relevancy.clone();
        match (emp.as_deref(), rel.as_deref()) {
            (None, Some("0")) => {
                rec.employment = Some(UNEMPLOYED.into());
                coupled += 1;
            }
            (None, Some("1")) | (None, Some("2")) => {
                rec.employment = Some(EMPLOYED.into());
                coupled += 1;
            }
            (Some(UNEMPLOYED), None) => {
                rec.job_relevancy = Some("0".into());
                coupled += 1;
            }
            _ => {}
        }
        // Employment still missing means relevancy is missing or unknown
        // too; fall back to the generic categorical policy for employment.
        if rec.employment.is_none() {
            match policy.categorical {
                CategoricalPolicy::Mode => {
                    let fill = modes
                        .get(EMPLOYMENT)
                        .and_then(Clone::clone)
                        .ok_or_else(|| Error::Unrecoverable {
                            attr: EMPLOYMENT.into(),
                            reason: "no observed values to take a mode from".into(),
                        })?;
                    rec.employment = Some(fill);
                    *counts.entry(EMPLOYMENT.into()).or_insert(0) += 1;
                }
                CategoricalPolicy::Unknown => {
                    rec.employment = Some(UNKNOWN.into());
                    *counts.entry(EMPLOYMENT.into()).or_insert(0) += 1;
                }
                CategoricalPolicy::Drop => {
                    dropped += 1;
                    continue 'rows;
                }
            }
        }
        // Any relevancy still missing is derived from employment, never from
        // an unconditional mode.
        if rec.job_relevancy.is_none() {
            let fill = match rec.employment.as_deref() {
                Some(UNEMPLOYED) => "0".to_string(),
                Some(EMPLOYED) => employed_relevancy_mode.clone().unwrap_or(UNKNOWN.into()),
                _ => UNKNOWN.into(),
            };
            rec.job_relevancy = Some(fill);
            *counts.entry(JOB_RELEVANCY.into()).or_insert(0) += 1;
        }

        for def in &schema.attrs {
            let attr = def.name.as_str();
            match def.kind {
                AttrKind::Continuous => {
                    if rec.continuous(attr).is_none() {
                        match policy.continuous {
                            ContinuousPolicy::Median => {
                                let fill = medians
                                    .get(attr)
                                    .copied()
                                    .flatten()
                                    .ok_or_else(|| Error::Unrecoverable {
                                        attr: attr.into(),
                                        reason: "no observed values to take a median from".into(),
                                    })?;
                                rec.set_continuous(attr, fill);
                                *counts.entry(attr.into()).or_insert(0) += 1;
                            }
                            ContinuousPolicy::Drop => {
                                dropped += 1;
                                continue 'rows;
                            }
                        }
                    }
                }
                AttrKind::Categorical => {
                    if rec.categorical(attr).is_none() {
                        match policy.categorical {
                            CategoricalPolicy::Mode => {
                                let fill = modes
                                    .get(attr)
                                    .and_then(Clone::clone)
                                    .ok_or_else(|| Error::Unrecoverable {
                                        attr: attr.into(),
                                        reason: "no observed values to take a mode from".into(),
                                    })?;
                                rec.set_categorical(attr, fill);
                                *counts.entry(attr.into()).or_insert(0) += 1;
                            }
                            CategoricalPolicy::Unknown => {
                                rec.set_categorical(attr, UNKNOWN.into());
                                *counts.entry(attr.into()).or_insert(0) += 1;
                            }
                            CategoricalPolicy::Drop => {
                                dropped += 1;
                                continue 'rows;
                            }
                        }
                    }
                }
            }
        }

        if let Err(msg) = rec.check_invariants() {
            return Err(Error::InvalidInput(format!(
                "repair produced an inconsistent record {}: {msg}",
                rec.id
            )));
        }
        rows.push(rec);
    }

    let mut provenance = ds.provenance.clone();
    provenance.note(format!(
        "repair policy: continuous={:?} categorical={:?}",
        policy.continuous, policy.categorical
    ));
    if coupled > 0 {
        provenance.note(format!(
            "recovered {coupled} employment/job_relevancy values from the coupled attribute"
        ));
    }
    for (attr, n) in &counts {
        provenance.note(format!("filled {n} missing values for {attr}"));
    }
    if dropped > 0 {
        provenance.note(format!("dropped {dropped} incomplete rows"));
    }

    Ok(Dataset {
        schema: schema.clone(),
        rows,
        provenance,
    })
}
