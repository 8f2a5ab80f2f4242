//! Band definitions for turning continuous attributes into ordered labels.

use std::collections::BTreeMap;

use crate::data::{Dataset, Schema, AGE, GRADE, GRADE_MAX, GRADE_MIN, MIN_AGE};
use crate::error::{Error, Result};

/// Bands for one continuous attribute.
///
/// Cuts split `[lo, hi]` into left-closed intervals; the last band also
/// includes `hi`. With cuts `c1 < c2` the bands are `[lo,c1)`, `[c1,c2)`,
/// `[c2,hi]`, labeled `lo-c1`, `c1-c2`, `c2-hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttrBands {
    pub attr: String,
    pub lo: f64,
    pub hi: f64,
    pub cuts: Vec<f64>,
    pub labels: Vec<String>,
}

impl AttrBands {
    pub fn new(attr: impl Into<String>, lo: f64, hi: f64, cuts: Vec<f64>) -> Result<AttrBands> {
        let attr = attr.into();
        let invalid = |msg: String| Error::InvalidBanding {
            attr: attr.clone(),
            msg,
        };
        if !lo.is_finite() || !hi.is_finite() || cuts.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite bound or cut".into()));
        }
        if lo > hi {
            return Err(invalid(format!("range {lo}..{hi} is empty")));
        }
        if lo == hi && !cuts.is_empty() {
            return Err(invalid("cuts inside a single-point range".into()));
        }
        for pair in cuts.windows(2) {
            if pair[0] >= pair[1] {
                return Err(invalid(format!(
                    "cuts must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if let (Some(first), Some(last)) = (cuts.first(), cuts.last()) {
            if *first <= lo || *last >= hi {
                return Err(invalid("cuts must lie strictly inside the range".into()));
            }
        }
        let mut edges = vec![lo];
        edges.extend_from_slice(&cuts);
        edges.push(hi);
        let labels = edges
            .windows(2)
            .map(|e| format!("{}-{}", e[0], e[1]))
            .collect();
        Ok(AttrBands {
            attr,
            lo,
            hi,
            cuts,
            labels,
        })
    }

    pub fn n_bands(&self) -> usize {
        self.labels.len()
    }

    /// Band index for a value, or `None` when it falls outside the range.
    pub fn band_index(&self, v: f64) -> Option<usize> {
        if !v.is_finite() || v < self.lo || v > self.hi {
            return None;
        }
        Some(self.cuts.partition_point(|c| *c <= v))
    }

    pub fn label_of(&self, v: f64) -> Option<&str> {
        self.band_index(v).map(|i| self.labels[i].as_str())
    }
}

/// Bands for every continuous attribute of a schema.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BandSpec {
    map: BTreeMap<String, AttrBands>,
}

impl BandSpec {
    pub fn new() -> BandSpec {
        BandSpec::default()
    }

    pub fn insert(&mut self, bands: AttrBands) {
        self.map.insert(bands.attr.clone(), bands);
    }

    pub fn get(&self, attr: &str) -> Option<&AttrBands> {
        self.map.get(attr)
    }

    pub fn iter(&self) -> impl Iterator<Item = &AttrBands> {
        self.map.values()
    }

    /// Errors unless every continuous attribute of the schema has bands.
    pub fn check_covers(&self, schema: &Schema) -> Result<()> {
        for attr in schema.continuous() {
            if !self.map.contains_key(attr) {
                return Err(Error::InvalidBanding {
                    attr: attr.to_string(),
                    msg: "no bands configured".into(),
                });
            }
        }
        Ok(())
    }

    /// Default bands fitted on a training cohort: fixed age bands at 25 and
    /// 31 over 17..=59, and equal-frequency quartile cuts for grade over the
    /// fixed 0..=20 scale.
    pub fn default_for(train: &Dataset) -> Result<BandSpec> {
        let grades: Vec<f64> = train.rows.iter().filter_map(|r| r.grade).collect();
        if grades.is_empty() {
            return Err(Error::InvalidBanding {
                attr: GRADE.into(),
                msg: "no observed grades to fit quartile cuts".into(),
            });
        }
        let cuts = equal_frequency_cuts(&grades, 4)
            .into_iter()
            .filter(|c| *c > GRADE_MIN && *c < GRADE_MAX)
            .collect();
        let mut spec = BandSpec::new();
        spec.insert(AttrBands::new(GRADE, GRADE_MIN, GRADE_MAX, cuts)?);
        spec.insert(AttrBands::new(AGE, f64::from(MIN_AGE), 59.0, vec![25.0, 31.0])?);
        Ok(spec)
    }
}

/// Cut points that split `values` into up to `n_bins` groups of roughly equal
/// count. Cuts sit on observed values (lower quantile convention); duplicates
/// collapse, so fewer than `n_bins - 1` cuts come back when the data is
/// concentrated.
pub fn equal_frequency_cuts(values: &[f64], n_bins: usize) -> Vec<f64> {
    if values.is_empty() || n_bins < 2 {
        return Vec::new();
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    let mut cuts = Vec::new();
    for q in 1..n_bins {
        let idx = (q * n) / n_bins;
        let cut = sorted[idx.min(n - 1)];
        if cuts.last() != Some(&cut) && cut > sorted[0] {
            cuts.push(cut);
        }
    }
    cuts
}
