//! Cluster profiles and positional class labels.
//!
//! A profile summarizes one cluster as attribute distributions: level
//! proportions for categorical attributes, mean plus per-band proportions
//! for continuous ones. Labels are positional ("Class-1", "Class-2", ...)
//! and assigned by ascending mean of an ordering attribute, age by default,
//! so the youngest cluster becomes Class-1 no matter how cluster ids came
//! out of the clustering run. Ties break by descending size, then cluster
//! id. Only profiles feed the ordering, which makes the labeling invariant
//! under cluster-id permutation.

use crate::cluster::Clustering;
use crate::data::{Dataset, AGE};
use crate::error::{Error, Result};
use crate::ingest::BandSpec;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Attribute distributions of one cluster. Attribute order follows the
/// schema; level and band proportions each sum to 1 over their attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    /// Mean per continuous attribute.
    pub means: Vec<(String, f64)>,
    /// Per continuous attribute: proportion of members in each band.
    pub bands: Vec<(String, Vec<(String, f64)>)>,
    /// Per categorical attribute: proportion of members at each level
    /// observed anywhere in the dataset (absent levels report 0).
    pub levels: Vec<(String, Vec<(String, f64)>)>,
}

/// Positional class name tied to the cluster it labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassLabel {
    pub name: String,
    pub cluster: usize,
}

/// Summarizes every non-empty cluster of `c` over the full schema. Empty
/// clusters get no profile; callers spot them by comparing the returned
/// length with `c.k`. Rows must be complete and continuous values must fall
/// inside the configured bands.
pub fn profile_clusters(
    ds: &Dataset,
    c: &Clustering,
    bands: &BandSpec,
) -> Result<Vec<ClusterProfile>> {
    if ds.rows.len() != c.ids.len()
        || !ds.rows.iter().zip(&c.ids).all(|(r, id)| r.id == *id)
    {
        return Err(Error::Mismatch(
            "clustering does not cover the dataset's rows".into(),
        ));
    }
    bands.check_covers(&ds.schema)?;

    let mut sizes = vec![0usize; c.k];
    // per cluster, per continuous attr: sum and per-band counts
    let cont_attrs: Vec<&str> = ds.schema.continuous().collect();
    let cat_attrs: Vec<&str> = ds.schema.categorical().collect();
    let mut sums = vec![vec![0.0f64; cont_attrs.len()]; c.k];
    let mut band_counts: Vec<Vec<Vec<u64>>> = (0..c.k)
        .map(|_| {
            cont_attrs
                .iter()
                .map(|a| vec![0u64; bands.get(a).expect("covered").n_bands()])
                .collect()
        })
        .collect();
    let level_index: Vec<BTreeMap<String, usize>> = cat_attrs
        .iter()
        .map(|a| {
            ds.levels(a)
                .into_iter()
                .enumerate()
                .map(|(i, l)| (l, i))
                .collect()
        })
        .collect();
    let mut level_counts: Vec<Vec<Vec<u64>>> = (0..c.k)
        .map(|_| level_index.iter().map(|ix| vec![0u64; ix.len()]).collect())
        .collect();

    for (row, &cluster) in ds.rows.iter().zip(&c.assignment) {
        sizes[cluster] += 1;
        for (j, attr) in cont_attrs.iter().enumerate() {
            let v = row.continuous(attr).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "row {} is missing {attr}; repair missing values before profiling",
                    row.id
                ))
            })?;
            let ab = bands.get(attr).expect("covered");
            let band = ab.band_index(v).ok_or(Error::OutOfBands {
                attr: attr.to_string(),
                value: v,
            })?;
            sums[cluster][j] += v;
            band_counts[cluster][j][band] += 1;
        }
        for (j, attr) in cat_attrs.iter().enumerate() {
            let v = row.categorical(attr).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "row {} is missing {attr}; repair missing values before profiling",
                    row.id
                ))
            })?;
            level_counts[cluster][j][level_index[j][v]] += 1;
        }
    }

    let mut profiles = Vec::new();
    for cluster in 0..c.k {
        let size = sizes[cluster];
        if size == 0 {
            continue;
        }
        let denom = size as f64;
        let means = cont_attrs
            .iter()
            .enumerate()
            .map(|(j, a)| (a.to_string(), sums[cluster][j] / denom))
            .collect();
        let band_props = cont_attrs
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let ab = bands.get(a).expect("covered");
                let props = ab
                    .labels
                    .iter()
                    .zip(&band_counts[cluster][j])
                    .map(|(l, &n)| (l.clone(), n as f64 / denom))
                    .collect();
                (a.to_string(), props)
            })
            .collect();
        let level_props = cat_attrs
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let props = level_index[j]
                    .keys()
                    .zip(&level_counts[cluster][j])
                    .map(|(l, &n)| (l.clone(), n as f64 / denom))
                    .collect();
                (a.to_string(), props)
            })
            .collect();
        profiles.push(ClusterProfile {
            cluster,
            size,
            means,
            bands: band_props,
            levels: level_props,
        });
    }
    Ok(profiles)
}

/// Labels clusters "Class-1", "Class-2", ... by ascending mean of
/// `key_attr`; ties break by descending size, then cluster id.
pub fn assign_labels_by(
    profiles: &[ClusterProfile],
    key_attr: &str,
) -> Result<BTreeMap<usize, ClassLabel>> {
    if profiles.is_empty() {
        return Err(Error::InvalidInput("no cluster profiles to label".into()));
    }
    let mut keyed = Vec::new();
    for p in profiles {
        let key = p
            .means
            .iter()
            .find(|(a, _)| a == key_attr)
            .map(|(_, m)| *m)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "ordering attribute {key_attr} has no mean in cluster {}",
                    p.cluster
                ))
            })?;
        keyed.push((key, p.size, p.cluster));
    }
    keyed.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("means are finite")
            .then(b.1.cmp(&a.1))
            .then(a.2.cmp(&b.2))
    });
    Ok(keyed
        .into_iter()
        .enumerate()
        .map(|(i, (_, _, cluster))| {
            (
                cluster,
                ClassLabel {
                    name: format!("Class-{}", i + 1),
                    cluster,
                },
            )
        })
        .collect())
}

/// Labels by ascending mean age, the default ordering key.
pub fn assign_labels(profiles: &[ClusterProfile]) -> Result<BTreeMap<usize, ClassLabel>> {
    assign_labels_by(profiles, AGE)
}

/// Class name per row of the clustering, aligned with `c.ids`.
pub fn row_classes(c: &Clustering, labels: &BTreeMap<usize, ClassLabel>) -> Result<Vec<String>> {
    c.assignment
        .iter()
        .map(|cluster| {
            labels
                .get(cluster)
                .map(|l| l.name.clone())
                .ok_or_else(|| Error::InvalidInput(format!("cluster {cluster} has no label")))
        })
        .collect()
}

/// Human-readable profile report, one block per cluster.
pub fn render_profiles(
    profiles: &[ClusterProfile],
    labels: Option<&BTreeMap<usize, ClassLabel>>,
) -> String {
    let mut out = String::new();
    for p in profiles {
        let class = labels
            .and_then(|m| m.get(&p.cluster))
            .map(|l| format!("  {}", l.name))
            .unwrap_or_default();
        let _ = writeln!(out, "cluster {}  size {}{class}", p.cluster, p.size);
        for (attr, mean) in &p.means {
            let bands = p
                .bands
                .iter()
                .find(|(a, _)| a == attr)
                .map(|(_, b)| b.as_slice())
                .unwrap_or(&[]);
            let spread = bands
                .iter()
                .map(|(l, v)| format!("{l} {:.1}%", v * 100.0))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "  {attr}: mean {mean:.2}; {spread}");
        }
        for (attr, levels) in &p.levels {
            let spread = levels
                .iter()
                .map(|(l, v)| format!("{l} {:.1}%", v * 100.0))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "  {attr}: {spread}");
        }
    }
    out
}

/// Long-format CSV: cluster,size,attribute,measure,key,value. Measures are
/// "mean" (key empty), "band", and "level".
pub fn write_profiles_csv<W: std::io::Write>(
    profiles: &[ClusterProfile],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster", "size", "attribute", "measure", "key", "value"])?;
    for p in profiles {
        let cluster = p.cluster.to_string();
        let size = p.size.to_string();
        for (attr, mean) in &p.means {
            w.write_record([&cluster, &size, attr, "mean", "", &format!("{mean:.6}")])?;
        }
        for (attr, bands) in &p.bands {
            for (label, v) in bands {
                w.write_record([&cluster, &size, attr, "band", label, &format!("{v:.6}")])?;
            }
        }
        for (attr, levels) in &p.levels {
            for (level, v) in levels {
                w.write_record([&cluster, &size, attr, "level", level, &format!("{v:.6}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
