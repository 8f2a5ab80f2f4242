//! CSV ingest, validation, repair, and discretization.
//!
//! Input files carry one row per candidate with a header naming the columns
//! `id, gender, grade, age` (or `birth_year`), `diploma, employment,
//! job_relevancy, field_group, field, cohort_year`. Rows that violate a
//! record invariant are rejected with a reason rather than aborting the
//! whole file; structural problems (missing columns, malformed CSV) abort.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::{
    CandidateRecord, CatTable, Dataset, Provenance, AttrKind, EMPLOYED, FEMALE, MALE, UNEMPLOYED,
    UNKNOWN,
};
use crate::error::{Error, Result};

pub mod binning;
pub mod preprocess;

pub use binning::{equal_frequency_cuts, AttrBands, BandSpec};
pub use preprocess::{preprocess, CategoricalPolicy, ContinuousPolicy, RepairPolicy};

/// Columns of the canonical candidate CSV, in writing order.
pub const CSV_COLUMNS: [&str; 10] = [
    "id",
    "gender",
    "grade",
    "age",
    "diploma",
    "employment",
    "job_relevancy",
    "field_group",
    "field",
    "cohort_year",
];

/// One rejected input row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
}

/// Result of parsing one file: the accepted rows, the rejected ones with
/// reasons, and any extra columns (for example a `class` column on a labeled
/// file), aligned with the accepted rows.
#[derive(Clone, Debug)]
pub struct ParseOutcome {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
    pub extras: BTreeMap<String, Vec<String>>,
}

fn canonical_gender(raw: &str) -> Option<String> {
    match raw.to_ascii_lowercase().as_str() {
        "f" | "female" => Some(FEMALE.to_string()),
        "m" | "male" => Some(MALE.to_string()),
        "unknown" => Some(UNKNOWN.to_string()),
        _ => None,
    }
}

fn canonical_employment(raw: &str) -> Option<String> {
    match raw.to_ascii_lowercase().as_str() {
        "employed" => Some(EMPLOYED.to_string()),
        "unemployed" => Some(UNEMPLOYED.to_string()),
        "unknown" => Some(UNKNOWN.to_string()),
        _ => None,
    }
}

/// Parses candidate CSV and validates every row.
///
/// `reference_year` is required when the file carries `birth_year` instead
/// of `age`; ages are then computed as `reference_year - birth_year`.
/// Unrecognized columns are kept in [`ParseOutcome::extras`] and noted in
/// the provenance log. Rows failing validation land in `rejections`.
pub fn parse_and_validate<R: Read>(
    reader: R,
    source: &str,
    reference_year: Option<i32>,
) -> Result<ParseOutcome> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let age_col = col("age");
    let birth_col = col("birth_year");
    match (age_col, birth_col) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "both age and birth_year columns present; keep exactly one".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "missing column: need either age or birth_year".into(),
            ))
        }
        (None, Some(_)) if reference_year.is_none() => {
            return Err(Error::InvalidInput(
                "birth_year column needs a reference year to compute ages".into(),
            ))
        }
        _ => {}
    }
    let mut required: Vec<(&str, usize)> = Vec::new();
    for name in [
        "id",
        "gender",
        "grade",
        "diploma",
        "employment",
        "job_relevancy",
        "field_group",
        "field",
        "cohort_year",
    ] {
        match col(name) {
            Some(idx) => required.push((name, idx)),
            None => return Err(Error::InvalidInput(format!("missing column: {name}"))),
        }
    }
    let idx_of = |name: &str| required.iter().find(|(n, _)| *n == name).unwrap().1;

    let mut known: Vec<usize> = required.iter().map(|(_, i)| *i).collect();
    known.extend(age_col.or(birth_col));
    let extra_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !known.contains(i))
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut provenance = Provenance::new(source);
    if !extra_cols.is_empty() {
        let names: Vec<&str> = extra_cols.iter().map(|(_, n)| n.as_str()).collect();
        provenance.note(format!("carrying extra columns: {}", names.join(", ")));
    }

    let mut rows = Vec::new();
    let mut rejections = Vec::new();
    let mut extras: BTreeMap<String, Vec<String>> =
        extra_cols.iter().map(|(_, n)| (n.clone(), Vec::new())).collect();

    for record in csv.records() {
        let record = record.map_err(|e| match e.position() {
            Some(pos) => Error::Parse {
                line: pos.line(),
                msg: e.to_string(),
            },
            None => Error::Csv(e),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |idx: usize| record.get(idx).unwrap_or("");
        let missing = |idx: usize| cell(idx).is_empty();

        let reject = |reason: String, rejections: &mut Vec<Rejection>| {
            rejections.push(Rejection { line, reason });
        };

        let id = cell(idx_of("id")).to_string();
        if id.is_empty() {
            reject("missing id".into(), &mut rejections);
            continue;
        }
        let cohort_year = match cell(idx_of("cohort_year")).parse::<i32>() {
            Ok(y) => y,
            Err(_) => {
                reject(
                    format!("bad cohort_year {:?}", cell(idx_of("cohort_year"))),
                    &mut rejections,
                );
                continue;
            }
        };

        let mut rec = CandidateRecord::new(id, cohort_year);

        let gender_raw = cell(idx_of("gender"));
        if !gender_raw.is_empty() {
            match canonical_gender(gender_raw) {
                Some(g) => rec.gender = Some(g),
                None => {
                    reject(format!("bad gender {gender_raw:?}"), &mut rejections);
                    continue;
                }
            }
        }

        let grade_raw = cell(idx_of("grade"));
        if !grade_raw.is_empty() {
            match grade_raw.parse::<f64>() {
                Ok(g) => rec.grade = Some(g),
                Err(_) => {
                    reject(format!("bad grade {grade_raw:?}"), &mut rejections);
                    continue;
                }
            }
        }

        if let Some(idx) = age_col {
            if !missing(idx) {
                match cell(idx).parse::<u32>() {
                    Ok(a) => rec.age = Some(a),
                    Err(_) => {
                        reject(format!("bad age {:?}", cell(idx)), &mut rejections);
                        continue;
                    }
                }
            }
        } else if let Some(idx) = birth_col {
            if !missing(idx) {
                match cell(idx).parse::<i32>() {
                    Ok(by) => {
                        let age = i64::from(reference_year.unwrap()) - i64::from(by);
                        if age < 0 {
                            reject(format!("birth_year {by} is in the future"), &mut rejections);
                            continue;
                        }
                        rec.age = Some(age as u32);
                    }
                    Err(_) => {
                        reject(format!("bad birth_year {:?}", cell(idx)), &mut rejections);
                        continue;
                    }
                }
            }
        }

        let employment_raw = cell(idx_of("employment"));
        if !employment_raw.is_empty() {
            match canonical_employment(employment_raw) {
                Some(e) => rec.employment = Some(e),
                None => {
                    reject(format!("bad employment {employment_raw:?}"), &mut rejections);
                    continue;
                }
            }
        }

        let relevancy_raw = cell(idx_of("job_relevancy"));
        if !relevancy_raw.is_empty() {
            match relevancy_raw {
                "0" | "1" | "2" | UNKNOWN => rec.job_relevancy = Some(relevancy_raw.to_string()),
                _ => {
                    reject(format!("bad job_relevancy {relevancy_raw:?}"), &mut rejections);
                    continue;
                }
            }
        }

        for (attr, idx) in [
            ("diploma", idx_of("diploma")),
            ("field_group", idx_of("field_group")),
            ("field", idx_of("field")),
        ] {
            if !missing(idx) {
                rec.set_categorical(attr, cell(idx).to_string());
            }
        }

        if let Err(reason) = rec.check_invariants() {
            reject(reason, &mut rejections);
            continue;
        }

        for (idx, name) in &extra_cols {
            extras.get_mut(name).unwrap().push(cell(*idx).to_string());
        }
        rows.push(rec);
    }

    provenance.note(format!(
        "parsed {} rows, rejected {}",
        rows.len(),
        rejections.len()
    ));

    Ok(ParseOutcome {
        dataset: Dataset::new(rows, provenance),
        rejections,
        extras,
    })
}

/// Convenience wrapper over [`parse_and_validate`] for a file path.
pub fn parse_file(path: &Path, reference_year: Option<i32>) -> Result<ParseOutcome> {
    let file = File::open(path)?;
    parse_and_validate(file, &path.display().to_string(), reference_year)
}

/// Writes a dataset in the canonical column order, with an optional derived
/// column (typically the class label) appended. Missing values serialize as
/// empty cells, so write-then-parse round-trips.
pub fn write_dataset<W: Write>(
    ds: &Dataset,
    writer: W,
    extra: Option<(&str, &[String])>,
) -> Result<()> {
    if let Some((_, values)) = extra {
        if values.len() != ds.len() {
            return Err(Error::InvalidInput(format!(
                "extra column has {} values for {} rows",
                values.len(),
                ds.len()
            )));
        }
    }
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if let Some((name, _)) = extra {
        header.push(name);
    }
    csv.write_record(&header)?;
    for (i, rec) in ds.rows.iter().enumerate() {
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let mut row = vec![
            rec.id.clone(),
            opt(&rec.gender),
            rec.grade.map(|g| g.to_string()).unwrap_or_default(),
            rec.age.map(|a| a.to_string()).unwrap_or_default(),
            opt(&rec.diploma),
            opt(&rec.employment),
            opt(&rec.job_relevancy),
            opt(&rec.field_group),
            opt(&rec.field),
            rec.cohort_year.to_string(),
        ];
        if let Some((_, values)) = extra {
            row.push(values[i].clone());
        }
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

/// [`write_dataset`] to a file path.
pub fn write_dataset_file(ds: &Dataset, path: &Path, extra: Option<(&str, &[String])>) -> Result<()> {
    let file = File::create(path)?;
    write_dataset(ds, file, extra)
}

/// Replaces each continuous value with its band label, yielding the fully
/// categorical view used by rule mining and tree induction.
///
/// Rows must be complete (run repair first) and every continuous value must
/// fall inside its configured bands.
pub fn discretize(ds: &Dataset, bands: &BandSpec) -> Result<CatTable> {
    bands.check_covers(&ds.schema)?;
    let attrs: Vec<String> = ds.schema.names().map(str::to_string).collect();
    let mut rows = Vec::with_capacity(ds.len());
    for rec in &ds.rows {
        let mut row = Vec::with_capacity(attrs.len());
        for def in &ds.schema.attrs {
            let attr = def.name.as_str();
            match def.kind {
                AttrKind::Continuous => {
                    let v = rec.continuous(attr).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "row {} is missing {attr}; repair missing values first",
                            rec.id
                        ))
                    })?;
                    let spec = bands.get(attr).expect("coverage checked");
                    let label = spec.label_of(v).ok_or(Error::OutOfBands {
                        attr: attr.to_string(),
                        value: v,
                    })?;
                    row.push(label.to_string());
                }
                AttrKind::Categorical => {
                    let v = rec.categorical(attr).ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "row {} is missing {attr}; repair missing values first",
                            rec.id
                        ))
                    })?;
                    row.push(v.to_string());
                }
            }
        }
        rows.push(row);
    }
    Ok(CatTable {
        attrs,
        ids: ds.ids(),
        rows,
    })
}
