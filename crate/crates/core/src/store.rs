//! CSV interchange for feature vectors and per-class mean curves.
//!
//! Feature rows are `source_id,label,beta_1,...,beta_63`, every value written
//! with 17 significant digits so a read-back reproduces the `f64` exactly.
//! Lines starting with `#` are provenance comments and are skipped on read.

use std::io::{Read, Write};

use thiserror::Error;

use crate::features::{average_betas, BetaVector, FeatureError, AC_COUNT};
use crate::label::Label;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("no rows labelled {0}")]
    MissingClass(Label),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRecord {
    pub vector: BetaVector,
    pub label: Option<Label>,
}

/// `{:.16e}`: one leading digit plus 16 decimals.
pub fn format_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_comment<W: Write>(w: &mut W, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

pub fn feature_header() -> Vec<String> {
    let mut h = vec!["source_id".to_string(), "label".to_string()];
    h.extend((1..=AC_COUNT).map(|i| format!("beta_{i}")));
    h
}

pub fn write_features<W: Write>(
    mut w: W,
    records: &[FeatureRecord],
    comment: Option<&str>,
) -> Result<(), StoreError> {
    write_comment(&mut w, comment)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(feature_header())?;
    for r in records {
        let mut row = Vec::with_capacity(AC_COUNT + 2);
        row.push(r.vector.source_id.clone());
        row.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        row.extend(r.vector.values().iter().map(|&v| format_sig17(v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(r: R) -> Result<Vec<FeatureRecord>, StoreError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(r);
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let malformed = |reason: String| StoreError::Malformed { row: i + 1, reason };
        if row.len() != AC_COUNT + 2 {
            return Err(malformed(format!("{} columns, expected 65", row.len())));
        }
        let label = match &row[1] {
            "" => None,
            s => Some(s.parse::<Label>().map_err(|e| malformed(e.to_string()))?),
        };
        let values = row
            .iter()
            .skip(2)
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(e.to_string()))?;
        records.push(FeatureRecord {
            vector: BetaVector::new(&row[0], values)?,
            label,
        });
    }
    Ok(records)
}

/// Per-position class means, `(mean over Deepfake-2, mean over Deepfake-3)`.
pub fn class_mean_curves(records: &[FeatureRecord]) -> Result<Vec<(f64, f64)>, StoreError> {
    let of = |label: Label| -> Result<Vec<f64>, StoreError> {
        average_betas(
            records
                .iter()
                .filter(|r| r.label == Some(label))
                .map(|r| &r.vector),
        )
        .map_err(|e| match e {
            FeatureError::EmptySet => StoreError::MissingClass(label),
            other => other.into(),
        })
    };
    let two = of(Label::Deepfake2)?;
    let three = of(Label::Deepfake3)?;
    Ok(two.into_iter().zip(three).collect())
}

/// Writes `ac_index,mean_beta_class2,mean_beta_class3`, one row per AC index.
pub fn write_mean_curves<W: Write>(
    mut w: W,
    curves: &[(f64, f64)],
    comment: Option<&str>,
) -> Result<(), StoreError> {
    write_comment(&mut w, comment)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["ac_index", "mean_beta_class2", "mean_beta_class3"])?;
    for (i, (a, b)) in curves.iter().enumerate() {
        out.write_record([(i + 1).to_string(), format_sig17(*a), format_sig17(*b)])?;
    }
    out.flush()?;
    Ok(())
}
