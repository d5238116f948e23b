//! Enrichment factors and per-target screening reports.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{Activity, EmbeddingMode, LibraryDataset};
use crate::distance::{best_pool_detailed, rank_by, Direction, DistanceError, DistanceKind};
use crate::fmt_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScreenError {
    #[error("BAD_FRACTION: {0} is not in (0, 1]")]
    BadFraction(f64),
    #[error("EMPTY_LIBRARY: no candidates to rank")]
    EmptyLibrary,
    #[error("NO_ACTIVES: the candidate pool has no active molecules")]
    NoActives,
    #[error("LENGTH_MISMATCH: ranking has {order} entries, activity has {activity}")]
    LengthMismatch { order: usize, activity: usize },
    #[error("EMPTY_INPUT: no values")]
    EmptyInput,
    #[error("MISSING_ACTIVITY: candidate '{id}' (row {row}) has no activity label")]
    MissingActivity { row: usize, id: String },
    #[error("NO_REFERENCES: target '{0}' has no reference molecules")]
    NoReferences(String),
    #[error("MISSING_EMBEDDING: no {0} embedding loaded")]
    MissingEmbedding(EmbeddingMode),
    #[error("MISSING_SIMILARITY_COLUMN: '{column}' missing for molecule '{id}'")]
    MissingSimilarityColumn { column: String, id: String },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

impl ScreenError {
    pub fn code(&self) -> &'static str {
        match self {
            ScreenError::BadFraction(_) => "BAD_FRACTION",
            ScreenError::EmptyLibrary => "EMPTY_LIBRARY",
            ScreenError::NoActives => "NO_ACTIVES",
            ScreenError::LengthMismatch { .. } => "LENGTH_MISMATCH",
            ScreenError::EmptyInput => "EMPTY_INPUT",
            ScreenError::MissingActivity { .. } => "MISSING_ACTIVITY",
            ScreenError::NoReferences(_) => "NO_REFERENCES",
            ScreenError::MissingEmbedding(_) => "MISSING_EMBEDDING",
            ScreenError::MissingSimilarityColumn { .. } => "MISSING_SIMILARITY_COLUMN",
            ScreenError::Distance(e) => e.code(),
        }
    }
}

/// Enrichment of actives in the top slice of a ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfResult {
    pub fraction: f64,
    pub n_top: usize,
    pub n_actives_top: usize,
    pub n_total: usize,
    pub n_actives: usize,
    pub ef: f64,
}

/// Size of the top slice: `max(1, ceil(fraction * n_total))`.
///
/// Products within 1e-9 (relative) of an integer are snapped to it first, so
/// `0.07 * 100` is a slice of 7 and not 8.
pub fn top_slice_size(fraction: f64, n_total: usize) -> usize {
    let x = fraction * n_total as f64;
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { x.ceil() };
    (n as usize).clamp(1, n_total.max(1))
}

fn check_fraction(fraction: f64) -> Result<(), ScreenError> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(ScreenError::BadFraction(fraction))
    }
}

/// EF of `order` (a permutation of candidate indices into `activity`).
pub fn enrichment_factor(
    order: &[usize],
    activity: &[Activity],
    fraction: f64,
) -> Result<EfResult, ScreenError> {
    check_fraction(fraction)?;
    if order.len() != activity.len() {
        return Err(ScreenError::LengthMismatch { order: order.len(), activity: activity.len() });
    }
    let n_total = activity.len();
    if n_total == 0 {
        return Err(ScreenError::EmptyLibrary);
    }
    let n_actives = activity.iter().filter(|&&a| a == Activity::Active).count();
    if n_actives == 0 {
        return Err(ScreenError::NoActives);
    }
    let n_top = top_slice_size(fraction, n_total);
    let n_actives_top = order[..n_top].iter().filter(|&&i| activity[i] == Activity::Active).count();
    // (a / n_top) / (A / N) as a single correctly rounded division.
    let num = n_actives_top as u128 * n_total as u128;
    let den = n_top as u128 * n_actives as u128;
    Ok(EfResult { fraction, n_top, n_actives_top, n_total, n_actives, ef: num as f64 / den as f64 })
}

/// Arithmetic mean and sample standard deviation (absent for a single value).
pub fn mean_sd(values: &[f64]) -> Result<(f64, Option<f64>), ScreenError> {
    if values.is_empty() {
        return Err(ScreenError::EmptyInput);
    }
    let n = values.len() as f64;
    let mut sum = 0.0;
    for &v in values {
        sum += v;
    }
    let mean = sum / n;
    if values.len() == 1 {
        return Ok((mean, None));
    }
    let mut ss = 0.0;
    for &v in values {
        ss += (v - mean) * (v - mean);
    }
    Ok((mean, Some((ss / (n - 1.0)).sqrt())))
}

/// What a target is ranked by.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScreenSource {
    /// Embedding distance in the given representation mode.
    Embedding(EmbeddingMode),
    /// An ingested similarity column (larger is better). Per-reference values
    /// live in columns named `<column>@<reference id>`; with a single reference
    /// the bare column name is also accepted.
    Similarity(String),
}

impl ScreenSource {
    pub fn method_label(&self, kind: DistanceKind) -> String {
        match self {
            ScreenSource::Embedding(mode) => format!("ped-{}-{}", mode.name(), kind.name()),
            ScreenSource::Similarity(col) => format!("sim-{col}"),
        }
    }
}

impl fmt::Display for ScreenSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScreenSource::Embedding(m) => write!(f, "embedding:{m}"),
            ScreenSource::Similarity(c) => write!(f, "column:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub target_name: String,
    pub method_label: String,
    pub reference_ids: Vec<String>,
    pub per_reference_ef: Vec<f64>,
    pub mean_ef: f64,
    pub sd_ef: Option<f64>,
    pub best_pooled_ef: f64,
    pub n_candidates: usize,
    pub n_actives: usize,
}

/// Per-reference and best-pooled EF for one target. References never enter
/// the ranked pool.
pub fn screen_target(
    ds: &LibraryDataset,
    source: &ScreenSource,
    kind: DistanceKind,
    fraction: f64,
) -> Result<TargetReport, ScreenError> {
    check_fraction(fraction)?;
    let refs = ds.reference_indices();
    if refs.is_empty() {
        return Err(ScreenError::NoReferences(ds.target_name().to_string()));
    }
    let cands = ds.candidate_indices();
    if cands.is_empty() {
        return Err(ScreenError::EmptyLibrary);
    }
    let records = ds.records();
    let activity = cands
        .iter()
        .map(|&i| {
            records[i]
                .activity
                .ok_or_else(|| ScreenError::MissingActivity { row: i, id: records[i].id.clone() })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let (columns, pooled_order) = match source {
        ScreenSource::Embedding(mode) => {
            let emb = ds.embedding(*mode).ok_or(ScreenError::MissingEmbedding(*mode))?;
            let ranking = best_pool_detailed(&emb.select_rows(&cands), &emb.select_rows(&refs), kind)?;
            let columns: Vec<(Vec<f64>, Direction)> = (0..refs.len())
                .map(|j| (ranking.reference_column(j).expect("retained"), Direction::Ascending))
                .collect();
            (columns, ranking.order)
        }
        ScreenSource::Similarity(col) => {
            let columns = similarity_columns(ds, col, &refs, &cands)?;
            let table: Vec<Vec<f64>> =
                (0..cands.len()).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
            let pooled = crate::distance::pool_similarity_column(&table)?;
            let columns = columns.into_iter().map(|c| (c, Direction::Descending)).collect();
            (columns, rank_by(&pooled, Direction::Descending))
        }
    };

    let per_reference_ef = columns
        .par_iter()
        .map(|(values, dir)| enrichment_factor(&rank_by(values, *dir), &activity, fraction).map(|r| r.ef))
        .collect::<Result<Vec<_>, _>>()?;
    let best = enrichment_factor(&pooled_order, &activity, fraction)?;
    let (mean_ef, sd_ef) = mean_sd(&per_reference_ef)?;
    Ok(TargetReport {
        target_name: ds.target_name().to_string(),
        method_label: source.method_label(kind),
        reference_ids: refs.iter().map(|&i| records[i].id.clone()).collect(),
        per_reference_ef,
        mean_ef,
        sd_ef,
        best_pooled_ef: best.ef,
        n_candidates: cands.len(),
        n_actives: best.n_actives,
    })
}

fn similarity_columns(
    ds: &LibraryDataset,
    column: &str,
    refs: &[usize],
    cands: &[usize],
) -> Result<Vec<Vec<f64>>, ScreenError> {
    let records = ds.records();
    refs.iter()
        .map(|&r| {
            let per_ref = format!("{column}@{}", records[r].id);
            let name = if refs.len() == 1 && !cands.iter().any(|&i| records[i].columns.contains_key(&per_ref))
            {
                column.to_string()
            } else {
                per_ref
            };
            cands
                .iter()
                .map(|&i| {
                    records[i].value(&name).ok_or_else(|| ScreenError::MissingSimilarityColumn {
                        column: name.clone(),
                        id: records[i].id.clone(),
                    })
                })
                .collect()
        })
        .collect()
}

pub const REPORT_HEADER: &str = "target\tmethod\tn_refs\tmean_ef\tsd_ef\tbest_pooled_ef";

/// Writes the summary table, one row per report.
pub fn write_report_tsv<W: Write>(reports: &[TargetReport], mut out: W) -> io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.target_name,
            r.method_label,
            r.per_reference_ef.len(),
            fmt_f64(r.mean_ef),
            r.sd_ef.map_or_else(|| "NA".to_string(), fmt_f64),
            fmt_f64(r.best_pooled_ef),
        )?;
    }
    Ok(())
}

/// Writes every per-reference EF.
pub fn write_per_reference_tsv<W: Write>(reports: &[TargetReport], mut out: W) -> io::Result<()> {
    writeln!(out, "target\tmethod\treference\tef")?;
    for r in reports {
        for (id, ef) in r.reference_ids.iter().zip(&r.per_reference_ef) {
            writeln!(out, "{}\t{}\t{}\t{}", r.target_name, r.method_label, id, fmt_f64(*ef))?;
        }
    }
    Ok(())
}
