use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::{check_lengths, AnalyticsError, CompensatedSum};
use crate::dataset::{EmbeddingMode, LibraryDataset};
use crate::distance::{distance, DistanceError, DistanceKind, RowSource};
use crate::fmt_f64;

/// Pearson product-moment correlation, two-pass with compensated sums.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    check_lengths(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(AnalyticsError::TooFewValues { needed: 2, got: x.len() });
    }
    if let Some(i) = x.iter().zip(y).position(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(AnalyticsError::NonFinite(i));
    }
    let n = x.len() as f64;
    let mx = x.iter().copied().collect::<CompensatedSum>().value() / n;
    let my = y.iter().copied().collect::<CompensatedSum>().value() / n;
    let (mut sxx, mut syy, mut sxy) =
        (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    let (sxx, syy, sxy) = (sxx.value(), syy.value(), sxy.value());
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(AnalyticsError::ConstantColumn);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Which reference(s) a PED metric is measured against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PedReference {
    /// One reference, by record id.
    Id(String),
    /// Minimum over every reference in the dataset.
    Pooled,
}

/// A per-molecule quantity that can enter a correlation matrix.
///
/// Textual forms: `col:<name>` (or a bare column name) and
/// `ped:<mode>:<kind>[:<reference id>|:pooled]`, e.g. `ped:3d:euclidean:lig1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricSpec {
    Column(String),
    Ped { mode: EmbeddingMode, kind: DistanceKind, reference: PedReference },
}

impl FromStr for MetricSpec {
    type Err = AnalyticsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AnalyticsError::UnresolvedMetric(format!("cannot parse metric '{s}'"));
        if let Some(name) = s.strip_prefix("col:") {
            return if name.is_empty() { Err(bad()) } else { Ok(MetricSpec::Column(name.into())) };
        }
        if let Some(rest) = s.strip_prefix("ped:") {
            let parts: Vec<&str> = rest.splitn(3, ':').collect();
            if parts.len() < 2 {
                return Err(bad());
            }
            let mode = parts[0].parse().map_err(|_| bad())?;
            let kind = parts[1].parse().map_err(|_| bad())?;
            let reference = match parts.get(2) {
                None | Some(&"pooled") => PedReference::Pooled,
                Some(id) if !id.is_empty() => PedReference::Id(id.to_string()),
                Some(_) => return Err(bad()),
            };
            return Ok(MetricSpec::Ped { mode, kind, reference });
        }
        if s.is_empty() || s.contains(':') {
            return Err(bad());
        }
        Ok(MetricSpec::Column(s.into()))
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Column(c) => write!(f, "col:{c}"),
            MetricSpec::Ped { mode, kind, reference } => {
                write!(f, "ped:{mode}:{kind}:")?;
                match reference {
                    PedReference::Id(id) => f.write_str(id),
                    PedReference::Pooled => f.write_str("pooled"),
                }
            }
        }
    }
}

/// Values of `spec` for each of `rows`. Missing column cells become NaN.
pub fn resolve_metric(
    ds: &LibraryDataset,
    spec: &MetricSpec,
    rows: &[usize],
) -> Result<Vec<f64>, AnalyticsError> {
    let records = ds.records();
    match spec {
        MetricSpec::Column(name) => {
            if !records.iter().any(|r| r.columns.contains_key(name)) {
                return Err(AnalyticsError::UnresolvedMetric(format!("no column '{name}'")));
            }
            Ok(rows.iter().map(|&i| records[i].value(name).unwrap_or(f64::NAN)).collect())
        }
        MetricSpec::Ped { mode, kind, reference } => {
            let emb = ds
                .embedding(*mode)
                .ok_or_else(|| AnalyticsError::UnresolvedMetric(format!("no {mode} embedding")))?;
            let refs: Vec<usize> = match reference {
                PedReference::Pooled => ds.reference_indices(),
                PedReference::Id(id) => records.iter().position(|r| &r.id == id).into_iter().collect(),
            };
            if refs.is_empty() {
                return Err(AnalyticsError::UnresolvedMetric(format!("no reference for '{spec}'")));
            }
            rows.iter()
                .map(|&i| {
                    let mut best = f64::INFINITY;
                    for &r in &refs {
                        let d = distance(emb.row(i), emb.row(r), *kind).map_err(|e| match e {
                            DistanceError::ZeroNorm { source_kind: RowSource::Candidate, .. } => {
                                DistanceError::ZeroNorm { source_kind: RowSource::Candidate, row: i }
                            }
                            DistanceError::ZeroNorm { source_kind: RowSource::Reference, .. } => {
                                DistanceError::ZeroNorm { source_kind: RowSource::Reference, row: r }
                            }
                            other => other,
                        })?;
                        best = best.min(d);
                    }
                    Ok(best)
                })
                .collect()
        }
    }
}

/// Symmetric matrix of pairwise Pearson coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    /// NaN where undefined.
    pub r: Vec<Vec<f64>>,
    pub defined: Vec<Vec<bool>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.defined[i][j].then_some(self.r[i][j])
    }
}

/// Pairwise-complete correlations: each cell uses the rows where both
/// columns are finite. Cells with fewer than two such rows, or a constant
/// column, are masked.
pub fn correlation_from_columns(labels: Vec<String>, columns: &[Vec<f64>]) -> CorrelationMatrix {
    let k = columns.len();
    let mut r = vec![vec![f64::NAN; k]; k];
    let mut defined = vec![vec![false; k]; k];
    for i in 0..k {
        for j in i..k {
            let (x, y): (Vec<f64>, Vec<f64>) = columns[i]
                .iter()
                .zip(&columns[j])
                .filter(|(a, b)| a.is_finite() && b.is_finite())
                .map(|(&a, &b)| (a, b))
                .unzip();
            if let Ok(v) = pearson(&x, &y) {
                let v = if i == j { 1.0 } else { v };
                r[i][j] = v;
                r[j][i] = v;
                defined[i][j] = true;
                defined[j][i] = true;
            }
        }
    }
    CorrelationMatrix { labels, r, defined }
}

/// Correlation matrix over the candidate rows of `ds`.
pub fn correlation_matrix(
    ds: &LibraryDataset,
    metrics: &[MetricSpec],
) -> Result<CorrelationMatrix, AnalyticsError> {
    let rows = ds.candidate_indices();
    if rows.len() < 2 {
        return Err(AnalyticsError::TooFewValues { needed: 2, got: rows.len() });
    }
    let columns = metrics.iter().map(|m| resolve_metric(ds, m, &rows)).collect::<Result<Vec<_>, _>>()?;
    Ok(correlation_from_columns(metrics.iter().map(|m| m.to_string()).collect(), &columns))
}

/// Labeled square table; undefined cells are written as `NA`.
pub fn write_matrix_tsv<W: Write>(m: &CorrelationMatrix, mut out: W) -> io::Result<()> {
    write!(out, "metric")?;
    for l in &m.labels {
        write!(out, "\t{l}")?;
    }
    writeln!(out)?;
    for (i, l) in m.labels.iter().enumerate() {
        write!(out, "{l}")?;
        for j in 0..m.labels.len() {
            match m.get(i, j) {
                Some(v) => write!(out, "\t{}", fmt_f64(v))?,
                None => write!(out, "\tNA")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
