//! Statistics behind the correlation, diversity and property analyses.
//!
//! Every function here is pure; the sampling routines take an explicit seed
//! and are deterministic for a given input and seed. Outputs serialize to
//! TSV through the `write_*` helpers.

use thiserror::Error;

use crate::distance::DistanceError;

mod binning;
mod correlation;
mod diversity;
mod effect;
mod properties;

pub use binning::{bin_uniform_sample, binned_stats, write_binned_tsv, BinSpec, BinnedStats};
pub use correlation::{
    correlation_from_columns, correlation_matrix, pearson, resolve_metric, write_matrix_tsv,
    CorrelationMatrix, MetricSpec, PedReference,
};
pub use diversity::{
    quantile_scaffold_diversity, scaffold_balanced_sample, unique_scaffolds, QuantileBin, QuantileDiversity,
    ScaffoldSummary,
};
pub use effect::cliffs_delta;
pub use properties::{
    column_minmax, default_druglikeness_ranges, druglikeness_compliance, write_compliance_tsv,
    write_minmax_tsv, Compliance, MinMax, PropertyRange,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("CONSTANT_COLUMN: zero variance")]
    ConstantColumn,
    #[error("LENGTH_MISMATCH: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("TOO_FEW_VALUES: need at least {needed}, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("NON_FINITE_VALUE at index {0}")]
    NonFinite(usize),
    #[error("EMPTY_INPUT")]
    EmptyInput,
    #[error("UNRESOLVED_METRIC: {0}")]
    UnresolvedMetric(String),
    #[error("BAD_BIN_SPEC: {0}")]
    BadBinSpec(String),
    #[error("MISSING_COLUMN: {0}")]
    MissingColumn(String),
    #[error("ALL_NON_FINITE: column {0} has no finite values")]
    AllNonFinite(String),
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

impl AnalyticsError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalyticsError::ConstantColumn => "CONSTANT_COLUMN",
            AnalyticsError::LengthMismatch { .. } => "LENGTH_MISMATCH",
            AnalyticsError::TooFewValues { .. } => "TOO_FEW_VALUES",
            AnalyticsError::NonFinite(_) => "NON_FINITE_VALUE",
            AnalyticsError::EmptyInput => "EMPTY_INPUT",
            AnalyticsError::UnresolvedMetric(_) => "UNRESOLVED_METRIC",
            AnalyticsError::BadBinSpec(_) => "BAD_BIN_SPEC",
            AnalyticsError::MissingColumn(_) => "MISSING_COLUMN",
            AnalyticsError::AllNonFinite(_) => "ALL_NON_FINITE",
            AnalyticsError::Distance(e) => e.code(),
        }
    }
}

fn check_lengths(left: usize, right: usize) -> Result<(), AnalyticsError> {
    if left == right {
        Ok(())
    } else {
        Err(AnalyticsError::LengthMismatch { left, right })
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let s: CompensatedSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(s.value(), 2.0);
    }
}
