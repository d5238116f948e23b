use std::io::{self, Write};

use super::AnalyticsError;
use crate::dataset::MoleculeRecord;
use crate::fmt_f64;

/// Closed acceptable range for one property column.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyRange {
    pub column: String,
    pub lo: f64,
    pub hi: f64,
}

impl PropertyRange {
    pub fn new(column: impl Into<String>, lo: f64, hi: f64) -> Self {
        PropertyRange { column: column.into(), lo, hi }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Drug-likeness windows for MW, TPSA, LogP, HBD, HBA, QED and SA.
pub fn default_druglikeness_ranges() -> Vec<PropertyRange> {
    vec![
        PropertyRange::new("mw", 200.0, 500.0),
        PropertyRange::new("tpsa", 20.0, 130.0),
        PropertyRange::new("logp", -1.0, 6.0),
        PropertyRange::new("hbd", 0.0, 5.0),
        PropertyRange::new("hba", 0.0, 10.0),
        PropertyRange::new("qed", 0.4, 1.0),
        PropertyRange::new("sa", 1.0, 5.0),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compliance {
    pub column: String,
    pub considered: usize,
    pub inside: usize,
    pub fraction: f64,
}

/// Fraction of rows inside each range. Rows without a value for a column
/// (absent or NaN) are left out of that column's denominator.
pub fn druglikeness_compliance(
    records: &[MoleculeRecord],
    ranges: &[PropertyRange],
) -> Result<Vec<Compliance>, AnalyticsError> {
    ranges
        .iter()
        .map(|range| {
            let values: Vec<f64> = records.iter().filter_map(|r| r.value(&range.column)).collect();
            if values.is_empty() {
                return Err(AnalyticsError::MissingColumn(range.column.clone()));
            }
            let inside = values.iter().filter(|&&v| range.contains(v)).count();
            Ok(Compliance {
                column: range.column.clone(),
                considered: values.len(),
                inside,
                fraction: inside as f64 / values.len() as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMax {
    pub column: String,
    pub min: f64,
    pub max: f64,
}

/// Exact min/max over the finite values of each column.
pub fn column_minmax(records: &[MoleculeRecord], columns: &[String]) -> Result<Vec<MinMax>, AnalyticsError> {
    columns
        .iter()
        .map(|c| {
            if !records.iter().any(|r| r.columns.contains_key(c)) {
                return Err(AnalyticsError::MissingColumn(c.clone()));
            }
            let mut finite = records.iter().filter_map(|r| r.columns.get(c)).filter(|v| v.is_finite());
            let first = *finite.next().ok_or_else(|| AnalyticsError::AllNonFinite(c.clone()))?;
            let (min, max) = finite.fold((first, first), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            Ok(MinMax { column: c.clone(), min, max })
        })
        .collect()
}

pub fn write_compliance_tsv<W: Write>(rows: &[Compliance], mut out: W) -> io::Result<()> {
    writeln!(out, "column\tconsidered\tinside\tfraction")?;
    for c in rows {
        writeln!(out, "{}\t{}\t{}\t{}", c.column, c.considered, c.inside, fmt_f64(c.fraction))?;
    }
    Ok(())
}

pub fn write_minmax_tsv<W: Write>(rows: &[MinMax], mut out: W) -> io::Result<()> {
    writeln!(out, "column\tmin\tmax")?;
    for m in rows {
        writeln!(out, "{}\t{}\t{}", m.column, fmt_f64(m.min), fmt_f64(m.max))?;
    }
    Ok(())
}
