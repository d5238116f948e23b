use std::io::{self, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_lengths, AnalyticsError};
use crate::fmt_f64;

/// Equal-width bins over `[lo, hi]`: half-open `[lo_b, hi_b)` except the last,
/// which is closed at `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    lo: f64,
    hi: f64,
    n_bins: usize,
}

impl BinSpec {
    /// `step` must divide `hi - lo` to within 1e-9.
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, AnalyticsError> {
        let bad = |why: &str| AnalyticsError::BadBinSpec(format!("lo={lo} hi={hi} step={step}: {why}"));
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(bad("values must be finite"));
        }
        if lo >= hi {
            return Err(bad("lo must be below hi"));
        }
        if step <= 0.0 {
            return Err(bad("step must be positive"));
        }
        let n = ((hi - lo) / step).round();
        if n < 1.0 || (n * step - (hi - lo)).abs() > 1e-9 {
            return Err(bad("step does not divide the range"));
        }
        Ok(BinSpec { lo, hi, n_bins: n as usize })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Edge `b` in `0..=n_bins`, computed as `lo + (hi - lo) * b / n` so that
    /// decimal edges such as 0.6 come out as the nearest double.
    pub fn edge(&self, b: usize) -> f64 {
        if b == self.n_bins {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * b as f64 / self.n_bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|b| self.edge(b)).collect()
    }

    /// Bin holding `v`, or `None` outside `[lo, hi]` (and for NaN).
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.lo && v <= self.hi) {
            return None;
        }
        let guess = ((v - self.lo) / (self.hi - self.lo) * self.n_bins as f64) as usize;
        let mut b = guess.min(self.n_bins - 1);
        while b > 0 && v < self.edge(b) {
            b -= 1;
        }
        while b + 1 < self.n_bins && v >= self.edge(b + 1) {
            b += 1;
        }
        Some(b)
    }
}

impl FromStr for BinSpec {
    type Err = AnalyticsError;

    /// Parses `lo:hi:step`, e.g. `0:2:0.2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || AnalyticsError::BadBinSpec(format!("expected lo:hi:step, got '{s}'"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<f64> =
            parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        BinSpec::new(nums[0], nums[1], nums[2])
    }
}

/// Per-bin count, mean and sample SD of a paired variable.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedStats {
    pub edges: Vec<f64>,
    pub count: Vec<usize>,
    pub mean: Vec<Option<f64>>,
    pub sd: Vec<Option<f64>>,
}

/// Bins rows by `bin_values` and summarizes `paired` within each bin. Rows
/// whose paired value is not finite are skipped.
pub fn binned_stats(
    bin_values: &[f64],
    paired: &[f64],
    spec: &BinSpec,
) -> Result<BinnedStats, AnalyticsError> {
    check_lengths(bin_values.len(), paired.len())?;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); spec.n_bins()];
    for (&b, &p) in bin_values.iter().zip(paired) {
        if let (Some(bin), true) = (spec.bin_of(b), p.is_finite()) {
            groups[bin].push(p);
        }
    }
    let mut stats = BinnedStats { edges: spec.edges(), count: Vec::new(), mean: Vec::new(), sd: Vec::new() };
    for g in groups {
        stats.count.push(g.len());
        if g.is_empty() {
            stats.mean.push(None);
            stats.sd.push(None);
            continue;
        }
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        stats.mean.push(Some(mean));
        stats.sd.push(
            (g.len() > 1)
                .then(|| (g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()),
        );
    }
    Ok(stats)
}

/// Up to `per_bin` indices per bin, drawn without replacement with a seeded
/// ChaCha8 stream. Bins are visited in ascending order; indices within a bin
/// are returned ascending. Values outside `[lo, hi]` are never selected.
pub fn bin_uniform_sample(
    values: &[f64],
    spec: &BinSpec,
    per_bin: usize,
    seed: u64,
) -> Result<Vec<usize>, AnalyticsError> {
    if per_bin == 0 {
        return Err(AnalyticsError::BadBinSpec("per_bin must be at least 1".into()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); spec.n_bins()];
    for (i, &v) in values.iter().enumerate() {
        if let Some(b) = spec.bin_of(v) {
            members[b].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for bin in members {
        if bin.len() <= per_bin {
            out.extend(bin);
        } else {
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, bin.len(), per_bin).into_iter().map(|k| bin[k]).collect();
            picked.sort_unstable();
            out.extend(picked);
        }
    }
    Ok(out)
}

/// One row per (metric, bin): `metric bin_lo bin_hi count mean sd`.
pub fn write_binned_tsv<W: Write>(rows: &[(String, BinnedStats)], mut out: W) -> io::Result<()> {
    writeln!(out, "metric\tbin_lo\tbin_hi\tcount\tmean\tsd")?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_f64);
    for (label, s) in rows {
        for b in 0..s.count.len() {
            writeln!(
                out,
                "{label}\t{}\t{}\t{}\t{}\t{}",
                fmt_f64(s.edges[b]),
                fmt_f64(s.edges[b + 1]),
                s.count[b],
                opt(s.mean[b]),
                opt(s.sd[b])
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rocs_bins() -> BinSpec {
        "0:2:0.2".parse().unwrap()
    }

    #[test]
    fn spec_parsing() {
        let s = rocs_bins();
        assert_eq!(s.n_bins(), 10);
        assert_eq!(s.edge(3), 0.6);
        assert_eq!(s.edge(10), 2.0);
        for bad in ["0:2", "2:0:0.2", "0:2:0.3", "0:2:-1", "a:b:c", "0:2:0"] {
            assert_eq!(bad.parse::<BinSpec>().unwrap_err().code(), "BAD_BIN_SPEC", "{bad}");
        }
    }

    #[test]
    fn decimal_edges_land_in_upper_bin() {
        let s = rocs_bins();
        assert_eq!(s.bin_of(0.0), Some(0));
        assert_eq!(s.bin_of(0.6), Some(3));
        assert_eq!(s.bin_of(0.5999999), Some(2));
        assert_eq!(s.bin_of(1.8), Some(9));
        assert_eq!(s.bin_of(2.0), Some(9));
        assert_eq!(s.bin_of(2.0000001), None);
        assert_eq!(s.bin_of(-0.1), None);
        assert_eq!(s.bin_of(f64::NAN), None);
    }

    #[test]
    fn saturated_bins_give_exactly_per_bin_each() {
        let values: Vec<f64> = (0..1000).map(|i| (i % 200) as f64 * 0.01).collect();
        let picked = bin_uniform_sample(&values, &rocs_bins(), 7, 1).unwrap();
        assert_eq!(picked.len(), 70);
        let mut per = [0usize; 10];
        for &i in &picked {
            per[rocs_bins().bin_of(values[i]).unwrap()] += 1;
        }
        assert_eq!(per, [7; 10]);
    }

    #[test]
    fn small_bin_contributes_all_members() {
        let values = vec![0.1, 0.15, 0.05, 1.0, 1.01, 1.02, 1.03, 1.04, 1.05, 1.06];
        let picked = bin_uniform_sample(&values, &rocs_bins(), 5, 9).unwrap();
        assert_eq!(&picked[..3], &[0, 1, 2]);
        assert_eq!(picked.len(), 8);
    }

    #[test]
    fn sampling_is_deterministic() {
        let values: Vec<f64> = (0..500).map(|i| ((i * 37) % 200) as f64 / 100.0).collect();
        let a = bin_uniform_sample(&values, &rocs_bins(), 3, 42).unwrap();
        let b = bin_uniform_sample(&values, &rocs_bins(), 3, 42).unwrap();
        assert_eq!(a, b);
        let c = bin_uniform_sample(&values, &rocs_bins(), 3, 43).unwrap();
        assert_ne!(a, c);
        assert!(bin_uniform_sample(&values, &rocs_bins(), 0, 1).is_err());
    }

    #[test]
    fn binned_stats_per_bin() {
        let spec = BinSpec::new(0.0, 1.0, 0.5).unwrap();
        let s = binned_stats(&[0.1, 0.2, 0.7, 1.0, 5.0], &[1.0, 3.0, 10.0, f64::NAN, 2.0], &spec).unwrap();
        assert_eq!(s.count, vec![2, 1]);
        assert_eq!(s.mean, vec![Some(2.0), Some(10.0)]);
        assert_eq!(s.sd[0], Some(2f64.sqrt()));
        assert_eq!(s.sd[1], None);
        let mut buf = Vec::new();
        write_binned_tsv(&[("ped".into(), s)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "metric\tbin_lo\tbin_hi\tcount\tmean\tsd\nped\t0\t0.5\t2\t2\t1.4142135623730951\nped\t0.5\t1\t1\t10\tNA\n"
        );
    }

    proptest! {
        #[test]
        fn sample_is_pure_and_within_bins(
            values in prop::collection::vec(-0.5f64..2.5, 0..300),
            per_bin in 1usize..20,
            seed in any::<u64>(),
        ) {
            let spec = rocs_bins();
            let a = bin_uniform_sample(&values, &spec, per_bin, seed).unwrap();
            prop_assert_eq!(&a, &bin_uniform_sample(&values, &spec, per_bin, seed).unwrap());
            let mut per = vec![0usize; 10];
            for &i in &a {
                per[spec.bin_of(values[i]).unwrap()] += 1;
            }
            for (b, &count) in per.iter().enumerate() {
                let members = values.iter().filter(|&&v| spec.bin_of(v) == Some(b)).count();
                prop_assert_eq!(count, members.min(per_bin));
            }
        }
    }
}
