use std::collections::{HashMap, HashSet};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_lengths, AnalyticsError};
use crate::distance::{rank_by, Direction};
use crate::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBin {
    /// Half-open rank range `[rank_lo, rank_hi)` in ascending score order.
    pub rank_lo: usize,
    pub rank_hi: usize,
    pub count: usize,
    pub unique: usize,
    /// `unique / count`; 0 for an empty bin (only when N < bins).
    pub ratio: f64,
    pub score_min: Option<f64>,
    pub score_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileDiversity {
    pub bins: Vec<QuantileBin>,
}

impl QuantileDiversity {
    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "quantile\tcount\tunique_scaffolds\tratio\tscore_min\tscore_max")?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), fmt_f64);
        for (b, bin) in self.bins.iter().enumerate() {
            writeln!(
                out,
                "Q{}\t{}\t{}\t{}\t{}\t{}",
                b + 1,
                bin.count,
                bin.unique,
                fmt_f64(bin.ratio),
                opt(bin.score_min),
                opt(bin.score_max)
            )?;
        }
        Ok(())
    }
}

/// Equal-frequency score bins (ascending, ties by index) with the fraction of
/// distinct scaffold keys in each.
pub fn quantile_scaffold_diversity(
    scores: &[f64],
    scaffold_keys: &[String],
    bins: usize,
) -> Result<QuantileDiversity, AnalyticsError> {
    check_lengths(scores.len(), scaffold_keys.len())?;
    if bins == 0 {
        return Err(AnalyticsError::BadBinSpec("need at least one quantile bin".into()));
    }
    let order = rank_by(scores, Direction::Ascending);
    let n = order.len();
    let bins = (0..bins)
        .map(|b| {
            let (lo, hi) = (b * n / bins, (b + 1) * n / bins);
            let slice = &order[lo..hi];
            let unique = slice.iter().map(|&i| scaffold_keys[i].as_str()).collect::<HashSet<_>>().len();
            let count = slice.len();
            QuantileBin {
                rank_lo: lo,
                rank_hi: hi,
                count,
                unique,
                ratio: if count == 0 { 0.0 } else { unique as f64 / count as f64 },
                score_min: slice.first().map(|&i| scores[i]),
                score_max: slice.last().map(|&i| scores[i]),
            }
        })
        .collect();
    Ok(QuantileDiversity { bins })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaffoldSummary {
    pub molecules: usize,
    pub unique: usize,
    pub ratio: f64,
}

pub fn unique_scaffolds(keys: &[String]) -> ScaffoldSummary {
    let unique = keys.iter().collect::<HashSet<_>>().len();
    ScaffoldSummary {
        molecules: keys.len(),
        unique,
        ratio: if keys.is_empty() { 0.0 } else { unique as f64 / keys.len() as f64 },
    }
}

/// Round-robin sample across scaffold groups.
///
/// Groups are formed in order of first appearance; every group's members are
/// shuffled, then groups are ordered largest-first with equal sizes in a
/// shuffled order. Each pass takes the next member of every group that still
/// has one, until `target` ids are taken or all groups are exhausted. Output
/// is in selection order.
pub fn scaffold_balanced_sample(
    ids: &[String],
    scaffold_keys: &[String],
    target: usize,
    seed: u64,
) -> Result<Vec<String>, AnalyticsError> {
    check_lengths(ids.len(), scaffold_keys.len())?;
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, key) in scaffold_keys.iter().enumerate() {
        let g = *slot.entry(key.as_str()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for g in &mut groups {
        g.shuffle(&mut rng);
    }
    groups.shuffle(&mut rng);
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let mut out = Vec::with_capacity(target.min(ids.len()));
    let longest = groups.first().map_or(0, Vec::len);
    'passes: for pass in 0..longest {
        for g in &groups {
            if out.len() >= target {
                break 'passes;
            }
            if let Some(&i) = g.get(pass) {
                out.push(ids[i].clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn eight_rows_four_bins() {
        let scores: Vec<f64> = (1..=8).map(f64::from).collect();
        let keys = strings(&["a", "b", "a", "a", "c", "d", "e", "e"]);
        let q = quantile_scaffold_diversity(&scores, &keys, 4).unwrap();
        assert_eq!(q.bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 2, 2, 2]);
        assert_eq!(q.bins.iter().map(|b| b.unique).collect::<Vec<_>>(), vec![2, 1, 2, 1]);
        assert_eq!(q.bins[3].ratio, 0.5);
        assert_eq!(q.bins[0].score_min, Some(1.0));
    }

    #[test]
    fn identical_scaffolds_give_inverse_bin_size() {
        let scores: Vec<f64> = (0..10).map(f64::from).collect();
        let keys = vec!["c1ccccc1".to_string(); 10];
        let q = quantile_scaffold_diversity(&scores, &keys, 4).unwrap();
        for b in &q.bins {
            assert_eq!(b.ratio, 1.0 / b.count as f64);
        }
        assert_eq!(q.bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 3, 2, 3]);
    }

    #[test]
    fn quantile_errors_and_tiny_inputs() {
        assert_eq!(quantile_scaffold_diversity(&[1.0], &[], 4).unwrap_err().code(), "LENGTH_MISMATCH");
        let q = quantile_scaffold_diversity(&[1.0, 2.0], &strings(&["a", "b"]), 4).unwrap();
        assert_eq!(q.bins.iter().map(|b| b.count).sum::<usize>(), 2);
        assert_eq!(q.bins[0].ratio, 0.0);
    }

    #[test]
    fn quantile_tsv() {
        let q = quantile_scaffold_diversity(&[2.0, 1.0], &strings(&["a", "a"]), 1).unwrap();
        let mut buf = Vec::new();
        q.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "quantile\tcount\tunique_scaffolds\tratio\tscore_min\tscore_max\nQ1\t2\t1\t0.5\t1\t2\n"
        );
    }

    fn group_sizes(sizes: &[usize]) -> (Vec<String>, Vec<String>) {
        let mut ids = Vec::new();
        let mut keys = Vec::new();
        for (g, &n) in sizes.iter().enumerate() {
            for k in 0..n {
                ids.push(format!("s{g}m{k}"));
                keys.push(format!("scaffold{g}"));
            }
        }
        (ids, keys)
    }

    fn per_scaffold(sample: &[String], ids: &[String], keys: &[String]) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for s in sample {
            let i = ids.iter().position(|x| x == s).unwrap();
            *counts.entry(keys[i].clone()).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn round_robin_over_5_3_1() {
        let (ids, keys) = group_sizes(&[5, 3, 1]);
        for seed in 0..20 {
            let s = scaffold_balanced_sample(&ids, &keys, 6, seed).unwrap();
            assert_eq!(s.len(), 6);
            let counts = per_scaffold(&s, &ids, &keys);
            assert_eq!(counts.values().copied().collect::<Vec<_>>(), vec![3, 2, 1]);
        }
    }

    #[test]
    fn saturation_and_determinism() {
        let (ids, keys) = group_sizes(&[4, 2, 2]);
        let mut all = scaffold_balanced_sample(&ids, &keys, 100, 5).unwrap();
        all.sort();
        let mut expect = ids.clone();
        expect.sort();
        assert_eq!(all, expect);
        assert_eq!(
            scaffold_balanced_sample(&ids, &keys, 5, 77).unwrap(),
            scaffold_balanced_sample(&ids, &keys, 5, 77).unwrap()
        );
    }

    #[test]
    fn unique_summary() {
        let s = unique_scaffolds(&strings(&["a", "b", "a", "ACYCLIC"]));
        assert_eq!((s.molecules, s.unique, s.ratio), (4, 3, 0.75));
    }

    proptest! {
        #[test]
        fn quantile_bins_partition(
            scores in prop::collection::vec(-10.0f64..10.0, 0..200),
            bins in 1usize..9,
        ) {
            let keys: Vec<String> = scores.iter().map(|s| format!("{}", (s.abs() as i64) % 5)).collect();
            let q = quantile_scaffold_diversity(&scores, &keys, bins).unwrap();
            let sizes: Vec<usize> = q.bins.iter().map(|b| b.count).collect();
            prop_assert_eq!(sizes.iter().sum::<usize>(), scores.len());
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn balanced_counts_differ_by_at_most_one_among_unsaturated(
            sizes in prop::collection::vec(1usize..8, 1..8),
            target in 1usize..40,
            seed in any::<u64>(),
        ) {
            let (ids, keys) = group_sizes(&sizes);
            let s = scaffold_balanced_sample(&ids, &keys, target, seed).unwrap();
            prop_assert_eq!(s.len(), target.min(ids.len()));
            prop_assert_eq!(s.iter().collect::<HashSet<_>>().len(), s.len());
            let counts = per_scaffold(&s, &ids, &keys);
            // groups not yet exhausted are within one of each other
            let open: Vec<usize> = sizes
                .iter()
                .enumerate()
                .filter_map(|(g, &n)| {
                    let c = counts.get(&format!("scaffold{g}")).copied().unwrap_or(0);
                    (c < n).then_some(c)
                })
                .collect();
            if let (Some(lo), Some(hi)) = (open.iter().min(), open.iter().max()) {
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
