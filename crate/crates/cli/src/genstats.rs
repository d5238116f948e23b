use std::fs;
use std::path::{Path, PathBuf};

use ped_core::analytics::{
    column_minmax, default_druglikeness_ranges, druglikeness_compliance, quantile_scaffold_diversity,
    scaffold_balanced_sample, unique_scaffolds, write_compliance_tsv, write_minmax_tsv, PropertyRange,
};
use ped_core::distance::{rank_by, Direction};
use ped_core::smiles::scaffold_of;
use ped_core::{fmt_f64, read_metadata, MoleculeRecord};

use crate::error::{CliError, CliResult, WithPath};
use crate::files::{require_input, require_output, with_suffix, write_file};

#[derive(clap::Args)]
pub struct Args {
    /// Generated molecules with a score column and scaffold_key or smiles.
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long, default_value = "total_score")]
    score_column: String,
    #[arg(long, default_value_t = 5000)]
    top_k: usize,
    #[arg(long, default_value_t = 4)]
    quantiles: usize,
    #[arg(long, default_value_t = 500)]
    balanced_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TSV of `column lo hi` rows; the drug-likeness table by default.
    #[arg(long)]
    ranges: Option<PathBuf>,
    #[arg(long)]
    out_prefix: PathBuf,
}

fn read_ranges(path: &Path) -> CliResult<Vec<PropertyRange>> {
    let text = fs::read_to_string(path).at(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if line.trim().is_empty() || (i == 0 && fields.first() == Some(&"column")) {
            continue;
        }
        let bad = || {
            CliError::usage(
                "BAD_RANGE",
                format!("{}:{}: expected column<TAB>lo<TAB>hi", path.display(), i + 1),
            )
        };
        if fields.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = fields[1].parse().map_err(|_| bad())?;
        let hi: f64 = fields[2].parse().map_err(|_| bad())?;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(bad());
        }
        out.push(PropertyRange::new(fields[0], lo, hi));
    }
    Ok(out)
}

/// Scaffold key per record: the given key, else one computed from SMILES,
/// else `PARSE_FAIL:<id>`.
fn scaffold_keys(records: &[MoleculeRecord]) -> CliResult<Vec<String>> {
    if !records.iter().any(|r| r.scaffold_key.is_some() || r.smiles.is_some()) {
        return Err(CliError::usage("NO_SCAFFOLD_SOURCE", "metadata has neither scaffold_key nor smiles"));
    }
    Ok(records
        .iter()
        .map(|r| {
            if let Some(k) = &r.scaffold_key {
                return k.clone();
            }
            match r.smiles.as_deref().map(scaffold_of) {
                Some(Ok(k)) => k,
                Some(Err(e)) => {
                    eprintln!("warning: {}: {}", r.id, e);
                    format!("PARSE_FAIL:{}", r.id)
                }
                None => format!("PARSE_FAIL:{}", r.id),
            }
        })
        .collect())
}

pub fn run(a: Args) -> CliResult<()> {
    require_input(&a.metadata)?;
    if let Some(p) = &a.ranges {
        require_input(p)?;
    }
    let out = |s: &str| with_suffix(&a.out_prefix, s);
    require_output(&out(".quantiles.tsv"))?;
    if a.top_k == 0 {
        return Err(CliError::usage("BAD_TOP_K", "top-k must be at least 1"));
    }

    let records = read_metadata(&a.metadata).at(&a.metadata)?;
    if !records.iter().any(|r| r.columns.contains_key(&a.score_column)) {
        return Err(CliError::usage("MISSING_COLUMN", format!("no score column '{}'", a.score_column)));
    }
    let (scored, unscored): (Vec<MoleculeRecord>, Vec<MoleculeRecord>) =
        records.into_iter().partition(|r| r.value(&a.score_column).is_some());
    if !unscored.is_empty() {
        eprintln!("warning: {} rows without {} left out", unscored.len(), a.score_column);
    }
    let keys = scaffold_keys(&scored)?;
    let scores: Vec<f64> = scored.iter().map(|r| r.value(&a.score_column).unwrap_or(f64::NAN)).collect();

    let top: Vec<usize> = rank_by(&scores, Direction::Descending).into_iter().take(a.top_k).collect();
    let top_scores: Vec<f64> = top.iter().map(|&i| scores[i]).collect();
    let top_keys: Vec<String> = top.iter().map(|&i| keys[i].clone()).collect();
    let top_ids: Vec<String> = top.iter().map(|&i| scored[i].id.clone()).collect();
    let top_records: Vec<MoleculeRecord> = top.iter().map(|&i| scored[i].clone()).collect();

    let mut quantiles = Vec::new();
    quantile_scaffold_diversity(&top_scores, &top_keys, a.quantiles)?
        .write_tsv(&mut quantiles)
        .at(&out(".quantiles.tsv"))?;

    let mut scaffolds = String::from("set\tmolecules\tunique_scaffolds\tratio\n");
    for (name, ks) in [("all", &keys), ("top_k", &top_keys)] {
        let s = unique_scaffolds(ks);
        scaffolds.push_str(&format!("{name}\t{}\t{}\t{}\n", s.molecules, s.unique, fmt_f64(s.ratio)));
    }

    let ranges = match &a.ranges {
        Some(p) => read_ranges(p)?,
        None => default_druglikeness_ranges(),
    };
    let (present, absent): (Vec<PropertyRange>, Vec<PropertyRange>) =
        ranges.into_iter().partition(|r| top_records.iter().any(|m| m.value(&r.column).is_some()));
    for r in &absent {
        eprintln!("warning: no values for {}; left out of compliance", r.column);
    }
    let mut compliance = Vec::new();
    write_compliance_tsv(&druglikeness_compliance(&top_records, &present)?, &mut compliance)
        .at(&out(".compliance.tsv"))?;
    let columns: Vec<String> = present.iter().map(|r| r.column.clone()).collect();
    let mut minmax = Vec::new();
    write_minmax_tsv(&column_minmax(&top_records, &columns)?, &mut minmax).at(&out(".minmax.tsv"))?;

    let balanced = scaffold_balanced_sample(&top_ids, &top_keys, a.balanced_n, a.seed)?;
    let balanced: String = balanced.iter().map(|id| format!("{id}\n")).collect();

    write_file(&out(".quantiles.tsv"), &quantiles)?;
    write_file(&out(".scaffolds.tsv"), scaffolds.as_bytes())?;
    write_file(&out(".compliance.tsv"), &compliance)?;
    write_file(&out(".minmax.tsv"), &minmax)?;
    write_file(&out(".balanced.txt"), balanced.as_bytes())?;
    eprintln!(
        "{} scored molecules, top {} kept, {} balanced ids",
        scored.len(),
        top.len(),
        balanced.lines().count()
    );
    Ok(())
}
