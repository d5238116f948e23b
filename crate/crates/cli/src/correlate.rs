use std::path::PathBuf;

use ped_core::analytics::{
    bin_uniform_sample, binned_stats, correlation_from_columns, resolve_metric, write_binned_tsv,
    write_matrix_tsv, BinSpec, MetricSpec,
};
use ped_core::fmt_f64;

use crate::error::{CliError, CliResult, WithPath};
use crate::files::{load_dataset, require_input, require_output, select_target, with_suffix, write_file};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    metadata: PathBuf,
    #[arg(long = "emb")]
    embeddings: Vec<PathBuf>,
    /// Comma-separated metrics: `col:<name>` or `ped:<mode>:<kind>[:<ref id>|:pooled]`.
    #[arg(long, value_delimiter = ',', required = true)]
    metrics: Vec<String>,
    /// Metric whose values define the bins; the first metric by default.
    #[arg(long)]
    bin_by: Option<String>,
    /// Equal-width bins as `lo:hi:step`.
    #[arg(long, default_value = "0:2:0.2")]
    bins: String,
    /// Draw this many rows per bin into `<prefix>.sample.tsv`.
    #[arg(long)]
    sample_per_bin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    out_prefix: PathBuf,
}

pub fn run(a: Args) -> CliResult<()> {
    require_input(&a.metadata)?;
    for p in &a.embeddings {
        require_input(p)?;
    }
    let matrix_path = with_suffix(&a.out_prefix, ".matrix.tsv");
    let binned_path = with_suffix(&a.out_prefix, ".binned.tsv");
    let sample_path = with_suffix(&a.out_prefix, ".sample.tsv");
    require_output(&matrix_path)?;

    let spec: BinSpec = a.bins.parse()?;
    let metrics = a.metrics.iter().map(|m| m.parse::<MetricSpec>()).collect::<Result<Vec<_>, _>>()?;
    let bin_by: MetricSpec = match &a.bin_by {
        Some(s) => s.parse()?,
        None => metrics[0].clone(),
    };

    let ds = select_target(&load_dataset(&a.metadata, &a.embeddings)?, a.target.as_deref())?;
    let rows = ds.candidate_indices();
    if rows.len() < 2 {
        return Err(CliError::usage("TOO_FEW_VALUES", format!("{} candidate rows", rows.len())));
    }
    let columns = metrics.iter().map(|m| resolve_metric(&ds, m, &rows)).collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<String> = metrics.iter().map(|m| m.to_string()).collect();
    let bin_values = match metrics.iter().position(|m| *m == bin_by) {
        Some(i) => columns[i].clone(),
        None => resolve_metric(&ds, &bin_by, &rows)?,
    };

    let mut matrix = Vec::new();
    write_matrix_tsv(&correlation_from_columns(labels.clone(), &columns), &mut matrix).at(&matrix_path)?;

    let mut binned_rows = Vec::new();
    for (label, col) in labels.iter().zip(&columns) {
        if *label != bin_by.to_string() {
            binned_rows.push((label.clone(), binned_stats(&bin_values, col, &spec)?));
        }
    }
    let mut binned = Vec::new();
    write_binned_tsv(&binned_rows, &mut binned).at(&binned_path)?;

    let sample = match a.sample_per_bin {
        Some(per_bin) => {
            let picked = bin_uniform_sample(&bin_values, &spec, per_bin, a.seed)?;
            let ids: Vec<String> = rows.iter().map(|&i| ds.records()[i].id.clone()).collect();
            Some(sample_tsv(&ids, &picked, &bin_by, &bin_values, &labels, &columns))
        }
        None => None,
    };

    write_file(&matrix_path, &matrix)?;
    write_file(&binned_path, &binned)?;
    if let Some(s) = sample {
        write_file(&sample_path, &s)?;
    }
    Ok(())
}

/// `id`, the bin-by value and every metric for the sampled rows.
fn sample_tsv(
    ids: &[String],
    picked: &[usize],
    bin_by: &MetricSpec,
    bin_values: &[f64],
    labels: &[String],
    columns: &[Vec<f64>],
) -> Vec<u8> {
    let mut out = format!("id\tbin_by:{bin_by}");
    for l in labels {
        out.push('\t');
        out.push_str(l);
    }
    out.push('\n');
    for &k in picked {
        out.push_str(&format!("{}\t{}", ids[k], fmt_f64(bin_values[k])));
        for c in columns {
            out.push('\t');
            out.push_str(&fmt_f64(c[k]));
        }
        out.push('\n');
    }
    out.into_bytes()
}
