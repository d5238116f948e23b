use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ped_core::read_emb1;
use ped_core::reward::{serve_stream, Preset, SigmoidParams, StreamConfig};
use ped_core::DistanceKind;

use crate::error::{CliError, CliResult, WithPath};
use crate::files::require_input;

#[derive(clap::Args)]
pub struct Args {
    /// Sigmoid defaults for an embedding family.
    #[arg(long, visible_alias = "mode", conflicts_with_all = ["sig_low", "sig_high", "sig_k"])]
    preset: Option<Preset>,
    #[arg(long, requires = "sig_high")]
    sig_low: Option<f64>,
    #[arg(long, requires = "sig_low")]
    sig_high: Option<f64>,
    #[arg(long)]
    sig_k: Option<f64>,
    #[arg(long, default_value = "euclidean")]
    distance: DistanceKind,
    /// Reference embeddings for `@<row>` requests.
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Candidate embeddings addressed by `@<row>`.
    #[arg(long)]
    cands: Option<PathBuf>,
    /// One `0`/`1` alert flag per candidate row.
    #[arg(long, requires = "cands")]
    alerts: Option<PathBuf>,
}

fn read_alerts(path: &Path) -> CliResult<Vec<bool>> {
    let text = fs::read_to_string(path).at(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(CliError::usage(
                "BAD_ALERT",
                format!("{}:{}: expected 0 or 1, got {other:?}", path.display(), i + 1),
            )),
        })
        .collect()
}

pub fn run(a: Args) -> CliResult<()> {
    for p in a.refs.iter().chain(&a.cands).chain(&a.alerts) {
        require_input(p)?;
    }
    let params = match (a.preset, a.sig_low, a.sig_high) {
        (Some(p), _, _) => p.params(),
        (None, Some(lo), Some(hi)) => SigmoidParams::new(lo, hi, a.sig_k.unwrap_or(0.25))?,
        _ => return Err(CliError::usage("BAD_PARAMS", "give --preset or both --sig-low and --sig-high")),
    };
    let mut cfg = StreamConfig::new(a.distance, params);
    if let Some(p) = &a.refs {
        cfg.refs = Some(read_emb1(p).at(p)?);
    }
    if let Some(p) = &a.cands {
        let cands = read_emb1(p).at(p)?;
        if let Some(r) = &cfg.refs {
            if r.dim() != cands.dim() {
                return Err(CliError::usage(
                    "DIM_MISMATCH",
                    format!("refs have dim {}, candidates dim {}", r.dim(), cands.dim()),
                ));
            }
        }
        cfg.cands = Some(cands);
    }
    if let Some(p) = &a.alerts {
        let alerts = read_alerts(p)?;
        let rows = cfg.cands.as_ref().map_or(0, |c| c.rows());
        if alerts.len() != rows {
            return Err(CliError::usage(
                "LENGTH_MISMATCH",
                format!("{} alert flags for {rows} candidate rows", alerts.len()),
            ));
        }
        cfg.alerts = Some(alerts);
    }
    let stats = serve_stream(io::stdin().lock(), io::stdout().lock(), &cfg).at(Path::new("<stdio>"))?;
    if stats.errors > 0 {
        eprintln!("{} of {} requests answered with ERR", stats.errors, stats.requests);
    }
    Ok(())
}
