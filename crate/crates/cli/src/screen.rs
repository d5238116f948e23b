use std::path::PathBuf;

use ped_core::screening::{write_per_reference_tsv, write_report_tsv};
use ped_core::{fmt_f64, screen_target, DistanceKind, ScreenSource};

use crate::error::{CliError, CliResult, WithPath};
use crate::files::{emit, load_dataset, require_input, require_output, target_groups, write_file};

#[derive(clap::Args)]
pub struct Args {
    /// Metadata TSV (id, role, activity, ...; an optional `target` column splits targets).
    #[arg(long)]
    metadata: PathBuf,
    /// EMB1 matrix aligned with the metadata rows; the mode comes from its header.
    #[arg(long = "emb")]
    embeddings: Vec<PathBuf>,
    /// Rank by an ingested similarity column instead of (or as well as) embeddings.
    #[arg(long = "similarity")]
    similarity: Vec<String>,
    #[arg(long, default_value = "euclidean")]
    distance: DistanceKind,
    /// Top fraction of the ranked library used for EF.
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    /// Report TSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one EF row per reference ligand.
    #[arg(long)]
    per_reference: Option<PathBuf>,
    /// Only screen this target.
    #[arg(long)]
    target: Option<String>,
}

pub fn run(a: Args) -> CliResult<()> {
    require_input(&a.metadata)?;
    for p in &a.embeddings {
        require_input(p)?;
    }
    for p in a.out.iter().chain(&a.per_reference) {
        require_output(p)?;
    }
    if a.embeddings.is_empty() && a.similarity.is_empty() {
        return Err(CliError::usage("NO_METHOD", "give at least one --emb or --similarity"));
    }
    if !(a.fraction > 0.0 && a.fraction <= 1.0) {
        return Err(CliError::usage("BAD_FRACTION", format!("fraction {} is not in (0, 1]", a.fraction)));
    }

    let ds = load_dataset(&a.metadata, &a.embeddings)?;
    let mut sources: Vec<ScreenSource> = ds.embeddings().map(|m| ScreenSource::Embedding(m.mode())).collect();
    sources.extend(a.similarity.iter().cloned().map(ScreenSource::Similarity));

    let mut groups = target_groups(ds.records(), ds.target_name());
    if let Some(t) = &a.target {
        groups.retain(|(n, _)| n == t);
        if groups.is_empty() {
            return Err(CliError::usage("UNKNOWN_TARGET", format!("no rows for target '{t}'")));
        }
    }

    let mut reports = Vec::new();
    for (name, rows) in &groups {
        let sub = ds.subset(name.as_str(), rows);
        for source in &sources {
            let r = screen_target(&sub, source, a.distance, a.fraction)?;
            eprintln!(
                "{}\t{}\trefs={}\tcandidates={}\tactives={}\tmean_ef={}\tbest_pooled_ef={}",
                r.target_name,
                r.method_label,
                r.reference_ids.len(),
                r.n_candidates,
                r.n_actives,
                fmt_f64(r.mean_ef),
                fmt_f64(r.best_pooled_ef)
            );
            reports.push(r);
        }
    }

    let mut buf = Vec::new();
    write_report_tsv(&reports, &mut buf).at(std::path::Path::new("<buffer>"))?;
    if let Some(p) = &a.per_reference {
        let mut per = Vec::new();
        write_per_reference_tsv(&reports, &mut per).at(p)?;
        write_file(p, &per)?;
    }
    emit(a.out.as_deref(), &buf)
}
