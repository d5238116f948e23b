use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ped_core::dataset::IssueKind;
use ped_core::{read_emb1, read_metadata, validate_dataset, EmbeddingMatrix, LibraryDataset, MoleculeRecord};

use crate::error::{CliError, CliResult, WithPath, EXIT_IO};

pub fn require_input(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError {
            code: "IO_ERROR",
            message: format!("{}: no such file", path.display()),
            exit: EXIT_IO,
        })
    }
}

pub fn require_output(path: &Path) -> CliResult<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if parent.is_dir() && !path.is_dir() {
        Ok(())
    } else {
        Err(CliError {
            code: "IO_ERROR",
            message: format!("{}: cannot write here", path.display()),
            exit: EXIT_IO,
        })
    }
}

/// `<prefix><suffix>`, e.g. `out/run1` + `.matrix.tsv`.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).at(path)
}

/// Writes to `path`, or to stdout when none is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).at(Path::new("<stdout>"))
        }
    }
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "target".into())
}

pub fn load_embeddings(paths: &[PathBuf]) -> CliResult<Vec<EmbeddingMatrix>> {
    let mut out: Vec<EmbeddingMatrix> = Vec::new();
    for p in paths {
        let m = read_emb1(p).at(p)?;
        if out.iter().any(|o| o.mode() == m.mode()) {
            return Err(CliError::usage(
                "DUPLICATE_MODE",
                format!("{}: a {} embedding was already given", p.display(), m.mode()),
            ));
        }
        out.push(m);
    }
    Ok(out)
}

/// Metadata plus embeddings, validated. Structural problems are fatal; norm
/// findings are printed as warnings.
pub fn load_dataset(metadata: &Path, embeddings: &[PathBuf]) -> CliResult<LibraryDataset> {
    let records = read_metadata(metadata).at(metadata)?;
    let matrices = load_embeddings(embeddings)?;
    let ds = LibraryDataset::new(file_stem(metadata), records, matrices);
    let report = validate_dataset(&ds);
    let mut fatal = None;
    for issue in &report.issues {
        match issue.kind {
            IssueKind::ConcatNorm | IssueKind::ZeroNormRow => eprintln!("warning: {issue}"),
            _ => {
                eprintln!("error: {issue}");
                fatal.get_or_insert(issue.kind);
            }
        }
    }
    match fatal {
        Some(kind) => {
            Err(CliError::usage(kind.code(), format!("{}: dataset failed validation", metadata.display())))
        }
        None => Ok(ds),
    }
}

/// Row indices per target, in order of first appearance. Rows without a
/// target column value belong to `default`.
pub fn target_groups(records: &[MoleculeRecord], default: &str) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let name = r.target.as_deref().unwrap_or(default);
        match groups.iter_mut().find(|(n, _)| n == name) {
            Some((_, rows)) => rows.push(i),
            None => groups.push((name.to_string(), vec![i])),
        }
    }
    groups
}

/// The dataset restricted to one target. Without `wanted` the table must
/// hold a single target.
pub fn select_target(ds: &LibraryDataset, wanted: Option<&str>) -> CliResult<LibraryDataset> {
    let groups = target_groups(ds.records(), ds.target_name());
    let (name, rows) = match wanted {
        Some(w) => groups
            .into_iter()
            .find(|(n, _)| n == w)
            .ok_or_else(|| CliError::usage("UNKNOWN_TARGET", format!("no rows for target '{w}'")))?,
        None if groups.len() <= 1 => {
            return Ok(ds.subset(ds.target_name(), &(0..ds.len()).collect::<Vec<_>>()))
        }
        None => {
            return Err(CliError::usage(
                "AMBIGUOUS_TARGET",
                format!("metadata holds {} targets; pick one with --target", groups.len()),
            ))
        }
    };
    Ok(ds.subset(name, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ped_core::Role;

    #[test]
    fn groups_follow_first_appearance() {
        let mut a = MoleculeRecord::new("a", Role::Reference);
        a.target = Some("t2".into());
        let b = MoleculeRecord::new("b", Role::Candidate);
        let mut c = MoleculeRecord::new("c", Role::Candidate);
        c.target = Some("t2".into());
        let groups = target_groups(&[a, b, c], "meta");
        assert_eq!(groups, vec![("t2".to_string(), vec![0, 2]), ("meta".to_string(), vec![1])]);
    }

    #[test]
    fn suffixes_append() {
        assert_eq!(with_suffix(Path::new("out/run"), ".matrix.tsv"), PathBuf::from("out/run.matrix.tsv"));
    }
}
