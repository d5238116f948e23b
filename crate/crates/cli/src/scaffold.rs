use std::fs;
use std::path::PathBuf;

use ped_core::smiles::scaffold_of;

use crate::error::{CliError, CliResult, WithPath};
use crate::files::{emit, require_input, require_output};

#[derive(clap::Args)]
pub struct Args {
    /// TSV with `id` and `smiles` columns.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: Args) -> CliResult<()> {
    require_input(&a.input)?;
    if let Some(p) = &a.out {
        require_output(p)?;
    }
    let bytes = fs::read(&a.input).at(&a.input)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| CliError::usage("MISSING_COLUMN", "empty input"))?;
    let mut columns: Vec<&str> = header.split('\t').collect();
    let find = |name: &str| columns.iter().position(|c| *c == name);
    let id_col =
        find("id").ok_or_else(|| CliError::usage("MISSING_COLUMN", "required column 'id' not in header"))?;
    let smiles_col = find("smiles")
        .ok_or_else(|| CliError::usage("MISSING_COLUMN", "required column 'smiles' not in header"))?;
    let key_col = find("scaffold_key");
    if key_col.is_none() {
        columns.push("scaffold_key");
    }
    let width = columns.len() - usize::from(key_col.is_none());

    let mut out = columns.join("\t");
    out.push('\n');
    let mut failures = 0usize;
    for (i, line) in lines {
        let mut fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != width {
            return Err(CliError::usage(
                "BAD_ROW",
                format!("line {}: expected {width} fields, found {}", i + 1, fields.len()),
            ));
        }
        let id = &fields[id_col];
        let key = match scaffold_of(&fields[smiles_col]) {
            Ok(k) => k,
            Err(e) => {
                eprintln!("warning: line {}: {id}: {e}", i + 1);
                failures += 1;
                format!("PARSE_FAIL:{id}")
            }
        };
        match key_col {
            Some(c) => fields[c] = key,
            None => fields.push(key),
        }
        out.push_str(&fields.join("\t"));
        out.push('\n');
    }
    if failures > 0 {
        eprintln!("{failures} SMILES could not be parsed");
    }
    emit(a.out.as_deref(), out.as_bytes())
}
