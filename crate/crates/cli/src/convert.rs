use std::fs;
use std::path::PathBuf;

use ped_core::{write_emb1, EmbeddingMatrix, EmbeddingMode};

use crate::error::{CliError, CliResult, WithPath};
use crate::files::{require_input, require_output};

#[derive(clap::Args)]
pub struct Args {
    /// One row per line, comma-separated floats.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "raw")]
    mode: EmbeddingMode,
}

fn parse_rows(text: &str) -> CliResult<Vec<f32>> {
    let mut data = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let start = data.len();
        for cell in line.split(',') {
            let v: f32 = cell.trim().parse().map_err(|_| {
                CliError::usage("BAD_NUMBER", format!("line {}: {:?} is not a number", i + 1, cell.trim()))
            })?;
            if !v.is_finite() {
                return Err(CliError::usage("NON_FINITE_INPUT", format!("line {}: {v}", i + 1)));
            }
            data.push(v);
        }
        let width = data.len() - start;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(CliError::usage(
                    "RAGGED_ROW",
                    format!("line {}: {width} values, expected {d}", i + 1),
                ))
            }
            Some(_) => {}
        }
    }
    if data.is_empty() {
        return Err(CliError::usage("EMPTY_INPUT", "no rows"));
    }
    Ok(data)
}

pub fn run(a: Args) -> CliResult<()> {
    require_input(&a.input)?;
    require_output(&a.out)?;
    let text = fs::read_to_string(&a.input).at(&a.input)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).map_or(0, |l| l.split(',').count());
    let data = parse_rows(&text)?;
    let m = EmbeddingMatrix::new(a.mode, first, data)
        .map_err(|e| CliError::usage("BAD_MATRIX", e.to_string()))?;
    write_emb1(&m, &a.out).at(&a.out)?;
    eprintln!("{} rows x {} dims ({}) -> {}", m.rows(), m.dim(), m.mode(), a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_parse() {
        assert_eq!(parse_rows("1,2\n3, 4\n\n").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(parse_rows("1,2\n3\n").unwrap_err().code, "RAGGED_ROW");
        assert_eq!(parse_rows("1,x\n").unwrap_err().code, "BAD_NUMBER");
        assert_eq!(parse_rows("1,nan\n").unwrap_err().code, "NON_FINITE_INPUT");
        assert_eq!(parse_rows("\n").unwrap_err().code, "EMPTY_INPUT");
    }
}
