//! Embedding and metadata I/O.
//!
//! EMB1 layout (little-endian throughout):
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 4    | magic `EMB1`                                  |
//! | 4      | 2    | version, always 1                             |
//! | 6      | 2    | mode tag (0 raw, 1 2D, 2 3D, 3 concat)        |
//! | 8      | 8    | rows                                          |
//! | 16     | 4    | dim                                           |
//! | 20     | 4    | reserved, zero                                |
//! | 24     | ...  | `rows * dim` float32 values, row-major        |
//!
//! Metadata is a UTF-8 TSV with a mandatory header row. `id` and `role` are
//! required; `smiles`, `activity`, `scaffold_key` and `target` are text
//! columns; every other column is parsed as float64.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::dataset::{row_norm, Activity, EmbeddingMatrix, EmbeddingMode, MoleculeRecord, Role};

pub const MAGIC: [u8; 4] = *b"EMB1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Error)]
pub enum Emb1Error {
    #[error("BAD_MAGIC at byte 0: expected \"EMB1\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("BAD_VERSION at byte 4: expected 1, found {found}")]
    BadVersion { found: u16 },
    #[error("BAD_HEADER at byte {offset}: {reason}")]
    BadHeader { offset: usize, reason: String },
    #[error("TRUNCATED_PAYLOAD at byte {offset}: expected {expected} payload bytes, found {found}")]
    TruncatedPayload { offset: usize, expected: u64, found: u64 },
    #[error("IO_ERROR: {0}")]
    Io(#[from] io::Error),
}

impl Emb1Error {
    pub fn code(&self) -> &'static str {
        match self {
            Emb1Error::BadMagic { .. } => "BAD_MAGIC",
            Emb1Error::BadVersion { .. } => "BAD_VERSION",
            Emb1Error::BadHeader { .. } => "BAD_HEADER",
            Emb1Error::TruncatedPayload { .. } => "TRUNCATED_PAYLOAD",
            Emb1Error::Io(_) => "IO_ERROR",
        }
    }

    /// Byte offset the problem was detected at, when it concerns file content.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Emb1Error::BadMagic { .. } => Some(0),
            Emb1Error::BadVersion { .. } => Some(4),
            Emb1Error::BadHeader { offset, .. } | Emb1Error::TruncatedPayload { offset, .. } => Some(*offset),
            Emb1Error::Io(_) => None,
        }
    }
}

/// Parsed EMB1 header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emb1Header {
    pub mode: EmbeddingMode,
    pub rows: u64,
    pub dim: u32,
}

impl Emb1Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..6].copy_from_slice(&VERSION.to_le_bytes());
        out[6..8].copy_from_slice(&self.mode.tag().to_le_bytes());
        out[8..16].copy_from_slice(&self.rows.to_le_bytes());
        out[16..20].copy_from_slice(&self.dim.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, Emb1Error> {
        if bytes.len() < 4 || bytes[0..4] != MAGIC {
            let mut found = [0u8; 4];
            let n = bytes.len().min(4);
            found[..n].copy_from_slice(&bytes[..n]);
            return Err(Emb1Error::BadMagic { found });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Emb1Error::BadHeader {
                offset: bytes.len(),
                reason: format!("header needs {HEADER_LEN} bytes, file has {}", bytes.len()),
            });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Emb1Error::BadVersion { found: version });
        }
        let tag = u16::from_le_bytes([bytes[6], bytes[7]]);
        let mode = EmbeddingMode::from_tag(tag)
            .ok_or_else(|| Emb1Error::BadHeader { offset: 6, reason: format!("unknown mode tag {tag}") })?;
        let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
        if dim == 0 {
            return Err(Emb1Error::BadHeader { offset: 16, reason: "dim must be positive".into() });
        }
        if bytes[20..24] != [0, 0, 0, 0] {
            return Err(Emb1Error::BadHeader { offset: 20, reason: "reserved bytes must be zero".into() });
        }
        Ok(Emb1Header { mode, rows, dim })
    }

    /// Payload size in bytes, `None` on overflow.
    pub fn payload_len(&self) -> Option<u64> {
        self.rows.checked_mul(u64::from(self.dim))?.checked_mul(4)
    }
}

/// Decodes a complete EMB1 byte buffer.
pub fn decode_emb1(bytes: &[u8]) -> Result<EmbeddingMatrix, Emb1Error> {
    let header = Emb1Header::parse(bytes)?;
    let found = (bytes.len() - HEADER_LEN) as u64;
    let expected = header
        .payload_len()
        .ok_or_else(|| Emb1Error::BadHeader { offset: 8, reason: "rows * dim overflows".into() })?;
    if found != expected {
        return Err(Emb1Error::TruncatedPayload {
            offset: HEADER_LEN + found.min(expected) as usize,
            expected,
            found,
        });
    }
    let data =
        bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(EmbeddingMatrix::new(header.mode, header.dim as usize, data)
        .expect("header dim is positive and payload length checked"))
}

pub fn encode_emb1(m: &EmbeddingMatrix) -> Vec<u8> {
    let header = Emb1Header { mode: m.mode(), rows: m.rows() as u64, dim: m.dim() as u32 };
    let mut out = Vec::with_capacity(HEADER_LEN + m.data().len() * 4);
    out.extend_from_slice(&header.to_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_emb1(path: impl AsRef<Path>) -> Result<EmbeddingMatrix, Emb1Error> {
    decode_emb1(&fs::read(path)?)
}

pub fn write_emb1(m: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<(), Emb1Error> {
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(&encode_emb1(m))?;
    file.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("MISSING_COLUMN: required column '{0}' not in header")]
    MissingColumn(String),
    #[error("BAD_ENUM at line {line}, column '{column}': {value:?} is not one of {expected}")]
    BadEnum { line: usize, column: String, value: String, expected: &'static str },
    #[error("BAD_NUMBER at line {line}, column '{column}': {value:?}")]
    BadNumber { line: usize, column: String, value: String },
    #[error("BAD_ROW at line {line}: expected {expected} fields, found {found}")]
    BadRow { line: usize, expected: usize, found: usize },
    #[error("DUPLICATE_COLUMN: '{0}' appears twice in header")]
    DuplicateColumn(String),
    #[error("IO_ERROR: {0}")]
    Io(#[from] io::Error),
}

impl MetadataError {
    pub fn code(&self) -> &'static str {
        match self {
            MetadataError::MissingColumn(_) => "MISSING_COLUMN",
            MetadataError::BadEnum { .. } => "BAD_ENUM",
            MetadataError::BadNumber { .. } => "BAD_NUMBER",
            MetadataError::BadRow { .. } => "BAD_ROW",
            MetadataError::DuplicateColumn(_) => "DUPLICATE_COLUMN",
            MetadataError::Io(_) => "IO_ERROR",
        }
    }
}

enum Field {
    Id,
    Role,
    Smiles,
    Activity,
    ScaffoldKey,
    Target,
    Numeric(String),
}

fn strip_eol(line: &str) -> &str {
    let line = line.strip_suffix('\n').unwrap_or(line);
    line.strip_suffix('\r').unwrap_or(line)
}

fn non_empty(cell: &str) -> Option<String> {
    (!cell.is_empty()).then(|| cell.to_string())
}

pub fn read_metadata(path: impl AsRef<Path>) -> Result<Vec<MoleculeRecord>, MetadataError> {
    parse_metadata(BufReader::new(fs::File::open(path)?))
}

/// Parses a metadata TSV. Blank lines are skipped; empty numeric cells leave
/// the column absent for that row.
pub fn parse_metadata(reader: impl BufRead) -> Result<Vec<MoleculeRecord>, MetadataError> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !strip_eol(&line).is_empty() {
                    break line;
                }
            }
            None => return Err(MetadataError::MissingColumn("id".into())),
        }
    };
    let names: Vec<&str> = strip_eol(&header).split('\t').collect();
    let mut fields = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            return Err(MetadataError::DuplicateColumn(name.to_string()));
        }
        fields.push(match *name {
            "id" => Field::Id,
            "role" => Field::Role,
            "smiles" => Field::Smiles,
            "activity" => Field::Activity,
            "scaffold_key" => Field::ScaffoldKey,
            "target" => Field::Target,
            other => Field::Numeric(other.to_string()),
        });
    }
    for required in ["id", "role"] {
        if !names.contains(&required) {
            return Err(MetadataError::MissingColumn(required.into()));
        }
    }

    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line = strip_eol(&line);
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != fields.len() {
            return Err(MetadataError::BadRow { line: lineno, expected: fields.len(), found: cells.len() });
        }
        let mut rec = MoleculeRecord::new(String::new(), Role::Candidate);
        for (field, cell) in fields.iter().zip(&cells) {
            match field {
                Field::Id => rec.id = cell.to_string(),
                Field::Role => {
                    rec.role =
                        cell.parse().map_err(|e: crate::dataset::ParseEnumError| MetadataError::BadEnum {
                            line: lineno,
                            column: "role".into(),
                            value: cell.to_string(),
                            expected: e.expected,
                        })?
                }
                Field::Activity if cell.is_empty() => rec.activity = None,
                Field::Activity => {
                    rec.activity = Some(cell.parse::<Activity>().map_err(|e| MetadataError::BadEnum {
                        line: lineno,
                        column: "activity".into(),
                        value: cell.to_string(),
                        expected: e.expected,
                    })?)
                }
                Field::Smiles => rec.smiles = non_empty(cell),
                Field::ScaffoldKey => rec.scaffold_key = non_empty(cell),
                Field::Target => rec.target = non_empty(cell),
                Field::Numeric(_) if cell.is_empty() => {}
                Field::Numeric(name) => {
                    let v: f64 = cell.trim().parse().map_err(|_| MetadataError::BadNumber {
                        line: lineno,
                        column: name.clone(),
                        value: cell.to_string(),
                    })?;
                    rec.columns.insert(name.clone(), v);
                }
            }
        }
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConcatError {
    #[error("ROW_COUNT_MISMATCH: 2D matrix has {left} rows, 3D matrix has {right}")]
    RowCountMismatch { left: usize, right: usize },
    #[error("ZERO_NORM_ROW: row {row} of the {source_mode} matrix has zero norm")]
    ZeroNormRow { row: usize, source_mode: EmbeddingMode },
}

impl ConcatError {
    pub fn code(&self) -> &'static str {
        match self {
            ConcatError::RowCountMismatch { .. } => "ROW_COUNT_MISMATCH",
            ConcatError::ZeroNormRow { .. } => "ZERO_NORM_ROW",
        }
    }
}

/// Rows whose norm is already this close to 1 are treated as unit vectors and
/// copied unchanged, which keeps normalization idempotent under float32 rounding.
const UNIT_NORM_SLACK: f64 = 4.0 * f32::EPSILON as f64;

/// Appends `row / ||row||` to `out`. Returns `false` for a zero (or non-finite) norm.
pub fn normalize_into(row: &[f32], out: &mut Vec<f32>) -> bool {
    let norm = row_norm(row);
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    if (norm - 1.0).abs() <= UNIT_NORM_SLACK {
        out.extend_from_slice(row);
    } else {
        out.extend(row.iter().map(|&x| (f64::from(x) / norm) as f32));
    }
    true
}

/// Builds the concat representation: each row is the unit-normalized 2D row
/// followed by the unit-normalized 3D row.
pub fn make_concat(e2d: &EmbeddingMatrix, e3d: &EmbeddingMatrix) -> Result<EmbeddingMatrix, ConcatError> {
    if e2d.rows() != e3d.rows() {
        return Err(ConcatError::RowCountMismatch { left: e2d.rows(), right: e3d.rows() });
    }
    let dim = e2d.dim() + e3d.dim();
    let mut data = Vec::with_capacity(e2d.rows() * dim);
    for (i, (a, b)) in e2d.iter_rows().zip(e3d.iter_rows()).enumerate() {
        if !normalize_into(a, &mut data) {
            return Err(ConcatError::ZeroNormRow { row: i, source_mode: e2d.mode() });
        }
        if !normalize_into(b, &mut data) {
            return Err(ConcatError::ZeroNormRow { row: i, source_mode: e3d.mode() });
        }
    }
    Ok(EmbeddingMatrix::new(EmbeddingMode::Concat, dim, data).expect("positive dim"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(mode: EmbeddingMode, dim: usize, data: Vec<f32>) -> EmbeddingMatrix {
        EmbeddingMatrix::new(mode, dim, data).unwrap()
    }

    #[test]
    fn one_by_one_matrix_is_28_bytes() {
        let bytes = encode_emb1(&matrix(EmbeddingMode::Raw, 1, vec![0.0]));
        assert_eq!(bytes.len(), 28);
        assert_eq!(&bytes[0..4], b"EMB1");
        assert_eq!(&bytes[4..6], &[1, 0]);
    }

    #[test]
    fn empty_matrix_is_header_only() {
        let m = matrix(EmbeddingMode::ThreeD, 768, vec![]);
        let bytes = encode_emb1(&m);
        assert_eq!(bytes.len(), HEADER_LEN);
        let back = decode_emb1(&bytes).unwrap();
        assert_eq!(back.rows(), 0);
        assert_eq!(back.dim(), 768);
        assert_eq!(back.mode(), EmbeddingMode::ThreeD);
    }

    #[test]
    fn nan_survives_round_trip() {
        let nan = f32::from_bits(0x7fc0_1234);
        let back = decode_emb1(&encode_emb1(&matrix(EmbeddingMode::Raw, 2, vec![nan, 1.0]))).unwrap();
        assert_eq!(back.data()[0].to_bits(), nan.to_bits());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb1");
        let m = matrix(EmbeddingMode::TwoD, 3, vec![1.0, -2.5, 3.25, 0.0, 1e-30, -0.0]);
        write_emb1(&m, &path).unwrap();
        assert_eq!(read_emb1(&path).unwrap(), m);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_emb1(&matrix(EmbeddingMode::Raw, 1, vec![0.0]));
        bytes[0] = b'X';
        let err = decode_emb1(&bytes).unwrap_err();
        assert_eq!(err.code(), "BAD_MAGIC");
        assert_eq!(err.offset(), Some(0));
    }

    #[test]
    fn bad_version() {
        let mut bytes = encode_emb1(&matrix(EmbeddingMode::Raw, 1, vec![0.0]));
        bytes[4] = 2;
        assert_eq!(decode_emb1(&bytes).unwrap_err().code(), "BAD_VERSION");
    }

    #[test]
    fn short_payload_is_truncated() {
        let header = Emb1Header { mode: EmbeddingMode::Raw, rows: 2, dim: 3 };
        let mut bytes = header.to_bytes().to_vec();
        bytes.extend_from_slice(&[0u8; 20]);
        let err = decode_emb1(&bytes).unwrap_err();
        assert_eq!(err.code(), "TRUNCATED_PAYLOAD");
        assert_eq!(err.offset(), Some(HEADER_LEN + 20));
    }

    #[test]
    fn reserved_and_mode_checked() {
        let mut bytes = encode_emb1(&matrix(EmbeddingMode::Raw, 1, vec![0.0]));
        bytes[21] = 1;
        assert_eq!(decode_emb1(&bytes).unwrap_err().offset(), Some(20));
        let mut bytes = encode_emb1(&matrix(EmbeddingMode::Raw, 1, vec![0.0]));
        bytes[6] = 9;
        assert_eq!(decode_emb1(&bytes).unwrap_err().offset(), Some(6));
    }

    #[test]
    fn metadata_minimal() {
        let recs = parse_metadata("id\trole\nm1\tREFERENCE\n".as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].role, Role::Reference);
        assert_eq!(recs[0].id, "m1");
    }

    #[test]
    fn metadata_bad_role() {
        let err = parse_metadata("id\trole\nm1\tQUERY\n".as_bytes()).unwrap_err();
        assert_eq!(err.code(), "BAD_ENUM");
    }

    #[test]
    fn metadata_numeric_and_text_columns() {
        let text = "id\trole\tsmiles\tactivity\trocs_comb\tmw\r\n\
                    m1\tCANDIDATE\tCC,O\tACTIVE\t1.35\t\r\n\
                    m2\tCANDIDATE\t\t\t0.5\t300\r\n";
        let recs = parse_metadata(text.as_bytes()).unwrap();
        assert_eq!(recs[0].columns["rocs_comb"], 1.35);
        assert_eq!(recs[0].smiles.as_deref(), Some("CC,O"));
        assert_eq!(recs[0].activity, Some(Activity::Active));
        assert!(!recs[0].columns.contains_key("mw"));
        assert_eq!(recs[1].activity, None);
        assert_eq!(recs[1].smiles, None);
        assert_eq!(recs[1].value("mw"), Some(300.0));
    }

    #[test]
    fn metadata_errors() {
        let err = parse_metadata("id\tsmiles\nm1\tC\n".as_bytes()).unwrap_err();
        assert_eq!(err.code(), "MISSING_COLUMN");
        let err = parse_metadata("id\trole\tmw\nm1\tCANDIDATE\theavy\n".as_bytes()).unwrap_err();
        match err {
            MetadataError::BadNumber { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, "mw");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_metadata("id\trole\nm1\n".as_bytes()).unwrap_err();
        assert_eq!(err.code(), "BAD_ROW");
        let err = parse_metadata("id\trole\tactivity\nm1\tCANDIDATE\tmaybe\n".as_bytes()).unwrap_err();
        assert_eq!(err.code(), "BAD_ENUM");
    }

    #[test]
    fn concat_of_3_4_5() {
        let a = matrix(EmbeddingMode::TwoD, 2, vec![3.0, 4.0]);
        let b = matrix(EmbeddingMode::ThreeD, 2, vec![0.0, 5.0]);
        let c = make_concat(&a, &b).unwrap();
        assert_eq!(c.mode(), EmbeddingMode::Concat);
        assert_eq!(c.data(), &[0.6, 0.8, 0.0, 1.0]);
    }

    #[test]
    fn concat_zero_row() {
        let a = matrix(EmbeddingMode::TwoD, 2, vec![3.0, 4.0, 1.0, 1.0]);
        let b = matrix(EmbeddingMode::ThreeD, 2, vec![0.0, 5.0, 0.0, 0.0]);
        assert_eq!(
            make_concat(&a, &b).unwrap_err(),
            ConcatError::ZeroNormRow { row: 1, source_mode: EmbeddingMode::ThreeD }
        );
        let short = matrix(EmbeddingMode::ThreeD, 2, vec![0.0, 5.0]);
        assert_eq!(make_concat(&a, &short).unwrap_err().code(), "ROW_COUNT_MISMATCH");
    }

    fn nonzero_rows(dim: usize) -> impl Strategy<Value = Vec<Vec<f32>>> {
        prop::collection::vec(
            prop::collection::vec(-100.0f32..100.0, dim)
                .prop_filter("non-zero", |r| r.iter().any(|&x| x.abs() > 1e-3)),
            1..12,
        )
    }

    proptest! {
        #[test]
        fn emb1_round_trip_is_bit_exact(
            dim in 1usize..9,
            bits in prop::collection::vec(any::<u32>(), 0..64),
        ) {
            let rows = bits.len() / dim;
            let data: Vec<f32> = bits[..rows * dim].iter().map(|&b| f32::from_bits(b)).collect();
            let m = matrix(EmbeddingMode::Raw, dim, data);
            let back = decode_emb1(&encode_emb1(&m)).unwrap();
            prop_assert_eq!(back.rows(), m.rows());
            let a: Vec<u32> = m.data().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn concat_rows_have_norm_sqrt2_and_split_renormalizes_exactly(
            rows2 in nonzero_rows(5),
            rows3 in nonzero_rows(3),
        ) {
            let n = rows2.len().min(rows3.len());
            let a = EmbeddingMatrix::from_rows(EmbeddingMode::TwoD, &rows2[..n]).unwrap();
            let b = EmbeddingMatrix::from_rows(EmbeddingMode::ThreeD, &rows3[..n]).unwrap();
            let c = make_concat(&a, &b).unwrap();
            prop_assert_eq!(c.dim(), 8);
            for (i, row) in c.iter_rows().enumerate() {
                prop_assert!((row_norm(row) - std::f64::consts::SQRT_2).abs() < 1e-6);
                let mut left = Vec::new();
                let mut right = Vec::new();
                normalize_into(&row[..5], &mut left);
                normalize_into(&row[5..], &mut right);
                let mut expect_left = Vec::new();
                let mut expect_right = Vec::new();
                normalize_into(a.row(i), &mut expect_left);
                normalize_into(b.row(i), &mut expect_right);
                prop_assert_eq!(left, expect_left);
                prop_assert_eq!(right, expect_right);
            }
        }
    }
}
