//! Core domain types: molecule records, embedding matrices and the joined
//! library view, plus structural validation of that view.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Role a molecule plays in a screening run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Reference,
    Candidate,
}

/// Activity label used by enrichment computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Active,
    Inactive,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("'{value}' is not one of {expected}")]
pub struct ParseEnumError {
    pub value: String,
    pub expected: &'static str,
}

impl FromStr for Role {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "REFERENCE" => Ok(Role::Reference),
            "CANDIDATE" => Ok(Role::Candidate),
            _ => Err(ParseEnumError { value: s.to_string(), expected: "REFERENCE|CANDIDATE" }),
        }
    }
}

impl FromStr for Activity {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ACTIVE" => Ok(Activity::Active),
            "INACTIVE" => Ok(Activity::Inactive),
            _ => Err(ParseEnumError { value: s.to_string(), expected: "ACTIVE|INACTIVE" }),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Reference => "REFERENCE",
            Role::Candidate => "CANDIDATE",
        })
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activity::Active => "ACTIVE",
            Activity::Inactive => "INACTIVE",
        })
    }
}

/// One row of the metadata table.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeRecord {
    pub id: String,
    pub smiles: Option<String>,
    pub role: Role,
    pub activity: Option<Activity>,
    /// Free-form numeric columns (`rocs_comb`, `total_score`, `mw`, ...).
    pub columns: BTreeMap<String, f64>,
    pub scaffold_key: Option<String>,
    /// Target this row belongs to when one table carries several targets.
    pub target: Option<String>,
}

impl MoleculeRecord {
    pub fn new(id: impl Into<String>, role: Role) -> Self {
        MoleculeRecord {
            id: id.into(),
            smiles: None,
            role,
            activity: None,
            columns: BTreeMap::new(),
            scaffold_key: None,
            target: None,
        }
    }

    pub fn with_activity(mut self, activity: Activity) -> Self {
        self.activity = Some(activity);
        self
    }

    pub fn with_smiles(mut self, smiles: impl Into<String>) -> Self {
        self.smiles = Some(smiles.into());
        self
    }

    pub fn with_column(mut self, name: impl Into<String>, value: f64) -> Self {
        self.columns.insert(name.into(), value);
        self
    }

    /// Column value, `None` when absent or NaN.
    pub fn value(&self, column: &str) -> Option<f64> {
        self.columns.get(column).copied().filter(|v| !v.is_nan())
    }
}

/// Representation mode an embedding matrix was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmbeddingMode {
    Raw,
    TwoD,
    ThreeD,
    Concat,
}

impl EmbeddingMode {
    pub const ALL: [EmbeddingMode; 4] =
        [EmbeddingMode::Raw, EmbeddingMode::TwoD, EmbeddingMode::ThreeD, EmbeddingMode::Concat];

    /// Tag stored in the EMB1 header.
    pub fn tag(self) -> u16 {
        match self {
            EmbeddingMode::Raw => 0,
            EmbeddingMode::TwoD => 1,
            EmbeddingMode::ThreeD => 2,
            EmbeddingMode::Concat => 3,
        }
    }

    pub fn from_tag(tag: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            EmbeddingMode::Raw => "raw",
            EmbeddingMode::TwoD => "2d",
            EmbeddingMode::ThreeD => "3d",
            EmbeddingMode::Concat => "concat",
        }
    }
}

impl FromStr for EmbeddingMode {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or(ParseEnumError { value: s.to_string(), expected: "raw|2d|3d|concat" })
    }
}

impl fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("data length {len} is not a multiple of dim {dim}")]
    RaggedData { len: usize, dim: usize },
}

/// Dense row-major float32 matrix, one row per molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    mode: EmbeddingMode,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(mode: EmbeddingMode, dim: usize, data: Vec<f32>) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::ZeroDim);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(MatrixError::RaggedData { len: data.len(), dim });
        }
        Ok(EmbeddingMatrix { mode, dim, data })
    }

    pub fn from_rows(mode: EmbeddingMode, rows: &[Vec<f32>]) -> Result<Self, MatrixError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            let len = rows.iter().map(Vec::len).sum();
            return Err(MatrixError::RaggedData { len, dim });
        }
        Self::new(mode, dim, rows.concat())
    }

    pub fn mode(&self) -> EmbeddingMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix { mode: self.mode, dim: self.dim, data }
    }

    pub fn with_mode(mut self, mode: EmbeddingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

/// L2 norm of a float32 row, accumulated in float64.
pub fn row_norm(row: &[f32]) -> f64 {
    row.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Metadata joined with embedding matrices by row order.
#[derive(Debug, Clone)]
pub struct LibraryDataset {
    target_name: String,
    records: Vec<MoleculeRecord>,
    embeddings: BTreeMap<EmbeddingMode, EmbeddingMatrix>,
}

impl LibraryDataset {
    pub fn new(
        target_name: impl Into<String>,
        records: Vec<MoleculeRecord>,
        embeddings: impl IntoIterator<Item = EmbeddingMatrix>,
    ) -> Self {
        LibraryDataset {
            target_name: target_name.into(),
            records,
            embeddings: embeddings.into_iter().map(|m| (m.mode(), m)).collect(),
        }
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn records(&self) -> &[MoleculeRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn embedding(&self, mode: EmbeddingMode) -> Option<&EmbeddingMatrix> {
        self.embeddings.get(&mode)
    }

    pub fn embeddings(&self) -> impl Iterator<Item = &EmbeddingMatrix> + '_ {
        self.embeddings.values()
    }

    pub fn indices_with_role(&self, role: Role) -> Vec<usize> {
        self.records.iter().enumerate().filter(|(_, r)| r.role == role).map(|(i, _)| i).collect()
    }

    pub fn reference_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Reference)
    }

    pub fn candidate_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Candidate)
    }

    /// Sub-dataset restricted to `indices`, keeping every embedding aligned.
    pub fn subset(&self, target_name: impl Into<String>, indices: &[usize]) -> LibraryDataset {
        LibraryDataset {
            target_name: target_name.into(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            embeddings: self.embeddings.iter().map(|(&mode, m)| (mode, m.select_rows(indices))).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueKind {
    EmptyId,
    DuplicateId,
    RowCountMismatch,
    NonFiniteEmbedding,
    ZeroNormRow,
    ConcatNorm,
}

impl IssueKind {
    pub fn code(self) -> &'static str {
        match self {
            IssueKind::EmptyId => "EMPTY_ID",
            IssueKind::DuplicateId => "DUPLICATE_ID",
            IssueKind::RowCountMismatch => "ROW_COUNT_MISMATCH",
            IssueKind::NonFiniteEmbedding => "NON_FINITE_EMBEDDING",
            IssueKind::ZeroNormRow => "ZERO_NORM_ROW",
            IssueKind::ConcatNorm => "CONCAT_NORM",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    /// Record (or embedding row) index the issue was found at.
    pub row: Option<usize>,
    /// Embedding mode or column the issue concerns.
    pub location: Option<String>,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.code())?;
        if let Some(row) = self.row {
            write!(f, " row={row}")?;
        }
        if let Some(loc) = &self.location {
            write!(f, " at={loc}")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }
}

const CONCAT_NORM_TOLERANCE: f64 = 1e-4;

/// Collects every structural problem in `ds`. Never fails.
pub fn validate_dataset(ds: &LibraryDataset) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, rec) in ds.records.iter().enumerate() {
        if rec.id.is_empty() {
            issues.push(ValidationIssue {
                kind: IssueKind::EmptyId,
                row: Some(i),
                location: None,
                message: "record id is empty".into(),
            });
            continue;
        }
        if let Some(&first) = seen.get(rec.id.as_str()) {
            issues.push(ValidationIssue {
                kind: IssueKind::DuplicateId,
                row: Some(i),
                location: None,
                message: format!("id '{}' first seen at row {first}", rec.id),
            });
        } else {
            seen.insert(&rec.id, i);
        }
    }

    for m in ds.embeddings.values() {
        let mode = m.mode().name().to_string();
        if m.rows() != ds.records.len() {
            issues.push(ValidationIssue {
                kind: IssueKind::RowCountMismatch,
                row: None,
                location: Some(mode.clone()),
                message: format!("{} embedding rows for {} records", m.rows(), ds.records.len()),
            });
        }
        for (i, row) in m.iter_rows().enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                issues.push(ValidationIssue {
                    kind: IssueKind::NonFiniteEmbedding,
                    row: Some(i),
                    location: Some(mode.clone()),
                    message: "row contains NaN or infinity".into(),
                });
                continue;
            }
            let norm = row_norm(row);
            if norm == 0.0 {
                issues.push(ValidationIssue {
                    kind: IssueKind::ZeroNormRow,
                    row: Some(i),
                    location: Some(mode.clone()),
                    message: "row has zero norm".into(),
                });
            } else if m.mode() == EmbeddingMode::Concat
                && (norm - std::f64::consts::SQRT_2).abs() > CONCAT_NORM_TOLERANCE
            {
                issues.push(ValidationIssue {
                    kind: IssueKind::ConcatNorm,
                    row: Some(i),
                    location: Some(mode.clone()),
                    message: format!("concat row norm {norm} is not sqrt(2)"),
                });
            }
        }
    }
    ValidationReport { issues }
}
