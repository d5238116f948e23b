//! Exhaustive embedding distances, best-pooling over reference ligands and
//! stable rankings.
//!
//! All arithmetic is done in float64 from float32 inputs. Reductions use a
//! fixed set of accumulator lanes combined in a fixed order, so every value
//! is bit-identical whatever the rayon pool size is.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{EmbeddingMatrix, ParseEnumError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DistanceKind {
    Cosine,
    #[default]
    Euclidean,
}

impl DistanceKind {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Cosine => "cosine",
            DistanceKind::Euclidean => "euclidean",
        }
    }
}

impl FromStr for DistanceKind {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(DistanceKind::Cosine),
            "euclidean" => Ok(DistanceKind::Euclidean),
            _ => Err(ParseEnumError { value: s.to_string(), expected: "cosine|euclidean" }),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of a pooled computation a row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    Candidate,
    Reference,
}

impl fmt::Display for RowSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSource::Candidate => "candidate",
            RowSource::Reference => "reference",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistanceError {
    #[error("DIM_MISMATCH: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("ZERO_NORM: {source_kind} row {row} has zero or non-finite norm")]
    ZeroNorm { source_kind: RowSource, row: usize },
    #[error("NO_REFERENCES: at least one reference row is required")]
    NoReferences,
    #[error("NON_FINITE_VALUE at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
}

impl DistanceError {
    pub fn code(&self) -> &'static str {
        match self {
            DistanceError::DimMismatch { .. } => "DIM_MISMATCH",
            DistanceError::ZeroNorm { .. } => "ZERO_NORM",
            DistanceError::NoReferences => "NO_REFERENCES",
            DistanceError::NonFiniteValue { .. } => "NON_FINITE_VALUE",
        }
    }
}

const LANES: usize = 8;

#[inline]
fn reduce(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))
}

#[inline]
fn dot(u: &[f32], v: &[f32]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let (uc, ur) = u.split_at(u.len() - u.len() % LANES);
    let (vc, vr) = v.split_at(uc.len());
    for (a, b) in uc.chunks_exact(LANES).zip(vc.chunks_exact(LANES)) {
        for l in 0..LANES {
            acc[l] += f64::from(a[l]) * f64::from(b[l]);
        }
    }
    for (l, (&a, &b)) in ur.iter().zip(vr).enumerate() {
        acc[l] += f64::from(a) * f64::from(b);
    }
    reduce(acc)
}

#[inline]
fn squared_norm(u: &[f32]) -> f64 {
    dot(u, u)
}

#[inline]
fn squared_euclidean(u: &[f32], v: &[f32]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let (uc, ur) = u.split_at(u.len() - u.len() % LANES);
    let (vc, vr) = v.split_at(uc.len());
    for (a, b) in uc.chunks_exact(LANES).zip(vc.chunks_exact(LANES)) {
        for l in 0..LANES {
            let d = f64::from(a[l]) - f64::from(b[l]);
            acc[l] += d * d;
        }
    }
    for (l, (&a, &b)) in ur.iter().zip(vr).enumerate() {
        let d = f64::from(a) - f64::from(b);
        acc[l] += d * d;
    }
    reduce(acc)
}

#[inline]
fn cosine_from_parts(dot: f64, sq_u: f64, sq_v: f64) -> f64 {
    // sqrt(a * a) == a exactly in IEEE arithmetic, so identical rows give 0.
    (1.0 - dot / (sq_u * sq_v).sqrt()).clamp(0.0, 2.0)
}

#[inline]
fn usable_norm(sq: f64) -> bool {
    sq > 0.0 && sq.is_finite()
}

/// Distance between two float32 vectors.
pub fn distance(u: &[f32], v: &[f32], kind: DistanceKind) -> Result<f64, DistanceError> {
    if u.len() != v.len() {
        return Err(DistanceError::DimMismatch { left: u.len(), right: v.len() });
    }
    match kind {
        DistanceKind::Euclidean => Ok(squared_euclidean(u, v).sqrt()),
        DistanceKind::Cosine => {
            let (su, sv) = (squared_norm(u), squared_norm(v));
            if !usable_norm(su) {
                return Err(DistanceError::ZeroNorm { source_kind: RowSource::Candidate, row: 0 });
            }
            if !usable_norm(sv) {
                return Err(DistanceError::ZeroNorm { source_kind: RowSource::Reference, row: 0 });
            }
            Ok(cosine_from_parts(dot(u, v), su, sv))
        }
    }
}

/// Candidates ordered by pooled distance.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRanking {
    /// Candidate indices, ascending by pooled value, ties by index.
    pub order: Vec<usize>,
    pub pooled: Vec<f64>,
    /// Row-major `candidates x references`, when retained.
    pub per_reference: Option<Vec<f64>>,
    pub n_references: usize,
}

impl PooledRanking {
    pub fn len(&self) -> usize {
        self.pooled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pooled.is_empty()
    }

    /// Distance of every candidate to reference `j`, if per-reference values were kept.
    pub fn reference_column(&self, j: usize) -> Option<Vec<f64>> {
        let m = self.per_reference.as_ref()?;
        if j >= self.n_references {
            return None;
        }
        Some(m.iter().skip(j).step_by(self.n_references).copied().collect())
    }
}

/// Sort direction for [`rank_by`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascending,
    Descending,
}

/// Stable ranking of `values`: ties are broken by ascending index. NaN sorts last
/// in either direction.
pub fn rank_by(values: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    let key = |x: f64| if x.is_nan() { f64::INFINITY } else { x };
    order.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        let nan_order = x.is_nan().cmp(&y.is_nan());
        if nan_order != Ordering::Equal {
            return nan_order;
        }
        let primary = match direction {
            Direction::Ascending => key(x).total_cmp(&key(y)),
            Direction::Descending => key(y).total_cmp(&key(x)),
        };
        primary.then(a.cmp(&b))
    });
    order
}

struct Prepared<'a> {
    refs: &'a EmbeddingMatrix,
    ref_sq: Vec<f64>,
    kind: DistanceKind,
}

impl<'a> Prepared<'a> {
    fn new(
        cands: &EmbeddingMatrix,
        refs: &'a EmbeddingMatrix,
        kind: DistanceKind,
    ) -> Result<Self, DistanceError> {
        if cands.dim() != refs.dim() {
            return Err(DistanceError::DimMismatch { left: cands.dim(), right: refs.dim() });
        }
        if refs.rows() == 0 {
            return Err(DistanceError::NoReferences);
        }
        let mut ref_sq = Vec::new();
        if kind == DistanceKind::Cosine {
            ref_sq = refs.iter_rows().map(squared_norm).collect();
            if let Some(row) = ref_sq.iter().position(|&s| !usable_norm(s)) {
                return Err(DistanceError::ZeroNorm { source_kind: RowSource::Reference, row });
            }
            if let Some(row) = cands.iter_rows().position(|r| !usable_norm(squared_norm(r))) {
                return Err(DistanceError::ZeroNorm { source_kind: RowSource::Candidate, row });
            }
        }
        Ok(Prepared { refs, ref_sq, kind })
    }

    #[inline]
    fn fill(&self, cand: &[f32], out: &mut [f64]) {
        match self.kind {
            DistanceKind::Euclidean => {
                for (o, r) in out.iter_mut().zip(self.refs.iter_rows()) {
                    *o = squared_euclidean(cand, r).sqrt();
                }
            }
            DistanceKind::Cosine => {
                let sq = squared_norm(cand);
                for ((o, r), &rs) in out.iter_mut().zip(self.refs.iter_rows()).zip(&self.ref_sq) {
                    *o = cosine_from_parts(dot(cand, r), sq, rs);
                }
            }
        }
    }

    #[inline]
    fn pooled(&self, cand: &[f32]) -> f64 {
        let mut best = f64::INFINITY;
        match self.kind {
            DistanceKind::Euclidean => {
                for r in self.refs.iter_rows() {
                    best = best.min(squared_euclidean(cand, r).sqrt());
                }
            }
            DistanceKind::Cosine => {
                let sq = squared_norm(cand);
                for (r, &rs) in self.refs.iter_rows().zip(&self.ref_sq) {
                    best = best.min(cosine_from_parts(dot(cand, r), sq, rs));
                }
            }
        }
        best
    }
}

/// Minimum distance of every candidate over all references, with the full ranking.
pub fn best_pool(
    cands: &EmbeddingMatrix,
    refs: &EmbeddingMatrix,
    kind: DistanceKind,
) -> Result<PooledRanking, DistanceError> {
    let prep = Prepared::new(cands, refs, kind)?;
    let pooled: Vec<f64> = cands.data().par_chunks(cands.dim()).map(|c| prep.pooled(c)).collect();
    let order = rank_by(&pooled, Direction::Ascending);
    Ok(PooledRanking { order, pooled, per_reference: None, n_references: refs.rows() })
}

/// Like [`best_pool`] but keeps the full candidate-by-reference distance matrix.
pub fn best_pool_detailed(
    cands: &EmbeddingMatrix,
    refs: &EmbeddingMatrix,
    kind: DistanceKind,
) -> Result<PooledRanking, DistanceError> {
    let prep = Prepared::new(cands, refs, kind)?;
    let n_refs = refs.rows();
    let mut per_ref = vec![0.0f64; cands.rows() * n_refs];
    per_ref
        .par_chunks_mut(n_refs)
        .zip(cands.data().par_chunks(cands.dim()))
        .for_each(|(out, c)| prep.fill(c, out));
    let pooled: Vec<f64> =
        per_ref.chunks_exact(n_refs).map(|row| row.iter().fold(f64::INFINITY, |a, &b| a.min(b))).collect();
    let order = rank_by(&pooled, Direction::Ascending);
    Ok(PooledRanking { order, pooled, per_reference: Some(per_ref), n_references: n_refs })
}

/// Row-wise maximum of a candidates x references similarity table.
pub fn pool_similarity_column(values: &[Vec<f64>]) -> Result<Vec<f64>, DistanceError> {
    values
        .iter()
        .enumerate()
        .map(|(row, vals)| {
            if vals.is_empty() {
                return Err(DistanceError::NoReferences);
            }
            let mut best = f64::NEG_INFINITY;
            for (col, &v) in vals.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DistanceError::NonFiniteValue { row, col });
                }
                best = best.max(v);
            }
            Ok(best)
        })
        .collect()
}

/// First `min(k, n)` entries of the ranking as `(candidate index, pooled value)`.
pub fn top_k(ranking: &PooledRanking, k: usize) -> Vec<(usize, f64)> {
    ranking.order.iter().take(k).map(|&i| (i, ranking.pooled[i])).collect()
}
