//! Distance-to-reward shaping for generative models.
//!
//! A distance `d` maps to `R = 1 / (1 + 10^(10k (d - m) / (h - l)))` with
//! `m = (h + l) / 2`, so `R(m) = 0.5` and smaller distances score higher.
//! [`serve_stream`] exposes the same scoring over a line protocol for RL
//! loops that shell out to a scorer.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{EmbeddingMatrix, ParseEnumError};
use crate::distance::{best_pool, distance, DistanceError, DistanceKind};
use crate::fmt_f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RewardError {
    #[error("BAD_PARAMS: {0}")]
    BadParams(String),
    #[error("NON_FINITE_INPUT: {0}")]
    NonFiniteInput(f64),
    #[error("MISSING_COMPONENT: {0}")]
    MissingComponent(String),
    #[error("OUT_OF_RANGE: component {name} = {value} is outside [0, 1]")]
    OutOfRange { name: String, value: f64 },
    #[error("BAD_WEIGHT: component {name} has weight {weight}")]
    BadWeight { name: String, weight: f64 },
    #[error("LENGTH_MISMATCH: {candidates} candidates, {alerts} alert flags")]
    LengthMismatch { candidates: usize, alerts: usize },
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

impl RewardError {
    pub fn code(&self) -> &'static str {
        match self {
            RewardError::BadParams(_) => "BAD_PARAMS",
            RewardError::NonFiniteInput(_) => "NON_FINITE_INPUT",
            RewardError::MissingComponent(_) => "MISSING_COMPONENT",
            RewardError::OutOfRange { .. } => "OUT_OF_RANGE",
            RewardError::BadWeight { .. } => "BAD_WEIGHT",
            RewardError::LengthMismatch { .. } => "LENGTH_MISMATCH",
            RewardError::Distance(e) => e.code(),
        }
    }
}

/// Reverse-sigmoid shape: distance window `[low, high]` and steepness `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidParams {
    low: f64,
    high: f64,
    k: f64,
}

impl SigmoidParams {
    pub fn new(low: f64, high: f64, k: f64) -> Result<Self, RewardError> {
        if !(low.is_finite() && high.is_finite() && k.is_finite()) {
            return Err(RewardError::BadParams(format!("non-finite low={low} high={high} k={k}")));
        }
        if high <= low {
            return Err(RewardError::BadParams(format!("high ({high}) must exceed low ({low})")));
        }
        if k <= 0.0 {
            return Err(RewardError::BadParams(format!("k ({k}) must be positive")));
        }
        Ok(SigmoidParams { low, high, k })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn mid(&self) -> f64 {
        (self.low + self.high) / 2.0
    }
}

/// Tuned windows for Euclidean PED of each embedding model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    GeoDiff2d,
    GeoDiff3d,
    GeoDiffConcat,
    MolFormer,
}

impl Preset {
    pub const ALL: [Preset; 4] =
        [Preset::GeoDiff2d, Preset::GeoDiff3d, Preset::GeoDiffConcat, Preset::MolFormer];

    pub fn params(self) -> SigmoidParams {
        let (low, high, k) = match self {
            Preset::GeoDiff2d => (0.1, 1.2, 0.25),
            Preset::GeoDiff3d => (1.0, 10.0, 0.25),
            Preset::GeoDiffConcat => (1.0, 10.0, 0.25),
            Preset::MolFormer => (5.0, 17.0, 0.25),
        };
        SigmoidParams { low, high, k }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::GeoDiff2d => "geodiff2d",
            Preset::GeoDiff3d => "geodiff3d",
            Preset::GeoDiffConcat => "geodiffconcat",
            Preset::MolFormer => "molformer",
        }
    }
}

impl FromStr for Preset {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Preset::ALL.into_iter().find(|p| p.name() == lower).ok_or(ParseEnumError {
            value: s.to_string(),
            expected: "geodiff2d|geodiff3d|geodiffconcat|molformer",
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const EXPONENT_LIMIT: f64 = 300.0;
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Reward in the open interval (0, 1), strictly decreasing in `d` until it
/// saturates at the extremes of float64.
pub fn reverse_sigmoid(d: f64, p: &SigmoidParams) -> Result<f64, RewardError> {
    if !d.is_finite() {
        return Err(RewardError::NonFiniteInput(d));
    }
    let exponent = 10.0 * p.k * (d - p.mid()) / (p.high - p.low);
    if exponent > EXPONENT_LIMIT {
        return Ok(f64::MIN_POSITIVE);
    }
    if exponent < -EXPONENT_LIMIT {
        return Ok(BELOW_ONE);
    }
    Ok((1.0 / (1.0 + 10f64.powf(exponent))).clamp(f64::MIN_POSITIVE, BELOW_ONE))
}

/// Named components and their (positive) weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSpec {
    components: Vec<(String, f64)>,
}

impl CompositeSpec {
    pub fn new(components: Vec<(String, f64)>) -> Result<Self, RewardError> {
        if components.is_empty() {
            return Err(RewardError::BadParams("composite needs at least one component".into()));
        }
        for (name, w) in &components {
            if !(w.is_finite() && *w > 0.0) {
                return Err(RewardError::BadWeight { name: name.clone(), weight: *w });
            }
        }
        Ok(CompositeSpec { components })
    }

    pub fn equal<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, RewardError> {
        Self::new(names.into_iter().map(|n| (n.into(), 1.0)).collect())
    }

    pub fn components(&self) -> &[(String, f64)] {
        &self.components
    }
}

fn weighted_mean(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (w, s) in pairs {
        num += w * s;
        den += w;
    }
    num / den
}

/// Weighted mean of the components named in `spec`.
pub fn composite_score(parts: &BTreeMap<String, f64>, spec: &CompositeSpec) -> Result<f64, RewardError> {
    let mut pairs = Vec::with_capacity(spec.components.len());
    for (name, w) in &spec.components {
        let v = *parts.get(name).ok_or_else(|| RewardError::MissingComponent(name.clone()))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(RewardError::OutOfRange { name: name.clone(), value: v });
        }
        pairs.push((*w, v));
    }
    Ok(weighted_mean(pairs.into_iter()))
}

/// `ped` alone, or the equal-weight mean of `ped` and the alert flag.
fn combine(ped: f64, alert: Option<bool>) -> f64 {
    match alert {
        None => ped,
        Some(pass) => weighted_mean([(1.0, ped), (1.0, if pass { 1.0 } else { 0.0 })].into_iter()),
    }
}

/// Rewards for a batch of candidates against the best-pooled reference
/// distance. `alerts[i]` is true when candidate `i` passes the substructure
/// alerts.
pub fn score_batch(
    cands: &EmbeddingMatrix,
    refs: &EmbeddingMatrix,
    kind: DistanceKind,
    params: &SigmoidParams,
    alerts: Option<&[bool]>,
) -> Result<Vec<f64>, RewardError> {
    if let Some(a) = alerts {
        if a.len() != cands.rows() {
            return Err(RewardError::LengthMismatch { candidates: cands.rows(), alerts: a.len() });
        }
    }
    let pooled = best_pool(cands, refs, kind)?.pooled;
    pooled
        .par_iter()
        .enumerate()
        .map(|(i, &d)| Ok(combine(reverse_sigmoid(d, params)?, alerts.map(|a| a[i]))))
        .collect()
}

/// Fixed settings for [`serve_stream`].
#[derive(Debug, Clone)]
pub struct StreamConfig {
    pub kind: DistanceKind,
    pub params: SigmoidParams,
    pub refs: Option<EmbeddingMatrix>,
    /// Candidate embeddings addressed by `@<row>` requests.
    pub cands: Option<EmbeddingMatrix>,
    /// Alert pass flags aligned with `cands` rows.
    pub alerts: Option<Vec<bool>>,
}

impl StreamConfig {
    pub fn new(kind: DistanceKind, params: SigmoidParams) -> Self {
        StreamConfig { kind, params, refs: None, cands: None, alerts: None }
    }
}

/// Request and error counts for one stream session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub requests: usize,
    pub errors: usize,
}

fn pooled_for_row(cfg: &StreamConfig, row: usize) -> Result<f64, &'static str> {
    let cands = cfg.cands.as_ref().ok_or("NO_CANDIDATES")?;
    let refs = cfg.refs.as_ref().ok_or("NO_REFERENCES")?;
    if row >= cands.rows() {
        return Err("BAD_ROW");
    }
    if refs.rows() == 0 {
        return Err("NO_REFERENCES");
    }
    let mut best = f64::INFINITY;
    for r in refs.iter_rows() {
        best = best.min(distance(cands.row(row), r, cfg.kind).map_err(|e| e.code())?);
    }
    Ok(best)
}

fn answer(cfg: &StreamConfig, fields: &[&str]) -> Result<f64, &'static str> {
    if fields.len() < 2 || fields.len() > 3 {
        return Err("MALFORMED_LINE");
    }
    let value = fields[1].trim();
    let (d, row) = match value.strip_prefix('@') {
        Some(idx) => {
            let row: usize = idx.parse().map_err(|_| "BAD_ROW")?;
            (pooled_for_row(cfg, row)?, Some(row))
        }
        None => {
            let d: f64 = value.parse().map_err(|_| "BAD_NUMBER")?;
            (d, None)
        }
    };
    let alert = match fields.get(2).map(|s| s.trim()) {
        Some("1") => Some(true),
        Some("0") => Some(false),
        Some(_) => return Err("BAD_ALERT"),
        None => row.and_then(|r| cfg.alerts.as_ref().and_then(|a| a.get(r).copied())),
    };
    let ped = reverse_sigmoid(d, &cfg.params).map_err(|e| e.code())?;
    Ok(combine(ped, alert))
}

/// Answers `id\t<distance>` and `id\t@<row>` requests (optionally followed by
/// `\t0` / `\t1` as the alert flag) with `id\t<reward>`, one line per input
/// line and in order. Bad requests produce `id\tERR\t<code>` and the stream
/// carries on. Output is flushed after every line.
pub fn serve_stream<R: BufRead, W: Write>(
    mut input: R,
    mut output: W,
    cfg: &StreamConfig,
) -> io::Result<StreamStats> {
    let mut stats = StreamStats::default();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let text = String::from_utf8_lossy(&buf);
        let line = text.strip_suffix('\n').unwrap_or(&text);
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split('\t').collect();
        stats.requests += 1;
        match answer(cfg, &fields) {
            Ok(r) => writeln!(output, "{}\t{}", fields[0], fmt_f64(r))?,
            Err(code) => {
                stats.errors += 1;
                writeln!(output, "{}\tERR\t{code}", fields[0])?
            }
        }
        output.flush()?;
    }
    Ok(stats)
}
