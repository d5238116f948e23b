//! Pretrained embedding distance (PED) screening and analysis.
//!
//! The crate ranks candidate libraries against reference ligands by
//! best-pooled embedding distance, reports enrichment factors, computes the
//! correlation / effect-size / scaffold-diversity statistics used to compare
//! embedding distances with classical 3D similarity, and turns distances into
//! bounded rewards for generative models.
//!
//! Module map:
//!
//! * [`dataset`]: records, embedding matrices, joined libraries and validation.
//! * [`emb1`]: the EMB1 binary format, metadata TSV reader, concat assembly.
//! * [`distance`]: exhaustive cosine / Euclidean distances, best-pooling, top-k.
//! * [`screening`]: enrichment factors and per-target reports.
//! * [`analytics`]: Pearson matrices, binning, Cliff's delta, diversity, compliance.
//! * [`reward`]: reverse-sigmoid rewards, composite scores, the line protocol.
//! * [`smiles`]: SMILES parsing, Murcko scaffolds and canonical scaffold keys.

pub mod analytics;
pub mod dataset;
pub mod distance;
pub mod emb1;
pub mod reward;
pub mod screening;
pub mod smiles;

pub use dataset::{
    validate_dataset, Activity, EmbeddingMatrix, EmbeddingMode, LibraryDataset, MoleculeRecord, Role,
    ValidationReport,
};
pub use distance::{best_pool, distance, DistanceKind, PooledRanking};
pub use emb1::{make_concat, read_emb1, read_metadata, write_emb1};
pub use screening::{enrichment_factor, screen_target, ScreenSource, TargetReport};

/// Formats a float as the shortest decimal that round-trips (`100`, `0.5`, `NaN`).
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}
