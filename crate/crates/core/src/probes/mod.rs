//! Linear probes: attention-vector classifiers, structural and semantic
//! probe matrices, and subspace comparison between probes.

mod attention;
mod config;
mod matrix;
mod semantic;
mod structural;

pub use attention::{
    evaluate_probe, score_predictions, train_attention_binary, train_attention_multiclass, ClassMetrics,
    LinearProbe, ProbeFit, ProbeMetrics,
};
pub use config::ProbeTrainConfig;
pub use matrix::{apply_probe, compare_probe_subspaces, ProbeMatrix, SubspaceComparison};
pub use semantic::{
    clamped_loss, cosine_baselines, qualifying_inventory, sense_pairs, train_semantic_probe, ClampSpec, SemanticFit,
    SensePairs,
};
pub use structural::{structural_loss, train_structural_probe, StructuralFit};
