//! Metrics, ground-truth ingestion and the synthetic table generator.

pub mod groundtruth;
pub mod metrics;
pub mod relations;
pub mod synth;

pub use groundtruth::{
    load_groundtruth, parse_groundtruth, write_groundtruth, GroundTruthCell, GroundTruthDocument, GroundTruthTable,
};
pub use metrics::{area_precision_recall, AreaMetrics, Scores};
pub use relations::{
    adjacency_relations, icdar_score, normalize_text, truth_relations, AdjacencyRelation, MetricsReport,
    RelationDirection,
};
pub use synth::{generate_synthetic, SynthSpec, SyntheticTable};
