//! Parameterized edge-mask explainer with personalized-PageRank guidance and
//! budgeted connected-subgraph extraction.

mod extract;
mod io;
mod masknet;
mod ppr;
mod train;

pub use extract::{extract_explanation, Explanation};
pub(crate) use extract::{base_candidates, head_has_kept_edge, omega_priority};
pub use io::{
    parse_explanations, read_explanations, write_explanations, EdgeRecord, ExplanationRecord,
    QueryRecord,
};
pub use masknet::{edge_scores, logistic_noise, Dense, LogitCache, MaskNet, INPUT_PARTS};
pub use ppr::{
    collapse_relations, partition_edges, ppr, ppr_loss, regularizers, stochastic_adjacency,
    teleport_set, top_entities, Collapse, NodeDistribution, PairwiseWeights, PprConfig,
    StochasticAdjacency,
};
pub use train::{
    assert_frozen, explain_view, objective, train_explainer, ExplainerConfig, ObjectiveTerms,
};
pub(crate) use train::require_evaluator;
