//! Knowledge graphs: vocabularies, indexed triple stores, edge-subset views
//! and the perturbations used to simulate distribution shift.

mod graph;
mod io;
mod query;
mod view;
mod vocab;

pub use graph::{EdgeId, KnowledgeGraph, Triple};
pub use io::{
    load_dataset, load_triples, parse_triple_line, parse_triples, write_triples, Dataset, Split,
    SPLIT_FILES,
};
pub use query::{
    filtered_candidates, make_queries, parse_query_spec, CandidateMask, KnownTriples, Query,
    QuerySpec,
};
pub use view::{
    drop_edges_distance, drop_edges_uniform, ego_network, DistanceDecay, DistanceSchedule,
    SubgraphView,
};
pub use vocab::{EntityId, RelationId, Vocab, INVERSE_SUFFIX};
