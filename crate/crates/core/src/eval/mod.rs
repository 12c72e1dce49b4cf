//! Filtered ranking metrics, distribution-shift sweeps and the fine-tune
//! based explanation evaluation protocol.

mod metrics;
mod protocol;
mod sweep;

pub use metrics::{evaluate_model, query_ranks, rank_metrics, RankingMetrics, Views, HITS_AT};
pub use protocol::{
    run_arm, run_protocol, EmptyExplainer, Explainer, FullGraphExplainer, InstanceMaskExplainer,
    ParameterizedMaskExplainer, ProtocolInputs, ProtocolReport, ProtocolRow, RawExplainer,
};
pub use sweep::{edge_drop_sweep, ego_radius_sweep, SweepPoint, SweepReport};
