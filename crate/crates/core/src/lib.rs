//! Knowledge-graph link prediction with a query-conditioned relational GNN,
//! perturbation-robust evaluators, and connected budgeted subgraph
//! explanations learned through a parameterized edge mask guided by
//! personalized PageRank.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod evaluator;
pub mod explainer;
pub mod kg;
pub mod model;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
