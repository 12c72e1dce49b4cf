//! Perturbation baselines sharing the evaluator and fidelity objective:
//! per-query free mask optimization and a parameterized mask without the
//! PageRank term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::{
    base_candidates, edge_scores, explain_view, objective, omega_priority, require_evaluator,
    Explanation, MaskNet, PprConfig,
};
use crate::kg::{KnowledgeGraph, Query};
use crate::model::{embed, EdgeMask, Model};
use crate::tensor::{sigmoid, Adam};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    /// Optimizer steps per query.
    pub steps: usize,
    pub learning_rate: f64,
    pub lambda_size: f64,
    pub lambda_ent: f64,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            learning_rate: 0.05,
            lambda_size: 1.0,
            lambda_ent: 0.01,
            seed: 0,
        }
    }
}

fn no_ppr() -> PprConfig {
    PprConfig {
        beta_in: 0.0,
        beta_out: 0.0,
        ..PprConfig::default()
    }
}

fn top_k(g: &KnowledgeGraph, q: &Query, mask: &EdgeMask, logits: &[f64], budget: usize, head_isolated: bool) -> Explanation {
    let flags = vec![false; mask.len()];
    let mut cands = base_candidates(g, mask, logits, &flags, &[]);
    omega_priority(&mut cands);
    cands.truncate(budget);
    Explanation {
        query: *q,
        budget,
        edges: cands.iter().map(|c| c.edge).collect(),
        omega: cands.iter().map(|c| c.omega).collect(),
        pi: Vec::new(),
        converged: true,
        head_isolated,
    }
}

fn check_budget(budget: usize) -> Result<()> {
    if budget == 0 {
        return Err(Error::contract("explanation budget must be at least 1"));
    }
    Ok(())
}

/// Optimizes one free logit per kept edge for this query alone, then keeps
/// the `budget` highest-weighted triples. No connectivity repair.
pub fn instance_mask_explain(
    eval_model: &Model,
    g: &KnowledgeGraph,
    q: &Query,
    budget: usize,
    cfg: &InstanceConfig,
) -> Result<Explanation> {
    check_budget(budget)?;
    require_evaluator(eval_model)?;
    let view = explain_view(g, q);
    let edges: Vec<_> = view.kept_edges().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((q.head as u64) << 32 | q.relation as u64));
    let mut logits: Vec<f64> = edges.iter().map(|_| rng.random_range(-0.1..0.1)).collect();
    let mut adam = Adam::new(cfg.learning_rate);
    let ppr_cfg = no_ppr();
    for step in 0..cfg.steps {
        let mask = EdgeMask::new(edges.clone(), logits.iter().map(|&l| sigmoid(l)).collect())?;
        let (terms, domega) = objective(eval_model, &view, q, &mask, &[q.head], &ppr_cfg, 1, cfg.lambda_size, cfg.lambda_ent)?;
        if !terms.total.is_finite() {
            return Err(Error::Divergence {
                epoch: step,
                message: format!("non-finite instance-mask objective on query {q:?}"),
            });
        }
        let dlogits: Vec<f64> = mask
            .values()
            .iter()
            .zip(&domega)
            .map(|(&w, &d)| d * w * (1.0 - w))
            .collect();
        adam.step(&mut [logits.as_mut_slice()], &[dlogits.as_slice()]);
    }
    let mask = EdgeMask::new(edges, logits.iter().map(|&l| sigmoid(l)).collect())?;
    let isolated = !crate::explainer::head_has_kept_edge(&view, q.head);
    Ok(top_k(g, q, &mask, &logits, budget, isolated))
}

/// Noise-free mask from a network trained without the PageRank term; the
/// `budget` highest-weighted triples, possibly disconnected.
pub fn parameterized_mask_explain(
    net: &MaskNet,
    eval_model: &Model,
    g: &KnowledgeGraph,
    q: &Query,
    budget: usize,
) -> Result<Explanation> {
    check_budget(budget)?;
    require_evaluator(eval_model)?;
    let view = explain_view(g, q);
    let emb = embed(eval_model, &view, q)?;
    let (mask, logits, _) = edge_scores::<ChaCha8Rng>(net, &emb, &view, net.temperature, None)?;
    let isolated = !crate::explainer::head_has_kept_edge(&view, q.head);
    Ok(top_k(g, q, &mask, &logits, budget, isolated))
}
