use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::masknet::{edge_scores, MaskNet};
use super::ppr::{
    collapse_relations, partition_edges, ppr, ppr_loss, regularizers, stochastic_adjacency,
    teleport_set, PprConfig,
};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Query, SubgraphView};
use crate::model::{embed, fidelity_loss, forward_trace, EdgeMask, EmbeddingTable, Model};
use crate::tensor::{clip_global_norm, Adam};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainerConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub temperature_start: f64,
    pub temperature_end: f64,
    pub lambda_size: f64,
    pub lambda_ent: f64,
    /// Budget used to size the inside set during training.
    pub budget: usize,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32],
            epochs: 10,
            learning_rate: 1e-2,
            batch_size: 8,
            temperature_start: 1.0,
            temperature_end: 0.1,
            lambda_size: 0.01,
            lambda_ent: 0.01,
            budget: 10,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl ExplainerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.budget == 0 {
            return Err(Error::config("batch_size and budget must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.temperature_start > 0.0 && self.temperature_end > 0.0) {
            return Err(Error::config("temperatures must be positive"));
        }
        if !(self.lambda_size >= 0.0 && self.lambda_ent >= 0.0) {
            return Err(Error::config("regularizer weights must be non-negative"));
        }
        Ok(())
    }

    /// Geometric interpolation from the start to the end temperature.
    pub fn temperature(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.temperature_end;
        }
        let t = epoch as f64 / (self.epochs - 1) as f64;
        self.temperature_start * (self.temperature_end / self.temperature_start).powf(t)
    }
}

/// The graph an explainer sees for `q`: everything except the query's own
/// triple (and its inverse), so the answer cannot be read off directly.
pub fn explain_view<'g>(g: &'g KnowledgeGraph, q: &Query) -> SubgraphView<'g> {
    let mut view = SubgraphView::full(g);
    view.remove_triple(q.triple());
    view
}

pub(crate) fn require_evaluator(model: &Model) -> Result<()> {
    if !model.role.is_evaluator() {
        return Err(Error::contract(format!(
            "explainers need an evaluator model, got role `{}`",
            model.role.as_str()
        )));
    }
    Ok(())
}

/// Panics when a model that must stay frozen has changed.
pub fn assert_frozen(expected_checksum: u64, model: &Model) {
    assert_eq!(
        expected_checksum,
        model.checksum(),
        "evaluator parameters changed while training an explainer"
    );
}

/// Per-query quantities that depend only on the frozen evaluator.
pub(crate) struct QueryContext<'g> {
    pub query: Query,
    pub view: SubgraphView<'g>,
    pub emb: EmbeddingTable,
    pub teleport: Vec<EntityId>,
}

impl<'g> QueryContext<'g> {
    pub fn new(eval_model: &Model, g: &'g KnowledgeGraph, q: &Query, top_tails: usize) -> Result<Self> {
        let view = explain_view(g, q);
        let emb = embed(eval_model, &view, q)?;
        let teleport = teleport_set(eval_model, &view, q, top_tails)?;
        Ok(Self {
            query: *q,
            view,
            emb,
            teleport,
        })
    }
}

/// Individual terms of the per-query training objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub fidelity: f64,
    pub ppr: f64,
    pub regularizer: f64,
    pub total: f64,
}

/// Fidelity, PageRank and regularizer terms for one mask, with the gradient
/// of their sum w.r.t. every mask value. PageRank iterates are constants.
pub fn objective(
    eval_model: &Model,
    view: &SubgraphView<'_>,
    q: &Query,
    mask: &EdgeMask,
    teleport: &[EntityId],
    ppr_cfg: &PprConfig,
    top_nodes: usize,
    lambda_size: f64,
    lambda_ent: f64,
) -> Result<(ObjectiveTerms, Vec<f64>)> {
    let trace = forward_trace(eval_model, view, q, Some(mask))?;
    let (fidelity, dscores) = fidelity_loss(&trace.scores, q.answer as usize);
    let mut grad = vec![0.0; mask.len()];
    trace.backward(eval_model, &dscores, None, Some(&mut grad))?;

    let mut ppr_term = 0.0;
    if ppr_cfg.beta_in > 0.0 || ppr_cfg.beta_out > 0.0 {
        let g = view.graph();
        let pw = collapse_relations(mask, g, ppr_cfg.collapse);
        let adj = stochastic_adjacency(&pw, teleport, ppr_cfg.alpha)?;
        let dist = ppr(&adj, teleport, ppr_cfg)?;
        let (e_in, e_out) = partition_edges(view, &dist.pi, top_nodes);
        let (loss, pgrad) = ppr_loss(mask, &e_in, &e_out, ppr_cfg.beta_in, ppr_cfg.beta_out)?;
        ppr_term = loss;
        grad.iter_mut().zip(pgrad).for_each(|(a, b)| *a += b);
    }

    let (regularizer, rgrad) = regularizers(mask, lambda_size, lambda_ent);
    grad.iter_mut().zip(rgrad).for_each(|(a, b)| *a += b);
    let terms = ObjectiveTerms {
        fidelity,
        ppr: ppr_term,
        regularizer,
        total: fidelity + ppr_term + regularizer,
    };
    Ok((terms, grad))
}

/// Trains the mask network against a frozen evaluator. Only the network's
/// parameters change; the evaluator is checked bit for bit afterwards.
pub fn train_explainer(
    net: &MaskNet,
    eval_model: &Model,
    g: &KnowledgeGraph,
    queries: &[Query],
    ppr_cfg: &PprConfig,
    cfg: &ExplainerConfig,
) -> Result<MaskNet> {
    cfg.validate()?;
    ppr_cfg.validate()?;
    require_evaluator(eval_model)?;
    eval_model.check_graph(g)?;
    if net.embed_dim != eval_model.config.embed_dim {
        return Err(Error::contract(format!(
            "mask network width {} does not match evaluator width {}",
            net.embed_dim, eval_model.config.embed_dim
        )));
    }
    let frozen = eval_model.checksum();
    let mut net = net.clone();
    if cfg.epochs == 0 || queries.is_empty() {
        return Ok(net);
    }
    let contexts = queries
        .iter()
        .map(|q| QueryContext::new(eval_model, g, q, ppr_cfg.top_tails))
        .collect::<Result<Vec<_>>>()?;
    let top_nodes = ppr_cfg.top_nodes_for(cfg.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..queries.len()).collect();

    for epoch in 0..cfg.epochs {
        let temperature = cfg.temperature(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = net.zeros_like();
            for &qi in batch {
                let ctx = &contexts[qi];
                if ctx.view.is_empty() {
                    continue;
                }
                let (mask, logits, cache) =
                    edge_scores(&net, &ctx.emb, &ctx.view, temperature, Some(&mut rng))?;
                let (terms, domega) = objective(
                    eval_model,
                    &ctx.view,
                    &ctx.query,
                    &mask,
                    &ctx.teleport,
                    ppr_cfg,
                    top_nodes,
                    cfg.lambda_size,
                    cfg.lambda_ent,
                )?;
                if !terms.total.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        message: format!("non-finite explainer objective on query {:?}", ctx.query),
                    });
                }
                total += terms.total;
                debug_assert_eq!(logits.len(), mask.len());
                let dlogits: Vec<f64> = mask
                    .values()
                    .iter()
                    .zip(&domega)
                    .map(|(&w, &d)| d * w * (1.0 - w) / temperature)
                    .collect();
                net.backward(&ctx.emb, &cache, &dlogits, &mut grads);
            }
            let scale = 1.0 / batch.len() as f64;
            let mut gs = grads.tensors_mut();
            for t in gs.iter_mut() {
                t.iter_mut().for_each(|x| *x *= scale);
            }
            clip_global_norm(&mut gs, cfg.clip_norm);
            let gs: Vec<&[f64]> = gs.into_iter().map(|t| &*t).collect();
            adam.step(&mut net.tensors_mut(), &gs);
        }
        log::debug!("explainer epoch {epoch}: objective {:.5}", total / queries.len() as f64);
    }
    net.temperature = cfg.temperature(cfg.epochs - 1);
    assert_frozen(frozen, eval_model);
    Ok(net)
}
