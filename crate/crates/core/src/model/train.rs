use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::forward_trace;
use super::Model;
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Query, SubgraphView};
use crate::tensor::{clip_global_norm, log_sigmoid, sigmoid, Adam};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Uniformly corrupted tails per positive.
    pub negatives: usize,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 5e-3,
            batch_size: 16,
            negatives: 32,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Binary cross-entropy of the answer against sampled negatives, with the
/// gradient w.r.t. every score.
fn negative_sampling_loss<R: Rng>(
    scores: &[f64],
    answer: usize,
    negatives: usize,
    rng: &mut R,
) -> (f64, Vec<f64>) {
    let n = scores.len();
    let mut grad = vec![0.0; n];
    let pos = scores[answer];
    let mut loss = -log_sigmoid(pos);
    grad[answer] += sigmoid(pos) - 1.0;
    if n > 1 && negatives > 0 {
        let w = 1.0 / negatives as f64;
        for _ in 0..negatives {
            let mut t = rng.random_range(0..n - 1);
            if t >= answer {
                t += 1;
            }
            loss -= w * log_sigmoid(-scores[t]);
            grad[t] += w * sigmoid(scores[t]);
        }
    }
    (loss, grad)
}

/// Shared training loop. `view_for(i, epoch)` supplies the message-passing
/// view for query `i`; the query's own triple is removed from it.
pub fn train_with_views<'g, F>(
    model: &Model,
    queries: &[Query],
    cfg: &TrainConfig,
    mut view_for: F,
) -> Result<Model>
where
    F: FnMut(usize, usize) -> Result<SubgraphView<'g>>,
{
    cfg.validate()?;
    let mut model = model.clone();
    if cfg.epochs == 0 || queries.is_empty() {
        return Ok(model);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..queries.len()).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.params.zeros_like();
            for &qi in batch {
                let q = &queries[qi];
                let mut view = view_for(qi, epoch)?;
                view.remove_triple(q.triple());
                let trace = forward_trace(&model, &view, q, None)?;
                let (loss, dscores) =
                    negative_sampling_loss(&trace.scores, q.answer as usize, cfg.negatives, &mut rng);
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        message: format!("non-finite loss on query {q:?}"),
                    });
                }
                total += loss;
                trace.backward(&model, &dscores, Some(&mut grads), None)?;
            }
            let scale = 1.0 / batch.len() as f64;
            let mut gs = grads.tensors_mut();
            for g in gs.iter_mut() {
                g.iter_mut().for_each(|x| *x *= scale);
            }
            clip_global_norm(&mut gs, cfg.clip_norm);
            let gs: Vec<&[f64]> = gs.into_iter().map(|g| &*g).collect();
            adam.step(&mut model.params.tensors_mut(), &gs);
        }
        let mean = total / queries.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: "non-finite mean loss".into(),
            });
        }
        log::debug!("epoch {epoch}: loss {mean:.5}");
        model.loss_history.push(mean);
    }
    Ok(model)
}

/// Trains on the full graph, hiding each query's own triple while it is scored.
pub fn train_backbone(
    model: &Model,
    g: &KnowledgeGraph,
    queries: &[Query],
    cfg: &TrainConfig,
) -> Result<Model> {
    model.check_graph(g)?;
    let full = SubgraphView::full(g);
    train_with_views(model, queries, cfg, |_, _| Ok(full.clone()))
}

/// Continues training a copy of `model` where each query only sees its own view.
pub fn fine_tune(
    model: &Model,
    dataset: &[(Query, SubgraphView<'_>)],
    cfg: &TrainConfig,
) -> Result<Model> {
    let Some((_, first)) = dataset.first() else {
        return Err(Error::contract("fine-tuning needs at least one (query, view) pair"));
    };
    model.check_graph(first.graph())?;
    let queries: Vec<Query> = dataset.iter().map(|(q, _)| *q).collect();
    train_with_views(model, &queries, cfg, |i, _| Ok(dataset[i].1.clone()))
}
