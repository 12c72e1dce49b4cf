use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EdgeId, EntityId, KnowledgeGraph, Query, SubgraphView};
use crate::model::{forward, EdgeMask, Model};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collapse {
    Max,
    Sum,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PprConfig {
    /// Teleport weight.
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Entities kept as "inside"; `None` means twice the budget.
    pub top_nodes: Option<usize>,
    /// Predicted tails added to the teleport set.
    pub top_tails: usize,
    pub collapse: Collapse,
    pub beta_in: f64,
    pub beta_out: f64,
}

impl Default for PprConfig {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            epsilon: 1e-6,
            max_iter: 100,
            top_nodes: None,
            top_tails: 1,
            collapse: Collapse::Max,
            beta_in: 1.0,
            beta_out: 1.0,
        }
    }
}

impl PprConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        if self.top_nodes == Some(0) {
            return Err(Error::config("top_nodes must be at least 1"));
        }
        if !(self.beta_in >= 0.0 && self.beta_out >= 0.0) {
            return Err(Error::config("beta_in and beta_out must be non-negative"));
        }
        Ok(())
    }

    pub fn top_nodes_for(&self, budget: usize) -> usize {
        self.top_nodes.unwrap_or(2 * budget).max(1)
    }
}

/// One weight per ordered entity pair joined by at least one masked edge,
/// sorted by `(source, target)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseWeights {
    pub num_entities: usize,
    pub pairs: Vec<(EntityId, EntityId, f64)>,
}

pub fn collapse_relations(mask: &EdgeMask, g: &KnowledgeGraph, method: Collapse) -> PairwiseWeights {
    let mut items: Vec<(EntityId, EntityId, f64)> = mask
        .iter()
        .map(|(e, w)| {
            let t = g.edge(e);
            (t.head, t.tail, w)
        })
        .collect();
    items.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut pairs: Vec<(EntityId, EntityId, f64)> = Vec::new();
    let mut count = 0usize;
    for (s, o, w) in items {
        match pairs.last_mut() {
            Some(last) if last.0 == s && last.1 == o => {
                count += 1;
                last.2 = match method {
                    Collapse::Max => last.2.max(w),
                    Collapse::Sum | Collapse::Mean => last.2 + w,
                };
            }
            _ => {
                if method == Collapse::Mean {
                    if let Some(last) = pairs.last_mut() {
                        last.2 /= count as f64;
                    }
                }
                pairs.push((s, o, w));
                count = 1;
            }
        }
    }
    if method == Collapse::Mean {
        if let Some(last) = pairs.last_mut() {
            last.2 /= count as f64;
        }
    }
    PairwiseWeights {
        num_entities: g.num_entities(),
        pairs,
    }
}

/// Descending by score, ties by ascending index.
pub(crate) fn rank_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// The query head plus the evaluator's `m` best-scored tails on `view`,
/// ascending by id.
pub fn teleport_set(eval_model: &Model, view: &SubgraphView<'_>, q: &Query, m: usize) -> Result<Vec<EntityId>> {
    let mut set = vec![q.head];
    if m > 0 {
        let scores = forward(eval_model, view, q, None)?.scores;
        set.extend(rank_desc(&scores).into_iter().take(m).map(|v| v as EntityId));
    }
    set.sort_unstable();
    set.dedup();
    Ok(set)
}

/// Row-stochastic transition structure: `(1 - alpha)` softmax over the
/// existing out-neighbours plus `alpha` uniform teleport over `teleport`.
/// Rows without out-neighbours teleport with weight one.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticAdjacency {
    pub num_entities: usize,
    pub alpha: f64,
    pub teleport: Vec<EntityId>,
    row_ptr: Vec<usize>,
    targets: Vec<EntityId>,
    probs: Vec<f64>,
}

pub fn stochastic_adjacency(
    pw: &PairwiseWeights,
    teleport: &[EntityId],
    alpha: f64,
) -> Result<StochasticAdjacency> {
    if teleport.is_empty() {
        return Err(Error::contract("teleport set must not be empty"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha {alpha} outside [0, 1]")));
    }
    let n = pw.num_entities;
    if let Some(&v) = teleport.iter().find(|&&v| v as usize >= n) {
        return Err(Error::Bounds(format!("teleport entity {v} outside [0, {n})")));
    }
    let mut teleport = teleport.to_vec();
    teleport.sort_unstable();
    teleport.dedup();
    let mut row_ptr = vec![0usize; n + 1];
    for &(s, _, _) in &pw.pairs {
        row_ptr[s as usize + 1] += 1;
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    let targets: Vec<EntityId> = pw.pairs.iter().map(|p| p.1).collect();
    let mut probs: Vec<f64> = pw.pairs.iter().map(|p| p.2).collect();
    for s in 0..n {
        let row = &mut probs[row_ptr[s]..row_ptr[s + 1]];
        if row.is_empty() {
            continue;
        }
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for w in row.iter_mut() {
            *w = (*w - max).exp();
            z += *w;
        }
        row.iter_mut().for_each(|w| *w /= z);
    }
    Ok(StochasticAdjacency {
        num_entities: n,
        alpha,
        teleport,
        row_ptr,
        targets,
        probs,
    })
}

impl StochasticAdjacency {
    pub fn is_dangling(&self, s: EntityId) -> bool {
        self.row_ptr[s as usize] == self.row_ptr[s as usize + 1]
    }

    /// Structural (pre-teleport) transition probabilities out of `s`.
    pub fn structural_row(&self, s: EntityId) -> impl Iterator<Item = (EntityId, f64)> + '_ {
        let r = self.row_ptr[s as usize]..self.row_ptr[s as usize + 1];
        self.targets[r.clone()].iter().copied().zip(self.probs[r].iter().copied())
    }

    /// Combined transition probabilities out of `s`, one entry per target.
    pub fn row(&self, s: EntityId) -> Vec<(EntityId, f64)> {
        let tele = 1.0 / self.teleport.len() as f64;
        let (keep, jump) = if self.is_dangling(s) {
            (0.0, 1.0)
        } else {
            (1.0 - self.alpha, self.alpha)
        };
        let mut out: Vec<(EntityId, f64)> = self
            .structural_row(s)
            .map(|(o, p)| (o, keep * p))
            .chain(self.teleport.iter().map(|&t| (t, jump * tele)))
            .collect();
        out.sort_by_key(|x| x.0);
        let mut merged: Vec<(EntityId, f64)> = Vec::with_capacity(out.len());
        for (o, p) in out {
            match merged.last_mut() {
                Some(last) if last.0 == o => last.1 += p,
                _ => merged.push((o, p)),
            }
        }
        merged.retain(|x| x.1 > 0.0);
        merged
    }

    pub fn row_sum(&self, s: EntityId) -> f64 {
        self.row(s).iter().map(|x| x.1).sum()
    }

    /// One step of `pi <- pi P`: mass moves from sources to targets.
    pub fn propagate(&self, pi: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let mut jump_mass = 0.0;
        for s in 0..self.num_entities {
            let m = pi[s];
            if m == 0.0 {
                continue;
            }
            if self.is_dangling(s as EntityId) {
                jump_mass += m;
                continue;
            }
            jump_mass += self.alpha * m;
            let keep = (1.0 - self.alpha) * m;
            for (o, p) in self.structural_row(s as EntityId) {
                out[o as usize] += keep * p;
            }
        }
        let share = jump_mass / self.teleport.len() as f64;
        for &t in &self.teleport {
            out[t as usize] += share;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeDistribution {
    pub pi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration from the uniform distribution over `seeds`, until the L1
/// change drops below `epsilon` or `max_iter` steps have run.
pub fn ppr(adj: &StochasticAdjacency, seeds: &[EntityId], cfg: &PprConfig) -> Result<NodeDistribution> {
    if seeds.is_empty() {
        return Err(Error::contract("personalized PageRank needs at least one seed"));
    }
    let n = adj.num_entities;
    let mut pi = vec![0.0; n];
    let w = 1.0 / seeds.len() as f64;
    for &s in seeds {
        if s as usize >= n {
            return Err(Error::Bounds(format!("seed entity {s} outside [0, {n})")));
        }
        pi[s as usize] += w;
    }
    let mut next = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        adj.propagate(&pi, &mut next);
        iterations += 1;
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < cfg.epsilon {
            converged = true;
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    Ok(NodeDistribution {
        pi,
        iterations,
        converged,
    })
}

/// The `l` entities with the largest PageRank mass, ties by ascending id.
pub fn top_entities(pi: &[f64], l: usize) -> Vec<EntityId> {
    let mut top: Vec<EntityId> = rank_desc(pi).into_iter().take(l).map(|v| v as EntityId).collect();
    top.sort_unstable();
    top
}

/// Splits the kept edges into those with both endpoints among the top-`l`
/// entities and the rest.
pub fn partition_edges(view: &SubgraphView<'_>, pi: &[f64], l: usize) -> (Vec<EdgeId>, Vec<EdgeId>) {
    let g = view.graph();
    let mut inside = vec![false; g.num_entities()];
    for v in top_entities(pi, l) {
        inside[v as usize] = true;
    }
    view.kept_edges().partition(|&e| {
        let t = g.edge(e);
        inside[t.head as usize] && inside[t.tail as usize]
    })
}

/// `-beta_in * sum_{E_in} w + beta_out * sum_{E_out} w` and its gradient
/// aligned with the mask's edges.
pub fn ppr_loss(mask: &EdgeMask, e_in: &[EdgeId], e_out: &[EdgeId], beta_in: f64, beta_out: f64) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; mask.len()];
    let mut loss = 0.0;
    for (set, coef) in [(e_in, -beta_in), (e_out, beta_out)] {
        for &e in set {
            let i = mask
                .edges()
                .binary_search(&e)
                .map_err(|_| Error::contract(format!("partition edge {e} is not in the mask")))?;
            loss += coef * mask.values()[i];
            grad[i] += coef;
        }
    }
    Ok((loss, grad))
}

const ENTROPY_CLAMP: f64 = 1e-7;

/// Size and entropy penalties, each averaged over the mask, with gradient.
pub fn regularizers(mask: &EdgeMask, lambda_size: f64, lambda_ent: f64) -> (f64, Vec<f64>) {
    let n = mask.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let inv = 1.0 / n as f64;
    let mut size = 0.0;
    let mut ent = 0.0;
    let grad = mask
        .values()
        .iter()
        .map(|&w| {
            size += w;
            let c = w.clamp(ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP);
            ent += -c * c.ln() - (1.0 - c) * (1.0 - c).ln();
            let dent = if c == w { ((1.0 - c) / c).ln() } else { 0.0 };
            inv * (lambda_size + lambda_ent * dent)
        })
        .collect();
    (lambda_size * size * inv + lambda_ent * ent * inv, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Triple, Vocab};

    fn graph(triples: &[(u32, u32, u32)], n: usize, r: usize) -> KnowledgeGraph {
        let vocab = Vocab::from_names((0..n).map(|i| format!("n{i}")), (0..r).map(|i| format!("r{i}"))).unwrap();
        let ts: Vec<Triple> = triples.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        KnowledgeGraph::build(&ts, vocab, false).unwrap()
    }

    #[test]
    fn collapse_parallel_edges() {
        let g = graph(&[(0, 0, 1), (0, 1, 1), (1, 0, 2)], 3, 2);
        let mask = EdgeMask::new(vec![0, 1, 2], vec![0.2, 0.8, 0.4]).unwrap();
        let w = |m| collapse_relations(&mask, &g, m).pairs;
        assert_eq!(w(Collapse::Max), vec![(0, 1, 0.8), (1, 2, 0.4)]);
        assert_eq!(w(Collapse::Sum), vec![(0, 1, 1.0), (1, 2, 0.4)]);
        assert_eq!(w(Collapse::Mean), vec![(0, 1, 0.5), (1, 2, 0.4)]);
    }

    #[test]
    fn pure_teleport_rows() {
        let g = graph(&[(0, 0, 1), (1, 0, 2), (2, 0, 0)], 3, 1);
        let view = SubgraphView::full(&g);
        let pw = collapse_relations(&EdgeMask::constant(&view, 0.5).unwrap(), &g, Collapse::Max);
        let adj = stochastic_adjacency(&pw, &[1], 1.0).unwrap();
        for s in 0..3 {
            assert_eq!(adj.row(s), vec![(1, 1.0)]);
        }
        let d = ppr(&adj, &[1], &PprConfig { alpha: 1.0, ..Default::default() }).unwrap();
        assert_eq!(d.pi, vec![0.0, 1.0, 0.0]);
        assert!(d.converged);
        assert_eq!(d.iterations, 1);
    }

    #[test]
    fn deterministic_walk_without_teleport() {
        let g = graph(&[(0, 0, 1), (1, 0, 2), (2, 0, 0)], 3, 1);
        let pw = collapse_relations(&EdgeMask::constant(&SubgraphView::full(&g), 0.3).unwrap(), &g, Collapse::Sum);
        let adj = stochastic_adjacency(&pw, &[0], 0.0).unwrap();
        assert_eq!(adj.row(0), vec![(1, 1.0)]);
        assert_eq!(adj.row(2), vec![(0, 1.0)]);
    }

    #[test]
    fn dangling_rows_teleport() {
        let g = graph(&[(0, 0, 1)], 3, 1);
        let pw = collapse_relations(&EdgeMask::constant(&SubgraphView::full(&g), 1.0).unwrap(), &g, Collapse::Max);
        let adj = stochastic_adjacency(&pw, &[0, 2], 0.15).unwrap();
        assert!(adj.is_dangling(1));
        assert_eq!(adj.row(1), vec![(0, 0.5), (2, 0.5)]);
        assert!((adj.row_sum(0) - 1.0).abs() < 1e-12);
        assert!(stochastic_adjacency(&pw, &[], 0.15).is_err());
    }

    #[test]
    fn unreachable_component_gets_no_mass() {
        let g = graph(&[(0, 0, 1), (1, 0, 0), (2, 0, 3), (3, 0, 2)], 4, 1);
        let pw = collapse_relations(&EdgeMask::constant(&SubgraphView::full(&g), 1.0).unwrap(), &g, Collapse::Max);
        let adj = stochastic_adjacency(&pw, &[0], 0.15).unwrap();
        let d = ppr(&adj, &[0], &PprConfig::default()).unwrap();
        assert_eq!(d.pi[2] + d.pi[3], 0.0);
        assert!((d.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_extremes() {
        let g = graph(&[(0, 0, 1), (1, 0, 2), (2, 0, 2)], 3, 1);
        let view = SubgraphView::full(&g);
        let pi = [0.2, 0.3, 0.5];
        let (e_in, e_out) = partition_edges(&view, &pi, 3);
        assert_eq!((e_in.len(), e_out.len()), (3, 0));
        let (e_in, e_out) = partition_edges(&view, &pi, 1);
        assert_eq!(e_in, vec![2]);
        assert_eq!(e_out, vec![0, 1]);
        assert_eq!(top_entities(&[0.5, 0.5, 0.1], 1), vec![0]);
    }

    #[test]
    fn losses_plug_in() {
        let mask = EdgeMask::new(vec![0, 1, 2], vec![1.0; 3]).unwrap();
        assert_eq!(ppr_loss(&mask, &[0, 1, 2], &[], 1.0, 1.0).unwrap().0, -3.0);
        assert_eq!(ppr_loss(&mask, &[0], &[1, 2], 0.0, 0.0).unwrap().0, 0.0);
        assert!(ppr_loss(&mask, &[7], &[], 1.0, 1.0).is_err());
        let half = EdgeMask::new(vec![0, 1], vec![0.5; 2]).unwrap();
        let (r, _) = regularizers(&half, 0.0, 2.0);
        assert!((r - 2.0 * 2f64.ln()).abs() < 1e-12);
        let (r, _) = regularizers(&mask, 3.0, 1.0);
        assert!((r - 3.0).abs() < 1e-5);
    }

    #[test]
    fn teleport_set_saturates() {
        let g = graph(&[(0, 0, 1), (1, 0, 2)], 3, 1);
        let m = crate::model::init_model(&Default::default(), &g, 0).unwrap();
        let view = SubgraphView::full(&g);
        let q = Query { head: 1, relation: 0, answer: 2 };
        assert_eq!(teleport_set(&m, &view, &q, 0).unwrap(), vec![1]);
        assert_eq!(teleport_set(&m, &view, &q, 3).unwrap(), vec![0, 1, 2]);
    }
}
