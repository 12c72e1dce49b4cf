use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;

use super::masknet::{edge_scores, MaskNet};
use super::ppr::{collapse_relations, partition_edges, ppr, stochastic_adjacency, PprConfig};
use super::train::{require_evaluator, QueryContext};
use crate::error::{Error, Result};
use crate::kg::{EdgeId, EntityId, KnowledgeGraph, Query, SubgraphView};
use crate::model::{EdgeMask, Model};

/// A budgeted subgraph explaining one query. Edges are base triples (the
/// inverse direction comes along for free) in selection order.
#[derive(Clone, Debug, PartialEq)]
pub struct Explanation {
    pub query: Query,
    pub budget: usize,
    pub edges: Vec<EdgeId>,
    pub omega: Vec<f64>,
    /// PageRank mass at extraction; empty for explainers without one.
    pub pi: Vec<f64>,
    pub converged: bool,
    /// The head had no usable incident edge, so nothing could be selected.
    pub head_isolated: bool,
}

impl Explanation {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Message-passing view holding the selected triples in both directions.
    pub fn view<'g>(&self, g: &'g KnowledgeGraph) -> Result<SubgraphView<'g>> {
        let inverses: Vec<EdgeId> = self.edges.iter().filter_map(|&e| g.inverse_edge(e)).collect();
        SubgraphView::from_edges(g, self.edges.iter().copied().chain(inverses))
    }

    pub fn components(&self, g: &KnowledgeGraph) -> Result<usize> {
        Ok(self.view(g)?.component_count())
    }
}

/// Candidate base triple with the statistics used for ranking.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Candidate {
    pub edge: EdgeId,
    pub omega: f64,
    /// Logit behind `omega`; orders edges whose weights saturated to the same value.
    pub logit: f64,
    pub inside: bool,
    pub mass: f64,
}

/// Folds both directions of every kept edge onto its base triple, keeping the
/// larger mask value. Output ascending by base edge id.
pub(crate) fn base_candidates(
    g: &KnowledgeGraph,
    mask: &EdgeMask,
    logits: &[f64],
    inside: &[bool],
    pi: &[f64],
) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut by_base: Vec<(EdgeId, f64, f64, bool)> = mask
        .iter()
        .zip(logits)
        .zip(inside)
        .map(|(((e, w), &l), &i)| (g.base_edge(e), w, l, i))
        .collect();
    by_base.sort_by_key(|x| x.0);
    for (b, w, l, i) in by_base {
        match out.last_mut() {
            Some(c) if c.edge == b => {
                c.omega = c.omega.max(w);
                c.logit = c.logit.max(l);
                c.inside |= i;
            }
            _ => {
                let t = g.edge(b);
                let mass = if pi.is_empty() {
                    0.0
                } else {
                    pi[t.head as usize] + pi[t.tail as usize]
                };
                out.push(Candidate {
                    edge: b,
                    omega: w,
                    logit: l,
                    inside: i,
                    mass,
                });
            }
        }
    }
    out
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Inside edges by mask value, then the rest by PageRank mass of their
/// endpoints and mask value; ties by ascending edge id.
pub(crate) fn ppr_priority(cands: &mut [Candidate]) {
    cands.sort_by(|a, b| {
        b.inside
            .cmp(&a.inside)
            .then_with(|| {
                if a.inside {
                    desc(a.logit, b.logit)
                } else {
                    desc(a.mass, b.mass).then_with(|| desc(a.logit, b.logit))
                }
            })
            .then(a.edge.cmp(&b.edge))
    });
}

/// Mask value only, ties by ascending edge id.
pub(crate) fn omega_priority(cands: &mut [Candidate]) {
    cands.sort_by(|a, b| desc(a.logit, b.logit).then(a.edge.cmp(&b.edge)));
}

/// Grows a connected edge set from `head`, always admitting the best-ranked
/// candidate touching the current component, until `budget` edges.
pub(crate) fn grow_connected(
    g: &KnowledgeGraph,
    ranked: &[Candidate],
    head: EntityId,
    budget: usize,
) -> Vec<usize> {
    let mut rank_of = vec![usize::MAX; g.num_base_edges()];
    for (i, c) in ranked.iter().enumerate() {
        rank_of[c.edge] = i;
    }
    let mut in_component = vec![false; g.num_entities()];
    let mut queued = vec![false; ranked.len()];
    let mut heap = BinaryHeap::new();
    let mut admit = |v: EntityId, heap: &mut BinaryHeap<Reverse<usize>>, in_component: &mut [bool]| {
        if std::mem::replace(&mut in_component[v as usize], true) {
            return;
        }
        for e in g.incident_edges(v) {
            let r = rank_of[g.base_edge(e)];
            if r != usize::MAX && !queued[r] {
                queued[r] = true;
                heap.push(Reverse(r));
            }
        }
    };
    admit(head, &mut heap, &mut in_component);
    let mut chosen = Vec::new();
    while chosen.len() < budget {
        let Some(Reverse(r)) = heap.pop() else { break };
        chosen.push(r);
        let t = g.edge(ranked[r].edge);
        admit(t.head, &mut heap, &mut in_component);
        admit(t.tail, &mut heap, &mut in_component);
    }
    chosen
}

pub(crate) fn head_has_kept_edge(view: &SubgraphView<'_>, head: EntityId) -> bool {
    view.graph().incident_edges(head).any(|e| view.contains(e))
}

/// Noise-free mask, PageRank guidance and greedy connected growth from the
/// query head, returning at most `budget` triples.
pub fn extract_explanation(
    net: &MaskNet,
    eval_model: &Model,
    g: &KnowledgeGraph,
    q: &Query,
    budget: usize,
    cfg: &PprConfig,
) -> Result<Explanation> {
    if budget == 0 {
        return Err(Error::contract("explanation budget must be at least 1"));
    }
    cfg.validate()?;
    require_evaluator(eval_model)?;
    let ctx = QueryContext::new(eval_model, g, q, cfg.top_tails)?;
    let (mask, logits, _) = edge_scores::<ChaCha8Rng>(net, &ctx.emb, &ctx.view, net.temperature, None)?;
    let pw = collapse_relations(&mask, g, cfg.collapse);
    let adj = stochastic_adjacency(&pw, &ctx.teleport, cfg.alpha)?;
    let dist = ppr(&adj, &ctx.teleport, cfg)?;
    let (e_in, _) = partition_edges(&ctx.view, &dist.pi, cfg.top_nodes_for(budget));
    let mut inside_flags = vec![false; mask.len()];
    for e in e_in {
        if let Ok(i) = mask.edges().binary_search(&e) {
            inside_flags[i] = true;
        }
    }
    let mut cands = base_candidates(g, &mask, &logits, &inside_flags, &dist.pi);
    ppr_priority(&mut cands);
    let head_isolated = !head_has_kept_edge(&ctx.view, q.head);
    let chosen = grow_connected(g, &cands, q.head, budget);
    Ok(Explanation {
        query: *q,
        budget,
        edges: chosen.iter().map(|&r| cands[r].edge).collect(),
        omega: chosen.iter().map(|&r| cands[r].omega).collect(),
        pi: dist.pi,
        converged: dist.converged,
        head_isolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{Triple, Vocab};

    fn path() -> KnowledgeGraph {
        let vocab = Vocab::from_names(["h", "a", "b", "c"], ["r"]).unwrap();
        KnowledgeGraph::build(
            &[Triple::new(0, 0, 1), Triple::new(1, 0, 2), Triple::new(3, 0, 3)],
            vocab,
            true,
        )
        .unwrap()
    }

    fn uniform(g: &KnowledgeGraph) -> Vec<Candidate> {
        let view = SubgraphView::full(g);
        let mask = EdgeMask::constant(&view, 0.5).unwrap();
        let flags = vec![false; mask.len()];
        base_candidates(g, &mask, &vec![0.0; mask.len()], &flags, &[])
    }

    #[test]
    fn inverse_directions_fold_onto_base() {
        let g = path();
        let c = uniform(&g);
        assert_eq!(c.iter().map(|c| c.edge).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn growth_starts_at_head() {
        let g = path();
        let mut c = uniform(&g);
        ppr_priority(&mut c);
        let chosen = grow_connected(&g, &c, 0, 1);
        assert_eq!(c[chosen[0]].edge, 0);
        let all = grow_connected(&g, &c, 0, 10);
        // the self-loop at `c` lives in another component
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn priority_orders_inside_first() {
        let mut c = vec![
            Candidate { edge: 0, omega: 0.9, logit: 0.9, inside: false, mass: 0.5 },
            Candidate { edge: 1, omega: 0.1, logit: 0.1, inside: true, mass: 0.0 },
            Candidate { edge: 2, omega: 0.2, logit: 0.2, inside: false, mass: 0.5 },
            Candidate { edge: 3, omega: 0.3, logit: 0.3, inside: false, mass: 0.9 },
        ];
        ppr_priority(&mut c);
        assert_eq!(c.iter().map(|c| c.edge).collect::<Vec<_>>(), vec![1, 3, 0, 2]);
        omega_priority(&mut c);
        assert_eq!(c.iter().map(|c| c.edge).collect::<Vec<_>>(), vec![0, 3, 2, 1]);
    }
}
