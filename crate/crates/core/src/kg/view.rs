use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::Rng;

use super::graph::{EdgeId, KnowledgeGraph, Triple};
use super::vocab::EntityId;
use crate::error::{Error, Result};

/// A subset of a graph's edges. Never copies node or edge data.
#[derive(Clone, Debug)]
pub struct SubgraphView<'g> {
    base: &'g KnowledgeGraph,
    kept: FixedBitSet,
}

impl PartialEq for SubgraphView<'_> {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.base, other.base) && self.kept == other.kept
    }
}

impl<'g> SubgraphView<'g> {
    pub fn full(base: &'g KnowledgeGraph) -> Self {
        let mut kept = FixedBitSet::with_capacity(base.num_edges());
        kept.insert_range(..);
        Self { base, kept }
    }

    pub fn empty(base: &'g KnowledgeGraph) -> Self {
        Self {
            base,
            kept: FixedBitSet::with_capacity(base.num_edges()),
        }
    }

    pub fn from_edges(base: &'g KnowledgeGraph, edges: impl IntoIterator<Item = EdgeId>) -> Result<Self> {
        let mut view = Self::empty(base);
        for e in edges {
            if e >= base.num_edges() {
                return Err(Error::Bounds(format!(
                    "edge {e} outside [0, {})",
                    base.num_edges()
                )));
            }
            view.kept.insert(e);
        }
        Ok(view)
    }

    pub fn graph(&self) -> &'g KnowledgeGraph {
        self.base
    }

    pub fn contains(&self, edge: EdgeId) -> bool {
        self.kept.contains(edge)
    }

    pub fn num_kept(&self) -> usize {
        self.kept.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_clear()
    }

    /// Kept edge ids in ascending order.
    pub fn kept_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.kept.ones()
    }

    pub fn kept_bits(&self) -> &FixedBitSet {
        &self.kept
    }

    pub fn remove(&mut self, edge: EdgeId) {
        if edge < self.kept.len() {
            self.kept.set(edge, false);
        }
    }

    /// Removes `triple` and, if present, its inverse.
    pub fn remove_triple(&mut self, triple: Triple) {
        if let Some(e) = self.base.find_edge(triple) {
            self.remove(e);
            if let Some(inv) = self.base.inverse_edge(e) {
                self.remove(inv);
            }
        }
    }

    pub fn intersection(&self, other: &SubgraphView<'g>) -> SubgraphView<'g> {
        let mut kept = self.kept.clone();
        kept.intersect_with(&other.kept);
        Self {
            base: self.base,
            kept,
        }
    }

    /// Undirected hop distances from `seeds` over the kept edges.
    pub fn hop_distances(&self, seeds: &[EntityId]) -> Result<Vec<Option<u32>>> {
        let g = self.base;
        let mut dist = vec![None; g.num_entities()];
        let mut queue = VecDeque::new();
        for &s in seeds {
            g.check_entity(s)?;
            if dist[s as usize].is_none() {
                dist[s as usize] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize].unwrap();
            for e in g.incident_edges(v) {
                if !self.kept.contains(e) {
                    continue;
                }
                let t = g.edge(e);
                let other = if t.head == v { t.tail } else { t.head };
                if dist[other as usize].is_none() {
                    dist[other as usize] = Some(d + 1);
                    queue.push_back(other);
                }
            }
        }
        Ok(dist)
    }

    /// Number of connected components of the subgraph induced by kept edges,
    /// ignoring isolated entities.
    pub fn component_count(&self) -> usize {
        let g = self.base;
        let mut parent: Vec<usize> = (0..g.num_entities()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut touched = FixedBitSet::with_capacity(g.num_entities());
        for e in self.kept.ones() {
            let t = g.edge(e);
            let (a, b) = (t.head as usize, t.tail as usize);
            touched.insert(a);
            touched.insert(b);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        touched
            .ones()
            .filter(|&v| find(&mut parent, v) == v)
            .count()
    }
}

/// Edges with both endpoints within `radius` undirected hops of some seed.
pub fn ego_network<'g>(
    view: &SubgraphView<'g>,
    seeds: &[EntityId],
    radius: u32,
) -> Result<SubgraphView<'g>> {
    if seeds.is_empty() {
        return Err(Error::contract("ego network needs at least one seed"));
    }
    let dist = view.hop_distances(seeds)?;
    let within = |v: EntityId| matches!(dist[v as usize], Some(d) if d <= radius);
    let g = view.graph();
    let mut out = SubgraphView::empty(g);
    for e in view.kept_edges() {
        let t = g.edge(e);
        if within(t.head) && within(t.tail) {
            out.kept.insert(e);
        }
    }
    Ok(out)
}

/// Drop probability as a function of an edge's hop distance (`None` = unreachable).
pub trait DistanceSchedule {
    fn drop_probability(&self, hops: Option<u32>) -> f64;
}

impl<F: Fn(Option<u32>) -> f64> DistanceSchedule for F {
    fn drop_probability(&self, hops: Option<u32>) -> f64 {
        self(hops)
    }
}

/// `p_max * (1 - gamma^d)`, with unreachable edges dropped at `p_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceDecay {
    pub p_max: f64,
    pub gamma: f64,
}

impl Default for DistanceDecay {
    fn default() -> Self {
        Self {
            p_max: 0.95,
            gamma: 0.7,
        }
    }
}

impl DistanceSchedule for DistanceDecay {
    fn drop_probability(&self, hops: Option<u32>) -> f64 {
        match hops {
            Some(d) => self.p_max * (1.0 - self.gamma.powi(d as i32)),
            None => self.p_max,
        }
    }
}

/// Calls `decide` once per base triple present in `view` and drops the triple
/// together with its inverse when it returns true.
fn paired_drop<'g>(
    view: &SubgraphView<'g>,
    mut decide: impl FnMut(EdgeId) -> Result<bool>,
) -> Result<SubgraphView<'g>> {
    let g = view.graph();
    let mut out = view.clone();
    for e in 0..g.num_base_edges() {
        let inv = g.inverse_edge(e);
        let present = view.contains(e) || inv.is_some_and(|i| view.contains(i));
        if present && decide(e)? {
            out.remove(e);
            if let Some(i) = inv {
                out.remove(i);
            }
        }
    }
    Ok(out)
}

/// Drops each base triple (with its inverse) independently with probability `p`.
pub fn drop_edges_uniform<'g, R: Rng + ?Sized>(
    view: &SubgraphView<'g>,
    p: f64,
    rng: &mut R,
) -> Result<SubgraphView<'g>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("drop probability {p} outside [0, 1]")));
    }
    paired_drop(view, |_| Ok(rng.random::<f64>() < p))
}

/// Drops triples with a probability that depends on their hop distance from
/// `anchor`. An edge's distance is the smaller of its endpoints' distances.
pub fn drop_edges_distance<'g, R: Rng + ?Sized>(
    view: &SubgraphView<'g>,
    anchor: EntityId,
    schedule: &dyn DistanceSchedule,
    rng: &mut R,
) -> Result<SubgraphView<'g>> {
    let dist = view.hop_distances(&[anchor])?;
    let g = view.graph();
    paired_drop(view, |e| {
        let t = g.edge(e);
        let hops = match (dist[t.head as usize], dist[t.tail as usize]) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let p = schedule.drop_probability(hops);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!(
                "schedule returned drop probability {p} for distance {hops:?}"
            )));
        }
        Ok(rng.random::<f64>() < p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Vocab;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize, triples: &[(u32, u32, u32)]) -> KnowledgeGraph {
        let vocab = Vocab::from_names((0..n).map(|i| format!("e{i}")), ["r0", "r1"]).unwrap();
        let ts: Vec<Triple> = triples.iter().map(|&(h, r, t)| Triple::new(h, r, t)).collect();
        KnowledgeGraph::build(&ts, vocab, true).unwrap()
    }

    #[test]
    fn ego_radius_one_on_path() {
        let g = graph(4, &[(0, 0, 1), (1, 0, 2), (2, 0, 3)]);
        let ego = ego_network(&SubgraphView::full(&g), &[0], 1).unwrap();
        let kept: Vec<_> = ego.kept_edges().collect();
        assert_eq!(kept, vec![0, 3]);
    }

    #[test]
    fn ego_radius_zero_keeps_only_seed_self_loops() {
        let g = graph(3, &[(0, 0, 1), (0, 1, 0)]);
        let ego = ego_network(&SubgraphView::full(&g), &[0], 0).unwrap();
        assert_eq!(ego.num_kept(), 2);
        let ego = ego_network(&SubgraphView::full(&g), &[2], 0).unwrap();
        assert!(ego.is_empty());
    }

    #[test]
    fn ego_saturates_to_component() {
        let g = graph(6, &[(0, 0, 1), (1, 0, 2), (3, 0, 4)]);
        let ego = ego_network(&SubgraphView::full(&g), &[0], 10).unwrap();
        assert_eq!(ego.kept_edges().collect::<Vec<_>>(), vec![0, 1, 3, 4]);
    }

    #[test]
    fn ego_rejects_bad_seeds() {
        let g = graph(2, &[(0, 0, 1)]);
        let full = SubgraphView::full(&g);
        assert!(ego_network(&full, &[7], 1).is_err());
        assert!(ego_network(&full, &[], 1).is_err());
    }

    #[test]
    fn uniform_drop_extremes() {
        let g = graph(4, &[(0, 0, 1), (1, 0, 2), (2, 1, 3)]);
        let full = SubgraphView::full(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(drop_edges_uniform(&full, 0.0, &mut rng).unwrap(), full);
        assert!(drop_edges_uniform(&full, 1.0, &mut rng).unwrap().is_empty());
        assert!(drop_edges_uniform(&full, 1.5, &mut rng).is_err());
    }

    #[test]
    fn decay_schedule_values() {
        let s = DistanceDecay::default();
        assert_eq!(s.drop_probability(Some(0)), 0.0);
        assert!((s.drop_probability(Some(1)) - 0.285).abs() < 1e-12);
        assert!((s.drop_probability(Some(3)) - 0.62415).abs() < 1e-12);
        assert_eq!(s.drop_probability(None), 0.95);
    }

    #[test]
    fn star_center_anchor_keeps_everything() {
        let g = graph(5, &[(0, 0, 1), (2, 0, 0), (0, 1, 3), (4, 1, 0)]);
        let full = SubgraphView::full(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = drop_edges_distance(&full, 0, &DistanceDecay::default(), &mut rng).unwrap();
        assert_eq!(v, full);
    }

    #[test]
    fn out_of_range_schedule_is_config_error() {
        let g = graph(2, &[(0, 0, 1)]);
        let bad = |_: Option<u32>| 1.2;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = drop_edges_distance(&SubgraphView::full(&g), 0, &bad, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn component_count_ignores_isolated_nodes() {
        let g = graph(6, &[(0, 0, 1), (1, 0, 2), (3, 0, 4)]);
        assert_eq!(SubgraphView::full(&g).component_count(), 2);
        assert_eq!(SubgraphView::empty(&g).component_count(), 0);
    }
}
