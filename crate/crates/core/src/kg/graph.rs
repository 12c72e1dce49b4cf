use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::vocab::{EntityId, RelationId, Vocab};
use crate::error::{Error, Result};

pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub const fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }

    /// The reversed triple under the `r + n` inverse encoding.
    pub fn inverse(self, num_base_relations: u32) -> Self {
        let n = num_base_relations;
        let relation = if self.relation < n {
            self.relation + n
        } else {
            self.relation - n
        };
        Triple::new(self.tail, relation, self.head)
    }
}

/// Immutable, indexed multigraph of typed triples.
///
/// With inverse augmentation the first `num_base_edges` edges are the input
/// triples in input order and edge `e + num_base_edges` is the inverse of `e`.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    vocab: Vocab,
    inverse: bool,
    edges: Vec<Triple>,
    num_base_edges: usize,
    out_offsets: Vec<usize>,
    out_edges: Vec<EdgeId>,
    in_offsets: Vec<usize>,
    in_edges: Vec<EdgeId>,
    lookup: HashMap<Triple, EdgeId>,
    duplicates: usize,
}

impl KnowledgeGraph {
    /// Builds the graph, removing duplicate triples. The number removed is
    /// reported by [`KnowledgeGraph::duplicates_removed`].
    pub fn build(triples: &[Triple], vocab: Vocab, add_inverse: bool) -> Result<Self> {
        let n_ent = vocab.num_entities() as u32;
        let n_rel = vocab.num_relations() as u32;
        let mut seen = HashSet::with_capacity(triples.len());
        let mut base = Vec::with_capacity(triples.len());
        for t in triples {
            if t.head >= n_ent || t.tail >= n_ent {
                return Err(Error::Bounds(format!(
                    "triple {t:?} references an entity outside [0, {n_ent})"
                )));
            }
            if t.relation >= n_rel {
                return Err(Error::Bounds(format!(
                    "triple {t:?} references a relation outside [0, {n_rel})"
                )));
            }
            if seen.insert(*t) {
                base.push(*t);
            }
        }
        let duplicates = triples.len() - base.len();
        if duplicates > 0 {
            log::warn!("dropped {duplicates} duplicate triples while building graph");
        }

        let num_base_edges = base.len();
        let mut edges = base;
        if add_inverse {
            edges.extend_from_within(..);
            for e in &mut edges[num_base_edges..] {
                *e = e.inverse(n_rel);
            }
        }

        let n = n_ent as usize;
        let (out_offsets, out_edges) = csr(n, edges.iter().map(|t| t.head as usize));
        let (in_offsets, in_edges) = csr(n, edges.iter().map(|t| t.tail as usize));
        let mut lookup = HashMap::with_capacity(edges.len());
        for (id, t) in edges.iter().enumerate() {
            lookup.insert(*t, id);
        }

        Ok(Self {
            vocab,
            inverse: add_inverse,
            edges,
            num_base_edges,
            out_offsets,
            out_edges,
            in_offsets,
            in_edges,
            lookup,
            duplicates,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_base_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Size of the relation space edges live in (doubled under inverse augmentation).
    pub fn num_relations(&self) -> usize {
        if self.inverse {
            2 * self.vocab.num_relations()
        } else {
            self.vocab.num_relations()
        }
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_base_edges(&self) -> usize {
        self.num_base_edges
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Triple {
        self.edges[id]
    }

    pub fn find_edge(&self, t: Triple) -> Option<EdgeId> {
        self.lookup.get(&t).copied()
    }

    /// The paired inverse edge, when the graph is augmented.
    pub fn inverse_edge(&self, id: EdgeId) -> Option<EdgeId> {
        if !self.inverse {
            return None;
        }
        Some(if id < self.num_base_edges {
            id + self.num_base_edges
        } else {
            id - self.num_base_edges
        })
    }

    /// Edge id of the base triple underlying `id`.
    pub fn base_edge(&self, id: EdgeId) -> EdgeId {
        if id < self.num_base_edges {
            id
        } else {
            id - self.num_base_edges
        }
    }

    pub fn out_edges(&self, entity: EntityId) -> &[EdgeId] {
        let v = entity as usize;
        &self.out_edges[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    pub fn in_edges(&self, entity: EntityId) -> &[EdgeId] {
        let v = entity as usize;
        &self.in_edges[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// Edges touching `entity` in either direction. Self-loops appear twice.
    pub fn incident_edges(&self, entity: EntityId) -> impl Iterator<Item = EdgeId> + '_ {
        self.out_edges(entity)
            .iter()
            .chain(self.in_edges(entity))
            .copied()
    }

    pub fn check_entity(&self, entity: EntityId) -> Result<()> {
        if (entity as usize) < self.num_entities() {
            Ok(())
        } else {
            Err(Error::Bounds(format!(
                "entity {entity} outside [0, {})",
                self.num_entities()
            )))
        }
    }

    pub fn check_relation(&self, relation: RelationId) -> Result<()> {
        if (relation as usize) < self.num_relations() {
            Ok(())
        } else {
            Err(Error::Bounds(format!(
                "relation {relation} outside [0, {})",
                self.num_relations()
            )))
        }
    }
}

fn csr(n: usize, keys: impl Iterator<Item = usize> + Clone) -> (Vec<usize>, Vec<EdgeId>) {
    let mut offsets = vec![0usize; n + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut items = vec![0; offsets[n]];
    for (id, k) in keys.enumerate() {
        items[cursor[k]] = id;
        cursor[k] += 1;
    }
    (offsets, items)
}
