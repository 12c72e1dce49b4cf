use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::graph::Triple;
use super::vocab::{EntityId, RelationId, Vocab};

/// A `(head, relation, ?)` task with its known answer. Head prediction is
/// expressed through the inverse relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub head: EntityId,
    pub relation: RelationId,
    pub answer: EntityId,
}

impl Query {
    pub const fn new(head: EntityId, relation: RelationId, answer: EntityId) -> Self {
        Self {
            head,
            relation,
            answer,
        }
    }

    pub fn triple(&self) -> Triple {
        Triple::new(self.head, self.relation, self.answer)
    }
}

/// Tail query `(h, r) -> t` then head query `(t, r^-1) -> h` for each triple.
pub fn make_queries(triples: &[Triple], num_base_relations: usize) -> Vec<Query> {
    let n = num_base_relations as u32;
    triples
        .iter()
        .flat_map(|t| {
            [
                Query::new(t.head, t.relation, t.tail),
                Query::new(t.tail, t.relation + n, t.head),
            ]
        })
        .collect()
}

/// A query written as `head,relation` or `head,relation,tail` with surface
/// names; the relation may carry the inverse suffix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySpec {
    pub head: String,
    pub relation: String,
    pub tail: Option<String>,
}

pub fn parse_query_spec(s: &str) -> Result<QuerySpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("expected `head,relation[,tail]`, got {} fields", parts.len()));
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err("query fields must be non-empty".into());
    }
    Ok(QuerySpec {
        head: parts[0].to_owned(),
        relation: parts[1].to_owned(),
        tail: parts.get(2).map(|t| (*t).to_owned()),
    })
}

impl QuerySpec {
    pub fn resolve(&self, vocab: &Vocab) -> Result<(EntityId, RelationId, Option<EntityId>), String> {
        let head = vocab
            .entity_id(&self.head)
            .ok_or_else(|| format!("unknown entity `{}`", self.head))?;
        let relation = vocab
            .resolve_relation_label(&self.relation)
            .ok_or_else(|| format!("unknown relation `{}`", self.relation))?;
        let tail = match &self.tail {
            Some(t) => Some(vocab.entity_id(t).ok_or_else(|| format!("unknown entity `{t}`"))?),
            None => None,
        };
        Ok((head, relation, tail))
    }
}

/// Entities that remain rankable for a query.
pub type CandidateMask = FixedBitSet;

/// Every known true triple in both directions, indexed by `(head, relation)`.
#[derive(Clone, Debug, Default)]
pub struct KnownTriples {
    tails: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
}

impl KnownTriples {
    pub fn new<'a>(triples: impl IntoIterator<Item = &'a Triple>, num_base_relations: usize) -> Self {
        let mut known = Self::default();
        for t in triples {
            known.insert(*t);
            known.insert(t.inverse(num_base_relations as u32));
        }
        known
    }

    pub fn insert(&mut self, t: Triple) {
        self.tails.entry((t.head, t.relation)).or_default().insert(t.tail);
    }

    pub fn contains(&self, t: Triple) -> bool {
        self.tails
            .get(&(t.head, t.relation))
            .is_some_and(|s| s.contains(&t.tail))
    }

    pub fn tails(&self, head: EntityId, relation: RelationId) -> impl Iterator<Item = EntityId> + '_ {
        self.tails
            .get(&(head, relation))
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }
}

/// Filtered-ranking candidates: every entity except other known answers.
pub fn filtered_candidates(q: &Query, known: &KnownTriples, num_entities: usize) -> CandidateMask {
    let mut mask = FixedBitSet::with_capacity(num_entities);
    mask.insert_range(..);
    for t in known.tails(q.head, q.relation) {
        if t != q.answer && (t as usize) < num_entities {
            mask.set(t as usize, false);
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_spec_forms() {
        let q = parse_query_spec(" a , r^-1 ").unwrap();
        assert_eq!((q.head.as_str(), q.relation.as_str(), q.tail), ("a", "r^-1", None));
        assert_eq!(parse_query_spec("a,r,b").unwrap().tail.as_deref(), Some("b"));
        assert!(parse_query_spec("a").is_err());
        assert!(parse_query_spec("a,,b").is_err());
        assert!(parse_query_spec("a,r,b,c").is_err());
        let vocab = Vocab::from_names(["a", "b"], ["r"]).unwrap();
        assert_eq!(parse_query_spec("b,r^-1").unwrap().resolve(&vocab), Ok((1, 1, None)));
        assert!(parse_query_spec("z,r").unwrap().resolve(&vocab).is_err());
    }

    #[test]
    fn each_triple_yields_two_queries() {
        let qs = make_queries(&[Triple::new(0, 1, 2)], 3);
        assert_eq!(qs, vec![Query::new(0, 1, 2), Query::new(2, 4, 0)]);
        assert!(make_queries(&[], 3).is_empty());
    }

    #[test]
    fn competing_answers_are_filtered() {
        let known = KnownTriples::new(&[Triple::new(0, 0, 1), Triple::new(0, 0, 2)], 1);
        let mask = filtered_candidates(&Query::new(0, 0, 1), &known, 4);
        assert!(mask.contains(1));
        assert!(!mask.contains(2));
        assert!(mask.contains(0) && mask.contains(3));
    }

    #[test]
    fn no_competitors_keeps_everyone() {
        let known = KnownTriples::new(&[Triple::new(0, 0, 1)], 1);
        let mask = filtered_candidates(&Query::new(3, 0, 1), &known, 4);
        assert_eq!(mask.count_ones(..), 4);
    }
}
