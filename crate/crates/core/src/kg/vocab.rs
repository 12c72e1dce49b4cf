use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;

/// Suffix appended to a base relation name to label its inverse.
pub const INVERSE_SUFFIX: &str = "^-1";

/// Dense name tables for entities and base relations.
///
/// Inverse relations are never stored here; a graph built with inverse
/// augmentation labels relation `r + n` as the inverse of base relation `r`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocab {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    relation_ids: HashMap<String, RelationId>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<E, R>(entities: E, relations: R) -> Result<Self>
    where
        E: IntoIterator,
        E::Item: Into<String>,
        R: IntoIterator,
        R::Item: Into<String>,
    {
        let mut vocab = Vocab::new();
        for name in entities {
            let name = name.into();
            if vocab.entity_ids.contains_key(&name) {
                return Err(Error::config(format!("duplicate entity name `{name}`")));
            }
            vocab.intern_entity(&name);
        }
        for name in relations {
            let name = name.into();
            if vocab.relation_ids.contains_key(&name) {
                return Err(Error::config(format!("duplicate relation name `{name}`")));
            }
            vocab.intern_relation(&name);
        }
        Ok(vocab)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Number of base (non-inverse) relations.
    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> Option<&str> {
        self.entities.get(id as usize).map(String::as_str)
    }

    pub fn relation_name(&self, id: RelationId) -> Option<&str> {
        self.relations.get(id as usize).map(String::as_str)
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entities
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    /// Surface label for a possibly-inverse relation id.
    pub fn relation_label(&self, id: RelationId) -> Option<String> {
        let n = self.relations.len() as RelationId;
        if id < n {
            Some(self.relations[id as usize].clone())
        } else if id < 2 * n {
            Some(format!("{}{INVERSE_SUFFIX}", self.relations[(id - n) as usize]))
        } else {
            None
        }
    }

    /// Inverse of [`Vocab::relation_label`]. Exact base names win over the suffix form.
    pub fn resolve_relation_label(&self, label: &str) -> Option<RelationId> {
        if let Some(id) = self.relation_id(label) {
            return Some(id);
        }
        let base = label.strip_suffix(INVERSE_SUFFIX)?;
        self.relation_id(base)
            .map(|id| id + self.relations.len() as RelationId)
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entities.len() as EntityId;
        self.entities.push(name.to_owned());
        self.entity_ids.insert(name.to_owned(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_ids.get(name) {
            return id;
        }
        let id = self.relations.len() as RelationId;
        self.relations.push(name.to_owned());
        self.relation_ids.insert(name.to_owned(), id);
        id
    }
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    entities: Vec<String>,
    relations: Vec<String>,
}

impl From<VocabRepr> for Vocab {
    fn from(repr: VocabRepr) -> Self {
        let mut vocab = Vocab::new();
        for e in &repr.entities {
            vocab.intern_entity(e);
        }
        for r in &repr.relations {
            vocab.intern_relation(r);
        }
        vocab
    }
}

impl From<Vocab> for VocabRepr {
    fn from(vocab: Vocab) -> Self {
        VocabRepr {
            entities: vocab.entities,
            relations: vocab.relations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense_in_insertion_order() {
        let mut v = Vocab::new();
        assert_eq!(v.intern_entity("a"), 0);
        assert_eq!(v.intern_entity("b"), 1);
        assert_eq!(v.intern_entity("a"), 0);
        assert_eq!(v.num_entities(), 2);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        assert!(Vocab::from_names(["a", "a"], ["r"]).is_err());
        assert!(Vocab::from_names(["a"], ["r", "r"]).is_err());
    }

    #[test]
    fn inverse_labels_round_trip() {
        let v = Vocab::from_names(["a"], ["likes", "knows"]).unwrap();
        assert_eq!(v.relation_label(3).as_deref(), Some("knows^-1"));
        assert_eq!(v.resolve_relation_label("knows^-1"), Some(3));
        assert_eq!(v.resolve_relation_label("likes"), Some(0));
        assert_eq!(v.relation_label(4), None);
        assert_eq!(v.resolve_relation_label("nope^-1"), None);
    }
}
