//! Synthetic knowledge graphs with planted two-hop rules.
//!
//! Each rule `i` has a target relation `t_i` and one or more bodies
//! `a_ij . b_ij`. An instance picks a head `h` and an answer `x` and plants
//! `support` body paths `h -a-> y -b-> x`, each through its own fresh
//! intermediate `y`. The target triple `(h, t_i, x)` is what gets split into
//! train/valid/test; every planted path edge lives in the training graph.
//!
//! Optional near-miss distractors are entities reachable from `h` through
//! fewer body paths than the answer, and noise triples use dedicated noise
//! relations so they never complete a body.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Dataset, EntityId, RelationId, Triple, Vocab};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_entities: usize,
    pub num_rules: usize,
    /// Distinct two-hop bodies per rule.
    pub bodies_per_rule: usize,
    pub instances_per_rule: usize,
    /// Body paths planted between each head and its answer.
    pub support: usize,
    pub distractors_per_instance: usize,
    /// Body paths planted towards each distractor; must be below `support`.
    pub distractor_support: usize,
    pub noise_relations: usize,
    pub noise_triples: usize,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_entities: 300,
            num_rules: 3,
            bodies_per_rule: 1,
            instances_per_rule: 30,
            support: 1,
            distractors_per_instance: 0,
            distractor_support: 0,
            noise_relations: 3,
            noise_triples: 300,
            valid_fraction: 0.15,
            test_fraction: 0.15,
            seed: 0,
        }
    }
}

/// One planted body path `head -first-> mid -second-> tail`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlantedPath {
    pub first: Triple,
    pub second: Triple,
}

#[derive(Clone, Debug)]
pub struct SyntheticKg {
    pub dataset: Dataset,
    pub config: SyntheticConfig,
    /// Relation ids of the rule targets, indexed by rule.
    pub target_relations: Vec<RelationId>,
    /// Supporting paths for every target triple, in instance order.
    pub support_paths: Vec<(Triple, Vec<PlantedPath>)>,
}

impl SyntheticKg {
    pub fn paths_for(&self, target: Triple) -> Option<&[PlantedPath]> {
        self.support_paths
            .iter()
            .find(|(t, _)| *t == target)
            .map(|(_, p)| p.as_slice())
    }

    pub fn is_target_relation(&self, r: RelationId) -> bool {
        self.target_relations.contains(&r)
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.num_rules == 0 || self.bodies_per_rule == 0 || self.instances_per_rule == 0 {
            return Err(Error::config("rules, bodies and instances must be positive"));
        }
        if self.support == 0 || self.support > self.bodies_per_rule {
            return Err(Error::config("support must lie in [1, bodies_per_rule]"));
        }
        if self.distractors_per_instance > 0 && self.distractor_support >= self.support {
            return Err(Error::config("distractor_support must be below support"));
        }
        if self.distractors_per_instance > 0 && self.distractor_support == 0 {
            return Err(Error::config("distractors need at least one body path"));
        }
        let frac = self.valid_fraction + self.test_fraction;
        if !(0.0..1.0).contains(&frac) || self.valid_fraction < 0.0 || self.test_fraction < 0.0 {
            return Err(Error::config("split fractions must be non-negative and sum below 1"));
        }
        Ok(())
    }
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticKg> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let instances = config.num_rules * config.instances_per_rule;
    let paths_per_instance =
        config.support + config.distractors_per_instance * config.distractor_support;
    let intermediates = instances * paths_per_instance;
    let anchors = config.num_entities.saturating_sub(intermediates);
    if anchors < 2 + config.distractors_per_instance {
        return Err(Error::config(format!(
            "{} entities cannot host {intermediates} path intermediates",
            config.num_entities
        )));
    }

    let mut relations = Vec::new();
    let mut target_relations = Vec::new();
    let mut bodies: Vec<Vec<(RelationId, RelationId)>> = Vec::new();
    for i in 0..config.num_rules {
        target_relations.push(relations.len() as RelationId);
        relations.push(format!("target_{i}"));
        let mut rule_bodies = Vec::new();
        for j in 0..config.bodies_per_rule {
            let a = relations.len() as RelationId;
            relations.push(format!("body_{i}_{j}_a"));
            let b = relations.len() as RelationId;
            relations.push(format!("body_{i}_{j}_b"));
            rule_bodies.push((a, b));
        }
        bodies.push(rule_bodies);
    }
    let noise: Vec<RelationId> = (0..config.noise_relations)
        .map(|k| {
            relations.push(format!("noise_{k}"));
            (relations.len() - 1) as RelationId
        })
        .collect();
    let vocab = Vocab::from_names((0..config.num_entities).map(|i| format!("e{i}")), relations)?;

    // anchors are heads/answers/distractors, the rest are single-use intermediates
    let mut entity_ids: Vec<EntityId> = (0..config.num_entities as EntityId).collect();
    entity_ids.shuffle(&mut rng);
    let (anchor_ids, mid_ids) = entity_ids.split_at(anchors);
    let mut mids = mid_ids.iter().copied();

    let mut graph_triples = Vec::new();
    let mut targets = Vec::new();
    let mut support_paths = Vec::new();
    let mut used_targets = HashSet::new();
    for (rule, rule_bodies) in bodies.iter().enumerate() {
        for _ in 0..config.instances_per_rule {
            let (head, answer) = loop {
                let h = anchor_ids[rng.random_range(0..anchors)];
                let x = anchor_ids[rng.random_range(0..anchors)];
                let t = Triple::new(h, target_relations[rule], x);
                if h != x && used_targets.insert(t) {
                    break (h, x);
                }
            };
            let mut order: Vec<usize> = (0..rule_bodies.len()).collect();
            order.shuffle(&mut rng);
            let mut paths = Vec::new();
            for &j in order.iter().take(config.support) {
                let (a, b) = rule_bodies[j];
                let y = mids.next().expect("intermediate budget checked above");
                let path = PlantedPath {
                    first: Triple::new(head, a, y),
                    second: Triple::new(y, b, answer),
                };
                graph_triples.push(path.first);
                graph_triples.push(path.second);
                paths.push(path);
            }
            for _ in 0..config.distractors_per_instance {
                let c = loop {
                    let c = anchor_ids[rng.random_range(0..anchors)];
                    if c != head && c != answer {
                        break c;
                    }
                };
                order.shuffle(&mut rng);
                for &j in order.iter().take(config.distractor_support) {
                    let (a, b) = rule_bodies[j];
                    let y = mids.next().expect("intermediate budget checked above");
                    graph_triples.push(Triple::new(head, a, y));
                    graph_triples.push(Triple::new(y, b, c));
                }
            }
            let target = Triple::new(head, target_relations[rule], answer);
            targets.push(target);
            support_paths.push((target, paths));
        }
    }
    if !noise.is_empty() {
        for _ in 0..config.noise_triples {
            let h = rng.random_range(0..config.num_entities as EntityId);
            let t = rng.random_range(0..config.num_entities as EntityId);
            let r = noise[rng.random_range(0..noise.len())];
            graph_triples.push(Triple::new(h, r, t));
        }
    }

    let mut split_order: Vec<usize> = (0..targets.len()).collect();
    split_order.shuffle(&mut rng);
    let n_valid = (config.valid_fraction * targets.len() as f64).round() as usize;
    let n_test = (config.test_fraction * targets.len() as f64).round() as usize;
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let mut train = graph_triples;
    for (rank, &i) in split_order.iter().enumerate() {
        if rank < n_valid {
            valid.push(targets[i]);
        } else if rank < n_valid + n_test {
            test.push(targets[i]);
        } else {
            train.push(targets[i]);
        }
    }
    // the dataset stores unique triples; noise may collide
    let mut seen = HashSet::new();
    train.retain(|t| seen.insert(*t));

    Ok(SyntheticKg {
        dataset: Dataset {
            vocab,
            train,
            valid,
            test,
        },
        config: config.clone(),
        target_relations,
        support_paths,
    })
}
