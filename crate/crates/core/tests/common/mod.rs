#![allow(dead_code)]

use kgxk_core::evaluator::{train_evaluator, DropSchedule};
use kgxk_core::explainer::{ExplainerConfig, PprConfig};
use kgxk_core::kg::{make_queries, KnowledgeGraph, KnownTriples, Query, Triple, Vocab};
use kgxk_core::model::{BackboneConfig, Model, TrainConfig};
use kgxk_core::synthetic::{generate, SyntheticConfig, SyntheticKg};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniformly random multigraph-free KG with inverse edges.
pub fn random_kg(seed: u64, entities: usize, relations: usize, triples: usize) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts = Vec::with_capacity(triples);
    while ts.len() < triples {
        let t = Triple::new(
            rng.random_range(0..entities as u32),
            rng.random_range(0..relations as u32),
            rng.random_range(0..entities as u32),
        );
        if !ts.contains(&t) {
            ts.push(t);
        }
    }
    let vocab = Vocab::from_names(
        (0..entities).map(|i| format!("e{i}")),
        (0..relations).map(|i| format!("r{i}")),
    )
    .unwrap();
    KnowledgeGraph::build(&ts, vocab, true).unwrap()
}

/// A generated KG with rule-target queries for every split.
pub struct Setup {
    pub kg: SyntheticKg,
    pub graph: KnowledgeGraph,
    pub known: KnownTriples,
    pub train: Vec<Query>,
    pub valid: Vec<Query>,
    pub test: Vec<Query>,
}

impl Setup {
    pub fn new(cfg: &SyntheticConfig) -> Self {
        let kg = generate(cfg).unwrap();
        let graph = kg.dataset.train_graph().unwrap();
        let nb = graph.num_base_relations();
        let known = KnownTriples::new(kg.dataset.all_triples(), nb);
        let targets = |ts: &[Triple]| -> Vec<Query> {
            make_queries(ts, nb)
                .into_iter()
                .filter(|q| kg.is_target_relation(q.relation))
                .collect()
        };
        let train = targets(&kg.dataset.train);
        let valid = targets(&kg.dataset.valid);
        let test = targets(&kg.dataset.test);
        Self {
            kg,
            graph,
            known,
            train,
            valid,
            test,
        }
    }
}

/// One planted path per answer, sparse noise.
pub fn single_path_kg(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        seed,
        ..SyntheticConfig::default()
    }
}

/// Two bodies per rule, both planted, plus a one-path near miss per instance.
pub fn multi_path_kg(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        num_entities: 600,
        bodies_per_rule: 2,
        support: 2,
        distractors_per_instance: 1,
        distractor_support: 1,
        noise_triples: 900,
        seed,
        ..SyntheticConfig::default()
    }
}

pub fn train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        seed,
        ..TrainConfig::default()
    }
}

pub fn distance_evaluator(s: &Setup, seed: u64) -> Model {
    train_evaluator(
        &BackboneConfig::default(),
        &s.graph,
        &DropSchedule::distance_decay(0.95, 0.7),
        &s.train,
        &train_config(seed),
        seed,
    )
    .unwrap()
}

/// PageRank weights used by the planted-recovery experiments. The default
/// unit weights push every mask value to zero on these graphs because the
/// outside set is far larger than the inside set.
pub fn tuned_ppr() -> PprConfig {
    PprConfig {
        beta_in: 0.1,
        beta_out: 0.01,
        ..PprConfig::default()
    }
}

pub fn explainer_config(seed: u64, budget: usize) -> ExplainerConfig {
    ExplainerConfig {
        epochs: 10,
        budget,
        lambda_size: 0.1,
        seed,
        ..ExplainerConfig::default()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Spearman correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Disjoint-set forest with path halving.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}
