mod common;

use common::random_kg;
use kgxk_core::evaluator::{train_evaluator, DropSchedule};
use kgxk_core::kg::{make_queries, EdgeId, KnowledgeGraph, Query, SubgraphView, Triple, Vocab};
use kgxk_core::model::{
    fidelity_loss, forward, forward_trace, init_model, train_backbone, Aggregation, BackboneConfig,
    EdgeMask, MessageKind, Model, TrainConfig,
};
use proptest::prelude::*;

fn configs() -> Vec<BackboneConfig> {
    let mut out = Vec::new();
    for aggregation in [Aggregation::Sum, Aggregation::Mean] {
        for message in [MessageKind::DistMult, MessageKind::Translation] {
            out.push(BackboneConfig {
                embed_dim: 6,
                num_layers: 2,
                aggregation,
                message,
            });
        }
    }
    out
}

fn first_query(g: &KnowledgeGraph) -> Query {
    let t = g.edge(0);
    Query::new(t.head, t.relation, t.tail)
}

fn quick_train(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        negatives: 4,
        seed,
        ..TrainConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zero_weight_is_deletion(seed in 0u64..10_000, drop_bits in any::<u64>()) {
        let g = random_kg(seed, 12, 3, 20);
        let full = SubgraphView::full(&g);
        let q = first_query(&g);
        for cfg in configs() {
            let model = init_model(&cfg, &g, seed).unwrap();
            let edges: Vec<EdgeId> = full.kept_edges().collect();
            let mut values = vec![1.0; edges.len()];
            let mut reduced = full.clone();
            for (i, &e) in edges.iter().enumerate() {
                if drop_bits >> (i % 64) & 1 == 1 {
                    values[i] = 0.0;
                    reduced.remove(e);
                }
            }
            let masked = EdgeMask::new(edges, values).unwrap();
            let a = forward(&model, &full, &q, Some(&masked)).unwrap().scores;
            let b = forward(&model, &reduced, &q, None).unwrap().scores;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn unit_mask_is_neutral(seed in 0u64..10_000) {
        let g = random_kg(seed, 10, 2, 18);
        let full = SubgraphView::full(&g);
        let q = first_query(&g);
        for cfg in configs() {
            let model = init_model(&cfg, &g, seed).unwrap();
            let ones = EdgeMask::constant(&full, 1.0).unwrap();
            let a = forward(&model, &full, &q, Some(&ones)).unwrap().scores;
            let b = forward(&model, &full, &q, None).unwrap().scores;
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn entity_relabeling_permutes_scores(seed in 0u64..10_000, shift in 1u32..11) {
        let n = 12u32;
        let g = random_kg(seed, n as usize, 3, 20);
        let sigma = |v: u32| (v + shift) % n;
        let base: Vec<Triple> = g.edges()[..g.num_base_edges()].to_vec();
        let moved: Vec<Triple> = base.iter().map(|t| Triple::new(sigma(t.head), t.relation, sigma(t.tail))).collect();
        let vocab = Vocab::from_names((0..n).map(|i| format!("e{i}")), (0..3).map(|i| format!("r{i}"))).unwrap();
        let h = KnowledgeGraph::build(&moved, vocab, true).unwrap();
        let q = first_query(&g);
        let pq = Query::new(sigma(q.head), q.relation, sigma(q.answer));
        for cfg in configs() {
            let model = init_model(&cfg, &g, seed).unwrap();
            let a = forward(&model, &SubgraphView::full(&g), &q, None).unwrap().scores;
            let b = forward(&model, &SubgraphView::full(&h), &pq, None).unwrap().scores;
            for v in 0..n {
                let (x, y) = (a[v as usize], b[sigma(v) as usize]);
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn parameter_gradients_match_finite_differences() {
    let g = random_kg(3, 8, 2, 12);
    let view = SubgraphView::full(&g);
    let q = first_query(&g);
    for cfg in configs() {
        let mut model = init_model(&cfg, &g, 3).unwrap();
        for l in &mut model.params.layers {
            l.bias.iter_mut().enumerate().for_each(|(i, b)| *b = 0.05 + 0.01 * i as f64);
        }
        let trace = forward_trace(&model, &view, &q, None).unwrap();
        let (_, dscores) = fidelity_loss(&trace.scores, q.answer as usize);
        let mut grads = model.params.zeros_like();
        trace.backward(&model, &dscores, Some(&mut grads), None).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();

        let loss = |m: &Model| {
            let s = forward(m, &view, &q, None).unwrap().scores;
            fidelity_loss(&s, q.answer as usize).0
        };
        let h = 1e-5;
        for (ti, tensor) in analytic.iter().enumerate() {
            for i in (0..tensor.len()).step_by(3) {
                let mut up = model.clone();
                up.params.tensors_mut()[ti][i] += h;
                let mut down = model.clone();
                down.params.tensors_mut()[ti][i] -= h;
                let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
                let err = (numeric - tensor[i]).abs();
                assert!(
                    err <= 1e-6 || err <= 1e-4 * numeric.abs().max(tensor[i].abs()),
                    "{cfg:?} tensor {ti}[{i}]: analytic {} numeric {numeric}",
                    tensor[i]
                );
            }
        }
    }
}

fn small_setup() -> (KnowledgeGraph, Vec<Query>) {
    let g = random_kg(1, 20, 3, 40);
    let base: Vec<Triple> = g.edges()[..g.num_base_edges()].to_vec();
    let queries = make_queries(&base, g.num_base_relations());
    (g, queries)
}

#[test]
fn training_is_deterministic() {
    let (g, qs) = small_setup();
    let init = init_model(&BackboneConfig::default(), &g, 4).unwrap();
    let a = train_backbone(&init, &g, &qs, &quick_train(4)).unwrap();
    let b = train_backbone(&init, &g, &qs, &quick_train(4)).unwrap();
    assert_eq!(a.checksum(), b.checksum());
    assert_eq!(a.loss_history, b.loss_history);
    assert_ne!(a.checksum(), init.checksum());
}

#[test]
fn zero_epochs_leave_parameters_alone() {
    let (g, qs) = small_setup();
    let init = init_model(&BackboneConfig::default(), &g, 4).unwrap();
    let cfg = TrainConfig {
        epochs: 0,
        ..quick_train(4)
    };
    let out = train_backbone(&init, &g, &qs, &cfg).unwrap();
    assert_eq!(out.params, init.params);
}

#[test]
fn training_reduces_loss() {
    let (g, qs) = small_setup();
    let init = init_model(&BackboneConfig::default(), &g, 2).unwrap();
    let cfg = TrainConfig {
        epochs: 15,
        ..quick_train(2)
    };
    let out = train_backbone(&init, &g, &qs, &cfg).unwrap();
    let h = &out.loss_history;
    assert_eq!(h.len(), 15);
    assert!(h.last().unwrap() < h.first().unwrap(), "{h:?}");
}

#[test]
fn evaluator_without_drops_is_the_backbone() {
    let (g, qs) = small_setup();
    let cfg = BackboneConfig::default();
    let bb = train_backbone(&init_model(&cfg, &g, 6).unwrap(), &g, &qs, &quick_train(6)).unwrap();
    let ev = train_evaluator(&cfg, &g, &DropSchedule::uniform(0.0), &qs, &quick_train(6), 6).unwrap();
    assert_eq!(ev.params, bb.params);
    assert!(ev.role.is_evaluator());
}
