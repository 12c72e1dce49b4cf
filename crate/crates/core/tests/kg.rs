mod common;

use std::path::Path;

use common::random_kg;
use kgxk_core::kg::{
    drop_edges_distance, drop_edges_uniform, ego_network, make_queries, parse_query_spec,
    parse_triple_line, parse_triples, write_triples, DistanceDecay, SubgraphView, Triple,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn name() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9_/.:-]{1,12}"
}

proptest! {
    #[test]
    fn triple_text_round_trips(rows in prop::collection::vec((name(), name(), name()), 0..30)) {
        let text: String = rows.iter().map(|(h, r, t)| format!("{h}\t{r}\t{t}\n")).collect();
        let (triples, vocab) = parse_triples(&text, Path::new("mem"), None).unwrap();
        prop_assert_eq!(triples.len(), rows.len());
        for ((h, r, t), tr) in rows.iter().zip(&triples) {
            prop_assert_eq!(vocab.entity_name(tr.head), Some(h.as_str()));
            prop_assert_eq!(vocab.relation_name(tr.relation), Some(r.as_str()));
            prop_assert_eq!(vocab.entity_name(tr.tail), Some(t.as_str()));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        write_triples(&path, &triples, &vocab).unwrap();
        let again = std::fs::read_to_string(&path).unwrap();
        let (back, _) = parse_triples(&again, &path, Some(&vocab)).unwrap();
        prop_assert_eq!(back, triples);
    }

    #[test]
    fn line_parser_never_panics(line in ".{0,80}") {
        if let Ok((h, r, t)) = parse_triple_line(&line) {
            prop_assert!(!h.trim().is_empty() && !r.trim().is_empty() && !t.trim().is_empty());
        }
        let _ = parse_query_spec(&line);
    }

    #[test]
    fn drops_remove_triples_with_their_inverse(seed in 0u64..10_000, p in 0.0f64..=1.0) {
        let g = random_kg(seed, 15, 3, 30);
        let full = SubgraphView::full(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = drop_edges_uniform(&full, p, &mut rng).unwrap();
        let b = drop_edges_distance(&full, 0, &DistanceDecay::default(), &mut rng).unwrap();
        for view in [a, b] {
            for e in 0..g.num_base_edges() {
                let inv = g.inverse_edge(e).unwrap();
                prop_assert_eq!(view.contains(e), view.contains(inv));
            }
            prop_assert!(view.kept_edges().all(|e| full.contains(e)));
        }
    }

    #[test]
    fn ego_networks_grow_with_radius(seed in 0u64..10_000, head in 0u32..15) {
        let g = random_kg(seed, 15, 3, 25);
        let full = SubgraphView::full(&g);
        let mut prev = 0;
        for r in 0..5 {
            let ego = ego_network(&full, &[head], r).unwrap();
            prop_assert!(ego.num_kept() >= prev);
            prev = ego.num_kept();
            let dist = full.hop_distances(&[head]).unwrap();
            for e in ego.kept_edges() {
                let t = g.edge(e);
                prop_assert!(dist[t.head as usize].unwrap() <= r && dist[t.tail as usize].unwrap() <= r);
            }
        }
    }
}

#[test]
fn decay_keeps_the_head_neighbourhood() {
    let g = random_kg(2, 40, 3, 80);
    let full = SubgraphView::full(&g);
    let never_near = |hops: Option<u32>| if hops == Some(0) { 0.0 } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let view = drop_edges_distance(&full, 5, &never_near, &mut rng).unwrap();
    for e in full.kept_edges() {
        let t = g.edge(e);
        assert_eq!(view.contains(e), t.head == 5 || t.tail == 5, "{t:?}");
    }
    let bad = |_: Option<u32>| 1.5;
    assert!(drop_edges_distance(&full, 5, &bad, &mut rng).is_err());
}

#[test]
fn queries_cover_both_directions() {
    let qs = make_queries(&[Triple::new(0, 0, 1)], 1);
    assert_eq!(qs.len(), 2);
    assert_eq!((qs[0].head, qs[0].relation, qs[0].answer), (0, 0, 1));
    assert_eq!((qs[1].head, qs[1].relation, qs[1].answer), (1, 1, 0));
}
