use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{filtered_candidates, CandidateMask, KnownTriples, Query, SubgraphView};
use crate::model::{forward, Model};

pub const HITS_AT: [u32; 3] = [1, 3, 10];

/// Filtered rank of `answer` with mean-rank tie handling:
/// `1 + #{strictly greater} + #{equal, other than the answer} / 2`.
pub fn rank_metrics(scores: &[f64], answer: usize, candidates: &CandidateMask) -> Result<(f64, f64)> {
    if answer >= scores.len() || !candidates.contains(answer) {
        return Err(Error::contract(format!(
            "answer {answer} is not among the ranking candidates"
        )));
    }
    let target = scores[answer];
    let mut greater = 0usize;
    let mut equal = 0usize;
    for c in candidates.ones() {
        if c == answer || c >= scores.len() {
            continue;
        }
        let s = scores[c];
        if s > target {
            greater += 1;
        } else if s == target {
            equal += 1;
        }
    }
    let rank = 1.0 + greater as f64 + equal as f64 / 2.0;
    Ok((rank, 1.0 / rank))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub mrr: f64,
    pub hits_at: BTreeMap<u32, f64>,
    pub n_queries: usize,
}

impl RankingMetrics {
    pub fn from_ranks(ranks: &[f64]) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::contract("cannot summarize an empty query set"));
        }
        let n = ranks.len() as f64;
        let mrr = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n;
        let hits_at = HITS_AT
            .iter()
            .map(|&k| (k, ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / n))
            .collect();
        Ok(Self {
            mrr,
            hits_at,
            n_queries: ranks.len(),
        })
    }

    pub fn hits(&self, k: u32) -> f64 {
        self.hits_at.get(&k).copied().unwrap_or(f64::NAN)
    }
}

/// Message-passing views for evaluation: one shared view, or one per query.
#[derive(Clone, Copy, Debug)]
pub enum Views<'a, 'g> {
    Shared(&'a SubgraphView<'g>),
    PerQuery(&'a [SubgraphView<'g>]),
}

impl<'a, 'g> Views<'a, 'g> {
    fn get(&self, i: usize) -> &'a SubgraphView<'g> {
        match self {
            Views::Shared(v) => v,
            Views::PerQuery(vs) => &vs[i],
        }
    }
}

/// Filtered rank of every query's answer.
pub fn query_ranks(
    model: &Model,
    views: Views<'_, '_>,
    queries: &[Query],
    known: &KnownTriples,
) -> Result<Vec<f64>> {
    if let Views::PerQuery(vs) = views {
        if vs.len() != queries.len() {
            return Err(Error::contract(format!(
                "{} views supplied for {} queries",
                vs.len(),
                queries.len()
            )));
        }
    }
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let view = views.get(i);
            let scores = forward(model, view, q, None)?;
            let candidates = filtered_candidates(q, known, view.graph().num_entities());
            rank_metrics(&scores.scores, q.answer as usize, &candidates).map(|(r, _)| r)
        })
        .collect()
}

pub fn evaluate_model(
    model: &Model,
    views: Views<'_, '_>,
    queries: &[Query],
    known: &KnownTriples,
) -> Result<RankingMetrics> {
    if queries.is_empty() {
        return Err(Error::contract("cannot evaluate an empty query set"));
    }
    RankingMetrics::from_ranks(&query_ranks(model, views, queries, known)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fixedbitset::FixedBitSet;

    fn all(n: usize) -> CandidateMask {
        let mut m = FixedBitSet::with_capacity(n);
        m.insert_range(..);
        m
    }

    #[test]
    fn unique_max_is_rank_one() {
        let (rank, rr) = rank_metrics(&[0.1, 0.9, 0.3], 1, &all(3)).unwrap();
        assert_eq!((rank, rr), (1.0, 1.0));
    }

    #[test]
    fn five_way_tie_is_rank_three() {
        let (rank, rr) = rank_metrics(&[0.5; 5], 2, &all(5)).unwrap();
        assert_eq!(rank, 3.0);
        assert!((rr - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn filtered_candidates_do_not_count() {
        let mut c = all(3);
        c.set(0, false);
        let (rank, _) = rank_metrics(&[0.9, 0.1, 0.5], 1, &c).unwrap();
        assert_eq!(rank, 2.0);
    }

    #[test]
    fn excluded_answer_is_contract_error() {
        let mut c = all(3);
        c.set(1, false);
        assert!(rank_metrics(&[0.0; 3], 1, &c).is_err());
    }

    #[test]
    fn aggregate_metrics() {
        assert_eq!(RankingMetrics::from_ranks(&[1.0]).unwrap().mrr, 1.0);
        let m = RankingMetrics::from_ranks(&[1.0, 4.0]).unwrap();
        assert_eq!(m.mrr, 0.625);
        assert_eq!(m.hits(1), 0.5);
        assert_eq!(m.hits(3), 0.5);
        assert_eq!(m.hits(10), 1.0);
        assert!(RankingMetrics::from_ranks(&[]).is_err());
    }
}
