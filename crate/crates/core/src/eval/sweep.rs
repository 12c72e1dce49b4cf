use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_model, Views};
use crate::error::{Error, Result};
use crate::kg::{drop_edges_uniform, ego_network, KnowledgeGraph, KnownTriples, Query, SubgraphView};
use crate::model::Model;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub model: String,
    pub x: f64,
    pub mrr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn curve(&self, model: &str) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.model == model)
            .map(|p| (p.x, p.mrr))
            .collect()
    }

    pub fn mrr(&self, model: &str, x: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.model == model && p.x == x)
            .map(|p| p.mrr)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "x", "mrr"])?;
        for p in &self.points {
            w.write_record([p.model.clone(), p.x.to_string(), format!("{:.6}", p.mrr)])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

fn sweep<'g>(
    models: &[(&str, &Model)],
    queries: &[Query],
    known: &KnownTriples,
    xs: &[f64],
    mut views_at: impl FnMut(usize, f64) -> Result<Vec<SubgraphView<'g>>>,
) -> Result<SweepReport> {
    let mut points = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        // one set of views per x, shared by every model
        let views = views_at(i, x)?;
        for (name, m) in models {
            let metrics = evaluate_model(m, Views::PerQuery(&views), queries, known)?;
            points.push(SweepPoint {
                model: (*name).to_owned(),
                x,
                mrr: metrics.mrr,
            });
        }
    }
    Ok(SweepReport { points })
}

/// MRR under uniform random edge removal. Each query gets its own dropped
/// view, seeded by `(seed, probability index, query index)`.
pub fn edge_drop_sweep(
    models: &[(&str, &Model)],
    g: &KnowledgeGraph,
    queries: &[Query],
    known: &KnownTriples,
    probs: &[f64],
    seed: u64,
) -> Result<SweepReport> {
    let full = SubgraphView::full(g);
    sweep(models, queries, known, probs, |i, p| {
        (0..queries.len())
            .map(|qi| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((i as u64) << 32) | qi as u64);
                drop_edges_uniform(&full, p, &mut rng)
            })
            .collect()
    })
}

/// MRR when every query only sees the ego network around its head.
pub fn ego_radius_sweep(
    models: &[(&str, &Model)],
    g: &KnowledgeGraph,
    queries: &[Query],
    known: &KnownTriples,
    radii: &[u32],
) -> Result<SweepReport> {
    let full = SubgraphView::full(g);
    let xs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
    sweep(models, queries, known, &xs, |i, _| {
        queries
            .iter()
            .map(|q| ego_network(&full, &[q.head], radii[i]))
            .collect()
    })
}
