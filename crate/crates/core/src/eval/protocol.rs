use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate_model, Views};
use crate::baselines::{instance_mask_explain, parameterized_mask_explain, InstanceConfig};
use crate::error::{Error, Result};
use crate::explainer::{explain_view, extract_explanation, Explanation, MaskNet, PprConfig};
use crate::kg::{EdgeId, KnowledgeGraph, KnownTriples, Query, SubgraphView};
use crate::model::{fine_tune, Model, TrainConfig};

/// Anything that turns a query into an explanation subgraph.
pub trait Explainer {
    fn name(&self) -> &str;

    /// Reference arms ignore the budget and are run once.
    fn respects_budget(&self) -> bool {
        true
    }

    fn explain(&self, g: &KnowledgeGraph, q: &Query, budget: usize) -> Result<Explanation>;
}

pub struct RawExplainer<'a> {
    pub net: &'a MaskNet,
    pub evaluator: &'a Model,
    pub ppr: PprConfig,
}

impl Explainer for RawExplainer<'_> {
    fn name(&self) -> &str {
        "raw"
    }

    fn explain(&self, g: &KnowledgeGraph, q: &Query, budget: usize) -> Result<Explanation> {
        extract_explanation(self.net, self.evaluator, g, q, budget, &self.ppr)
    }
}

pub struct InstanceMaskExplainer<'a> {
    pub evaluator: &'a Model,
    pub config: InstanceConfig,
}

impl Explainer for InstanceMaskExplainer<'_> {
    fn name(&self) -> &str {
        "instance_mask"
    }

    fn explain(&self, g: &KnowledgeGraph, q: &Query, budget: usize) -> Result<Explanation> {
        instance_mask_explain(self.evaluator, g, q, budget, &self.config)
    }
}

pub struct ParameterizedMaskExplainer<'a> {
    pub net: &'a MaskNet,
    pub evaluator: &'a Model,
}

impl Explainer for ParameterizedMaskExplainer<'_> {
    fn name(&self) -> &str {
        "param_mask"
    }

    fn explain(&self, g: &KnowledgeGraph, q: &Query, budget: usize) -> Result<Explanation> {
        parameterized_mask_explain(self.net, self.evaluator, g, q, budget)
    }
}

fn unit_explanation(q: &Query, edges: Vec<EdgeId>) -> Explanation {
    Explanation {
        query: *q,
        budget: edges.len(),
        omega: vec![1.0; edges.len()],
        edges,
        pi: Vec::new(),
        converged: true,
        head_isolated: false,
    }
}

/// Upper reference: the head's whole connected component.
pub struct FullGraphExplainer;

impl Explainer for FullGraphExplainer {
    fn name(&self) -> &str {
        "full"
    }

    fn respects_budget(&self) -> bool {
        false
    }

    fn explain(&self, g: &KnowledgeGraph, q: &Query, _budget: usize) -> Result<Explanation> {
        let view = explain_view(g, q);
        let dist = view.hop_distances(&[q.head])?;
        let mut edges: Vec<EdgeId> = view
            .kept_edges()
            .filter(|&e| dist[g.edge(e).head as usize].is_some())
            .map(|e| g.base_edge(e))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        Ok(unit_explanation(q, edges))
    }
}

/// Lower reference: no edges at all.
pub struct EmptyExplainer;

impl Explainer for EmptyExplainer {
    fn name(&self) -> &str {
        "empty"
    }

    fn respects_budget(&self) -> bool {
        false
    }

    fn explain(&self, _g: &KnowledgeGraph, q: &Query, _budget: usize) -> Result<Explanation> {
        Ok(unit_explanation(q, Vec::new()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRow {
    pub explainer: String,
    /// `None` for reference arms, which are not budgeted.
    pub budget: Option<usize>,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Wall-clock time spent producing explanations for this arm.
    pub seconds: f64,
    /// Mean connected components over non-empty test explanations.
    pub components: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub budgets: Vec<usize>,
    pub rows: Vec<ProtocolRow>,
}

impl ProtocolRow {
    fn budget_label(&self) -> String {
        self.budget.map_or_else(|| "inf".to_owned(), |k| k.to_string())
    }
}

impl ProtocolReport {
    pub fn row(&self, explainer: &str, budget: Option<usize>) -> Option<&ProtocolRow> {
        self.rows
            .iter()
            .find(|r| r.explainer == explainer && r.budget == budget)
    }

    pub fn to_csv(&self, with_seconds: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["explainer", "budget", "mrr", "hits1", "hits3", "hits10"];
        if with_seconds {
            header.push("seconds");
        }
        header.push("components");
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.explainer.clone(),
                r.budget_label(),
                format!("{:.6}", r.mrr),
                format!("{:.6}", r.hits1),
                format!("{:.6}", r.hits3),
                format!("{:.6}", r.hits10),
            ];
            if with_seconds {
                rec.push(format!("{:.3}", r.seconds));
            }
            rec.push(format!("{:.3}", r.components));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `protocol.csv`, `protocol.json` and the timing-free `metrics.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("protocol.csv"), self.to_csv(true)?)?;
        fs::write(dir.join("metrics.csv"), self.to_csv(false)?)?;
        let mut f = fs::File::create(dir.join("protocol.json"))?;
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolInputs<'a> {
    pub graph: &'a KnowledgeGraph,
    pub known: &'a KnownTriples,
    pub val_queries: &'a [Query],
    pub test_queries: &'a [Query],
    pub budgets: &'a [usize],
    pub fine_tune: TrainConfig,
}

fn explain_all(
    ex: &dyn Explainer,
    g: &KnowledgeGraph,
    queries: &[Query],
    budget: usize,
) -> Result<Vec<Explanation>> {
    queries
        .iter()
        .map(|q| {
            let e = ex.explain(g, q, budget)?;
            if ex.respects_budget() && e.len() > budget {
                return Err(Error::contract(format!(
                    "explainer `{}` emitted {} edges for budget {budget}; protocol aborted",
                    ex.name(),
                    e.len()
                )));
            }
            Ok(e)
        })
        .collect()
}

/// Explains validation and test queries, fine-tunes a fresh copy of the
/// backbone on the validation explanations and scores test queries on their
/// own explanation subgraphs.
pub fn run_arm(
    backbone: &Model,
    ex: &dyn Explainer,
    inputs: &ProtocolInputs<'_>,
    budget: usize,
) -> Result<ProtocolRow> {
    let g = inputs.graph;
    let start = Instant::now();
    let val = explain_all(ex, g, inputs.val_queries, budget)?;
    let test = explain_all(ex, g, inputs.test_queries, budget)?;
    let seconds = start.elapsed().as_secs_f64();

    let pairs = val
        .iter()
        .map(|e| Ok((e.query, e.view(g)?)))
        .collect::<Result<Vec<(Query, SubgraphView<'_>)>>>()?;
    let tuned = fine_tune(backbone, &pairs, &inputs.fine_tune)?;
    let test_views = test.iter().map(|e| e.view(g)).collect::<Result<Vec<_>>>()?;
    let metrics = evaluate_model(&tuned, Views::PerQuery(&test_views), inputs.test_queries, inputs.known)?;

    let mut comps = Vec::new();
    for e in test.iter().filter(|e| !e.is_empty()) {
        comps.push(e.components(g)? as f64);
    }
    let components = if comps.is_empty() {
        0.0
    } else {
        comps.iter().sum::<f64>() / comps.len() as f64
    };
    Ok(ProtocolRow {
        explainer: ex.name().to_owned(),
        budget: ex.respects_budget().then_some(budget),
        mrr: metrics.mrr,
        hits1: metrics.hits(1),
        hits3: metrics.hits(3),
        hits10: metrics.hits(10),
        seconds,
        components,
    })
}

/// Every budgeted explainer at every budget, reference arms once each.
pub fn run_protocol(
    backbone: &Model,
    explainers: &[&dyn Explainer],
    inputs: &ProtocolInputs<'_>,
) -> Result<ProtocolReport> {
    if inputs.budgets.is_empty() || inputs.budgets.contains(&0) {
        return Err(Error::config("budgets must be a non-empty list of positive sizes"));
    }
    let before = backbone.checksum();
    let mut rows = Vec::new();
    for ex in explainers {
        if ex.respects_budget() {
            for &k in inputs.budgets {
                log::info!("protocol arm {} at budget {k}", ex.name());
                rows.push(run_arm(backbone, *ex, inputs, k)?);
            }
        } else {
            log::info!("protocol reference arm {}", ex.name());
            rows.push(run_arm(backbone, *ex, inputs, usize::MAX)?);
        }
    }
    if backbone.checksum() != before {
        return Err(Error::contract("backbone parameters changed during the protocol"));
    }
    Ok(ProtocolReport {
        budgets: inputs.budgets.to_vec(),
        rows,
    })
}
