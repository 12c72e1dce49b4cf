use super::{Aggregation, MessageKind, Model, Parameters};
use crate::error::{Error, Result};
use crate::kg::{EdgeId, Query, SubgraphView};
use crate::tensor::{axpy, dot, log_sum_exp, Matrix};

/// Soft importance per kept edge of a view, aligned with ascending edge id.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMask {
    edges: Vec<EdgeId>,
    values: Vec<f64>,
}

impl EdgeMask {
    pub fn new(edges: Vec<EdgeId>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() {
            return Err(Error::contract(format!(
                "mask has {} edges but {} values",
                edges.len(),
                values.len()
            )));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("mask edges must be strictly ascending"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::contract(format!("mask value {v} outside [0, 1]")));
        }
        Ok(Self { edges, values })
    }

    /// The same value on every kept edge of `view`.
    pub fn constant(view: &SubgraphView<'_>, value: f64) -> Result<Self> {
        let edges: Vec<EdgeId> = view.kept_edges().collect();
        let values = vec![value; edges.len()];
        Self::new(edges, values)
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn value(&self, edge: EdgeId) -> Option<f64> {
        self.edges
            .binary_search(&edge)
            .ok()
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.edges.iter().copied().zip(self.values.iter().copied())
    }

    pub(crate) fn check_covers(&self, view: &SubgraphView<'_>) -> Result<()> {
        let mut kept = view.kept_edges();
        for &e in &self.edges {
            match kept.next() {
                Some(k) if k == e => {}
                Some(k) if k < e => {
                    return Err(Error::contract(format!("mask is missing kept edge {k}")))
                }
                _ => return Err(Error::contract(format!("mask edge {e} is not kept by the view"))),
            }
        }
        if let Some(k) = kept.next() {
            return Err(Error::contract(format!("mask is missing kept edge {k}")));
        }
        Ok(())
    }
}

/// Scores for every entity as the answer to one query.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVector {
    pub query: Query,
    pub scores: Vec<f64>,
    pub kept_edges: usize,
    pub masked: bool,
}

/// Query-conditioned entity states and the query-independent relation table.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub query: Query,
    pub entities: Matrix,
    pub relations: Matrix,
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct Trace {
    query: Query,
    edges: Vec<(u32, u32, u32)>,
    weights: Option<Vec<f64>>,
    states: Vec<Matrix>,
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    norms: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

pub fn forward(
    model: &Model,
    view: &SubgraphView<'_>,
    q: &Query,
    mask: Option<&EdgeMask>,
) -> Result<ScoreVector> {
    let trace = forward_trace(model, view, q, mask)?;
    Ok(ScoreVector {
        query: *q,
        scores: trace.scores,
        kept_edges: trace.edges.len(),
        masked: mask.is_some(),
    })
}

pub fn embed(model: &Model, view: &SubgraphView<'_>, q: &Query) -> Result<EmbeddingTable> {
    let mut trace = forward_trace(model, view, q, None)?;
    Ok(EmbeddingTable {
        query: *q,
        entities: trace.states.pop().expect("at least one layer"),
        relations: model.params.query_relation.clone(),
    })
}

#[inline]
fn message(kind: MessageKind, x: &[f64], rel: &[f64], out: &mut [f64]) {
    match kind {
        MessageKind::DistMult => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(rel) {
                *o = a * b;
            }
        }
        MessageKind::Translation => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(rel) {
                *o = a + b;
            }
        }
    }
}

pub fn forward_trace(
    model: &Model,
    view: &SubgraphView<'_>,
    q: &Query,
    mask: Option<&EdgeMask>,
) -> Result<Trace> {
    let g = view.graph();
    model.check_graph(g)?;
    g.check_entity(q.head)?;
    g.check_relation(q.relation)?;
    if let Some(m) = mask {
        m.check_covers(view)?;
    }

    let p = &model.params;
    let d = model.config.embed_dim;
    let n = g.num_entities();
    let head = q.head as usize;
    let boundary = p.query_relation.row(q.relation as usize);
    let edges: Vec<(u32, u32, u32)> = view
        .kept_edges()
        .map(|e| {
            let t = g.edge(e);
            (t.head, t.relation, t.tail)
        })
        .collect();
    let weights = mask.map(|m| m.values().to_vec());
    let mean = model.config.aggregation == Aggregation::Mean;

    let mut x = Matrix::zeros(n, d);
    x.row_mut(head).copy_from_slice(boundary);
    let mut states = vec![x];
    let mut inputs = Vec::with_capacity(p.layers.len());
    let mut pres = Vec::with_capacity(p.layers.len());
    let mut norms = Vec::new();
    let mut msg = vec![0.0; d];

    for layer in &p.layers {
        let prev = states.last().unwrap();
        let mut agg = Matrix::zeros(n, d);
        let mut norm = if mean { vec![0.0; n] } else { Vec::new() };
        for (i, &(s, r, o)) in edges.iter().enumerate() {
            let w = weights.as_ref().map_or(1.0, |w| w[i]);
            if w == 0.0 && !mean {
                continue;
            }
            message(model.config.message, prev.row(s as usize), layer.relation.row(r as usize), &mut msg);
            axpy(w, &msg, agg.row_mut(o as usize));
            if mean {
                norm[o as usize] += w;
            }
        }
        if mean {
            for (v, &z) in norm.iter().enumerate() {
                if z > 0.0 {
                    agg.row_mut(v).iter_mut().for_each(|a| *a /= z);
                }
            }
        }
        axpy(1.0, boundary, agg.row_mut(head));
        let input = agg;

        let mut pre = Matrix::zeros(n, d);
        let mut next = prev.clone();
        for v in 0..n {
            let out = pre.row_mut(v);
            layer.weight.matvec_into(input.row(v), out);
            axpy(1.0, &layer.bias, out);
            for (xn, &z) in next.row_mut(v).iter_mut().zip(out.iter()) {
                if z > 0.0 {
                    *xn += z;
                }
            }
        }
        inputs.push(input);
        pres.push(pre);
        if mean {
            norms.push(norm);
        }
        states.push(next);
    }

    let last = states.last().unwrap();
    let scores = (0..n)
        .map(|v| dot(&p.decoder_weight, last.row(v)) + p.decoder_bias[0])
        .collect();

    Ok(Trace {
        query: *q,
        edges,
        weights,
        states,
        inputs,
        pre: pres,
        norms,
        scores,
    })
}

impl Trace {
    pub fn query(&self) -> &Query {
        &self.query
    }

    /// Final-layer entity states.
    pub fn final_states(&self) -> &Matrix {
        self.states.last().unwrap()
    }

    /// Backpropagates `dscores` (the loss gradient w.r.t. every score).
    ///
    /// Parameter gradients accumulate into `param_grads`; gradients w.r.t. the
    /// mask values accumulate into `mask_grads`, aligned with the mask. Asking
    /// for mask gradients on an unmasked trace is a contract error.
    pub fn backward(
        &self,
        model: &Model,
        dscores: &[f64],
        mut param_grads: Option<&mut Parameters>,
        mut mask_grads: Option<&mut [f64]>,
    ) -> Result<()> {
        let p = &model.params;
        let d = model.config.embed_dim;
        let n = self.scores.len();
        if dscores.len() != n {
            return Err(Error::contract("score gradient length mismatch"));
        }
        if let Some(mg) = mask_grads.as_deref() {
            match &self.weights {
                Some(w) if w.len() == mg.len() => {}
                Some(_) => return Err(Error::contract("mask gradient length mismatch")),
                None => return Err(Error::contract("mask gradients requested for an unmasked pass")),
            }
        }
        let mean = model.config.aggregation == Aggregation::Mean;
        let head = self.query.head as usize;
        let rel_q = self.query.relation as usize;
        let last = self.states.last().unwrap();

        let mut dx = Matrix::zeros(n, d);
        for (v, &gv) in dscores.iter().enumerate() {
            if gv != 0.0 {
                axpy(gv, &p.decoder_weight, dx.row_mut(v));
            }
        }
        if let Some(pg) = param_grads.as_deref_mut() {
            for (v, &gv) in dscores.iter().enumerate() {
                if gv != 0.0 {
                    axpy(gv, last.row(v), &mut pg.decoder_weight);
                }
            }
            pg.decoder_bias[0] += dscores.iter().sum::<f64>();
        }

        let mut dpre = vec![0.0; d];
        let mut msg = vec![0.0; d];
        let mut dmsg = vec![0.0; d];
        for l in (0..p.layers.len()).rev() {
            let layer = &p.layers[l];
            let input = &self.inputs[l];
            let pre = &self.pre[l];
            let prev = &self.states[l];

            // residual: dx flows to the previous state unchanged
            let mut dprev = dx.clone();
            let mut dinput = Matrix::zeros(n, d);
            for v in 0..n {
                let mut any = false;
                for ((dp, &g), &z) in dpre.iter_mut().zip(dx.row(v)).zip(pre.row(v)) {
                    *dp = if z > 0.0 { g } else { 0.0 };
                    any |= *dp != 0.0;
                }
                if !any {
                    continue;
                }
                layer.weight.matvec_t_acc(&dpre, dinput.row_mut(v));
                if let Some(pg) = param_grads.as_deref_mut() {
                    let lg = &mut pg.layers[l];
                    lg.weight.outer_acc(&dpre, input.row(v));
                    axpy(1.0, &dpre, &mut lg.bias);
                }
            }
            if let Some(pg) = param_grads.as_deref_mut() {
                axpy(1.0, dinput.row(head), pg.query_relation.row_mut(rel_q));
            }

            // dinput is the gradient w.r.t. the aggregate; unwrap the mean
            let mut dnorm = Vec::new();
            if mean {
                let norm = &self.norms[l];
                dnorm = vec![0.0; n];
                for v in 0..n {
                    let z = norm[v];
                    if z > 0.0 {
                        let mut agg_v = input.row(v).to_vec();
                        if v == head {
                            axpy(-1.0, p.query_relation.row(rel_q), &mut agg_v);
                        }
                        let row = dinput.row_mut(v);
                        dnorm[v] = -dot(row, &agg_v) / z;
                        row.iter_mut().for_each(|g| *g /= z);
                    } else {
                        dinput.row_mut(v).fill(0.0);
                    }
                }
            }

            for (i, &(s, r, o)) in self.edges.iter().enumerate() {
                let w = self.weights.as_ref().map_or(1.0, |w| w[i]);
                let dagg = dinput.row(o as usize);
                let rel = layer.relation.row(r as usize);
                if let Some(mg) = mask_grads.as_deref_mut() {
                    message(model.config.message, prev.row(s as usize), rel, &mut msg);
                    mg[i] += dot(dagg, &msg);
                    if mean {
                        mg[i] += dnorm[o as usize];
                    }
                }
                if w == 0.0 {
                    continue;
                }
                for (dm, &g) in dmsg.iter_mut().zip(dagg) {
                    *dm = w * g;
                }
                match model.config.message {
                    MessageKind::DistMult => {
                        let xs = prev.row(s as usize);
                        if let Some(pg) = param_grads.as_deref_mut() {
                            let dr = pg.layers[l].relation.row_mut(r as usize);
                            for k in 0..d {
                                dr[k] += dmsg[k] * xs[k];
                            }
                        }
                        let dxs = dprev.row_mut(s as usize);
                        for k in 0..d {
                            dxs[k] += dmsg[k] * rel[k];
                        }
                    }
                    MessageKind::Translation => {
                        if let Some(pg) = param_grads.as_deref_mut() {
                            axpy(1.0, &dmsg, pg.layers[l].relation.row_mut(r as usize));
                        }
                        axpy(1.0, &dmsg, dprev.row_mut(s as usize));
                    }
                }
            }
            dx = dprev;
        }
        if let Some(pg) = param_grads {
            axpy(1.0, dx.row(head), pg.query_relation.row_mut(rel_q));
        }
        Ok(())
    }
}

/// Softmax cross-entropy of `answer` over all entity scores, with its gradient.
pub fn fidelity_loss(scores: &[f64], answer: usize) -> (f64, Vec<f64>) {
    let lse = log_sum_exp(scores);
    let loss = lse - scores[answer];
    let mut grad: Vec<f64> = scores.iter().map(|s| (s - lse).exp()).collect();
    grad[answer] -= 1.0;
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{KnowledgeGraph, Triple, Vocab};
    use crate::model::{init_model, BackboneConfig};

    fn tiny() -> KnowledgeGraph {
        let vocab = Vocab::from_names(["a", "b", "c"], ["r", "s"]).unwrap();
        KnowledgeGraph::build(
            &[Triple::new(0, 0, 1), Triple::new(1, 1, 2), Triple::new(2, 0, 0)],
            vocab,
            true,
        )
        .unwrap()
    }

    #[test]
    fn untrained_scores_are_finite() {
        let g = tiny();
        let m = init_model(&BackboneConfig::default(), &g, 1).unwrap();
        let s = forward(&m, &SubgraphView::full(&g), &Query::new(0, 0, 1), None).unwrap();
        assert_eq!(s.scores.len(), 3);
        assert!(s.scores.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn unit_mask_matches_unmasked_exactly() {
        let g = tiny();
        let view = SubgraphView::full(&g);
        for aggregation in [Aggregation::Sum, Aggregation::Mean] {
            let cfg = BackboneConfig {
                aggregation,
                ..Default::default()
            };
            let m = init_model(&cfg, &g, 2).unwrap();
            let q = Query::new(1, 1, 2);
            let plain = forward(&m, &view, &q, None).unwrap().scores;
            let ones = EdgeMask::constant(&view, 1.0).unwrap();
            let masked = forward(&m, &view, &q, Some(&ones)).unwrap().scores;
            assert_eq!(plain, masked);
        }
    }

    #[test]
    fn empty_view_scores_non_head_entities_equally() {
        let g = tiny();
        let m = init_model(&BackboneConfig::default(), &g, 3).unwrap();
        let s = forward(&m, &SubgraphView::empty(&g), &Query::new(0, 1, 2), None)
            .unwrap()
            .scores;
        assert_eq!(s[1], s[2]);
    }

    #[test]
    fn mask_contract_violations() {
        let g = tiny();
        let m = init_model(&BackboneConfig::default(), &g, 3).unwrap();
        let view = SubgraphView::full(&g);
        let q = Query::new(0, 0, 1);
        let short = EdgeMask::new(vec![0, 1], vec![1.0, 1.0]).unwrap();
        assert!(matches!(forward(&m, &view, &q, Some(&short)), Err(Error::Contract(_))));
        assert!(EdgeMask::new(vec![0], vec![1.5]).is_err());
        assert!(EdgeMask::new(vec![1, 0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn embeddings_shape_and_relation_table() {
        let g = tiny();
        let m = init_model(&BackboneConfig::default(), &g, 4).unwrap();
        let view = SubgraphView::full(&g);
        let a = embed(&m, &view, &Query::new(0, 0, 1)).unwrap();
        let b = embed(&m, &view, &Query::new(0, 1, 1)).unwrap();
        assert_eq!(a.entities.rows(), g.num_entities());
        assert_eq!(a.relations, b.relations);
        assert_ne!(a.entities, b.entities);
    }

    #[test]
    fn fidelity_gradient_sums_to_zero() {
        let (loss, grad) = fidelity_loss(&[1.0, 2.0, 0.5], 1);
        assert!(loss > 0.0);
        assert!(grad.iter().sum::<f64>().abs() < 1e-12);
        assert!(grad[1] < 0.0);
    }
}
