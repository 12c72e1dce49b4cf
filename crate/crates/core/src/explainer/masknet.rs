use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EdgeId, SubgraphView};
use crate::model::{EdgeMask, EmbeddingTable};
use crate::tensor::{axpy, dot, sigmoid, Matrix};

/// Edge inputs: source, relation, target, query head, query relation.
pub const INPUT_PARTS: usize = 5;
const OMEGA_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// MLP from `[z_s; z_p; z_o; z_h; z_r]` to one edge logit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskNet {
    pub embed_dim: usize,
    pub layers: Vec<Dense>,
    /// Temperature reached at the end of training; used for inference.
    pub temperature: f64,
}

impl MaskNet {
    pub fn new(embed_dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        if embed_dim == 0 || hidden.is_empty() || hidden.iter().any(|&h| h == 0) {
            return Err(Error::config("mask network needs a positive width and at least one hidden layer"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![INPUT_PARTS * embed_dim];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let layers = widths
            .windows(2)
            .map(|w| Dense {
                weight: Matrix::glorot(w[1], w[0], &mut rng),
                bias: vec![0.0; w[1]],
            })
            .collect();
        Ok(Self {
            embed_dim,
            layers,
            temperature: 1.0,
        })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            embed_dim: self.embed_dim,
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            temperature: self.temperature,
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    /// Structural checks for networks read from disk.
    pub fn validate(&self) -> Result<()> {
        let d = self.embed_dim;
        let Some(first) = self.layers.first().filter(|_| self.layers.len() >= 2) else {
            return Err(Error::Checkpoint("mask network needs a hidden layer".into()));
        };
        if d == 0 || first.weight.cols() != INPUT_PARTS * d {
            return Err(Error::Checkpoint(format!(
                "mask network input width {} does not match 5 x {d}",
                first.weight.cols()
            )));
        }
        let mut width = first.weight.cols();
        for l in &self.layers {
            if l.weight.cols() != width || l.bias.len() != l.weight.rows() {
                return Err(Error::Checkpoint("mask network layer shapes do not chain".into()));
            }
            if l.weight.rows().checked_mul(l.weight.cols()) != Some(l.weight.as_slice().len()) {
                return Err(Error::Checkpoint("mask network weight length mismatch".into()));
            }
            width = l.weight.rows();
        }
        if width != 1 {
            return Err(Error::Checkpoint("mask network must end in one output".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Checkpoint("mask network temperature must be positive".into()));
        }
        if self.tensors().iter().any(|t| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::Checkpoint("mask network has non-finite values".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: MaskNet = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Per-edge activations for backpropagation.
pub struct LogitCache {
    edges: Vec<(usize, usize, usize)>,
    /// Post-activation outputs of every hidden layer, one matrix per layer.
    hidden: Vec<Matrix>,
    head: usize,
    relation: usize,
}

fn block_matvec(w: &Matrix, block: usize, d: usize, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&w.row(i)[block * d..(block + 1) * d], x);
    }
}

/// Projects every row of `table` through one input block of the first layer.
fn project_rows(w: &Matrix, block: usize, d: usize, table: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(table.rows(), w.rows());
    for r in 0..table.rows() {
        block_matvec(w, block, d, table.row(r), out.row_mut(r));
    }
    out
}

fn check_embeddings(net: &MaskNet, emb: &EmbeddingTable, view: &SubgraphView<'_>) -> Result<()> {
    let g = view.graph();
    if emb.entities.cols() != net.embed_dim || emb.relations.cols() != net.embed_dim {
        return Err(Error::contract(format!(
            "embedding width {} does not match mask network width {}",
            emb.entities.cols(),
            net.embed_dim
        )));
    }
    if emb.entities.rows() != g.num_entities() || emb.relations.rows() != g.num_relations() {
        return Err(Error::contract("embedding table does not match the graph vocabulary"));
    }
    Ok(())
}

impl MaskNet {
    /// Logits for `edges`. The first layer is applied block-wise so each
    /// entity and relation is projected once rather than once per edge.
    pub fn logits(&self, emb: &EmbeddingTable, view: &SubgraphView<'_>, edges: &[EdgeId]) -> Result<(Vec<f64>, LogitCache)> {
        check_embeddings(self, emb, view)?;
        let g = view.graph();
        let d = self.embed_dim;
        let first = &self.layers[0];
        let h1 = first.weight.rows();
        let src = project_rows(&first.weight, 0, d, &emb.entities);
        let rel = project_rows(&first.weight, 1, d, &emb.relations);
        let dst = project_rows(&first.weight, 2, d, &emb.entities);
        let q = emb.query;
        let mut base = first.bias.clone();
        let mut tmp = vec![0.0; h1];
        block_matvec(&first.weight, 3, d, emb.entities.row(q.head as usize), &mut tmp);
        axpy(1.0, &tmp, &mut base);
        block_matvec(&first.weight, 4, d, emb.relations.row(q.relation as usize), &mut tmp);
        axpy(1.0, &tmp, &mut base);

        let triples: Vec<(usize, usize, usize)> = edges
            .iter()
            .map(|&e| {
                let t = g.edge(e);
                (t.head as usize, t.relation as usize, t.tail as usize)
            })
            .collect();
        let mut act = Matrix::zeros(edges.len(), h1);
        for (i, &(s, p, o)) in triples.iter().enumerate() {
            let row = act.row_mut(i);
            for j in 0..h1 {
                let z = base[j] + src.row(s)[j] + rel.row(p)[j] + dst.row(o)[j];
                row[j] = z.max(0.0);
            }
        }
        let mut hidden = vec![act];
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate().skip(1) {
            let prev = hidden.last().expect("first layer computed");
            let mut next = Matrix::zeros(edges.len(), layer.weight.rows());
            for i in 0..edges.len() {
                let out = next.row_mut(i);
                layer.weight.matvec_into(prev.row(i), out);
                axpy(1.0, &layer.bias, out);
                if li != last {
                    out.iter_mut().for_each(|x| *x = x.max(0.0));
                }
            }
            hidden.push(next);
        }
        let out = hidden.pop().expect("output layer");
        let logits = out.as_slice().to_vec();
        Ok((
            logits,
            LogitCache {
                edges: triples,
                hidden,
                head: q.head as usize,
                relation: q.relation as usize,
            },
        ))
    }

    /// Accumulates parameter gradients for `dlogits` into `grads`.
    pub fn backward(&self, emb: &EmbeddingTable, cache: &LogitCache, dlogits: &[f64], grads: &mut MaskNet) {
        let d = self.embed_dim;
        let n = cache.edges.len();
        let mut delta = Matrix::from_vec(n, 1, dlogits.to_vec()).expect("one logit per edge");
        for li in (1..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &cache.hidden[li - 1];
            let gl = &mut grads.layers[li];
            let mut prev = Matrix::zeros(n, layer.weight.cols());
            for i in 0..n {
                let dy = delta.row(i);
                gl.weight.outer_acc(dy, input.row(i));
                axpy(1.0, dy, &mut gl.bias);
                let dx = prev.row_mut(i);
                layer.weight.matvec_t_acc(dy, dx);
                for (g, &a) in dx.iter_mut().zip(input.row(i)) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            delta = prev;
        }
        // first layer: gradients gathered per entity / relation, then projected
        let h1 = self.layers[0].weight.rows();
        let mut d_src = Matrix::zeros(emb.entities.rows(), h1);
        let mut d_rel = Matrix::zeros(emb.relations.rows(), h1);
        let mut d_dst = Matrix::zeros(emb.entities.rows(), h1);
        let mut d_base = vec![0.0; h1];
        for (i, &(s, p, o)) in cache.edges.iter().enumerate() {
            let dz = delta.row(i);
            axpy(1.0, dz, d_src.row_mut(s));
            axpy(1.0, dz, d_rel.row_mut(p));
            axpy(1.0, dz, d_dst.row_mut(o));
            axpy(1.0, dz, &mut d_base);
        }
        let g0 = &mut grads.layers[0];
        axpy(1.0, &d_base, &mut g0.bias);
        let mut acc_block = |block: usize, dz: &[f64], z: &[f64]| {
            for (j, &gj) in dz.iter().enumerate() {
                if gj != 0.0 {
                    axpy(gj, z, &mut g0.weight.row_mut(j)[block * d..(block + 1) * d]);
                }
            }
        };
        for v in 0..emb.entities.rows() {
            acc_block(0, d_src.row(v), emb.entities.row(v));
            acc_block(2, d_dst.row(v), emb.entities.row(v));
        }
        for r in 0..emb.relations.rows() {
            acc_block(1, d_rel.row(r), emb.relations.row(r));
        }
        acc_block(3, &d_base, emb.entities.row(cache.head));
        acc_block(4, &d_base, emb.relations.row(cache.relation));
    }
}

/// Standard logistic sample, used for the binary-concrete relaxation.
pub fn logistic_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(1e-10..1.0 - 1e-10);
    (u / (1.0 - u)).ln()
}

/// Relaxed edge mask over the kept edges of `view`:
/// `sigmoid((logit + g) / temperature)` with logistic `g` when `noise` is
/// given, noise-free otherwise. Also returns the logits.
pub fn edge_scores<R: Rng + ?Sized>(
    net: &MaskNet,
    emb: &EmbeddingTable,
    view: &SubgraphView<'_>,
    temperature: f64,
    noise: Option<&mut R>,
) -> Result<(EdgeMask, Vec<f64>, LogitCache)> {
    if !(temperature > 0.0) {
        return Err(Error::contract(format!("temperature {temperature} must be positive")));
    }
    let edges: Vec<EdgeId> = view.kept_edges().collect();
    let (logits, cache) = net.logits(emb, view, &edges)?;
    let values: Vec<f64> = match noise {
        Some(rng) => logits
            .iter()
            .map(|l| omega(l + logistic_noise(rng), temperature))
            .collect(),
        None => logits.iter().map(|&l| omega(l, temperature)).collect(),
    };
    Ok((EdgeMask::new(edges, values)?, logits, cache))
}

/// Kept strictly inside (0, 1) so downstream logs stay finite.
pub(crate) fn omega(x: f64, temperature: f64) -> f64 {
    sigmoid(x / temperature).clamp(OMEGA_FLOOR, 1.0 - OMEGA_FLOOR)
}
