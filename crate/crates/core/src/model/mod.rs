//! Query-conditioned relational message passing.
//!
//! Node states start from the query relation's embedding at the head entity
//! and zero elsewhere. Each layer sends a relation-typed message along every
//! kept edge from source to target, optionally scaled by an edge mask, and
//! updates node states residually:
//!
//! ```text
//! agg_v   = (+)_{e=(s,p,v)} w_e * msg(x_s, rel_p)
//! x'_v    = x_v + relu(W (agg_v + boundary_v) + b)
//! score_v = dec . x_v^L + dec_b
//! ```
//!
//! With mean aggregation the normalizer is the sum of incoming mask weights,
//! so a zero weight is exactly equivalent to deleting the edge.

mod checkpoint;
mod forward;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use forward::{
    embed, fidelity_loss, forward, forward_trace, EdgeMask, EmbeddingTable, ScoreVector, Trace,
};
pub use train::{fine_tune, train_backbone, train_with_views, TrainConfig};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// `x_s * rel_p`, element-wise.
    DistMult,
    /// `x_s + rel_p`.
    Translation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackboneConfig {
    pub embed_dim: usize,
    pub num_layers: usize,
    pub aggregation: Aggregation,
    pub message: MessageKind,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            num_layers: 3,
            aggregation: Aggregation::Sum,
            message: MessageKind::DistMult,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.num_layers == 0 {
            return Err(Error::config(format!(
                "embed_dim ({}) and num_layers ({}) must be positive",
                self.embed_dim, self.num_layers
            )));
        }
        Ok(())
    }
}

/// What a trained model is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Backbone,
    EvaluatorUniform,
    EvaluatorDistance,
}

impl Role {
    pub fn is_evaluator(self) -> bool {
        !matches!(self, Role::Backbone)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Backbone => "backbone",
            Role::EvaluatorUniform => "evaluator_uniform",
            Role::EvaluatorDistance => "evaluator_distance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub relation: Matrix,
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Query relation embeddings; also the boundary condition at the head.
    pub query_relation: Matrix,
    pub layers: Vec<LayerParams>,
    pub decoder_weight: Vec<f64>,
    pub decoder_bias: Vec<f64>,
}

impl Parameters {
    fn init(config: &BackboneConfig, num_relations: usize, rng: &mut ChaCha8Rng) -> Self {
        let d = config.embed_dim;
        let query_relation = Matrix::uniform(num_relations, d, 1.0, rng);
        let layers = (0..config.num_layers)
            .map(|_| LayerParams {
                relation: Matrix::uniform(num_relations, d, 1.0, rng),
                weight: Matrix::glorot(d, d, rng),
                bias: vec![0.0; d],
            })
            .collect();
        let decoder_weight = Matrix::glorot(1, d, rng).as_slice().to_vec();
        Self {
            query_relation,
            layers,
            decoder_weight,
            decoder_bias: vec![0.0],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// `(name, shape)` for every tensor, in the same order as [`Parameters::tensors`].
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = vec![(
            "query_relation".to_owned(),
            self.query_relation.shape().to_vec(),
        )];
        for (i, l) in self.layers.iter().enumerate() {
            specs.push((format!("layers.{i}.relation"), l.relation.shape().to_vec()));
            specs.push((format!("layers.{i}.weight"), l.weight.shape().to_vec()));
            specs.push((format!("layers.{i}.bias"), vec![l.bias.len()]));
        }
        specs.push(("decoder.weight".to_owned(), vec![self.decoder_weight.len()]));
        specs.push(("decoder.bias".to_owned(), vec![1]));
        specs
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.query_relation.as_slice()];
        for l in &self.layers {
            out.push(l.relation.as_slice());
            out.push(l.weight.as_slice());
            out.push(&l.bias);
        }
        out.push(&self.decoder_weight);
        out.push(&self.decoder_bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![self.query_relation.as_mut_slice()];
        for l in &mut self.layers {
            out.push(l.relation.as_mut_slice());
            out.push(l.weight.as_mut_slice());
            out.push(&mut l.bias);
        }
        out.push(&mut self.decoder_weight);
        out.push(&mut self.decoder_bias);
        out
    }

    /// Order-sensitive digest of every parameter bit pattern.
    pub fn checksum(&self) -> u64 {
        // FNV-1a over the raw bits
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in self.tensors() {
            for x in t {
                for b in x.to_bits().to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// A model snapshot: configuration, role and learned parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: BackboneConfig,
    pub role: Role,
    pub num_relations: usize,
    pub params: Parameters,
    /// Mean training loss per epoch, across every training call on this model.
    pub loss_history: Vec<f64>,
}

impl Model {
    pub fn checksum(&self) -> u64 {
        self.params.checksum()
    }

    pub fn check_graph(&self, g: &KnowledgeGraph) -> Result<()> {
        if g.num_relations() != self.num_relations {
            return Err(Error::contract(format!(
                "model expects {} relations, graph has {}",
                self.num_relations,
                g.num_relations()
            )));
        }
        Ok(())
    }
}

pub fn init_model(config: &BackboneConfig, g: &KnowledgeGraph, seed: u64) -> Result<Model> {
    init_model_for(config, g.num_relations(), seed)
}

pub fn init_model_for(config: &BackboneConfig, num_relations: usize, seed: u64) -> Result<Model> {
    config.validate()?;
    if num_relations == 0 {
        return Err(Error::config("relation count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Model {
        config: config.clone(),
        role: Role::Backbone,
        num_relations,
        params: Parameters::init(config, num_relations, &mut rng),
        loss_history: Vec::new(),
    })
}
