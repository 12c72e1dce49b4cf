use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackboneConfig, Model, Parameters, Role};
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

pub const CHECKPOINT_FORMAT: &str = "kgxk-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk model container: config echo plus named parameter arrays.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub role: Role,
    pub config: BackboneConfig,
    pub num_relations: usize,
    pub tensors: Vec<NamedTensor>,
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let tensors = model
            .params
            .tensor_specs()
            .into_iter()
            .zip(model.params.tensors())
            .map(|((name, shape), data)| NamedTensor {
                name,
                shape,
                data: data.to_vec(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            role: model.role,
            config: model.config.clone(),
            num_relations: model.num_relations,
            tensors,
            loss_history: model.loss_history.clone(),
        }
    }

    /// Rebuilds the model, checking every tensor name and shape against the config.
    pub fn into_model(self) -> Result<Model> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut model = super::init_model_for(&self.config, self.num_relations, 0)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let specs = model.params.tensor_specs();
        if specs.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                specs.len(),
                self.tensors.len()
            )));
        }
        for ((name, shape), t) in specs.iter().zip(&self.tensors) {
            if *name != t.name || *shape != t.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    t.name, t.shape
                )));
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{name}` holds {} values for shape {shape:?}",
                    t.data.len()
                )));
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::Checkpoint(format!("tensor `{name}` has non-finite values")));
            }
        }
        let mut params: Parameters = model.params;
        for (dst, t) in params.tensors_mut().into_iter().zip(&self.tensors) {
            dst.copy_from_slice(&t.data);
        }
        model.params = params;
        model.role = self.role;
        model.loss_history = self.loss_history;
        Ok(model)
    }
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::from_model(model))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn parse_checkpoint(text: &str) -> Result<Model> {
    let ckpt: Checkpoint = serde_json::from_str(text)?;
    ckpt.into_model()
}

/// Loads a checkpoint and, when `graph` is given, checks it fits that graph.
pub fn load_checkpoint(path: &Path, graph: Option<&KnowledgeGraph>) -> Result<Model> {
    let model = parse_checkpoint(&fs::read_to_string(path)?)?;
    if let Some(g) = graph {
        model.check_graph(g)?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_model_for;

    #[test]
    fn round_trip_preserves_parameters_and_role() {
        let mut m = init_model_for(&BackboneConfig::default(), 6, 5).unwrap();
        m.role = Role::EvaluatorDistance;
        m.loss_history = vec![1.0, 0.5];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_checkpoint(&m, &path).unwrap();
        assert_eq!(load_checkpoint(&path, None).unwrap(), m);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = init_model_for(&BackboneConfig::default(), 6, 5).unwrap();
        let mut ckpt = Checkpoint::from_model(&m);
        ckpt.tensors[0].shape = vec![5, 16];
        assert!(ckpt.clone().into_model().is_err());
        ckpt.tensors[0].shape = vec![6, 16];
        ckpt.tensors[0].data.pop();
        assert!(ckpt.into_model().is_err());
    }

    #[test]
    fn version_is_checked() {
        let m = init_model_for(&BackboneConfig::default(), 2, 0).unwrap();
        let mut ckpt = Checkpoint::from_model(&m);
        ckpt.version = 99;
        assert!(matches!(ckpt.into_model(), Err(Error::Checkpoint(_))));
    }
}
