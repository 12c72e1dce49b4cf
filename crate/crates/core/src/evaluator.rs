//! Evaluators trained on perturbed graphs so that they keep scoring sensibly
//! on the small subgraphs explainers produce.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{
    drop_edges_distance, drop_edges_uniform, DistanceDecay, EntityId, KnowledgeGraph, Query,
    SubgraphView,
};
use crate::model::{init_model, train_with_views, BackboneConfig, Model, Role, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DropKind {
    Uniform { p: f64 },
    DistanceDecay { p_max: f64, gamma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropSchedule {
    #[serde(flatten)]
    pub kind: DropKind,
    #[serde(default = "default_true")]
    pub resample_per_epoch: bool,
}

fn default_true() -> bool {
    true
}

impl DropSchedule {
    pub fn uniform(p: f64) -> Self {
        Self {
            kind: DropKind::Uniform { p },
            resample_per_epoch: true,
        }
    }

    pub fn distance_decay(p_max: f64, gamma: f64) -> Self {
        Self {
            kind: DropKind::DistanceDecay { p_max, gamma },
            resample_per_epoch: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DropKind::Uniform { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::config(format!("uniform drop probability {p} outside [0, 1]")))
            }
            DropKind::DistanceDecay { p_max, .. } if !(0.0..=1.0).contains(&p_max) => {
                Err(Error::config(format!("p_max {p_max} outside [0, 1]")))
            }
            DropKind::DistanceDecay { gamma, .. } if !(gamma > 0.0 && gamma < 1.0) => {
                Err(Error::config(format!("gamma {gamma} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn role(&self) -> Role {
        match self.kind {
            DropKind::Uniform { .. } => Role::EvaluatorUniform,
            DropKind::DistanceDecay { .. } => Role::EvaluatorDistance,
        }
    }

    /// A perturbed copy of `view`; distance-based drops are anchored at `anchor`.
    pub fn sample<'g>(
        &self,
        view: &SubgraphView<'g>,
        anchor: EntityId,
        rng: &mut ChaCha8Rng,
    ) -> Result<SubgraphView<'g>> {
        match self.kind {
            DropKind::Uniform { p } => drop_edges_uniform(view, p, rng),
            DropKind::DistanceDecay { p_max, gamma } => {
                drop_edges_distance(view, anchor, &DistanceDecay { p_max, gamma }, rng)
            }
        }
    }
}

/// Trains a fresh model exactly like the backbone, except that every query
/// is scored on a perturbed view anchored at its head entity.
///
/// View sampling draws from its own random stream, so a schedule that never
/// drops anything reproduces backbone training bit for bit.
pub fn train_evaluator(
    config: &BackboneConfig,
    g: &KnowledgeGraph,
    schedule: &DropSchedule,
    queries: &[Query],
    train: &TrainConfig,
    init_seed: u64,
) -> Result<Model> {
    schedule.validate()?;
    let mut model = init_model(config, g, init_seed)?;
    model.role = schedule.role();
    let full = SubgraphView::full(g);
    let mut view_rng = ChaCha8Rng::seed_from_u64(train.seed);
    view_rng.set_stream(1);
    let mut fixed: Vec<Option<SubgraphView<'_>>> = vec![None; queries.len()];
    train_with_views(&model, queries, train, |i, _epoch| {
        if schedule.resample_per_epoch {
            return schedule.sample(&full, queries[i].head, &mut view_rng);
        }
        if fixed[i].is_none() {
            fixed[i] = Some(schedule.sample(&full, queries[i].head, &mut view_rng)?);
        }
        Ok(fixed[i].clone().unwrap())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(DropSchedule::uniform(0.3).validate().is_ok());
        assert!(DropSchedule::uniform(-0.1).validate().is_err());
        assert!(DropSchedule::distance_decay(0.95, 0.7).validate().is_ok());
        assert!(DropSchedule::distance_decay(0.95, 1.0).validate().is_err());
        assert!(DropSchedule::distance_decay(1.5, 0.5).validate().is_err());
    }

    #[test]
    fn schedule_serde_shape() {
        let s: DropSchedule =
            serde_json::from_str(r#"{"kind":"distance_decay","p_max":0.9,"gamma":0.5}"#).unwrap();
        assert_eq!(s.kind, DropKind::DistanceDecay { p_max: 0.9, gamma: 0.5 });
        assert!(s.resample_per_epoch);
        assert_eq!(s.role(), Role::EvaluatorDistance);
    }
}
