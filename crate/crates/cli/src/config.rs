//! Run configuration: a TOML file with a fixed schema, every key optional.

use std::fs;
use std::path::{Path, PathBuf};

use kgxk_core::baselines::InstanceConfig;
use kgxk_core::evaluator::DropSchedule;
use kgxk_core::explainer::{ExplainerConfig, PprConfig};
use kgxk_core::model::{BackboneConfig, TrainConfig};
use kgxk_core::synthetic::SyntheticConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Uniform,
    Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorSection {
    pub kind: ScheduleKind,
    pub uniform_p: f64,
    pub p_max: f64,
    pub gamma: f64,
    pub resample_per_epoch: bool,
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        Self {
            kind: ScheduleKind::Distance,
            uniform_p: 0.3,
            p_max: 0.95,
            gamma: 0.7,
            resample_per_epoch: true,
        }
    }
}

impl EvaluatorSection {
    pub fn schedule(&self) -> DropSchedule {
        let mut s = match self.kind {
            ScheduleKind::Uniform => DropSchedule::uniform(self.uniform_p),
            ScheduleKind::Distance => DropSchedule::distance_decay(self.p_max, self.gamma),
        };
        s.resample_per_epoch = self.resample_per_epoch;
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub drop_probs: Vec<f64>,
    pub radii: Vec<u32>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            drop_probs: vec![0.0, 0.1, 0.3, 0.5, 0.7],
            radii: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory holding `train.txt`, `valid.txt` and `test.txt`.
    pub dataset: PathBuf,
    /// Overrides every per-section seed.
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub budgets: Vec<usize>,
    /// Restricts queries to these relation names (inverse labels allowed).
    pub query_relations: Vec<String>,
    pub max_train_queries: Option<usize>,
    pub max_eval_queries: Option<usize>,
    pub backbone: BackboneConfig,
    pub train: TrainConfig,
    pub evaluator: EvaluatorSection,
    pub ppr: PprConfig,
    pub explainer: ExplainerConfig,
    pub instance: InstanceConfig,
    pub fine_tune: TrainConfig,
    pub sweep: SweepSection,
    pub synthetic: SyntheticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data"),
            seed: 0,
            out_dir: None,
            budgets: vec![5, 10, 20],
            query_relations: Vec::new(),
            max_train_queries: None,
            max_eval_queries: None,
            backbone: BackboneConfig::default(),
            train: TrainConfig::default(),
            evaluator: EvaluatorSection::default(),
            ppr: PprConfig::default(),
            explainer: ExplainerConfig::default(),
            instance: InstanceConfig::default(),
            fine_tune: TrainConfig {
                epochs: 5,
                ..TrainConfig::default()
            },
            sweep: SweepSection::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Pushes the top-level seed into every section.
    pub fn propagate_seed(&mut self) {
        let s = self.seed;
        self.train.seed = s;
        self.fine_tune.seed = s;
        self.explainer.seed = s;
        self.instance.seed = s;
        self.synthetic.seed = s;
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err("budgets must be a non-empty list of positive sizes".into());
        }
        if self.sweep.drop_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err("sweep.drop_probs must lie in [0, 1]".into());
        }
        let checks = [
            self.backbone.validate(),
            self.train.validate(),
            self.fine_tune.validate(),
            self.evaluator.schedule().validate(),
            self.ppr.validate(),
            self.explainer.validate(),
        ];
        for c in checks {
            c.map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("sed = 3").is_err());
        assert!(RunConfig::parse("[ppr]\nalfa = 0.2").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = RunConfig::default();
        c.seed = 7;
        c.ppr.beta_out = 0.01;
        c.evaluator.kind = ScheduleKind::Uniform;
        c.propagate_seed();
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn seed_reaches_every_section() {
        let mut c = RunConfig::parse("seed = 9\n[train]\nseed = 1").unwrap();
        c.propagate_seed();
        assert_eq!((c.train.seed, c.explainer.seed, c.synthetic.seed), (9, 9, 9));
    }
}
