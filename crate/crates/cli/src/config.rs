//! Experiment configuration (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use graph_ising::field_net::FieldNetConfig;
use graph_ising::ising::AcceptanceRule;
use graph_ising::sai::{PatternOptions, PositionMode};
use graph_ising::trainer::{AdamConfig, PenaltyMode, SampleSource, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSection,
    pub ising: IsingSection,
    #[serde(default)]
    pub train: TrainSection,
    pub task: TaskSection,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub alpha: f64,
    pub theta: f64,
    pub weight_sharing: bool,
    pub center_features: bool,
    pub zero_sum_output: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = FieldNetConfig::new(1);
        Self {
            num_layers: d.num_layers,
            hidden_dim: d.hidden_dim,
            alpha: d.alpha,
            theta: d.theta_id,
            weight_sharing: d.weight_sharing,
            center_features: d.center_features,
            zero_sum_output: d.zero_sum_output,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Metropolis,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    pub beta: f64,
    #[serde(rename = "J")]
    pub coupling: f64,
    /// Metropolis sweeps per draw.
    #[serde(rename = "T")]
    pub sweeps: usize,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    /// Accept with `exp(-2 β ΔE)` (a run at doubled β) for comparison with
    /// implementations that use that convention.
    #[serde(default)]
    pub doubled_beta_acceptance: bool,
}

fn default_sampler() -> SamplerKind {
    SamplerKind::Metropolis
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Deterministic,
    Stochastic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    /// Target magnetization; the kept fraction is `(1 + eta) / 2`.
    pub eta: f64,
    pub rloo_k: usize,
    pub penalty_weight: f64,
    pub penalty: PenaltyKind,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            eta: t.eta_target,
            rloo_k: t.rloo_k,
            penalty_weight: t.penalty_weight,
            penalty: PenaltyKind::Deterministic,
            learning_rate: t.adam.learning_rate,
            adam_beta1: t.adam.beta1,
            adam_beta2: t.adam.beta2,
            adam_epsilon: t.adam.epsilon,
            epochs: t.epochs,
            batch_size: t.batch_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Sai,
    Mesh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionKind {
    Pattern,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    /// SAI: candidate positions (`pattern` = structure of A + A², `full` = all).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<PositionKind>,
    /// SAI: mirror the selected pattern across the diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetrize: Option<bool>,
    /// SAI: always keep diagonal positions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_diagonal: Option<bool>,
}

impl TaskSection {
    pub fn position_mode(&self) -> PositionMode {
        match self.positions {
            Some(PositionKind::Full) => PositionMode::Full,
            _ => PositionMode::Pattern,
        }
    }

    pub fn pattern_options(&self) -> PatternOptions {
        PatternOptions {
            symmetrize: self.symmetrize.unwrap_or(false),
            force_diagonal: self.force_diagonal.unwrap_or(false),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    /// Dataset directory written by `gen-data`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Root seed; all randomness of a run derives from it.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Defaults used by `eval` when no config is available.
    pub fn defaults_for(kind: TaskKind) -> Self {
        let (coupling, sweeps) = match kind {
            TaskKind::Sai => (-0.4, 3),
            TaskKind::Mesh => (-1.0, 10),
        };
        Self {
            model: ModelSection::default(),
            ising: IsingSection {
                beta: 1.0,
                coupling,
                sweeps,
                sampler: SamplerKind::Metropolis,
                doubled_beta_acceptance: false,
            },
            train: TrainSection::default(),
            task: TaskSection {
                kind,
                positions: None,
                symmetrize: None,
                force_diagonal: None,
            },
            io: IoSection::default(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every section, so a bad config fails before any data is read.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.task.kind == TaskKind::Mesh
            && (self.task.positions.is_some()
                || self.task.symmetrize.is_some()
                || self.task.force_diagonal.is_some())
        {
            return Err(CliError::Config(
                "positions / symmetrize / force_diagonal apply to the sai task only".into(),
            ));
        }
        self.net_config(1).validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train_config(None)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn net_config(&self, input_dim: usize) -> FieldNetConfig {
        let m = &self.model;
        FieldNetConfig {
            num_layers: m.num_layers,
            hidden_dim: m.hidden_dim,
            alpha: m.alpha,
            theta_id: m.theta,
            weight_sharing: m.weight_sharing,
            input_dim,
            center_features: m.center_features,
            zero_sum_output: m.zero_sum_output,
        }
    }

    pub fn train_config(&self, checkpoint_dir: Option<PathBuf>) -> TrainConfig {
        let (i, t) = (&self.ising, &self.train);
        TrainConfig {
            eta_target: t.eta,
            beta: i.beta,
            coupling: i.coupling,
            sampler: match i.sampler {
                SamplerKind::Metropolis => SampleSource::Metropolis { sweeps: i.sweeps },
                SamplerKind::Exact => SampleSource::Exact,
            },
            acceptance: if i.doubled_beta_acceptance {
                AcceptanceRule::DoubledBeta
            } else {
                AcceptanceRule::Metropolis
            },
            rloo_k: t.rloo_k,
            penalty_weight: t.penalty_weight,
            penalty_mode: match t.penalty {
                PenaltyKind::Deterministic => PenaltyMode::Deterministic,
                PenaltyKind::Stochastic => PenaltyMode::Stochastic,
            },
            adam: AdamConfig {
                learning_rate: t.learning_rate,
                beta1: t.adam_beta1,
                beta2: t.adam_beta2,
                epsilon: t.adam_epsilon,
            },
            epochs: t.epochs,
            batch_size: t.batch_size,
            seed: self.io.seed,
            checkpoint_dir,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[ising]\nbeta = 1.0\nJ = -0.4\nT = 3\n[task]\nkind = \"sai\"\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.model, ModelSection::default());
        assert_eq!(c.train.epochs, 300);
        let t = c.train_config(None);
        assert_eq!(t.coupling, -0.4);
        assert_eq!(t.sampler, SampleSource::Metropolis { sweeps: 3 });
        assert_eq!(c.task.position_mode(), PositionMode::Pattern);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in [
            format!("{MINIMAL}[io]\nsed = 1\n"),
            format!("{MINIMAL}[train]\nepoch = 3\n"),
            MINIMAL.replace("T = 3", "T = 3\ntemperature = 2"),
            format!("{MINIMAL}[extra]\n"),
        ] {
            assert!(matches!(ExperimentConfig::parse(&bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(ExperimentConfig::parse(&MINIMAL.replace("beta = 1.0", "beta = -1.0")).is_err());
        assert!(ExperimentConfig::parse(&format!("{MINIMAL}[model]\nalpha = 2.0\n")).is_err());
        let mesh = MINIMAL.replace("\"sai\"", "\"mesh\"");
        assert!(ExperimentConfig::parse(&mesh).is_ok());
        assert!(ExperimentConfig::parse(&format!("{mesh}positions = \"full\"\n")).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn shipped_examples_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for name in ["sai.toml", "mesh.toml"] {
            ExperimentConfig::load(&dir.join(name)).unwrap();
        }
    }
}
