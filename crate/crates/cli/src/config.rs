//! The single run configuration shared by every command.
//!
//! A TOML file provides the keys; `key=value` arguments on the command line
//! override them. Unknown keys are rejected by name.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use qpic_core::nn::{ModelKind, ModelSpec};
use qpic_core::pic::{Loading, Scenario, SimConfig};
use qpic_core::qsim::{AnsatzKind, AnsatzSpec};
use qpic_core::training::{LossKind, ResidualConvention, TrainConfig};

use crate::UsageError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleMode {
    #[default]
    Calibrated,
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    /// Beam velocities of the training runs: `v0` for two-stream, `vth` for thermal.
    pub velocities: Vec<f64>,
    /// Velocity of the simulated or held-out run.
    pub velocity: f64,
    pub length: f64,
    pub n_cells: usize,
    pub particles_per_cell: usize,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    pub perturbation: f64,
    pub mode: usize,
    pub loading: Loading,
    pub samples: usize,

    pub model: ModelKind,
    pub ansatz: AnsatzKind,
    pub nl: usize,
    pub loss: LossKind,
    pub lambda: f64,
    pub nd: usize,
    pub lr: f64,
    pub epochs: usize,
    pub workers: usize,
    pub residual: ResidualConvention,
    pub local_step: bool,

    pub rescale: RescaleMode,
    pub bins: usize,
    pub snapshot_every: Option<usize>,
    pub sweep_nl: Vec<usize>,
    pub sweep_ansatz: Vec<AnsatzKind>,

    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        let sim = SimConfig::default();
        let train = TrainConfig::default();
        Self {
            scenario: Scenario::TwoStream,
            velocities: vec![0.03, 0.05, 0.1],
            velocity: 0.07,
            length: sim.length,
            n_cells: sim.n_cells,
            particles_per_cell: sim.particles_per_cell,
            dt: sim.dt,
            steps: sim.n_steps,
            seed: 0,
            perturbation: sim.perturbation_amplitude,
            mode: sim.perturbation_mode,
            loading: sim.loading,
            samples: 500,
            model: ModelKind::Cqc,
            ansatz: AnsatzKind::StronglyEntangling,
            nl: 6,
            loss: train.loss,
            lambda: train.lambda,
            nd: train.n_data,
            lr: train.lr,
            epochs: train.epochs,
            workers: 1,
            residual: train.residual,
            local_step: false,
            rescale: RescaleMode::Calibrated,
            bins: qpic_core::eval::DEFAULT_BINS,
            snapshot_every: None,
            sweep_nl: vec![2, 4, 6, 8, 10],
            sweep_ansatz: AnsatzKind::ALL.to_vec(),
            dataset_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.into())),
        Err(_) => toml::Value::String(value.into()),
    }
}

impl Config {
    /// Reads `path` (if any) and applies `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> anyhow::Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .map_err(|e| UsageError(format!("invalid config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for ov in overrides {
            let Some((key, value)) = ov.split_once('=') else {
                bail!(UsageError(format!("override `{ov}` is not of the form key=value")));
            };
            table.insert(key.trim().to_string(), parse_value(value.trim()));
        }
        let config: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| UsageError(format!("invalid configuration: {}", e.message())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.sim_for(self.velocity)
            .validate()
            .map_err(|e| UsageError(e.to_string()))?;
        self.train_config().validate().map_err(|e| UsageError(e.to_string()))?;
        if self.model == ModelKind::Cqc {
            self.model_spec()?;
        }
        if self.bins == 0 {
            bail!(UsageError("bins must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sim_for(&self, velocity: f64) -> SimConfig {
        let mut sim = SimConfig {
            length: self.length,
            n_cells: self.n_cells,
            particles_per_cell: self.particles_per_cell,
            dt: self.dt,
            n_steps: self.steps,
            scenario: self.scenario,
            v0: 0.0,
            vth: 0.0,
            perturbation_amplitude: self.perturbation,
            perturbation_mode: self.mode,
            loading: self.loading,
            seed: self.seed,
        };
        sim = sim.with_velocity(velocity);
        sim
    }

    pub fn model_spec(&self) -> anyhow::Result<ModelSpec> {
        self.spec_with(self.ansatz, self.nl)
    }

    pub fn spec_with(&self, ansatz: AnsatzKind, nl: usize) -> anyhow::Result<ModelSpec> {
        let spec = match self.model {
            ModelKind::Ccc => ModelSpec::ccc(self.n_cells),
            ModelKind::Cqc => {
                if !self.n_cells.is_power_of_two() || self.n_cells < 2 {
                    bail!(UsageError(format!(
                        "the cqc model needs a power-of-two grid, got n_cells = {}",
                        self.n_cells
                    )));
                }
                let n = self.n_cells.trailing_zeros() as usize;
                ModelSpec::cqc(AnsatzSpec::new(ansatz, n, nl))
            }
        };
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss,
            lambda: self.lambda,
            lr: self.lr,
            epochs: self.epochs,
            n_data: self.nd,
            workers: self.workers,
            seed: self.seed,
            residual: self.residual,
            local_step: self.local_step,
        }
    }
}
