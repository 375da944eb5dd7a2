use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial velocity distribution of the electron beams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Two cold counter-streaming beams at `+v0` and `-v0`.
    TwoStream,
    /// Two zero-mean beams with normally distributed velocities of spread `vth`.
    Thermal,
}

/// How particle positions are laid out at `t = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loading {
    /// Equispaced per beam, displaced by a sinusoidal perturbation.
    #[default]
    Quiet,
    /// Seeded uniform random positions.
    Random,
}

/// Parameters of a 1D periodic electrostatic run in dimensionless units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub length: f64,
    pub n_cells: usize,
    pub particles_per_cell: usize,
    pub dt: f64,
    pub n_steps: usize,
    pub scenario: Scenario,
    pub v0: f64,
    pub vth: f64,
    pub perturbation_amplitude: f64,
    pub perturbation_mode: usize,
    #[serde(default)]
    pub loading: Loading,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            n_cells: 64,
            particles_per_cell: 200,
            dt: 0.05,
            n_steps: 1000,
            scenario: Scenario::TwoStream,
            v0: 0.1,
            vth: 0.0,
            perturbation_amplitude: 3e-4,
            perturbation_mode: 1,
            loading: Loading::Quiet,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn two_stream(v0: f64) -> Self {
        Self {
            scenario: Scenario::TwoStream,
            v0,
            vth: 0.0,
            ..Self::default()
        }
    }

    pub fn thermal(vth: f64) -> Self {
        Self {
            scenario: Scenario::Thermal,
            v0: 0.0,
            vth,
            ..Self::default()
        }
    }

    /// Copy of this configuration with the scenario's characteristic velocity replaced.
    pub fn with_velocity(&self, velocity: f64) -> Self {
        let mut out = self.clone();
        match self.scenario {
            Scenario::TwoStream => out.v0 = velocity,
            Scenario::Thermal => out.vth = velocity,
        }
        out
    }

    /// The velocity that labels this run: `v0` for two-stream, `vth` for thermal.
    pub fn velocity(&self) -> f64 {
        match self.scenario {
            Scenario::TwoStream => self.v0,
            Scenario::Thermal => self.vth,
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn n_particles(&self) -> usize {
        self.n_cells * self.particles_per_cell
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Config(format!("length must be positive, got {}", self.length)));
        }
        if self.n_cells < 4 {
            return Err(Error::Config(format!(
                "n_cells must be at least 4, got {}",
                self.n_cells
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.particles_per_cell == 0 {
            return Err(Error::Config("particles_per_cell must be at least 1".into()));
        }
        if !self.v0.is_finite() || !self.vth.is_finite() || self.vth < 0.0 {
            return Err(Error::Config(format!(
                "invalid beam velocities v0 = {}, vth = {}",
                self.v0, self.vth
            )));
        }
        if !self.perturbation_amplitude.is_finite() {
            return Err(Error::Config("perturbation_amplitude must be finite".into()));
        }
        match self.scenario {
            Scenario::TwoStream if self.v0 != 0.0 && self.vth != 0.0 => Err(Error::Config(format!(
                "two_stream takes either v0 or vth, got v0 = {} and vth = {}",
                self.v0, self.vth
            ))),
            Scenario::Thermal if self.v0 != 0.0 => Err(Error::Config(format!(
                "thermal beams have zero drift, got v0 = {}",
                self.v0
            ))),
            _ => Ok(()),
        }
    }
}
