//! Classical 1D electrostatic particle-in-cell engine on a periodic domain.
//!
//! Particles carry charge `-1/N` and mass `1/N`; a uniform ion background
//! keeps the domain neutral. Deposition and gathering share cloud-in-cell
//! weights, so the baseline scheme conserves momentum to round-off.

mod config;
mod grid;
mod particles;
mod poisson;
mod sim;

pub use config::{Loading, Scenario, SimConfig};
pub use grid::{deposit_charge, electric_field, gather_field, max_abs, second_difference, FieldKind, GridField};
pub use particles::{init_particles, ParticleEnsemble};
pub use poisson::{solve_poisson, PoissonSolver, SpectralPoisson, SOLVABILITY_TOLERANCE};
pub use sim::{
    pic_step, push_particles, run_simulation, run_with, DiagnosticsRow, DiagnosticsSeries, Frame, PhaseSnapshot,
    PicState, RecordOptions, SimulationResult, StepOutput,
};
