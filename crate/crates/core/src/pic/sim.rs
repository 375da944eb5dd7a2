use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::grid::{deposit_charge, electric_field, gather_field, GridField};
use super::particles::{init_particles, wrap, ParticleEnsemble};
use super::poisson::PoissonSolver;
use crate::error::Result;

/// Energy and field amplitude at one PIC cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub step: usize,
    pub time: f64,
    pub kinetic: f64,
    pub field: f64,
    pub total: f64,
    pub max_abs_e: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn total_energy(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.total).collect()
    }

    pub fn max_abs_e(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.max_abs_e).collect()
    }

    /// Largest `|total(t) - total(0)| / total(0)` over the run.
    pub fn relative_energy_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        self.rows
            .iter()
            .map(|r| ((r.total - first.total) / first.total).abs())
            .fold(0.0, f64::max)
    }
}

/// Charge density and potential at one PIC cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: usize,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSnapshot {
    pub step: usize,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub beam: Vec<u8>,
}

impl PhaseSnapshot {
    fn of(step: usize, p: &ParticleEnsemble) -> Self {
        Self {
            step,
            positions: p.positions.clone(),
            velocities: p.velocities.clone(),
            beam: p.beam.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RecordOptions {
    pub frames: bool,
    pub snapshot_every: Option<usize>,
}

impl RecordOptions {
    pub fn frames() -> Self {
        Self {
            frames: true,
            snapshot_every: None,
        }
    }
}

/// Fields produced by one cycle, before the particles moved.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub rho: GridField,
    pub phi: GridField,
    pub efield: GridField,
    pub row: DiagnosticsRow,
}

/// Particles with velocities staggered half a step behind positions.
#[derive(Clone, Debug, PartialEq)]
pub struct PicState {
    pub particles: ParticleEnsemble,
    pub config: SimConfig,
    /// Index of the next cycle to run.
    pub step: usize,
}

/// `v += (q/m) E dt`, then `x = (x + v dt) mod L`.
pub fn push_particles(particles: &mut ParticleEnsemble, e_at_particles: &[f64], dt: f64) {
    let qm = particles.charge_to_mass();
    let l = particles.length;
    for ((x, v), e) in particles
        .positions
        .iter_mut()
        .zip(particles.velocities.iter_mut())
        .zip(e_at_particles)
    {
        *v += qm * e * dt;
        *x = wrap(*x + *v * dt, l);
    }
}

fn solve_fields<S: PoissonSolver>(
    particles: &ParticleEnsemble,
    config: &SimConfig,
    solver: &mut S,
    step: usize,
) -> Result<(GridField, GridField, GridField)> {
    let rho = deposit_charge(particles, config.n_cells)?;
    let phi = solver.solve(&rho, step)?;
    let efield = electric_field(&phi, config.dx());
    Ok((rho, phi, efield))
}

impl PicState {
    /// Loads particles and performs the backward half-step velocity push.
    ///
    /// Also returns the fields and exact energies at `t = 0`.
    pub fn new<S: PoissonSolver>(config: &SimConfig, solver: &mut S) -> Result<(Self, StepOutput)> {
        let mut particles = init_particles(config)?;
        let (rho, phi, efield) = solve_fields(&particles, config, solver, 0)?;
        let kinetic = particles.kinetic_energy();
        let field = efield.energy(config.dx());
        let row = DiagnosticsRow {
            step: 0,
            time: 0.0,
            kinetic,
            field,
            total: kinetic + field,
            max_abs_e: efield.max_abs(),
        };
        let e_at = gather_field(&efield, &particles);
        let kick = -0.5 * particles.charge_to_mass() * config.dt;
        for (v, e) in particles.velocities.iter_mut().zip(&e_at) {
            *v += kick * e;
        }
        let state = Self {
            particles,
            config: config.clone(),
            step: 0,
        };
        Ok((state, StepOutput { rho, phi, efield, row }))
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }
}

/// One cycle: deposit, solve, differentiate, gather, push.
///
/// The diagnostics row uses the time-centred kinetic energy
/// `(KE(t - dt/2) + KE(t + dt/2)) / 2`.
pub fn pic_step<S: PoissonSolver>(state: &mut PicState, solver: &mut S) -> Result<StepOutput> {
    let config = &state.config;
    let (rho, phi, efield) = solve_fields(&state.particles, config, solver, state.step)?;
    let e_at = gather_field(&efield, &state.particles);
    let before = state.particles.kinetic_energy();
    push_particles(&mut state.particles, &e_at, config.dt);
    let after = state.particles.kinetic_energy();
    let kinetic = 0.5 * (before + after);
    let field = efield.energy(config.dx());
    let row = DiagnosticsRow {
        step: state.step,
        time: state.time(),
        kinetic,
        field,
        total: kinetic + field,
        max_abs_e: efield.max_abs(),
    };
    state.step += 1;
    Ok(StepOutput { rho, phi, efield, row })
}

#[derive(Clone, Debug)]
pub struct SimulationResult {
    pub particles: ParticleEnsemble,
    pub diagnostics: DiagnosticsSeries,
    pub frames: Vec<Frame>,
    pub snapshots: Vec<PhaseSnapshot>,
    /// Electric field of every cycle, used for paired comparisons.
    pub efields: Vec<Vec<f64>>,
}

/// Runs `config.n_steps` cycles. With zero steps the result holds the initial
/// state and its single diagnostics row.
pub fn run_simulation<S: PoissonSolver>(
    config: &SimConfig,
    solver: &mut S,
    record: RecordOptions,
) -> Result<SimulationResult> {
    run_with(config, solver, record, |_, _| Ok(()))
}

/// Same as [`run_simulation`] with a per-step observer.
pub fn run_with<S, F>(
    config: &SimConfig,
    solver: &mut S,
    record: RecordOptions,
    mut observe: F,
) -> Result<SimulationResult>
where
    S: PoissonSolver,
    F: FnMut(&PicState, &StepOutput) -> Result<()>,
{
    let (mut state, initial) = PicState::new(config, solver)?;
    let mut diagnostics = DiagnosticsSeries::default();
    let mut frames = Vec::new();
    let mut snapshots = Vec::new();
    let mut efields = Vec::new();
    if config.n_steps == 0 {
        diagnostics.rows.push(initial.row);
        if record.frames {
            frames.push(Frame {
                step: 0,
                rho: initial.rho.values,
                phi: initial.phi.values,
            });
        }
        efields.push(initial.efield.values);
    }
    for _ in 0..config.n_steps {
        if let Some(every) = record.snapshot_every {
            if every > 0 && state.step % every == 0 {
                snapshots.push(PhaseSnapshot::of(state.step, &state.particles));
            }
        }
        let out = pic_step(&mut state, solver)?;
        observe(&state, &out)?;
        diagnostics.rows.push(out.row);
        if record.frames {
            frames.push(Frame {
                step: out.row.step,
                rho: out.rho.values,
                phi: out.phi.values,
            });
        }
        efields.push(out.efield.values);
    }
    if record.snapshot_every.is_some() {
        snapshots.push(PhaseSnapshot::of(state.step, &state.particles));
    }
    Ok(SimulationResult {
        particles: state.particles,
        diagnostics,
        frames,
        snapshots,
        efields,
    })
}
