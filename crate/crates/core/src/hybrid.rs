//! The PIC loop with a trained surrogate standing in for the Poisson solver.
//!
//! The surrogate sees `rho / max|rho|` and its normalized output is scaled
//! back either by `c * max|rho|` with a calibrated constant `c`, or by the
//! true potential scale of a paired baseline run at the same step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::mrae;
use crate::nn::Model;
use crate::pic::{
    electric_field, max_abs, run_with, FieldKind, Frame, GridField, PoissonSolver, RecordOptions, SimConfig,
    SimulationResult,
};
use crate::training::Dataset;

/// Below this `max|rho|` the surrogate returns a zero potential.
pub const ZERO_FIELD_THRESHOLD: f64 = 1e-14;

/// Mean of `s_phi / s_rho` over samples with nonzero charge scale.
pub fn calibrate_scale(dataset: &Dataset) -> Result<f64> {
    let ratios: Vec<f64> = dataset
        .samples
        .iter()
        .filter(|s| s.s_rho > 0.0)
        .map(|s| s.s_phi / s.s_rho)
        .collect();
    if ratios.is_empty() {
        return Err(Error::Calibration("no sample has a nonzero charge scale".into()));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    /// `phi = output * c * max|rho|`.
    Calibrated(f64),
    /// `phi = output * s_phi[step]`, taken from a baseline run.
    Oracle(Vec<f64>),
}

impl Rescale {
    /// Per-step potential scales of baseline frames, indexed by step.
    pub fn oracle_from_frames(frames: &[Frame]) -> Result<Self> {
        let mut scales = vec![f64::NAN; frames.iter().map(|f| f.step + 1).max().unwrap_or(0)];
        for f in frames {
            scales[f.step] = max_abs(&f.phi);
        }
        if scales.is_empty() || scales.iter().any(|s| s.is_nan()) {
            return Err(Error::Calibration("baseline frames do not cover every step".into()));
        }
        Ok(Rescale::Oracle(scales))
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Rescale::Calibrated(_) => "calibrated",
            Rescale::Oracle(_) => "oracle",
        }
    }
}

/// A trained model used as a Poisson solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateSolver {
    pub model: Model,
    pub rescale: Rescale,
}

impl SurrogateSolver {
    pub fn new(model: Model, rescale: Rescale) -> Result<Self> {
        if let Rescale::Calibrated(c) = rescale {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Calibration(format!("scale constant must be positive, got {c}")));
            }
        }
        Ok(Self { model, rescale })
    }

    /// Physical potential predicted for the raw charge density at `step`.
    pub fn predict(&self, rho: &[f64], step: usize) -> Result<Vec<f64>> {
        let s = max_abs(rho);
        if s.is_nan() || s < ZERO_FIELD_THRESHOLD {
            return Ok(vec![0.0; rho.len()]);
        }
        let input: Vec<f64> = rho.iter().map(|v| v / s).collect();
        let out = self.model.forward(&input)?;
        let factor = match &self.rescale {
            Rescale::Calibrated(c) => c * s,
            Rescale::Oracle(table) => *table.get(step).ok_or_else(|| {
                Error::Calibration(format!("no oracle scale for step {step} (table has {})", table.len()))
            })?,
        };
        Ok(out.into_iter().map(|v| v * factor).collect())
    }
}

pub fn model_poisson_solve(rho: &GridField, solver: &SurrogateSolver, step: usize) -> Result<GridField> {
    Ok(GridField::new(FieldKind::Potential, solver.predict(&rho.values, step)?))
}

impl PoissonSolver for SurrogateSolver {
    fn solve(&mut self, rho: &GridField, step: usize) -> Result<GridField> {
        model_poisson_solve(rho, self, step)
    }
}

/// Field comparison between a hybrid run and its baseline at one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub step: usize,
    pub mrae_e: f64,
    pub baseline_max_e: f64,
    pub hybrid_max_e: f64,
}

#[derive(Clone, Debug)]
pub struct HybridResult {
    pub result: SimulationResult,
    pub paired: Option<Vec<PairedRow>>,
}

/// Runs the PIC loop with `solver`. With a baseline run of the same
/// configuration, the per-step electric fields are compared.
pub fn run_hybrid<S: PoissonSolver>(
    config: &SimConfig,
    solver: &mut S,
    record: RecordOptions,
    baseline: Option<&SimulationResult>,
) -> Result<HybridResult> {
    if let Some(b) = baseline {
        if b.efields.len() < config.n_steps {
            return Err(Error::Dimension {
                context: "paired baseline steps",
                expected: config.n_steps,
                got: b.efields.len(),
            });
        }
    }
    let mut paired = baseline.map(|_| Vec::with_capacity(config.n_steps));
    let result = run_with(config, solver, record, |_, out| {
        if let (Some(b), Some(rows)) = (baseline, paired.as_mut()) {
            let step = out.row.step;
            let e_true = &b.efields[step];
            rows.push(PairedRow {
                step,
                mrae_e: mrae(&out.efield.values, e_true)?,
                baseline_max_e: max_abs(e_true),
                hybrid_max_e: out.row.max_abs_e,
            });
        }
        Ok(())
    })?;
    Ok(HybridResult { result, paired })
}

/// Per-frame MRAE of the electric field derived from the surrogate's
/// potential against the field of the true potential.
pub fn prediction_errors(solver: &SurrogateSolver, frames: &[Frame], dx: f64) -> Result<Vec<f64>> {
    frames
        .iter()
        .map(|f| {
            let phi = GridField::new(FieldKind::Potential, solver.predict(&f.rho, f.step)?);
            let e_pred = electric_field(&phi, dx);
            let e_true = electric_field(&GridField::new(FieldKind::Potential, f.phi.clone()), dx);
            mrae(&e_pred.values, &e_true.values)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, ModelSpec};
    use crate::pic::{run_simulation, SpectralPoisson};
    use crate::qsim::{AnsatzKind, AnsatzSpec};
    use crate::training::{dataset_from_frames, generate_dataset};

    fn small_model() -> Model {
        let spec = ModelSpec::cqc(AnsatzSpec::new(AnsatzKind::BasicEntangler, 6, 1));
        Model::new(spec, init_params(&spec, 1)).unwrap()
    }

    fn short_config() -> SimConfig {
        SimConfig {
            n_steps: 30,
            ..SimConfig::two_stream(0.07)
        }
    }

    #[test]
    fn calibration_cases() {
        let base = SimConfig::default();
        let frames: Vec<Frame> = (1..5)
            .map(|k| Frame {
                step: k,
                rho: (0..8).map(|i| k as f64 * (i as f64 - 3.5)).collect(),
                phi: (0..8).map(|i| 0.3 * k as f64 * (i as f64 - 3.5)).collect(),
            })
            .collect();
        let ds = dataset_from_frames(&base, &[0.1], std::slice::from_ref(&frames), 4).unwrap();
        assert!((calibrate_scale(&ds).unwrap() - 0.3).abs() < 1e-15);
        let one = dataset_from_frames(&base, &[0.1], &[frames[..1].to_vec()], 1).unwrap();
        assert!((calibrate_scale(&one).unwrap() - 0.3).abs() < 1e-15);
        let mut empty = one;
        empty.samples.clear();
        assert!(calibrate_scale(&empty).is_err());
    }

    #[test]
    fn default_dataset_calibration_near_median() {
        let ds = generate_dataset(&SimConfig::two_stream(0.1), &[0.03, 0.05, 0.1], 500).unwrap();
        let c = calibrate_scale(&ds).unwrap();
        let mut r: Vec<f64> = ds.samples.iter().map(|s| s.s_phi / s.s_rho).collect();
        r.sort_by(f64::total_cmp);
        let med = (r[r.len() / 2 - 1] + r[r.len() / 2]) / 2.0;
        assert!((c - med).abs() <= 0.1 * med, "c = {c}, median = {med}");
    }

    #[test]
    fn zero_density_gives_zero_potential_and_bound_holds() {
        let solver = SurrogateSolver::new(small_model(), Rescale::Calibrated(0.02)).unwrap();
        assert_eq!(solver.predict(&[0.0; 64], 0).unwrap(), vec![0.0; 64]);
        let rho: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin() * 0.01).collect();
        let phi = solver.predict(&rho, 0).unwrap();
        let bound = 0.02 * max_abs(&rho);
        assert!(phi.iter().all(|v| v.abs() < bound));
        assert!(SurrogateSolver::new(small_model(), Rescale::Calibrated(0.0)).is_err());
    }

    #[test]
    fn oracle_table_from_frames() {
        let cfg = short_config();
        let base = run_simulation(&cfg, &mut SpectralPoisson::new(64, cfg.dx()), RecordOptions::frames()).unwrap();
        let Rescale::Oracle(t) = Rescale::oracle_from_frames(&base.frames).unwrap() else {
            panic!("expected oracle table");
        };
        assert_eq!(t.len(), 30);
        assert_eq!(t[3], max_abs(&base.frames[3].phi));
        let solver = SurrogateSolver::new(small_model(), Rescale::Oracle(t)).unwrap();
        assert!(solver.predict(&base.frames[0].rho, 31).is_err());
    }

    #[test]
    fn baseline_passthrough_is_identical() {
        let cfg = short_config();
        let mut a = SpectralPoisson::new(64, cfg.dx());
        let mut b = SpectralPoisson::new(64, cfg.dx());
        let base = run_simulation(&cfg, &mut a, RecordOptions::frames()).unwrap();
        let hyb = run_hybrid(&cfg, &mut b, RecordOptions::frames(), Some(&base)).unwrap();
        assert_eq!(hyb.result.diagnostics, base.diagnostics);
        assert_eq!(hyb.result.particles, base.particles);
        let rows = hyb.paired.unwrap();
        assert_eq!(rows.len(), 30);
        assert!(rows.iter().all(|r| r.mrae_e == 0.0));
    }

    #[test]
    fn surrogate_run_stays_finite() {
        let cfg = short_config();
        let base = run_simulation(&cfg, &mut SpectralPoisson::new(64, cfg.dx()), RecordOptions::frames()).unwrap();
        let mut solver =
            SurrogateSolver::new(small_model(), Rescale::oracle_from_frames(&base.frames).unwrap()).unwrap();
        let hyb = run_hybrid(&cfg, &mut solver, RecordOptions::default(), Some(&base)).unwrap();
        assert!(hyb.result.diagnostics.rows.iter().all(|r| r.total.is_finite()));
        let errs = prediction_errors(&solver, &base.frames, cfg.dx()).unwrap();
        assert_eq!(errs.len(), 30);
        assert!(errs.iter().all(|e| e.is_finite() && *e >= 0.0));
    }
}
