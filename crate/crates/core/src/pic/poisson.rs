use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{FieldKind, GridField};
use crate::error::{Error, Result};

/// Largest |mean(rho)| accepted by the periodic solver.
pub const SOLVABILITY_TOLERANCE: f64 = 1e-8;

/// Maps a charge density to a potential. `step` is the PIC cycle index, which
/// surrogate solvers use to look up per-step output scales.
pub trait PoissonSolver {
    fn solve(&mut self, rho: &GridField, step: usize) -> Result<GridField>;
}

impl<S: PoissonSolver + ?Sized> PoissonSolver for &mut S {
    fn solve(&mut self, rho: &GridField, step: usize) -> Result<GridField> {
        (**self).solve(rho, step)
    }
}

impl<S: PoissonSolver + ?Sized> PoissonSolver for Box<S> {
    fn solve(&mut self, rho: &GridField, step: usize) -> Result<GridField> {
        (**self).solve(rho, step)
    }
}

/// Exact inverse of the periodic three-point Laplacian, computed in Fourier
/// space with the zero mode (the gauge) set to zero.
pub struct SpectralPoisson {
    n: usize,
    dx: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    inv_eigen: Vec<f64>,
    buffer: Vec<Complex64>,
}

impl SpectralPoisson {
    pub fn new(n: usize, dx: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let inv_eigen = (0..n)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * k as f64 / n as f64).sin();
                    dx * dx / (4.0 * s * s)
                }
            })
            .collect();
        Self {
            n,
            dx,
            forward,
            inverse,
            inv_eigen,
            buffer: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn solve_values(&mut self, rho: &[f64]) -> Result<Vec<f64>> {
        if rho.len() != self.n {
            return Err(Error::Dimension {
                context: "poisson solve",
                expected: self.n,
                got: rho.len(),
            });
        }
        let mean = rho.iter().sum::<f64>() / self.n as f64;
        if mean.is_nan() || mean.abs() > SOLVABILITY_TOLERANCE {
            return Err(Error::Solvability(mean));
        }
        for (b, &r) in self.buffer.iter_mut().zip(rho) {
            *b = Complex64::new(r, 0.0);
        }
        self.forward.process(&mut self.buffer);
        for (b, &g) in self.buffer.iter_mut().zip(&self.inv_eigen) {
            *b *= g;
        }
        self.inverse.process(&mut self.buffer);
        let norm = 1.0 / self.n as f64;
        let mut phi: Vec<f64> = self.buffer.iter().map(|c| c.re * norm).collect();
        // remove round-off drift of the zero mode
        let offset = phi.iter().sum::<f64>() * norm;
        for p in &mut phi {
            *p -= offset;
        }
        Ok(phi)
    }
}

impl PoissonSolver for SpectralPoisson {
    fn solve(&mut self, rho: &GridField, _step: usize) -> Result<GridField> {
        Ok(GridField::new(FieldKind::Potential, self.solve_values(&rho.values)?))
    }
}

/// One-shot spectral solve of the discrete periodic Poisson equation.
pub fn solve_poisson(rho: &GridField, dx: f64) -> Result<GridField> {
    SpectralPoisson::new(rho.len(), dx).solve(rho, 0)
}
