use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pic::second_difference;

/// How the Poisson residual of a normalized prediction is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualConvention {
    /// `(s_phi / s_rho) * D2_dx(phi) + rho`: the physical PDE in normalized variables.
    #[default]
    Physical,
    /// `D2_1(phi) + rho` with unit node spacing and no scale factor.
    NormalizedIndex,
}

fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { context, expected, got });
    }
    Ok(())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute error over all nodes.
pub fn data_loss(phi_pred: &[f64], phi_true: &[f64]) -> Result<f64> {
    check_len("data loss target", phi_pred.len(), phi_true.len())?;
    if phi_pred.is_empty() {
        return Err(Error::Empty("data loss input"));
    }
    let sum: f64 = phi_pred.iter().zip(phi_true).map(|(p, t)| (t - p).abs()).sum();
    Ok(sum / phi_pred.len() as f64)
}

/// Mean absolute error over `indices` and its gradient with respect to `phi_pred`.
/// The subgradient of `|x|` at zero is taken as 0.
pub fn sparse_data_loss_grad(phi_pred: &[f64], phi_true: &[f64], indices: &[usize]) -> Result<(f64, Vec<f64>)> {
    check_len("data loss target", phi_pred.len(), phi_true.len())?;
    if indices.is_empty() {
        return Err(Error::Config("data loss needs at least one index".into()));
    }
    let inv = 1.0 / indices.len() as f64;
    let mut grad = vec![0.0; phi_pred.len()];
    let mut sum = 0.0;
    for &i in indices {
        let d = phi_pred[i] - phi_true[i];
        sum += d.abs();
        grad[i] += inv * sign(d);
    }
    Ok((sum * inv, grad))
}

/// Periodic `(phi_{i+1} - 2 phi_i + phi_{i-1}) / dx^2`.
pub fn fd_second_derivative(phi: &[f64], dx: f64) -> Vec<f64> {
    second_difference(phi, dx)
}

/// Normalization scales of one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleScales {
    pub s_rho: f64,
    pub s_phi: f64,
}

/// Inputs of the physics-informed loss that do not change during training.
#[derive(Clone, Copy, Debug)]
pub struct PinnTerms<'a> {
    pub rho_norm: &'a [f64],
    pub phi_true: &'a [f64],
    pub scales: SampleScales,
    pub lambda: f64,
    pub indices: &'a [usize],
    pub dx: f64,
    pub convention: ResidualConvention,
}

impl PinnTerms<'_> {
    fn residual_factor(&self) -> (f64, f64) {
        match self.convention {
            ResidualConvention::Physical => (self.scales.s_phi / self.scales.s_rho, self.dx),
            ResidualConvention::NormalizedIndex => (1.0, 1.0),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        check_len("pinn charge density", n, self.rho_norm.len())?;
        check_len("pinn potential target", n, self.phi_true.len())?;
        if n == 0 {
            return Err(Error::Empty("pinn loss input"));
        }
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if self.lambda > 0.0 && self.indices.is_empty() {
            return Err(Error::Config("pinn loss with lambda > 0 needs data indices".into()));
        }
        if let Some(&i) = self.indices.iter().find(|&&i| i >= n) {
            return Err(Error::Config(format!("data index {i} outside 0..{n}")));
        }
        Ok(())
    }

    /// Physics residual `c * D2(phi) + rho` at every node.
    pub fn residual(&self, phi_pred: &[f64]) -> Vec<f64> {
        let (c, h) = self.residual_factor();
        fd_second_derivative(phi_pred, h)
            .iter()
            .zip(self.rho_norm)
            .map(|(d, r)| c * d + r)
            .collect()
    }
}

/// Mean absolute physics residual over all nodes plus `lambda` times the mean
/// absolute data error over the sparse indices.
pub fn pinn_loss(phi_pred: &[f64], terms: &PinnTerms<'_>) -> Result<f64> {
    Ok(pinn_loss_grad(phi_pred, terms)?.0)
}

pub fn pinn_loss_grad(phi_pred: &[f64], terms: &PinnTerms<'_>) -> Result<(f64, Vec<f64>)> {
    let n = phi_pred.len();
    terms.check(n)?;
    let (c, h) = terms.residual_factor();
    let residual = terms.residual(phi_pred);
    let physics = residual.iter().map(|r| r.abs()).sum::<f64>() / n as f64;
    // D2 is symmetric, so the gradient is D2 applied to sign(residual).
    let signs: Vec<f64> = residual.iter().map(|&r| sign(r)).collect();
    let mut grad: Vec<f64> = fd_second_derivative(&signs, h)
        .iter()
        .map(|g| g * c / n as f64)
        .collect();
    let mut value = physics;
    if terms.lambda > 0.0 {
        let (data, g) = sparse_data_loss_grad(phi_pred, terms.phi_true, terms.indices)?;
        value += terms.lambda * data;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += terms.lambda * b;
        }
    }
    Ok((value, grad))
}

/// `n_data` indices `round(k * 64 / n_data)` spread evenly over a 64-node grid.
pub fn sparse_select(n_data: usize) -> Result<Vec<usize>> {
    sparse_select_on(n_data, 64)
}

pub fn sparse_select_on(n_data: usize, n_grid: usize) -> Result<Vec<usize>> {
    if n_data == 0 || n_data > n_grid {
        return Err(Error::Config(format!("N_d must lie in 1..={n_grid}, got {n_data}")));
    }
    Ok((0..n_data)
        .map(|k| ((k * n_grid) as f64 / n_data as f64).round() as usize)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rv(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn data_loss_cases() {
        let a = rv(1, 64);
        assert_eq!(data_loss(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = a.iter().map(|v| v + 0.25).collect();
        assert!((data_loss(&a, &shifted).unwrap() - 0.25).abs() < 1e-15);
        let b = rv(2, 64);
        let mut oracle = 0.0;
        for i in 0..64 {
            oracle += (b[i] - a[i]).abs();
        }
        assert!((data_loss(&a, &b).unwrap() - oracle / 64.0).abs() < 1e-15);
        assert!(data_loss(&a, &b[..3]).is_err());
    }

    #[test]
    fn second_derivative_cases() {
        assert!(fd_second_derivative(&[2.5; 64], 1.0 / 64.0).iter().all(|&v| v == 0.0));
        let dx = 1.0 / 64.0;
        let phi: Vec<f64> = (0..64).map(|i| (2.0 * PI * i as f64 * dx).cos()).collect();
        let d2 = fd_second_derivative(&phi, dx);
        for (d, p) in d2.iter().zip(&phi) {
            assert!((d + 4.0 * PI * PI * p).abs() < 4.0 * PI * PI * 4e-3);
        }
        let r = rv(3, 64);
        let d2 = fd_second_derivative(&r, 0.5);
        for i in 0..64 {
            let left = if i == 0 { r[63] } else { r[i - 1] };
            let right = if i == 63 { r[0] } else { r[i + 1] };
            assert!((d2[i] - (left - 2.0 * r[i] + right) * 4.0).abs() < 1e-12);
        }
    }

    fn terms<'a>(rho: &'a [f64], phi: &'a [f64], lambda: f64, idx: &'a [usize]) -> PinnTerms<'a> {
        PinnTerms {
            rho_norm: rho,
            phi_true: phi,
            scales: SampleScales {
                s_rho: 2.0,
                s_phi: 0.05,
            },
            lambda,
            indices: idx,
            dx: 1.0 / 64.0,
            convention: ResidualConvention::Physical,
        }
    }

    #[test]
    fn pinn_lambda_linearity_and_pure_physics() {
        let (rho, phi, pred) = (rv(4, 64), rv(5, 64), rv(6, 64));
        let idx = sparse_select(20).unwrap();
        let t0 = terms(&rho, &phi, 0.0, &idx);
        let physics = pinn_loss(&pred, &t0).unwrap();
        let r = t0.residual(&pred);
        assert!((physics - r.iter().map(|v| v.abs()).sum::<f64>() / 64.0).abs() < 1e-12);
        let l1 = pinn_loss(&pred, &terms(&rho, &phi, 0.3, &idx)).unwrap() - physics;
        let l2 = pinn_loss(&pred, &terms(&rho, &phi, 0.6, &idx)).unwrap() - physics;
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
        assert!(pinn_loss(&pred, &terms(&rho, &phi, 0.5, &[])).is_err());
    }

    #[test]
    fn pinn_gradient_matches_finite_differences() {
        let (rho, phi, pred) = (rv(7, 16), rv(8, 16), rv(9, 16));
        let idx = sparse_select_on(5, 16).unwrap();
        for convention in [ResidualConvention::Physical, ResidualConvention::NormalizedIndex] {
            let mut t = terms(&rho, &phi, 0.5, &idx);
            t.dx = 1.0 / 16.0;
            t.convention = convention;
            let (_, g) = pinn_loss_grad(&pred, &t).unwrap();
            for i in 0..16 {
                let h = 1e-7;
                let mut p = pred.clone();
                p[i] += h;
                let fp = pinn_loss(&p, &t).unwrap();
                p[i] -= 2.0 * h;
                let fm = pinn_loss(&p, &t).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn sparse_selection() {
        assert_eq!(sparse_select(64).unwrap(), (0..64).collect::<Vec<_>>());
        assert_eq!(sparse_select(1).unwrap(), vec![0]);
        let idx = sparse_select(20).unwrap();
        assert_eq!(idx.len(), 20);
        for w in idx.windows(2) {
            assert!(w[1] > w[0]);
            assert!(((w[1] - w[0]) as f64 - 3.2).abs() <= 1.0);
        }
        assert!(sparse_select(0).is_err());
        assert!(sparse_select(65).is_err());
    }

    #[test]
    fn sparse_data_gradient() {
        let (v, g) = sparse_data_loss_grad(&[1.0, 2.0, 3.0], &[0.0, 2.0, 5.0], &[0, 1, 2]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(g, vec![1.0 / 3.0, 0.0, -1.0 / 3.0]);
    }
}
