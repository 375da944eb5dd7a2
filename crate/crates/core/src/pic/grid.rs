use serde::{Deserialize, Serialize};

use super::particles::ParticleEnsemble;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    ChargeDensity,
    Potential,
    ElectricField,
}

/// Node values of one quantity on the periodic grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl GridField {
    pub fn new(kind: FieldKind, values: Vec<f64>) -> Self {
        Self { values, kind }
    }

    pub fn zeros(kind: FieldKind, n: usize) -> Self {
        Self::new(kind, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// `0.5 * sum(E^2) * dx`, for an electric field.
    pub fn energy(&self, dx: f64) -> f64 {
        0.5 * dx * self.values.iter().map(|e| e * e).sum::<f64>()
    }
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Cloud-in-cell cell index and weight of the right-hand node.
#[inline]
fn cic(x: f64, dx: f64, n: usize) -> (usize, usize, f64) {
    let s = x / dx;
    let cell = s.floor();
    let w = s - cell;
    let i = (cell as usize) % n;
    (i, (i + 1) % n, w)
}

/// First-order charge deposition plus a uniform neutralizing background of +1.
pub fn deposit_charge(particles: &ParticleEnsemble, n_cells: usize) -> Result<GridField> {
    let dx = particles.length / n_cells as f64;
    let mut rho = vec![0.0; n_cells];
    let q = particles.charge / dx;
    for (index, &x) in particles.positions.iter().enumerate() {
        if !(0.0..particles.length).contains(&x) {
            return Err(Error::PositionOutOfDomain {
                index,
                position: x,
                length: particles.length,
            });
        }
        let (i, j, w) = cic(x, dx, n_cells);
        rho[i] += q * (1.0 - w);
        rho[j] += q * w;
    }
    // Total electron charge is -1 on a domain of length L, so the background is 1/L.
    let background = -particles.charge * particles.len() as f64 / particles.length;
    for r in &mut rho {
        *r += background;
    }
    Ok(GridField::new(FieldKind::ChargeDensity, rho))
}

/// `E_i = -(phi_{i+1} - phi_{i-1}) / (2 dx)` with periodic indices.
pub fn electric_field(phi: &GridField, dx: f64) -> GridField {
    GridField::new(FieldKind::ElectricField, central_gradient(&phi.values, dx, -1.0))
}

fn central_gradient(values: &[f64], dx: f64, sign: f64) -> Vec<f64> {
    let n = values.len();
    let scale = sign / (2.0 * dx);
    (0..n)
        .map(|i| scale * (values[(i + 1) % n] - values[(i + n - 1) % n]))
        .collect()
}

/// Periodic second-order second difference `(f_{i+1} - 2 f_i + f_{i-1}) / dx^2`.
pub fn second_difference(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let inv = 1.0 / (dx * dx);
    (0..n)
        .map(|i| inv * (values[(i + 1) % n] - 2.0 * values[i] + values[(i + n - 1) % n]))
        .collect()
}

/// Interpolates the grid field to particle positions with the deposition weights.
pub fn gather_field(efield: &GridField, particles: &ParticleEnsemble) -> Vec<f64> {
    let n = efield.len();
    let dx = particles.length / n as f64;
    let e = &efield.values;
    particles
        .positions
        .iter()
        .map(|&x| {
            let (i, j, w) = cic(x, dx, n);
            (1.0 - w) * e[i] + w * e[j]
        })
        .collect()
}
