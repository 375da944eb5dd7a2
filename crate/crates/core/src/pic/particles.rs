use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{Loading, Scenario, SimConfig};
use crate::error::{Error, Result};

/// Electron macroparticles on a periodic domain `[0, length)`.
///
/// Velocities are stored at half steps once a simulation has been set up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Beam label, 0 for the `+v0` beam and 1 for the `-v0` beam.
    pub beam: Vec<u8>,
    pub charge: f64,
    pub mass: f64,
    pub length: f64,
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn charge_to_mass(&self) -> f64 {
        self.charge / self.mass
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocities.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn momentum(&self) -> f64 {
        self.mass * self.velocities.iter().sum::<f64>()
    }
}

/// Total electron charge is -1 and total mass 1, so the plasma frequency is 1.
pub fn init_particles(config: &SimConfig) -> Result<ParticleEnsemble> {
    config.validate()?;
    let n = config.n_particles();
    let l = config.length;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let per_beam = [n - n / 2, n / 2];
    let mut positions = Vec::with_capacity(n);
    let mut beam = Vec::with_capacity(n);
    for (id, &count) in per_beam.iter().enumerate() {
        for j in 0..count {
            let x0 = match config.loading {
                Loading::Quiet => j as f64 * l / count as f64,
                Loading::Random => rng.gen::<f64>() * l,
            };
            let k = 2.0 * std::f64::consts::PI * config.perturbation_mode as f64 / l;
            let x = x0 + config.perturbation_amplitude * (k * x0).sin();
            positions.push(wrap(x, l));
            beam.push(id as u8);
        }
    }

    let velocities = match config.scenario {
        Scenario::TwoStream => beam
            .iter()
            .map(|&b| if b == 0 { config.v0 } else { -config.v0 })
            .collect(),
        Scenario::Thermal => {
            if config.vth == 0.0 {
                vec![0.0; n]
            } else {
                let normal = Normal::new(0.0, config.vth).map_err(|e| Error::Config(format!("thermal spread: {e}")))?;
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            }
        }
    };

    Ok(ParticleEnsemble {
        positions,
        velocities,
        beam,
        charge: -1.0 / n as f64,
        mass: 1.0 / n as f64,
        length: l,
    })
}

/// Maps `x` into `[0, length)`.
pub(crate) fn wrap(x: f64, length: f64) -> f64 {
    let y = x.rem_euclid(length);
    // rem_euclid can round up to `length` for tiny negative inputs
    if y >= length {
        0.0
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_stream_energy_and_counts() {
        let p = init_particles(&SimConfig::two_stream(0.07)).unwrap();
        assert_eq!(p.len(), 12_800);
        assert!((p.charge_to_mass().abs() - 1.0).abs() < 1e-15);
        assert!((p.kinetic_energy() - 0.00245).abs() < 1e-12);
        assert!(p.momentum().abs() < 1e-15);
        assert!(p.positions.iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn cold_unperturbed_start_is_at_rest_and_equispaced() {
        let mut c = SimConfig::two_stream(0.0);
        c.perturbation_amplitude = 0.0;
        let p = init_particles(&c).unwrap();
        assert!(p.velocities.iter().all(|&v| v == 0.0));
        let per_beam = p.len() / 2;
        for j in 0..per_beam {
            let expected = j as f64 / per_beam as f64;
            assert_eq!(p.positions[j], expected);
            assert_eq!(p.positions[per_beam + j], expected);
        }
    }

    #[test]
    fn thermal_mean_is_small() {
        let vth = 0.05;
        let p = init_particles(&SimConfig::thermal(vth)).unwrap();
        let n = p.len() as f64;
        let mean = p.velocities.iter().sum::<f64>() / n;
        assert!(mean.abs() < 4.0 * vth / n.sqrt(), "mean {mean}");
        let var = p.velocities.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() - vth).abs() < 0.05 * vth);
    }

    #[test]
    fn seeded_random_loading_is_reproducible() {
        let mut c = SimConfig::thermal(0.03);
        c.loading = Loading::Random;
        c.seed = 11;
        assert_eq!(init_particles(&c).unwrap(), init_particles(&c).unwrap());
        let mut d = c.clone();
        d.seed = 12;
        assert_ne!(init_particles(&c).unwrap(), init_particles(&d).unwrap());
    }

    #[test]
    fn wrap_handles_edges() {
        assert_eq!(wrap(1.0, 1.0), 0.0);
        assert_eq!(wrap(-1e-18, 1.0), 0.0);
        assert!((wrap(-0.25, 1.0) - 0.75).abs() < 1e-15);
        assert!((wrap(2.5, 1.0) - 0.5).abs() < 1e-15);
    }
}
