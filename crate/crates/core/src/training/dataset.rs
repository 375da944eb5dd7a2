use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pic::{max_abs, run_simulation, Frame, RecordOptions, SimConfig, SpectralPoisson};

/// Where a sample came from: the run's characteristic velocity and the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSource {
    pub velocity: f64,
    pub step: usize,
}

/// A max-normalized `(rho, phi)` pair with the scales that undo the normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub rho_norm: Vec<f64>,
    pub phi_norm: Vec<f64>,
    pub s_rho: f64,
    pub s_phi: f64,
    pub source: SampleSource,
}

impl TrainSample {
    /// Normalizes a raw frame. Returns `None` when either field is identically zero.
    pub fn from_frame(rho: &[f64], phi: &[f64], source: SampleSource) -> Option<Self> {
        let (rho_norm, s_rho) = normalize(rho)?;
        let (phi_norm, s_phi) = normalize(phi)?;
        Some(Self {
            rho_norm,
            phi_norm,
            s_rho,
            s_phi,
            source,
        })
    }

    pub fn raw_rho(&self) -> Vec<f64> {
        self.rho_norm.iter().map(|v| v * self.s_rho).collect()
    }

    pub fn raw_phi(&self) -> Vec<f64> {
        self.phi_norm.iter().map(|v| v * self.s_phi).collect()
    }
}

/// Divides by `max |values|`; `None` for an all-zero (or non-finite) vector.
pub fn normalize(values: &[f64]) -> Option<(Vec<f64>, f64)> {
    let s = max_abs(values);
    if !(s > 0.0 && s.is_finite()) {
        return None;
    }
    Some((values.iter().map(|v| v / s).collect(), s))
}

/// How a dataset was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProvenance {
    pub base_config: SimConfig,
    pub velocities: Vec<f64>,
    pub samples_total: usize,
    pub frames_total: usize,
    /// Pooled frame indices that were selected, before degenerate frames were dropped.
    pub selected: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<TrainSample>,
    /// Grid spacing of the frames.
    pub dx: f64,
    pub provenance: DatasetProvenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Indices `floor(k * total / count)` for `k < count`, or all indices when
/// `count >= total`.
pub fn stride_indices(total: usize, count: usize) -> Vec<usize> {
    if count >= total {
        return (0..total).collect();
    }
    (0..count).map(|k| k * total / count).collect()
}

/// Runs the baseline solver for each velocity and collects every frame.
/// Runs are independent and execute on separate threads.
pub fn baseline_frames(base: &SimConfig, velocities: &[f64]) -> Result<Vec<Vec<Frame>>> {
    let configs: Vec<SimConfig> = velocities.iter().map(|&v| base.with_velocity(v)).collect();
    for c in &configs {
        c.validate()?;
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                scope.spawn(move || {
                    let mut solver = SpectralPoisson::new(c.n_cells, c.dx());
                    run_simulation(c, &mut solver, RecordOptions::frames()).map(|r| r.frames)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("baseline run panicked"))
            .collect()
    })
}

/// Pools the frames of all runs in order and keeps `samples_total` of them by
/// uniform stride.
pub fn dataset_from_frames(
    base: &SimConfig,
    velocities: &[f64],
    runs: &[Vec<Frame>],
    samples_total: usize,
) -> Result<Dataset> {
    if samples_total == 0 {
        return Err(Error::Config("samples_total must be positive".into()));
    }
    let pooled: Vec<(f64, &Frame)> = velocities
        .iter()
        .zip(runs)
        .flat_map(|(&v, frames)| frames.iter().map(move |f| (v, f)))
        .collect();
    if pooled.is_empty() {
        return Err(Error::Empty("baseline frames"));
    }
    let mut warnings = Vec::new();
    if samples_total > pooled.len() {
        warnings.push(format!(
            "requested {samples_total} samples but only {} frames exist; using all",
            pooled.len()
        ));
    }
    let selected = stride_indices(pooled.len(), samples_total);
    let mut samples = Vec::with_capacity(selected.len());
    for &i in &selected {
        let (velocity, frame) = pooled[i];
        let source = SampleSource {
            velocity,
            step: frame.step,
        };
        match TrainSample::from_frame(&frame.rho, &frame.phi, source) {
            Some(s) => samples.push(s),
            None => {
                let msg = format!("skipped degenerate frame: velocity {velocity}, step {}", frame.step);
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::Empty("dataset after dropping degenerate frames"));
    }
    Ok(Dataset {
        samples,
        dx: base.dx(),
        provenance: DatasetProvenance {
            base_config: base.clone(),
            velocities: velocities.to_vec(),
            samples_total,
            frames_total: pooled.len(),
            selected,
            warnings,
        },
    })
}

/// Baseline runs at each velocity, pooled and strided down to `samples_total`.
pub fn generate_dataset(base: &SimConfig, velocities: &[f64], samples_total: usize) -> Result<Dataset> {
    if velocities.is_empty() {
        return Err(Error::Config("velocity list is empty".into()));
    }
    let runs = baseline_frames(base, velocities)?;
    dataset_from_frames(base, velocities, &runs, samples_total)
}
