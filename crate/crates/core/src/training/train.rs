use std::ops::Range;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::dataset::{Dataset, TrainSample};
use super::loss::{
    pinn_loss_grad, sparse_data_loss_grad, sparse_select_on, PinnTerms, ResidualConvention, SampleScales,
};
use crate::error::{Error, Result};
use crate::nn::{forward_backward, init_params, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean absolute potential error over the data indices.
    Data,
    /// Poisson residual on every node plus weighted sparse data error.
    Pinn,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "data" => Ok(LossKind::Data),
            "pinn" => Ok(LossKind::Pinn),
            other => Err(Error::Config(format!("unknown loss `{other}`"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossKind::Data => "data",
            LossKind::Pinn => "pinn",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    /// Number of potential nodes with supervised values.
    pub n_data: usize,
    pub workers: usize,
    pub seed: u64,
    #[serde(default)]
    pub residual: ResidualConvention,
    /// Each worker steps its own replica on its shard and the replicas are
    /// averaged after every epoch, instead of one step on the global gradient.
    #[serde(default)]
    pub local_step: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Data,
            lambda: 0.5,
            lr: 1e-3,
            epochs: 2000,
            n_data: 64,
            workers: 1,
            seed: 0,
            residual: ResidualConvention::Physical,
            local_step: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.n_data == 0 {
            return Err(Error::Config("n_data must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean loss over the dataset at the parameters entering this epoch.
    pub loss: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.loss).collect()
    }
}

/// Contiguous shards of equal size; the last one takes the remainder.
pub fn shard_ranges(n: usize, workers: usize) -> Result<Vec<Range<usize>>> {
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    if workers > n {
        return Err(Error::Config(format!(
            "{workers} workers exceed the {n} available samples"
        )));
    }
    let base = n / workers;
    Ok((0..workers)
        .map(|w| {
            let start = w * base;
            let end = if w + 1 == workers { n } else { start + base };
            start..end
        })
        .collect())
}

/// Loss and output gradient for one sample.
fn sample_loss(
    config: &TrainConfig,
    sample: &TrainSample,
    indices: &[usize],
    dx: f64,
    output: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match config.loss {
        LossKind::Data => sparse_data_loss_grad(output, &sample.phi_norm, indices),
        LossKind::Pinn => pinn_loss_grad(
            output,
            &PinnTerms {
                rho_norm: &sample.rho_norm,
                phi_true: &sample.phi_norm,
                scales: SampleScales {
                    s_rho: sample.s_rho,
                    s_phi: sample.s_phi,
                },
                lambda: config.lambda,
                indices,
                dx,
                convention: config.residual,
            },
        ),
    }
}

/// Loss sum and gradient sum over one shard.
fn shard_sums(
    spec: &ModelSpec,
    params: &[f64],
    samples: &[TrainSample],
    config: &TrainConfig,
    indices: &[usize],
    dx: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for s in samples {
        loss += forward_backward(spec, params, &s.rho_norm, &mut grad, |out| {
            sample_loss(config, s, indices, dx, out)
        })?;
    }
    Ok((loss, grad))
}

/// Shard sums for every shard, in shard order. Shards after the first run on
/// scoped threads while the calling thread handles the first one.
fn all_shard_sums(
    spec: &ModelSpec,
    params: &[&[f64]],
    samples: &[TrainSample],
    shards: &[Range<usize>],
    config: &TrainConfig,
    indices: &[usize],
    dx: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let work = |w: usize| shard_sums(spec, params[w], &samples[shards[w].clone()], config, indices, dx);
    if shards.len() == 1 {
        return Ok(vec![work(0)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (1..shards.len()).map(|w| scope.spawn(move || work(w))).collect();
        let mut out = vec![work(0)];
        out.extend(handles.into_iter().map(|h| h.join().expect("training worker panicked")));
        out.into_iter().collect()
    })
}

fn state_dump(params: &[f64], grad: Option<&[f64]>, loss: f64) -> String {
    let finite = |v: &[f64]| v.iter().filter(|x| x.is_finite()).count();
    let max_abs = |v: &[f64]| v.iter().filter(|x| x.is_finite()).fold(0.0f64, |m, x| m.max(x.abs()));
    let mut s = format!(
        "loss = {loss}; params: {} of {} finite, max |p| = {:e}",
        finite(params),
        params.len(),
        max_abs(params)
    );
    if let Some(g) = grad {
        s.push_str(&format!(
            "; grad: {} of {} finite, max |g| = {:e}",
            finite(g),
            g.len(),
            max_abs(g)
        ));
    }
    s
}

/// Single-worker full-batch training from seeded initial parameters.
pub fn train(spec: &ModelSpec, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let single = TrainConfig {
        workers: 1,
        ..config.clone()
    };
    train_parallel(spec, dataset, &single)
}

/// Full-batch training with `config.workers` data-parallel workers.
pub fn train_parallel(spec: &ModelSpec, dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    let params = init_params(spec, config.seed);
    train_from(spec, params, dataset, config, |_, _| {})
}

/// Trains from the given parameters; `observe(epoch, params)` sees the
/// parameters after every update.
pub fn train_from<F>(
    spec: &ModelSpec,
    mut params: Vec<f64>,
    dataset: &Dataset,
    config: &TrainConfig,
    mut observe: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &[f64]),
{
    config.validate()?;
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    if params.len() != spec.param_count() {
        return Err(Error::Dimension {
            context: "initial parameters",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    if config.n_data > spec.width {
        return Err(Error::Config(format!(
            "n_data {} exceeds the grid size {}",
            config.n_data, spec.width
        )));
    }
    let indices = sparse_select_on(config.n_data, spec.width)?;
    let shards = shard_ranges(dataset.len(), config.workers)?;
    let n = dataset.len() as f64;
    let local = config.local_step && shards.len() > 1;

    let mut adam = AdamState::new(params.len());
    let mut replicas: Vec<(Vec<f64>, AdamState)> = if local {
        shards
            .iter()
            .map(|_| (params.clone(), AdamState::new(params.len())))
            .collect()
    } else {
        Vec::new()
    };
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let start = Instant::now();
        let views: Vec<&[f64]> = if local {
            replicas.iter().map(|(p, _)| p.as_slice()).collect()
        } else {
            vec![params.as_slice(); shards.len()]
        };
        let sums = all_shard_sums(spec, &views, &dataset.samples, &shards, config, &indices, dataset.dx)?;
        let loss = sums.iter().map(|(l, _)| l).sum::<f64>() / n;

        if local {
            for ((rep, state), ((_, g), shard)) in replicas.iter_mut().zip(sums.iter().zip(&shards)) {
                let m = shard.len() as f64;
                let g: Vec<f64> = g.iter().map(|v| v / m).collect();
                state.step(rep, &g, config.lr);
            }
            let w = replicas.len() as f64;
            for (i, p) in params.iter_mut().enumerate() {
                *p = replicas.iter().map(|(r, _)| r[i]).sum::<f64>() / w;
            }
            for (rep, _) in replicas.iter_mut() {
                rep.copy_from_slice(&params);
            }
            if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    dump: state_dump(&params, None, loss),
                });
            }
        } else {
            let mut grad = vec![0.0; params.len()];
            for (_, g) in &sums {
                for (a, b) in grad.iter_mut().zip(g) {
                    *a += b;
                }
            }
            grad.iter_mut().for_each(|g| *g /= n);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    dump: state_dump(&params, Some(&grad), loss),
                });
            }
            adam.step(&mut params, &grad, config.lr);
        }

        observe(epoch, &params);
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        log::debug!("epoch {epoch}: loss {loss:.6e} ({wall_ms:.1} ms)");
        history.push(EpochRecord { epoch, loss, wall_ms });
    }
    Ok(TrainOutcome { params, history })
}


#[cfg(test)]
mod full_scale {
    use super::*;
    use crate::pic::SimConfig;
    use crate::training::generate_dataset;

    #[test]
    fn ccc_training_reduces_loss_tenfold() {
        let dataset = generate_dataset(&SimConfig::two_stream(0.1), &[0.03, 0.05, 0.1], 500).unwrap();
        let config = TrainConfig {
            epochs: 2000,
            ..TrainConfig::default()
        };
        let losses = train(&ModelSpec::default_ccc(), &dataset, &config).unwrap().losses();
        assert!(losses[0] >= 10.0 * losses[1999], "{} -> {}", losses[0], losses[1999]);
    }
}
