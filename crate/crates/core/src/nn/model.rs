use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{dense_backward, dense_forward, Activation, LinearLayer};
use crate::error::{Error, Result};
use crate::qsim::grad::QuantumTape;
use crate::qsim::{AnsatzKind, AnsatzSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Linear, ReLU, quantum layer, Linear, Tanh.
    Cqc,
    /// Linear, ReLU, Linear, ReLU, Linear, Tanh.
    Ccc,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Cqc => "cqc",
            ModelKind::Ccc => "ccc",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cqc" => Ok(ModelKind::Cqc),
            "ccc" => Ok(ModelKind::Ccc),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Architecture of a surrogate Poisson model. `width` is the grid size, which
/// for the hybrid model must equal `2^n_qubits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<AnsatzSpec>,
}

/// One stage of the layer stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Linear { n_in: usize, n_out: usize },
    Act(Activation),
    Quantum(AnsatzSpec),
}

impl Stage {
    pub fn param_count(&self) -> usize {
        match *self {
            Stage::Linear { n_in, n_out } => LinearLayer::param_count(n_in, n_out),
            Stage::Act(_) => 0,
            Stage::Quantum(a) => a.param_count(),
        }
    }
}

impl ModelSpec {
    pub fn cqc(ansatz: AnsatzSpec) -> Self {
        Self {
            kind: ModelKind::Cqc,
            width: 1 << ansatz.n_qubits,
            ansatz: Some(ansatz),
        }
    }

    pub fn ccc(width: usize) -> Self {
        Self {
            kind: ModelKind::Ccc,
            width,
            ansatz: None,
        }
    }

    /// Six qubits, six strongly entangling layers.
    pub fn default_cqc() -> Self {
        Self::cqc(AnsatzSpec::new(AnsatzKind::StronglyEntangling, 6, 6))
    }

    pub fn default_ccc() -> Self {
        Self::ccc(64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::Config("model width must be positive".into()));
        }
        match (self.kind, self.ansatz) {
            (ModelKind::Cqc, None) => Err(Error::Config("the cqc model needs an ansatz".into())),
            (ModelKind::Cqc, Some(a)) if a.n_qubits == 0 || a.n_qubits >= 32 || 1usize << a.n_qubits != self.width => {
                Err(Error::Config(format!(
                    "cqc width {} does not match 2^{} amplitudes",
                    self.width, a.n_qubits
                )))
            }
            (ModelKind::Ccc, Some(_)) => Err(Error::Config("the ccc model takes no ansatz".into())),
            _ => Ok(()),
        }
    }

    pub fn stages(&self) -> Vec<Stage> {
        let w = self.width;
        let lin = Stage::Linear { n_in: w, n_out: w };
        match (self.kind, self.ansatz) {
            (ModelKind::Cqc, Some(a)) => vec![
                lin,
                Stage::Act(Activation::Relu),
                Stage::Quantum(a),
                lin,
                Stage::Act(Activation::Tanh),
            ],
            _ => vec![
                lin,
                Stage::Act(Activation::Relu),
                lin,
                Stage::Act(Activation::Relu),
                lin,
                Stage::Act(Activation::Tanh),
            ],
        }
    }

    pub fn param_count(&self) -> usize {
        self.stages().iter().map(Stage::param_count).sum()
    }

    fn check(&self, params: &[f64], input: &[f64]) -> Result<()> {
        self.validate()?;
        if params.len() != self.param_count() {
            return Err(Error::Dimension {
                context: "model parameters",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if input.len() != self.width {
            return Err(Error::Dimension {
                context: "model input",
                expected: self.width,
                got: input.len(),
            });
        }
        Ok(())
    }
}

pub fn param_count(spec: &ModelSpec) -> usize {
    spec.param_count()
}

/// Seeded initial parameters: linear weights uniform in `[-1/sqrt(n_in), 1/sqrt(n_in)]`,
/// biases zero, circuit angles uniform in `[0, 2 pi)`.
pub fn init_params(spec: &ModelSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.param_count());
    for stage in spec.stages() {
        match stage {
            Stage::Linear { n_in, n_out } => {
                let bound = 1.0 / (n_in as f64).sqrt();
                out.extend((0..n_in * n_out).map(|_| rng.gen_range(-bound..=bound)));
                out.extend(std::iter::repeat_n(0.0, n_out));
            }
            Stage::Quantum(a) => out.extend((0..a.param_count()).map(|_| rng.gen_range(0.0..2.0 * PI))),
            Stage::Act(_) => {}
        }
    }
    out
}

/// Per-stage intermediate values of one forward pass.
struct Trace {
    /// `values[k]` is the input of stage `k`; the last entry is the model output.
    values: Vec<Vec<f64>>,
    tape: Option<QuantumTape>,
}

fn run_forward(stages: &[Stage], params: &[f64], input: &[f64], keep_tape: bool) -> Result<Trace> {
    let mut values = Vec::with_capacity(stages.len() + 1);
    values.push(input.to_vec());
    let mut tape = None;
    let mut offset = 0;
    for stage in stages {
        let x = values.last().expect("non-empty trace");
        let y = match *stage {
            Stage::Linear { n_in, n_out } => {
                let (w, b) = params[offset..offset + n_in * n_out + n_out].split_at(n_in * n_out);
                let mut y = vec![0.0; n_out];
                dense_forward(w, b, x, &mut y);
                y
            }
            Stage::Act(a) => x.iter().map(|&v| a.apply(v)).collect(),
            Stage::Quantum(a) => {
                let t = QuantumTape::record(x, &a, &params[offset..offset + a.param_count()])?;
                let y = t.probabilities();
                if keep_tape {
                    tape = Some(t);
                }
                y
            }
        };
        offset += stage.param_count();
        values.push(y);
    }
    Ok(Trace { values, tape })
}

/// Maps a normalized charge density to a normalized potential.
pub fn model_forward(spec: &ModelSpec, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    spec.check(params, input)?;
    let mut trace = run_forward(&spec.stages(), params, input, false)?;
    Ok(trace.values.pop().expect("non-empty trace"))
}

/// Gradient of `sum_i upstream_i * output_i` with respect to every parameter.
pub fn model_backward(spec: &ModelSpec, params: &[f64], input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; params.len()];
    forward_backward(spec, params, input, &mut grad, |_| Ok((0.0, upstream.to_vec())))?;
    Ok(grad)
}

/// One forward pass, a loss evaluated on the output, and the reverse sweep.
///
/// `loss` returns the loss value and its gradient with respect to the output.
/// Parameter gradients are added into `grad`, so shard sums can be
/// accumulated without extra buffers. Returns the loss value.
pub fn forward_backward<F>(spec: &ModelSpec, params: &[f64], input: &[f64], grad: &mut [f64], loss: F) -> Result<f64>
where
    F: FnOnce(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    spec.check(params, input)?;
    if grad.len() != params.len() {
        return Err(Error::Dimension {
            context: "gradient buffer",
            expected: params.len(),
            got: grad.len(),
        });
    }
    let stages = spec.stages();
    let Trace { values, mut tape } = run_forward(&stages, params, input, true)?;
    let (value, mut up) = loss(values.last().expect("non-empty trace"))?;
    if up.len() != spec.width {
        return Err(Error::Dimension {
            context: "model upstream gradient",
            expected: spec.width,
            got: up.len(),
        });
    }

    let mut offset = params.len();
    for (k, stage) in stages.iter().enumerate().rev() {
        offset -= stage.param_count();
        let (x, y) = (&values[k], &values[k + 1]);
        match *stage {
            Stage::Act(a) => {
                for ((u, &x), &y) in up.iter_mut().zip(x).zip(y) {
                    *u *= a.derivative(x, y);
                }
            }
            Stage::Linear { n_in, n_out } => {
                let w = &params[offset..offset + n_in * n_out];
                let (gw, gb) = grad[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                if k == 0 {
                    dense_backward(w, x, &up, gw, gb, None);
                } else {
                    let mut gx = vec![0.0; n_in];
                    dense_backward(w, x, &up, gw, gb, Some(&mut gx));
                    up = gx;
                }
            }
            Stage::Quantum(a) => {
                let n = a.param_count();
                let t = tape.take().expect("forward pass kept the quantum tape");
                let g = t.backward(x, &params[offset..offset + n], &up)?;
                for (acc, g) in grad[offset..offset + n].iter_mut().zip(&g.params) {
                    *acc += g;
                }
                up = g.features;
            }
        }
    }
    Ok(value)
}

/// A model architecture bundled with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: Vec<f64>,
}

impl Model {
    pub fn new(spec: ModelSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::Dimension {
                context: "model parameters",
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { spec, params })
    }

    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let params = init_params(&spec, seed);
        Ok(Self { spec, params })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        model_forward(&self.spec, &self.params, input)
    }
}
