use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense affine map `out = W x + b` with `W` stored row-major as `[out][in]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearLayer {
    pub fn new(n_in: usize, n_out: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != n_in * n_out {
            return Err(Error::Dimension {
                context: "linear layer weights",
                expected: n_in * n_out,
                got: weights.len(),
            });
        }
        if bias.len() != n_out {
            return Err(Error::Dimension {
                context: "linear layer bias",
                expected: n_out,
                got: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Config("linear layer entries must be finite".into()));
        }
        Ok(Self {
            n_in,
            n_out,
            weights,
            bias,
        })
    }

    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut layer = Self::zeros(n, n);
        for i in 0..n {
            layer.weights[i * n + i] = 1.0;
        }
        layer
    }

    pub fn param_count(n_in: usize, n_out: usize) -> usize {
        n_in * n_out + n_out
    }

    /// Flat parameters in checkpoint order: weights then bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.weights.clone();
        out.extend_from_slice(&self.bias);
        out
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n_in {
            return Err(Error::Dimension {
                context: "linear layer input",
                expected: self.n_in,
                got: input.len(),
            });
        }
        let mut out = vec![0.0; self.n_out];
        dense_forward(&self.weights, &self.bias, input, &mut out);
        Ok(out)
    }
}

pub fn linear_forward(layer: &LinearLayer, input: &[f64]) -> Result<Vec<f64>> {
    layer.forward(input)
}

pub(crate) fn dense_forward(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(n_in).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
    }
}

/// Accumulates `dL/dW` and `dL/db` into `gw`, `gb` and, when requested,
/// writes `dL/dx` into `gx`.
pub(crate) fn dense_backward(w: &[f64], x: &[f64], up: &[f64], gw: &mut [f64], gb: &mut [f64], gx: Option<&mut [f64]>) {
    let n_in = x.len();
    for ((grow, u), gb) in gw.chunks_exact_mut(n_in).zip(up).zip(gb.iter_mut()) {
        *gb += u;
        for (g, x) in grow.iter_mut().zip(x) {
            *g += u * x;
        }
    }
    if let Some(gx) = gx {
        gx.iter_mut().for_each(|g| *g = 0.0);
        for (row, u) in w.chunks_exact(n_in).zip(up) {
            for (g, w) in gx.iter_mut().zip(row) {
                *g += u * w;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the input `x` and the output `y`.
    /// The ReLU subgradient at zero is taken as 0.
    pub(crate) fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

pub fn activation(kind: Activation, input: &[f64]) -> Vec<f64> {
    input.iter().map(|&x| kind.apply(x)).collect()
}
