//! Probability readout of an embedded, variational circuit and its exact
//! reverse-mode gradient.
//!
//! The backward pass walks the circuit in reverse, un-applying each gate to
//! both the forward state and the adjoint state. For a loss `L(p)` with
//! `p_i = |psi_i|^2` the adjoint starts at `lambda_i = (dL/dp_i) psi_i`, and a
//! parametrized gate `U` contributes `2 Re <lambda| dU |phi>` to its angle.

use super::ansatz::{run_ops, AnsatzSpec, Op};
use super::state::{
    adjoint, apply_matrix_unchecked, cnot_unchecked, cz_unchecked, embed_with_norm, matmul, rx, ry, rz, scale, Mat2,
    QuantumState, C64,
};
use crate::error::{Error, Result};

/// Quantum layer forward pass: embed, evolve, read out probabilities.
pub fn quantum_forward(features: &[f64], spec: &AnsatzSpec, params: &[f64]) -> Result<Vec<f64>> {
    spec.check_params(params)?;
    let (mut state, _) = embed_with_norm(features, spec.n_qubits)?;
    run_ops(&mut state, &spec.ops(), params);
    Ok(state.probabilities())
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumGradient {
    pub features: Vec<f64>,
    pub params: Vec<f64>,
}

/// Gradients of `sum_i upstream_i * p_i` with respect to the input features and
/// the circuit angles.
pub fn quantum_gradient(
    features: &[f64],
    spec: &AnsatzSpec,
    params: &[f64],
    upstream: &[f64],
) -> Result<QuantumGradient> {
    Ok(quantum_forward_backward(features, spec, params, upstream)?.1)
}

/// Forward probabilities together with the gradient for `upstream`.
pub fn quantum_forward_backward(
    features: &[f64],
    spec: &AnsatzSpec,
    params: &[f64],
    upstream: &[f64],
) -> Result<(Vec<f64>, QuantumGradient)> {
    let tape = QuantumTape::record(features, spec, params)?;
    let probs = tape.probabilities();
    let grad = tape.backward(features, params, upstream)?;
    Ok((probs, grad))
}

/// Final state of a forward pass, kept for the backward sweep.
pub(crate) struct QuantumTape {
    phi: QuantumState,
    norm: Option<f64>,
    ops: Vec<Op>,
}

impl QuantumTape {
    pub(crate) fn record(features: &[f64], spec: &AnsatzSpec, params: &[f64]) -> Result<Self> {
        spec.check_params(params)?;
        let (mut phi, norm) = embed_with_norm(features, spec.n_qubits)?;
        let ops = spec.ops();
        run_ops(&mut phi, &ops, params);
        Ok(Self { phi, norm, ops })
    }

    pub(crate) fn probabilities(&self) -> Vec<f64> {
        self.phi.probabilities()
    }

    pub(crate) fn backward(self, features: &[f64], params: &[f64], upstream: &[f64]) -> Result<QuantumGradient> {
        let Self { mut phi, norm, ops } = self;
        if upstream.len() != phi.dim() {
            return Err(Error::Dimension {
                context: "quantum upstream gradient",
                expected: phi.dim(),
                got: upstream.len(),
            });
        }
        let lambda_amps: Vec<C64> = phi.amplitudes().iter().zip(upstream).map(|(a, u)| a * *u).collect();
        let mut lambda = QuantumState::from_amplitudes(lambda_amps)?;
        let mut grad = vec![0.0; params.len()];

        for op in ops.iter().rev() {
            match *op {
                Op::Cnot { control, target } => {
                    let (c, t) = (phi.mask(control), phi.mask(target));
                    cnot_unchecked(phi.amplitudes_mut(), c, t);
                    cnot_unchecked(lambda.amplitudes_mut(), c, t);
                }
                Op::Cz { a, b } => {
                    let (a, b) = (phi.mask(a), phi.mask(b));
                    cz_unchecked(phi.amplitudes_mut(), a, b);
                    cz_unchecked(lambda.amplitudes_mut(), a, b);
                }
                Op::RX { wire, param } => {
                    let t = params[param];
                    let m = step_back(&mut phi, &mut lambda, wire, &rx(t));
                    grad[param] += pair_product(&rx_prime(t), &m);
                }
                Op::RY { wire, param } => {
                    let t = params[param];
                    let m = step_back(&mut phi, &mut lambda, wire, &ry(t));
                    grad[param] += pair_product(&ry_prime(t), &m);
                }
                Op::Rot { wire, first } => {
                    let (a, b, c) = (params[first], params[first + 1], params[first + 2]);
                    let (za, yb, zc) = (rz(a), ry(b), rz(c));
                    let u = matmul(&zc, &matmul(&yb, &za));
                    let m = step_back(&mut phi, &mut lambda, wire, &u);
                    let d_phi = matmul(&zc, &matmul(&yb, &rz_prime(a)));
                    let d_theta = matmul(&zc, &matmul(&ry_prime(b), &za));
                    let d_omega = matmul(&rz_prime(c), &matmul(&yb, &za));
                    grad[first] += pair_product(&d_phi, &m);
                    grad[first + 1] += pair_product(&d_theta, &m);
                    grad[first + 2] += pair_product(&d_omega, &m);
                }
            }
        }

        // lambda now holds the adjoint of the embedded state, whose amplitudes are real.
        let feature_grad = match norm {
            None => vec![0.0; features.len()],
            Some(norm) => {
                let g: Vec<f64> = lambda.amplitudes().iter().map(|l| 2.0 * l.re).collect();
                let w_hat = features.iter().map(|f| f / norm);
                let proj: f64 = w_hat.clone().zip(&g).map(|(w, g)| w * g).sum();
                w_hat.zip(&g).map(|(w, g)| (g - w * proj) / norm).collect()
            }
        };
        Ok(QuantumGradient {
            features: feature_grad,
            params: grad,
        })
    }
}

/// Un-applies `u` on `wire` to both states and returns the pair contraction
/// `M[r][c] = sum conj(lambda_r) phi_c` of the adjoint after the gate with the
/// state before it.
fn step_back(phi: &mut QuantumState, lambda: &mut QuantumState, wire: usize, u: &Mat2) -> Mat2 {
    let mask = phi.mask(wire);
    let u_dag = adjoint(u);
    apply_matrix_unchecked(phi.amplitudes_mut(), mask, &u_dag);
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    {
        let a = phi.amplitudes();
        let l = lambda.amplitudes();
        let dim = a.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let j = i + mask;
                let (l0, l1) = (l[i].conj(), l[j].conj());
                m[0][0] += l0 * a[i];
                m[0][1] += l0 * a[j];
                m[1][0] += l1 * a[i];
                m[1][1] += l1 * a[j];
            }
            base += mask << 1;
        }
    }
    apply_matrix_unchecked(lambda.amplitudes_mut(), mask, &u_dag);
    m
}

/// `2 Re sum_rc dU[r][c] M[r][c]`.
fn pair_product(d: &Mat2, m: &Mat2) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            s += d[r][c] * m[r][c];
        }
    }
    2.0 * s.re
}

fn rx_prime(t: f64) -> Mat2 {
    // d/dt RX(t) = -i/2 X RX(t)
    let x = [
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    ];
    scale(&matmul(&x, &rx(t)), C64::new(0.0, -0.5))
}

fn ry_prime(t: f64) -> Mat2 {
    let y = [
        [C64::new(0.0, 0.0), C64::new(0.0, -1.0)],
        [C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    ];
    scale(&matmul(&y, &ry(t)), C64::new(0.0, -0.5))
}

fn rz_prime(t: f64) -> Mat2 {
    let z = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
    ];
    scale(&matmul(&z, &rz(t)), C64::new(0.0, -0.5))
}
