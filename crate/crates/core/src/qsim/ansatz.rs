use serde::{Deserialize, Serialize};

use super::state::{apply_matrix_unchecked, cnot_unchecked, cz_unchecked, rx, ry, QuantumState};
use super::OneQubitGate;
use crate::error::{Error, Result};

/// Variational circuit families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    /// General `Rot` on every wire followed by a CNOT ring of layer-dependent range.
    #[serde(alias = "sel")]
    StronglyEntangling,
    /// `RX` on every wire followed by a nearest-neighbour CNOT ring.
    #[serde(alias = "bel")]
    BasicEntangler,
    /// Initial `RY` layer, then alternating even/odd blocks of `CZ` and paired `RY`.
    #[serde(alias = "s2d")]
    SimplifiedTwoDesign,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [
        AnsatzKind::StronglyEntangling,
        AnsatzKind::BasicEntangler,
        AnsatzKind::SimplifiedTwoDesign,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            AnsatzKind::StronglyEntangling => "sel",
            AnsatzKind::BasicEntangler => "bel",
            AnsatzKind::SimplifiedTwoDesign => "s2d",
        }
    }
}

impl std::str::FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sel" | "strongly_entangling" => Ok(AnsatzKind::StronglyEntangling),
            "bel" | "basic_entangler" => Ok(AnsatzKind::BasicEntangler),
            "s2d" | "simplified_two_design" => Ok(AnsatzKind::SimplifiedTwoDesign),
            other => Err(Error::Config(format!("unknown ansatz `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub kind: AnsatzKind,
    pub n_qubits: usize,
    pub n_layers: usize,
}

/// One gate of a compiled circuit. Parametrized gates refer to indices in the
/// flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    /// `Rot(params[first], params[first + 1], params[first + 2])`.
    Rot {
        wire: usize,
        first: usize,
    },
    RX {
        wire: usize,
        param: usize,
    },
    RY {
        wire: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
}

impl AnsatzSpec {
    pub fn new(kind: AnsatzKind, n_qubits: usize, n_layers: usize) -> Self {
        Self {
            kind,
            n_qubits,
            n_layers,
        }
    }

    pub fn param_count(&self) -> usize {
        let (n, l) = (self.n_qubits, self.n_layers);
        match self.kind {
            AnsatzKind::StronglyEntangling => 3 * n * l,
            AnsatzKind::BasicEntangler => n * l,
            AnsatzKind::SimplifiedTwoDesign => n + 2 * n.saturating_sub(1) * l,
        }
    }

    /// CNOT ranges of the strongly-entangling layers, `(l mod (n - 1)) + 1`.
    pub fn ranges(&self) -> Vec<usize> {
        if self.n_qubits < 2 {
            return vec![0; self.n_layers];
        }
        (0..self.n_layers).map(|l| (l % (self.n_qubits - 1)) + 1).collect()
    }

    pub(crate) fn ops(&self) -> Vec<Op> {
        let n = self.n_qubits;
        let mut ops = Vec::new();
        match self.kind {
            AnsatzKind::StronglyEntangling => {
                for (l, r) in self.ranges().into_iter().enumerate() {
                    for wire in 0..n {
                        ops.push(Op::Rot {
                            wire,
                            first: 3 * (l * n + wire),
                        });
                    }
                    if n > 1 {
                        for i in 0..n {
                            ops.push(Op::Cnot {
                                control: i,
                                target: (i + r) % n,
                            });
                        }
                    }
                }
            }
            AnsatzKind::BasicEntangler => {
                for l in 0..self.n_layers {
                    for wire in 0..n {
                        ops.push(Op::RX {
                            wire,
                            param: l * n + wire,
                        });
                    }
                    if n == 2 {
                        ops.push(Op::Cnot { control: 0, target: 1 });
                    } else if n > 2 {
                        for i in 0..n {
                            ops.push(Op::Cnot {
                                control: i,
                                target: (i + 1) % n,
                            });
                        }
                    }
                }
            }
            AnsatzKind::SimplifiedTwoDesign => {
                for wire in 0..n {
                    ops.push(Op::RY { wire, param: wire });
                }
                let per_layer = 2 * n.saturating_sub(1);
                for l in 0..self.n_layers {
                    let base = n + l * per_layer;
                    let even = (0..n / 2).map(|p| 2 * p);
                    let odd = (0..n.saturating_sub(1) / 2).map(|p| 2 * p + 1);
                    for (pair, k) in even.chain(odd).enumerate() {
                        ops.push(Op::Cz { a: k, b: k + 1 });
                        ops.push(Op::RY {
                            wire: k,
                            param: base + 2 * pair,
                        });
                        ops.push(Op::RY {
                            wire: k + 1,
                            param: base + 2 * pair + 1,
                        });
                    }
                }
            }
        }
        ops
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension {
                context: "ansatz parameters",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        Ok(())
    }
}

/// Applies the ansatz circuit to `state` in place.
pub fn apply_ansatz(state: &mut QuantumState, spec: &AnsatzSpec, params: &[f64]) -> Result<()> {
    spec.check_params(params)?;
    if state.n_qubits() != spec.n_qubits {
        return Err(Error::Dimension {
            context: "ansatz register",
            expected: spec.n_qubits,
            got: state.n_qubits(),
        });
    }
    run_ops(state, &spec.ops(), params);
    Ok(())
}

pub(crate) fn run_ops(state: &mut QuantumState, ops: &[Op], params: &[f64]) {
    for op in ops {
        match *op {
            Op::Rot { wire, first } => {
                let m = OneQubitGate::Rot(params[first], params[first + 1], params[first + 2]).matrix();
                let mask = state.mask(wire);
                apply_matrix_unchecked(state.amplitudes_mut(), mask, &m);
            }
            Op::RX { wire, param } => {
                let mask = state.mask(wire);
                apply_matrix_unchecked(state.amplitudes_mut(), mask, &rx(params[param]));
            }
            Op::RY { wire, param } => {
                let mask = state.mask(wire);
                apply_matrix_unchecked(state.amplitudes_mut(), mask, &ry(params[param]));
            }
            Op::Cnot { control, target } => {
                let (c, t) = (state.mask(control), state.mask(target));
                cnot_unchecked(state.amplitudes_mut(), c, t);
            }
            Op::Cz { a, b } => {
                let (a, b) = (state.mask(a), state.mask(b));
                cz_unchecked(state.amplitudes_mut(), a, b);
            }
        }
    }
}
