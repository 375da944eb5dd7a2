use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Row-major 2x2 complex matrix.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub(crate) fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub(crate) fn adjoint(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

pub(crate) fn scale(m: &Mat2, s: C64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

/// Single-qubit gates. `Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OneQubitGate {
    RX(f64),
    RY(f64),
    RZ(f64),
    Rot(f64, f64, f64),
}

impl OneQubitGate {
    pub fn matrix(&self) -> Mat2 {
        match *self {
            OneQubitGate::RX(t) => rx(t),
            OneQubitGate::RY(t) => ry(t),
            OneQubitGate::RZ(t) => rz(t),
            OneQubitGate::Rot(phi, theta, omega) => matmul(&rz(omega), &matmul(&ry(theta), &rz(phi))),
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            OneQubitGate::RX(t) => OneQubitGate::RX(-t),
            OneQubitGate::RY(t) => OneQubitGate::RY(-t),
            OneQubitGate::RZ(t) => OneQubitGate::RZ(-t),
            OneQubitGate::Rot(phi, theta, omega) => OneQubitGate::Rot(-omega, -theta, -phi),
        }
    }
}

pub(crate) fn rx(t: f64) -> Mat2 {
    let (s, c) = (0.5 * t).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(0.0, -s)],
        [C64::new(0.0, -s), C64::new(c, 0.0)],
    ]
}

pub(crate) fn ry(t: f64) -> Mat2 {
    let (s, c) = (0.5 * t).sin_cos();
    [
        [C64::new(c, 0.0), C64::new(-s, 0.0)],
        [C64::new(s, 0.0), C64::new(c, 0.0)],
    ]
}

pub(crate) fn rz(t: f64) -> Mat2 {
    let (s, c) = (0.5 * t).sin_cos();
    [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoQubitGate {
    CNOT,
    CZ,
}

/// Pure state of `n` qubits. Wire 0 is the most significant bit of the
/// basis-state index, so `|10>` on two qubits is index 2.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    amps: Vec<C64>,
    n_qubits: usize,
}

impl QuantumState {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = ONE;
        Self { amps, n_qubits }
    }

    /// Wraps raw amplitudes; the length must be a power of two. No normalization.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::Dimension {
                context: "statevector length",
                expected: dim.next_power_of_two().max(1),
                got: dim,
            });
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born probabilities in the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_wire(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            Err(Error::QubitIndex {
                index: qubit,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn apply_1q(&mut self, qubit: usize, gate: OneQubitGate) -> Result<()> {
        self.apply_matrix(qubit, &gate.matrix())
    }

    pub fn apply_matrix(&mut self, qubit: usize, m: &Mat2) -> Result<()> {
        self.check_wire(qubit)?;
        let mask = self.mask(qubit);
        apply_matrix_unchecked(&mut self.amps, mask, m);
        Ok(())
    }

    pub fn apply_2q(&mut self, control: usize, target: usize, gate: TwoQubitGate) -> Result<()> {
        self.check_wire(control)?;
        self.check_wire(target)?;
        if control == target {
            return Err(Error::RepeatedWire(control));
        }
        let (cm, tm) = (self.mask(control), self.mask(target));
        match gate {
            TwoQubitGate::CNOT => cnot_unchecked(&mut self.amps, cm, tm),
            TwoQubitGate::CZ => cz_unchecked(&mut self.amps, cm, tm),
        }
        Ok(())
    }
}

/// Applies `m` to every amplitude pair that differs only in the `mask` bit.
#[inline]
pub(crate) fn apply_matrix_unchecked(amps: &mut [C64], mask: usize, m: &Mat2) {
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + mask {
            let a = amps[i];
            let b = amps[i + mask];
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i + mask] = m[1][0] * a + m[1][1] * b;
        }
        base += mask << 1;
    }
}

#[inline]
pub(crate) fn cnot_unchecked(amps: &mut [C64], control: usize, target: usize) {
    for i in 0..amps.len() {
        if i & control != 0 && i & target == 0 {
            amps.swap(i, i | target);
        }
    }
}

#[inline]
pub(crate) fn cz_unchecked(amps: &mut [C64], a: usize, b: usize) {
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & a != 0 && i & b != 0 {
            *amp = -*amp;
        }
    }
}

/// Loads `features / ||features||` into the amplitudes of an `n`-qubit state.
///
/// An (almost) all-zero feature vector, as produced by a dead ReLU layer,
/// is embedded as the uniform superposition instead.
pub fn amplitude_embed(features: &[f64], n_qubits: usize) -> Result<QuantumState> {
    Ok(embed_with_norm(features, n_qubits)?.0)
}

/// Embedding threshold on the feature norm.
pub const EMBED_NORM_FLOOR: f64 = 1e-12;

/// Returns the state and the feature norm, or `None` when the uniform guard fired.
pub(crate) fn embed_with_norm(features: &[f64], n_qubits: usize) -> Result<(QuantumState, Option<f64>)> {
    let dim = 1usize << n_qubits;
    if features.len() != dim {
        return Err(Error::Dimension {
            context: "amplitude embedding",
            expected: dim,
            got: features.len(),
        });
    }
    let norm = features.iter().map(|f| f * f).sum::<f64>().sqrt();
    if norm < EMBED_NORM_FLOOR {
        let a = C64::new((dim as f64).sqrt().recip(), 0.0);
        return Ok((
            QuantumState {
                amps: vec![a; dim],
                n_qubits,
            },
            None,
        ));
    }
    let amps = features.iter().map(|f| C64::new(f / norm, 0.0)).collect();
    Ok((QuantumState { amps, n_qubits }, Some(norm)))
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    #[derive(Clone, Debug)]
    enum Gate {
        One(usize, OneQubitGate),
        Two(usize, usize, TwoQubitGate),
    }

    fn gate(n: usize) -> impl Strategy<Value = Gate> {
        let angle = -7.0..7.0f64;
        prop_oneof![
            (0..n, angle.clone()).prop_map(|(q, t)| Gate::One(q, OneQubitGate::RX(t))),
            (0..n, angle.clone()).prop_map(|(q, t)| Gate::One(q, OneQubitGate::RY(t))),
            (0..n, angle.clone()).prop_map(|(q, t)| Gate::One(q, OneQubitGate::RZ(t))),
            (0..n, angle.clone(), angle.clone(), angle)
                .prop_map(|(q, a, b, c)| Gate::One(q, OneQubitGate::Rot(a, b, c))),
            (0..n, 1..n, any::<bool>()).prop_map(move |(c, off, cz)| {
                let kind = if cz { TwoQubitGate::CZ } else { TwoQubitGate::CNOT };
                Gate::Two(c, (c + off) % n, kind)
            }),
        ]
    }

    fn apply(state: &mut QuantumState, g: &Gate) {
        match *g {
            Gate::One(q, op) => state.apply_1q(q, op).unwrap(),
            Gate::Two(c, t, op) => state.apply_2q(c, t, op).unwrap(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn gate_sequences_preserve_norm_and_invert(
            amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16),
            gates in prop::collection::vec(gate(4), 1..30),
        ) {
            let raw: Vec<C64> = amps.iter().map(|&(re, im)| C64::new(re, im)).collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let start = QuantumState::from_amplitudes(raw.iter().map(|a| a / norm).collect()).unwrap();
            let mut state = start.clone();
            for g in &gates {
                apply(&mut state, g);
                prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
            }
            for g in gates.iter().rev() {
                let inv = match *g {
                    Gate::One(q, op) => Gate::One(q, op.inverse()),
                    Gate::Two(c, t, op) => Gate::Two(c, t, op),
                };
                apply(&mut state, &inv);
            }
            let dist = state.amplitudes().iter().zip(start.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(dist < 1e-12);
        }

        #[test]
        fn embedding_is_normalized(features in prop::collection::vec(-5.0..5.0f64, 8)) {
            let state = amplitude_embed(&features, 3).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
