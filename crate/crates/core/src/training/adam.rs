use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates of Adam.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    /// Number of steps taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Advances the step counter and applies one bias-corrected update.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        adam_step(params, grads, self, lr, self.t);
    }
}

/// One Adam update at step `t >= 1`.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64, t: u64) {
    debug_assert!(t >= 1);
    let t = t as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        for _ in 0..5 {
            s.step(&mut p, &[0.0, 0.0], 0.01);
        }
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn first_step_closed_form() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        s.step(&mut p, &[3.0, -0.5], 0.001);
        // m_hat = g and v_hat = g^2 after bias correction.
        assert!((p[0] + 0.001 * 3.0 / (3.0 + EPSILON)).abs() < 1e-18);
        assert!((p[1] - 0.001 * 0.5 / (0.5 + EPSILON)).abs() < 1e-18);
    }

    #[test]
    fn quadratic_converges_like_recurrence() {
        let mut p = vec![1.0];
        let mut s = AdamState::new(1);
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=200 {
            let g = 2.0 * p[0];
            s.step(&mut p, &[g], 0.1);
            let go = 2.0 * x;
            m = 0.9 * m + 0.1 * go;
            v = 0.999 * v + 0.001 * go * go;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= 0.1 * mh / (vh.sqrt() + 1e-8);
            assert!((x - p[0]).abs() < 1e-12);
        }
        assert!(p[0].abs() < 0.1);
    }
}
