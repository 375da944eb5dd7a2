use crate::error::{Error, Result};

/// Aggregate relative error `sum |pred - true| / sum |true|`.
pub fn mrae(e_pred: &[f64], e_true: &[f64]) -> Result<f64> {
    if e_pred.len() != e_true.len() {
        return Err(Error::Dimension {
            context: "mrae prediction",
            expected: e_true.len(),
            got: e_pred.len(),
        });
    }
    let denom: f64 = e_true.iter().map(|v| v.abs()).sum();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric("mrae against an identically zero field"));
    }
    let num: f64 = e_pred.iter().zip(e_true).map(|(p, t)| (p - t).abs()).sum();
    Ok(num / denom)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-dimensional energy distance `sqrt(2 E|X-Y| - E|X-X'| - E|Y-Y'|)`,
/// evaluated as `sqrt(2 * integral (U(x) - V(x))^2 dx)` over the empirical CDFs.
pub fn energy_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::Empty("energy distance sample"));
    }
    let (u, v) = (sorted(u), sorted(v));
    let (m, n) = (u.len() as f64, v.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sum = 0.0;
    let mut x = u[0].min(v[0]);
    while i < u.len() || j < v.len() {
        // Advance past every sample at the current point.
        while i < u.len() && u[i] <= x {
            i += 1;
        }
        while j < v.len() && v[j] <= x {
            j += 1;
        }
        let next = match (u.get(i), v.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        let diff = i as f64 / m - j as f64 / n;
        sum += diff * diff * (next - x);
        x = next;
    }
    Ok((2.0 * sum).sqrt())
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_distance_is_a_symmetric_non_negative_distance(
            u in prop::collection::vec(-2.0..2.0f64, 1..60),
            v in prop::collection::vec(-2.0..2.0f64, 1..60),
            shift in -1.0..1.0f64,
        ) {
            let d = energy_distance(&u, &v).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!((d - energy_distance(&v, &u).unwrap()).abs() < 1e-12);
            prop_assert_eq!(energy_distance(&u, &u).unwrap(), 0.0);
            let us: Vec<f64> = u.iter().map(|x| x + shift).collect();
            let vs: Vec<f64> = v.iter().map(|x| x + shift).collect();
            prop_assert!((energy_distance(&us, &vs).unwrap() - d).abs() < 1e-9);
        }

        #[test]
        fn mrae_is_non_negative_and_zero_on_match(
            e in prop::collection::vec(-1.0..1.0f64, 64),
            p in prop::collection::vec(-1.0..1.0f64, 64),
        ) {
            prop_assume!(e.iter().any(|x| *x != 0.0));
            prop_assert!(mrae(&p, &e).unwrap() >= 0.0);
            prop_assert_eq!(mrae(&e, &e).unwrap(), 0.0);
        }
    }
}
