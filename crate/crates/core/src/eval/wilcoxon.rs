use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of nonzero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;
pub const MIN_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks of `|d|`, with tied values sharing the mean of their positions.
fn abs_ranks(d: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()));
    let mut ranks = vec![0.0; d.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired differences. Zero
/// differences are dropped. Exact null distribution for `n <= 12`, normal
/// approximation with tie correction (no continuity correction) above.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<WilcoxonResult> {
    let method = if diffs.iter().filter(|d| **d != 0.0).count() <= EXACT_MAX_N {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::Normal
    };
    wilcoxon_with(diffs, method)
}

/// Same test with the p-value method chosen explicitly.
pub fn wilcoxon_with(diffs: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::UndefinedMetric("wilcoxon test on non-finite differences"));
    }
    let d: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Err(Error::UndefinedMetric("wilcoxon test with all differences zero"));
    }
    if d.len() < MIN_N {
        return Err(Error::UndefinedMetric(
            "wilcoxon test needs at least 6 nonzero differences",
        ));
    }
    let n = d.len();
    let ranks = abs_ranks(&d);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);

    let p = match method {
        WilcoxonMethod::Exact => {
            if n > 20 {
                return Err(Error::Config(format!(
                    "exact enumeration is limited to 20 differences, got {n}"
                )));
            }
            // Doubled ranks are integers even with ties.
            let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
            let max: usize = doubled.iter().sum();
            let mut counts = vec![0u64; max + 1];
            counts[0] = 1;
            for &r in &doubled {
                for s in (r..=max).rev() {
                    counts[s] += counts[s - r];
                }
            }
            let t = (2.0 * statistic).round() as usize;
            let tail: u64 = counts[..=t].iter().sum();
            2.0 * tail as f64 / (1u64 << n) as f64
        }
        WilcoxonMethod::Normal => {
            let nf = n as f64;
            let mean = nf * (nf + 1.0) / 4.0;
            let mut ties = 0.0;
            let mut sorted = ranks.clone();
            sorted.sort_by(f64::total_cmp);
            let mut i = 0;
            while i < sorted.len() {
                let j = sorted[i..].iter().take_while(|r| **r == sorted[i]).count();
                let t = j as f64;
                ties += t * t * t - t;
                i += j;
            }
            let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
            let z = (statistic - mean) / var.sqrt();
            // Two-sided tail 2 * Phi(-|z|) = erfc(|z| / sqrt 2).
            libm::erfc(z.abs() / std::f64::consts::SQRT_2)
        }
    };
    Ok(WilcoxonResult {
        statistic,
        p_value: p.min(1.0),
        n,
        method,
    })
}
