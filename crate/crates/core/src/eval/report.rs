use serde::{Deserialize, Serialize};

use super::summary::{summarize_errors, ErrorSummary};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};
use super::MRAE_DEFINITION;
use crate::error::{Error, Result};

/// Two per-step error series compared step by step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub mrae_definition: String,
    pub a: ErrorSummary,
    pub b: ErrorSummary,
    /// Signed-rank test on `a - b`.
    pub wilcoxon: WilcoxonResult,
}

/// Summaries of both series and the signed-rank test of their differences.
/// Identical series give statistic 0 and p = 1.
pub fn compare_error_series(a: &[f64], b: &[f64]) -> Result<PairedComparison> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "paired error series",
            expected: a.len(),
            got: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let wilcoxon = if diffs.iter().all(|d| *d == 0.0) {
        WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            method: WilcoxonMethod::Exact,
        }
    } else {
        wilcoxon_signed_rank(&diffs)?
    };
    Ok(PairedComparison {
        mrae_definition: MRAE_DEFINITION.to_string(),
        a: summarize_errors(a)?,
        b: summarize_errors(b)?,
        wilcoxon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series() {
        let a = [0.1, 0.2, 0.3, 0.25, 0.15, 0.4, 0.05];
        let r = compare_error_series(&a, &a).unwrap();
        assert_eq!(r.wilcoxon.p_value, 1.0);
        assert_eq!(r.a, r.b);
    }

    #[test]
    fn shifted_series_is_significant() {
        let a: Vec<f64> = (0..40).map(|k| 0.2 + 0.01 * (k as f64).sin()).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(k, v)| v + 0.05 + 0.001 * k as f64).collect();
        let r = compare_error_series(&a, &b).unwrap();
        assert!(r.wilcoxon.p_value < 0.01);
        assert!(r.a.median < r.b.median);
        assert!(compare_error_series(&a, &b[..3]).is_err());
    }
}
