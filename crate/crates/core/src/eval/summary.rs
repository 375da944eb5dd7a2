use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pic::{DiagnosticsSeries, Scenario, SimConfig};

pub const DEFAULT_BINS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `n_bins + 1` uniform edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts divided by `(in-range total) * bin width`.
    pub density: Vec<f64>,
    /// Values below the first edge and above the last edge.
    pub below: usize,
    pub above: usize,
}

/// `[-3 v0, 3 v0]` for two-stream runs and `[-4 vth, 4 vth]` for thermal ones.
pub fn default_velocity_range(config: &SimConfig) -> (f64, f64) {
    let w = match config.scenario {
        Scenario::TwoStream => 3.0 * config.v0.abs(),
        Scenario::Thermal => 4.0 * config.vth,
    };
    (-w, w)
}

/// Uniform-bin histogram; the last bin is closed on the right.
pub fn velocity_histogram(velocities: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if n_bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Config(format!("invalid histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    let (mut below, mut above) = (0, 0);
    for &v in velocities {
        if v < lo {
            below += 1;
        } else if v > hi {
            above += 1;
        } else {
            let k = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[k] += 1;
        }
    }
    let inside: usize = counts.iter().sum();
    let density = counts
        .iter()
        .map(|&c| {
            if inside == 0 {
                0.0
            } else {
                c as f64 / (inside as f64 * width)
            }
        })
        .collect();
    Ok(Histogram {
        edges,
        counts,
        density,
        below,
        above,
    })
}

/// Linear-interpolation (type 7) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median input"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, 0.5))
}

/// Boxplot statistics; whiskers reach the most extreme data inside the
/// 1.5 IQR fences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Per-step errors of a run together with their summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub values: Vec<f64>,
    pub summary: ErrorSummary,
}

impl ErrorSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::UndefinedMetric("error series with negative or NaN entries"));
        }
        let summary = summarize_errors(&values)?;
        Ok(Self { values, summary })
    }
}

pub fn summarize_errors(values: &[f64]) -> Result<ErrorSummary> {
    if values.is_empty() {
        return Err(Error::Empty("error series"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = v.iter().filter(|x| **x >= lo_fence && **x <= hi_fence);
    let whisker_low = inside.clone().cloned().fold(f64::INFINITY, f64::min);
    let whisker_high = inside.cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(ErrorSummary {
        count: v.len(),
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: quantile_sorted(&v, 0.5),
        q1,
        q3,
        whisker_low,
        whisker_high,
        outliers: values
            .iter()
            .copied()
            .filter(|x| *x < lo_fence || *x > hi_fence)
            .collect(),
    })
}

pub const GROWTH_WINDOW: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    /// Slope of `ln max|E|` against time over the steepest window.
    pub growth_rate: f64,
    /// First step of that window.
    pub window_start: usize,
    /// Mean `max|E|` over the last 20% of the steps.
    pub saturation_level: f64,
    pub initial_level: f64,
}

fn slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in t.iter().zip(y) {
        num += (a - tm) * (b - ym);
        den += (a - tm) * (a - tm);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Exponential growth rate and saturation amplitude of the field.
pub fn growth_summary(diagnostics: &DiagnosticsSeries) -> Result<GrowthSummary> {
    let rows = &diagnostics.rows;
    if rows.len() < 2 {
        return Err(Error::Empty("diagnostics series for growth fit"));
    }
    let window = GROWTH_WINDOW.min(rows.len());
    let t: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let amp: Vec<f64> = rows.iter().map(|r| r.max_abs_e).collect();
    let mut best: Option<(f64, usize)> = None;
    for start in 0..=rows.len() - window {
        let a = &amp[start..start + window];
        if a.iter().any(|v| v.is_nan() || *v <= 0.0) {
            continue;
        }
        let logs: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        let s = slope(&t[start..start + window], &logs);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, start));
        }
    }
    let (growth_rate, window_start) = best.ok_or(Error::UndefinedMetric(
        "non-positive field amplitudes in every fit window",
    ))?;
    let tail = (rows.len() / 5).max(1);
    let saturation_level = amp[rows.len() - tail..].iter().sum::<f64>() / tail as f64;
    Ok(GrowthSummary {
        growth_rate,
        window_start,
        saturation_level,
        initial_level: amp[0],
    })
}
