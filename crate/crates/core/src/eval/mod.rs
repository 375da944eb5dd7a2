//! Error metrics, distribution distances, the signed-rank test and summaries
//! of per-step error and field-growth series.

pub mod metrics;
pub mod report;
pub mod summary;
pub mod wilcoxon;

pub use metrics::{energy_distance, mrae};
pub use report::{compare_error_series, PairedComparison};
pub use summary::{
    default_velocity_range, growth_summary, median, quantile_sorted, summarize_errors, velocity_histogram, ErrorSeries,
    ErrorSummary, GrowthSummary, Histogram, DEFAULT_BINS, GROWTH_WINDOW,
};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_with, WilcoxonMethod, WilcoxonResult};

/// Formula tag stored with every report that quotes an MRAE value.
pub const MRAE_DEFINITION: &str = "sum|E_pred - E_true| / sum|E_true| per step";
