//! Reconstruction metrics, per-window reports and nonparametric comparison
//! of model variants.

mod ablation;
mod metrics;
mod ranks;
mod report;

pub use ablation::{ablation_report, AblationReport, MetricComparison, ALPHA};
pub use metrics::{
    js_divergence, pearson, psd_pearson, rv_coefficient, smape, spectrogram_mse, spectrogram_rv, PSD_BAND,
};
pub use ranks::{
    average_ranks, friedman_exact_p, friedman_test, wilcoxon_signed_rank, FriedmanResult, WilcoxonResult,
    WILCOXON_EXACT_MAX,
};
pub use report::{
    evaluate_windows, evaluate_windowset, higher_is_better, metric_index, MetricReport, SectionSummary, WindowRow,
    METRICS, NOISY_METRICS,
};
