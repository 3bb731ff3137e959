//! Metrics and the three experiment protocols: baseline cross-validation,
//! per-target expansion, and global cross-validation with fold-internal
//! expansion.

mod metrics;
mod protocols;
mod render;

pub use metrics::{
    confusion, expansion_volume_stats, f1_score, macro_average, metrics, relative_improvement,
    ConfusionCounts, Metrics, VolumeStat,
};
pub use protocols::{
    run_cv_baseline, run_global_cv_experiment, run_global_cv_experiment_traced,
    run_per_target_experiment, ConfigurationResult, ExperimentReport, FoldResult, FoldTrace,
    Protocol, TargetResult,
};
pub use render::render_tables;
