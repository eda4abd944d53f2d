//! Shapley feature attributions and KS feature-stability analysis.

mod shapley;
mod stability;
mod summary;

pub use shapley::{
    direct_path, shapley_exact, shapley_from_coalitions, shapley_retrain, shapley_sampled,
    shapley_sampled_with_rng, FnPredictor, PhiVector, Predictor, DEFAULT_ENUMERATION_CAP,
    RETRAIN_CAP,
};
pub use stability::{
    ks_statistic, stability_report, StabilityCategory, StabilityEntry, StabilityThresholds,
};
pub use summary::{
    class_shap_summary, sample_background, AttributionConfig, AttributionMode, ClassSummary,
    ShapSummary,
};
