//! Analytical tools for BPR under model mismatch.
//!
//! - [`TargetFamily`]: Gaussian distribution over polynomial target weights
//! - closed-form expected MSE of a BPR predictor against a random target of
//!   possibly higher order, with each term exposed ([`closed_form_terms`])
//! - the matched-model identity `MSE = 2 φᵀΣ̂_pφ` ([`matched_mse`])
//! - the block-partitioned lower-order form ([`lower_order_mse`])
//! - Monte-Carlo bias/variance decomposition ([`mc_bias_variance`])
//! - a checker for the posterior-ratio bias bound ([`prop1_check`])

mod decomposition;
mod mse;
mod prop1;

pub use decomposition::{closed_form_report, mc_bias_variance, DecompositionMethod, DecompositionReport};
pub use mse::{
    closed_form_mse, closed_form_terms, fig5_discrepancy, lower_order_mse, matched_mse, LowerOrderMse,
    LowerOrderPartition, MseTerms, TargetFamily,
};
pub use prop1::{expected_abs, prop1_check, Gaussian, Prop1Report, PROP1_GRID_POINTS, PROP1_MIN_MASS};
