//! Experiment configurations shipped with the binary.

use crate::config::{ConfigError, ExperimentConfig};

macro_rules! shipped {
    ($($name:literal),* $(,)?) => {
        /// `(name, JSON text)` for every shipped configuration.
        pub const SHIPPED: &[(&str, &str)] = &[$(($name, include_str!(concat!("../configs/", $name, ".json")))),*];
    };
}

shipped!(
    "fig1_motivating",
    "fig2_matched",
    "fig3_fig4_bpr_degrees",
    "fig5_discrepancy",
    "fig6_early_stage",
    "fig7_gpr_kernels",
    "fig8_facebook",
    "fig9_concrete",
    "fig10_direct_mse",
    "fig11_upper_bound",
);

/// Short names accepted in place of the canonical one.
const ALIASES: &[(&str, &str)] = &[("fig3_bpr_degrees", "fig3_fig4_bpr_degrees"), ("fig4_bpr_degrees", "fig3_fig4_bpr_degrees")];

pub fn names() -> impl Iterator<Item = &'static str> {
    SHIPPED.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    let name = ALIASES.iter().find(|(a, _)| *a == name).map_or(name, |(_, c)| c);
    SHIPPED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses and validates a shipped configuration; `None` if the name is unknown.
pub fn get(name: &str) -> Option<Result<ExperimentConfig, ConfigError>> {
    text(name).map(|t| ExperimentConfig::from_json(t, name))
}
