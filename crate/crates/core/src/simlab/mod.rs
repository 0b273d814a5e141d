//! Simulation laboratory: known spectral models, Karhunen-Loève sampling,
//! truth oracles and Monte Carlo experiments.

pub mod config;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod stats;

pub use config::SimulationConfig;
pub use experiments::{
    coverage_experiment, error_by_threshold, fixed_x_experiment, norm_divergence_demo, CnRule,
    CoverageOutcome, CoverageReport, ExperimentSettings, FilterPlan, NormDivergenceReport,
};
pub use model::{generate_dataset, kl_sample, CoefficientRule, Dataset, Decay, ModelSpec, SpectralModel, XiLaw};
pub use oracle::{
    condition_u_diagnostic, eigen_inequality_check, true_normalizers, truncation_bias,
    variance_lower_bound, BiasTarget,
};
pub use rng::stream_rng;
