//! JSON configuration shared by every `simulate` subcommand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{FilterConfig, FilterSpec};

use super::experiments::{CnRule, ExperimentSettings, FilterPlan};
use super::model::{CoefficientRule, Decay, ModelSpec, SpectralModel, XiLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnRuleName {
    /// Use `filter.cn`.
    #[default]
    Fixed,
    /// Retain about `n^{1/3}` true modes; `filter.cn` must be absent.
    CubeRoot,
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub decay: Decay,
    pub rho: CoefficientRule,
    pub noise_sd: f64,
    #[serde(default)]
    pub xi: XiLaw,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    pub grid_points: usize,
    pub filter: FilterConfig,
    #[serde(default)]
    pub cn_rule: CnRuleName,
    pub n: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Fixed evaluation point, as coefficients on the model basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<CoefficientRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_grid: Option<Vec<usize>>,
    #[serde(default, rename = "J", skip_serializing_if = "Option::is_none")]
    pub condition_terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl SimulationConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            decay: self.decay,
            rho: self.rho.clone(),
            noise_sd: self.noise_sd,
            xi: self.xi,
            terms: self.terms,
            grid_points: self.grid_points,
        }
    }

    pub fn model(&self) -> Result<SpectralModel> {
        SpectralModel::from_spec(&self.model_spec())
    }

    pub fn filter_plan(&self) -> Result<FilterPlan> {
        let kind = self.filter.kind()?;
        let rule = match (self.cn_rule, self.filter.cn) {
            (CnRuleName::Fixed, Some(cn)) => CnRule::Fixed(cn),
            (CnRuleName::Fixed, None) => {
                return Err(Error::Config("filter.cn is required with the fixed cn_rule".into()))
            }
            (CnRuleName::CubeRoot, None) => CnRule::CubeRoot,
            (CnRuleName::CubeRoot, Some(_)) => {
                return Err(Error::Config("filter.cn conflicts with the cube_root cn_rule".into()))
            }
        };
        Ok(FilterPlan { kind, rule })
    }

    /// Settings at the configured `n`, with `c_n` resolved against `model`.
    pub fn settings(&self, model: &SpectralModel) -> Result<ExperimentSettings> {
        let filter: FilterSpec = self.filter_plan()?.resolve(model.lambdas(), self.n)?;
        Ok(ExperimentSettings {
            n: self.n,
            filter,
            level: self.level,
            replicates: self.replicates,
            seed: self.seed,
        })
    }

    pub fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T> {
        value
            .clone()
            .ok_or_else(|| Error::Config(format!("this experiment needs {name:?} in the config")))
    }
}
