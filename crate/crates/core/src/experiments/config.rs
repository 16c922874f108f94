//! JSON scenario configuration.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{rng_for, DegreeModel, GraphGenSpec, GraphKind};
use crate::model::{MarketParams, MuPopulation};

fn default_epsilon() -> f64 {
    1e-8
}

fn default_bayes_n() -> usize {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Uniform,
    #[serde(alias = "disc")]
    Discriminatory,
    #[default]
    Both,
}

impl Mechanism {
    pub fn uniform(self) -> bool {
        matches!(self, Mechanism::Uniform | Mechanism::Both)
    }

    pub fn discriminatory(self) -> bool {
        matches!(self, Mechanism::Discriminatory | Mechanism::Both)
    }
}

/// Top-level config, discriminated by `"mode"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScenarioConfig {
    Complete(CompleteConfig),
    Bayesian(BayesianConfig),
}

/// Normal draw with the given mean and variance, truncated to positive
/// values by resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositiveNormal {
    pub mean: f64,
    #[serde(default)]
    pub var: f64,
}

impl PositiveNormal {
    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.mean > 0.0 && self.mean.is_finite()) {
            return Err(Error::invalid(name, format!("mean {} must be positive", self.mean)));
        }
        if !(self.var >= 0.0 && self.var.is_finite()) {
            return Err(Error::invalid(
                name,
                format!("variance {} must be nonnegative", self.var),
            ));
        }
        Ok(())
    }

    fn sample_n<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        if self.var == 0.0 {
            return vec![self.mean; n];
        }
        let normal = Normal::new(self.mean, self.var.sqrt()).expect("validated");
        (0..n)
            .map(|_| loop {
                let v: f64 = normal.sample(rng);
                if v > 0.0 {
                    break v;
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub n: usize,
    pub a: PositiveNormal,
    pub b: PositiveNormal,
    /// Per-MU quadratic cost coefficients; replaces the linear unit cost.
    #[serde(default)]
    pub quad_cost: Option<PositiveNormal>,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("population.n", "must be positive"));
        }
        self.a.validate("population.a")?;
        self.b.validate("population.b")?;
        if let Some(c) = &self.quad_cost {
            c.validate("population.quad_cost")?;
        }
        Ok(())
    }

    pub fn sample(&self, seed: u64) -> Result<MuPopulation> {
        self.validate()?;
        let mut rng = rng_for(seed);
        let a = self.a.sample_n(self.n, &mut rng);
        let b = self.b.sample_n(self.n, &mut rng);
        match &self.quad_cost {
            Some(c) => MuPopulation::with_quadratic_cost(a, b, c.sample_n(self.n, &mut rng)),
            None => MuPopulation::new(a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompleteVariable {
    N,
    MuG,
    SigmaG,
    AMean,
    BMean,
    C,
    Mu,
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BayesianVariable {
    KBar,
    VarK,
    VarL,
    Gamma,
    C,
    Mu,
    S,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep<V> {
    pub variable: V,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompleteConfig {
    pub population: PopulationSpec,
    pub graph: GraphGenSpec,
    pub market: MarketParams,
    #[serde(default)]
    pub mechanism: Mechanism,
    #[serde(default)]
    pub sweep: Option<Sweep<CompleteVariable>>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeSpec {
    pub k_bar: f64,
    pub var_k: f64,
    pub var_l: f64,
    pub gamma: f64,
    #[serde(default)]
    pub k_max: Option<usize>,
}

impl DegreeSpec {
    pub fn build(&self) -> Result<DegreeModel> {
        DegreeModel::discretized_normal(self.k_bar, self.var_k, self.var_l, self.k_max, self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesianConfig {
    pub degrees: DegreeSpec,
    pub market: MarketParams,
    #[serde(default)]
    pub mechanism: Mechanism,
    #[serde(default)]
    pub sweep: Option<Sweep<BayesianVariable>>,
    pub seeds: Vec<u64>,
    /// Network size used when sampling a concrete configuration-model graph.
    #[serde(default = "default_bayes_n")]
    pub n: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn check_common<V>(seeds: &[u64], epsilon: f64, sweep: &Option<Sweep<V>>) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config("`seeds` must list at least one seed".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("`epsilon` = {epsilon} must be positive")));
    }
    if let Some(s) = sweep {
        if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("sweep value {v} is not finite")));
        }
    }
    Ok(())
}

impl CompleteConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.seeds, self.epsilon, &self.sweep)?;
        self.population.validate()?;
        self.graph.validate()?;
        self.market.validate()?;
        if let Some(s) = &self.sweep {
            let applies = match s.variable {
                CompleteVariable::MuG | CompleteVariable::SigmaG => {
                    matches!(self.graph.source, GraphKind::NormalTies { .. })
                }
                _ => true,
            };
            if !applies {
                return Err(Error::Config(format!(
                    "sweep variable {:?} needs a normal_ties graph",
                    s.variable
                )));
            }
            if s.variable == CompleteVariable::N && s.values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
                return Err(Error::Config("sweep over `n` needs positive integers".into()));
            }
        }
        Ok(())
    }

    /// Copy of the config with the sweep variable set to `value`.
    pub fn at(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let Some(sweep) = &self.sweep else {
            return Ok(c);
        };
        match sweep.variable {
            CompleteVariable::N => c.population.n = value as usize,
            CompleteVariable::AMean => c.population.a.mean = value,
            CompleteVariable::BMean => c.population.b.mean = value,
            CompleteVariable::C => c.market.c = value,
            CompleteVariable::Mu => c.market.mu = value,
            CompleteVariable::S => c.market.s = value,
            CompleteVariable::T => c.market.t = value,
            CompleteVariable::MuG | CompleteVariable::SigmaG => {
                if let GraphKind::NormalTies { mu_g, sigma_g, .. } = &mut c.graph.source {
                    if sweep.variable == CompleteVariable::MuG {
                        *mu_g = value;
                    } else {
                        *sigma_g = value;
                    }
                }
            }
        }
        c.sweep = None;
        c.population.validate()?;
        c.market.validate()?;
        Ok(c)
    }
}

impl BayesianConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.seeds, self.epsilon, &self.sweep)?;
        self.market.validate()?;
        if self.n == 0 {
            return Err(Error::Config("`n` must be positive".into()));
        }
        Ok(())
    }

    pub fn at(&self, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let Some(sweep) = &self.sweep else {
            return Ok(c);
        };
        match sweep.variable {
            BayesianVariable::KBar => c.degrees.k_bar = value,
            BayesianVariable::VarK => c.degrees.var_k = value,
            BayesianVariable::VarL => c.degrees.var_l = value,
            BayesianVariable::Gamma => c.degrees.gamma = value,
            BayesianVariable::C => c.market.c = value,
            BayesianVariable::Mu => c.market.mu = value,
            BayesianVariable::S => c.market.s = value,
            BayesianVariable::T => c.market.t = value,
        }
        c.sweep = None;
        c.market.validate()?;
        Ok(c)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScenarioConfig::Complete(c) => c.validate(),
            ScenarioConfig::Bayesian(b) => b.validate(),
        }
    }

    pub fn seeds(&self) -> &[u64] {
        match self {
            ScenarioConfig::Complete(c) => &c.seeds,
            ScenarioConfig::Bayesian(b) => &b.seeds,
        }
    }

    pub fn seeds_mut(&mut self) -> &mut Vec<u64> {
        match self {
            ScenarioConfig::Complete(c) => &mut c.seeds,
            ScenarioConfig::Bayesian(b) => &mut b.seeds,
        }
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        match self {
            ScenarioConfig::Complete(c) => c.epsilon = epsilon,
            ScenarioConfig::Bayesian(b) => b.epsilon = epsilon,
        }
    }

    pub fn set_mechanism(&mut self, m: Mechanism) {
        match self {
            ScenarioConfig::Complete(c) => c.mechanism = m,
            ScenarioConfig::Bayesian(b) => b.mechanism = m,
        }
    }

    /// Sweep grid, or `None` for a single unswept point.
    pub fn grid(&self) -> Vec<Option<f64>> {
        let values = match self {
            ScenarioConfig::Complete(c) => c.sweep.as_ref().map(|s| s.values.clone()),
            ScenarioConfig::Bayesian(b) => b.sweep.as_ref().map(|s| s.values.clone()),
        };
        match values {
            Some(v) => v.into_iter().map(Some).collect(),
            None => vec![None],
        }
    }
}
