//! Domain types shared by every solver, plus the two scalar payoffs: the
//! utility of a mobile user (MU) and the revenue of the crowdsensing
//! service provider (CSP).

use serde::{Deserialize, Serialize};

use crate::bayesian::TypeTable;
use crate::error::{check_len, Error, Result};
use crate::numerics::{dot, Matrix};

/// Intrinsic parameters of the MU population.
///
/// `a[i]` is the maximum internal willingness rate and `b[i]` the
/// willingness elasticity. When `quad_cost` is present the MUs pay
/// `c_i x_i²` instead of the market's linear unit cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuPopulation {
    a: Vec<f64>,
    b: Vec<f64>,
    quad_cost: Option<Vec<f64>>,
}

impl MuPopulation {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::build(a, b, None)
    }

    pub fn with_quadratic_cost(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        Self::build(a, b, Some(c))
    }

    pub fn homogeneous(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a; n], vec![b; n])
    }

    fn build(a: Vec<f64>, b: Vec<f64>, quad_cost: Option<Vec<f64>>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("n", "population must contain at least one MU"));
        }
        check_len("b", a.len(), b.len())?;
        if let Some(i) = a.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("a", format!("a[{i}] = {} must be positive", a[i])));
        }
        if let Some(i) = b.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("b", format!("b[{i}] = {} must be positive", b[i])));
        }
        if let Some(c) = &quad_cost {
            check_len("quad_cost", a.len(), c.len())?;
            if let Some(i) = c.iter().position(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(Error::invalid(
                    "quad_cost",
                    format!("quad_cost[{i}] = {} must be nonnegative", c[i]),
                ));
            }
        }
        Ok(Self { a, b, quad_cost })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn quad_cost(&self) -> Option<&[f64]> {
        self.quad_cost.as_deref()
    }

    /// Curvature of MU `i`'s private payoff: `2 b_i`, or `2 b_i + 2 c_i`
    /// under quadratic cost.
    pub fn curvature(&self, i: usize) -> f64 {
        2.0 * self.b[i] + self.quad_cost.as_ref().map_or(0.0, |c| 2.0 * c[i])
    }

    /// Reward-independent linear coefficient of MU `i`'s payoff:
    /// `a_i - c`, or `a_i` under quadratic cost.
    pub fn intercept(&self, i: usize, market: &MarketParams) -> f64 {
        match self.quad_cost {
            Some(_) => self.a[i],
            None => self.a[i] - market.c,
        }
    }

    pub fn intercepts(&self, market: &MarketParams) -> Vec<f64> {
        (0..self.len()).map(|i| self.intercept(i, market)).collect()
    }

    /// Relabels the MUs so that new MU `k` is old MU `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let pick = |v: &[f64]| perm.iter().map(|&p| v[p]).collect::<Vec<_>>();
        Self {
            a: pick(&self.a),
            b: pick(&self.b),
            quad_cost: self.quad_cost.as_deref().map(pick),
        }
    }
}

/// Influence matrix: `g[(i, j)]` is the influence of MU `j` on MU `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    g: Matrix,
    symmetric: bool,
}

impl SocialGraph {
    pub fn new(g: Matrix) -> Result<Self> {
        let n = g.dim();
        for i in 0..n {
            if g[(i, i)] != 0.0 {
                return Err(Error::invalid("g", format!("diagonal entry g[{i}][{i}] must be zero")));
            }
            for j in 0..n {
                let v = g[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid("g", format!("g[{i}][{j}] = {v} must be nonnegative")));
                }
            }
        }
        let symmetric = g.is_symmetric();
        Ok(Self { g, symmetric })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn empty(n: usize) -> Self {
        Self {
            g: Matrix::zeros(n),
            symmetric: true,
        }
    }

    pub fn len(&self) -> usize {
        self.g.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.g.dim() == 0
    }

    pub fn matrix(&self) -> &Matrix {
        &self.g
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[(i, j)]
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.g.row(i).iter().sum()
    }

    /// `Σ_j g_ij x_j`.
    pub fn neighbor_term(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.g.row(i), x)
    }

    pub(crate) fn scaled(mut self, factor: f64) -> Self {
        self.g.scale(factor);
        self
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.len();
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = self.g[(perm[i], perm[j])];
            }
        }
        Self {
            g,
            symmetric: self.symmetric,
        }
    }
}

/// CSP economics: revenue `μ Σ (s x_i − t x_i²)` and the MUs' unit cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    pub mu: f64,
    pub s: f64,
    pub t: f64,
    pub c: f64,
}

impl MarketParams {
    pub fn new(mu: f64, s: f64, t: f64, c: f64) -> Result<Self> {
        let m = Self { mu, s, t, c };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("s", self.s), ("t", self.t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be positive")));
            }
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("c", format!("{} must be nonnegative", self.c)));
        }
        Ok(())
    }
}

/// Reward offered per unit of participation.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardSchedule {
    Uniform(f64),
    Discriminatory(Vec<f64>),
    /// Reward indexed by Bayesian type (out-degree, in-degree).
    TypeIndexed(TypeTable),
}

impl RewardSchedule {
    /// Resolves the schedule to one reward per MU.
    pub fn per_mu(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            RewardSchedule::Uniform(r) => Ok(vec![*r; n]),
            RewardSchedule::Discriminatory(r) => {
                check_len("rewards", n, r.len())?;
                Ok(r.clone())
            }
            RewardSchedule::TypeIndexed(_) => Err(Error::Reward(
                "type-indexed rewards need the MU types; use TypeTable::assign".into(),
            )),
        }
    }

    pub fn has_negative(&self) -> bool {
        match self {
            RewardSchedule::Uniform(r) => *r < 0.0,
            RewardSchedule::Discriminatory(r) => r.iter().any(|&v| v < 0.0),
            RewardSchedule::TypeIndexed(t) => t.values().iter().any(|&v| v < 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    ClosedForm,
    Dynamics,
    /// Closed form was non-interior and the projected dynamics took over.
    ProjectedFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// `max_i |x_i − BR_i(x)|` at the returned point.
    pub residual_inf_norm: f64,
    pub interior: bool,
    pub method: SolveMethod,
    /// Set when the reward schedule contains negative entries.
    pub negative_rewards: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumOutcome {
    pub x: Vec<f64>,
    pub rewards: RewardSchedule,
    pub utilities: Vec<f64>,
    pub revenue: f64,
    pub diagnostics: Diagnostics,
}

impl EquilibriumOutcome {
    pub fn total_utility(&self) -> f64 {
        self.utilities.iter().sum()
    }

    /// `Σ r_i x_i`.
    pub fn total_reward_paid(&self) -> f64 {
        match self.rewards.per_mu(self.x.len()) {
            Ok(r) => dot(&r, &self.x),
            Err(_) => f64::NAN,
        }
    }
}

/// Utility of MU `i` at profile `x` with reward `r_i`.
pub fn mu_utility(
    i: usize,
    x: &[f64],
    r_i: f64,
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
) -> Result<f64> {
    let n = pop.len();
    check_len("x", n, x.len())?;
    check_len("graph", n, graph.len())?;
    if i >= n {
        return Err(Error::Dimension {
            name: "mu index",
            expected: n,
            actual: i,
        });
    }
    Ok(utility_unchecked(i, x, r_i, pop, graph, market))
}

pub(crate) fn utility_unchecked(
    i: usize,
    x: &[f64],
    r_i: f64,
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
) -> f64 {
    let xi = x[i];
    let cost = match pop.quad_cost() {
        Some(c) => c[i] * xi * xi,
        None => market.c * xi,
    };
    pop.a()[i] * xi - pop.b()[i] * xi * xi + xi * graph.neighbor_term(i, x) + r_i * xi - cost
}

/// CSP revenue `μ Σ_i (s x_i − t x_i²) − Σ_i r_i x_i`.
pub fn csp_revenue(x: &[f64], rewards: &RewardSchedule, market: &MarketParams) -> Result<f64> {
    let r = rewards.per_mu(x.len())?;
    Ok(revenue_with(x, &r, market))
}

pub(crate) fn revenue_with(x: &[f64], r: &[f64], market: &MarketParams) -> f64 {
    x.iter()
        .zip(r)
        .map(|(&xi, &ri)| market.mu * (market.s * xi - market.t * xi * xi) - ri * xi)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assumption1Report {
    pub holds: bool,
    pub worst_row_ratio: f64,
    pub worst_row: usize,
}

/// Checks the row condition `Σ_j g_ij / (2 b_i [+ 2 c_i]) < 1` for all `i`.
pub fn validate_assumption1(pop: &MuPopulation, graph: &SocialGraph) -> Assumption1Report {
    let (worst_row, worst_row_ratio) = (0..pop.len().min(graph.len()))
        .map(|i| (i, graph.row_sum(i) / pop.curvature(i)))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    Assumption1Report {
        holds: pop.len() == graph.len() && worst_row_ratio < 1.0,
        worst_row_ratio,
        worst_row,
    }
}

pub(crate) fn check_instance(pop: &MuPopulation, graph: &SocialGraph) -> Result<()> {
    check_len("graph", pop.len(), graph.len())
}
