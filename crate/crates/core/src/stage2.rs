//! Participation equilibrium among MUs for a fixed reward schedule.

use crate::error::{check_len, Error, Result};
use crate::model::{
    check_instance, revenue_with, utility_unchecked, validate_assumption1, Diagnostics, EquilibriumOutcome,
    MarketParams, MuPopulation, RewardSchedule, SocialGraph, SolveMethod,
};
use crate::numerics::{l1_dist, DominantSolver, Matrix, SOLVE_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Config {
    /// Stop once successive iterates differ by at most this in l1 norm.
    pub epsilon: f64,
    pub max_iter: usize,
    /// Starting profile for the dynamics; zero when absent.
    pub initial: Option<Vec<f64>>,
    /// Relative residual bound for the linear solves.
    pub solve_tol: f64,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_iter: 1_000_000,
            initial: None,
            solve_tol: SOLVE_TOL,
        }
    }
}

impl Stage2Config {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", format!("{} must be positive", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be positive"));
        }
        Ok(())
    }
}

/// Utility-maximising participation of MU `i` against the others' levels.
pub fn best_response(
    i: usize,
    x: &[f64],
    r_i: f64,
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
) -> f64 {
    let raw = (pop.intercept(i, market) + r_i + graph.neighbor_term(i, x)) / pop.curvature(i);
    raw.max(0.0)
}

fn sweep_into(x: &[f64], r: &[f64], pop: &MuPopulation, graph: &SocialGraph, market: &MarketParams, out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = best_response(i, x, r[i], pop, graph, market);
    }
}

/// Largest deviation `max_i |x_i − BR_i(x)|`.
pub fn fixed_point_residual(
    x: &[f64],
    r: &[f64],
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
) -> f64 {
    (0..x.len())
        .map(|i| (x[i] - best_response(i, x, r[i], pop, graph, market)).abs())
        .fold(0.0, f64::max)
}

/// Iterator over synchronous best-response iterates `x⁽¹⁾, x⁽²⁾, …`.
pub struct BestResponseDynamics<'a> {
    pop: &'a MuPopulation,
    graph: &'a SocialGraph,
    market: &'a MarketParams,
    r: Vec<f64>,
    x: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> BestResponseDynamics<'a> {
    pub fn new(
        pop: &'a MuPopulation,
        graph: &'a SocialGraph,
        market: &'a MarketParams,
        r: Vec<f64>,
        start: Vec<f64>,
    ) -> Result<Self> {
        check_instance(pop, graph)?;
        check_len("rewards", pop.len(), r.len())?;
        check_len("initial", pop.len(), start.len())?;
        let n = start.len();
        Ok(Self {
            pop,
            graph,
            market,
            r,
            x: start,
            next: vec![0.0; n],
        })
    }

    pub fn current(&self) -> &[f64] {
        &self.x
    }
}

impl Iterator for BestResponseDynamics<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        sweep_into(&self.x, &self.r, self.pop, self.graph, self.market, &mut self.next);
        std::mem::swap(&mut self.x, &mut self.next);
        Some(self.x.clone())
    }
}

fn require_assumption1(pop: &MuPopulation, graph: &SocialGraph) -> Result<()> {
    let rep = validate_assumption1(pop, graph);
    if rep.holds {
        Ok(())
    } else {
        Err(Error::AssumptionViolated {
            row: rep.worst_row,
            worst_row_ratio: rep.worst_row_ratio,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn outcome(
    x: Vec<f64>,
    rewards: &RewardSchedule,
    r: &[f64],
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    iterations: usize,
    method: SolveMethod,
) -> EquilibriumOutcome {
    let utilities = (0..x.len())
        .map(|i| utility_unchecked(i, &x, r[i], pop, graph, market))
        .collect();
    let residual = fixed_point_residual(&x, r, pop, graph, market);
    let interior = x.iter().all(|&v| v > 0.0);
    EquilibriumOutcome {
        revenue: revenue_with(&x, r, market),
        utilities,
        rewards: rewards.clone(),
        diagnostics: Diagnostics {
            iterations,
            residual_inf_norm: residual,
            interior,
            method,
            negative_rewards: rewards.has_negative(),
        },
        x,
    }
}

/// Synchronous best-response dynamics from `cfg.initial` (default zero).
pub fn dynamics(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    rewards: &RewardSchedule,
    cfg: &Stage2Config,
) -> Result<EquilibriumOutcome> {
    cfg.validate()?;
    check_instance(pop, graph)?;
    require_assumption1(pop, graph)?;
    let n = pop.len();
    let r = rewards.per_mu(n)?;
    let start = cfg.initial.clone().unwrap_or_else(|| vec![0.0; n]);
    let (x, iterations) = iterate(pop, graph, market, &r, start, cfg)?;
    Ok(outcome(
        x,
        rewards,
        &r,
        pop,
        graph,
        market,
        iterations,
        SolveMethod::Dynamics,
    ))
}

fn iterate(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    r: &[f64],
    start: Vec<f64>,
    cfg: &Stage2Config,
) -> Result<(Vec<f64>, usize)> {
    check_len("initial", pop.len(), start.len())?;
    let mut x = start;
    let mut next = vec![0.0; x.len()];
    let mut step = f64::INFINITY;
    for k in 1..=cfg.max_iter {
        sweep_into(&x, r, pop, graph, market, &mut next);
        step = l1_dist(&x, &next);
        std::mem::swap(&mut x, &mut next);
        if step <= cfg.epsilon {
            return Ok((x, k));
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual: step,
        last: x,
    })
}

/// `(B − G)` or `(B + C − G)` with `B = diag(2b)`, `C = diag(2c)`.
pub fn system_matrix(pop: &MuPopulation, graph: &SocialGraph) -> Matrix {
    let n = pop.len();
    let mut m = graph.matrix().clone();
    m.scale(-1.0);
    for i in 0..n {
        m[(i, i)] = pop.curvature(i);
    }
    m
}

/// Factorised equilibrium map `r ↦ K (v + r)`.
pub struct EquilibriumMap {
    solver: DominantSolver,
    intercepts: Vec<f64>,
}

impl EquilibriumMap {
    pub fn new(pop: &MuPopulation, graph: &SocialGraph, market: &MarketParams, tol: f64) -> Result<Self> {
        check_instance(pop, graph)?;
        require_assumption1(pop, graph)?;
        Ok(Self {
            solver: DominantSolver::new(system_matrix(pop, graph), tol)?,
            intercepts: pop.intercepts(market),
        })
    }

    pub fn dim(&self) -> usize {
        self.intercepts.len()
    }

    pub fn system(&self) -> &Matrix {
        self.solver.matrix()
    }

    /// Reward-independent intercepts `v` (`a − c` or `a`).
    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    /// `K y`.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve(y)
    }

    /// `Kᵀ y`.
    pub fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.solver.solve_transpose(y)
    }

    /// Unprojected participation `K (v + r)`.
    pub fn participation(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_len("rewards", self.dim(), r.len())?;
        let rhs: Vec<f64> = self.intercepts.iter().zip(r).map(|(v, r)| v + r).collect();
        self.apply(&rhs)
    }
}

/// Linear-system equilibrium ignoring the nonnegativity constraint.
pub fn unprojected_participation(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    rewards: &RewardSchedule,
    cfg: &Stage2Config,
) -> Result<Vec<f64>> {
    let r = rewards.per_mu(pop.len())?;
    EquilibriumMap::new(pop, graph, market, cfg.solve_tol)?.participation(&r)
}

/// Solves the linear equilibrium system. If the solution is not strictly
/// positive it is discarded in favour of projected dynamics, and the
/// outcome is flagged non-interior.
pub fn closed_form(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    rewards: &RewardSchedule,
    cfg: &Stage2Config,
) -> Result<EquilibriumOutcome> {
    cfg.validate()?;
    let n = pop.len();
    let r = rewards.per_mu(n)?;
    let map = EquilibriumMap::new(pop, graph, market, cfg.solve_tol)?;
    let x = map.participation(&r)?;
    if x.iter().all(|&v| v > 0.0) {
        return Ok(outcome(x, rewards, &r, pop, graph, market, 0, SolveMethod::ClosedForm));
    }
    let start = cfg.initial.clone().unwrap_or_else(|| vec![0.0; n]);
    let (x, iterations) = iterate(pop, graph, market, &r, start, cfg)?;
    let mut out = outcome(
        x,
        rewards,
        &r,
        pop,
        graph,
        market,
        iterations,
        SolveMethod::ProjectedFallback,
    );
    out.diagnostics.interior = false;
    Ok(out)
}

/// Unilateral-deviation scan: for every MU, tries `grid` evenly spaced
/// levels on `[0, 2 max(x) + 1]` with the others held fixed, and reports
/// whether none improves utility by more than `tol`.
pub fn verify_nash(
    outcome: &EquilibriumOutcome,
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    grid: usize,
    tol: f64,
) -> Result<bool> {
    let n = pop.len();
    check_instance(pop, graph)?;
    check_len("x", n, outcome.x.len())?;
    let r = outcome.rewards.per_mu(n)?;
    let hi = 2.0 * outcome.x.iter().cloned().fold(0.0, f64::max) + 1.0;
    let steps = grid.max(2) - 1;
    let mut trial = outcome.x.clone();
    for i in 0..n {
        let base = utility_unchecked(i, &outcome.x, r[i], pop, graph, market);
        for k in 0..=steps {
            trial[i] = hi * k as f64 / steps as f64;
            if utility_unchecked(i, &trial, r[i], pop, graph, market) > base + tol {
                return Ok(false);
            }
        }
        trial[i] = outcome.x[i];
    }
    Ok(true)
}

/// Contraction modulus `max_i Σ_j g_ij / curvature_i`.
pub fn contraction_modulus(pop: &MuPopulation, graph: &SocialGraph) -> f64 {
    validate_assumption1(pop, graph).worst_row_ratio
}
