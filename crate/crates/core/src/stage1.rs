//! Revenue-maximising reward design for the CSP under complete information.
//!
//! Both mechanisms are closed forms of the revenue along the unprojected
//! equilibrium `x = K (v + r)`. Every product with `K` is a linear solve
//! against the system matrix; no inverse is ever formed.

use crate::error::{Error, Result};
use crate::model::{EquilibriumOutcome, MarketParams, MuPopulation, RewardSchedule, SocialGraph};
use crate::numerics::{dot, solve_dd, solve_dense, LinearSystem, Matrix};
use crate::stage2::{closed_form, EquilibriumMap, Stage2Config};

/// Which closed form to use. `Auto` picks `Symmetric` exactly when the
/// graph is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FormulaPath {
    #[default]
    Auto,
    Symmetric,
    General,
}

impl FormulaPath {
    fn resolve(self, graph: &SocialGraph) -> Result<Self> {
        match self {
            FormulaPath::Auto if graph.is_symmetric() => Ok(FormulaPath::Symmetric),
            FormulaPath::Auto => Ok(FormulaPath::General),
            FormulaPath::Symmetric if !graph.is_symmetric() => Err(Error::invalid(
                "path",
                "symmetric closed form requested for an asymmetric graph",
            )),
            p => Ok(p),
        }
    }
}

/// Optimal per-MU reward vector.
pub fn discriminatory_reward(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    cfg: &Stage2Config,
) -> Result<RewardSchedule> {
    discriminatory_reward_via(pop, graph, market, cfg, FormulaPath::Auto)
}

pub fn discriminatory_reward_via(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    cfg: &Stage2Config,
    path: FormulaPath,
) -> Result<RewardSchedule> {
    let path = path.resolve(graph)?;
    let map = EquilibriumMap::new(pop, graph, market, cfg.solve_tol)?;
    let n = map.dim();
    let (mu, s, t) = (market.mu, market.s, market.t);
    let v = map.intercepts();
    let a = map.system();

    let r = match path {
        FormulaPath::Symmetric => {
            // (2A + 2μt I) r = μs A1 − 2μt v − A v, the stationarity
            // condition multiplied through by A. Still diagonally dominant.
            let ones = vec![1.0; n];
            let a1 = a.mul_vec(&ones);
            let av = a.mul_vec(v);
            let mut m = a.clone();
            m.scale(2.0);
            for i in 0..n {
                m[(i, i)] += 2.0 * mu * t;
            }
            let rhs = (0..n).map(|i| mu * s * a1[i] - 2.0 * mu * t * v[i] - av[i]).collect();
            solve_dd(&LinearSystem::new(m, rhs)?, cfg.solve_tol)?
        }
        FormulaPath::General => {
            // (K + Kᵀ + 2μt KᵀK) r = μs Kᵀ1 − 2μt KᵀK v − K v
            let mut cols = Vec::with_capacity(n);
            let mut e = vec![0.0; n];
            for j in 0..n {
                e[j] = 1.0;
                let k = map.apply(&e)?;
                let kt = map.apply_transpose(&e)?;
                let ktk = map.apply_transpose(&k)?;
                cols.push((0..n).map(|i| k[i] + kt[i] + 2.0 * mu * t * ktk[i]).collect());
                e[j] = 0.0;
            }
            let m = Matrix::from_columns(&cols)?;
            let kt1 = map.apply_transpose(&vec![1.0; n])?;
            let kv = map.apply(v)?;
            let ktkv = map.apply_transpose(&kv)?;
            let rhs = (0..n)
                .map(|i| mu * s * kt1[i] - 2.0 * mu * t * ktkv[i] - kv[i])
                .collect();
            solve_dense(&LinearSystem::new(m, rhs)?, cfg.solve_tol)?
        }
        FormulaPath::Auto => unreachable!("resolved above"),
    };
    Ok(RewardSchedule::Discriminatory(r))
}

/// Optimal single reward offered to every MU.
pub fn uniform_reward(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    cfg: &Stage2Config,
) -> Result<RewardSchedule> {
    uniform_reward_via(pop, graph, market, cfg, FormulaPath::Auto)
}

pub fn uniform_reward_via(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    cfg: &Stage2Config,
    path: FormulaPath,
) -> Result<RewardSchedule> {
    let path = path.resolve(graph)?;
    let map = EquilibriumMap::new(pop, graph, market, cfg.solve_tol)?;
    let n = map.dim();
    let (mu, s, t) = (market.mu, market.s, market.t);
    let ones = vec![1.0; n];
    // Participation is affine in the scalar reward: x = p + r q.
    let q = map.apply(&ones)?;
    let p = map.apply(map.intercepts())?;
    let sum_q: f64 = q.iter().sum();
    let sum_p: f64 = p.iter().sum();
    let (cross, square) = match path {
        FormulaPath::Symmetric => {
            let kq = map.apply(&q)?;
            (dot(map.intercepts(), &kq), kq.iter().sum::<f64>())
        }
        _ => (dot(&q, &p), dot(&q, &q)),
    };
    let den = 2.0 * mu * t * square + 2.0 * sum_q;
    if den.is_nan() || den <= 0.0 {
        return Err(Error::Singular { pivot: 0 });
    }
    let r = (mu * (s * sum_q - 2.0 * t * cross) - sum_p) / den;
    Ok(RewardSchedule::Uniform(r))
}

/// Stage-II equilibrium, utilities and revenue under `rewards`.
pub fn evaluate_mechanism(
    pop: &MuPopulation,
    graph: &SocialGraph,
    market: &MarketParams,
    rewards: &RewardSchedule,
    cfg: &Stage2Config,
) -> Result<EquilibriumOutcome> {
    closed_form(pop, graph, market, rewards, cfg)
}
