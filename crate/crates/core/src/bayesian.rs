//! Incomplete-information game: MUs know only the degree distributions.
//!
//! An MU's type is its (out-degree, in-degree) pair. Private parameters are
//! normalised to `a = 1`, `b = 1/2`, so the best response of a type-`(k, l)`
//! MU is `1 + r(k, l) − c + γ k · Avg` where `Avg` is the expected
//! participation of a random neighbour.

use crate::error::{check_len, Error, Result};
use crate::graphs::{neighbor_in_degree_dist, DegreeModel};
use crate::model::{MarketParams, RewardSchedule};

/// Agreement required between the general and simplified revenue sums.
const REVENUE_CHECK_TOL: f64 = 1e-9;
const AGGREGATE_TOL: f64 = 1e-8;

/// Real value per type `(k, l)` on `{0..=k_max}²`, stored with its
/// neighbour-weighted mean `r_bar` and out-degree-weighted mean `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeTable {
    k_max: usize,
    values: Vec<f64>,
    r_bar: f64,
    psi: f64,
}

impl TypeTable {
    /// `values` is row-major by out-degree: entry `k * (k_max + 1) + l`.
    pub fn new(values: Vec<f64>, dm: &DegreeModel) -> Result<Self> {
        let side = dm.k_max() + 1;
        check_len("type table", side * side, values.len())?;
        let (r_bar, psi) = aggregates(&values, dm);
        Ok(Self {
            k_max: dm.k_max(),
            values,
            r_bar,
            psi,
        })
    }

    pub fn from_fn(dm: &DegreeModel, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let side = dm.k_max() + 1;
        let values = (0..side * side).map(|i| f(i / side, i % side)).collect();
        Self::new(values, dm)
    }

    pub fn constant(dm: &DegreeModel, value: f64) -> Self {
        Self::from_fn(dm, |_, _| value).expect("shape matches by construction")
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * (self.k_max + 1) + l]
    }

    pub fn r_bar(&self) -> f64 {
        self.r_bar
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Looks up each MU's entry from its realised degrees.
    pub fn assign(&self, out_degree: &[usize], in_degree: &[usize]) -> Result<Vec<f64>> {
        check_len("in_degree", out_degree.len(), in_degree.len())?;
        out_degree
            .iter()
            .zip(in_degree)
            .map(|(&k, &l)| {
                if k > self.k_max || l > self.k_max {
                    Err(Error::Reward(format!(
                        "type ({k}, {l}) outside table support 0..={}",
                        self.k_max
                    )))
                } else {
                    Ok(self.get(k, l))
                }
            })
            .collect()
    }
}

/// `r̄ = Σ H̄(l) P(k) r(k,l)` and `ψ = Σ (k / k̄) H(l) P(k) r(k,l)`.
/// Without any edges both fall back to the plain type average.
fn aggregates(values: &[f64], dm: &DegreeModel) -> (f64, f64) {
    let side = dm.k_max() + 1;
    let (p, h) = (dm.p_out(), dm.h_in());
    let hb = neighbor_in_degree_dist(dm).unwrap_or_else(|_| h.to_vec());
    let k_bar = dm.k_bar();
    let (mut r_bar, mut psi) = (0.0, 0.0);
    for k in 0..side {
        let wk = if k_bar > 0.0 { k as f64 / k_bar } else { 1.0 };
        for l in 0..side {
            let v = values[k * side + l];
            r_bar += hb[l] * p[k] * v;
            psi += wk * h[l] * p[k] * v;
        }
    }
    (r_bar, psi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesianScenario {
    pub dm: DegreeModel,
    pub market: MarketParams,
    /// `Uniform` or `TypeIndexed`.
    pub rewards: RewardSchedule,
}

impl BayesianScenario {
    pub fn new(dm: DegreeModel, market: MarketParams, rewards: RewardSchedule) -> Result<Self> {
        market.validate()?;
        let scn = Self { dm, market, rewards };
        scn.reward_table()?;
        Ok(scn)
    }

    pub fn reward_table(&self) -> Result<TypeTable> {
        match &self.rewards {
            RewardSchedule::Uniform(r) => Ok(TypeTable::constant(&self.dm, *r)),
            RewardSchedule::TypeIndexed(t) if t.k_max() == self.dm.k_max() => Ok(t.clone()),
            RewardSchedule::TypeIndexed(t) => Err(Error::Reward(format!(
                "table covers 0..={} but the degree support is 0..={}",
                t.k_max(),
                self.dm.k_max()
            ))),
            RewardSchedule::Discriminatory(_) => Err(Error::Reward(
                "per-MU rewards are meaningless without MU identities".into(),
            )),
        }
    }
}

fn network_discount(dm: &DegreeModel) -> Result<f64> {
    let delta = 1.0 - dm.gamma() * dm.k_bar();
    if delta <= 0.0 {
        return Err(Error::SocialStrength {
            what: "k_bar",
            value: dm.gamma() * dm.k_bar(),
        });
    }
    Ok(delta)
}

/// Expected participation of a random neighbour, `(1 + r̄ − c)/(1 − γ k̄)`.
pub fn avg_neighbor_participation(scn: &BayesianScenario) -> Result<f64> {
    let table = scn.reward_table()?;
    Ok((1.0 + table.r_bar() - scn.market.c) / network_discount(&scn.dm)?)
}

/// Bayesian equilibrium participation per type.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationTable {
    pub x: TypeTable,
    pub avg_neighbor: f64,
    /// False if some type with positive probability has `x < 0`.
    pub interior: bool,
}

impl ParticipationTable {
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.x.get(k, l)
    }
}

pub fn equilibrium_participation(scn: &BayesianScenario) -> Result<ParticipationTable> {
    let r = scn.reward_table()?;
    let avg = (1.0 + r.r_bar() - scn.market.c) / network_discount(&scn.dm)?;
    let (c, gamma) = (scn.market.c, scn.dm.gamma());
    let x = TypeTable::from_fn(&scn.dm, |k, l| 1.0 + r.get(k, l) - c + gamma * k as f64 * avg)?;
    let (p, h) = (scn.dm.p_out(), scn.dm.h_in());
    let interior = scn
        .dm
        .support()
        .all(|k| scn.dm.support().all(|l| p[k] * h[l] == 0.0 || x.get(k, l) >= 0.0));
    Ok(ParticipationTable {
        x,
        avg_neighbor: avg,
        interior,
    })
}

/// Expected CSP revenue `Σ H(l) P(k) ((μs − r) x − μt x²)` over types.
/// Uniform schedules are cross-checked against the closed quadratic in
/// the common participation level.
pub fn expected_revenue(scn: &BayesianScenario) -> Result<f64> {
    let r = scn.reward_table()?;
    let x = equilibrium_participation(scn)?.x;
    let MarketParams { mu, s, t, .. } = scn.market;
    let (p, h) = (scn.dm.p_out(), scn.dm.h_in());
    let mut total = 0.0;
    for k in scn.dm.support() {
        for l in scn.dm.support() {
            let w = p[k] * h[l];
            if w > 0.0 {
                let (rv, xv) = (r.get(k, l), x.get(k, l));
                total += w * ((mu * s - rv) * xv - mu * t * xv * xv);
            }
        }
    }
    if let RewardSchedule::Uniform(u) = scn.rewards {
        let simple = expected_revenue_uniform_simplified(&scn.dm, &scn.market, u)?;
        let gap = (simple - total).abs();
        let bound = REVENUE_CHECK_TOL * (1.0 + total.abs());
        if gap > bound {
            return Err(Error::Residual { residual: gap, bound });
        }
    }
    Ok(total)
}

/// `(μs + 1 − c) X − (δ + μt + μt γ² σ_k²) X²` with `X = (1 + r − c)/δ`,
/// `δ = 1 − γ k̄`.
pub fn expected_revenue_uniform_simplified(dm: &DegreeModel, market: &MarketParams, r: f64) -> Result<f64> {
    let delta = network_discount(dm)?;
    let MarketParams { mu, s, t, c } = *market;
    let x = (1.0 + r - c) / delta;
    let g = dm.gamma();
    Ok((mu * s + 1.0 - c) * x - (delta + mu * t + mu * t * g * g * dm.var_k()) * x * x)
}

/// Revenue-maximising common reward.
pub fn bayesian_uniform_reward(dm: &DegreeModel, market: &MarketParams) -> Result<f64> {
    let delta = network_discount(dm)?;
    let MarketParams { mu, s, t, c } = *market;
    let g = dm.gamma();
    Ok(c - 1.0 + (mu * s + 1.0 - c) * delta / (2.0 * (delta + mu * t + mu * t * g * g * dm.var_k())))
}

/// Revenue-maximising type-indexed reward.
///
/// The optimal `r(m, n)` is affine in the aggregates `(r̄, ψ)`, which in turn
/// are weighted means of the table. The two consistency equations are
/// affine in `(r̄, ψ)`; their coefficients are read off by evaluating the
/// residuals at three points, and the resulting 2×2 system is solved.
pub fn bayesian_discriminatory_reward(dm: &DegreeModel, market: &MarketParams) -> Result<TypeTable> {
    if dm.k_bar() <= 0.0 {
        return Err(Error::DegenerateInDegree);
    }
    let delta = network_discount(dm)?;
    let MarketParams { mu, s, t, c } = *market;
    let g = dm.gamma();
    let k_bar = dm.k_bar();
    let second_moment = dm.var_k() + k_bar * k_bar;

    let reward = |m: usize, n: usize, r_bar: f64, psi: f64| -> f64 {
        let (m, n) = (m as f64, n as f64);
        let avg = (1.0 + r_bar - c) / delta;
        let own = c - 1.0 - g * m * avg + mu * s - 2.0 * mu * t * (1.0 - c + g * m * avg);
        let spill =
            mu * s - 2.0 * mu * t * (1.0 - c) - 2.0 * mu * t * g * (1.0 + r_bar - c) * second_moment / (delta * k_bar);
        let value = own + g * n / delta * spill - g * n * (1.0 + 2.0 * mu * t) * psi / delta;
        value / (2.0 * (1.0 + mu * t))
    };
    let residuals = |r_bar: f64, psi: f64| -> Result<(f64, f64)> {
        let table = TypeTable::from_fn(dm, |m, n| reward(m, n, r_bar, psi))?;
        Ok((table.r_bar() - r_bar, table.psi() - psi))
    };

    let (e0, f0) = residuals(0.0, 0.0)?;
    let (e1, f1) = residuals(1.0, 0.0)?;
    let (e2, f2) = residuals(0.0, 1.0)?;
    let (a11, a12, a21, a22) = (e1 - e0, e2 - e0, f1 - f0, f2 - f0);
    let det = a11 * a22 - a12 * a21;
    let norm = (a11.abs() + a12.abs()).max(a21.abs() + a22.abs());
    let inv_norm = (a22.abs() + a12.abs()).max(a21.abs() + a11.abs()) / det.abs();
    let condition = norm * inv_norm;
    if !(condition.is_finite() && condition < 1e12) {
        return Err(Error::SingularAggregateSystem { condition });
    }
    let r_bar = (-e0 * a22 + f0 * a12) / det;
    let psi = (-f0 * a11 + e0 * a21) / det;

    let table = TypeTable::from_fn(dm, |m, n| reward(m, n, r_bar, psi))?;
    let gap = (table.r_bar() - r_bar).abs().max((table.psi() - psi).abs());
    let bound = AGGREGATE_TOL * (1.0 + r_bar.abs() + psi.abs());
    if gap > bound {
        return Err(Error::Residual { residual: gap, bound });
    }
    Ok(table)
}
