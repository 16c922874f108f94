//! Social graph generators and degree-distribution models.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_assumption1, MuPopulation, SocialGraph};
use crate::numerics::Matrix;

/// Default Assumption-1 safety factor for generated ties.
pub const DEFAULT_RHO_MAX: f64 = 0.95;

const PMF_TOL: f64 = 1e-12;
const MEAN_TOL: f64 = 1e-9;

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Out-degree and in-degree distributions over `D = {0, …, k_max}`
/// together with the social strength `gamma` carried by every edge.
///
/// The out-degree of an MU counts the neighbours that influence it; its
/// in-degree counts the MUs it influences.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeModel {
    p_out: Vec<f64>,
    h_in: Vec<f64>,
    gamma: f64,
    k_bar: f64,
    var_k: f64,
    var_l: f64,
}

impl DegreeModel {
    pub fn new(p_out: Vec<f64>, h_in: Vec<f64>, gamma: f64) -> Result<Self> {
        let (mut p_out, mut h_in) = (p_out, h_in);
        for (name, pmf) in [("p_out", &p_out), ("h_in", &h_in)] {
            if pmf.is_empty() {
                return Err(Error::invalid(name, "empty distribution"));
            }
            if let Some(k) = pmf.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::invalid(
                    name,
                    format!("P({k}) = {} is not a probability", pmf[k]),
                ));
            }
            let total: f64 = pmf.iter().sum();
            if (total - 1.0).abs() > PMF_TOL {
                return Err(Error::invalid(name, format!("sums to {total}, not 1")));
            }
        }
        // Trim to the largest degree with positive mass.
        let top = |v: &[f64]| v.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let len = top(&p_out).max(top(&h_in)) + 1;
        p_out.resize(len, 0.0);
        h_in.resize(len, 0.0);

        let (k_bar, var_k) = moments(&p_out);
        let (l_bar, var_l) = moments(&h_in);
        if (k_bar - l_bar).abs() > MEAN_TOL {
            return Err(Error::invalid(
                "h_in",
                format!("mean in-degree {l_bar} differs from mean out-degree {k_bar}"),
            ));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("{gamma} must be nonnegative")));
        }
        let k_max = (len - 1) as f64;
        if gamma * k_max >= 1.0 {
            return Err(Error::SocialStrength {
                what: "k_max",
                value: gamma * k_max,
            });
        }
        Ok(Self {
            p_out,
            h_in,
            gamma,
            k_bar,
            var_k,
            var_l,
        })
    }

    /// Every MU has exactly `k` influencers and influences exactly `k` MUs.
    pub fn point_mass(k: usize, gamma: f64) -> Result<Self> {
        let mut p = vec![0.0; k + 1];
        p[k] = 1.0;
        Self::new(p.clone(), p, gamma)
    }

    /// Both degrees uniform on `lo..=hi`.
    pub fn uniform(lo: usize, hi: usize, gamma: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("uniform", format!("empty range {lo}..={hi}")));
        }
        let w = 1.0 / (hi - lo + 1) as f64;
        let p: Vec<f64> = (0..=hi).map(|k| if k >= lo { w } else { 0.0 }).collect();
        Self::new(p.clone(), p, gamma)
    }

    /// Discretised normal degrees with mean `k_bar` and variances `var_k`
    /// (out) and `var_l` (in) on `0..=k_max`. Each pmf is exponentially
    /// tilted so that its mean is exactly `k_bar` despite truncation.
    /// `k_max` defaults to `k_bar + 6σ`, capped below `1 / gamma`.
    pub fn discretized_normal(k_bar: f64, var_k: f64, var_l: f64, k_max: Option<usize>, gamma: f64) -> Result<Self> {
        if !(k_bar >= 0.0 && k_bar.is_finite()) {
            return Err(Error::invalid("k_bar", format!("{k_bar} must be nonnegative")));
        }
        for (name, v) in [("var_k", var_k), ("var_l", var_l)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be nonnegative")));
            }
        }
        let k_max = match k_max {
            Some(k) => k,
            None => {
                let sigma = var_k.max(var_l).sqrt();
                let wide = (k_bar + 6.0 * sigma).ceil().max(k_bar.ceil() + 1.0) as usize;
                if gamma > 0.0 {
                    let cap = ((1.0 / gamma).ceil() as usize).saturating_sub(1);
                    wide.min(cap)
                } else {
                    wide
                }
            }
        };
        let p = tilted_normal_pmf(k_bar, var_k, k_max)?;
        let h = tilted_normal_pmf(k_bar, var_l, k_max)?;
        Self::new(p, h, gamma)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.p_out.clone(), self.h_in.clone(), gamma)
    }

    pub fn k_max(&self) -> usize {
        self.p_out.len() - 1
    }

    pub fn support(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.k_max()
    }

    pub fn p_out(&self) -> &[f64] {
        &self.p_out
    }

    pub fn h_in(&self) -> &[f64] {
        &self.h_in
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    pub fn var_k(&self) -> f64 {
        self.var_k
    }

    pub fn var_l(&self) -> f64 {
        self.var_l
    }
}

fn moments(pmf: &[f64]) -> (f64, f64) {
    let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let var = pmf.iter().enumerate().map(|(k, p)| p * (k as f64 - mean).powi(2)).sum();
    (mean, var)
}

fn tilted_normal_pmf(mean: f64, var: f64, k_max: usize) -> Result<Vec<f64>> {
    let top = k_max as f64;
    if mean > top || (var > 0.0 && mean >= top && k_max > 0) {
        return Err(Error::invalid(
            "k_max",
            format!("support 0..={k_max} cannot carry mean degree {mean}"),
        ));
    }
    if var == 0.0 {
        let lo = mean.floor();
        let frac = mean - lo;
        let mut p = vec![0.0; k_max + 1];
        p[lo as usize] = 1.0 - frac;
        if frac > 0.0 {
            p[lo as usize + 1] = frac;
        }
        return Ok(p);
    }
    let weights = |lambda: f64| -> Vec<f64> {
        let logs: Vec<f64> = (0..=k_max)
            .map(|k| {
                let d = k as f64 - mean;
                -d * d / (2.0 * var) + lambda * k as f64
            })
            .collect();
        let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    };
    let mean_of = |lambda: f64| moments(&weights(lambda)).0;
    if mean == 0.0 {
        let mut p = vec![0.0; k_max + 1];
        p[0] = 1.0;
        return Ok(p);
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_of(lo) > mean {
        lo *= 2.0;
    }
    while mean_of(hi) < mean {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_of(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(weights(0.5 * (lo + hi)))
}

/// Size-biased in-degree pmf of a randomly chosen neighbour,
/// `H̄(l) = H(l) l / Σ H(l') l'`.
pub fn neighbor_in_degree_dist(dm: &DegreeModel) -> Result<Vec<f64>> {
    let total: f64 = dm.h_in.iter().enumerate().map(|(l, h)| h * l as f64).sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInDegree);
    }
    Ok(dm.h_in.iter().enumerate().map(|(l, h)| h * l as f64 / total).collect())
}

/// A generated graph plus the repairs applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedGraph {
    pub graph: SocialGraph,
    /// Factor applied to the raw ties to enforce Assumption 1 (1 if none).
    pub scale: f64,
    /// Number of negative normal draws clamped to zero.
    pub clamped: usize,
}

/// Symmetric ties `g_ij = g_ji ~ max(0, Normal(mu_g, sigma_g²))`.
///
/// With `rho_max = Some(ρ)`, ties are shrunk uniformly whenever the worst
/// Assumption-1 row ratio exceeds `ρ`, so that it lands at or below `ρ`.
pub fn gen_normal_ties(
    n: usize,
    mu_g: f64,
    sigma_g: f64,
    seed: u64,
    pop: &MuPopulation,
    rho_max: Option<f64>,
) -> Result<GeneratedGraph> {
    gen_ties(n, mu_g, sigma_g, seed, pop, rho_max, false)
}

/// Like [`gen_normal_ties`] but every ordered pair is drawn independently,
/// giving an asymmetric influence matrix.
pub fn gen_independent_ties(
    n: usize,
    mu_g: f64,
    sigma_g: f64,
    seed: u64,
    pop: &MuPopulation,
    rho_max: Option<f64>,
) -> Result<GeneratedGraph> {
    gen_ties(n, mu_g, sigma_g, seed, pop, rho_max, true)
}

fn gen_ties(
    n: usize,
    mu_g: f64,
    sigma_g: f64,
    seed: u64,
    pop: &MuPopulation,
    rho_max: Option<f64>,
    directed: bool,
) -> Result<GeneratedGraph> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one MU"));
    }
    if !(sigma_g >= 0.0 && sigma_g.is_finite()) || !mu_g.is_finite() {
        return Err(Error::invalid(
            "sigma_g",
            format!("Normal({mu_g}, {sigma_g}²) is not valid"),
        ));
    }
    if pop.len() != n {
        return Err(Error::Dimension {
            name: "population",
            expected: n,
            actual: pop.len(),
        });
    }
    if let Some(rho) = rho_max {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::invalid("rho_max", format!("{rho} must lie in (0, 1)")));
        }
    }
    let normal = Normal::new(mu_g, sigma_g).map_err(|e| Error::invalid("sigma_g", e.to_string()))?;
    let mut rng = rng_for(seed);
    let mut g = Matrix::zeros(n);
    let mut clamped = 0;
    let mut draw = |rng: &mut ChaCha8Rng| {
        let v: f64 = if sigma_g == 0.0 { mu_g } else { normal.sample(rng) };
        if v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        }
    };
    for i in 0..n {
        if directed {
            for j in 0..n {
                if i != j {
                    g[(i, j)] = draw(&mut rng);
                }
            }
        } else {
            for j in i + 1..n {
                let v = draw(&mut rng);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
    }
    let mut graph = SocialGraph::new(g)?;
    let mut scale = 1.0;
    if let Some(rho) = rho_max {
        let worst = validate_assumption1(pop, &graph).worst_row_ratio;
        if worst > rho {
            scale = rho / worst;
            let raw = graph.clone();
            graph = raw.clone().scaled(scale);
            while validate_assumption1(pop, &graph).worst_row_ratio > rho {
                scale *= 1.0 - 1e-12;
                graph = raw.clone().scaled(scale);
            }
        }
    }
    Ok(GeneratedGraph { graph, scale, clamped })
}

/// Tridiagonal chain with ties peaking mid-chain:
/// `g_{i,i+1} = g_{i+1,i} = 0.2 (0.5 − (0.5 − (i−1)/n)²)` for 1-based `i`.
pub fn gen_chain(n: usize) -> Result<SocialGraph> {
    if n < 2 {
        return Err(Error::invalid("n", "a chain needs at least two MUs"));
    }
    let mut g = Matrix::zeros(n);
    for i in 1..n {
        let pos = (i - 1) as f64 / n as f64;
        let v = 0.2 * (0.5 - (0.5 - pos) * (0.5 - pos));
        g[(i - 1, i)] = v;
        g[(i, i - 1)] = v;
    }
    SocialGraph::new(g)
}

/// A sampled configuration-model network with its realised degrees.
#[derive(Debug, Clone)]
pub struct ConfigurationSample {
    pub graph: SocialGraph,
    /// Number of influencers of each MU (nonzeros in its row).
    pub out_degree: Vec<usize>,
    /// Number of MUs each MU influences (nonzeros in its column).
    pub in_degree: Vec<usize>,
    /// Edge swaps needed to remove self-loops and multi-edges.
    pub swaps: usize,
}

const MATCH_ROUNDS: usize = 64;
const SWAP_TRIES: usize = 32;

/// Directed configuration model. Out-degrees are drawn from `P`, in-degrees
/// from `H`; stub totals are balanced by redrawing single degrees on the
/// short side; stubs are matched uniformly and self-loops or duplicate
/// edges are repaired by random edge swaps. A stub of MU `i` matched with a
/// stub of MU `j` sets `g_ij = gamma` (MU `j` influences MU `i`).
pub fn sample_configuration_network(dm: &DegreeModel, n: usize, seed: u64) -> Result<ConfigurationSample> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one MU"));
    }
    let mut rng = rng_for(seed);
    let p = WeightedIndex::new(dm.p_out()).map_err(|e| Error::invalid("p_out", e.to_string()))?;
    let h = WeightedIndex::new(dm.h_in()).map_err(|e| Error::invalid("h_in", e.to_string()))?;
    let mut out_deg: Vec<usize> = (0..n).map(|_| p.sample(&mut rng)).collect();
    let mut in_deg: Vec<usize> = (0..n).map(|_| h.sample(&mut rng)).collect();

    let mut diff = out_deg.iter().sum::<usize>() as i64 - in_deg.iter().sum::<usize>() as i64;
    let mut draws = 0;
    while diff != 0 {
        draws += 1;
        if draws > 1000 * n {
            return Err(Error::StubMatching {
                unresolved: diff.unsigned_abs() as usize,
                edges: out_deg.iter().sum(),
                rounds: draws,
            });
        }
        let i = rng.random_range(0..n);
        if diff < 0 {
            let d = p.sample(&mut rng);
            let next = diff - out_deg[i] as i64 + d as i64;
            if next.abs() < diff.abs() {
                out_deg[i] = d;
                diff = next;
            }
        } else {
            let d = h.sample(&mut rng);
            let next = diff + in_deg[i] as i64 - d as i64;
            if next.abs() < diff.abs() {
                in_deg[i] = d;
                diff = next;
            }
        }
    }

    let out_stubs: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, out_deg[i])).collect();
    let mut in_stubs: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat_n(j, in_deg[j])).collect();
    in_stubs.shuffle(&mut rng);

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(out_stubs.len());
    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(out_stubs.len());
    let mut bad: Vec<(usize, usize)> = Vec::new();
    for (&i, &j) in out_stubs.iter().zip(&in_stubs) {
        if i != j && present.insert((i, j)) {
            edges.push((i, j));
        } else {
            bad.push((i, j));
        }
    }

    let mut swaps = 0;
    let mut rounds = 0;
    while !bad.is_empty() && rounds < MATCH_ROUNDS {
        rounds += 1;
        let mut still_bad = Vec::new();
        for (i, j) in bad {
            let mut fixed = false;
            for _ in 0..SWAP_TRIES {
                if edges.is_empty() {
                    break;
                }
                let idx = rng.random_range(0..edges.len());
                let (i2, j2) = edges[idx];
                let ok = i != j2
                    && i2 != j
                    && !present.contains(&(i, j2))
                    && !present.contains(&(i2, j))
                    && (i, j2) != (i2, j);
                if ok {
                    present.remove(&(i2, j2));
                    present.insert((i, j2));
                    present.insert((i2, j));
                    edges[idx] = (i, j2);
                    edges.push((i2, j));
                    swaps += 1;
                    fixed = true;
                    break;
                }
            }
            if !fixed {
                still_bad.push((i, j));
            }
        }
        bad = still_bad;
    }
    if !bad.is_empty() {
        return Err(Error::StubMatching {
            unresolved: bad.len(),
            edges: out_stubs.len(),
            rounds,
        });
    }

    let mut g = Matrix::zeros(n);
    for &(i, j) in &edges {
        g[(i, j)] = dm.gamma();
    }
    Ok(ConfigurationSample {
        graph: SocialGraph::new(g)?,
        out_degree: out_deg,
        in_degree: in_deg,
        swaps,
    })
}

/// Declarative graph source used by scenario configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphKind {
    NormalTies {
        mu_g: f64,
        sigma_g: f64,
        #[serde(default)]
        directed: bool,
    },
    Chain,
    EdgeList {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphGenSpec {
    pub source: GraphKind,
    #[serde(default = "default_true")]
    pub enforce_assumption1: bool,
    #[serde(default = "default_rho")]
    pub rho_max: f64,
}

fn default_true() -> bool {
    true
}

fn default_rho() -> f64 {
    DEFAULT_RHO_MAX
}

impl GraphGenSpec {
    pub fn normal_ties(mu_g: f64, sigma_g: f64) -> Self {
        Self {
            source: GraphKind::NormalTies {
                mu_g,
                sigma_g,
                directed: false,
            },
            enforce_assumption1: true,
            rho_max: DEFAULT_RHO_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_max > 0.0 && self.rho_max < 1.0) {
            return Err(Error::invalid(
                "rho_max",
                format!("{} must lie in (0, 1)", self.rho_max),
            ));
        }
        Ok(())
    }

    pub fn generate(&self, pop: &MuPopulation, seed: u64) -> Result<GeneratedGraph> {
        self.validate()?;
        let rho = self.enforce_assumption1.then_some(self.rho_max);
        let n = pop.len();
        match &self.source {
            GraphKind::NormalTies {
                mu_g,
                sigma_g,
                directed,
            } => gen_ties(n, *mu_g, *sigma_g, seed, pop, rho, *directed),
            GraphKind::Chain => Ok(GeneratedGraph {
                graph: gen_chain(n)?,
                scale: 1.0,
                clamped: 0,
            }),
            GraphKind::EdgeList { path } => Ok(GeneratedGraph {
                graph: read_edge_list(path, n)?,
                scale: 1.0,
                clamped: 0,
            }),
        }
    }
}

/// Parses `src dst weight` lines (0-based, `#` comments). A line means `src`
/// influences `dst`, i.e. it sets `g[dst][src] = weight`.
pub fn parse_edge_list(text: &str, n: usize, origin: &str) -> Result<SocialGraph> {
    let mut g = Matrix::zeros(n);
    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::EdgeList {
            path: origin.to_string(),
            line: lineno + 1,
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected `src dst weight`, got {} fields", fields.len())));
        }
        let src: usize = fields[0].parse().map_err(|_| err(format!("bad src `{}`", fields[0])))?;
        let dst: usize = fields[1].parse().map_err(|_| err(format!("bad dst `{}`", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad weight `{}`", fields[2])))?;
        if src >= n || dst >= n {
            return Err(err(format!("index out of range for n = {n}")));
        }
        if src == dst {
            return Err(err("self-loop".into()));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(err(format!("weight {w} must be nonnegative")));
        }
        if !seen.insert((src, dst)) {
            return Err(err(format!("duplicate edge {src} -> {dst}")));
        }
        g[(dst, src)] = w;
    }
    SocialGraph::new(g)
}

pub fn read_edge_list(path: &Path, n: usize) -> Result<SocialGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, n, &path.display().to_string())
}

/// Serialises the nonzero ties in the edge-list format.
pub fn format_edge_list(graph: &SocialGraph) -> String {
    let n = graph.len();
    let mut out = format!("# n = {n}\n# src dst weight  (src influences dst)\n");
    for dst in 0..n {
        for src in 0..n {
            let w = graph.get(dst, src);
            if w != 0.0 {
                let _ = writeln!(out, "{src} {dst} {w}");
            }
        }
    }
    out
}
