//! Seeded scenario execution.

use serde::Serialize;

use super::config::{BayesianConfig, CompleteConfig, ScenarioConfig};
use crate::bayesian::{
    bayesian_discriminatory_reward, bayesian_uniform_reward, equilibrium_participation, expected_revenue,
    BayesianScenario, ParticipationTable, TypeTable,
};
use crate::error::Result;
use crate::graphs::GeneratedGraph;
use crate::model::{revenue_with, EquilibriumOutcome, MuPopulation, RewardSchedule};
use crate::par::{self, Execution};
use crate::stage1::{discriminatory_reward, evaluate_mechanism, uniform_reward};
use crate::stage2::{unprojected_participation, Stage2Config};

/// Population and graph are drawn from independent streams of one seed.
const GRAPH_STREAM: u64 = 0xA076_1D64_78BD_642F;

pub fn graph_seed(seed: u64) -> u64 {
    seed ^ GRAPH_STREAM
}

/// A concrete complete-information instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub pop: MuPopulation,
    pub generated: GeneratedGraph,
    pub cfg: CompleteConfig,
}

pub fn build_instance(cfg: &CompleteConfig, seed: u64) -> Result<Instance> {
    let pop = cfg.population.sample(seed)?;
    let generated = cfg.graph.generate(&pop, graph_seed(seed))?;
    Ok(Instance {
        pop,
        generated,
        cfg: cfg.clone(),
    })
}

/// Optimal reward under one mechanism and the equilibrium it induces.
#[derive(Debug, Clone)]
pub struct MechanismResult {
    pub outcome: EquilibriumOutcome,
    /// Revenue along the unconstrained equilibrium the closed form assumes.
    pub revenue_unprojected: f64,
}

#[derive(Debug, Clone)]
pub struct CompleteReport {
    pub instance: Instance,
    pub uniform: Option<MechanismResult>,
    pub discriminatory: Option<MechanismResult>,
}

fn mechanism_result(inst: &Instance, rewards: RewardSchedule, s2: &Stage2Config) -> Result<MechanismResult> {
    let (pop, graph, market) = (&inst.pop, &inst.generated.graph, &inst.cfg.market);
    let outcome = evaluate_mechanism(pop, graph, market, &rewards, s2)?;
    let raw = unprojected_participation(pop, graph, market, &rewards, s2)?;
    let r = rewards.per_mu(pop.len())?;
    Ok(MechanismResult {
        revenue_unprojected: revenue_with(&raw, &r, market),
        outcome,
    })
}

pub fn solve_complete(cfg: &CompleteConfig, seed: u64) -> Result<CompleteReport> {
    let instance = build_instance(cfg, seed)?;
    let s2 = Stage2Config::with_epsilon(cfg.epsilon);
    let (pop, graph, market) = (&instance.pop, &instance.generated.graph, &cfg.market);
    let uniform = match cfg.mechanism.uniform() {
        true => Some(mechanism_result(
            &instance,
            uniform_reward(pop, graph, market, &s2)?,
            &s2,
        )?),
        false => None,
    };
    let discriminatory = match cfg.mechanism.discriminatory() {
        true => Some(mechanism_result(
            &instance,
            discriminatory_reward(pop, graph, market, &s2)?,
            &s2,
        )?),
        false => None,
    };
    Ok(CompleteReport {
        instance,
        uniform,
        discriminatory,
    })
}

#[derive(Debug, Clone)]
pub struct BayesianMechanism {
    pub rewards: TypeTable,
    pub participation: ParticipationTable,
    pub expected_revenue: f64,
    /// Expected utility of one MU, `E[x²] / 2` under the normalisation.
    pub expected_utility: f64,
    /// Expected reward paid to one MU, `E[r x]`.
    pub expected_reward: f64,
}

#[derive(Debug, Clone)]
pub struct BayesianReport {
    pub scenario_cfg: BayesianConfig,
    pub uniform_reward: Option<f64>,
    pub uniform: Option<BayesianMechanism>,
    pub discriminatory: Option<BayesianMechanism>,
}

fn bayesian_mechanism(cfg: &BayesianConfig, rewards: RewardSchedule) -> Result<BayesianMechanism> {
    let dm = cfg.degrees.build()?;
    let scn = BayesianScenario::new(dm, cfg.market, rewards)?;
    let table = scn.reward_table()?;
    let participation = equilibrium_participation(&scn)?;
    let (p, h) = (scn.dm.p_out(), scn.dm.h_in());
    let (mut utility, mut paid) = (0.0, 0.0);
    for k in scn.dm.support() {
        for l in scn.dm.support() {
            let w = p[k] * h[l];
            let x = participation.get(k, l);
            utility += w * 0.5 * x * x;
            paid += w * table.get(k, l) * x;
        }
    }
    Ok(BayesianMechanism {
        expected_revenue: expected_revenue(&scn)?,
        rewards: table,
        participation,
        expected_utility: utility,
        expected_reward: paid,
    })
}

pub fn solve_bayesian(cfg: &BayesianConfig) -> Result<BayesianReport> {
    let dm = cfg.degrees.build()?;
    let (uniform_reward, uniform) = if cfg.mechanism.uniform() {
        let r = bayesian_uniform_reward(&dm, &cfg.market)?;
        (Some(r), Some(bayesian_mechanism(cfg, RewardSchedule::Uniform(r))?))
    } else {
        (None, None)
    };
    let discriminatory = match cfg.mechanism.discriminatory() {
        true => {
            let table = bayesian_discriminatory_reward(&dm, &cfg.market)?;
            Some(bayesian_mechanism(cfg, RewardSchedule::TypeIndexed(table))?)
        }
        false => None,
    };
    Ok(BayesianReport {
        scenario_cfg: cfg.clone(),
        uniform_reward,
        uniform,
        discriminatory,
    })
}

/// One (sweep value, seed) result. Fields for a mechanism that was not
/// requested stay `None`. In Bayesian mode utilities and rewards are
/// per-MU expectations and `iterations` is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SweepRow {
    pub sweep_value: Option<f64>,
    pub seed: u64,
    pub uniform_reward: Option<f64>,
    pub revenue_uniform: Option<f64>,
    pub revenue_disc: Option<f64>,
    pub revenue_uniform_unprojected: Option<f64>,
    pub revenue_disc_unprojected: Option<f64>,
    pub total_utility_uniform: Option<f64>,
    pub total_utility_disc: Option<f64>,
    pub total_reward_uniform: Option<f64>,
    pub total_reward_disc: Option<f64>,
    pub interior_uniform: Option<bool>,
    pub interior_disc: Option<bool>,
    pub iterations: usize,
    pub graph_scale: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.is_error()).count()
    }
}

fn complete_row(cfg: &CompleteConfig, value: Option<f64>, seed: u64) -> Result<SweepRow> {
    let point = match value {
        Some(v) => cfg.at(v)?,
        None => cfg.clone(),
    };
    let rep = solve_complete(&point, seed)?;
    let mut row = SweepRow {
        sweep_value: value,
        seed,
        graph_scale: Some(rep.instance.generated.scale),
        ..SweepRow::default()
    };
    if let Some(u) = &rep.uniform {
        if let RewardSchedule::Uniform(r) = u.outcome.rewards {
            row.uniform_reward = Some(r);
        }
        row.revenue_uniform = Some(u.outcome.revenue);
        row.revenue_uniform_unprojected = Some(u.revenue_unprojected);
        row.total_utility_uniform = Some(u.outcome.total_utility());
        row.total_reward_uniform = Some(u.outcome.total_reward_paid());
        row.interior_uniform = Some(u.outcome.diagnostics.interior);
        row.iterations += u.outcome.diagnostics.iterations;
    }
    if let Some(d) = &rep.discriminatory {
        row.revenue_disc = Some(d.outcome.revenue);
        row.revenue_disc_unprojected = Some(d.revenue_unprojected);
        row.total_utility_disc = Some(d.outcome.total_utility());
        row.total_reward_disc = Some(d.outcome.total_reward_paid());
        row.interior_disc = Some(d.outcome.diagnostics.interior);
        row.iterations += d.outcome.diagnostics.iterations;
    }
    Ok(row)
}

fn bayesian_row(cfg: &BayesianConfig, value: Option<f64>, seed: u64) -> Result<SweepRow> {
    let point = match value {
        Some(v) => cfg.at(v)?,
        None => cfg.clone(),
    };
    let rep = solve_bayesian(&point)?;
    let mut row = SweepRow {
        sweep_value: value,
        seed,
        uniform_reward: rep.uniform_reward,
        ..SweepRow::default()
    };
    if let Some(u) = &rep.uniform {
        row.revenue_uniform = Some(u.expected_revenue);
        row.revenue_uniform_unprojected = Some(u.expected_revenue);
        row.total_utility_uniform = Some(u.expected_utility);
        row.total_reward_uniform = Some(u.expected_reward);
        row.interior_uniform = Some(u.participation.interior);
    }
    if let Some(d) = &rep.discriminatory {
        row.revenue_disc = Some(d.expected_revenue);
        row.revenue_disc_unprojected = Some(d.expected_revenue);
        row.total_utility_disc = Some(d.expected_utility);
        row.total_reward_disc = Some(d.expected_reward);
        row.interior_disc = Some(d.participation.interior);
    }
    Ok(row)
}

/// Runs every (sweep value, seed) pair in parallel.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SweepResult> {
    run_scenario_with(cfg, Execution::Parallel)
}

/// Rows come back ordered by grid position, then seed order, whatever the
/// execution strategy. Row-level solver errors are recorded, not raised.
pub fn run_scenario_with(cfg: &ScenarioConfig, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let jobs: Vec<(Option<f64>, u64)> = cfg
        .grid()
        .into_iter()
        .flat_map(|v| cfg.seeds().iter().map(move |&s| (v, s)))
        .collect();
    let rows = par::map(&jobs, exec, |&(value, seed)| {
        let res = match cfg {
            ScenarioConfig::Complete(c) => complete_row(c, value, seed),
            ScenarioConfig::Bayesian(b) => bayesian_row(b, value, seed),
        };
        res.unwrap_or_else(|e| SweepRow {
            sweep_value: value,
            seed,
            error: Some(e.to_string()),
            ..SweepRow::default()
        })
    });
    Ok(SweepResult { rows })
}
