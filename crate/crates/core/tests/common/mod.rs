#![allow(dead_code)]

use crowdgame::experiments::config::{PopulationSpec, PositiveNormal};
use crowdgame::graphs::{gen_independent_ties, gen_normal_ties};
use crowdgame::stage1::{discriminatory_reward, evaluate_mechanism, uniform_reward};
use crowdgame::stage2::Stage2Config;
use crowdgame::{MarketParams, MuPopulation, RewardSchedule, SocialGraph};

#[derive(Clone)]
pub struct Case {
    pub pop: MuPopulation,
    pub graph: SocialGraph,
    pub market: MarketParams,
}

pub fn normal_pop(n: usize, a: (f64, f64), b: (f64, f64), quad: Option<(f64, f64)>, seed: u64) -> MuPopulation {
    PopulationSpec {
        n,
        a: PositiveNormal { mean: a.0, var: a.1 },
        b: PositiveNormal { mean: b.0, var: b.1 },
        quad_cost: quad.map(|(mean, var)| PositiveNormal { mean, var }),
    }
    .sample(seed)
    .unwrap()
}

/// Population and ties drawn with the default experimental economics.
pub fn default_case(n: usize, seed: u64) -> Case {
    let pop = normal_pop(n, (15.0, 2.0), (15.0, 2.0), None, seed);
    let graph = gen_normal_ties(n, 0.05, 1.0, seed + 1_000_000, &pop, Some(0.95))
        .unwrap()
        .graph;
    Case {
        pop,
        graph,
        market: MarketParams::new(0.1, 20.0, 0.05, 15.0).unwrap(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Symmetric,
    Directed,
    QuadraticCost,
}

/// Instances whose optimal rewards leave every MU strictly participating.
pub fn rich_case(n: usize, seed: u64, variant: Variant) -> Case {
    let (pop, market) = match variant {
        Variant::QuadraticCost => (
            normal_pop(n, (5.0, 1.0), (2.0, 0.1), Some((1.0, 0.1)), seed),
            MarketParams::new(1.0, 20.0, 0.05, 0.0).unwrap(),
        ),
        _ => (
            normal_pop(n, (20.0, 2.0), (15.0, 2.0), None, seed),
            MarketParams::new(1.0, 20.0, 0.05, 15.0).unwrap(),
        ),
    };
    let gseed = seed + 2_000_000;
    let graph = match variant {
        Variant::Directed => gen_independent_ties(n, 0.5, 1.0, gseed, &pop, Some(0.95)),
        Variant::QuadraticCost => gen_normal_ties(n, 0.1, 0.3, gseed, &pop, Some(0.95)),
        Variant::Symmetric => gen_normal_ties(n, 0.5, 1.0, gseed, &pop, Some(0.95)),
    }
    .unwrap()
    .graph;
    Case { pop, graph, market }
}

pub fn revenue_at(case: &Case, r: RewardSchedule) -> f64 {
    evaluate_mechanism(&case.pop, &case.graph, &case.market, &r, &Stage2Config::default())
        .unwrap()
        .revenue
}

pub fn uniform_scalar(case: &Case) -> f64 {
    match uniform_reward(&case.pop, &case.graph, &case.market, &Stage2Config::default()).unwrap() {
        RewardSchedule::Uniform(r) => r,
        other => panic!("expected uniform, got {other:?}"),
    }
}

pub fn disc_vector(case: &Case) -> Vec<f64> {
    match discriminatory_reward(&case.pop, &case.graph, &case.market, &Stage2Config::default()).unwrap() {
        RewardSchedule::Discriminatory(r) => r,
        other => panic!("expected discriminatory, got {other:?}"),
    }
}

/// True when both optimal schedules induce strictly positive participation.
pub fn is_interior(case: &Case) -> bool {
    let cfg = Stage2Config::default();
    [
        RewardSchedule::Uniform(uniform_scalar(case)),
        RewardSchedule::Discriminatory(disc_vector(case)),
    ]
    .into_iter()
    .all(|r| {
        evaluate_mechanism(&case.pop, &case.graph, &case.market, &r, &cfg)
            .unwrap()
            .diagnostics
            .interior
    })
}
