use crowdgame::experiments::report::to_csv_string;
use crowdgame::experiments::{emit_csv, run_scenario, run_scenario_with, ScenarioConfig};
use crowdgame::par::Execution;

fn load(name: &str) -> ScenarioConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ScenarioConfig::load(&path).unwrap()
}

fn seed_mean(
    res: &crowdgame::experiments::SweepResult,
    value: f64,
    f: impl Fn(&crowdgame::experiments::SweepRow) -> Option<f64>,
) -> f64 {
    let xs: Vec<f64> = res
        .rows
        .iter()
        .filter(|r| r.sweep_value == Some(value))
        .filter_map(f)
        .collect();
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn csv_is_byte_identical_across_runs_and_strategies() {
    let cfg = load("tie_strength_sweep.json");
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    emit_csv(&run_scenario(&cfg).unwrap(), &a).unwrap();
    emit_csv(&run_scenario_with(&cfg, Execution::Sequential).unwrap(), &b).unwrap();
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn one_row_per_grid_point_and_seed_in_order() {
    let cfg = load("tie_strength_sweep.json");
    let res = run_scenario(&cfg).unwrap();
    let grid = cfg.grid();
    let seeds = cfg.seeds();
    assert_eq!(res.rows.len(), grid.len() * seeds.len());
    for (i, row) in res.rows.iter().enumerate() {
        assert_eq!(row.sweep_value, grid[i / seeds.len()]);
        assert_eq!(row.seed, seeds[i % seeds.len()]);
    }
    assert_eq!(res.failures(), 0);
}

#[test]
fn stronger_ties_raise_revenue() {
    let cfg = load("tie_strength_sweep.json");
    let res = run_scenario(&cfg).unwrap();
    let values: Vec<f64> = cfg.grid().into_iter().flatten().collect();
    for f in [
        |r: &crowdgame::experiments::SweepRow| r.revenue_uniform,
        |r: &crowdgame::experiments::SweepRow| r.revenue_disc,
    ] {
        let means: Vec<f64> = values.iter().map(|&v| seed_mean(&res, v, f)).collect();
        assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    }
    for row in &res.rows {
        assert!(row.revenue_disc.unwrap() >= row.revenue_uniform.unwrap() - 1e-9);
    }
}

#[test]
fn bayesian_reward_falls_across_degree_sweep() {
    let res = run_scenario(&load("bayesian_degree_sweep.json")).unwrap();
    let r: Vec<f64> = res.rows.iter().map(|row| row.uniform_reward.unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
}

#[test]
fn solver_errors_become_error_rows() {
    // gamma * k_max >= 1 at the larger mean degrees.
    let text = r#"{
        "mode": "bayesian",
        "degrees": {"k_bar": 5, "var_k": 1, "var_l": 1, "gamma": 0.05, "k_max": 30},
        "market": {"mu": 10, "s": 20, "t": 0.05, "c": 15},
        "sweep": {"variable": "k_bar", "values": [5, 25]},
        "seeds": [1, 2]
    }"#;
    let res = run_scenario(&ScenarioConfig::from_json(text).unwrap()).unwrap();
    assert_eq!(res.rows.len(), 4);
    assert_eq!(res.failures(), 4);
    let csv = to_csv_string(&res);
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains("social strength"));
}

#[test]
fn mechanism_selection_leaves_columns_empty() {
    let mut cfg = load("chain.json");
    cfg.set_mechanism(crowdgame::experiments::Mechanism::Uniform);
    let res = run_scenario(&cfg).unwrap();
    assert!(res.rows[0].revenue_uniform.is_some());
    assert!(res.rows[0].revenue_disc.is_none());
}
