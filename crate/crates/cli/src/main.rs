use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdgame::experiments::report::{emit_with, format_real, write_complete_table, write_type_table};
use crowdgame::experiments::run::{build_instance, graph_seed, solve_bayesian, solve_complete, MechanismResult};
use crowdgame::experiments::{emit_csv, run_scenario, Mechanism, ScenarioConfig};
use crowdgame::graphs::{format_edge_list, sample_configuration_network};
use crowdgame::{validate_assumption1, Error, RewardSchedule};

#[derive(Parser)]
#[command(
    name = "crowdgame",
    version,
    about = "Incentive design for socially-aware crowdsensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal rewards and equilibrium for one complete-information instance.
    SolveComplete(Common),
    /// Optimal rewards for the degree-distribution (Bayesian) game.
    SolveBayesian(Common),
    /// Run every (sweep value, seed) pair and write one CSV row each.
    Sweep(Common),
    /// Write the social graph for one seed as an edge list.
    GraphGen(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    /// Replaces the first seed listed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Uniform,
    Disc,
    Both,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Self {
        match m {
            MechanismArg::Uniform => Mechanism::Uniform,
            MechanismArg::Disc => Mechanism::Discriminatory,
            MechanismArg::Both => Mechanism::Both,
        }
    }
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Io { .. } | Error::EdgeList { .. } => {
                Failure::Config(e.to_string())
            }
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    cfg.set_epsilon(common.epsilon);
    if let Some(m) = common.mechanism {
        cfg.set_mechanism(m.into());
    }
    if let Some(seed) = common.seed {
        cfg.seeds_mut()[0] = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn mode_error(want: &str) -> Failure {
    Failure::Config(format!("this subcommand needs a config with \"mode\": \"{want}\""))
}

fn print_mechanism(name: &str, m: &MechanismResult) {
    let o = &m.outcome;
    match &o.rewards {
        RewardSchedule::Uniform(r) => println!("{name}: reward {r:.6}"),
        RewardSchedule::Discriminatory(r) => {
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!("{name}: rewards in [{lo:.6}, {hi:.6}]");
        }
        RewardSchedule::TypeIndexed(_) => {}
    }
    println!(
        "  revenue {:.6} (unprojected {:.6}), total utility {:.6}, paid {:.6}",
        o.revenue,
        m.revenue_unprojected,
        o.total_utility(),
        o.total_reward_paid()
    );
    println!(
        "  interior {}, method {:?}, iterations {}, residual {:.3e}",
        o.diagnostics.interior, o.diagnostics.method, o.diagnostics.iterations, o.diagnostics.residual_inf_norm
    );
    if o.diagnostics.negative_rewards {
        println!("  warning: schedule contains negative rewards");
    }
}

fn solve_complete_cmd(common: &Common) -> Result<bool, Failure> {
    let ScenarioConfig::Complete(cfg) = load(common)? else {
        return Err(mode_error("complete"));
    };
    let rep = solve_complete(&cfg, cfg.seeds[0])?;
    let rho = validate_assumption1(&rep.instance.pop, &rep.instance.generated.graph);
    println!(
        "n = {}, seed = {}, worst row ratio {:.4}, tie scale {:.4}",
        rep.instance.pop.len(),
        cfg.seeds[0],
        rho.worst_row_ratio,
        rep.instance.generated.scale
    );
    if let Some(u) = &rep.uniform {
        print_mechanism("uniform", u);
    }
    if let Some(d) = &rep.discriminatory {
        print_mechanism("discriminatory", d);
    }
    if let Some(out) = &common.out {
        emit_with(out, |w| write_complete_table(&rep, w))?;
    }
    Ok(true)
}

fn solve_bayesian_cmd(common: &Common) -> Result<bool, Failure> {
    let ScenarioConfig::Bayesian(cfg) = load(common)? else {
        return Err(mode_error("bayesian"));
    };
    let rep = solve_bayesian(&cfg)?;
    if let (Some(r), Some(u)) = (rep.uniform_reward, &rep.uniform) {
        println!("uniform: reward {r:.6}, expected revenue {:.6}", u.expected_revenue);
    }
    if let Some(d) = &rep.discriminatory {
        println!(
            "discriminatory: expected revenue {:.6}, r_bar {:.6}, psi {:.6}",
            d.expected_revenue,
            d.rewards.r_bar(),
            d.rewards.psi()
        );
        if !d.participation.interior {
            println!("  warning: some types have negative participation");
        }
    }
    if let Some(out) = &common.out {
        emit_with(out, |w| write_type_table(&rep, w))?;
    }
    Ok(true)
}

fn sweep_cmd(common: &Common) -> Result<bool, Failure> {
    let cfg = load(common)?;
    let res = run_scenario(&cfg)?;
    match &common.out {
        Some(path) => emit_csv(&res, path)?,
        None => {
            let text = crowdgame::experiments::report::to_csv_string(&res);
            io::stdout().write_all(text.as_bytes())?;
        }
    }
    let failed = res.failures();
    eprintln!("{} rows, {} failed", res.rows.len(), failed);
    for row in res.rows.iter().filter(|r| r.is_error()) {
        let value = row.sweep_value.map(format_real).unwrap_or_default();
        eprintln!(
            "  value {value} seed {}: {}",
            row.seed,
            row.error.as_deref().unwrap_or("")
        );
    }
    Ok(failed == 0)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
            w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn graph_gen_cmd(common: &Common) -> Result<bool, Failure> {
    let cfg = load(common)?;
    let seed = cfg.seeds()[0];
    let text = match &cfg {
        ScenarioConfig::Complete(c) => {
            let inst = build_instance(c, seed)?;
            let rho = validate_assumption1(&inst.pop, &inst.generated.graph);
            eprintln!(
                "worst row ratio {:.4}, tie scale {:.4}, clamped draws {}",
                rho.worst_row_ratio, inst.generated.scale, inst.generated.clamped
            );
            format_edge_list(&inst.generated.graph)
        }
        ScenarioConfig::Bayesian(b) => {
            let dm = b.degrees.build()?;
            let sample = sample_configuration_network(&dm, b.n, graph_seed(seed))?;
            eprintln!("repair swaps {}", sample.swaps);
            format_edge_list(&sample.graph)
        }
    };
    write_text(common.out.as_deref(), &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SolveComplete(c) => solve_complete_cmd(c),
        Command::SolveBayesian(c) => solve_bayesian_cmd(c),
        Command::Sweep(c) => sweep_cmd(c),
        Command::GraphGen(c) => graph_gen_cmd(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
    }
}
