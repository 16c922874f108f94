//! CSV output for sweep results.

use std::io::Write;
use std::path::Path;

use super::run::{BayesianReport, CompleteReport, SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const HEADER: [&str; 16] = [
    "sweep_value",
    "seed",
    "uniform_reward",
    "revenue_uniform",
    "revenue_disc",
    "revenue_uniform_unprojected",
    "revenue_disc_unprojected",
    "total_utility_uniform",
    "total_utility_disc",
    "total_reward_uniform",
    "total_reward_disc",
    "interior_uniform",
    "interior_disc",
    "iterations",
    "graph_scale",
    "error",
];

/// 17 significant digits, so every value round-trips exactly.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn real(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn record(row: &SweepRow) -> [String; 16] {
    [
        real(row.sweep_value),
        row.seed.to_string(),
        real(row.uniform_reward),
        real(row.revenue_uniform),
        real(row.revenue_disc),
        real(row.revenue_uniform_unprojected),
        real(row.revenue_disc_unprojected),
        real(row.total_utility_uniform),
        real(row.total_utility_disc),
        real(row.total_reward_uniform),
        real(row.total_reward_disc),
        flag(row.interior_uniform),
        flag(row.interior_disc),
        row.iterations.to_string(),
        real(row.graph_scale),
        row.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(res: &SweepResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(HEADER)?;
    for row in &res.rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(res: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_csv(res, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(res, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn write_rows<W: Write>(header: &[&str], rows: Vec<Vec<String>>, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-MU table: parameters, rewards and equilibrium participation.
pub fn write_complete_table<W: Write>(rep: &CompleteReport, out: W) -> std::result::Result<(), csv::Error> {
    let pop = &rep.instance.pop;
    let n = pop.len();
    let per_mu = |m: &Option<super::run::MechanismResult>| -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        match m {
            Some(m) => {
                let r = m.outcome.rewards.per_mu(n).unwrap_or_else(|_| vec![f64::NAN; n]);
                (
                    r.into_iter().map(Some).collect(),
                    m.outcome.x.iter().map(|&v| Some(v)).collect(),
                )
            }
            None => (vec![None; n], vec![None; n]),
        }
    };
    let (ru, xu) = per_mu(&rep.uniform);
    let (rd, xd) = per_mu(&rep.discriminatory);
    let rows = (0..n)
        .map(|i| {
            vec![
                i.to_string(),
                format_real(pop.a()[i]),
                format_real(pop.b()[i]),
                real(pop.quad_cost().map(|c| c[i])),
                real(ru[i]),
                real(xu[i]),
                real(rd[i]),
                real(xd[i]),
            ]
        })
        .collect();
    write_rows(
        &[
            "mu",
            "a",
            "b",
            "quad_cost",
            "reward_uniform",
            "x_uniform",
            "reward_disc",
            "x_disc",
        ],
        rows,
        out,
    )
}

/// Per-type table over the degree support, restricted to types with
/// positive probability.
pub fn write_type_table<W: Write>(rep: &BayesianReport, out: W) -> std::result::Result<(), csv::Error> {
    let dm = match rep.scenario_cfg.degrees.build() {
        Ok(dm) => dm,
        Err(_) => return write_rows(&["k", "l"], vec![], out),
    };
    let (p, h) = (dm.p_out(), dm.h_in());
    let mut rows = Vec::new();
    for k in dm.support() {
        for l in dm.support() {
            if p[k] * h[l] == 0.0 {
                continue;
            }
            let pick = |m: &Option<super::run::BayesianMechanism>,
                        f: &dyn Fn(&super::run::BayesianMechanism) -> f64| {
                real(m.as_ref().map(f))
            };
            rows.push(vec![
                k.to_string(),
                l.to_string(),
                format_real(p[k]),
                format_real(h[l]),
                pick(&rep.uniform, &|m| m.rewards.get(k, l)),
                pick(&rep.uniform, &|m| m.participation.get(k, l)),
                pick(&rep.discriminatory, &|m| m.rewards.get(k, l)),
                pick(&rep.discriminatory, &|m| m.participation.get(k, l)),
            ]);
        }
    }
    write_rows(
        &[
            "k",
            "l",
            "p_out",
            "h_in",
            "reward_uniform",
            "x_uniform",
            "reward_disc",
            "x_disc",
        ],
        rows,
        out,
    )
}

pub fn emit_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(std::io::BufWriter<std::fs::File>) -> std::result::Result<(), csv::Error>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
