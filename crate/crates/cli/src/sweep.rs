//! One-parameter sweeps written as a single CSV table.

use std::time::Instant;

use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig, SweepConfig, SweepParameter};
use crate::error::CliError;
use crate::experiments::{self, Outcome};
use crate::report::{Cell, Check, Table};
use crate::{assemble, resolve_run, Assembled, Finished, Overrides};

pub const COLUMNS: [&str; 7] = ["parameter", "value", "estimate", "stderr", "target", "band", "pass"];

fn parameter_name(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Hurst => "hurst",
        SweepParameter::Eps => "eps",
        SweepParameter::Level => "level",
    }
}

enum Plan {
    /// The experiment takes the whole ladder in one run.
    Ladder(RunConfig),
    Points(Vec<RunConfig>),
}

fn with_field(base: &Value, field: &str, v: Value) -> Value {
    let mut b = base.clone();
    if let Some(obj) = b.as_object_mut() {
        obj.insert(field.into(), v);
    }
    b
}

fn as_level(v: f64) -> Result<u32, CliError> {
    if v.fract() != 0.0 || !(1.0..=30.0).contains(&v) {
        return Err(CliError::Config(format!("level {v} must be a positive integer")));
    }
    Ok(v as u32)
}

fn point_config(base: &Value, experiment: &str, p: SweepParameter, v: f64) -> Result<Value, CliError> {
    let unsupported = || CliError::Config(format!("parameter {} cannot be swept for {experiment}", parameter_name(p)));
    Ok(match (p, experiment) {
        (SweepParameter::Hurst, "coutin-qian") => with_field(base, "hurst", json!(v)),
        (SweepParameter::Hurst, "lift" | "young2d" | "cm-embedding") => return Err(unsupported()),
        (SweepParameter::Hurst, _) => with_field(base, "kernel", json!(format!("fbm:H={v}"))),
        (SweepParameter::Level, "lift") => return Err(unsupported()),
        (SweepParameter::Level, "young2d") => with_field(base, "levels", json!(as_level(v)?)),
        (SweepParameter::Level, _) => with_field(base, "grid", json!(as_level(v)?)),
        (SweepParameter::Eps, _) => return Err(unsupported()),
    })
}

fn plan(s: &SweepConfig, o: &Overrides) -> Result<(RunConfig, Plan), CliError> {
    let base = resolve_run(RunConfig::from_value(s.base.clone())?, o)?;
    let name = base.experiment.name();
    let base_value = serde_json::to_value(&base.experiment).expect("serializable config");
    let parse = |v: Value| -> Result<RunConfig, CliError> { resolve_run(RunConfig::from_value(v)?, o) };
    let ladder = match (s.parameter, name) {
        (SweepParameter::Hurst, "weak-limit") => Some(with_field(&base_value, "hurst", json!(s.values))),
        (SweepParameter::Eps, "perturbation") => Some(with_field(&base_value, "eps", json!(s.values))),
        (SweepParameter::Level, "dyadic-convergence") => {
            let levels = s.values.iter().map(|&v| as_level(v)).collect::<Result<Vec<_>, _>>()?;
            if levels.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(CliError::Config("dyadic levels must be consecutive and increasing".into()));
            }
            match (levels.first(), levels.last()) {
                (Some(&a), Some(&b)) => Some(with_field(&with_field(&base_value, "first", json!(a)), "last", json!(b))),
                _ => None,
            }
        }
        _ => None,
    };
    if let Some(v) = ladder {
        return Ok((base, Plan::Ladder(parse(v)?)));
    }
    let points = s
        .values
        .iter()
        .map(|&v| parse(point_config(&base_value, name, s.parameter, v)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((base, Plan::Points(points)))
}

fn row(
    param: &str,
    value: Cell,
    estimate: f64,
    stderr: Option<f64>,
    target: Option<f64>,
    band: Option<f64>,
    pass: bool,
) -> Vec<Cell> {
    vec![param.into(), value, estimate.into(), stderr.into(), target.into(), band.into(), pass.into()]
}

/// Rows of a ladder run: each point must improve on the previous one.
fn ladder_rows(exp: &Experiment, out: &Outcome, table: &mut Table) -> Vec<Check> {
    let r = &out.result;
    let num = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
    let mut checks = out.checks.clone();
    let monotone = |table: &mut Table, param: &str, pts: Vec<(f64, f64, f64, Option<f64>, Option<f64>, bool)>| {
        let mut prev = f64::INFINITY;
        for (value, est, se, target, band, last_ok) in pts {
            let key = target.map_or(est, |t| (est - t).abs());
            table.push(row(param, value.into(), est, Some(se), target, band, key < prev && last_ok));
            prev = key;
        }
    };
    match exp {
        Experiment::DyadicConvergence(_) => {
            let pts = r["levels"]
                .as_array()
                .into_iter()
                .flatten()
                .zip(r["distances"].as_array().into_iter().flatten())
                .map(|(l, d)| (num(l), num(&d["mean"]), num(&d["stderr"]), None, None, true))
                .collect();
            monotone(table, "level", pts);
            let slope = num(&r["mean_slope"]);
            table.push(row("slope", Cell::Empty, slope, None, None, Some(-0.1), slope <= -0.1));
        }
        Experiment::Perturbation(_) => {
            let pts = r["rows"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|w| (num(&w["eps"]), num(&w["distance"]["mean"]), num(&w["distance"]["stderr"]), None, None, true))
                .collect();
            monotone(table, "eps", pts);
            let theta = num(&r["theta_hat"]);
            table.push(row("theta", Cell::Empty, theta, None, None, Some(0.0), theta > 0.0));
        }
        Experiment::WeakLimit(c) => {
            let rows = r["rows"].as_array().cloned().unwrap_or_default();
            let target = num(&r["brownian_value"]);
            let n = rows.len();
            let pts = rows
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    let est = num(&w["estimate"]["mean"]);
                    let ok = i + 1 < n || (est - target).abs() < c.final_gap;
                    (num(&w["hurst"]), est, num(&w["estimate"]["stderr"]), Some(target), Some(c.final_gap), ok)
                })
                .collect();
            monotone(table, "hurst", pts);
        }
        _ => {}
    }
    for (i, cells) in table.rows.iter().enumerate() {
        if let Cell::Bool(false) = cells[6] {
            checks.push(Check::new(&format!("row-{i}"), false, "sweep row failed"));
        }
    }
    checks
}

/// Validates every sweep point before running any of them.
pub fn table(s: &SweepConfig, o: &Overrides) -> Result<Finished, CliError> {
    let (base, plan) = plan(s, o)?;
    let param = parameter_name(s.parameter);
    let stem = s.name.clone().unwrap_or_else(|| format!("{}-{param}-sweep", base.experiment.name()));
    let out_dir = o.out_dir(s.out_dir.as_ref());
    let pool = o.pool()?;
    let started = Instant::now();
    let mut t = Table::new("", &COLUMNS);
    let mut checks = Vec::new();
    let mut console = Vec::new();
    let mut results = Vec::new();
    if !s.values.is_empty() {
        match plan {
            Plan::Ladder(cfg) => {
                let out = pool.install(|| experiments::run(&cfg.experiment))?;
                checks = ladder_rows(&cfg.experiment, &out, &mut t);
                results.push(out.result);
            }
            Plan::Points(points) => {
                for (v, cfg) in s.values.iter().zip(&points) {
                    let out = pool.install(|| experiments::run(&cfg.experiment))?;
                    let h = &out.headline;
                    t.push(row(param, (*v).into(), h.estimate, h.stderr, h.target, h.band, out.pass()));
                    for c in &out.checks {
                        checks.push(Check { name: format!("{param}={v}:{}", c.name), ..c.clone() });
                    }
                    console.push(format!("{param} = {v}: {}", if out.pass() { "pass" } else { "FAIL" }));
                    results.push(out.result);
                }
            }
        }
    }
    let config = json!({
        "base": serde_json::to_value(&base.experiment).expect("serializable config"),
        "parameter": param,
        "values": s.values,
    });
    let (artifacts, pass) = assemble(Assembled {
        kind: "table",
        experiment: base.experiment.name().to_string(),
        stem,
        seed: base.experiment.seed(),
        config,
        checks: checks.clone(),
        tables: vec![t],
        result: Value::Array(results),
        workers: pool.current_num_threads(),
        started: &started,
    });
    Ok(Finished { out_dir, artifacts, checks, pass, console })
}
