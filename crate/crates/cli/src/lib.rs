//! Configuration-driven experiment runner.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod sweep;

use std::path::PathBuf;
use std::time::Instant;

use config::RunConfig;
use error::CliError;
use report::{json_bytes, Artifact, Check, Report, Timing, SCHEMA_VERSION, TOOL_INFO};

pub const OUT_DIR_ENV: &str = "ROUGH_GAUSS_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "rough-gauss-out";

/// Command-line overrides shared by `run` and `table`.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Overrides {
    /// Flag, then config file, then the environment, then the default.
    pub fn out_dir(&self, from_config: Option<&PathBuf>) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| from_config.cloned())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(CliError::Config("workers must be positive".into()));
            }
            b = b.num_threads(w);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Everything a finished run produces, not yet written to disk.
#[derive(Clone, Debug)]
pub struct Finished {
    pub out_dir: PathBuf,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub console: Vec<String>,
}

impl Finished {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }

    pub fn write(&self) -> Result<Vec<PathBuf>, CliError> {
        Ok(report::write_artifacts(&self.out_dir, &self.artifacts)?)
    }

    pub fn report(&self) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.file_name.ends_with(".json") && !a.file_name.ends_with(".timing.json"))
    }
}

/// Applies the seed override and checks that randomized experiments have a
/// seed.
pub fn resolve_run(mut cfg: RunConfig, o: &Overrides) -> Result<RunConfig, CliError> {
    let name = cfg.experiment.name();
    match cfg.experiment.seed_mut() {
        Some(seed) => {
            if o.seed.is_some() {
                *seed = o.seed;
            }
            if seed.is_none() {
                return Err(CliError::Config(format!("experiment {name} is randomized and needs an explicit seed")));
            }
        }
        None => {}
    }
    Ok(cfg)
}

pub(crate) struct Assembled<'a> {
    pub kind: &'static str,
    pub experiment: String,
    pub stem: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    pub tables: Vec<report::Table>,
    pub result: serde_json::Value,
    pub workers: usize,
    pub started: &'a Instant,
}

pub(crate) fn assemble(a: Assembled<'_>) -> (Vec<Artifact>, bool) {
    let pass = a.checks.iter().all(|c| c.pass);
    let timing_name = format!("{}.timing.json", a.stem);
    let mut artifacts: Vec<Artifact> =
        a.tables.iter().map(|t| Artifact { file_name: t.file_name(&a.stem), bytes: t.to_csv() }).collect();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: TOOL_INFO,
        kind: a.kind,
        experiment: a.experiment.clone(),
        seed: a.seed,
        config: a.config.clone(),
        pass,
        checks: a.checks.clone(),
        tables: artifacts.iter().map(|t| t.file_name.clone()).collect(),
        timing: timing_name.clone(),
        result: a.result,
    };
    artifacts.insert(0, Artifact { file_name: format!("{}.json", a.stem), bytes: json_bytes(&report) });
    let timing = Timing {
        schema_version: SCHEMA_VERSION,
        tool: TOOL_INFO,
        experiment: a.experiment,
        seed: a.seed,
        config: a.config,
        pass,
        checks: a.checks,
        workers: a.workers,
        wall_clock_seconds: a.started.elapsed().as_secs_f64(),
    };
    artifacts.push(Artifact { file_name: timing_name, bytes: json_bytes(&timing) });
    (artifacts, pass)
}

/// Runs one experiment inside a pool of the requested size.
pub fn run(cfg: RunConfig, o: &Overrides) -> Result<Finished, CliError> {
    let cfg = resolve_run(cfg, o)?;
    let out_dir = o.out_dir(cfg.out_dir.as_ref());
    let pool = o.pool()?;
    let started = Instant::now();
    let outcome = pool.install(|| experiments::run(&cfg.experiment))?;
    let config = serde_json::to_value(&cfg.experiment).expect("serializable config");
    let (artifacts, pass) = assemble(Assembled {
        kind: "run",
        experiment: cfg.experiment.name().to_string(),
        stem: cfg.stem(),
        seed: cfg.experiment.seed(),
        config,
        checks: outcome.checks.clone(),
        tables: outcome.tables,
        result: outcome.result,
        workers: pool.current_num_threads(),
        started: &started,
    });
    Ok(Finished { out_dir, artifacts, checks: outcome.checks, pass, console: outcome.console })
}

/// Turns `--key value` pairs into a config object; values that parse as
/// JSON are taken as such, comma lists of numbers become arrays, anything
/// else is a string. Returns the remaining global overrides.
pub fn config_from_flags(experiment: &str, args: &[String]) -> Result<(RunConfig, Overrides), CliError> {
    let mut obj = serde_json::Map::new();
    obj.insert("experiment".into(), experiment.into());
    let mut o = Overrides::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| CliError::Config(format!("expected --flag, found {arg:?}")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Config(format!("flag --{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        let bad = |what: &str| CliError::Config(format!("--{key}: {what}"));
        match key.as_str() {
            "seed" => o.seed = Some(value.parse().map_err(|_| bad("not an unsigned integer"))?),
            "workers" => o.workers = Some(value.parse().map_err(|_| bad("not an unsigned integer"))?),
            "out-dir" => o.out_dir = Some(PathBuf::from(value)),
            _ => {
                let field = key.replace('-', "_");
                if obj.insert(field, flag_value(&value)).is_some() {
                    return Err(bad("given twice"));
                }
            }
        }
    }
    Ok((RunConfig::from_value(serde_json::Value::Object(obj))?, o))
}

fn flag_value(v: &str) -> serde_json::Value {
    if let Ok(j) = serde_json::from_str::<serde_json::Value>(v) {
        if !j.is_string() {
            return j;
        }
    }
    if v.contains(',') {
        let nums: Option<Vec<serde_json::Value>> = v
            .split(',')
            .map(|p| serde_json::from_str::<serde_json::Value>(p.trim()).ok().filter(|x| x.is_number()))
            .collect();
        if let Some(nums) = nums {
            return serde_json::Value::Array(nums);
        }
    }
    serde_json::Value::String(v.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_become_config() {
        let args: Vec<String> = ["--kernel", "fbm:H=0.4", "--grid", "8", "--samples=100", "--seed", "42"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (cfg, o) = config_from_flags("level2-variance", &args).unwrap();
        assert_eq!(o.seed, Some(42));
        let v = serde_json::to_value(&cfg).unwrap();
        assert_eq!(v["kernel"], "fbm:H=0.4");
        assert_eq!(v["grid"], 8);
        assert_eq!(v["samples"], 100);
    }

    #[test]
    fn list_flags() {
        assert_eq!(flag_value("0.2,0.1"), serde_json::json!([0.2, 0.1]));
        assert_eq!(flag_value("ou:theta=1,sigma=2"), serde_json::json!("ou:theta=1,sigma=2"));
        assert_eq!(flag_value("[4, 6]"), serde_json::json!([4, 6]));
        assert_eq!(flag_value("true"), serde_json::json!(true));
    }

    #[test]
    fn bad_flags() {
        let a = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(config_from_flags("grr", &a(&["--grid"])).is_err());
        assert!(config_from_flags("grr", &a(&["grid", "3"])).is_err());
        assert!(config_from_flags("grr", &a(&["--bogus", "3"])).is_err());
        assert!(config_from_flags("grr", &a(&["--grid", "3", "--grid", "4"])).is_err());
    }

    #[test]
    fn seed_required_for_random_runs() {
        let cfg = RunConfig::from_json(r#"{"experiment": "fernique"}"#).unwrap();
        assert!(resolve_run(cfg.clone(), &Overrides::default()).is_err());
        let o = Overrides { seed: Some(1), ..Default::default() };
        assert_eq!(resolve_run(cfg, &o).unwrap().experiment.seed(), Some(1));
        let det = RunConfig::from_json(r#"{"experiment": "coutin-qian"}"#).unwrap();
        assert!(resolve_run(det, &Overrides::default()).is_ok());
    }
}
