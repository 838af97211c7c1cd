//! One function per experiment, each returning its result, checks and
//! tables.

use rayon::prelude::*;
use rough_gauss::cameron_martin::{embedding_check_against, kernel_variation, random_elements, CMElement};
use rough_gauss::covariance_models::{
    bm_cov, coutin_qian_check, dyadic_points, fbm_rhovar_bound_check, CovarianceKernel, KernelSpec, ProcessSpec,
};
use rough_gauss::gaussian_sim::{
    chaos_ratios, dyadic_convergence, ensemble_chaos_coordinates, fernique_tail, level2_variance_check,
    level_bounds_check, lift_ensemble, perturbation_continuity, weak_limit_fbm, young_wiener_check, SampleEnsemble,
};
use rough_gauss::path_lift::{GroupPath, PiecewisePath};
use rough_gauss::regularity_analysis::{grr_holder_check, grr_q0, GrrCheck};
use rough_gauss::tensor_algebra::{hall_log_signature, HallBasis};
use rough_gauss::variation_2d::{
    rho_prime_limit_check, rho_variation_with, young_bound_check, young_constant, young_refinement, VariationOptions,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;
use crate::report::{Check, Table};

/// Single summary statistic, used for sweep rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Headline {
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub target: Option<f64>,
    pub band: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub headline: Headline,
    /// Extra lines for the terminal.
    pub console: Vec<String>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

type Res<T> = Result<T, CliError>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable result")
}

fn seed_of(seed: Option<u64>, name: &str) -> Res<u64> {
    seed.ok_or_else(|| CliError::Config(format!("experiment {name} is randomized and needs an explicit seed")))
}

fn positive(name: &str, v: usize) -> Res<()> {
    if v == 0 {
        return Err(CliError::Config(format!("{name} must be positive")));
    }
    Ok(())
}

fn grid_level(level: u32, max: u32) -> Res<Vec<f64>> {
    if level == 0 || level > max {
        return Err(CliError::Config(format!("grid level {level} outside 1..={max}")));
    }
    Ok(dyadic_points(level))
}

fn process(kernel: &Kernel, dim: usize) -> Res<ProcessSpec> {
    positive("dim", dim)?;
    Ok(ProcessSpec::iid(kernel.build()?, dim)?)
}

pub fn run(exp: &Experiment) -> Res<Outcome> {
    match exp {
        Experiment::Lift(c) => lift(c),
        Experiment::Variation(c) => variation(c),
        Experiment::Young2d(c) => young2d(c),
        Experiment::Level2Variance(c) => level2_variance(c),
        Experiment::LevelBounds(c) => level_bounds(c),
        Experiment::DyadicConvergence(c) => dyadic(c),
        Experiment::Perturbation(c) => perturbation(c),
        Experiment::Fernique(c) => fernique(c),
        Experiment::YoungWiener(c) => young_wiener(c),
        Experiment::WeakLimit(c) => weak_limit(c),
        Experiment::CmEmbedding(c) => cm_embedding(c),
        Experiment::Grr(c) => grr(c),
        Experiment::ChaosRatio(c) => chaos_ratio(c),
        Experiment::CoutinQian(c) => coutin_qian(c),
    }
}

fn word_label(word: &[usize]) -> String {
    word.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(".")
}

fn lift(c: &LiftConfig) -> Res<Outcome> {
    let path =
        PiecewisePath::<f64>::load(&c.path).map_err(|e| CliError::Config(format!("{}: {e}", c.path.display())))?;
    let d = path.dim();
    let x = path.lift_s3();
    let sig = x.last().clone();
    let log = hall_log_signature(&sig)?;
    let basis = HallBasis::new(d);
    let t = sig.tensor();
    let scale = 1.0 + t.max_abs();

    let mut sig_table = Table::new("signature", &["level", "word", "value"]);
    for i in 0..d {
        sig_table.push(vec![1usize.into(), word_label(&[i]).into(), t.level1()[i].into()]);
    }
    for i in 0..d {
        for j in 0..d {
            sig_table.push(vec![2usize.into(), word_label(&[i, j]).into(), t.get2(i, j).into()]);
        }
    }
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                sig_table.push(vec![3usize.into(), word_label(&[i, j, k]).into(), t.get3(i, j, k).into()]);
            }
        }
    }
    let mut labels: Vec<String> = (0..d).map(|i| format!("{}", i + 1)).collect();
    labels.extend(basis.pairs().iter().map(|&(i, j)| format!("[{},{}]", i + 1, j + 1)));
    labels.extend(basis.triples().iter().map(|&(i, j, k)| format!("[{},[{},{}]]", i + 1, j + 1, k + 1)));
    let mut log_table = Table::new("log-signature", &["element", "coefficient"]);
    for (l, v) in labels.iter().zip(log.coords()) {
        log_table.push(vec![l.clone().into(), (*v).into()]);
    }

    let roundtrip = log.exp().tensor().max_abs_diff(t) / scale;
    let mid = x.len() / 2;
    let chen = (&x.increment_at(0, mid) * &x.increment_at(mid, x.len() - 1)).tensor().max_abs_diff(t) / scale;
    let checks = vec![
        Check::at_most("group-like", sig.shuffle_residual(), 1e-10),
        Check::at_most("exp-log-roundtrip", roundtrip, 1e-10),
        Check::at_most("chen", chen, 1e-10),
    ];

    let mut console = vec![format!("signature of {} ({} points, d = {d})", c.path.display(), path.len())];
    console.push(format!("  level 1: {:?}", t.level1()));
    console.push(format!("  level 2: {:?}", t.level2()));
    console.push(format!("  level 3: {:?}", t.level3()));
    console.push("log-signature in the Hall basis".into());
    for (l, v) in labels.iter().zip(log.coords()) {
        console.push(format!("  {l} = {v}"));
    }
    Ok(Outcome {
        result: json!({
            "dim": d,
            "points": path.len(),
            "signature": {"level1": t.level1(), "level2": t.level2(), "level3": t.level3()},
            "hall_basis": labels,
            "log_signature": log.coords(),
        }),
        checks,
        tables: vec![sig_table, log_table],
        headline: Headline { estimate: x.last().tensor().level_norm(1), ..Default::default() },
        console,
    })
}

fn variation(c: &VariationConfig) -> Res<Outcome> {
    let k = c.kernel.build()?;
    let grid = grid_level(c.grid, 10)?;
    let f = k.on_grid(&grid)?;
    let rho = c.rho.unwrap_or_else(|| k.rho());
    let v = rho_variation_with(&f, rho, f.full_rect(), c.mode, &VariationOptions::default())?;
    let prime = rho_prime_limit_check(&f, rho, f.full_rect(), 4)?;
    let mut checks = vec![
        Check::new("finite", v.value.is_finite() && v.value >= 0.0, format!("value {}", v.value)),
        Check::new("rho-prime-monotone", prime.monotone, format!("final gap {}", prime.final_gap)),
    ];
    let mut tables = Vec::new();
    let mut dissection = Table::new("dissection", &["axis", "index", "time"]);
    for (axis, idx) in [("s", &v.s_dissection), ("t", &v.t_dissection)] {
        for &i in idx {
            dissection.push(vec![axis.into(), i.into(), grid[i].into()]);
        }
    }
    tables.push(dissection);
    let mut rp = Table::new("rho-prime", &["rho_prime", "value", "exact"]);
    for (r, row) in &prime.rows {
        rp.push(vec![(*r).into(), row.value.into(), row.is_exact().into()]);
    }
    rp.push(vec![rho.into(), prime.limit.value.into(), prime.limit.is_exact().into()]);
    tables.push(rp);
    let mut envelope = None;
    if let (CovarianceKernel::Fbm { hurst }, true) = (&k, k.hurst().is_some_and(|h| h <= 0.5)) {
        let e = fbm_rhovar_bound_check(*hurst, c.grid, c.squares)?;
        checks.push(Check::at_most("linear-envelope-spread", e.envelope_spread, 2.0));
        checks.push(Check::at_most("disjoint-covariance", e.max_disjoint_covariance, 0.0));
        checks.push(Check::new("envelope-exact", e.squares.iter().all(|s| s.exact), "all squares enumerated exactly"));
        let mut sq = Table::new("squares", &["side", "variation", "control", "control_over_side", "exact"]);
        for s in &e.squares {
            sq.push(vec![
                s.side.into(),
                s.variation.into(),
                s.control.into(),
                (s.control / s.side).into(),
                s.exact.into(),
            ]);
        }
        tables.push(sq);
        envelope = Some(e);
    }
    Ok(Outcome {
        result: json!({"kernel": k.name(), "variation": to_value(&v), "rho_prime": to_value(&prime), "envelope": to_value(&envelope)}),
        checks,
        tables,
        headline: Headline { estimate: v.value, ..Default::default() },
        console: vec![],
    })
}

fn young2d(c: &Young2dConfig) -> Res<Outcome> {
    let f = c.integrand.build()?;
    let g = c.integrator.build()?;
    if c.levels > 12 {
        return Err(CliError::Config("levels must be at most 12".into()));
    }
    let y = young_refinement(&f, &g, &[0.0, 1.0], &[0.0, 1.0], c.levels)?;
    let mut checks = vec![Check::new("converged", y.converged, format!("differences {:?}", y.differences))];
    let both_bm = c.integrand.0 == KernelSpec::Bm && c.integrator.0 == KernelSpec::Bm;
    let target = both_bm.then_some(0.5);
    if let Some(t) = target {
        checks.push(Check::at_most("brownian-value", (y.value - t).abs() / t, 1e-3));
    }
    let grid = grid_level(c.bound_grid, 6)?;
    let (p, q) = (f.rho(), g.rho());
    let bound = match young_constant(q, p) {
        Ok(_) => {
            let fg = f.on_grid(&grid)?;
            let gg = g.on_grid(&grid)?;
            let b = young_bound_check(&fg, &gg, fg.full_rect(), p, q)?;
            checks.push(Check::new(
                "young-bound",
                b.holds,
                format!("|integral| {} <= {}", b.integral.value.abs(), b.bound),
            ));
            Some(b)
        }
        Err(_) => None,
    };
    let mut table = Table::new("", &["level", "sum", "difference"]);
    for (l, s) in y.sums.iter().enumerate() {
        let d = if l == 0 { None } else { y.differences.get(l - 1).copied() };
        table.push(vec![l.into(), (*s).into(), d.into()]);
    }
    Ok(Outcome {
        result: json!({"integral": to_value(&y), "bound": to_value(&bound), "target": target}),
        checks,
        tables: vec![table],
        headline: Headline { estimate: y.value, target, band: target.map(|t| 1e-3 * t), ..Default::default() },
        console: vec![],
    })
}

fn level2_variance(c: &Level2VarianceConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "level2-variance")?;
    positive("samples", c.samples)?;
    let grid = grid_level(c.grid, 12)?;
    let ens = SampleEnsemble::sample(&process(&c.kernel, 2)?, &grid, c.samples, seed)?;
    let r = level2_variance_check(&ens, 0, 1, 0, grid.len() - 1, c.extra_band)?;
    let m = &r.monte_carlo;
    let tol = 3.0 * m.stderr + r.band;
    let checks = vec![Check::at_most("level2-variance", (m.mean - r.young_value).abs(), tol)];
    let mut table = Table::new("", &["estimate", "stderr", "young", "discrete", "band", "pass"]);
    table.push(vec![
        m.mean.into(),
        m.stderr.into(),
        r.young_value.into(),
        r.discrete_value.into(),
        tol.into(),
        r.pass.into(),
    ]);
    Ok(Outcome {
        headline: Headline { estimate: m.mean, stderr: Some(m.stderr), target: Some(r.young_value), band: Some(tol) },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

fn level_bounds(c: &LevelBoundsConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "level-bounds")?;
    positive("samples", c.samples)?;
    let grid = grid_level(c.grid, 6)?;
    let spec = process(&c.kernel, c.dim)?;
    let rho = c.rho.unwrap_or_else(|| spec.rho());
    let n = grid.len() - 1;
    let mut intervals = vec![(0, n)];
    let mut half = n / 2;
    while half >= 1 {
        intervals.push((0, half));
        half /= 2;
    }
    if n >= 4 {
        intervals.push((n / 4, n / 2));
    }
    let ens = SampleEnsemble::sample(&spec, &grid, c.samples, seed)?;
    let r = level_bounds_check(&ens, rho, &intervals)?;
    let mut checks = Vec::new();
    let mut table = Table::new("", &["word", "s", "t", "control", "moment", "stderr", "constant"]);
    for w in &r.words {
        let label = word_label(&w.word);
        checks.push(Check::new(
            &format!("envelope-{label}"),
            w.constants.iter().all(|v| v.is_finite()),
            format!("max constant {}", w.max_constant),
        ));
        // bounded constants force the moment to shrink at least like ω^{n/ρ}
        let order = w.word.len() as f64 / rho;
        checks.push(Check::above(&format!("scaling-{label}"), w.length_slope, order - 0.25));
        for (k, m) in w.moments.iter().enumerate() {
            table.push(vec![
                label.clone().into(),
                r.intervals[k].0.into(),
                r.intervals[k].1.into(),
                r.control[k].into(),
                m.mean.into(),
                m.stderr.into(),
                w.constants[k].into(),
            ]);
        }
    }
    let top = r.words.iter().map(|w| w.max_constant).fold(0.0, f64::max);
    Ok(Outcome {
        result: to_value(&r),
        checks,
        tables: vec![table],
        headline: Headline { estimate: top, ..Default::default() },
        console: vec![],
    })
}

fn dyadic(c: &DyadicConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "dyadic-convergence")?;
    positive("samples", c.samples)?;
    if c.first == 0 || c.first > c.last || c.last > 11 {
        return Err(CliError::Config(format!("levels {}..={} must satisfy 1 <= first <= last <= 11", c.first, c.last)));
    }
    let spec = process(&c.kernel, c.dim)?;
    let r = dyadic_convergence(&spec, c.p, c.first, c.last, c.samples, seed)?;
    let checks = vec![Check::at_most("log2-slope", r.mean_slope, -0.1)];
    let mut table = Table::new("", &["level", "mean", "stderr", "l2"]);
    for ((l, d), l2) in r.levels.iter().zip(&r.distances).zip(&r.l2) {
        table.push(vec![(*l).into(), d.mean.into(), d.stderr.into(), (*l2).into()]);
    }
    Ok(Outcome {
        headline: Headline { estimate: r.mean_slope, band: Some(-0.1), ..Default::default() },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

fn perturbation(c: &PerturbationConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "perturbation")?;
    positive("samples", c.samples)?;
    if c.eps.is_empty() || c.eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::Config("eps must be a non-empty list of positive numbers".into()));
    }
    let grid = grid_level(c.grid, 8)?;
    let r = perturbation_continuity(&process(&c.kernel, c.dim)?, &c.eps, c.p, &grid, c.samples, seed)?;
    let mut checks = vec![Check::new("strictly-decreasing", r.strictly_decreasing, "mean distance along the ladder")];
    if c.eps.len() >= 2 {
        checks.push(Check::above("theta-hat", r.theta_hat, 0.0));
    }
    let mut table = Table::new("", &["eps", "covariance_gap", "mean", "stderr", "l2"]);
    for row in &r.rows {
        table.push(vec![
            row.eps.into(),
            row.covariance_gap.into(),
            row.distance.mean.into(),
            row.distance.stderr.into(),
            row.l2.into(),
        ]);
    }
    let last = r.rows.last().expect("non-empty ladder");
    Ok(Outcome {
        headline: Headline { estimate: last.distance.mean, stderr: Some(last.distance.stderr), ..Default::default() },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

fn fernique(c: &FerniqueConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "fernique")?;
    positive("samples", c.samples)?;
    let grid = grid_level(c.grid, 8)?;
    let ens = SampleEnsemble::sample(&process(&c.kernel, c.dim)?, &grid, c.samples, seed)?;
    let r = fernique_tail(&ens, c.p)?;
    let mut checks = Vec::new();
    if r.degenerate {
        checks.push(Check::new("tail-slope", true, "all norms vanish"));
    } else {
        checks.push(Check::below("tail-slope", r.tail_slope, 0.0));
    }
    checks.extend(chaos_checks(&r.chaos));
    let mut tail = Table::new("tail", &["lambda", "probability"]);
    for &(l, p) in &r.tail {
        tail.push(vec![l.into(), p.into()]);
    }
    Ok(Outcome {
        headline: Headline { estimate: r.tail_slope, ..Default::default() },
        result: to_value(&r),
        checks,
        tables: vec![tail, chaos_table(&r.chaos)],
        console: vec![],
    })
}

fn chaos_checks(reports: &[rough_gauss::regularity_analysis::ChaosRatioReport]) -> Vec<Check> {
    reports.iter().map(|c| Check::at_most(&format!("chaos-n{}-q{}", c.level, c.q), c.ratio, c.bound)).collect()
}

fn chaos_table(reports: &[rough_gauss::regularity_analysis::ChaosRatioReport]) -> Table {
    let mut t = Table::new("chaos", &["level", "q", "ratio", "ratio_upper", "bound", "pass"]);
    for c in reports {
        t.push(vec![c.level.into(), c.q.into(), c.ratio.into(), c.ratio_upper.into(), c.bound.into(), c.holds.into()]);
    }
    t
}

fn young_wiener(c: &YoungWienerConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "young-wiener")?;
    positive("samples", c.samples)?;
    let grid = grid_level(c.grid, 12)?;
    let spec = process(&c.kernel, 1)?;
    let rho = c.rho.unwrap_or_else(|| spec.rho());
    let f: Vec<f64> = match c.integrand {
        Integrand::One => vec![1.0; grid.len()],
        Integrand::Identity => grid.clone(),
    };
    let ens = SampleEnsemble::sample(&spec, &grid, c.samples, seed)?;
    let r = young_wiener_check(&ens, &f, c.q, rho)?;
    let m = &r.monte_carlo;
    let tol = 3.0 * m.stderr + r.band;
    let checks = vec![
        Check::at_most("isometry", (m.mean - r.young_value).abs(), tol),
        Check::at_most("young-bound", m.mean, r.upper_bound),
    ];
    let mut table = Table::new("", &["estimate", "stderr", "young", "discrete", "band", "upper_bound", "pass"]);
    table.push(vec![
        m.mean.into(),
        m.stderr.into(),
        r.young_value.into(),
        r.discrete_value.into(),
        tol.into(),
        r.upper_bound.into(),
        (r.pass && r.bound_holds).into(),
    ]);
    Ok(Outcome {
        headline: Headline { estimate: m.mean, stderr: Some(m.stderr), target: Some(r.young_value), band: Some(tol) },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

fn weak_limit(c: &WeakLimitConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "weak-limit")?;
    positive("samples", c.samples)?;
    grid_level(c.grid, 10)?;
    let r = weak_limit_fbm(&c.hurst, c.functional, c.grid, c.samples, seed)?;
    let checks = vec![
        Check::new(
            "gaps-decreasing",
            r.gaps_decreasing,
            format!("{:?}", r.rows.iter().map(|w| w.gap).collect::<Vec<_>>()),
        ),
        Check::below("final-gap", r.final_gap, c.final_gap),
    ];
    let mut table = Table::new("", &["hurst", "estimate", "stderr", "discrete", "gap", "covariance_gap"]);
    for w in &r.rows {
        table.push(vec![
            w.hurst.into(),
            w.estimate.mean.into(),
            w.estimate.stderr.into(),
            w.discrete_value.into(),
            w.gap.into(),
            w.covariance_gap.into(),
        ]);
    }
    let last = r.rows.last().expect("non-empty ladder");
    Ok(Outcome {
        headline: Headline {
            estimate: last.estimate.mean,
            stderr: Some(last.estimate.stderr),
            target: Some(r.brownian_value),
            band: Some(c.final_gap),
        },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

#[derive(Serialize)]
struct KernelEmbedding {
    kernel: String,
    rho: f64,
    variation: f64,
    exact: bool,
    elements: usize,
    violations: usize,
    min_slack: f64,
    max_lhs_over_rhs: f64,
}

fn cm_embedding(c: &CmEmbeddingConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "cm-embedding")?;
    if c.kernels.is_empty() {
        return Err(CliError::Config("kernels must be non-empty".into()));
    }
    let grid = grid_level(c.grid, 5)?;
    let n = grid.len() - 1;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut table =
        Table::new("", &["kernel", "rho", "variation", "exact", "elements", "violations", "min_slack", "max_ratio"]);
    for (idx, kernel) in c.kernels.iter().enumerate() {
        let k = kernel.build()?;
        let rho = k.rho();
        let v = kernel_variation(&k, &grid, 0, n, rho)?;
        let elements = random_elements(&k, c.samples, c.nodes, seed.wrapping_add(idx as u64))?;
        let results =
            elements.par_iter().map(|h| embedding_check_against(h, &grid, 0, n, &v)).collect::<Result<Vec<_>, _>>()?;
        let violations = results.iter().filter(|r| !r.holds).count();
        let min_slack = results.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let max_ratio = results.iter().filter(|r| r.rhs > 0.0).map(|r| r.lhs / r.rhs).fold(0.0, f64::max);
        let row = KernelEmbedding {
            kernel: kernel.to_string(),
            rho,
            variation: v.value,
            exact: v.is_exact(),
            elements: results.len(),
            violations,
            min_slack,
            max_lhs_over_rhs: max_ratio,
        };
        table.push(vec![
            row.kernel.clone().into(),
            rho.into(),
            v.value.into(),
            v.is_exact().into(),
            row.elements.into(),
            violations.into(),
            min_slack.into(),
            max_ratio.into(),
        ]);
        checks.push(Check::at_most(&format!("violations-{}", kernel), violations as f64, 0.0));
        rows.push(row);
    }
    let mut tight = None;
    if c.kernels.iter().any(|k| k.0 == KernelSpec::Bm) {
        let v = kernel_variation(&bm_cov(), &grid, 0, n, 1.0)?;
        let h = CMElement::new(bm_cov(), vec![1.0], vec![1.0])?;
        let e = embedding_check_against(&h, &grid, 0, n, &v)?;
        checks.push(Check::at_most("brownian-tightness", (e.lhs - e.rhs).abs(), 1e-10));
        tight = Some(e);
    }
    let total: usize = rows.iter().map(|r| r.violations).sum();
    Ok(Outcome {
        result: json!({"kernels": to_value(&rows), "brownian_identity": to_value(&tight)}),
        checks,
        tables: vec![table],
        headline: Headline { estimate: total as f64, ..Default::default() },
        console: vec![],
    })
}

/// Smooth and piecewise-linear planar test paths on the given grid.
pub fn deterministic_paths(count: usize, grid: &[f64]) -> Vec<PiecewisePath<f64>> {
    use std::f64::consts::PI;
    (0..count)
        .map(|k| {
            let a = 1.0 + (k % 7) as f64;
            let b = 1.0 + (k % 5) as f64;
            let amp = 1.0 / (1.0 + (k / 10) as f64);
            let points = grid
                .iter()
                .map(|&t| match k % 4 {
                    0 => vec![amp * (2.0 * PI * a * t).sin(), amp * (2.0 * PI * b * t).cos() - amp],
                    1 => vec![amp * t.powf(0.5 + 0.1 * a), amp * t.powi(b as i32)],
                    2 => {
                        // zigzag with `a` teeth
                        let u = (t * a).fract();
                        vec![amp * (1.0 - (2.0 * u - 1.0).abs()), amp * t]
                    }
                    _ => vec![amp * (a * t).exp() - amp, -amp * (b * t * t)],
                })
                .collect();
            PiecewisePath::new(grid.to_vec(), points).expect("valid grid")
        })
        .collect()
}

fn grr_row(table: &mut Table, kind: &str, i: usize, r: &GrrCheck) {
    table.push(vec![
        kind.into(),
        i.into(),
        r.stats.holder_norm.into(),
        r.stats.besov_norm.into(),
        r.bound.into(),
        r.slack.into(),
        r.holds.into(),
    ]);
}

fn grr(c: &GrrConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "grr")?;
    let grid = grid_level(c.grid, 9)?;
    let q = c.q.unwrap_or_else(|| grr_q0(c.r, c.alpha));
    let ens = SampleEnsemble::sample(&process(&c.kernel, c.dim)?, &grid, c.samples, seed)?;
    let check = |x: &GroupPath<f64>| grr_holder_check(x, c.r, c.alpha, q);
    let sampled = lift_ensemble(&ens).par_iter().map(check).collect::<Result<Vec<_>, _>>()?;
    let fixed: Vec<GroupPath<f64>> =
        deterministic_paths(c.deterministic_paths, &grid).iter().map(|p| p.lift_s3()).collect();
    let fixed = fixed.par_iter().map(check).collect::<Result<Vec<_>, _>>()?;
    let mut table = Table::new("", &["kind", "index", "holder_norm", "besov_norm", "bound", "slack", "pass"]);
    for (i, r) in sampled.iter().enumerate() {
        grr_row(&mut table, "sample", i, r);
    }
    for (i, r) in fixed.iter().enumerate() {
        grr_row(&mut table, "deterministic", i, r);
    }
    let count = |v: &[GrrCheck]| v.iter().filter(|r| !r.holds).count();
    let ratio =
        |v: &[GrrCheck]| v.iter().filter(|r| r.bound > 0.0).map(|r| r.stats.holder_norm / r.bound).fold(0.0, f64::max);
    let worst = ratio(&sampled).max(ratio(&fixed));
    let checks = vec![
        Check::at_most("violations-sampled", count(&sampled) as f64, 0.0),
        Check::at_most("violations-deterministic", count(&fixed) as f64, 0.0),
    ];
    Ok(Outcome {
        result: json!({
            "q": q,
            "q0": grr_q0(c.r, c.alpha),
            "constant": rough_gauss::regularity_analysis::grr_constant(c.r),
            "sampled": sampled.len(),
            "deterministic": fixed.len(),
            "max_holder_over_bound": worst,
        }),
        checks,
        tables: vec![table],
        headline: Headline { estimate: worst, band: Some(1.0), ..Default::default() },
        console: vec![],
    })
}

fn chaos_ratio(c: &ChaosRatioConfig) -> Res<Outcome> {
    let seed = seed_of(c.seed, "chaos-ratio")?;
    positive("samples", c.samples)?;
    if c.moments.iter().any(|&q| q < 2) {
        return Err(CliError::Config("moments must be at least 2".into()));
    }
    let grid = grid_level(c.grid, 10)?;
    let ens = SampleEnsemble::sample(&process(&c.kernel, c.dim)?, &grid, c.samples, seed)?;
    let coords = ensemble_chaos_coordinates(&ens)?;
    let reports = chaos_ratios(&coords, &c.moments);
    let worst = reports.iter().map(|r| r.ratio / r.bound).fold(0.0, f64::max);
    let mut checks = chaos_checks(&reports);
    if reports.is_empty() {
        checks.push(Check::new("degenerate", true, "all coordinates vanish"));
    }
    Ok(Outcome {
        result: to_value(&reports),
        checks,
        tables: vec![chaos_table(&reports)],
        headline: Headline { estimate: worst, band: Some(1.0), ..Default::default() },
        console: vec![],
    })
}

fn coutin_qian(c: &CoutinQianConfig) -> Res<Outcome> {
    let k = match &c.kernel {
        Some(k) => k.build()?,
        None => Kernel(KernelSpec::Fbm { hurst: c.hurst }).build()?,
    };
    if !(c.hurst > 0.0 && c.hurst < 1.0) {
        return Err(CliError::Config(format!("hurst {} outside (0, 1)", c.hurst)));
    }
    grid_level(c.grid, 10)?;
    let r = coutin_qian_check(&k, c.hurst, c.grid, c.constant);
    let checks = vec![
        Check::new("variance", r.variance_pass, format!("constant {}", r.variance_constant)),
        Check::new("decorrelation", r.decorrelation_pass, format!("constant {}", r.decorrelation_constant)),
    ];
    let mut table = Table::new("", &["separation", "variance_ratio"]);
    for &(s, v) in &r.variance_by_scale {
        table.push(vec![s.into(), v.into()]);
    }
    Ok(Outcome {
        headline: Headline { estimate: r.variance_constant, band: Some(c.constant), ..Default::default() },
        result: to_value(&r),
        checks,
        tables: vec![table],
        console: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_paths_are_reproducible() {
        let g = dyadic_points(4);
        let a = deterministic_paths(12, &g);
        assert_eq!(a, deterministic_paths(12, &g));
        assert!(a.iter().all(|p| p.point(0).iter().all(|v| v.abs() < 1e-12)));
    }

    #[test]
    fn seeds_are_required() {
        let c =
            Level2VarianceConfig { kernel: "bm".parse().unwrap(), grid: 2, samples: 4, seed: None, extra_band: 0.0 };
        assert!(matches!(level2_variance(&c), Err(CliError::Config(_))));
    }
}
