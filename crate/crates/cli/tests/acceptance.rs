//! End-to-end acceptance run: one line per criterion, non-zero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rough_gauss::covariance_models::{bm_cov, fbm_cov, ou_cov};
use rough_gauss::path_lift::PiecewisePath;
use rough_gauss::tensor_algebra::{
    bch_bound_check, exp_trunc, hall_log_signature, log_trunc, GroupElement, HallBasis, LieElement, TruncatedTensor,
};
use rough_gauss::variation_1d::pvar_1d;
use rough_gauss::variation_2d::{rho_variation, GridFunction2D, VariationMode};
use rough_gauss_cli::config::{RunConfig, SweepConfig};
use rough_gauss_cli::{run, sweep, Finished, Overrides};
use serde_json::{json, Value};

const SEED: u64 = 20240601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn criterion(id: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let v = body();
    let took = started.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let pass = v.pass && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" of {} s", l.as_secs()));
    println!(
        "{} {id:>2} {name}: {} [{:.1} s{budget}]",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        took.as_secs_f64()
    );
    pass
}

fn rel_diff(a: &TruncatedTensor<f64>, b: &TruncatedTensor<f64>) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(1.0)
}

fn random_path(rng: &mut ChaCha8Rng, d: usize, segs: usize) -> PiecewisePath<f64> {
    let times: Vec<f64> = (0..=segs).map(|k| k as f64 / segs as f64).collect();
    let mut x = vec![0.0; d];
    let mut points = vec![x.clone()];
    for _ in 0..segs {
        for v in x.iter_mut() {
            *v += rng.random_range(-1.0..1.0);
        }
        points.push(x.clone());
    }
    PiecewisePath::new(times, points).unwrap()
}

fn random_lie(rng: &mut ChaCha8Rng, d: usize) -> LieElement<f64> {
    let scale = 10f64.powf(rng.random_range(-2.0..0.5));
    let n = HallBasis::new(d).len();
    LieElement::new(d, (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn random_group(rng: &mut ChaCha8Rng, d: usize) -> GroupElement<f64> {
    if rng.random_bool(0.5) {
        random_lie(rng, d).exp()
    } else {
        let segs = rng.random_range(1..=4);
        random_path(rng, d, segs).lift_s3().last().clone()
    }
}

fn algebra_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_exp_log, mut worst_assoc, mut worst_chen, mut worst_shuffle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let n = 10_000;
    for k in 0..n {
        let d = 1 + k % 5;
        let g = random_group(&mut rng, d);
        let back = exp_trunc(&log_trunc(&g)).unwrap();
        worst_exp_log = worst_exp_log.max(rel_diff(back.tensor(), g.tensor()));

        let (h, f) = (random_group(&mut rng, d), random_group(&mut rng, d));
        let l = &(&g * &h) * &f;
        let r = &g * &(&h * &f);
        worst_assoc = worst_assoc.max(rel_diff(l.tensor(), r.tensor()));

        let segs = rng.random_range(2..=6);
        let cut = rng.random_range(1..segs);
        let lift = random_path(&mut rng, d, segs).lift_s3();
        let chen = &lift.increment_at(0, cut) * &lift.increment_at(cut, segs);
        worst_chen = worst_chen.max(rel_diff(chen.tensor(), lift.last().tensor()));

        worst_shuffle = worst_shuffle.max(g.shuffle_residual() / g.tensor().max_abs().max(1.0).powi(3));
    }
    let worst = worst_exp_log.max(worst_assoc).max(worst_chen).max(worst_shuffle);
    verdict(
        worst <= 1e-10,
        format!(
            "{n} elements, d 1..5; worst relative error exp-log {worst_exp_log:.1e}, associativity {worst_assoc:.1e}, chen {worst_chen:.1e}, shuffle {worst_shuffle:.1e} (limit 1e-10)"
        ),
    )
}

fn hall_formula() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let n = 1000;
    let mut worst = 0.0f64;
    for k in 0..n {
        let d = 2 + k % 2;
        let segs = rng.random_range(1..=8);
        let sig = random_path(&mut rng, d, segs).lift_s3().last().clone();
        let hall = hall_log_signature(&sig).unwrap();
        worst = worst.max(rel_diff(&hall.to_tensor(), &log_trunc(&sig)));
    }
    verdict(worst <= 1e-10, format!("{n} paths, d 2..3, <= 8 segments; worst relative gap {worst:.1e} (limit 1e-10)"))
}

fn bch_bound() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let n = 10_000;
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for k in 0..n {
        let d = 1 + k % 5;
        let (a, b) = (random_lie(&mut rng, d), random_lie(&mut rng, d));
        let r = bch_bound_check(&a, &b).unwrap();
        if !r.holds {
            violations += 1;
        }
        for (lhs, rhs) in [(r.level2_lhs, r.level2_rhs), (r.level3_lhs, r.level3_rhs)] {
            if rhs > 0.0 {
                tightest = tightest.max(lhs / rhs);
            }
        }
    }
    verdict(violations == 0, format!("{violations} violations in {n} pairs; largest lhs/rhs {tightest:.3}"))
}

fn enumerate_1d(v: &[f64], p: f64) -> f64 {
    let interior = v.len() - 2;
    let mut best = 0.0f64;
    for mask in 0u32..1 << interior {
        let mut prev = 0;
        let mut s = 0.0;
        for k in (1..=interior).filter(|k| mask >> (k - 1) & 1 == 1).chain([v.len() - 1]) {
            s += (v[k] - v[prev]).abs().powf(p);
            prev = k;
        }
        best = best.max(s);
    }
    best.powf(1.0 / p)
}

/// All `s` dissections, each completed by an exact DP over `t`.
fn enumerate_2d(f: &GridFunction2D<f64>, rho: f64) -> f64 {
    let (ns, nt) = (f.s_grid().len(), f.t_grid().len());
    let mut best = 0.0f64;
    for mask in 0u32..1 << (ns - 2) {
        let d: Vec<usize> =
            [0].into_iter().chain((1..ns - 1).filter(|k| mask >> (k - 1) & 1 == 1)).chain([ns - 1]).collect();
        let w = |j0: usize, j1: usize| {
            d.windows(2).map(|a| f.rect_increment_idx(a[0], a[1], j0, j1).abs().powf(rho)).sum::<f64>()
        };
        let mut dp = vec![0.0f64; nt];
        for j in 1..nt {
            dp[j] = (0..j).map(|i| dp[i] + w(i, j)).fold(f64::NEG_INFINITY, f64::max);
        }
        best = best.max(dp[nt - 1]);
    }
    best.powf(1.0 / rho)
}

fn variation_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let instances = 200;
    let mut worst_1d = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=13);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = rng.random_range(1.0..4.0);
        let bf = enumerate_1d(&v, p);
        worst_1d = worst_1d.max((pvar_1d(&v, p).unwrap() - bf).abs() / bf.max(1e-300));
    }
    let (mut matched, mut above) = (0, 0);
    for k in 0..instances {
        let ns = rng.random_range(2..=13);
        let nt = rng.random_range(2..=13);
        let rho = rng.random_range(1.0..2.5);
        let f = if k % 2 == 0 {
            let s: Vec<f64> = (0..ns).map(|i| i as f64 / (ns - 1) as f64).collect();
            let t: Vec<f64> = (0..nt).map(|i| i as f64 / (nt - 1) as f64).collect();
            let values = (0..ns * nt).map(|_| rng.random_range(-1.0..1.0)).collect();
            GridFunction2D::new(s, t, values).unwrap()
        } else {
            let kernel = match k % 6 {
                1 => bm_cov(),
                3 => fbm_cov(rng.random_range(0.2..0.5)).unwrap(),
                _ => ou_cov(rng.random_range(0.5..3.0), 1.0, false).unwrap(),
            };
            let n = ns.max(nt);
            let mut grid: Vec<f64> = (1..n - 1).map(|_| rng.random_range(0.0..1.0)).collect();
            grid.extend([0.0, 1.0]);
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            kernel.on_grid(&grid).unwrap()
        };
        let bf = enumerate_2d(&f, rho);
        let ls = rho_variation(&f, rho, f.full_rect(), VariationMode::LocalSearch).unwrap().value;
        if ls > bf * (1.0 + 1e-12) {
            above += 1;
        }
        if (ls - bf).abs() <= 1e-9 * bf.max(1e-300) {
            matched += 1;
        }
    }
    let share = matched as f64 / instances as f64;
    verdict(
        worst_1d <= 1e-12 && share >= 0.95 && above == 0,
        format!(
            "1D DP worst relative gap {worst_1d:.1e} on {instances} instances; 2D local search optimal on {matched}/{instances} ({:.1}%, need 95%), above optimum {above}",
            100.0 * share
        ),
    )
}

fn execute(config: Value, workers: Option<usize>) -> Finished {
    let cfg = RunConfig::from_value(config).expect("valid config");
    run(cfg, &Overrides { workers, ..Overrides::default() }).expect("experiment runs")
}

fn result_of(f: &Finished) -> Value {
    let report: Value = serde_json::from_slice(&f.report().expect("report").bytes).unwrap();
    report["result"].clone()
}

fn failed_checks(f: &Finished) -> Vec<String> {
    f.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.detail)).collect()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn young_brownian() -> Verdict {
    let y = execute(json!({"experiment": "young2d", "integrand": "bm", "integrator": "bm", "levels": 10}), None);
    let value = num(&result_of(&y)["integral"]["value"]);
    let rel = (value - 0.5).abs() / 0.5;
    let m = execute(
        json!({"experiment": "level2-variance", "kernel": "bm", "grid": 8, "samples": 10000, "seed": SEED}),
        None,
    );
    let r = result_of(&m);
    let (mean, se) = (num(&r["monte_carlo"]["mean"]), num(&r["monte_carlo"]["stderr"]));
    let band = 3.0 * se + 0.01;
    verdict(
        rel <= 1e-3 && (mean - 0.5).abs() <= band && y.pass && m.pass,
        format!(
            "refined integral {value:.6} (relative gap {rel:.1e}, limit 1e-3); E|X12|^2 = {mean:.4} +- {se:.4}, gap {:.4} <= {band:.4}",
            (mean - 0.5).abs()
        ),
    )
}

fn fbm_envelope() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for h in [0.3, 0.4] {
        let f =
            execute(json!({"experiment": "variation", "kernel": format!("fbm:H={h}"), "grid": 4, "squares": 3}), None);
        let e = &result_of(&f)["envelope"];
        let (spread, disjoint) = (num(&e["envelope_spread"]), num(&e["max_disjoint_covariance"]));
        let ok = f.pass && spread <= 2.0 && disjoint <= 0.0;
        pass &= ok;
        parts.push(format!("H={h}: spread {spread:.3} (<= 2), max disjoint covariance {disjoint:.2e} (<= 0)"));
        if !f.pass {
            parts.push(format!("failed {:?}", failed_checks(&f)));
        }
    }
    verdict(pass, parts.join("; "))
}

fn cm_embedding() -> Verdict {
    let kernels = ["bm", "fbm:H=0.4", "fbm:H=0.3", "ou:theta=1,sigma=1", "bridge:bm"];
    let f = execute(
        json!({"experiment": "cm-embedding", "kernels": kernels, "grid": 4, "samples": 200, "seed": SEED}),
        None,
    );
    let violations: f64 = f.checks.iter().filter(|c| c.name.starts_with("violations-")).filter_map(|c| c.value).sum();
    let tight = f.checks.iter().find(|c| c.name == "brownian-tightness").and_then(|c| c.value).unwrap_or(f64::NAN);
    verdict(
        f.pass && violations == 0.0 && tight <= 1e-10,
        format!(
            "{} elements over {} kernels: {violations} violations; BM h(t)=t gap {tight:.1e} (limit 1e-10)",
            200 * kernels.len(),
            kernels.len()
        ),
    )
}

fn dyadic() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (kernel, p) in [("bm", 2.5), ("fbm:H=0.4", 2.8)] {
        let f = execute(
            json!({"experiment": "dyadic-convergence", "kernel": kernel, "p": p, "first": 3, "last": 7, "samples": 200, "seed": SEED}),
            None,
        );
        let slope = num(&result_of(&f)["mean_slope"]);
        pass &= f.pass && slope <= -0.1;
        parts.push(format!("{kernel} p={p}: slope {slope:.3} (<= -0.1)"));
    }
    verdict(pass, parts.join("; "))
}

fn perturbation() -> Verdict {
    let f = execute(json!({"experiment": "perturbation", "kernel": "bm", "eps": [0.2, 0.1, 0.05], "seed": SEED}), None);
    let r = result_of(&f);
    let means: Vec<f64> = r["rows"].as_array().unwrap().iter().map(|w| num(&w["distance"]["mean"])).collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let theta = num(&r["theta_hat"]);
    verdict(
        f.pass && decreasing && theta > 0.0,
        format!(
            "mean distances {:?} strictly decreasing: {decreasing}; theta-hat {theta:.3} (> 0)",
            means.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn fernique() -> Verdict {
    let f = execute(json!({"experiment": "fernique", "kernel": "bm", "samples": 10000, "seed": SEED}), None);
    let r = result_of(&f);
    let slope = num(&r["tail_slope"]);
    let chaos = r["chaos"].as_array().cloned().unwrap_or_default();
    let mut covered = Vec::new();
    let mut worst = 0.0f64;
    for c in &chaos {
        if num(&c["ratio"]) > num(&c["bound"]) {
            worst = f64::INFINITY;
        }
        worst = worst.max(num(&c["ratio"]) / num(&c["bound"]));
        covered.push((c["level"].as_u64().unwrap(), c["q"].as_u64().unwrap()));
    }
    let complete = [1, 2, 3].iter().all(|&n| [4, 6, 8].iter().all(|&q| covered.contains(&(n, q))));
    verdict(
        f.pass && slope < 0.0 && complete && worst <= 1.0,
        format!("log-tail slope {slope:.3} (< 0); {} chaos ratios, all (n, q) covered: {complete}; largest ratio/bound {worst:.3}", chaos.len()),
    )
}

fn young_wiener() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for (integrand, target) in [("one", 1.0), ("identity", 1.0 / 3.0)] {
        let f = execute(
            json!({"experiment": "young-wiener", "kernel": "bm", "integrand": integrand, "grid": 10, "samples": 10000, "seed": SEED}),
            None,
        );
        let m = &result_of(&f)["monte_carlo"];
        let (mean, se) = (num(&m["mean"]), num(&m["stderr"]));
        let band = 3.0 * se + 1e-3;
        pass &= f.pass && (mean - target).abs() <= band;
        parts.push(format!("f={integrand}: {mean:.4} vs {target:.4}, gap {:.4} <= {band:.4}", (mean - target).abs()));
    }
    verdict(pass, parts.join("; "))
}

fn grr() -> Verdict {
    let f = execute(
        json!({"experiment": "grr", "kernel": "fbm:H=0.4", "samples": 1000, "deterministic_paths": 100, "seed": SEED}),
        None,
    );
    let r = result_of(&f);
    let detail =
        f.checks.iter().map(|c| format!("{} {}", c.name, c.value.unwrap_or(f64::NAN))).collect::<Vec<_>>().join(", ");
    let worst = num(&r["max_holder_over_bound"]);
    verdict(f.pass, format!("1000 fBM lifts, 100 deterministic paths: {detail}; worst holder/bound {worst:.3}"))
}

fn weak_limit() -> Verdict {
    let f =
        execute(json!({"experiment": "weak-limit", "hurst": [0.45, 0.48, 0.5], "samples": 10000, "seed": SEED}), None);
    let r = result_of(&f);
    let gaps: Vec<f64> =
        r["rows"].as_array().unwrap().iter().map(|w| (num(&w["estimate"]["mean"]) - 0.5).abs()).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = *gaps.last().unwrap();
    verdict(
        f.pass && decreasing && last < 0.05,
        format!(
            "gaps {:?} decreasing: {decreasing}; final {last:.4} (< 0.05)",
            gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn report_bytes(f: &Finished) -> Vec<(String, Vec<u8>)> {
    f.artifacts
        .iter()
        .filter(|a| !a.file_name.ends_with(".timing.json"))
        .map(|a| (a.file_name.clone(), a.bytes.clone()))
        .collect()
}

fn determinism() -> Verdict {
    let configs = [
        json!({"experiment": "perturbation", "samples": 60, "seed": 7}),
        json!({"experiment": "fernique", "samples": 2000, "seed": 7}),
        json!({"experiment": "cm-embedding", "samples": 20, "seed": 7}),
        json!({"experiment": "grr", "samples": 50, "deterministic_paths": 8, "seed": 7}),
    ];
    let mut same = 0;
    for c in &configs {
        let a = report_bytes(&execute(c.clone(), Some(1)));
        let b = report_bytes(&execute(c.clone(), Some(3)));
        if a == b {
            same += 1;
        }
    }
    let sweep_cfg = SweepConfig::from_json(
        r#"{"base": {"experiment": "weak-limit", "samples": 500, "seed": 3}, "parameter": "hurst", "values": [0.45, 0.5]}"#,
    )
    .unwrap();
    let table =
        |w| report_bytes(&sweep::table(&sweep_cfg, &Overrides { workers: Some(w), ..Overrides::default() }).unwrap());
    let sweep_same = table(1) == table(3);
    verdict(
        same == configs.len() && sweep_same,
        format!("{same}/{} runs and the sweep table ({sweep_same}) byte-identical with 1 and 3 workers", configs.len()),
    )
}

fn main() -> ExitCode {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let results = [
        criterion(1, "algebra exactness", Some(Duration::from_secs(10)), algebra_exactness),
        criterion(2, "hall log-signature", Some(Duration::from_secs(10)), hall_formula),
        criterion(3, "bch bound", None, bch_bound),
        criterion(4, "variation oracles", minutes(2), variation_oracles),
        criterion(5, "young integral on brownian covariance", minutes(2), young_brownian),
        criterion(6, "fbm rho-variation envelope", None, fbm_envelope),
        criterion(7, "cameron-martin embedding", None, cm_embedding),
        criterion(8, "dyadic convergence", minutes(10), dyadic),
        criterion(9, "continuity in covariance", None, perturbation),
        criterion(10, "fernique shape and chaos ratios", None, fernique),
        criterion(11, "young-wiener isometry", None, young_wiener),
        criterion(12, "grr embedding", None, grr),
        criterion(13, "weak limit", None, weak_limit),
        criterion(14, "determinism across workers", None, determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
