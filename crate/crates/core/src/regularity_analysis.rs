//! Besov-type double integrals, the Garsia–Rodemich–Rumsey Hölder bound and
//! hypercontractivity ratios on Wiener chaos.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::path_lift::{GroupPath, PiecewisePath};
use crate::scalar::{compensated_sum, Scalar};
use crate::stats::MCEstimate;
use crate::tensor_algebra::{homogeneous_norm, increment_distance, GroupElement};

fn trapezoid_weights<T: Scalar>(times: &[T]) -> Vec<T> {
    let n = times.len();
    let half = T::lit(0.5);
    (0..n)
        .map(|i| {
            let left = if i > 0 { times[i] - times[i - 1] } else { T::zero() };
            let right = if i + 1 < n { times[i + 1] - times[i] } else { T::zero() };
            half * (left + right)
        })
        .collect()
}

/// `∫∫ (dist(s,t) / |t-s|^{1/r})^q ds dt` by the trapezoid rule on the
/// grid, diagonal cells contributing zero.
pub fn besov_double_integral<T: Scalar>(times: &[T], q: T, r: T, dist: impl Fn(usize, usize) -> T) -> Result<T> {
    if q < T::one() || r < T::one() {
        return Err(Error::InvalidParameter(format!("need q >= 1 and r >= 1, got q = {q}, r = {r}")));
    }
    let w = trapezoid_weights(times);
    let inv_r = r.recip();
    let mut rows = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let terms = (i + 1..times.len()).map(|j| {
            let d = dist(i, j);
            if d == T::zero() {
                T::zero()
            } else {
                w[i] * w[j] * (d / (times[j] - times[i]).powf(inv_r)).powf(q)
            }
        });
        rows.push(compensated_sum(terms));
    }
    // symmetric in (s, t)
    Ok(T::lit(2.0) * compensated_sum(rows))
}

fn euclidean<T: Scalar>(path: &PiecewisePath<T>) -> impl Fn(usize, usize) -> T + '_ {
    move |i, j| {
        path.point(i).iter().zip(path.point(j)).fold(T::zero(), |acc, (a, b)| acc + (*b - *a) * (*b - *a)).sqrt()
    }
}

fn group_increments<T: Scalar>(x: &GroupPath<T>) -> (Vec<GroupElement<T>>, &[GroupElement<T>]) {
    (x.values().iter().map(GroupElement::inverse).collect(), x.values())
}

/// Besov functional of a Euclidean path.
pub fn besov_functional_path<T: Scalar>(path: &PiecewisePath<T>, q: T, r: T) -> Result<T> {
    besov_double_integral(path.times(), q, r, euclidean(path))
}

/// Besov functional of a group-valued path with the homogeneous distance
/// `d(x_s, x_t) = ‖x_s^{-1} x_t‖`.
pub fn besov_functional<T: Scalar>(x: &GroupPath<T>, q: T, r: T) -> Result<T> {
    let (inv, vals) = group_increments(x);
    besov_double_integral(x.times(), q, r, |i, j| homogeneous_norm(&(&inv[i] * &vals[j])))
}

/// Besov functional of `d(x_{s,t}, y_{s,t})`.
pub fn besov_distance_functional<T: Scalar>(x: &GroupPath<T>, y: &GroupPath<T>, q: T, r: T) -> Result<T> {
    if x.times() != y.times() {
        return Err(Error::GridMismatch);
    }
    let (xi, xv) = group_increments(x);
    let (yi, yv) = group_increments(y);
    besov_double_integral(x.times(), q, r, |i, j| {
        let a = &xi[i] * &xv[j];
        let b = &yi[i] * &yv[j];
        increment_distance(&a, &b)
    })
}

/// Smallest admissible integrability exponent, `max(2 / (1/r - α), 4r)`.
pub fn grr_q0(r: f64, alpha: f64) -> f64 {
    (2.0 / (1.0 / r - alpha)).max(4.0 * r)
}

/// The embedding constant `64 / r`.
pub fn grr_constant(r: f64) -> f64 {
    64.0 / r
}

/// Constant produced by integrating the GRR bound directly,
/// `8 · 4^{1/q} (1/r) / (1/r - 2/q)`.
pub fn grr_chain_constant(r: f64, q: f64) -> f64 {
    8.0 * 4f64.powf(1.0 / q) * (1.0 / r) / (1.0 / r - 2.0 / q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovStats {
    pub double_integral: f64,
    /// `double_integral^{1/q}`.
    pub besov_norm: f64,
    pub holder_norm: f64,
    pub q0: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrrCheck {
    pub stats: BesovStats,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

fn check_grr_params(r: f64, alpha: f64, q: f64) -> Result<()> {
    if !(r >= 1.0) || !(alpha >= 0.0 && alpha < 1.0 / r) {
        return Err(Error::InvalidParameter(format!("need r >= 1 and 0 <= alpha < 1/r, got r = {r}, alpha = {alpha}")));
    }
    let q0 = grr_q0(r, alpha);
    if !(q >= q0) {
        return Err(Error::InvalidParameter(format!("q = {q} below q0 = {q0}")));
    }
    Ok(())
}

fn grr_from(double_integral: f64, holder_norm: f64, r: f64, alpha: f64, q: f64) -> GrrCheck {
    let besov_norm = double_integral.powf(1.0 / q);
    let constant = grr_constant(r);
    let bound = constant * besov_norm;
    GrrCheck {
        stats: BesovStats { double_integral, besov_norm, holder_norm, q0: grr_q0(r, alpha), constant },
        bound,
        slack: bound - holder_norm,
        holds: holder_norm <= bound * (1.0 + 1e-12),
    }
}

/// `‖x‖_{α-Höl} <= (64/r) M` with `M^q` the Besov functional, for a lifted path.
pub fn grr_holder_check(x: &GroupPath<f64>, r: f64, alpha: f64, q: f64) -> Result<GrrCheck> {
    check_grr_params(r, alpha, q)?;
    let integral = besov_functional(x, q, r)?;
    Ok(grr_from(integral, x.holder_norm(alpha), r, alpha, q))
}

/// Same bound for a Euclidean path.
pub fn grr_holder_check_path(path: &PiecewisePath<f64>, r: f64, alpha: f64, q: f64) -> Result<GrrCheck> {
    check_grr_params(r, alpha, q)?;
    let integral = besov_functional_path(path, q, r)?;
    let d = euclidean(path);
    let t = path.times();
    let mut holder = 0.0f64;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            holder = holder.max(d(i, j) / (t[j] - t[i]).powf(alpha));
        }
    }
    Ok(grr_from(integral, holder, r, alpha, q))
}

/// `θ = (α' - α) / (α' N^2)` with `α' = (α + 1/r) / 2` and `N = 3`.
pub fn besov_distance_theta(r: f64, alpha: f64) -> f64 {
    let a1 = 0.5 * (alpha + 1.0 / r);
    (a1 - alpha) / (a1 * 9.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovDistanceStats {
    pub x_norm: f64,
    pub y_norm: f64,
    /// Besov norm of the increment distance.
    pub distance_norm: f64,
    /// Smallest `M` for the two single-path hypotheses.
    pub m: f64,
    /// Smallest `δ` for the distance hypothesis given `m`.
    pub delta: f64,
    pub theta: f64,
    pub distance: f64,
    /// `distance / (δ^θ M)`; the estimate bounds it by a constant.
    pub ratio: f64,
}

impl BesovDistanceStats {
    /// Which of the three hypotheses hold for a supplied `(M, δ)`.
    pub fn hypotheses(&self, m: f64, delta: f64) -> [bool; 3] {
        [self.x_norm <= m, self.y_norm <= m, self.distance_norm <= delta * m]
    }

    /// `distance <= c δ^θ M` for a supplied `(M, δ)` and constant `c`.
    pub fn conclusion(&self, m: f64, delta: f64, c: f64) -> bool {
        self.distance <= c * delta.powf(self.theta) * m
    }
}

/// Hypotheses and conclusion of the Besov distance estimate for a pair of
/// lifted paths; `ratio` is compared against an empirically calibrated
/// constant by the caller.
pub fn besov_distance_check(
    x: &GroupPath<f64>,
    y: &GroupPath<f64>,
    r: f64,
    alpha: f64,
    q: f64,
) -> Result<BesovDistanceStats> {
    check_grr_params(r, alpha, q)?;
    let mx = besov_functional(x, q, r)?.powf(1.0 / q);
    let my = besov_functional(y, q, r)?.powf(1.0 / q);
    let m = mx.max(my);
    let dxy = besov_distance_functional(x, y, q, r)?.powf(1.0 / q);
    let delta = if m > 0.0 { dxy / m } else { 0.0 };
    let theta = besov_distance_theta(r, alpha);
    let distance = crate::path_lift::holder_dist(x, y, alpha.max(f64::MIN_POSITIVE))?;
    let scale = delta.powf(theta) * m;
    let ratio = if distance == 0.0 { 0.0 } else { distance / scale };
    Ok(BesovDistanceStats { x_norm: mx, y_norm: my, distance_norm: dxy, m, delta, theta, distance, ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChaosRatioReport {
    pub level: usize,
    pub q: u32,
    pub ratio: f64,
    /// Ratio with the `q`-th moment raised by three standard errors.
    pub ratio_upper: f64,
    pub bound: f64,
    pub holds: bool,
    /// All samples vanish; the ratio is undefined and the check passes.
    pub degenerate: bool,
}

/// `|Z|_{L^q} / |Z|_{L^2}` against `(n + 1)(q - 1)^{n/2}`.
pub fn chaos_ratio_check(samples: &[f64], level: usize, q: u32) -> ChaosRatioReport {
    let bound = (level as f64 + 1.0) * ((q as f64) - 1.0).powf(level as f64 / 2.0);
    let m2 = MCEstimate::from_samples(&samples.iter().map(|v| v * v).collect::<Vec<_>>());
    if m2.mean == 0.0 {
        return ChaosRatioReport { level, q, ratio: 0.0, ratio_upper: 0.0, bound, holds: true, degenerate: true };
    }
    let mq = MCEstimate::from_samples(&samples.iter().map(|v| v.abs().powi(q as i32)).collect::<Vec<_>>());
    let l2 = m2.mean.sqrt();
    let ratio = mq.mean.powf(1.0 / q as f64) / l2;
    let ratio_upper = (mq.mean + 3.0 * mq.stderr).powf(1.0 / q as f64) / l2;
    ChaosRatioReport { level, q, ratio, ratio_upper, bound, holds: ratio <= bound, degenerate: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> PiecewisePath<f64> {
        let t: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        PiecewisePath::new(t.clone(), t.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn constant_path_is_zero() {
        let t: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let p = PiecewisePath::new(t.clone(), vec![vec![1.0, 2.0]; 9]).unwrap();
        assert_eq!(besov_functional_path(&p, 2.0, 1.0).unwrap(), 0.0);
        let c = grr_holder_check(&p.lift_s3(), 2.0, 0.2, 20.0).unwrap();
        assert_eq!(c.stats.holder_norm, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn identity_path_integrand_is_one() {
        // off-diagonal trapezoid mass is 1 - Σ w_i^2
        let n = 64;
        let v = besov_functional_path(&line(n), 2.0, 1.0).unwrap();
        let w2 = 2.0 * (0.5f64 / n as f64).powi(2) + (n - 1) as f64 / (n * n) as f64;
        assert!((v - (1.0 - w2)).abs() < 1e-12);
    }

    #[test]
    fn identity_path_grr() {
        let q = grr_q0(1.0, 0.5);
        assert_eq!(q, 4.0);
        let c = grr_holder_check_path(&line(32), 1.0, 0.5, q).unwrap();
        assert!((c.stats.holder_norm - 1.0).abs() < 1e-12);
        assert!(c.holds && c.slack > 0.0);
    }

    #[test]
    fn parameter_constraints() {
        let p = line(4).lift_s3();
        assert!(grr_holder_check(&p, 1.0, 1.0, 100.0).is_err());
        assert!(grr_holder_check(&p, 2.0, 0.3, 5.0).is_err());
        assert!(grr_holder_check(&p, 0.5, 0.3, 50.0).is_err());
    }

    #[test]
    fn chaos_ratios() {
        let z = vec![0.0; 10];
        assert!(chaos_ratio_check(&z, 2, 4).degenerate);
        let r = chaos_ratio_check(&[1.0, -1.0, 1.0, -1.0], 1, 4);
        assert_eq!(r.ratio, 1.0);
        assert_eq!(r.bound, 2.0 * 3f64.sqrt());
    }

    #[test]
    fn identical_paths_have_zero_distance() {
        let x = line(8).lift_s3();
        let s = besov_distance_check(&x, &x, 2.0, 0.3, 40.0).unwrap();
        assert_eq!((s.delta, s.distance, s.ratio), (0.0, 0.0, 0.0));
    }
}
