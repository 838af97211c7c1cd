//! Covariance kernels on `[0,1]^2` with declared variation metadata and
//! structural checks.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variation_2d::{rho_variation_with, GridFunction2D, GridRect, Surface, VariationMode, VariationOptions};

/// Serializable kernel description, e.g. `{"kernel": "fbm", "H": 0.4}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Bm,
    Fbm {
        #[serde(rename = "H")]
        hurst: f64,
    },
    Ou {
        theta: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        stationary: bool,
    },
    Bridge {
        base: Box<KernelSpec>,
    },
    /// `R(s,t) = clock(min(s,t))` for a nondecreasing piecewise-linear clock
    /// given by `(time, value)` knots.
    Martingale {
        clock: Vec<[f64; 2]>,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn build(&self) -> Result<CovarianceKernel> {
        match self {
            KernelSpec::Bm => Ok(bm_cov()),
            KernelSpec::Fbm { hurst } => fbm_cov(*hurst),
            KernelSpec::Ou { theta, sigma, stationary } => ou_cov(*theta, *sigma, *stationary),
            KernelSpec::Bridge { base } => Ok(bridge_cov(base.build()?)),
            KernelSpec::Martingale { clock } => martingale_cov(clock),
            KernelSpec::Zero => Ok(CovarianceKernel::Zero),
        }
    }
}

/// Compact form used on the command line: `bm`, `fbm:H=0.4`,
/// `ou:theta=2,sigma=1,stationary=true`, `bridge:fbm:H=0.3`, `zero`.
impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let bad = |msg: &str| Error::InvalidParameter(format!("kernel {s:?}: {msg}"));
        let params = || -> Result<Vec<(String, String)>> {
            rest.split(',')
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    p.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| bad("expected key=value"))
                })
                .collect()
        };
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad("not a number"));
        match name.trim() {
            "bm" if rest.is_empty() => Ok(KernelSpec::Bm),
            "zero" if rest.is_empty() => Ok(KernelSpec::Zero),
            "fbm" => {
                let mut hurst = None;
                for (k, v) in params()? {
                    match k.as_str() {
                        "H" => hurst = Some(num(&v)?),
                        _ => return Err(bad("unknown parameter")),
                    }
                }
                Ok(KernelSpec::Fbm { hurst: hurst.ok_or_else(|| bad("missing H"))? })
            }
            "ou" => {
                let (mut theta, mut sigma, mut stationary) = (None, 1.0, false);
                for (k, v) in params()? {
                    match k.as_str() {
                        "theta" => theta = Some(num(&v)?),
                        "sigma" => sigma = num(&v)?,
                        "stationary" => stationary = v.parse().map_err(|_| bad("not a boolean"))?,
                        _ => return Err(bad("unknown parameter")),
                    }
                }
                Ok(KernelSpec::Ou { theta: theta.ok_or_else(|| bad("missing theta"))?, sigma, stationary })
            }
            "bridge" => Ok(KernelSpec::Bridge { base: Box::new(rest.parse()?) }),
            _ => Err(bad("unknown kernel")),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Bm => write!(f, "bm"),
            KernelSpec::Zero => write!(f, "zero"),
            KernelSpec::Fbm { hurst } => write!(f, "fbm:H={hurst}"),
            KernelSpec::Ou { theta, sigma, stationary } => {
                write!(f, "ou:theta={theta},sigma={sigma},stationary={stationary}")
            }
            KernelSpec::Bridge { base } => write!(f, "bridge:{base}"),
            KernelSpec::Martingale { clock } => write!(f, "martingale({} knots)", clock.len()),
        }
    }
}

/// Nondecreasing piecewise-linear clock, constant outside its knots.
#[derive(Clone, Debug, PartialEq)]
pub struct Clock {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Clock {
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t);
        if k == 0 {
            return self.values[0];
        }
        if k == self.times.len() {
            return self.values[k - 1];
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1] + w * (self.values[k] - self.values[k - 1])
    }

    pub fn total_increase(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }
}

/// `R^D`: bilinear interpolation of a base kernel over `D x D`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearKernel {
    base: CovarianceKernel,
    nodes: GridFunction2D<f64>,
}

impl PiecewiseLinearKernel {
    pub fn base(&self) -> &CovarianceKernel {
        &self.base
    }

    pub fn dissection(&self) -> &[f64] {
        self.nodes.s_grid()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CovarianceKernel {
    Bm,
    Fbm { hurst: f64 },
    Ou { theta: f64, sigma: f64, stationary: bool },
    Bridge(Box<CovarianceKernel>),
    Martingale(Clock),
    PiecewiseLinear(Box<PiecewiseLinearKernel>),
    Zero,
}

pub fn bm_cov() -> CovarianceKernel {
    CovarianceKernel::Bm
}

pub fn fbm_cov(hurst: f64) -> Result<CovarianceKernel> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst parameter {hurst} outside (0, 1)")));
    }
    Ok(CovarianceKernel::Fbm { hurst })
}

pub fn ou_cov(theta: f64, sigma: f64, stationary: bool) -> Result<CovarianceKernel> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("mean reversion {theta} must be positive")));
    }
    if !sigma.is_finite() {
        return Err(Error::InvalidParameter("volatility must be finite".into()));
    }
    Ok(CovarianceKernel::Ou { theta, sigma, stationary })
}

/// Covariance of `X(t) - t X(1)`.
pub fn bridge_cov(base: CovarianceKernel) -> CovarianceKernel {
    CovarianceKernel::Bridge(Box::new(base))
}

pub fn martingale_cov(knots: &[[f64; 2]]) -> Result<CovarianceKernel> {
    if knots.is_empty() {
        return Err(Error::InvalidParameter("clock needs at least one knot".into()));
    }
    let times: Vec<f64> = knots.iter().map(|k| k[0]).collect();
    let values: Vec<f64> = knots.iter().map(|k| k[1]).collect();
    if times.iter().chain(&values).any(|v| !v.is_finite())
        || times.windows(2).any(|w| w[0] >= w[1])
        || values.windows(2).any(|w| w[0] > w[1])
        || values[0] < 0.0
    {
        return Err(Error::InvalidParameter(
            "clock knots must have increasing times and nondecreasing nonnegative values".into(),
        ));
    }
    Ok(CovarianceKernel::Martingale(Clock { times, values }))
}

/// Covariance of the piecewise-linear interpolation of the process on `dissection`.
pub fn piecewise_linear_cov(base: &CovarianceKernel, dissection: &[f64]) -> Result<CovarianceKernel> {
    crate::path_lift::validate_times(dissection)?;
    let nodes = GridFunction2D::from_fn(dissection.to_vec(), dissection.to_vec(), |s, t| base.eval(s, t))?;
    Ok(CovarianceKernel::PiecewiseLinear(Box::new(PiecewiseLinearKernel { base: base.clone(), nodes })))
}

impl CovarianceKernel {
    pub fn eval(&self, s: f64, t: f64) -> f64 {
        match self {
            CovarianceKernel::Bm => s.min(t),
            CovarianceKernel::Fbm { hurst } => {
                let e = 2.0 * hurst;
                0.5 * (s.abs().powf(e) + t.abs().powf(e) - (t - s).abs().powf(e))
            }
            CovarianceKernel::Ou { theta, sigma, stationary } => {
                let c = sigma * sigma / (2.0 * theta);
                if *stationary {
                    c * (-theta * (t - s).abs()).exp()
                } else {
                    c * ((-theta * (t - s).abs()).exp() - (-theta * (t + s)).exp())
                }
            }
            CovarianceKernel::Bridge(base) => {
                base.eval(s, t) - t * base.eval(s, 1.0) - s * base.eval(t, 1.0) + s * t * base.eval(1.0, 1.0)
            }
            CovarianceKernel::Martingale(clock) => clock.eval(s.min(t)),
            CovarianceKernel::PiecewiseLinear(k) => k.nodes.interpolate(s, t),
            CovarianceKernel::Zero => 0.0,
        }
    }

    pub fn name(&self) -> String {
        match self {
            CovarianceKernel::Bm => "bm".into(),
            CovarianceKernel::Fbm { hurst } => format!("fbm(H={hurst})"),
            CovarianceKernel::Ou { theta, sigma, stationary } => {
                format!("ou(theta={theta},sigma={sigma}{})", if *stationary { ",stationary" } else { "" })
            }
            CovarianceKernel::Bridge(b) => format!("bridge({})", b.name()),
            CovarianceKernel::Martingale(_) => "martingale".into(),
            CovarianceKernel::PiecewiseLinear(k) => {
                format!("piecewise-linear({}, {} nodes)", k.base.name(), k.nodes.s_grid().len())
            }
            CovarianceKernel::Zero => "zero".into(),
        }
    }

    /// Declared variation exponent of the covariance.
    pub fn rho(&self) -> f64 {
        match self {
            CovarianceKernel::Fbm { hurst } if *hurst < 0.5 => 1.0 / (2.0 * hurst),
            CovarianceKernel::Bridge(b) => b.rho(),
            CovarianceKernel::PiecewiseLinear(k) => k.base.rho(),
            _ => 1.0,
        }
    }

    /// Whether `ω([s,t]^2) <= C |t - s|` for the declared control.
    pub fn holder_dominated(&self) -> bool {
        match self {
            CovarianceKernel::Bridge(b) => b.holder_dominated(),
            CovarianceKernel::PiecewiseLinear(k) => k.base.holder_dominated(),
            // piecewise-linear clocks are Lipschitz
            _ => true,
        }
    }

    pub fn hurst(&self) -> Option<f64> {
        match self {
            CovarianceKernel::Bm => Some(0.5),
            CovarianceKernel::Fbm { hurst } => Some(*hurst),
            _ => None,
        }
    }

    /// Samples the kernel on `grid x grid`.
    pub fn on_grid(&self, grid: &[f64]) -> Result<GridFunction2D<f64>> {
        GridFunction2D::from_fn(grid.to_vec(), grid.to_vec(), |s, t| self.eval(s, t))
    }

    /// `E(X_{s,t} X_{u,v})`.
    pub fn increment_covariance(&self, s: f64, t: f64, u: f64, v: f64) -> f64 {
        (self.eval(t, v) - self.eval(s, v)) - (self.eval(t, u) - self.eval(s, u))
    }
}

impl Surface<f64> for CovarianceKernel {
    fn eval(&self, s: f64, t: f64) -> f64 {
        CovarianceKernel::eval(self, s, t)
    }
}

/// Independent components `X^1, ..., X^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    kernels: Vec<CovarianceKernel>,
}

impl ProcessSpec {
    pub fn new(kernels: Vec<CovarianceKernel>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::InvalidParameter("process needs at least one component".into()));
        }
        Ok(Self { kernels })
    }

    pub fn iid(kernel: CovarianceKernel, dim: usize) -> Result<Self> {
        Self::new(vec![kernel; dim])
    }

    pub fn dim(&self) -> usize {
        self.kernels.len()
    }

    pub fn kernels(&self) -> &[CovarianceKernel] {
        &self.kernels
    }

    pub fn rho(&self) -> f64 {
        self.kernels.iter().map(CovarianceKernel::rho).fold(1.0, f64::max)
    }
}

fn check_unit_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidGrid("grid points must lie in [0, 1]".into()));
    }
    Ok(())
}

/// `R(t_i, t_j)` without the semidefiniteness check.
pub fn gram_matrix_unchecked(k: &CovarianceKernel, grid: &[f64]) -> DMatrix<f64> {
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, j| if i <= j { k.eval(grid[i], grid[j]) } else { k.eval(grid[j], grid[i]) })
}

/// Relative tolerance on negative eigenvalues.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric Gram matrix, checked positive semidefinite up to
/// `-PSD_TOLERANCE * spectral radius`.
pub fn gram_matrix(k: &CovarianceKernel, grid: &[f64]) -> Result<DMatrix<f64>> {
    check_unit_grid(grid)?;
    let m = gram_matrix_unchecked(k, grid);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let scale = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    Ok(m)
}

pub fn dyadic_points(level: u32) -> Vec<f64> {
    let n = 1usize << level;
    (0..=n).map(|k| k as f64 / n as f64).collect()
}

/// Largest `|R(s,t) - R'(s,t)|` over `grid x grid`.
pub fn kernel_sup_distance(a: &CovarianceKernel, b: &CovarianceKernel, grid: &[f64]) -> f64 {
    grid.iter().flat_map(|&s| grid.iter().map(move |&t| (a.eval(s, t) - b.eval(s, t)).abs())).fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoutinQianReport {
    pub hurst: f64,
    pub supplied_constant: f64,
    /// Max of `E|X_{s,t}|^2 / |t-s|^{2H}` over the lattice.
    pub variance_constant: f64,
    /// `(|t - s|, max ratio at that separation)`, coarse to fine.
    pub variance_by_scale: Vec<(f64, f64)>,
    /// Log-log slope of the per-scale constant over the three finest
    /// scales; clearly negative means the constant blows up.
    pub variance_scale_slope: f64,
    /// Max of `|E(X_{s,s+h} X_{t,t+h})| / (|t-s|^{2H-2} h^2)`.
    pub decorrelation_constant: f64,
    pub variance_pass: bool,
    pub decorrelation_pass: bool,
}

/// Scans both increment inequalities over the dyadic lattice of the
/// given level with `h = 2^{-k}`. The constants are lattice maxima and thus
/// lower bounds for the true constants.
pub fn coutin_qian_check(k: &CovarianceKernel, hurst: f64, level: u32, supplied_constant: f64) -> CoutinQianReport {
    let n = 1usize << level;
    let dt = 1.0 / n as f64;
    let e = 2.0 * hurst;
    let variance_by_scale: Vec<(f64, f64)> = (1..=n)
        .rev()
        .map(|m| {
            let sep = m as f64 * dt;
            let c = (0..=n - m)
                .map(|i| {
                    let (s, t) = (i as f64 * dt, (i + m) as f64 * dt);
                    k.increment_covariance(s, t, s, t) / sep.powf(e)
                })
                .fold(0.0, f64::max);
            (sep, c)
        })
        .collect();
    let variance_constant = variance_by_scale.iter().map(|v| v.1).fold(0.0, f64::max);
    // finest three dyadic separations
    let dyadic: Vec<(f64, f64)> = (0..3.min(level as usize + 1))
        .map(|j| {
            let m = 1usize << j;
            variance_by_scale[n - m]
        })
        .collect();
    let variance_scale_slope = if dyadic.len() >= 2 && dyadic.iter().all(|v| v.1 > 0.0) {
        let xs: Vec<f64> = dyadic.iter().map(|v| v.0.log2()).collect();
        let ys: Vec<f64> = dyadic.iter().map(|v| v.1.log2()).collect();
        crate::stats::regression_slope(&xs, &ys)
    } else {
        0.0
    };
    let decorrelation_constant = (1..=level)
        .into_par_iter()
        .map(|kh| {
            let hm = 1usize << (level - kh);
            let h = hm as f64 * dt;
            let mut c = 0.0f64;
            for i in 0..=n {
                for j in i + hm + 1..=n.saturating_sub(hm) {
                    let (s, t) = (i as f64 * dt, j as f64 * dt);
                    let cov = k.increment_covariance(s, s + h, t, t + h).abs();
                    c = c.max(cov / ((t - s).powf(e - 2.0) * h * h));
                }
            }
            c
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max);
    CoutinQianReport {
        hurst,
        supplied_constant,
        variance_constant,
        variance_by_scale,
        variance_scale_slope,
        decorrelation_constant,
        variance_pass: variance_constant <= supplied_constant * (1.0 + 1e-12) && variance_scale_slope > -0.05,
        decorrelation_pass: decorrelation_constant <= supplied_constant * (1.0 + 1e-12),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareVariation {
    pub side: f64,
    /// Grid `rho`-variation over `[0, side]^2`.
    pub variation: f64,
    /// `variation^rho`, the control value.
    pub control: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FbmRhoVariationReport {
    pub hurst: f64,
    pub rho: f64,
    pub squares: Vec<SquareVariation>,
    /// Largest `control / side`.
    pub envelope_constant: f64,
    /// `max / min` of `control / side` across squares.
    pub envelope_spread: f64,
    /// Largest covariance of two non-overlapping lattice increments.
    pub max_disjoint_covariance: f64,
}

/// Variation of the fBM covariance over nested squares `[0, 2^{-j}]^2`,
/// `j < squares`, on the dyadic grid of the given level.
pub fn fbm_rhovar_bound_check(hurst: f64, level: u32, squares: u32) -> Result<FbmRhoVariationReport> {
    if !(hurst > 0.0 && hurst <= 0.5) {
        return Err(Error::InvalidParameter(format!("Hurst parameter {hurst} outside (0, 1/2]")));
    }
    let k = fbm_cov(hurst)?;
    let rho = 1.0 / (2.0 * hurst);
    let grid = dyadic_points(level);
    let f = k.on_grid(&grid)?;
    let n = grid.len() - 1;
    let opts = VariationOptions::default();
    let squares = (0..squares.min(level + 1))
        .map(|j| {
            let m = n >> j;
            let v = rho_variation_with(&f, rho, GridRect::square(0, m), VariationMode::Auto, &opts)?;
            Ok(SquareVariation { side: grid[m], variation: v.value, control: v.controlled(), exact: v.is_exact() })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = squares.iter().map(|s| s.control / s.side).collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mut max_disjoint_covariance = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..=n {
            for c in b..n {
                for d in c + 1..=n {
                    let cov = k.increment_covariance(grid[a], grid[b], grid[c], grid[d]);
                    max_disjoint_covariance = max_disjoint_covariance.max(cov);
                }
            }
        }
    }
    Ok(FbmRhoVariationReport {
        hurst,
        rho,
        squares,
        envelope_constant: hi,
        envelope_spread: hi / lo,
        max_disjoint_covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(bm_cov().eval(0.3, 0.7), 0.3);
        let b = bridge_cov(bm_cov());
        assert!((b.eval(0.3, 0.6) - (0.3 - 0.18)).abs() < 1e-15);
        assert!(b.eval(0.4, 1.0).abs() < 1e-15);
        let f = fbm_cov(0.5).unwrap();
        assert!((f.eval(0.2, 0.9) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn parameter_errors() {
        assert!(fbm_cov(0.0).is_err());
        assert!(fbm_cov(1.0).is_err());
        assert!(ou_cov(0.0, 1.0, true).is_err());
        assert!(martingale_cov(&[[0.0, 1.0], [0.5, 0.5]]).is_err());
    }

    #[test]
    fn declared_rho() {
        assert_eq!(fbm_cov(0.25).unwrap().rho(), 2.0);
        assert_eq!(fbm_cov(0.7).unwrap().rho(), 1.0);
        assert_eq!(bridge_cov(fbm_cov(0.4).unwrap()).rho(), 1.25);
    }

    #[test]
    fn gram_small_cases() {
        let m = gram_matrix(&bm_cov(), &[0.25, 0.5, 1.0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0.25, 0.5, 1.0]));
        let m = gram_matrix(&fbm_cov(0.3).unwrap(), &[0.6]).unwrap();
        assert!((m[(0, 0)] - 0.6f64.powf(0.6)).abs() < 1e-15);
        assert!(gram_matrix(&bm_cov(), &[0.5, 1.5]).is_err());
    }

    #[test]
    fn piecewise_linear_with_two_nodes() {
        let k = piecewise_linear_cov(&bm_cov(), &[0.0, 1.0]).unwrap();
        assert!((k.eval(0.3, 0.6) - 0.18).abs() < 1e-15);
        assert!(gram_matrix(&k, &dyadic_points(3)).is_ok());
    }

    #[test]
    fn spec_parsing_roundtrip() {
        for s in ["bm", "zero", "fbm:H=0.4", "ou:theta=2,sigma=0.5,stationary=true", "bridge:fbm:H=0.3"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<KernelSpec>().unwrap(), k);
        }
        assert!("fbm:K=0.4".parse::<KernelSpec>().is_err());
        assert!("gamma".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn martingale_clock() {
        let k = martingale_cov(&[[0.0, 0.0], [0.5, 2.0], [1.0, 2.5]]).unwrap();
        assert_eq!(k.eval(0.25, 0.9), 1.0);
        assert_eq!(k.eval(0.75, 0.8), 2.25);
    }

    #[test]
    fn coutin_qian_brownian() {
        let r = coutin_qian_check(&bm_cov(), 0.5, 5, 1.0);
        assert!((r.variance_constant - 1.0).abs() < 1e-12);
        assert!(r.decorrelation_constant < 1e-12);
        assert!(r.variance_pass && r.decorrelation_pass);
    }

    #[test]
    fn coutin_qian_exponent_mismatch() {
        let k = fbm_cov(0.3).unwrap();
        assert!(coutin_qian_check(&k, 0.3, 6, 2.0).variance_pass);
        let r = coutin_qian_check(&k, 0.45, 6, 2.0);
        assert!(!r.variance_pass, "{r:?}");
    }

    #[test]
    fn brownian_squares() {
        let r = fbm_rhovar_bound_check(0.5, 4, 3).unwrap();
        for sq in &r.squares {
            assert!((sq.control - sq.side).abs() < 1e-14);
        }
        assert!(r.max_disjoint_covariance.abs() < 1e-14);
    }
}
