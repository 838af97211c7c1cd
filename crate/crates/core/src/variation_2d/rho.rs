use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grid::{GridFunction2D, GridRect};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::variation_1d::max_additive_dissection;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationMode {
    /// Enumerates every dissection of the shorter axis; the other axis is
    /// optimized exactly by dynamic programming.
    Exact,
    /// Single dissection `D` used on both axes.
    CommonSubdivision,
    /// Alternating exact optimization of one axis given the other,
    /// from several starting dissections.
    LocalSearch,
    /// `Exact` when within the cap, `LocalSearch` otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Exact,
    LowerBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationOptions {
    /// Largest number of intervals on the enumerated axis (or free points
    /// of a common subdivision) before exhaustive search is refused.
    pub exact_cap: usize,
    /// Random starting dissections for local search, on top of the
    /// deterministic ones.
    pub restarts: usize,
    pub seed: u64,
    /// Local search also tries toggling single dissection points when both
    /// axes have at most this many intervals.
    pub polish_limit: usize,
}

impl Default for VariationOptions {
    fn default() -> Self {
        Self { exact_cap: 16, restarts: 24, seed: 0x5eed_2d, polish_limit: 64 }
    }
}

/// Grid-restricted 2D `rho`-variation with the dissections attaining it.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RhoVariation<T> {
    pub value: T,
    pub rho: T,
    pub bound: BoundKind,
    pub mode: VariationMode,
    /// For common-subdivision estimates: `F` such that the full
    /// `|f|^rho_{rho-var}` is at most `F * value^rho`.
    pub comparison_factor: Option<T>,
    pub s_dissection: Vec<usize>,
    pub t_dissection: Vec<usize>,
}

impl<T: Scalar> RhoVariation<T> {
    /// `value^rho`, the quantity that behaves like a control.
    pub fn controlled(&self) -> T {
        self.value.powf(self.rho)
    }

    pub fn is_exact(&self) -> bool {
        self.bound == BoundKind::Exact
    }
}

#[inline]
fn pow_abs<T: Scalar>(x: T, rho: T) -> T {
    let a = x.abs();
    if rho == T::one() {
        a
    } else if rho == T::lit(2.0) {
        a * a
    } else {
        a.powf(rho)
    }
}

/// `f` seen with the enumerated axis first.
#[derive(Clone, Copy)]
struct View<'a, T> {
    f: &'a GridFunction2D<T>,
    swap: bool,
}

impl<T: Scalar> View<'_, T> {
    #[inline]
    fn at(&self, a: usize, b: usize) -> T {
        if self.swap {
            self.f.at(b, a)
        } else {
            self.f.at(a, b)
        }
    }

    /// Best dissection of `b_lo..=b_hi` given the fixed dissection `da` of
    /// the other axis; indices returned are absolute.
    fn best_given(&self, rho: T, da: &[usize], b_lo: usize, b_hi: usize) -> (T, Vec<usize>) {
        let nb = b_hi - b_lo + 1;
        let diffs: Vec<Vec<T>> =
            da.windows(2).map(|w| (b_lo..=b_hi).map(|b| self.at(w[1], b) - self.at(w[0], b)).collect()).collect();
        let (v, d) =
            max_additive_dissection(nb, |u, v| diffs.iter().fold(T::zero(), |acc, g| acc + pow_abs(g[v] - g[u], rho)));
        (v, d.into_iter().map(|k| k + b_lo).collect())
    }
}

fn dissection_from_mask(lo: usize, hi: usize, mask: u64) -> Vec<usize> {
    let mut d = vec![lo];
    d.extend((lo + 1..hi).filter(|k| mask >> (k - lo - 1) & 1 == 1));
    d.push(hi);
    d
}

/// Deterministic arg-max: larger value wins, ties go to the smaller key.
fn better<T: Scalar>(a: (T, u64), b: (T, u64)) -> (T, u64) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if rho < T::one() || rho.is_nan() || rho.is_infinite() {
        return Err(Error::ExponentBelowOne(rho.to_f64_lossy()));
    }
    Ok(())
}

fn check_rect<T: Scalar>(f: &GridFunction2D<T>, rect: GridRect) -> Result<()> {
    if rect.s1 >= f.s_grid().len() || rect.t1 >= f.t_grid().len() || rect.s0 > rect.s1 || rect.t0 > rect.t1 {
        return Err(Error::InvalidParameter(format!("rectangle {rect:?} outside the grid")));
    }
    Ok(())
}

/// Grid-restricted 2D `rho`-variation of `f` over `rect` with default options.
pub fn rho_variation<T: Scalar>(
    f: &GridFunction2D<T>,
    rho: T,
    rect: GridRect,
    mode: VariationMode,
) -> Result<RhoVariation<T>> {
    rho_variation_with(f, rho, rect, mode, &VariationOptions::default())
}

pub fn rho_variation_with<T: Scalar>(
    f: &GridFunction2D<T>,
    rho: T,
    rect: GridRect,
    mode: VariationMode,
    opts: &VariationOptions,
) -> Result<RhoVariation<T>> {
    check_rho(rho)?;
    check_rect(f, rect)?;
    let mut out = if rect.is_degenerate() {
        RhoVariation {
            value: T::zero(),
            rho,
            bound: BoundKind::Exact,
            mode,
            comparison_factor: None,
            s_dissection: vec![rect.s0, rect.s1],
            t_dissection: vec![rect.t0, rect.t1],
        }
    } else if rho == T::one() {
        // refining a product dissection never decreases the sum of |increments|
        let mut cells = Vec::with_capacity(rect.s_intervals() * rect.t_intervals());
        for i in rect.s0..rect.s1 {
            for j in rect.t0..rect.t1 {
                cells.push(f.rect_increment_idx(i, i + 1, j, j + 1).abs());
            }
        }
        RhoVariation {
            value: crate::scalar::compensated_sum(cells),
            rho,
            bound: BoundKind::Exact,
            mode,
            comparison_factor: None,
            s_dissection: (rect.s0..=rect.s1).collect(),
            t_dissection: (rect.t0..=rect.t1).collect(),
        }
    } else {
        let sum_form = match mode {
            VariationMode::Exact => exact(f, rho, rect, opts.exact_cap)?,
            VariationMode::LocalSearch => local_search(f, rho, rect, opts),
            VariationMode::CommonSubdivision => common_subdivision(f, rho, rect, opts)?,
            VariationMode::Auto => {
                if rect.s_intervals().min(rect.t_intervals()) <= opts.exact_cap {
                    exact(f, rho, rect, opts.exact_cap)?
                } else {
                    local_search(f, rho, rect, opts)
                }
            }
        };
        RhoVariation { value: sum_form.value.powf(rho.recip()), mode, ..sum_form }
    };
    if mode == VariationMode::CommonSubdivision {
        out.comparison_factor = Some(T::lit(3.0).powf(rho - T::one()));
        // a common `D x D` is one product dissection among many
        if rho != T::one() {
            out.bound = BoundKind::LowerBound;
        }
    }
    Ok(out)
}

/// Result in sum form (`value` is `Σ |·|^rho`).
fn exact<T: Scalar>(f: &GridFunction2D<T>, rho: T, rect: GridRect, cap: usize) -> Result<RhoVariation<T>> {
    let swap = rect.t_intervals() < rect.s_intervals();
    let (a_lo, a_hi, b_lo, b_hi) =
        if swap { (rect.t0, rect.t1, rect.s0, rect.s1) } else { (rect.s0, rect.s1, rect.t0, rect.t1) };
    let m = a_hi - a_lo;
    if m > cap || m > 40 {
        return Err(Error::GridTooLarge { intervals: m, cap });
    }
    let view = View { f, swap };
    let count = 1u64 << (m - 1);
    let (value, mask) = (0..count)
        .into_par_iter()
        .map(|mask| {
            let da = dissection_from_mask(a_lo, a_hi, mask);
            (view.best_given(rho, &da, b_lo, b_hi).0, mask)
        })
        .reduce(|| (T::neg_infinity(), u64::MAX), better);
    let da = dissection_from_mask(a_lo, a_hi, mask);
    let (_, db) = view.best_given(rho, &da, b_lo, b_hi);
    let (s_dissection, t_dissection) = if swap { (db, da) } else { (da, db) };
    Ok(RhoVariation {
        value,
        rho,
        bound: BoundKind::Exact,
        mode: VariationMode::Exact,
        comparison_factor: None,
        s_dissection,
        t_dissection,
    })
}

fn local_search<T: Scalar>(f: &GridFunction2D<T>, rho: T, rect: GridRect, opts: &VariationOptions) -> RhoVariation<T> {
    let vs = View { f, swap: false };
    let vt = View { f, swap: true };
    // improve alternately until neither axis can gain on its own
    let climb = |mut ds: Vec<usize>| -> (T, Vec<usize>, Vec<usize>) {
        let (mut best, mut dt) = vs.best_given(rho, &ds, rect.t0, rect.t1);
        for _ in 0..200 {
            let (v, ns) = vt.best_given(rho, &dt, rect.s0, rect.s1);
            if !(v > best) {
                break;
            }
            best = v;
            ds = ns;
            let (v, nt) = vs.best_given(rho, &ds, rect.t0, rect.t1);
            if !(v > best) {
                break;
            }
            best = v;
            dt = nt;
        }
        (best, ds, dt)
    };
    let toggled = |d: &[usize], k: usize| -> Vec<usize> {
        match d.binary_search(&k) {
            Ok(i) => [&d[..i], &d[i + 1..]].concat(),
            Err(i) => [&d[..i], &[k], &d[i..]].concat(),
        }
    };
    // single-point moves on either axis, each followed by the exact answer
    // on the other one
    let polish = |(mut best, mut ds, mut dt): (T, Vec<usize>, Vec<usize>)| loop {
        let mut improved = false;
        for k in rect.s0 + 1..rect.s1 {
            let cand = toggled(&ds, k);
            let (v, nt) = vs.best_given(rho, &cand, rect.t0, rect.t1);
            if v > best {
                (best, ds, dt) = (v, cand, nt);
                improved = true;
            }
        }
        for k in rect.t0 + 1..rect.t1 {
            let cand = toggled(&dt, k);
            let (v, ns) = vt.best_given(rho, &cand, rect.s0, rect.s1);
            if v > best {
                (best, ds, dt) = (v, ns, cand);
                improved = true;
            }
        }
        if !improved {
            return (best, ds, dt);
        }
    };
    let small = rect.s_intervals().max(rect.t_intervals()) <= opts.polish_limit;

    let mut starts: Vec<Vec<usize>> = vec![(rect.s0..=rect.s1).collect(), vec![rect.s0, rect.s1]];
    // start from the t side as well: the best s-dissection against the full t grid
    let full_t: Vec<usize> = (rect.t0..=rect.t1).collect();
    starts.push(vt.best_given(rho, &full_t, rect.s0, rect.s1).1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let mut d = vec![rect.s0];
        d.extend((rect.s0 + 1..rect.s1).filter(|_| rng.random_bool(0.5)));
        d.push(rect.s1);
        starts.push(d);
    }
    let results: Vec<_> = starts.into_par_iter().map(|d| if small { polish(climb(d)) } else { climb(d) }).collect();
    let (value, s_dissection, t_dissection) =
        results.into_iter().reduce(|a, b| if b.0 > a.0 { b } else { a }).expect("at least one start");
    RhoVariation {
        value,
        rho,
        bound: BoundKind::LowerBound,
        mode: VariationMode::LocalSearch,
        comparison_factor: None,
        s_dissection,
        t_dissection,
    }
}

fn common_subdivision<T: Scalar>(
    f: &GridFunction2D<T>,
    rho: T,
    rect: GridRect,
    opts: &VariationOptions,
) -> Result<RhoVariation<T>> {
    if !f.has_common_grid() {
        return Err(Error::GridMismatch);
    }
    let lo = rect.s0.min(rect.t0);
    let hi = rect.s1.max(rect.t1);
    let forced = [rect.s0, rect.s1, rect.t0, rect.t1];
    let free: Vec<usize> = (lo + 1..hi).filter(|k| !forced.contains(k)).collect();
    let build = |chosen: &dyn Fn(usize) -> bool| -> Vec<usize> {
        (lo..=hi).filter(|&k| k == lo || k == hi || forced.contains(&k) || chosen(k)).collect()
    };
    let score = |d: &[usize]| -> T {
        let sd: Vec<usize> = d.iter().copied().filter(|&k| k >= rect.s0 && k <= rect.s1).collect();
        let td: Vec<usize> = d.iter().copied().filter(|&k| k >= rect.t0 && k <= rect.t1).collect();
        let mut acc = T::zero();
        for a in sd.windows(2) {
            for b in td.windows(2) {
                acc += pow_abs(f.rect_increment_idx(a[0], a[1], b[0], b[1]), rho);
            }
        }
        acc
    };
    let (value, d, bound) = if free.len() <= opts.exact_cap.min(40) {
        let count = 1u64 << free.len();
        let pick = |mask: u64| build(&|k| free.iter().position(|&x| x == k).is_some_and(|p| mask >> p & 1 == 1));
        let (value, mask) = (0..count)
            .into_par_iter()
            .map(|mask| (score(&pick(mask)), mask))
            .reduce(|| (T::neg_infinity(), u64::MAX), better);
        (value, pick(mask), BoundKind::Exact)
    } else {
        // single-point toggles from the full and the coarsest subdivision
        let mut best: Option<(T, Vec<bool>)> = None;
        for init in [true, false] {
            let mut on = vec![init; free.len()];
            let eval = |on: &[bool]| score(&build(&|k| free.iter().position(|&x| x == k).is_some_and(|p| on[p])));
            let mut cur = eval(&on);
            loop {
                let mut improved = false;
                for p in 0..free.len() {
                    on[p] = !on[p];
                    let v = eval(&on);
                    if v > cur {
                        cur = v;
                        improved = true;
                    } else {
                        on[p] = !on[p];
                    }
                }
                if !improved {
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| cur > b.0) {
                best = Some((cur, on));
            }
        }
        let (v, on) = best.expect("two starts");
        let d = build(&|k| free.iter().position(|&x| x == k).is_some_and(|p| on[p]));
        (v, d, BoundKind::LowerBound)
    };
    let s_dissection = d.iter().copied().filter(|&k| k >= rect.s0 && k <= rect.s1).collect();
    let t_dissection = d.iter().copied().filter(|&k| k >= rect.t0 && k <= rect.t1).collect();
    Ok(RhoVariation {
        value,
        rho,
        bound,
        mode: VariationMode::CommonSubdivision,
        comparison_factor: None,
        s_dissection,
        t_dissection,
    })
}

/// Values of the `rho'`-variation for `rho' = rho + 2^{-k}`, `k = 0..=levels`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RhoPrimeTable<T> {
    pub rho: T,
    pub rows: Vec<(T, RhoVariation<T>)>,
    pub limit: RhoVariation<T>,
    /// Values nondecreasing as `rho'` decreases and never above the limit.
    pub monotone: bool,
    pub final_gap: T,
}

pub fn rho_prime_limit_check<T: Scalar>(
    f: &GridFunction2D<T>,
    rho: T,
    rect: GridRect,
    levels: usize,
) -> Result<RhoPrimeTable<T>> {
    let opts = VariationOptions::default();
    let limit = rho_variation_with(f, rho, rect, VariationMode::Auto, &opts)?;
    let rows = (0..=levels)
        .map(|k| {
            let rp = rho + T::lit(2f64.powi(-(k as i32)));
            rho_variation_with(f, rp, rect, VariationMode::Auto, &opts).map(|v| (rp, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = T::lit(1e3) * T::epsilon() * (limit.value + T::one());
    let monotone = rows.windows(2).all(|w| w[1].1.value + tol >= w[0].1.value)
        && rows.iter().all(|(_, v)| v.value <= limit.value + tol);
    let final_gap = limit.value - rows.last().map_or(limit.value, |r| r.1.value);
    Ok(RhoPrimeTable { rho, rows, limit, monotone, final_gap })
}
