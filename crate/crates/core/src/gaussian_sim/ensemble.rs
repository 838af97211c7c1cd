use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::covariance_models::{gram_matrix_unchecked, CovarianceKernel, ProcessSpec};
use crate::error::{Error, Result};
use crate::path_lift::{GroupPath, PiecewisePath};

/// Largest clipped negative spectral mass, relative to the trace.
pub const CLIPPED_MASS_TOLERANCE: f64 = 1e-8;

/// Samples are generated in fixed chunks so the floating point work per
/// sample does not depend on how chunks are spread over threads.
const CHUNK: usize = 32;

/// Symmetric square root `V sqrt(max(Λ, 0)) V^T` of a Gram matrix.
#[derive(Clone, Debug)]
pub struct GramFactor {
    root: DMatrix<f64>,
    clipped_mass: f64,
}

impl GramFactor {
    pub fn new(k: &CovarianceKernel, grid: &[f64]) -> Result<Self> {
        let gram = gram_matrix_unchecked(k, grid);
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        let trace = gram.trace();
        let eig = SymmetricEigen::new(gram);
        let clipped_mass: f64 = eig.eigenvalues.iter().map(|&l| (-l).max(0.0)).sum();
        if clipped_mass > CLIPPED_MASS_TOLERANCE * trace.abs() {
            let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
        }
        let v = &eig.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt());
        Ok(Self { root: &scaled * v.transpose(), clipped_mass })
    }

    pub fn root(&self) -> &DMatrix<f64> {
        &self.root
    }

    pub fn clipped_mass(&self) -> f64 {
        self.clipped_mass
    }
}

/// `N` sample paths of a `d`-dimensional process with independent components.
///
/// Randomness: sample `i` of channel `c` draws from
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `(c << 40) | i`; its standard
/// normals are consumed component by component, each component taking one
/// normal per grid point in time order. The path is `S z` for the
/// symmetric root `S` of the component's Gram matrix.
#[derive(Clone, Debug)]
pub struct SampleEnsemble {
    spec: ProcessSpec,
    grid: Vec<f64>,
    seed: u64,
    channel: u64,
    /// `data[(i * d + c) * n + k]`: sample `i`, component `c`, grid point `k`.
    data: Vec<f64>,
    samples: usize,
}

fn factors(spec: &ProcessSpec, grid: &[f64]) -> Result<Vec<GramFactor>> {
    // identical kernels share one factorization
    let mut out: Vec<GramFactor> = Vec::with_capacity(spec.dim());
    for (c, k) in spec.kernels().iter().enumerate() {
        match spec.kernels()[..c].iter().position(|o| o == k) {
            Some(p) => out.push(out[p].clone()),
            None => out.push(GramFactor::new(k, grid)?),
        }
    }
    Ok(out)
}

impl SampleEnsemble {
    pub fn sample(spec: &ProcessSpec, grid: &[f64], samples: usize, seed: u64) -> Result<Self> {
        Self::sample_channel(spec, grid, samples, seed, 0)
    }

    /// Same scheme on an independent family of streams; channels with equal
    /// seeds and sample counts reuse nothing from each other.
    pub fn sample_channel(spec: &ProcessSpec, grid: &[f64], samples: usize, seed: u64, channel: u64) -> Result<Self> {
        crate::path_lift::validate_times(grid)?;
        if samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let fs = factors(spec, grid)?;
        Ok(Self::sample_with_factors(spec, grid, &fs, samples, seed, channel))
    }

    /// Samples with precomputed factors, one per component.
    pub fn sample_with_factors(
        spec: &ProcessSpec,
        grid: &[f64],
        factors: &[GramFactor],
        samples: usize,
        seed: u64,
        channel: u64,
    ) -> Self {
        let d = spec.dim();
        let n = grid.len();
        assert_eq!(factors.len(), d);
        let chunks: Vec<Vec<f64>> = (0..samples.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let lo = chunk * CHUNK;
                let hi = (lo + CHUNK).min(samples);
                let m = hi - lo;
                // z[c]: n x m standard normals, column per sample
                let mut z = vec![DMatrix::<f64>::zeros(n, m); d];
                for (col, i) in (lo..hi).enumerate() {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream((channel << 40) | i as u64);
                    for zc in z.iter_mut() {
                        for k in 0..n {
                            zc[(k, col)] = StandardNormal.sample(&mut rng);
                        }
                    }
                }
                let x: Vec<DMatrix<f64>> = z.iter().zip(factors).map(|(zc, f)| f.root() * zc).collect();
                let mut out = Vec::with_capacity(m * d * n);
                for col in 0..m {
                    for xc in &x {
                        out.extend(xc.column(col).iter());
                    }
                }
                out
            })
            .collect();
        Self { spec: spec.clone(), grid: grid.to_vec(), seed, channel, data: chunks.concat(), samples }
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel(&self) -> u64 {
        self.channel
    }

    pub fn len(&self) -> usize {
        self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples == 0
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Component `c` of sample `i` on the grid.
    pub fn component(&self, i: usize, c: usize) -> &[f64] {
        let n = self.grid.len();
        let d = self.dim();
        &self.data[(i * d + c) * n..(i * d + c + 1) * n]
    }

    pub fn path(&self, i: usize) -> PiecewisePath<f64> {
        let n = self.grid.len();
        let d = self.dim();
        let mut points = Vec::with_capacity(n * d);
        for k in 0..n {
            for c in 0..d {
                points.push(self.component(i, c)[k]);
            }
        }
        PiecewisePath::from_flat(d, self.grid.clone(), points).expect("sampled paths are finite")
    }

    /// `X + eps * W` sample by sample; both ensembles on the same grid and spec.
    pub fn perturbed(&self, noise: &SampleEnsemble, eps: f64) -> Result<Self> {
        if noise.grid != self.grid || noise.samples != self.samples || noise.dim() != self.dim() {
            return Err(Error::GridMismatch);
        }
        let data = self.data.iter().zip(&noise.data).map(|(x, w)| x + eps * w).collect();
        Ok(Self { data, ..self.clone() })
    }

    /// The same samples on the sub-grid `dissection`, which must consist of
    /// grid points including both endpoints.
    pub fn restrict_to(&self, dissection: &[f64]) -> Result<Self> {
        crate::path_lift::validate_times(dissection)?;
        let idx = sub_indices(&self.grid, dissection)?;
        let n = self.grid.len();
        let d = self.dim();
        let mut data = Vec::with_capacity(self.samples * d * idx.len());
        for row in self.data.chunks(n) {
            data.extend(idx.iter().map(|&k| row[k]));
        }
        Ok(Self { grid: dissection.to_vec(), data, ..self.clone() })
    }

    /// The piecewise-linear interpolation on `dissection`, resampled on the
    /// full grid.
    pub fn interpolate_from(&self, dissection: &[f64]) -> Result<Self> {
        let coarse = self.restrict_to(dissection)?;
        let n = self.grid.len();
        let m = dissection.len();
        let mut data = Vec::with_capacity(self.data.len());
        for row in coarse.data.chunks(m) {
            let mut seg = 0;
            for &t in &self.grid {
                while seg + 2 < m && dissection[seg + 1] <= t {
                    seg += 1;
                }
                let (t0, t1) = (dissection[seg], dissection[seg + 1]);
                let w = (t - t0) / (t1 - t0);
                data.push(row[seg] + w * (row[seg + 1] - row[seg]));
            }
        }
        debug_assert_eq!(data.len(), self.samples * self.dim() * n);
        Ok(Self { data, ..self.clone() })
    }

    /// Largest entry-wise gap between the sample covariance of component
    /// `c` and its Gram matrix, relative to the largest Gram entry.
    pub fn covariance_error(&self, c: usize) -> f64 {
        let n = self.grid.len();
        let gram = gram_matrix_unchecked(&self.spec.kernels()[c], &self.grid);
        let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut cov = DMatrix::<f64>::zeros(n, n);
        for i in 0..self.samples {
            let x = nalgebra::DVector::from_column_slice(self.component(i, c));
            cov += &x * x.transpose();
        }
        cov /= self.samples as f64;
        (cov - gram).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale.max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn sub_indices(grid: &[f64], sub: &[f64]) -> Result<Vec<usize>> {
    let mut idx = Vec::with_capacity(sub.len());
    let mut k = 0;
    for &t in sub {
        while k < grid.len() && grid[k] < t {
            k += 1;
        }
        if k == grid.len() || grid[k] != t {
            return Err(Error::InvalidGrid(format!("{t} is not a grid point")));
        }
        idx.push(k);
    }
    Ok(idx)
}

/// Step-3 lifts of every sample.
pub fn lift_ensemble(ens: &SampleEnsemble) -> Vec<GroupPath<f64>> {
    (0..ens.len()).into_par_iter().map(|i| ens.path(i).lift_s3()).collect()
}

/// `|R_{X - X^D}|_∞` on the grid, from the interpolation operator.
pub fn interpolation_covariance_gap(k: &CovarianceKernel, grid: &[f64], dissection: &[f64]) -> Result<f64> {
    let idx = sub_indices(grid, dissection)?;
    let n = grid.len();
    let mut p = DMatrix::<f64>::identity(n, n);
    let mut seg = 0;
    for (row, &t) in grid.iter().enumerate() {
        while seg + 2 < idx.len() && grid[idx[seg + 1]] <= t {
            seg += 1;
        }
        let (a, b) = (idx[seg], idx[seg + 1]);
        let w = (t - grid[a]) / (grid[b] - grid[a]);
        p[(row, a)] -= 1.0 - w;
        p[(row, b)] -= w;
    }
    let gram = gram_matrix_unchecked(k, grid);
    let gap = &p * gram * p.transpose();
    Ok(gap.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance_models::{bm_cov, dyadic_points, fbm_cov};

    #[test]
    fn deterministic_given_seed() {
        let spec = ProcessSpec::iid(bm_cov(), 2).unwrap();
        let g = dyadic_points(4);
        let a = SampleEnsemble::sample(&spec, &g, 40, 7).unwrap();
        let b = SampleEnsemble::sample(&spec, &g, 40, 7).unwrap();
        assert_eq!(a.data, b.data);
        let c = SampleEnsemble::sample(&spec, &g, 40, 8).unwrap();
        assert_ne!(a.data, c.data);
        // a prefix of a larger run is the smaller run
        let big = SampleEnsemble::sample(&spec, &g, 70, 7).unwrap();
        assert_eq!(&big.data[..a.data.len()], &a.data[..]);
    }

    #[test]
    fn starts_at_zero_for_brownian() {
        let spec = ProcessSpec::iid(bm_cov(), 1).unwrap();
        let e = SampleEnsemble::sample(&spec, &dyadic_points(3), 5, 1).unwrap();
        for i in 0..5 {
            assert!(e.component(i, 0)[0].abs() < 1e-12);
        }
    }

    #[test]
    fn restriction_and_interpolation() {
        let spec = ProcessSpec::iid(fbm_cov(0.4).unwrap(), 2).unwrap();
        let g = dyadic_points(3);
        let e = SampleEnsemble::sample(&spec, &g, 3, 2).unwrap();
        assert_eq!(e.restrict_to(&g).unwrap().data, e.data);
        let r = e.restrict_to(&[0.0, 1.0]).unwrap();
        assert_eq!(r.component(1, 1), &[e.component(1, 1)[0], e.component(1, 1)[8]]);
        assert!(e.restrict_to(&[0.0, 0.3, 1.0]).is_err());
        let i = e.interpolate_from(&[0.0, 0.5, 1.0]).unwrap();
        let x = e.component(2, 0);
        assert!((i.component(2, 0)[2] - (0.5 * x[0] + 0.5 * x[4])).abs() < 1e-15);
        assert_eq!(i.component(2, 0)[4], x[4]);
    }

    #[test]
    fn covariance_gap_for_single_segment_brownian() {
        // Brownian bridge variance peaks at 1/4
        let gap = interpolation_covariance_gap(&bm_cov(), &dyadic_points(4), &[0.0, 1.0]).unwrap();
        assert!((gap - 0.25).abs() < 1e-12);
        let gap = interpolation_covariance_gap(&bm_cov(), &dyadic_points(4), &dyadic_points(4)).unwrap();
        assert!(gap < 1e-14);
    }
}
