use proptest::prelude::*;
use rough_gauss::cameron_martin::{
    cm_eval, cm_inner, cm_norm_squared, embedding_check_against, kernel_variation, random_elements, CMElement,
};
use rough_gauss::covariance_models::{
    bm_cov, bridge_cov, dyadic_points, fbm_cov, gram_matrix, kernel_sup_distance, ou_cov, CovarianceKernel, ProcessSpec,
};
use rough_gauss::gaussian_sim::{
    discrete_level2_moment, ensemble_chaos_coordinates, increment_covariance_matrix, level2_iterated, lift_ensemble,
    SampleEnsemble,
};
use rough_gauss::regularity_analysis::{
    besov_distance_check, besov_functional_path, chaos_ratio_check, grr_holder_check, grr_q0,
};
use rough_gauss::stats::{regression_slope, MCEstimate};
use rough_gauss::variation_2d::{rho_variation, VariationMode};

fn kernels() -> Vec<CovarianceKernel> {
    vec![
        bm_cov(),
        fbm_cov(0.3).unwrap(),
        fbm_cov(0.4).unwrap(),
        fbm_cov(0.7).unwrap(),
        ou_cov(1.0, 1.0, false).unwrap(),
        bridge_cov(bm_cov()),
    ]
}

#[test]
fn gram_matrices_are_psd() {
    let grid = dyadic_points(5);
    for k in kernels() {
        let g = gram_matrix(&k, &grid).unwrap();
        assert_eq!(g, g.transpose(), "{}", k.name());
    }
}

#[test]
fn half_hurst_is_brownian() {
    let grid = dyadic_points(6);
    assert!(kernel_sup_distance(&fbm_cov(0.5).unwrap(), &bm_cov(), &grid) < 1e-15);
}

#[test]
fn bridge_matches_closed_form() {
    let grid = dyadic_points(4);
    let k = bridge_cov(bm_cov());
    for &s in &grid {
        for &t in &grid {
            assert!((k.eval(s, t) - (s.min(t) - s * t)).abs() < 1e-15);
        }
    }
}

#[test]
fn brownian_rectangle_variation_is_diagonal_length() {
    let f = bm_cov().on_grid(&dyadic_points(5)).unwrap();
    let v = rho_variation(&f, 1.0, f.full_rect(), VariationMode::Auto).unwrap();
    assert!((v.value - 1.0).abs() < 1e-14);
}

#[test]
fn cameron_martin_inner_product_is_gram_form() {
    for k in kernels() {
        let hs = random_elements(&k, 6, 4, 11).unwrap();
        for h in &hs {
            for g in &hs {
                let mut z = 0.0;
                for (s, a) in h.nodes().iter().zip(h.weights()) {
                    for (t, b) in g.nodes().iter().zip(g.weights()) {
                        z += a * b * k.eval(*s, *t);
                    }
                }
                assert!((cm_inner(h, g).unwrap() - z).abs() < 1e-12);
            }
            assert!((cm_norm_squared(h) - cm_inner(h, h).unwrap().max(0.0)).abs() < 1e-12);
            assert_eq!(cm_eval(h, 0.0).abs() < 1e-15, true);
        }
    }
    let a = CMElement::new(bm_cov(), vec![0.5], vec![1.0]).unwrap();
    let b = CMElement::new(fbm_cov(0.3).unwrap(), vec![0.5], vec![1.0]).unwrap();
    assert!(cm_inner(&a, &b).is_err());
}

#[test]
fn cameron_martin_embedding_holds() {
    let grid = dyadic_points(4);
    let n = grid.len() - 1;
    for k in kernels() {
        let rho = k.rho().max(1.0);
        let v = kernel_variation(&k, &grid, 0, n, rho).unwrap();
        for h in random_elements(&k, 20, 4, 3).unwrap() {
            let c = embedding_check_against(&h, &grid, 0, n, &v).unwrap();
            assert!(c.holds, "{}: {c:?}", k.name());
        }
    }
}

#[test]
fn sample_covariance_approaches_kernel() {
    let grid = dyadic_points(3);
    for k in [bm_cov(), fbm_cov(0.3).unwrap(), ou_cov(2.0, 0.5, false).unwrap()] {
        let ens = SampleEnsemble::sample(&ProcessSpec::iid(k.clone(), 1).unwrap(), &grid, 20000, 5).unwrap();
        assert!(ens.covariance_error(0) < 0.05, "{}: {}", k.name(), ens.covariance_error(0));
    }
}

#[test]
fn discrete_level2_moment_matches_quadruple_sum() {
    let grid: Vec<f64> = vec![0.0, 0.1, 0.35, 0.5, 0.8, 1.0];
    let ki = fbm_cov(0.35).unwrap();
    let kj = ou_cov(1.0, 1.0, false).unwrap();
    let a = increment_covariance_matrix(&ki, &grid);
    let b = increment_covariance_matrix(&kj, &grid);
    let m = grid.len() - 1;
    let c = |k: usize, l: usize| {
        if k < l {
            1.0
        } else if k == l {
            0.5
        } else {
            0.0
        }
    };
    let mut brute = 0.0;
    for k in 0..m {
        for l in 0..m {
            for k2 in 0..m {
                for l2 in 0..m {
                    brute += c(k, l) * c(k2, l2) * a[(k, k2)] * b[(l, l2)];
                }
            }
        }
    }
    let exact = discrete_level2_moment(&ki, &kj, &grid);
    assert!((exact - brute).abs() < 1e-14, "{exact} vs {brute}");

    let spec = ProcessSpec::new(vec![ki, kj]).unwrap();
    let ens = SampleEnsemble::sample(&spec, &grid, 40000, 9).unwrap();
    let inc = |x: &[f64]| x.windows(2).map(|w| w[1] - w[0]).collect::<Vec<_>>();
    let sq: Vec<f64> =
        (0..ens.len()).map(|i| level2_iterated(&inc(ens.component(i, 0)), &inc(ens.component(i, 1))).powi(2)).collect();
    let mc = MCEstimate::from_samples(&sq);
    assert!(mc.agrees_with(exact, 4.0, 0.0), "{mc:?} vs {exact}");
}

#[test]
fn sampling_ignores_thread_count() {
    let spec = ProcessSpec::iid(fbm_cov(0.4).unwrap(), 2).unwrap();
    let grid = dyadic_points(5);
    let draw = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let ens = SampleEnsemble::sample(&spec, &grid, 64, 17).unwrap();
            let lifts = lift_ensemble(&ens);
            (0..ens.len())
                .flat_map(|i| ens.component(i, 1).to_vec())
                .chain(lifts.iter().map(|x| x.last().tensor().get2(0, 1)))
                .collect::<Vec<_>>()
        })
    };
    assert_eq!(draw(1), draw(3));
}

#[test]
fn brownian_lifts_satisfy_grr() {
    let (r, alpha) = (2.6, 0.3);
    let q = grr_q0(r, alpha);
    let ens = SampleEnsemble::sample(&ProcessSpec::iid(bm_cov(), 2).unwrap(), &dyadic_points(6), 60, 21).unwrap();
    for x in lift_ensemble(&ens) {
        let c = grr_holder_check(&x, r, alpha, q).unwrap();
        assert!(c.holds, "{c:?}");
    }
}

#[test]
fn besov_functional_stable_under_refinement() {
    let (q, r) = (4.0, 3.0);
    let ens = SampleEnsemble::sample(&ProcessSpec::iid(bm_cov(), 1).unwrap(), &dyadic_points(8), 40, 33).unwrap();
    let coarse = ens.restrict_to(&dyadic_points(7)).unwrap();
    let total =
        |e: &SampleEnsemble| (0..e.len()).map(|i| besov_functional_path(&e.path(i), q, r).unwrap()).sum::<f64>();
    let (fine, coarse) = (total(&ens), total(&coarse));
    assert!((fine / coarse - 1.0).abs() < 0.05, "{fine} vs {coarse}");
}

#[test]
fn gaussian_chaos_ratio() {
    let ens = SampleEnsemble::sample(&ProcessSpec::iid(bm_cov(), 2).unwrap(), &dyadic_points(4), 20000, 4).unwrap();
    let coords = ensemble_chaos_coordinates(&ens).unwrap();
    let level1: Vec<f64> = coords.iter().map(|c| c[0]).collect();
    let rep = chaos_ratio_check(&level1, 1, 4);
    assert!((rep.ratio - 3f64.powf(0.25)).abs() < 0.02, "{rep:?}");
    assert!(rep.holds && (rep.bound - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    for (level, q) in [(2usize, 4u32), (2, 6), (3, 4)] {
        let s: Vec<f64> = coords.iter().map(|c| c[level - 1]).collect();
        assert!(chaos_ratio_check(&s, level, q).holds);
    }
}

#[test]
fn besov_distance_shrinks_with_perturbation() {
    let (r, alpha) = (2.6, 0.3);
    let q = grr_q0(r, alpha);
    let spec = ProcessSpec::iid(bm_cov(), 2).unwrap();
    let grid = dyadic_points(6);
    let x = SampleEnsemble::sample(&spec, &grid, 1, 40).unwrap();
    let w = SampleEnsemble::sample_channel(&spec, &grid, 1, 40, 1).unwrap();
    let lx = lift_ensemble(&x).remove(0);
    let (mut log_delta, mut log_dist) = (Vec::new(), Vec::new());
    let mut theta = 0.0;
    for eps in [0.4, 0.2, 0.1, 0.05, 0.025] {
        let y = lift_ensemble(&x.perturbed(&w, eps).unwrap()).remove(0);
        let s = besov_distance_check(&lx, &y, r, alpha, q).unwrap();
        assert_eq!(s.hypotheses(s.m, s.delta * (1.0 + 1e-12)), [true; 3]);
        theta = s.theta;
        log_delta.push(s.delta.ln());
        log_dist.push(s.distance.ln());
    }
    let slope = regression_slope(&log_delta, &log_dist);
    assert!(slope >= theta, "slope {slope} below {theta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fbm_gram_is_psd(h in 0.05f64..0.95, level in 2u32..6) {
        let k = fbm_cov(h).unwrap();
        prop_assert!(gram_matrix(&k, &dyadic_points(level)).is_ok());
    }

    #[test]
    fn ou_gram_is_psd(theta in 0.1f64..5.0, sigma in 0.1f64..3.0, stationary in any::<bool>()) {
        let k = ou_cov(theta, sigma, stationary).unwrap();
        let g = gram_matrix(&k, &dyadic_points(4));
        prop_assert!(g.is_ok());
    }

    #[test]
    fn cameron_martin_cauchy_schwarz(seed in any::<u64>()) {
        let k = fbm_cov(0.4).unwrap();
        let hs = random_elements(&k, 2, 5, seed).unwrap();
        let ip = cm_inner(&hs[0], &hs[1]).unwrap();
        prop_assert!(ip * ip <= cm_norm_squared(&hs[0]) * cm_norm_squared(&hs[1]) * (1.0 + 1e-10) + 1e-14);
    }
}
