mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use rbo_core::gp::*;
use rbo_core::inner_opt::BoxBounds;
use rbo_core::Error;

#[test]
fn kernel_examples() {
    let se = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.7], 1.0, 0.0).unwrap();
    assert_eq!(se.eval(&[0.3], &[0.3]).unwrap(), 1.0);
    let se1 = KernelSpec::new(KernelFamily::SquaredExponential, vec![1.0], 1.0, 0.0).unwrap();
    let v = se1.eval(&[0.0], &[2f64.sqrt()]).unwrap();
    assert!((v - 0.367_879_441_171_442_3).abs() < 1e-12);
    let m32 = KernelSpec::new(KernelFamily::Matern32, vec![0.4, 0.9], 2.0, 0.0).unwrap();
    assert_eq!(m32.eval(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), 2.0);
    assert!(matches!(m32.eval(&[0.1], &[0.1, 0.2]), Err(Error::InvalidArgument(_))));
}

#[test]
fn kernel_matches_reference_formulas() {
    let mut r = rng(3);
    for _ in 0..100 {
        let k = random_kernel(&mut r, 3, 0.0);
        let x: Vec<f64> = (0..3).map(|_| r.random()).collect();
        let y: Vec<f64> = (0..3).map(|_| r.random()).collect();
        assert!(rel_close(k.eval(&x, &y).unwrap(), kernel_ref(&k, &x, &y), 1e-13, 1e-15));
    }
}

#[test]
fn lml_single_point_zero_residual() {
    let data = Dataset::new(&[vec![0.2]], &[1.3]).unwrap();
    let k = KernelSpec::new(KernelFamily::Matern52, vec![0.5], 0.75, 0.25).unwrap();
    let lml = log_marginal_likelihood(&data, &k).unwrap();
    assert!((lml + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
}

#[test]
fn lml_independent_points_factorize() {
    // far apart relative to the lengthscale: diagonal covariance
    let data = Dataset::new(&[vec![0.0], vec![100.0]], &[1.0, -2.0]).unwrap();
    let k = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.1], 1.5, 0.5).unwrap();
    let mu = -0.5;
    let var = 2.0;
    let logpdf = |y: f64| -0.5 * (y - mu) * (y - mu) / var - 0.5 * (2.0 * std::f64::consts::PI * var).ln();
    let lml = log_marginal_likelihood(&data, &k).unwrap();
    assert!((lml - (logpdf(1.0) + logpdf(-2.0))).abs() < 1e-12);
}

#[test]
fn lml_matches_dense_oracle() {
    let mut r = rng(11);
    for _ in 0..20 {
        let data = random_dataset(&mut r, 5, 2);
        let k = random_kernel(&mut r, 2, 0.01);
        let oracle = dense(&data, &k, data.mean_value()).lml();
        assert!(rel_close(log_marginal_likelihood(&data, &k).unwrap(), oracle, 1e-8, 1e-8));
    }
}

#[test]
fn lml_gradient_matches_finite_differences() {
    let mut r = rng(5);
    for _ in 0..10 {
        let data = random_dataset(&mut r, 8, 2);
        let k = random_kernel(&mut r, 2, 0.05);
        let (_, g) = log_marginal_likelihood_grad(&data, &k).unwrap();
        let mut theta: Vec<f64> = k.lengthscales.iter().map(|l| l.ln()).collect();
        theta.push(k.amplitude.ln());
        theta.push(k.noise.ln());
        let eval = |t: &[f64]| {
            let spec = KernelSpec::new(k.family, vec![t[0].exp(), t[1].exp()], t[2].exp(), t[3].exp()).unwrap();
            log_marginal_likelihood(&data, &spec).unwrap()
        };
        for i in 0..4 {
            let h = 1e-5;
            let mut tp = theta.clone();
            tp[i] += h;
            let mut tm = theta.clone();
            tm[i] -= h;
            let fd = (eval(&tp) - eval(&tm)) / (2.0 * h);
            assert!(rel_close(g[i], fd, 1e-4, 1e-6), "param {i}: {} vs {fd}", g[i]);
        }
    }
}

#[test]
fn posterior_rejects_empty_data() {
    let k = KernelSpec::isotropic(KernelFamily::Matern52, 1, 0.3, 1.0, 0.0).unwrap();
    assert!(matches!(GpPosterior::new(&Dataset::empty(1), &k), Err(Error::InvalidArgument(_))));
}

#[test]
fn three_point_posterior_matches_dense_formula() {
    let data = Dataset::new(&[vec![0.1], vec![0.4], vec![0.9]], &[1.0, -0.5, 0.3]).unwrap();
    let k = KernelSpec::new(KernelFamily::Matern52, vec![0.3], 1.2, 0.01).unwrap();
    let post = GpPosterior::new(&data, &k).unwrap();
    let oracle = dense(&data, &k, data.mean_value());
    for x in [0.0, 0.25, 0.6, 1.0] {
        let p = post.predict(&[x]);
        let (m, v) = oracle.predict(&data, &k, &[x]);
        assert!((p.mean - m).abs() < 1e-10);
        assert!((p.variance - v).abs() < 1e-10);
    }
}

#[test]
fn constant_prior_mean_is_respected() {
    let data = Dataset::new(&[vec![0.5]], &[2.0]).unwrap();
    let k = KernelSpec::new(KernelFamily::SquaredExponential, vec![0.1], 1.0, 0.0).unwrap();
    let post = GpPosterior::with_prior_mean(&data, &k, PriorMean::Constant(-1.0)).unwrap();
    // far from the data the prediction reverts to the prior
    let p = post.predict(&[100.0]);
    assert!((p.mean + 1.0).abs() < 1e-12 && (p.variance - 1.0).abs() < 1e-12);
}

#[test]
fn cholesky_reconstructs_covariance() {
    let mut r = rng(21);
    let data = random_dataset(&mut r, 12, 3);
    let k = random_kernel(&mut r, 3, 0.1);
    let post = GpPosterior::new(&data, &k).unwrap();
    let l = post.cholesky_dense();
    let n = data.len();
    for i in 0..n {
        for j in 0..n {
            let llt: f64 = (0..n).map(|c| l[i * n + c] * l[j * n + c]).sum();
            let kij = kernel_ref(&k, data.point(i), data.point(j)) + if i == j { k.noise } else { 0.0 };
            assert!(rel_close(llt, kij, 1e-8, 1e-12));
        }
    }
}

#[test]
fn update_interpolates_new_point() {
    let data = Dataset::new(&[vec![0.2], vec![0.7]], &[0.0, 1.0]).unwrap();
    let k = KernelSpec::new(KernelFamily::Matern32, vec![0.2], 1.0, 0.0).unwrap();
    let post = GpPosterior::new(&data, &k).unwrap().fantasy_update(&[0.45], -0.8).unwrap();
    let p = post.predict(&[0.45]);
    assert!((p.mean + 0.8).abs() < 1e-8 && p.variance < 1e-8);
}

#[test]
fn chain_of_updates_equals_batch() {
    let mut r = rng(9);
    let data = random_dataset(&mut r, 4, 2);
    let extra = random_dataset(&mut r, 5, 2);
    let k = random_kernel(&mut r, 2, 1e-4);
    let mut post = GpPosterior::new(&data, &k).unwrap();
    let mut all = data.clone();
    for i in 0..extra.len() {
        post = post.fantasy_update(extra.point(i), extra.values()[i]).unwrap();
        all.push(extra.point(i), extra.values()[i]).unwrap();
    }
    let batch = GpPosterior::with_prior_mean(&all, &k, PriorMean::Constant(data.mean_value())).unwrap();
    for _ in 0..10 {
        let x: Vec<f64> = (0..2).map(|_| r.random()).collect();
        let (a, b) = (post.predict(&x), batch.predict(&x));
        assert!((a.mean - b.mean).abs() < 1e-8 && (a.variance - b.variance).abs() < 1e-8);
    }
}

#[test]
fn duplicate_noisy_update_shrinks_variance() {
    let data = Dataset::new(&[vec![0.3], vec![0.6]], &[0.2, 0.4]).unwrap();
    let k = KernelSpec::new(KernelFamily::Matern52, vec![0.2], 1.0, 0.1).unwrap();
    let post = GpPosterior::new(&data, &k).unwrap();
    let before = post.predict(&[0.3]).variance;
    let after = post.fantasy_update(&[0.3], 0.25).unwrap().predict(&[0.3]).variance;
    assert!(after < before);
}

#[test]
fn sampling_is_scale_and_shift() {
    let data = Dataset::new(&[vec![0.0]], &[0.0]).unwrap();
    let k = KernelSpec::new(KernelFamily::SquaredExponential, vec![1e-3], 4.0, 0.0).unwrap();
    let post = GpPosterior::with_prior_mean(&data, &k, PriorMean::Constant(1.5)).unwrap();
    let x = [0.5];
    assert_eq!(post.sample(&x, 0.0), post.predict(&x).mean);
    assert!((post.sample(&x, 1.0) - (1.5 + 2.0)).abs() < 1e-12);
}

#[test]
fn sample_moments_match_prediction() {
    let mut r = rng(17);
    let data = random_dataset(&mut r, 6, 1);
    let k = random_kernel(&mut r, 1, 0.01);
    let post = GpPosterior::new(&data, &k).unwrap();
    let x = [0.37];
    let p = post.predict(&x);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| post.sample(&x, r.sample(StandardNormal))).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = p.variance.sqrt();
    assert!((mean - p.mean).abs() < 3.0 * sd / (n as f64).sqrt());
    // standard error of the sample sd is about sd / sqrt(2n)
    assert!((var.sqrt() - sd).abs() < 3.0 * sd / (2.0 * n as f64).sqrt());
}

fn se_sample_path(r: &mut rand_chacha::ChaCha8Rng, xs: &[f64], l: f64) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let n = xs.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        (-(xs[i] - xs[j]).powi(2) / (2.0 * l * l)).exp() + if i == j { 1e-8 } else { 0.0 }
    });
    let chol = k.cholesky().expect("jittered Gram is PD");
    let z = DVector::from_iterator(n, (0..n).map(|_| r.sample::<f64, _>(StandardNormal)));
    (chol.l() * z).iter().copied().collect()
}

#[test]
fn fit_recovers_lengthscale() {
    let domain = BoxBounds::new(vec![0.0], vec![4.0]).unwrap();
    let mut within = 0;
    let mut fitted = Vec::new();
    for seed in 0..20 {
        let mut r = rng(100 + seed);
        let xs: Vec<f64> = (0..40).map(|_| r.random_range(0.0..4.0)).collect();
        let ys = se_sample_path(&mut r, &xs, 0.5);
        let pts: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
        let data = Dataset::new(&pts, &ys).unwrap();
        let bounds = HyperBounds::from_data(&data, &domain);
        let spec = fit_hyperparameters(&data, KernelFamily::SquaredExponential, &bounds).unwrap();
        let l = spec.lengthscales[0];
        fitted.push(l);
        if (0.25..=1.0).contains(&l) {
            within += 1;
        }
    }
    assert!(within >= 18, "only {within}/20 within a factor 2: {fitted:?}");
}

#[test]
fn fit_stays_within_bounds() {
    let mut r = rng(8);
    let domain = BoxBounds::unit(2);
    for _ in 0..5 {
        let data = random_dataset(&mut r, 10, 2);
        let b = HyperBounds::from_data(&data, &domain);
        let s = fit_hyperparameters(&data, KernelFamily::Matern52, &b).unwrap();
        for (l, (lo, hi)) in s.lengthscales.iter().zip(&b.lengthscale) {
            assert!(*l >= lo * (1.0 - 1e-12) && *l <= hi * (1.0 + 1e-12));
        }
        assert!(s.amplitude >= b.amplitude.0 * (1.0 - 1e-12) && s.amplitude <= b.amplitude.1 * (1.0 + 1e-12));
        assert!(s.noise >= b.noise.0 * (1.0 - 1e-12) && s.noise <= b.noise.1 * (1.0 + 1e-12));
    }
}

#[test]
fn duplicate_points_fit_noise_to_lower_bound() {
    let data = Dataset::new(&[vec![0.5], vec![0.5]], &[1.0, 1.0]).unwrap();
    let b = HyperBounds::from_data(&data, &BoxBounds::unit(1));
    let s = fit_hyperparameters(&data, KernelFamily::Matern52, &b).unwrap();
    assert!(rel_close(s.noise, b.noise.0, 1e-6, 0.0), "{} vs {}", s.noise, b.noise.0);
}

#[test]
fn constant_values_fit_amplitude_low_or_flat() {
    let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
    let data = Dataset::new(&pts, &[0.7; 6]).unwrap();
    let b = HyperBounds::from_data(&data, &BoxBounds::unit(1));
    let s = fit_hyperparameters(&data, KernelFamily::SquaredExponential, &b).unwrap();
    if !rel_close(s.amplitude, b.amplitude.0, 1e-6, 0.0) {
        // profile scan over the amplitude with the other parameters held
        let best = log_marginal_likelihood(&data, &s).unwrap();
        let (lo, hi) = (b.amplitude.0.ln(), b.amplitude.1.ln());
        for i in 0..=50 {
            let a = (lo + (hi - lo) * i as f64 / 50.0).exp();
            let probe = KernelSpec { amplitude: a, ..s.clone() };
            let v = log_marginal_likelihood(&data, &probe).unwrap();
            assert!((v - best).abs() < 1e-6, "likelihood not flat in amplitude");
        }
    }
}

#[test]
fn fit_needs_two_points() {
    let data = Dataset::new(&[vec![0.5]], &[1.0]).unwrap();
    let b = HyperBounds::from_data(&data, &BoxBounds::unit(1));
    assert!(fit_hyperparameters(&data, KernelFamily::Matern52, &b).is_err());
}

#[test]
fn interpolation_and_oracle_on_random_datasets() {
    let mut r = rng(1);
    for _ in 0..50 {
        let d = r.random_range(1..4);
        let n = r.random_range(2..12);
        let data = spread_dataset(&mut r, n, d);
        // short lengthscales keep the noiseless Gram matrix well conditioned
        let mut k = random_kernel(&mut r, d, 0.0);
        k.lengthscales = (0..d).map(|_| r.random_range(0.05..0.2)).collect();
        let post = GpPosterior::new(&data, &k).unwrap();
        for i in 0..n {
            let p = post.predict(data.point(i));
            assert!((p.mean - data.values()[i]).abs() <= 1e-8);
            assert!(p.variance <= 1e-8);
        }
        let noisy = KernelSpec { noise: 0.05, ..k };
        let post = GpPosterior::new(&data, &noisy).unwrap();
        let oracle = dense(&data, &noisy, data.mean_value());
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| r.random()).collect();
            let p = post.predict(&x);
            let (m, v) = oracle.predict(&data, &noisy, &x);
            assert!((p.mean - m).abs() <= 1e-8 && (p.variance - v).abs() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_posterior_matches_dense_inverse(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, 10, 2);
        let k = random_kernel(&mut r, 2, 0.02);
        let post = GpPosterior::new(&data, &k).unwrap();
        let oracle = dense(&data, &k, data.mean_value());
        let x: Vec<f64> = (0..2).map(|_| r.random()).collect();
        let p = post.predict(&x);
        let (m, v) = oracle.predict(&data, &k, &x);
        prop_assert!((p.mean - m).abs() <= 1e-8);
        prop_assert!((p.variance - v).abs() <= 1e-8);
        prop_assert!(p.variance >= 0.0);
    }

    #[test]
    fn prop_gram_symmetric_psd(seed in 0u64..10_000, n in 2usize..20) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, 2);
        let k = random_kernel(&mut r, 2, 0.0);
        let g = nalgebra::DMatrix::from_fn(n, n, |i, j| k.eval(data.point(i), data.point(j)).unwrap());
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g[(i, j)], g[(j, i)]);
            }
        }
        let min_eig = g.symmetric_eigenvalues().min();
        prop_assert!(min_eig >= -1e-8 * k.amplitude);
    }

    #[test]
    fn prop_fantasy_chain_equals_batch(seed in 0u64..10_000, steps in 1usize..6) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, 3, 1);
        let extra = random_dataset(&mut r, steps, 1);
        let k = random_kernel(&mut r, 1, 1e-3);
        let mut post = GpPosterior::new(&data, &k).unwrap();
        let mut all = data.clone();
        for i in 0..steps {
            post = post.fantasy_update(extra.point(i), extra.values()[i]).unwrap();
            all.push(extra.point(i), extra.values()[i]).unwrap();
        }
        let batch = GpPosterior::with_prior_mean(&all, &k, PriorMean::Constant(data.mean_value())).unwrap();
        for j in 0..10 {
            let x = [j as f64 / 9.0];
            let (a, b) = (post.predict(&x), batch.predict(&x));
            prop_assert!((a.mean - b.mean).abs() <= 1e-8);
            prop_assert!((a.variance - b.variance).abs() <= 1e-8);
        }
    }
}
