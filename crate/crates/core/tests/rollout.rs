mod common;

use common::*;
use rand::Rng;
use rbo_core::acquisition::*;
use rbo_core::gp::*;
use rbo_core::inner_opt::BoxBounds;
use rbo_core::objectives::demo1d_posterior;
use rbo_core::rollout::*;
use rbo_core::vr::*;

fn cfg(h: usize, n: usize, vr: VrConfig) -> RolloutConfig {
    RolloutConfig {
        vr,
        ..RolloutConfig::new(h, n, BoxBounds::unit(1))
    }
}

fn ei_at(post: &GpPosterior, x: &[f64]) -> f64 {
    let p = post.predict(x);
    expected_improvement(p.mean, p.variance.sqrt(), post.incumbent())
}

#[test]
fn horizon_one_unrolled() {
    let post = demo1d_posterior().unwrap();
    let x = [0.3];
    let c = cfg(1, 1, VrConfig::plain_mc());
    for z in [-1.5, 0.0, 0.7] {
        let t = simulate_trajectory(&post, &x, &[z], &c).unwrap();
        let p = post.predict(&x);
        let y = p.mean + p.variance.sqrt() * z;
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.steps[0].y, y);
        assert_eq!(t.total_reward, (post.incumbent() - y).max(0.0));
    }
}

#[test]
fn zero_variates_follow_the_mean() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 1, VrConfig::plain_mc());
    let t = simulate_trajectory(&post, &[0.2], &[0.0, 0.0], &c).unwrap();
    assert_eq!(t.steps[0].y, post.predict(&[0.2]).mean);
    let f = post.fantasy_update(&[0.2], t.steps[0].y).unwrap();
    assert_eq!(t.steps[1].y, f.predict(&t.steps[1].x).mean);
    assert_eq!(t, simulate_trajectory(&post, &[0.2], &[0.0, 0.0], &c).unwrap());
}

#[test]
fn trajectory_invariants() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(4, 1, VrConfig::plain_mc());
    let z = make_zmatrix(20, 4, &VrConfig::plain_mc(), 5).unwrap();
    for row in z.iter_rows() {
        let t = simulate_trajectory(&post, &[0.7], row, &c).unwrap();
        let mut prev = f64::INFINITY;
        for s in &t.steps {
            assert_eq!(s.reward, (s.y_star_before - s.y).max(0.0));
            assert!(s.y_star_before <= prev);
            prev = s.y_star_before;
        }
        let total: f64 = t.steps.iter().map(|s| s.reward).sum();
        assert!((t.total_reward - total).abs() < 1e-15);
    }
}

/// Step-by-step rollout against a posterior rebuilt from scratch at every
/// step, with dense-solve predictions. The library's choice of each next point
/// is only accepted if it maximizes EI on the rebuilt posterior.
fn hand_rollout(post: &GpPosterior, lib: &TrajectoryRecord, z: &[f64], bounds: &BoxBounds) -> f64 {
    let kernel = post.kernel().clone();
    let mut data = post.dataset().clone();
    let mut y_star = post.incumbent();
    let mut total = 0.0;
    for (t, zt) in z.iter().enumerate() {
        let x = lib.steps[t].x.clone();
        if t > 0 {
            let rebuilt =
                GpPosterior::with_prior_mean(&data, &kernel, PriorMean::Constant(post.prior_mean())).unwrap();
            let inc = Incumbent::new(y_star);
            let best = acq_argmax(&AcquisitionKind::Ei, &rebuilt, inc, bounds, 5, 99).unwrap();
            let chosen = eval_acquisition(&AcquisitionKind::Ei, &rebuilt, &x, inc, bounds).unwrap();
            assert!(chosen >= best.f_best - 1e-9, "step {t}: {chosen} < {}", best.f_best);
        }
        let (m, v) = dense(&data, &kernel, post.prior_mean()).predict(&data, &kernel, &x);
        let y = m + v.max(0.0).sqrt() * zt;
        total += (y_star - y).max(0.0);
        y_star = y_star.min(y);
        data.push(&x, y).unwrap();
    }
    total
}

#[test]
fn horizon_three_matches_hand_implementation() {
    let mut r = rng(13);
    let data = spread_dataset(&mut r, 4, 1);
    let k = KernelSpec::new(KernelFamily::Matern52, vec![0.15], 1.0, 1e-4).unwrap();
    let post = GpPosterior::new(&data, &k).unwrap();
    let c = cfg(3, 1, VrConfig::plain_mc());
    let z = make_zmatrix(10, 3, &VrConfig::plain_mc(), 21).unwrap();
    for row in z.iter_rows() {
        let lib = simulate_trajectory(&post, &[0.37], row, &c).unwrap();
        let hand = hand_rollout(&post, &lib, row, &c.bounds);
        assert!((lib.total_reward - hand).abs() < 1e-10, "{} vs {hand}", lib.total_reward);
    }
}

#[test]
fn horizon_one_is_ei() {
    let post = demo1d_posterior().unwrap();
    for x in [[0.05], [0.3], [0.52]] {
        let ei = ei_at(&post, &x);
        let plain = cfg(1, 20_000, VrConfig::plain_mc());
        let z = make_zmatrix(20_000, 1, &plain.vr, 3).unwrap();
        let est = rollout_acquisition(&post, &x, &plain, &z).unwrap();
        assert!((est.mean - ei).abs() < 3.0 * est.std_error, "{} vs {ei}", est.mean);

        let exact = VrConfig {
            beta_mode: BetaMode::Fixed(vec![1.0]),
            ..VrConfig::plain_mc()
        };
        let exact = VrConfig {
            covariates: vec![Covariate::EiFirstStep],
            ..exact
        };
        for n in [2, 7, 100] {
            let z = make_zmatrix(n, 1, &exact, 1).unwrap();
            let est = rollout_acquisition(&post, &x, &cfg(1, n, exact.clone()), &z).unwrap();
            assert!((est.mean - ei).abs() < 1e-10);
        }
    }
}

#[test]
fn horizon_one_samples_equal_ei_covariate() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(1, 50, VrConfig::plain_mc());
    let z = make_zmatrix(50, 1, &c.vr, 8).unwrap();
    let f = rollout_samples(&post, &[0.4], &c, &z).unwrap();
    let (g, _) =
        first_step_covariates(&post, &[0.4], Incumbent::of(&post), &z.column(0), &[Covariate::EiFirstStep]).unwrap();
    assert_eq!(f, g[0]);
}

#[test]
fn horizon_two_matches_large_plain_mc() {
    let post = demo1d_posterior().unwrap();
    let x = [0.3];
    let truth_cfg = cfg(2, 10_000, VrConfig::plain_mc());
    let z = make_zmatrix(10_000, 2, &truth_cfg.vr, 77).unwrap();
    let truth = rollout_acquisition(&post, &x, &truth_cfg, &z).unwrap();
    let vr_cfg = cfg(2, 400, VrConfig::default());
    let z = make_zmatrix(400, 2, &vr_cfg.vr, 0).unwrap();
    let est = rollout_acquisition(&post, &x, &vr_cfg, &z).unwrap();
    let se = (truth.std_error.powi(2) + est.std_error.powi(2)).sqrt();
    assert!((truth.mean - est.mean).abs() < 3.0 * se, "{} vs {} (se {se})", truth.mean, est.mean);
}

#[test]
fn estimates_are_nonnegative_and_report_errors() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(3, 30, VrConfig::plain_mc());
    let z = make_zmatrix(30, 3, &c.vr, 2).unwrap();
    let est = rollout_acquisition(&post, &[0.9], &c, &z).unwrap();
    assert!(est.mean >= 0.0);
    let samples = est.per_sample.as_ref().unwrap();
    let (_, se) = mean_and_std_error(samples);
    assert_eq!(est.std_error, se);
    assert_eq!(est.n_used, 30);
    let one = make_zmatrix(1, 3, &c.vr, 2).unwrap();
    assert_eq!(rollout_acquisition(&post, &[0.9], &c, &one).unwrap().std_error, f64::INFINITY);
    // too few samples to estimate beta falls back to the plain mean
    let cv = cfg(2, 3, VrConfig::default());
    let z3 = make_zmatrix(3, 2, &cv.vr, 0).unwrap();
    let e = rollout_acquisition(&post, &[0.9], &cv, &z3).unwrap();
    assert!(e.cv.is_none());
}

#[test]
fn config_checks() {
    let post = demo1d_posterior().unwrap();
    let z = make_zmatrix(4, 2, &VrConfig::plain_mc(), 0).unwrap();
    assert!(rollout_acquisition(&post, &[0.5], &cfg(3, 4, VrConfig::plain_mc()), &z).is_err());
    assert!(rollout_acquisition(&post, &[0.5], &cfg(0, 4, VrConfig::plain_mc()), &z).is_err());
    assert!(rollout_acquisition(&post, &[0.5], &cfg(11, 4, VrConfig::plain_mc()), &z).is_err());
    assert!(rollout_acquisition(&post, &[1.5], &cfg(2, 4, VrConfig::plain_mc()), &z).is_err());
}

#[test]
fn common_random_numbers_make_the_estimate_continuous() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 200, VrConfig::qmc_only());
    let z = make_zmatrix(200, 2, &c.vr, 0).unwrap();
    let x = 0.31;
    let base = rollout_acquisition(&post, &[x], &c, &z).unwrap().mean;
    let diffs: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
        .iter()
        .map(|d| (rollout_acquisition(&post, &[x + d], &c, &z).unwrap().mean - base).abs())
        .collect();
    assert!(diffs[3] < 1e-6, "{diffs:?}");
    assert!(diffs[3] <= diffs[1] && diffs[2] <= diffs[0], "{diffs:?}");
}

#[test]
fn doubling_samples_halves_variance() {
    let post = demo1d_posterior().unwrap();
    let x = [0.3];
    let var_of = |n: usize, offset: u64| {
        let c = cfg(2, n, VrConfig::plain_mc());
        let means: Vec<f64> = (0..50)
            .map(|t| {
                let z = make_zmatrix(n, 2, &c.vr, offset + t).unwrap();
                rollout_acquisition(&post, &x, &c, &z).unwrap().mean
            })
            .collect();
        let m = means.iter().sum::<f64>() / 50.0;
        means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 49.0
    };
    let ratio = var_of(100, 1000) / var_of(200, 2000);
    assert!((1.5..=3.0).contains(&ratio), "variance ratio {ratio}");
}

#[test]
fn control_variate_reduces_variance_when_condition_holds() {
    // ground-truth covariances from a large sample
    let post = demo1d_posterior().unwrap();
    let x = [0.3];
    let c = cfg(2, 1, VrConfig::plain_mc());
    let inc = Incumbent::of(&post);
    let big = make_zmatrix(20_000, 2, &c.vr, 99).unwrap();
    let f = rollout_samples(&post, &x, &c, &big).unwrap();
    let (g, _) = first_step_covariates(&post, &x, inc, &big.column(0), &[Covariate::EiFirstStep]).unwrap();
    let n = f.len() as f64;
    let (fm, gm) = (f.iter().sum::<f64>() / n, g[0].iter().sum::<f64>() / n);
    let cov: f64 = f.iter().zip(&g[0]).map(|(a, b)| (a - fm) * (b - gm)).sum::<f64>() / (n - 1.0);
    let var_g: f64 = g[0].iter().map(|b| (b - gm).powi(2)).sum::<f64>() / (n - 1.0);
    let beta = 1.0;
    assert!(beta * beta * var_g - 2.0 * beta * cov < 0.0);

    let fixed = VrConfig {
        covariates: vec![Covariate::EiFirstStep],
        beta_mode: BetaMode::Fixed(vec![beta]),
        ..VrConfig::plain_mc()
    };
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let mut wins = 0;
    for t in 0..50 {
        let z = make_zmatrix(100, 2, &fixed, 500 + t).unwrap();
        let cf = cfg(2, 100, fixed.clone());
        let est = rollout_acquisition(&post, &x, &cf, &z).unwrap();
        let raw = rollout_samples(&post, &x, &cf, &z).unwrap();
        if var(est.per_sample.as_ref().unwrap()) < var(&raw) {
            wins += 1;
        }
    }
    // one-sided sign test at 5%: P(Bin(50, 1/2) >= 32) < 0.05
    assert!(wins >= 32, "{wins}/50");
}

#[test]
fn shared_stream_differences_have_lower_variance() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 100, VrConfig::plain_mc());
    let mut r = rng(6);
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    for _ in 0..3 {
        let x1: f64 = r.random_range(0.0..0.95);
        let x2 = x1 + 0.02;
        let (mut shared, mut indep) = (Vec::new(), Vec::new());
        for t in 0..30 {
            let z1 = make_zmatrix(100, 2, &c.vr, 10 * t).unwrap();
            let z2 = make_zmatrix(100, 2, &c.vr, 10 * t + 1).unwrap();
            let a = rollout_acquisition(&post, &[x1], &c, &z1).unwrap().mean;
            shared.push(a - rollout_acquisition(&post, &[x2], &c, &z1).unwrap().mean);
            indep.push(a - rollout_acquisition(&post, &[x2], &c, &z2).unwrap().mean);
        }
        assert!(var(&shared) < var(&indep));
    }
}
