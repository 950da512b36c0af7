mod common;

use common::*;
use rand::Rng;
use rbo_core::acquisition::*;
use rbo_core::inner_opt::BoxBounds;
use rbo_core::objectives::demo1d_posterior;
use rbo_core::policy_search::*;
use rbo_core::rollout::RolloutConfig;
use rbo_core::vr::*;

fn cfg(h: usize, n: usize) -> RolloutConfig {
    RolloutConfig {
        vr: VrConfig::plain_mc(),
        ..RolloutConfig::new(h, n, BoxBounds::unit(1))
    }
}

#[test]
fn singleton_set_is_its_own_argmax() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 50);
    let z = make_zmatrix(50, 2, &c.vr, 0).unwrap();
    let set = PolicySet::new(vec![AcquisitionKind::Ei]).unwrap();
    let choice = select_policy(&post, &set, &c, &z, 4).unwrap();
    let ei = acq_argmax(&AcquisitionKind::Ei, &post, Incumbent::of(&post), &c.bounds, ARGMAX_RESTARTS, 4).unwrap();
    assert_eq!(choice.chosen, AcquisitionKind::Ei);
    assert_eq!(choice.x_next, ei.x_best);
}

#[test]
fn horizon_one_matches_plain_ei_bitwise() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(1, 10);
    let z = make_zmatrix(10, 1, &c.vr, 0).unwrap();
    let set = PolicySet::new(vec![AcquisitionKind::Ei]).unwrap();
    for seed in 0..5 {
        let choice = select_policy(&post, &set, &c, &z, seed).unwrap();
        let ei = acq_argmax(&AcquisitionKind::Ei, &post, Incumbent::of(&post), &c.bounds, ARGMAX_RESTARTS, seed)
            .unwrap();
        assert_eq!(choice.x_next.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                   ei.x_best.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn ties_go_to_the_first_member() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 30);
    let z = make_zmatrix(30, 2, &c.vr, 1).unwrap();
    let set = PolicySet::new(vec![AcquisitionKind::Ei, AcquisitionKind::Ei]).unwrap();
    let choice = select_policy(&post, &set, &c, &z, 0).unwrap();
    assert_eq!(choice.chosen_index, 0);
    assert_eq!(choice.scores[0], choice.scores[1]);
}

#[test]
fn chosen_score_dominates_and_is_deterministic() {
    let post = demo1d_posterior().unwrap();
    let c = cfg(2, 40);
    let z = make_zmatrix(40, 2, &c.vr, 2).unwrap();
    let set = PolicySet::new(vec![
        AcquisitionKind::Ei,
        AcquisitionKind::Kg(30),
        AcquisitionKind::Ucb(0.0),
        AcquisitionKind::Ucb(2.0),
    ])
    .unwrap();
    let a = select_policy(&post, &set, &c, &z, 0).unwrap();
    let best = a.scores[a.chosen_index].as_ref().unwrap().mean;
    for s in a.scores.iter().flatten() {
        assert!(best >= s.mean);
    }
    assert_eq!(a.excluded().count(), 0);
    assert_eq!(a, select_policy(&post, &set, &c, &z, 0).unwrap());
}

#[test]
fn exploring_member_wins_on_the_demo_problem() {
    // UCB-8 heads for the unexplored basin holding the global minimum, UCB-0
    // for the incumbent's neighbourhood
    let post = demo1d_posterior().unwrap();
    let set = PolicySet::new(vec![AcquisitionKind::Ucb(0.0), AcquisitionKind::Ucb(8.0)]).unwrap();
    let c = cfg(2, 200);
    let (mut s0, mut s8) = (0.0, 0.0);
    for seed in 0..50 {
        let z = make_zmatrix(200, 2, &c.vr, seed).unwrap();
        let choice = select_policy(&post, &set, &c, &z, 0).unwrap();
        let x8 = choice.argmaxes[1].as_ref().unwrap()[0];
        assert!((0.1..0.35).contains(&x8), "UCB-8 argmax {x8}");
        s0 += choice.scores[0].as_ref().unwrap().mean;
        s8 += choice.scores[1].as_ref().unwrap().mean;
    }
    assert!(s8 > s0, "{s8} <= {s0}");
}

#[test]
fn standard_set_order() {
    let s = PolicySet::standard(2);
    let names: Vec<String> = s.members.iter().map(|m| m.to_string()).collect();
    assert_eq!(names, ["EI", "KG", "UCB-0", "UCB-1", "UCB-2", "UCB-4", "UCB-8"]);
    assert!(PolicySet::new(vec![]).is_err());
}

#[test]
fn histogram_constant_choice() {
    let h = usage_histogram(&[vec![2; 10]], 3, 5).unwrap();
    assert_eq!(h.len(), 10);
    for row in h {
        assert_eq!(row, vec![0.0, 0.0, 1.0]);
    }
}

#[test]
fn histogram_alternating_choice() {
    let run: Vec<usize> = (0..20).map(|t| t % 2).collect();
    let h = usage_histogram(&[run], 2, 5).unwrap();
    for row in &h[2..18] {
        assert!((0.4..=0.6).contains(&row[0]) && (0.4..=0.6).contains(&row[1]));
    }
    for row in &h {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn histogram_matches_direct_counting() {
    let mut r = rng(4);
    let runs: Vec<Vec<usize>> = (0..50).map(|_| (0..12).map(|_| r.random_range(0..4)).collect()).collect();
    let h = usage_histogram(&runs, 4, 5).unwrap();
    for t in 0..12usize {
        let lo = t.saturating_sub(2);
        let hi = (t + 2).min(11);
        for m in 0..4 {
            let mut acc = 0.0;
            for s in lo..=hi {
                acc += runs.iter().filter(|run| run[s] == m).count() as f64 / 50.0;
            }
            let expected = acc / (hi - lo + 1) as f64;
            assert!((h[t][m] - expected).abs() < 1e-12);
        }
        assert!((h[t].iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    assert!(usage_histogram(&[], 4, 5).is_err());
    assert!(usage_histogram(&[vec![4]], 4, 5).is_err());
}
