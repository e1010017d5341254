mod common;

use byzmac::capacity::{
    corollary_region, maxmin_rate, region_2user, region_3user, region_kuser, CorollaryOutcome, OptimizerConfig,
    RateRegion, RegionOptions,
};
use byzmac::cq_channel::{
    constant_channel, example_channel, example_povms, factorized_channel, factorized_local_povm,
};
use byzmac::{CqMacChannel, DensityOperator, Povm};
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LOG3: f64 = 1.584_962_500_721_156;

fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

fn local_stages(sizes: &[usize], order: &[usize]) -> Vec<Povm> {
    order[..order.len() - 1].iter().map(|&s| factorized_local_povm(sizes, s)).collect()
}

#[test]
fn factorized_channels_reach_log_alphabet() {
    let cfg = OptimizerConfig::default();
    for sizes in [vec![2, 3, 2], vec![2, 2, 2, 2]] {
        let ch = factorized_channel(&sizes);
        let order: Vec<usize> = (0..sizes.len()).rev().collect();
        let region = region_kuser(&ch, &order, &local_stages(&sizes, &order), &RegionOptions::default(), &cfg).unwrap();
        let expect: Vec<f64> = sizes.iter().map(|&n| (n as f64).log2()).collect();
        assert_close(&region.bounds(), &expect, 1e-6);
    }
}

#[test]
fn general_region_matches_fixed_k_versions() {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let ch = example_channel();
    let (d1, d2) = example_povms();
    for (order, stage) in [([0, 1], &d1), ([1, 0], &d2)] {
        let a = region_2user(&ch, &order, stage, &cfg).unwrap();
        let b = region_kuser(&ch, &order, &[stage.clone()], &RegionOptions::default(), &cfg).unwrap();
        assert_close(&a.bounds(), &b.bounds(), 1e-12);
    }

    let ch = random_mac(&[2, 2, 2], 2, &mut rng);
    let stages = vec![random_povm(2, 2, &mut rng), random_povm(2, 2, &mut rng)];
    for order in [[0, 1, 2], [2, 0, 1]] {
        let a = region_3user(&ch, &order, &stages, &RegionOptions::default(), &cfg).unwrap();
        let b = region_kuser(&ch, &order, &stages, &RegionOptions::default(), &cfg).unwrap();
        assert_close(&a.bounds(), &b.bounds(), 1e-12);
    }
}

#[test]
fn size_one_third_sender_collapses_to_two_users() {
    let cfg = OptimizerConfig::default();
    let base = example_channel();
    let ch = CqMacChannel::from_fn(vec![2, 3, 1], |t| base.apply(&t[..2])).unwrap();
    let (d1, _) = example_povms();
    let two = region_2user(&base, &[0, 1], &d1, &cfg).unwrap();
    let three = region_3user(&ch, &[0, 1, 2], &[d1, Povm::trivial(6)], &RegionOptions::default(), &cfg).unwrap();
    assert_close(&three.bounds()[..2], &two.bounds(), 1e-9);
    assert!(three.bounds()[2].abs() < 1e-12);
}

#[test]
fn sender_without_influence_gets_zero() {
    let cfg = OptimizerConfig::default();
    let inner = factorized_channel(&[2, 2]);
    let ch = CqMacChannel::from_fn(vec![2, 2, 3], |t| inner.apply(&t[..2])).unwrap();
    let stages = local_stages(&[2, 2], &[0, 1]);
    let stages = vec![stages[0].clone(), factorized_local_povm(&[2, 2], 1)];
    let region = region_3user(&ch, &[0, 1, 2], &stages, &RegionOptions::default(), &cfg).unwrap();
    assert!(region.bounds()[2].abs() < 1e-9, "{:?}", region.bounds());
    assert_close(&region.bounds()[..2], &[1.0, 1.0], 1e-6);
}

#[test]
fn more_jammer_symbols_never_help_the_sender() {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..6 {
        let small = random_mac(&[2, 2], 2, &mut rng);
        let extra: Vec<DensityOperator> = (0..2).map(|_| random_state(2, &mut rng)).collect();
        let big = CqMacChannel::from_fn(vec![2, 3], |t| {
            Ok(if t[1] < 2 { small.apply(t)? } else { extra[t[0]].clone() })
        })
        .unwrap();
        let rs = maxmin_rate(&small, 0, 1, &[], None, &cfg).unwrap();
        let rb = maxmin_rate(&big, 0, 1, &[], None, &cfg).unwrap();
        assert!(rb.rate <= rs.rate + rs.gap + 1e-9, "{} > {}", rb.rate, rs.rate);
    }
}

#[test]
fn relabelling_senders_relabels_the_region() {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ch = random_mac(&[2, 3, 2], 2, &mut rng);
    let stages = vec![random_povm(2, 3, &mut rng), random_povm(2, 2, &mut rng)];
    let order = [1, 0, 2];
    let base = region_3user(&ch, &order, &stages, &RegionOptions::default(), &cfg).unwrap();
    let perm = [2, 0, 1];
    let mut inv = [0; 3];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let permuted = ch.permute_slots(&perm).unwrap();
    let new_order: Vec<usize> = order.iter().map(|&s| inv[s]).collect();
    let other = region_3user(&permuted, &new_order, &stages, &RegionOptions::default(), &cfg).unwrap();
    for s in 0..3 {
        assert!((base.bounds()[s] - other.bounds()[inv[s]]).abs() < 1e-9, "{base:?} {other:?}");
    }
}

#[test]
fn trivial_stage_measurements_change_nothing() {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let ch = random_mac(&[2, 2, 2], 3, &mut rng);
    let trivial = vec![Povm::trivial(3), Povm::trivial(3)];
    let region = region_3user(&ch, &[0, 1, 2], &trivial, &RegionOptions::default(), &cfg).unwrap();
    let plain = |h: usize, a: usize, avg: usize| {
        let frozen = [(avg, byzmac::Frozen::Dist(byzmac::InputDistribution::uniform(2)))];
        maxmin_rate(&ch, h, a, &frozen, None, &cfg).unwrap().rate
    };
    let r1 = region.senders[1].candidates.iter().find(|c| c.0 == 0).unwrap().1;
    assert!((r1 - plain(1, 0, 2)).abs() < 1e-12);
}

#[test]
fn processing_the_output_never_raises_rates() {
    let cfg = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..6 {
        let ch = random_mac(&[2, 2], 3, &mut rng);
        let noise = random_quantum_channel(3, 2, 2, &mut rng);
        let degraded = ch.post_compose(&noise).unwrap();
        let before = maxmin_rate(&ch, 0, 1, &[], None, &cfg).unwrap();
        let after = maxmin_rate(&degraded, 0, 1, &[], None, &cfg).unwrap();
        assert!(after.rate <= before.rate + before.gap + 1e-9, "{} > {}", after.rate, before.rate);
    }
}

#[test]
fn finer_grid_agrees_within_tolerance() {
    let coarse = OptimizerConfig::default();
    let fine = OptimizerConfig { grid_resolution: 2 * coarse.grid_resolution, ..coarse.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cases = vec![example_channel()];
    cases.extend((0..3).map(|_| random_mac(&[3, 2], 2, &mut rng)));
    for ch in &cases {
        let a = maxmin_rate(ch, 0, 1, &[], None, &coarse).unwrap();
        let b = maxmin_rate(ch, 0, 1, &[], None, &fine).unwrap();
        assert!((a.rate - b.rate).abs() <= coarse.tolerance, "{} vs {}", a.rate, b.rate);
    }
}

fn expect_region(outcome: CorollaryOutcome) -> RateRegion {
    match outcome {
        CorollaryOutcome::Region(r) => r,
        other => panic!("expected a region, got {other:?}"),
    }
}

#[test]
fn corollary_hypotheses() {
    let cfg = OptimizerConfig::default();
    let region = expect_region(corollary_region(&example_channel(), &cfg).unwrap());
    assert_close(&region.bounds(), &[1.0, LOG3], 1e-6);

    let flat = constant_channel(vec![2, 2], &DensityOperator::maximally_mixed(2));
    assert!(matches!(corollary_region(&flat, &cfg).unwrap(), CorollaryOutcome::HypothesisFailed { slot: 0, .. }));

    // slot 0 sits on its own register, slot 1 sends overlapping pure states
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityOperator::pure(&[s.into(), s.into()]).unwrap();
    let zero = DensityOperator::basis(2, 0);
    let ch = CqMacChannel::from_fn(vec![2, 2], |t| {
        let b = if t[1] == 0 { &zero } else { &plus };
        Ok(DensityOperator::basis(2, t[0]).tensor(b))
    })
    .unwrap();
    assert!(matches!(corollary_region(&ch, &cfg).unwrap(), CorollaryOutcome::HypothesisFailed { slot: 1, .. }));
}
