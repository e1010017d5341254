//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use byzmac::adversarial::{check_orthogonally_symmetrizable, check_symmetrizable, OrthoVerdict, SymVerdict};
use byzmac::capacity::{region_2user, region_3user, region_kuser, OptimizerConfig, RegionOptions};
use byzmac::cq_channel::{constant_channel, example_channel, example_povms};
use byzmac::entropic::{average_output, holevo, mutual_info, relative_entropy, von_neumann_entropy};
use byzmac::simulator::{
    error_probability, example_setup, example_demo, summary_csv, AdversaryStrategy, ErrorReport, SimSetup,
};
use byzmac::states_povm::{gentle_measurement_check, induced_channel};
use byzmac::{AvcView, DensityOperator, Povm};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let detail = f()?;
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(format!("{detail} in {took:.2?}"))
}

fn example_reproduction() -> Outcome {
    timed(Duration::from_secs(1), || {
        let report = example_demo().map_err(|e| e.to_string())?;
        for row in &report.rows {
            ensure(row.pass, || format!("case {} errors {:?} expected {:?}", row.case, row.errors, row.expected))?;
        }
        ensure(report.rows.len() == 6, || format!("{} cases", report.rows.len()))?;
        let c2 = report.rows.iter().find(|r| r.case == "2c").ok_or("case 2c missing")?;
        let e2c = c2.errors[0].ok_or("case 2c has no sender 1 error")?;
        ensure((e2c - 0.5).abs() <= 1e-12, || format!("case 2c error {e2c}"))?;
        let stage2 = &report.case_2c_stage_distributions[1];
        ensure(stage2.iter().all(|p| (p - 0.5).abs() <= 1e-12), || format!("stage 2 distribution {stage2:?}"))?;
        ensure(report.all_pass, || "demo reported failure".into())?;
        Ok(format!("six cases exact, 2c error {:.12}, stage 2 {:?}", e2c, stage2))
    })
}

fn povm_algebra() -> Outcome {
    let (d1, d2) = example_povms();
    let mut worst: f64 = 0.0;
    for povm in [&d1, &d2] {
        let dev = povm.completeness_deviation();
        ensure(dev <= 1e-9, || format!("completeness {dev:e}"))?;
        let tp = induced_channel(povm).map_err(|e| e.to_string())?.trace_preservation_deviation();
        ensure(tp <= 1e-9, || format!("trace preservation {tp:e}"))?;
        worst = worst.max(dev).max(tp);
    }
    Ok(format!("worst deviation {worst:.1e}"))
}

fn entropic_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut infinite = 0;
    for _ in 0..500 {
        let dim = rng.random_range(1..=6);
        let nx = rng.random_range(1..=4);
        let ch = random_cq_channel(nx, dim, &mut rng);
        let p = random_distribution(nx, &mut rng);
        let chi = holevo(&p, &ch).map_err(|e| e.to_string())?;
        let info = mutual_info(&p, &ch).map_err(|e| e.to_string())?;
        worst = worst.max((chi - info).abs());
        ensure((chi - info).abs() <= 1e-9, || format!("holevo {chi} vs mutual info {info}"))?;
        let s_avg = von_neumann_entropy(&average_output(&p, &ch).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(chi >= 0.0 && chi <= s_avg + 1e-12, || format!("chi {chi} outside [0, {s_avg}]"))?;
        let rho = random_state(dim, &mut rng);
        let self_div = relative_entropy(&rho, &rho).map_err(|e| e.to_string())?;
        ensure(!self_div.is_infinite() && self_div.value().abs() <= 1e-10, || format!("D(rho||rho) = {self_div:?}"))?;
        if dim >= 2 {
            let full = random_state_rank(dim, dim, &mut rng);
            let thin = random_state_rank(dim, rng.random_range(1..dim), &mut rng);
            let d = relative_entropy(&full, &thin).map_err(|e| e.to_string())?;
            ensure(d.is_infinite(), || format!("support violation gave {d:?}"))?;
            infinite += 1;
        }
    }
    Ok(format!("500 channels, max |chi - I| {worst:.1e}, {infinite} support violations infinite"))
}

fn gentle_measurement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=6);
        let (d, rho) = likely_pair(dim, &mut rng);
        let check = gentle_measurement_check(&d, &rho).map_err(|e| e.to_string())?;
        ensure(check.prob >= 0.9, || format!("generator produced p = {}", check.prob))?;
        if check.trace_distance > check.bound {
            violations += 1;
        }
        tightest = tightest.min(check.bound - check.trace_distance);
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("1000 instances, 0 violations, min slack {tightest:.3e}"))
}

fn example_region() -> Outcome {
    timed(Duration::from_secs(30), || {
        let (d1, _) = example_povms();
        let region = region_2user(&example_channel(), &[0, 1], &d1, &OptimizerConfig::default()).map_err(|e| e.to_string())?;
        let r = region.bounds();
        ensure((r[0] - 1.0).abs() <= 0.02 && (r[1] - 3f64.log2()).abs() <= 0.02, || format!("region {r:?}"))?;
        Ok(format!("R1 = {:.6}, R2 = {:.6}", r[0], r[1]))
    })
}

fn symmetrizability() -> Outcome {
    let ex = example_channel().avc_view(0, 1, &[]).map_err(|e| e.to_string())?;
    let slack = match check_symmetrizable(&ex) {
        SymVerdict::NotSymmetrizable { slack } => slack,
        v => return Err(format!("example view: {v:?}")),
    };
    ensure(slack >= 0.1, || format!("example slack {slack}"))?;
    let flat = constant_channel(vec![2, 3], &DensityOperator::maximally_mixed(3)).avc_view(0, 1, &[]).map_err(|e| e.to_string())?;
    let v = check_symmetrizable(&flat);
    ensure(v.is_symmetrizable() && v.slack() <= 1e-10, || format!("constant channel: {v:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let nx = rng.random_range(2..=4);
        let dim = rng.random_range(1..=3);
        let (avc, _) = planted_avc(nx, dim, &mut rng);
        let v = check_symmetrizable(&avc);
        ensure(v.is_symmetrizable() && v.slack() <= 1e-10, || format!("plant {i}: {v:?}"))?;
        worst = worst.max(v.slack());
    }
    Ok(format!("example slack {slack:.6}, 200 plants, worst slack {worst:.1e}"))
}

fn orthogonal_symmetrizability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ex = example_channel().avc_view(1, 0, &[]).map_err(|e| e.to_string())?;
    let v = check_orthogonally_symmetrizable(&ex, 200, &mut rng);
    let OrthoVerdict::CertifiedNot { pair } = v else { return Err(format!("example view: {v:?}")) };
    let mixed: Vec<DensityOperator> = (0..6).map(|_| DensityOperator::maximally_mixed(2)).collect();
    let fixture = AvcView::new(3, 2, mixed).map_err(|e| e.to_string())?;
    let v = check_orthogonally_symmetrizable(&fixture, 200, &mut rng);
    let OrthoVerdict::Witness { min_overlap, .. } = v else { return Err(format!("mixed fixture: {v:?}")) };
    Ok(format!("example CertifiedNot at pair {pair:?}, mixed fixture Witness with overlap {min_overlap}"))
}

fn monte_carlo() -> Outcome {
    const TRIALS: usize = 100_000;
    let worst = || AdversaryStrategy::WorstCaseSearch { budget: 0 };
    let mut fixtures: Vec<SimSetup> = [
        (vec![0, 1], Some((1, worst()))),
        (vec![0, 1], None),
        (vec![0, 1], Some((0, worst()))),
        (vec![1, 0], Some((0, worst()))),
        (vec![1, 0], None),
        (vec![1, 0], Some((1, AdversaryStrategy::FixedSequence(vec![2])))),
    ]
    .into_iter()
    .map(|(order, adv)| example_setup(order, adv).unwrap())
    .collect();
    fixtures.push(permuted_fixture(None));
    fixtures.push(permuted_fixture(Some((1, AdversaryStrategy::FixedSequence(vec![1, 0])))));
    fixtures.push(permuted_fixture(Some((0, worst()))));
    let mut reports: Vec<ErrorReport> = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (i, setup) in fixtures.iter().enumerate() {
        let report = error_probability(setup, TRIALS, 100 + i as u64).map_err(|e| e.to_string())?;
        for s in &report.senders {
            let p = s.exact.ok_or_else(|| format!("fixture {i} not exact"))?;
            let sigma = (p * (1.0 - p) / TRIALS as f64).sqrt();
            let dev = (s.mc - p).abs();
            ensure(dev <= 3.0 * sigma + 1e-12, || format!("fixture {i} slot {}: mc {} exact {p}", s.slot, s.mc))?;
            if sigma > 0.0 {
                worst_z = worst_z.max(dev / sigma);
            }
        }
        reports.push(report);
    }
    let again: Vec<ErrorReport> = fixtures
        .iter()
        .enumerate()
        .map(|(i, s)| error_probability(s, TRIALS, 100 + i as u64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(summary_csv(&reports) == summary_csv(&again), || "CSV differs between identical seeds".into())?;
    Ok(format!("{} fixtures at 1e5 trials, max |z| {worst_z:.2}, CSV byte-identical", fixtures.len()))
}

fn substitutes() -> Outcome {
    let cfg = OptimizerConfig::default();
    let opts = RegionOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (d1, d2) = example_povms();
    let ex = example_channel();
    let mut worst: f64 = 0.0;
    for (order, stage) in [([0, 1], &d1), ([1, 0], &d2)] {
        let a = region_2user(&ex, &order, stage, &cfg).map_err(|e| e.to_string())?;
        let b = region_kuser(&ex, &order, &[stage.clone()], &opts, &cfg).map_err(|e| e.to_string())?;
        for (x, y) in a.bounds().iter().zip(b.bounds()) {
            worst = worst.max((x - y).abs());
        }
    }
    for _ in 0..2 {
        let ch = random_mac(&[2, 2, 2], 2, &mut rng);
        let stages: Vec<Povm> = (0..2).map(|_| random_povm(2, 2, &mut rng)).collect();
        let a = region_3user(&ch, &[2, 0, 1], &stages, &opts, &cfg).map_err(|e| e.to_string())?;
        let b = region_kuser(&ch, &[2, 0, 1], &stages, &opts, &cfg).map_err(|e| e.to_string())?;
        for (x, y) in a.bounds().iter().zip(b.bounds()) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("fixed-k and general regions differ by {worst:e}"))?;

    let mut max_gain = f64::NEG_INFINITY;
    for _ in 0..500 {
        let din = rng.random_range(1..=4);
        let dout = rng.random_range(1..=4);
        let nx = rng.random_range(1..=4);
        let v = random_cq_channel(nx, din, &mut rng);
        let q = random_quantum_channel(din, dout, rng.random_range(1..=3), &mut rng);
        let p = random_distribution(nx, &mut rng);
        let before = holevo(&p, &v).map_err(|e| e.to_string())?;
        let after = holevo(&p, &v.post_compose(&q).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(after <= before + 1e-9, || format!("chi rose from {before} to {after}"))?;
        max_gain = max_gain.max(after - before);
    }
    Ok(format!("region agreement {worst:.1e}, 500 data-processing instances, max gain {max_gain:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("example reproduction", example_reproduction),
        ("POVM algebra", povm_algebra),
        ("entropic identities", entropic_identities),
        ("gentle measurement", gentle_measurement),
        ("example region", example_region),
        ("symmetrizability", symmetrizability),
        ("orthogonal symmetrizability", orthogonal_symmetrizability),
        ("Monte Carlo consistency", monte_carlo),
        ("region agreement and data processing", substitutes),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
