//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use iotrex_core::bench::{self, BenchConfig, ChannelModel, Scheme};
use iotrex_core::cmdvs::games::{self, Adversary, ConflictSampling, GameConfig};
use iotrex_core::cmdvs::{self, verification_key, SetupConfig, VerificationKey};
use iotrex_core::{counters, CmdvsSignature, Ed25519, SignatureScheme};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn seed32(rng: &mut ChaCha20Rng) -> [u8; 32] {
    rng.gen()
}

fn distinct_ids(rng: &mut ChaCha20Rng, n: usize) -> Vec<u64> {
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let id = rng.gen::<u64>();
        if seen.insert(id) {
            out.push(id);
        }
    }
    out
}

const TABLE_GENERIC: [(u64, u32, u64); 15] = [
    (100, 10, 1_967),
    (100, 15, 2_692),
    (100, 20, 3_418),
    (1_000, 10, 14_952),
    (1_000, 15, 22_169),
    (1_000, 20, 29_387),
    (10_000, 10, 144_794),
    (10_000, 15, 216_933),
    (10_000, 20, 289_052),
    (100_000, 10, 1_443_220),
    (100_000, 15, 2_164_571),
    (100_000, 20, 2_885_923),
    (1_000_000, 10, 14_427_475),
    (1_000_000, 15, 21_640_954),
    (1_000_000, 20, 28_854_434),
];

const TABLE_TRIVIAL: [(u64, u64); 5] =
    [(100, 6_912), (1_000, 64_512), (10_000, 640_512), (100_000, 6_400_512), (1_000_000, 64_000_512)];

fn table_golden_values() -> Outcome {
    let mut misses = Vec::new();
    for (d, lambda, want) in TABLE_GENERIC {
        let got = bench::theoretical_size(Scheme::Generic, d, lambda, 1);
        if got != want {
            misses.push(format!("generic d={d} lambda={lambda}: table {want}, computed {got}"));
        }
    }
    for (d, want) in TABLE_TRIVIAL {
        let got = bench::theoretical_size(Scheme::Trivial, d, 10, 1);
        if got != want {
            misses.push(format!("trivial d={d}: table {want}, computed {got}"));
        }
    }
    let matched = 20 - misses.len();
    if misses.is_empty() {
        outcome(true, "20/20 cells exact")
    } else {
        outcome(false, format!("{matched}/20 cells exact; {}", misses.join("; ")))
    }
}

fn correctness_suite() -> Outcome {
    const TRIALS: u64 = 100_000;
    const OUTSIDERS: usize = 4;
    let mut rng = ChaCha20Rng::seed_from_u64(0xc0ff_ee01);
    let mut details = Vec::new();
    let mut pass = true;
    for lambda in [10u32, 15] {
        let keys: Vec<_> = [1u32, 2, 3]
            .iter()
            .map(|&ell| cmdvs::setup(&SetupConfig::generic(ell), &seed32(&mut rng)).unwrap())
            .collect();
        let (mut d_checks, mut d_accepts, mut n_checks, mut n_accepts) = (0u64, 0u64, 0u64, 0u64);
        for t in 0..TRIALS {
            let (pp, sk) = &keys[(t % 3) as usize];
            let size = rng.gen_range(1..=8usize);
            let ids = distinct_ids(&mut rng, size + OUTSIDERS);
            let (designated, outsiders) = ids.split_at(size);
            let mut msg = vec![0u8; rng.gen_range(1..=64)];
            rng.fill(&mut msg[..]);
            let sigma = cmdvs::sign(sk, designated, &msg, u64::MAX, lambda).unwrap().unwrap();
            for &id in designated {
                d_checks += 1;
                d_accepts += cmdvs::verify(pp, &verification_key(sk, id), &msg, &sigma) as u64;
            }
            for &id in outsiders {
                n_checks += 1;
                n_accepts += cmdvs::verify(pp, &verification_key(sk, id), &msg, &sigma) as u64;
            }
        }
        let p = 2f64.powi(-(lambda as i32));
        let limit = p + 3.0 * (p * (1.0 - p) / n_checks as f64).sqrt();
        let rate = n_accepts as f64 / n_checks as f64;
        let ok = d_accepts == d_checks && rate <= limit;
        pass &= ok;
        details.push(format!(
            "lambda={lambda}: designated {d_accepts}/{d_checks}, outsiders {n_accepts}/{n_checks} = {rate:.3e} (limit {limit:.3e})"
        ));
    }
    outcome(pass, details.join("; "))
}

fn fpr_bound() -> Outcome {
    const INSTANCES: usize = 100;
    const PROBES: usize = 10_000;
    const MU: f64 = 9.77e-4;
    let mut rng = ChaCha20Rng::seed_from_u64(0xf00d);
    let mut hits = 0u64;
    for _ in 0..INSTANCES {
        let (_, sk) = cmdvs::setup(&SetupConfig::generic(1), &seed32(&mut rng)).unwrap();
        let ids = distinct_ids(&mut rng, 100 + PROBES);
        let (designated, probes) = ids.split_at(100);
        let sigma = cmdvs::sign(&sk, designated, b"fpr", u64::MAX, 10).unwrap().unwrap();
        let CmdvsSignature::Generic { filter, .. } = &sigma else { unreachable!() };
        assert_eq!((filter.m(), filter.k()), (1451, 10));
        for &id in probes {
            let VerificationKey::Generic { pairs, .. } = verification_key(&sk, id) else { unreachable!() };
            hits += pairs.iter().all(|&p| filter.contains_pair(p, sk.probing())) as u64;
        }
    }
    let n = (INSTANCES * PROBES) as f64;
    let rate = hits as f64 / n;
    let limit = MU + 3.0 * (MU * (1.0 - MU) / n).sqrt();
    outcome(rate <= limit, format!("{hits} hits over {n} probes = {rate:.4e} (limit {limit:.4e})"))
}

fn game_suites() -> Outcome {
    const TRIALS: u64 = 1_000;
    let mut pass = true;
    let mut details = Vec::new();
    for (label, setup) in [("generic", SetupConfig::default()), ("trivial", SetupConfig::trivial())] {
        let cfg = GameConfig { setup, lambda: 10, seed: 0x6a3e, ..Default::default() };
        let mut total = 0;
        for adv in Adversary::ALL {
            let uf = games::run_unforgeability_game(adv, TRIALS, &cfg).unwrap();
            let cons = games::run_consistency_game(adv, TRIALS, &cfg).unwrap();
            if uf + cons > 0 {
                details.push(format!("{label}/{}: uf {uf}, consistency {cons}", adv.name()));
            }
            total += uf + cons;
        }
        pass &= total == 0;
    }
    let n = 2 * Adversary::ALL.len();
    if details.is_empty() {
        details.push(format!("0 wins; {n} strategy/mode pairs x 2 games x {TRIALS} trials"));
    }
    outcome(pass, details.join("; "))
}

fn conflict_witness() -> Outcome {
    let independent = games::conflict_test(1, 10, 1_000, ConflictSampling::Independent, 51).unwrap();
    let one_swap = games::conflict_test(1, 10, 1_000, ConflictSampling::OneSwap, 52).unwrap();
    let sanity = games::conflict_test(1, 10, 10, ConflictSampling::Identical, 53).unwrap();
    outcome(
        independent == 0 && one_swap == 0 && sanity == 10,
        format!("independent {independent}/1000, one-swap {one_swap}/1000 collisions (identical-set control {sanity}/10)"),
    )
}

fn compression_ratios() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (_, gsk) = cmdvs::setup(&SetupConfig::default(), &seed32(&mut rng)).unwrap();
    let (_, tsk) = cmdvs::setup(&SetupConfig::trivial(), &seed32(&mut rng)).unwrap();
    let ds = Ed25519.generate(&seed32(&mut rng)).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for d in [100usize, 1_000, 10_000, 100_000] {
        let ids = distinct_ids(&mut rng, d);
        let g = cmdvs::sign(&gsk, &ids, b"cmd", u64::MAX, 10).unwrap().unwrap().encoded_bits();
        let t = cmdvs::sign(&tsk, &ids, b"cmd", u64::MAX, 10).unwrap().unwrap().encoded_bits();
        let b = bench::baseline_sign(&ds, &ids, b"cmd").unwrap().payload_bits();
        let (gt, gb) = (g as f64 / t as f64, g as f64 / b as f64);
        pass &= gt <= 0.35 && gb <= 0.06;
        details.push(format!("d={d}: g/t {gt:.4}, g/b {gb:.4}"));
    }
    outcome(pass, details.join("; "))
}

fn entire_performance() -> Outcome {
    let cfg = BenchConfig {
        schemes: Scheme::ALL.to_vec(),
        d_list: vec![1_000, 10_000],
        lambda_list: vec![10],
        ell: 1,
        channels: vec![ChannelModel::lora()],
        trials: 5,
        seed: 7,
        ..Default::default()
    };
    let report = bench::run_experiment(&cfg).unwrap();
    let entire = |s: Scheme, d: u64| report.rows.iter().find(|r| r.scheme == s && r.d == d).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for d in [1_000u64, 10_000] {
        let (g, t, b) = (entire(Scheme::Generic, d), entire(Scheme::Trivial, d), entire(Scheme::Baseline, d));
        let (gt, gb) = (g.entire_seconds / t.entire_seconds, g.entire_seconds / b.entire_seconds);
        let ok = gt <= 1.0 / 3.0 && gb <= 0.1 && g.devices_per_second >= 12_000.0;
        pass &= ok;
        details.push(format!(
            "d={d}: generic {:.4}s, g/t {gt:.3}, g/b {gb:.4}, {:.0} devices/s",
            g.entire_seconds, g.devices_per_second
        ));
    }
    outcome(pass, details.join("; "))
}

fn sign_cost_structure() -> Outcome {
    const D: usize = 10_000;
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let ids = distinct_ids(&mut rng, D);
    let mut pass = true;
    let mut details = Vec::new();
    for ell in [1u32, 2] {
        let (_, sk) = cmdvs::setup(&SetupConfig::generic(ell), &seed32(&mut rng)).unwrap();
        counters::reset();
        cmdvs::sign(&sk, &ids, b"cmd", u64::MAX, 10).unwrap().unwrap();
        let c = counters::snapshot();
        let k = cmdvs::probes_for(10, ell) as u64;
        let want = k * ell as u64 * D as u64;
        pass &= c.ds_signs == 1 && c.probe_sets == want;
        details.push(format!("generic ell={ell}: {} DS signs, {} probe sets (want {want})", c.ds_signs, c.probe_sets));
    }
    let ds = Ed25519.generate(&seed32(&mut rng)).unwrap();
    counters::reset();
    bench::baseline_sign(&ds, &ids, b"cmd").unwrap();
    let c = counters::snapshot();
    pass &= c.ds_signs == D as u64;
    details.push(format!("baseline: {} DS signs", c.ds_signs));

    let (_, sk) = cmdvs::setup(&SetupConfig::default(), &seed32(&mut rng)).unwrap();
    let time = |f: &dyn Fn()| {
        f();
        let mut xs: Vec<f64> = (0..5)
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed().as_secs_f64()
            })
            .collect();
        bench::median(&mut xs)
    };
    let g = time(&|| {
        std::hint::black_box(cmdvs::sign(&sk, &ids, b"cmd", u64::MAX, 10).unwrap());
    });
    let b = time(&|| {
        std::hint::black_box(bench::baseline_sign(&ds, &ids, b"cmd").unwrap());
    });
    let ratio = b / g;
    pass &= ratio >= 10.0;
    details.push(format!("baseline/generic sign time {ratio:.1} ({b:.4}s / {g:.5}s)"));
    outcome(pass, details.join("; "))
}

fn constant_size_boundary() -> Outcome {
    let cfg = SetupConfig { fixed_m: Some(1451), ..SetupConfig::generic(1) };
    let (_, sk) = cmdvs::setup(&cfg, &[9u8; 32]).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let ids = distinct_ids(&mut rng, 101);
    let mut sizes = HashSet::new();
    let mut all_ok = true;
    for d in 1..=100 {
        match cmdvs::sign(&sk, &ids[..d], b"cmd", u64::MAX, 10).unwrap() {
            Some(s) => {
                sizes.insert(s.encoded_len());
            }
            None => all_ok = false,
        }
    }
    let at_101 = cmdvs::sign(&sk, &ids, b"cmd", u64::MAX, 10).unwrap();
    let pass = all_ok && at_101.is_none() && sizes.len() == 1;
    outcome(
        pass,
        format!(
            "|D| 1..=100 signed: {all_ok}, distinct sizes {:?} bytes, |D|=101 bottom: {}",
            sizes,
            at_101.is_none()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("table golden values", table_golden_values),
        ("correctness suite", correctness_suite),
        ("false-positive bound", fpr_bound),
        ("game suites", game_suites),
        ("conflict witness", conflict_witness),
        ("compression ratios", compression_ratios),
        ("entire-performance model", entire_performance),
        ("sign-cost structure", sign_cost_structure),
        ("constant-size boundary", constant_size_boundary),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {verdict} ({}) [{:.1}s]", i + 1, o.detail, t.elapsed().as_secs_f64());
        failed += !o.pass as u32;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() as u32 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
