//! Acceptance checks, one PASS/FAIL line each. Run with
//! `cargo test --release --test acceptance`.
//!
//! Check 8 scans every prime below 10^6. Its results live in
//! `target/acceptance/` and are reused by later runs; an interrupted scan
//! resumes from its checkpoint.

mod common;

use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::any;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::SeedableRng;

use common::ntt::*;
use common::*;
use irregular::arith::{count_primes, pow_mod, primes_in_range};
use irregular::checks::{bernoulli_single, iwasawa_check, Verdict};
use irregular::par::{self, Parallelism};
use irregular::pipeline::{
    build_layout, classify_prime, classify_with, compute_irregular_with, compute_table,
    PipelineOptions, Strategy,
};
use irregular::rader::{build_rader_plan, gen_geometric};
use irregular::results::parse_results;
use irregular::scan::{run_scan, ScanConfig};
use irregular::stats::{analyze, chi_square_sf, poisson_mass, StatsReport};
use irregular::umbrella::{lifted_u, lifted_v, prepare_v};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed <= limit, || {
        format!("{what} took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs())
    })
}

/// Pipeline residues against the single-index formula for p <= 2000 and
/// against exact rationals for p <= 50.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let primes = primes_in_range(5, 2000);
    let mismatches: Vec<String> = par::map(Parallelism::Rayon, &primes, |&p| {
        let table = compute_table(&classify_prime(p), Parallelism::Sequential).unwrap();
        (2..=p - 3)
            .step_by(2)
            .filter(|&r| bernoulli_single(p, r) != Ok(table.bern[r as usize]))
            .map(|r| format!("({p}, {r})"))
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(mismatches.is_empty(), || format!("single-index mismatch at {mismatches:?}"))?;
    let pairs: u64 = primes.iter().map(|p| (p - 3) / 2).sum();

    let exact = bernoulli_numbers(48);
    for p in primes_in_range(5, 50) {
        let table = compute_table(&classify_prime(p), Parallelism::Sequential).unwrap();
        for r in (2..=p - 3).step_by(2) {
            let want = reduce_rational(&exact[r as usize], p);
            ensure(table.bern[r as usize] == want, || format!("rational mismatch at ({p}, {r})"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(120), "the sweep")?;
    Ok(format!("{} primes, {pairs} residues, all exact", primes.len()))
}

fn golden_vectors() -> Outcome {
    let ctx = classify_with(TOY_P, Some(Strategy::Umbrella));
    let scratch = prepare_v(TOY_P, ctx.n as usize, ctx.xi).unwrap();
    let u = lifted_u(&scratch, &umbrella_row(&ctx, TOY_ROW));
    ensure(u == TOY_UMBRELLA_U, || format!("umbrella U = {u:?}"))?;
    let v = lifted_v(ctx.xi, TOY_P, ctx.n as usize);
    ensure(v == TOY_UMBRELLA_V, || format!("umbrella V = {v:?}"))?;

    let ctx = classify_prime(TOY_P);
    ensure(ctx.strategy == Strategy::Rader1 && ctx.gamma == 2 && ctx.c == 2, || {
        format!("131 classified as {} with gamma {}, c {}", ctx.strategy, ctx.gamma, ctx.c)
    })?;
    let plan = build_rader_plan(ctx.n).unwrap();
    ensure(plan.z == 2, || format!("generator z = {}", plan.z))?;
    let layout = build_layout(&ctx);
    let row = layout.row(TOY_ROW);
    let u: Vec<i64> = plan.perm_in.iter().map(|&k| row[k as usize]).collect();
    ensure(u == TOY_RADER_U, || format!("Rader U = {u:?}"))?;
    let v: Vec<i64> = gen_geometric(ctx.omega, TOY_P, &plan, 12)
        .into_iter()
        .map(|x| irregular::arith::lift_centered(x, TOY_P))
        .collect();
    ensure(v == TOY_RADER_V, || format!("Rader V = {v:?}"))?;
    Ok("umbrella and Rader polynomials for p = 131 match, z = 2".into())
}

/// Checksums without the umbrella retry, so every strategy must hold up.
fn checksums() -> Outcome {
    let start = Instant::now();
    let primes = primes_in_range(5, 100_000);
    let bad: Vec<u64> = par::map(Parallelism::Rayon, &primes, |&p| {
        let table = compute_table(&classify_prime(p), Parallelism::Sequential).unwrap();
        (table.checksum != p - 4).then_some(p)
    })
    .into_iter()
    .flatten()
    .collect();
    ensure(bad.is_empty(), || format!("checksum fails for {bad:?}"))?;
    within(start.elapsed(), Duration::from_secs(600), "the checksum sweep")?;
    Ok(format!("C_p = -4 mod p for all {} primes", primes.len()))
}

fn strategy_independence() -> Outcome {
    let primes = primes_in_range(1000, 1_000_000);
    let mut rng = StdRng::seed_from_u64(0x1ae6_2016);
    let sample: Vec<u64> = primes.choose_multiple(&mut rng, 200).copied().collect();
    let opts = PipelineOptions::sequential();
    let umbrella = PipelineOptions {
        force: Some(Strategy::Umbrella),
        ..opts
    };
    let mut by_strategy = [0usize; 3];
    for &p in &sample {
        let a = compute_irregular_with(p, opts);
        let b = compute_irregular_with(p, umbrella);
        by_strategy[a.strategy as usize] += 1;
        ensure(b.strategy == Strategy::Umbrella, || format!("{p} was not forced"))?;
        ensure(rendered(&a) == rendered(&b), || format!("output differs for {p}"))?;
    }
    Ok(format!(
        "200 primes identical (default paths: rader1 {}, rader2 {}, umbrella {})",
        by_strategy[0], by_strategy[1], by_strategy[2]
    ))
}

fn nine_indices() -> Outcome {
    let mut slowest = Duration::ZERO;
    for r in NINE_INDICES {
        let start = Instant::now();
        let b = bernoulli_single(NINE_INDEX_PRIME, r).map_err(|e| e.to_string())?;
        ensure(b == 0, || format!("B_{r} = {b} mod {NINE_INDEX_PRIME}"))?;
        slowest = slowest.max(start.elapsed());
    }
    within(slowest, Duration::from_secs(300), "one index")?;
    Ok(format!(
        "all nine B_r = 0 mod {NINE_INDEX_PRIME}, slowest {:.1}s",
        slowest.as_secs_f64()
    ))
}

fn exceptional_pairs() -> Outcome {
    for (p, r) in EXCEPTIONAL {
        ensure(pow_mod(2, r, p) == 1, || format!("2^{r} != 1 mod {p}"))?;
        ensure(bernoulli_single(p, r) == Ok(0), || format!("({p}, {r}) is not irregular"))?;
    }
    for &(p, r) in &EXCEPTIONAL[..3] {
        let rep = iwasawa_check(p, r).map_err(|e| e.to_string())?;
        ensure(rep.verdict == Verdict::Inconclusive && !rep.cond1, || format!("{rep:?}"))?;
    }
    Ok("all five pairs irregular with 2^r = 1; the first three are inconclusive on cond1".into())
}

fn statistics() -> Outcome {
    let rep = StatsReport::from_counts(&INDEX_COUNTS, 7).map_err(|e| e.to_string())?;
    let sf = chi_square_sf(rep.x, 7);
    ensure((rep.x - 13.807).abs() <= 1e-3, || format!("X = {}", rep.x))?;
    ensure((sf - 0.0547).abs() <= 5e-4, || format!("sf = {sf}"))?;
    let mut worst = 0f64;
    for (j, (x, p)) in INTERVAL_STATS.into_iter().enumerate() {
        let ours = chi_square_sf(x, 6);
        worst = worst.max((ours - p).abs());
        ensure((ours - p).abs() <= 1e-3, || format!("interval {j}: {ours} vs {p}"))?;
    }
    for (m, (value, decimals)) in POISSON_PRINTED.into_iter().enumerate() {
        let ours = poisson_mass(m as u32);
        ensure((ours - value).abs() <= 0.5 * 10f64.powi(-decimals), || {
            format!("P_{m} = {ours}, printed {value}")
        })?;
    }
    Ok(format!(
        "X = {:.4}, sf = {sf:.5}; 16 interval p-values within {worst:.1e}; P_0..P_9 match",
        rep.x
    ))
}

/// Buckets for the scan below 10^6: the tail `i_p >= 5` still expects
/// about 13 primes, the next cut would expect one.
const SCAN_BUCKETS: usize = 5;

fn distribution() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .parent()
        .expect("target dir")
        .join("acceptance");
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let cfg = ScanConfig::new(5, 999_999, dir.join("scan-5-999999.txt"));
    let expected_primes = count_primes(5, 999_999);
    let complete = std::fs::read_to_string(&cfg.out)
        .ok()
        .and_then(|t| parse_results(&t).ok())
        .is_some_and(|f| (f.from, f.to, f.summary.primes) == (5, 999_999, expected_primes));
    let source = if complete {
        format!("cached {}", cfg.out.display())
    } else {
        eprintln!("  scanning p < 10^6 into {} ...", cfg.out.display());
        let out = run_scan(&cfg, None).map_err(|e| e.to_string())?;
        format!(
            "scanned in {:.1} min ({} primes from an earlier run)",
            out.elapsed.as_secs_f64() / 60.0,
            out.resumed_primes
        )
    };
    let file = File::open(&cfg.out).map_err(|e| e.to_string())?;
    let an = analyze(BufReader::new(file), SCAN_BUCKETS, None).map_err(|e| e.to_string())?;
    let rep = an.whole;
    let frac = rep.regular_fraction();
    ensure(rep.n == expected_primes, || format!("{} primes analysed", rep.n))?;
    ensure((frac - 0.6065).abs() <= 0.02, || format!("regular fraction {frac:.4}"))?;
    ensure(rep.p_value >= 0.01, || format!("X = {:.3}, p-value {:.4}", rep.x, rep.p_value))?;
    Ok(format!(
        "{} primes, regular fraction {frac:.4}, X = {:.3} (dof {}), p-value {:.3}; {source}",
        rep.n, rep.x, rep.dof, rep.p_value
    ))
}

fn ntt_properties() -> Outcome {
    const CASES: u32 = 256;
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let ran = std::cell::Cell::new(0u32);
    let count = || ran.set(ran.get() + 1);
    TestRunner::new(config.clone())
        .run(&(shaped_data(MAX_TOTAL), bits()), |((d, x), b)| {
            count();
            check_round_trip(d, x, b)
        })
        .map_err(|e| format!("round trip: {e}"))?;
    TestRunner::new(config.clone())
        .run(&(shaped_data(256), bits()), |((d, x), b)| {
            count();
            check_naive_dft(d, x, b)
        })
        .map_err(|e| format!("naive DFT: {e}"))?;
    TestRunner::new(config.clone())
        .run(&(shaped_pair(MAX_TOTAL), bits()), |((d, a, c), b)| {
            count();
            check_convolution(d, a, c, b)
        })
        .map_err(|e| format!("convolution theorem: {e}"))?;
    TestRunner::new(config.clone())
        .run(&integer_operands(), |(a, b, s)| {
            count();
            check_integer_product(a, b, s)
        })
        .map_err(|e| format!("integer product: {e}"))?;
    TestRunner::new(config)
        .run(&any::<i128>(), |x| {
            count();
            check_crt(x)
        })
        .map_err(|e| format!("CRT: {e}"))?;
    ensure(ran.get() >= 5 * CASES, || format!("only {} cases ran", ran.get()))?;
    Ok(format!("5 properties, {} cases, all exact", ran.get()))
}

/// Same allocator settings as the command-line tool; the scan frees and
/// reallocates large buffers for every prime.
fn tune_allocator() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: only adjusts allocator parameters, before other threads exist.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
    }
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    tune_allocator();
    let checks: [Check; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("golden toy vectors", golden_vectors),
        ("checksum p <= 10^5", checksums),
        ("strategy independence", strategy_independence),
        ("nine-index prime", nine_indices),
        ("exceptional pairs", exceptional_pairs),
        ("statistics reproduction", statistics),
        ("distribution below 10^6", distribution),
        ("NTT properties", ntt_properties),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.into_iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n} {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
