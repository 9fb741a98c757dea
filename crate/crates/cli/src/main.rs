use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use irregular::checks::{bernoulli_single, iwasawa_check, Verdict};
use irregular::par::{self, Parallelism};
use irregular::pipeline::{compute_irregular_with, PipelineOptions, Strategy};
use irregular::results::{parse_aux, parse_results};
use irregular::scan::{run_scan, ScanConfig, ScanTally};
use irregular::stats::{analyze, IntervalSpec, StatsReport, DEFAULT_BUCKET_CAP, DEFAULT_INTERVAL_CAP};

/// Indices of irregularity of primes.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the irregular indices of every prime in [from, to].
    Scan {
        #[arg(long)]
        from: u64,
        #[arg(long)]
        to: u64,
        /// Worker threads (default: one per CPU).
        #[arg(long)]
        jobs: Option<usize>,
        /// Results file (default: irregular-<from>-<to>.txt).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Residue pairs file (default: <out>.aux).
        #[arg(long)]
        aux: Option<PathBuf>,
        #[arg(long, value_name = "rader1|rader2|umbrella")]
        force_strategy: Option<Strategy>,
    },
    /// Recompute every stored residue pair one index at a time.
    Verify {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        aux: PathBuf,
    },
    /// Irregular indices of one prime.
    Single { p: u64 },
    /// B_r mod p for a single even index.
    Pair { p: u64, r: u64 },
    /// Iwasawa invariants criterion for an irregular pair.
    Iwasawa { p: u64, r: u64 },
    /// Index histogram against the Poisson(1/2) model.
    Stats {
        #[arg(long)]
        results: PathBuf,
        /// Buckets 0..K-1 plus a tail bucket.
        #[arg(long, default_value_t = DEFAULT_BUCKET_CAP)]
        bucket_cap: usize,
        /// Also report the intervals [j W, (j+1) W).
        #[arg(long)]
        interval_width: Option<u64>,
    },
}

/// Failures that are the caller's fault (exit 2) or a failed check (exit 1).
enum Failure {
    Usage(String),
    Check(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Large per-prime buffers are allocated and freed over and over; keeping
/// them on the heap instead of fresh mmaps saves the page-fault cost.
fn tune_allocator() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: mallopt only adjusts allocator parameters; called before any
    // other thread exists.
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 32 << 20);
        libc::mallopt(libc::M_TRIM_THRESHOLD, i32::MAX);
    }
}

/// Die quietly on a closed pipe (`irregular stats ... | head`) instead of
/// panicking inside println.
fn restore_sigpipe() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    // SAFETY: resets one signal disposition at startup, single-threaded.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

fn print_tally(t: &ScanTally) {
    let hist: Vec<String> = t.by_index.iter().enumerate().map(|(i, n)| format!("{i}:{n}")).collect();
    let strategies: Vec<String> = Strategy::ALL
        .iter()
        .zip(t.by_strategy)
        .map(|(s, n)| format!("{s}:{n}"))
        .collect();
    let rejections: Vec<String> = t.rejections.iter().map(|(k, n)| format!("{k}:{n}")).collect();
    eprintln!("  index histogram  {}", if hist.is_empty() { "-".into() } else { hist.join(" ") });
    eprintln!("  strategies       {}", strategies.join(" "));
    eprintln!("  rejections       {}", if rejections.is_empty() { "-".into() } else { rejections.join(" ") });
    eprintln!("  retried          {}", t.retried);
    eprintln!("  checksum fails   {}", t.summary.checksum_fail);
}

fn cmd_scan(cfg: ScanConfig) -> Outcome {
    let mut progress = |t: &ScanTally, elapsed: Duration| {
        eprintln!(
            "[{:>7.1}s] {} primes, last {}",
            elapsed.as_secs_f64(),
            t.summary.primes,
            t.last_p.unwrap_or(0)
        );
    };
    let out = run_scan(&cfg, Some(&mut progress)).map_err(usage)?;
    let s = out.tally.summary;
    eprintln!(
        "scanned [{}, {}] in {:.1}s: {} primes, {} irregular{}",
        cfg.from,
        cfg.to,
        out.elapsed.as_secs_f64(),
        s.primes,
        s.irregular,
        if out.resumed_primes > 0 {
            format!(" ({} from an earlier run)", out.resumed_primes)
        } else {
            String::new()
        }
    );
    print_tally(&out.tally);
    if s.checksum_fail > 0 {
        return Err(Failure::Check(format!("{} primes failed the checksum", s.checksum_fail)));
    }
    Ok(())
}

fn cmd_verify(results: &Path, aux: &Path) -> Outcome {
    let results = parse_results(&read_file(results)?).map_err(|e| usage(format!("{}: {e}", results.display())))?;
    let aux = parse_aux(&read_file(aux)?).map_err(|e| usage(format!("{}: {e}", aux.display())))?;
    let primes: Vec<(&u64, &Vec<(u64, u64)>)> = aux.iter().collect();
    let problems: Vec<Vec<String>> = par::map(Parallelism::default(), &primes, |&(&p, pairs)| {
        let mut out = Vec::new();
        for &(r, stored) in pairs {
            match bernoulli_single(p, r) {
                Ok(v) if v == stored => {}
                Ok(v) => out.push(format!("p={p} r={r}: stored {stored}, recomputed {v}")),
                Err(e) => out.push(format!("p={p} r={r}: {e}")),
            }
        }
        let expected = ((p - 3) / 2).min(10) as usize;
        if pairs.len() != expected {
            out.push(format!("p={p}: {} pairs stored, expected {expected}", pairs.len()));
        }
        if pairs.windows(2).any(|w| (w[0].1, w[0].0) >= (w[1].1, w[1].0)) {
            out.push(format!("p={p}: pairs are not in ascending order"));
        }
        // a stored zero is an irregular index the results file must list
        let indices = results
            .entries
            .binary_search_by_key(&p, |e| e.0)
            .map_or(&[][..], |i| &results.entries[i].1[..]);
        for &(r, v) in pairs {
            if v == 0 && indices.binary_search(&r).is_err() {
                out.push(format!("p={p} r={r}: zero residue missing from the results file"));
            }
        }
        out
    });
    let mut failures: Vec<String> = problems.into_iter().flatten().collect();
    let expected_primes = results.summary.primes - results.summary.checksum_fail;
    if aux.len() as u64 != expected_primes {
        failures.push(format!("aux file covers {} primes, results file {expected_primes}", aux.len()));
    }
    for (p, _) in &results.entries {
        if !aux.contains_key(p) {
            failures.push(format!("p={p}: irregular prime has no stored pairs"));
        }
    }
    for line in &failures {
        println!("FAIL {line}");
    }
    let pairs: usize = aux.values().map(Vec::len).sum();
    if failures.is_empty() {
        println!("ok: {pairs} pairs of {} primes verified", aux.len());
        Ok(())
    } else {
        Err(Failure::Check(format!("{} problems found", failures.len())))
    }
}

fn cmd_single(p: u64) -> Outcome {
    if !(5..1 << 31).contains(&p) || !irregular::arith::is_prime(p) {
        return Err(usage(format!("{p} is not a prime in [5, 2^31)")));
    }
    let opts = PipelineOptions {
        rows: Parallelism::Rayon,
        ..PipelineOptions::sequential()
    };
    let rec = compute_irregular_with(p, opts);
    let status = if !rec.checksum_ok {
        "checksum-fail".to_string()
    } else if rec.irregular.is_empty() {
        "regular".to_string()
    } else {
        let idx: Vec<String> = rec.irregular.iter().map(u64::to_string).collect();
        format!("irregular i_p={} r={}", rec.irregular.len(), idx.join(","))
    };
    let rejection = rec.rejection.map_or(String::new(), |r| format!(" rejection={}", r.name()));
    println!("p={p} {status} strategy={}{rejection}", rec.strategy);
    if rec.checksum_ok {
        Ok(())
    } else {
        Err(Failure::Check(format!("checksum failed for {p}")))
    }
}

fn cmd_pair(p: u64, r: u64) -> Outcome {
    let v = bernoulli_single(p, r).map_err(usage)?;
    println!("p={p} r={r} B_r={v}{}", if v == 0 { " irregular" } else { "" });
    Ok(())
}

fn cmd_iwasawa(p: u64, r: u64) -> Outcome {
    let rep = iwasawa_check(p, r).map_err(usage)?;
    let verdict = match rep.verdict {
        Verdict::Confirmed => "confirmed".to_string(),
        Verdict::Inconclusive => {
            let failed: Vec<String> = rep.failed_conditions().iter().map(|c| format!("cond{c}")).collect();
            format!("inconclusive {}", failed.join(" "))
        }
    };
    println!("p={p} r={r} s={} t={} {verdict}", rep.s, rep.t);
    Ok(())
}

fn print_report(rep: &StatsReport) {
    println!("  {:>5} {:>12} {:>14} {:>10} {:>10}", "i_p", "primes", "expected", "fraction", "P_m");
    let last = rep.observed.len() - 1;
    for (m, (&obs, &exp)) in rep.observed.iter().zip(&rep.expected).enumerate() {
        let label = if m == last { format!(">={m}") } else { m.to_string() };
        println!(
            "  {label:>5} {obs:>12} {exp:>14.2} {:>10.6} {:>10.6}",
            obs as f64 / rep.n as f64,
            rep.masses[m]
        );
    }
    println!("  X = {:.3}, dof = {}, p-value = {:.4}", rep.x, rep.dof, rep.p_value);
}

fn cmd_stats(results: &Path, bucket_cap: usize, interval_width: Option<u64>) -> Outcome {
    let file = File::open(results).map_err(|e| usage(format!("{}: {e}", results.display())))?;
    let spec = interval_width.map(|width| IntervalSpec {
        width,
        bucket_cap: DEFAULT_INTERVAL_CAP.min(bucket_cap),
    });
    let an = analyze(BufReader::new(file), bucket_cap, spec)
        .map_err(|e| usage(format!("{}: {e}", results.display())))?;
    println!(
        "{} primes, regular fraction {:.4}",
        an.whole.n,
        an.whole.regular_fraction()
    );
    print_report(&an.whole);
    if !an.intervals.is_empty() {
        println!();
        println!("{:>12} {:>12} {:>10} {:>10} {:>8}", "from", "to", "primes", "X", "p-value");
        for iv in &an.intervals {
            match &iv.report {
                Some(r) => println!(
                    "{:>12} {:>12} {:>10} {:>10.3} {:>8.4}",
                    iv.lo, iv.hi, iv.primes, r.x, r.p_value
                ),
                None => println!("{:>12} {:>12} {:>10} {:>10} {:>8}", iv.lo, iv.hi, 0, "-", "-"),
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Scan {
            from,
            to,
            jobs,
            out,
            aux,
            force_strategy,
        } => {
            let out = out.unwrap_or_else(|| PathBuf::from(format!("irregular-{from}-{to}.txt")));
            let mut cfg = ScanConfig::new(from, to, out);
            if let Some(aux) = aux {
                cfg.aux = aux;
            }
            if let Some(jobs) = jobs {
                cfg.jobs = jobs;
            }
            cfg.force = force_strategy;
            cmd_scan(cfg)
        }
        Command::Verify { results, aux } => cmd_verify(&results, &aux),
        Command::Single { p } => cmd_single(p),
        Command::Pair { p, r } => cmd_pair(p, r),
        Command::Iwasawa { p, r } => cmd_iwasawa(p, r),
        Command::Stats {
            results,
            bucket_cap,
            interval_width,
        } => cmd_stats(&results, bucket_cap, interval_width),
    }
}

fn main() -> ExitCode {
    tune_allocator();
    restore_sigpipe();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
