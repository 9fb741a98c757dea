//! Poisson model for the index of irregularity and the chi-square test
//! against observed counts.

use std::io::BufRead;

use thiserror::Error;

use crate::arith::count_primes;
use crate::results::{read_results, FormatError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no primes to analyse")]
    EmptyInput,
    #[error("bucket cap must be at least 1")]
    BadBucketCap,
    #[error("interval width must be positive")]
    BadIntervalWidth,
    #[error(transparent)]
    MalformedFile(#[from] FormatError),
}

/// `e^{-1/2} / (2^m m!)`, the limiting density of primes with `i_p = m`.
pub fn poisson_mass(m: u32) -> f64 {
    (1..=m).fold((-0.5f64).exp(), |acc, k| acc / (2 * k) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    /// Observed counts for `m < cap`, then the tail `m >= cap`.
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub x: f64,
    pub dof: u32,
}

/// Chi-square statistic with buckets `0..cap` and one tail bucket whose
/// expectation is whatever the first `cap` leave of the total.
pub fn chi_square_stat(observed: &[u64], cap: usize) -> Result<ChiSquare, StatsError> {
    if cap == 0 {
        return Err(StatsError::BadBucketCap);
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(StatsError::EmptyInput);
    }
    let n = total as f64;
    let mut obs: Vec<u64> = (0..cap).map(|m| observed.get(m).copied().unwrap_or(0)).collect();
    obs.push(observed.iter().skip(cap).sum());
    let mut exp: Vec<f64> = (0..cap).map(|m| poisson_mass(m as u32) * n).collect();
    exp.push(n - exp.iter().sum::<f64>());
    let x = obs
        .iter()
        .zip(&exp)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    Ok(ChiSquare {
        observed: obs,
        expected: exp,
        x,
        dof: cap as u32,
    })
}

// Lanczos approximation, g = 7, nine terms; about 15 digits for x > 0.
fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

/// Regularized upper incomplete gamma `Q(a, x)`.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        // series for P(a, x)
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        (1.0 - sum * log_prefactor.exp()).clamp(0.0, 1.0)
    } else {
        // continued fraction for Q(a, x), modified Lentz
        let tiny = f64::MIN_POSITIVE / EPS;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        (log_prefactor.exp() * h).clamp(0.0, 1.0)
    }
}

/// `P(X >= x)` for a chi-square variable with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: u32) -> f64 {
    assert!(dof >= 1, "chi_square_sf: dof must be positive");
    assert!(x >= 0.0, "chi_square_sf: x = {x} is negative");
    gamma_q(dof as f64 / 2.0, x / 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    /// Number of primes analysed.
    pub n: u64,
    /// `counts[m]` primes with `i_p = m`.
    pub counts: Vec<u64>,
    /// Poisson mass of each bucket; the last one is the tail complement.
    pub masses: Vec<f64>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub x: f64,
    pub dof: u32,
    pub p_value: f64,
}

impl StatsReport {
    pub fn from_counts(counts: &[u64], cap: usize) -> Result<Self, StatsError> {
        let chi = chi_square_stat(counts, cap)?;
        let mut masses: Vec<f64> = (0..cap).map(|m| poisson_mass(m as u32)).collect();
        masses.push(1.0 - masses.iter().sum::<f64>());
        let mut counts = counts.to_vec();
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        Ok(StatsReport {
            n: counts.iter().sum(),
            counts,
            masses,
            p_value: chi_square_sf(chi.x, chi.dof),
            observed: chi.observed,
            expected: chi.expected,
            x: chi.x,
            dof: chi.dof,
        })
    }

    /// Fraction of regular primes.
    pub fn regular_fraction(&self) -> f64 {
        self.counts[0] as f64 / self.n as f64
    }
}

/// Report for the primes of `[lo, hi)`; `None` if there are no primes.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub lo: u64,
    pub hi: u64,
    pub primes: u64,
    pub report: Option<StatsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub whole: StatsReport,
    pub intervals: Vec<IntervalReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalSpec {
    pub width: u64,
    pub bucket_cap: usize,
}

/// Whole-range bucket cap.
pub const DEFAULT_BUCKET_CAP: usize = 7;
/// Bucket cap for subintervals, which hold fewer primes.
pub const DEFAULT_INTERVAL_CAP: usize = 6;

/// Smallest prime a scan looks at.
const FIRST_SCANNED: u64 = 5;

fn bump(counts: &mut Vec<u64>, m: usize) {
    if counts.len() <= m {
        counts.resize(m + 1, 0);
    }
    counts[m] += 1;
}

/// Histogram of `i_p` over a results file and its chi-square report, with
/// optional reports for the subintervals `[j w, (j + 1) w)`.
pub fn analyze<R: BufRead>(
    reader: R,
    bucket_cap: usize,
    intervals: Option<IntervalSpec>,
) -> Result<Analysis, StatsError> {
    if let Some(spec) = intervals {
        if spec.width == 0 {
            return Err(StatsError::BadIntervalWidth);
        }
    }
    let width = intervals.map(|s| s.width);
    let mut counts = vec![0u64];
    // per interval: irregular histogram (index 0 unused until the end)
    let mut per_interval: Vec<Vec<u64>> = Vec::new();
    let meta = read_results(reader, |p, idx| {
        bump(&mut counts, idx.len());
        if let Some(w) = width {
            let j = (p / w) as usize;
            if per_interval.len() <= j {
                per_interval.resize(j + 1, vec![0]);
            }
            bump(&mut per_interval[j], idx.len());
        }
    })?;
    // primes whose checksum failed have no known index and are left out
    let irregular: u64 = counts.iter().sum::<u64>() + meta.summary.checksum_fail;
    let n = meta.summary.primes;
    if n < irregular {
        return Err(FormatError::Malformed(format!(
            "summary counts {n} primes but lists {irregular} irregular ones"
        ))
        .into());
    }
    counts[0] = n - irregular;
    let whole = StatsReport::from_counts(&counts, bucket_cap)?;

    let mut reports = Vec::new();
    if let Some(spec) = intervals {
        let lo_all = meta.from.max(FIRST_SCANNED);
        let mut total = 0;
        if lo_all <= meta.to {
            let (first, last) = (lo_all / spec.width, meta.to / spec.width);
            for j in first..=last {
                let lo = j * spec.width;
                let hi = lo.saturating_add(spec.width);
                let primes = count_primes(lo.max(lo_all), (hi - 1).min(meta.to));
                total += primes;
                let mut hist = per_interval.get(j as usize).cloned().unwrap_or_else(|| vec![0]);
                let failed = meta.checksum_failures.iter().filter(|&&p| p / spec.width == j).count();
                let irregular: u64 = hist.iter().sum::<u64>() + failed as u64;
                if primes < irregular {
                    return Err(FormatError::Malformed(format!(
                        "interval [{lo}, {hi}) lists more irregular primes than it has primes"
                    ))
                    .into());
                }
                hist[0] = primes - irregular;
                let report = if primes > 0 {
                    Some(StatsReport::from_counts(&hist, spec.bucket_cap)?)
                } else {
                    None
                };
                reports.push(IntervalReport {
                    lo,
                    hi,
                    primes,
                    report,
                });
            }
        }
        if total != n {
            return Err(FormatError::Malformed(format!(
                "summary counts {n} primes, the range [{}, {}] holds {total}",
                meta.from, meta.to
            ))
            .into());
        }
    }
    Ok(Analysis {
        whole,
        intervals: reports,
    })
}

/// Whole-range report of a results file.
pub fn build_report<R: BufRead>(reader: R, bucket_cap: usize) -> Result<StatsReport, StatsError> {
    Ok(analyze(reader, bucket_cap, None)?.whole)
}
