//! Independent checks: a linear-time single-index Bernoulli oracle, the
//! Iwasawa-invariant criterion and re-audit of stored residue pairs.

use thiserror::Error;

use crate::arith::{inv_mod, is_prime, mul_mod, pow_mod, primitive_root, Montgomery, ShoupConst};
use crate::pipeline::IrregularRecord;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error("index {r} is not an even integer in [2, {max}]")]
    BadIndex { r: u64, max: u64 },
    #[error("{p} is not a prime >= 5")]
    BadPrime { p: u64 },
    #[error("({p}, {r}) is not an irregular pair")]
    NotIrregular { p: u64, r: u64 },
    #[error("power sum for ({p}, {r}) is not divisible by p")]
    SumNotDivisible { p: u64, r: u64 },
}

fn check_args(p: u64, r: u64) -> Result<(), CheckError> {
    if !(5..1 << 32).contains(&p) || !is_prime(p) {
        return Err(CheckError::BadPrime { p });
    }
    if r % 2 == 1 || r < 2 || r > p - 3 {
        return Err(CheckError::BadIndex { r, max: p - 3 });
    }
    Ok(())
}

const LANES: usize = 4;

/// `B_r mod p` in `O(p)` word operations.
///
/// Walks `x = gamma^i`; with `gamma * gamma^{i-1} = k p + gamma^i` we have
/// `f_gamma(gamma^i) = k - (gamma - 1)/2`, and the constant part drops out
/// because `sum_x x^{r-1} = 0`. What is left is `sum_i k_i w^i` with
/// `w = gamma^{r-1}`.
pub fn bernoulli_single(p: u64, r: u64) -> Result<u64, CheckError> {
    check_args(p, r)?;
    let gamma = primitive_root(p);
    let w = pow_mod(gamma, r - 1, p);
    let g = ShoupConst::new(gamma, p);
    let g_step = ShoupConst::new(pow_mod(gamma, LANES as u64, p), p);
    let w_step = ShoupConst::new(pow_mod(w, LANES as u64, p), p);
    let total = p - 1;

    // lane l handles i = l, l + LANES, ...; y = gamma^{i-1}, wi = w^i
    let gamma_inv = inv_mod(gamma, p).expect("unit");
    let mut y = [0u64; LANES];
    let mut wi = [0u64; LANES];
    for l in 0..LANES {
        y[l] = mul_mod(gamma_inv, pow_mod(gamma, l as u64, p), p);
        wi[l] = pow_mod(w, l as u64, p);
    }
    let mut acc = [0u128; LANES];
    let full = total / LANES as u64;
    for _ in 0..full {
        for l in 0..LANES {
            // Shoup quotient estimate, off by at most one
            let hi = ((y[l] as u128 * g.quotient as u128) >> 64) as u64;
            let t = y[l].wrapping_mul(gamma).wrapping_sub(hi.wrapping_mul(p));
            let k = hi + (t >= p) as u64;
            acc[l] += k as u128 * wi[l] as u128;
            y[l] = g_step.mul(y[l], p);
            wi[l] = w_step.mul(wi[l], p);
        }
    }
    for l in 0..(total % LANES as u64) as usize {
        let k = y[l] * gamma / p;
        acc[l] += k as u128 * wi[l] as u128;
    }
    let sum = acc
        .iter()
        .fold(0u64, |s, &a| (s + (a % p as u128) as u64) % p);
    let denom = (pow_mod(gamma, r, p) + p - 1) % p;
    let inv = inv_mod(denom, p).expect("gamma^r != 1 for 2 <= r <= p - 3");
    Ok(mul_mod(mul_mod(r % p, sum, p), inv, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// All four conditions hold, so `lambda_p = nu_p = i_p`.
    Confirmed,
    /// Some condition fails; a different criterion would be needed.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IwasawaReport {
    pub p: u64,
    pub r: u64,
    pub s: u64,
    pub t: u64,
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub cond4: bool,
    pub verdict: Verdict,
}

impl IwasawaReport {
    pub fn failed_conditions(&self) -> Vec<usize> {
        [self.cond1, self.cond2, self.cond3, self.cond4]
            .iter()
            .enumerate()
            .filter(|(_, &ok)| !ok)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Above this many terms, powers are computed one by one instead of with a
/// multiplicative sieve (whose table would need too much memory).
const SIEVE_LIMIT: u64 = 1 << 25;

/// `sum_{a=1}^{h} a^e1` and `sum a^e2` modulo `modulus`.
fn power_sums(h: u64, e1: u64, e2: u64, modulus: u64) -> (u64, u64) {
    let mont = Montgomery::new(modulus);
    let pw = |a: u64, e: u64| mont.pow(mont.to_mont(a), e);
    let (mut s1, mut s2) = (0u64, 0u64);
    let add = |s: &mut u64, v: u64| {
        *s += v;
        if *s >= modulus {
            *s -= modulus;
        }
    };
    if h <= SIEVE_LIMIT {
        // smallest prime factor sieve; a^e is multiplicative in a
        let len = h as usize + 1;
        let mut spf = vec![0u32; len];
        let mut v1 = vec![0u64; len];
        let mut v2 = vec![0u64; len];
        if len > 1 {
            v1[1] = mont.r_mod();
            v2[1] = mont.r_mod();
        }
        for a in 2..len {
            if spf[a] == 0 {
                let mut k = a;
                while k < len {
                    if spf[k] == 0 {
                        spf[k] = a as u32;
                    }
                    k += a;
                }
                v1[a] = pw(a as u64, e1);
                v2[a] = pw(a as u64, e2);
            } else {
                let q = spf[a] as usize;
                v1[a] = mont.normalize(mont.mul(v1[q], v1[a / q]));
                v2[a] = mont.normalize(mont.mul(v2[q], v2[a / q]));
            }
        }
        for a in 1..len {
            add(&mut s1, v1[a]);
            add(&mut s2, v2[a]);
        }
    } else {
        for a in 1..=h {
            add(&mut s1, pw(a, e1));
            add(&mut s2, pw(a, e2));
        }
    }
    (mont.from_mont(s1), mont.from_mont(s2))
}

/// Evaluates the four incongruences for an irregular pair `(p, r)`.
pub fn iwasawa_check(p: u64, r: u64) -> Result<IwasawaReport, CheckError> {
    check_args(p, r)?;
    if bernoulli_single(p, r)? != 0 {
        return Err(CheckError::NotIrregular { p, r });
    }
    if p >= 1 << 31 {
        return Err(CheckError::BadPrime { p });
    }
    let p2 = p * p;
    let (sum_s, sum_t) = power_sums((p - 1) / 2, r - 1, p + r - 2, p2);
    if sum_s % p != 0 || sum_t % p != 0 {
        return Err(CheckError::SumNotDivisible { p, r });
    }
    let (s, t) = (sum_s / p, sum_t / p);
    let rm = r % p;
    let cond1 = pow_mod(2, r, p) != 1;
    let cond2 = s != 0;
    let cond3 = s != t;
    let lhs = mul_mod((2 + p - rm) % p, s, p);
    let rhs = mul_mod((1 + p - rm) % p, t, p);
    let cond4 = lhs != rhs;
    let verdict = if cond1 && cond2 && cond3 && cond4 {
        Verdict::Confirmed
    } else {
        Verdict::Inconclusive
    };
    Ok(IwasawaReport {
        p,
        r,
        s,
        t,
        cond1,
        cond2,
        cond3,
        cond4,
        verdict,
    })
}

/// Re-derives every stored `(r, B_r)` pair with [`bernoulli_single`] and
/// checks the stored order (by residue, then by `r`).
pub fn audit_record(record: &IrregularRecord) -> bool {
    audit_pairs(record.p, &record.ten_pairs)
}

pub fn audit_pairs(p: u64, pairs: &[(u64, u64)]) -> bool {
    let expected = ((p.saturating_sub(3)) / 2).min(10) as usize;
    if pairs.len() != expected {
        return false;
    }
    let sorted = pairs
        .windows(2)
        .all(|w| (w[0].1, w[0].0) < (w[1].1, w[1].0));
    sorted
        && pairs
            .iter()
            .all(|&(r, v)| bernoulli_single(p, r).map(|b| b == v).unwrap_or(false))
}
