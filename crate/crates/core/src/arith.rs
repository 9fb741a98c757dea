//! Word-sized modular arithmetic and multiplicative-group utilities.
//!
//! Everything here works on `u64` residues. Moduli used by the transforms go
//! up to 2^62, so products are formed in `u128` or through the precomputed
//! reductions in [`ShoupConst`] and [`Montgomery`].

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{value} is not invertible modulo {modulus}")]
    NotInvertible { value: u64, modulus: u64 },
    #[error("zero has no multiplicative order")]
    ZeroElement,
    #[error("generator exponent {needed} exceeds the limit {limit}")]
    OrderTooSmall { needed: u64, limit: u64 },
}

#[inline]
pub fn mul_mod(a: u64, b: u64, modulus: u64) -> u64 {
    if (a | b) >> 32 == 0 {
        // the 128-bit remainder is a library call; avoid it when we can
        return (a * b) % modulus;
    }
    ((a as u128 * b as u128) % modulus as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, modulus: u64) -> u64 {
    let s = a + b;
    s.min(s.wrapping_sub(modulus))
}

#[inline]
pub fn sub_mod(a: u64, b: u64, modulus: u64) -> u64 {
    let d = a.wrapping_sub(b);
    d.min(d.wrapping_add(modulus))
}

/// Reduces a signed integer into `[0, modulus)`.
#[inline]
pub fn reduce_signed(x: i128, modulus: u64) -> u64 {
    match i64::try_from(x) {
        Ok(v) if modulus <= i64::MAX as u64 => v.rem_euclid(modulus as i64) as u64,
        _ => x.rem_euclid(modulus as i128) as u64,
    }
}

/// Lifts a residue to the symmetric interval `(-modulus/2, modulus/2]`.
#[inline]
pub fn lift_centered(x: u64, modulus: u64) -> i64 {
    if x > modulus / 2 {
        x as i64 - modulus as i64
    } else {
        x as i64
    }
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut result = 1 % modulus;
    let mut b = base % modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, modulus);
        }
        b = mul_mod(b, b, modulus);
        exp >>= 1;
    }
    result
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

pub fn inv_mod(x: u64, modulus: u64) -> Result<u64, ArithError> {
    let (mut old_r, mut r) = (x as i128 % modulus as i128, modulus as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(ArithError::NotInvertible { value: x, modulus });
    }
    Ok(old_s.rem_euclid(modulus as i128) as u64)
}

/// Inverts every element of `values` in place with a single modular
/// inversion. All inputs must be nonzero modulo `modulus` (a prime).
pub fn batch_inverse(values: &mut [u64], modulus: u64) {
    if values.is_empty() {
        return;
    }
    if modulus < 1 << 32 {
        let sm = SmallMod::new(modulus);
        return batch_inverse_with(values, |a, b| sm.mul(a, b), modulus);
    }
    batch_inverse_with(values, |a, b| mul_mod(a, b, modulus), modulus)
}

// Several interleaved product chains: a single chain is bound by the
// latency of one modular multiplication per element.
fn batch_inverse_with(values: &mut [u64], mul: impl Fn(u64, u64) -> u64, modulus: u64) {
    const CHAINS: usize = 4;
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = [1u64; CHAINS];
    for chunk in values.chunks(CHAINS) {
        for (a, &v) in acc.iter_mut().zip(chunk) {
            prefix.push(*a);
            *a = mul(*a, v);
        }
    }
    let mut inv = acc.map(|a| inv_mod(a, modulus).expect("batch_inverse: zero element"));
    let chunks = values.chunks_mut(CHAINS).zip(prefix.chunks(CHAINS));
    for (chunk, before) in chunks.rev() {
        for ((v, &b), i) in chunk.iter_mut().zip(before).zip(inv.iter_mut()) {
            let original = *v;
            *v = mul(*i, b);
            *i = mul(*i, original);
        }
    }
}

/// Deterministic Miller-Rabin; the witness set covers every 64-bit input.
pub fn is_prime(k: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if k < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if k.is_multiple_of(w) {
            return k == w;
        }
    }
    let mut d = k - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, k);
        if x == 1 || x == k - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, k);
            if x == k - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Prime factorization, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    value: u64,
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(q, _)| q)
    }

    pub fn distinct_primes(&self) -> usize {
        self.factors.len()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    pub fn exponent_of(&self, prime: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == prime)
            .map_or(0, |&(_, e)| e)
    }
}

pub fn factorize(k: u64) -> Factorization {
    assert!(k >= 1, "factorize: input must be positive");
    let mut rest = k;
    let mut map: Vec<(u64, u32)> = Vec::new();
    let push = |q: u64, map: &mut Vec<(u64, u32)>| match map.iter_mut().find(|(p, _)| *p == q) {
        Some((_, e)) => *e += 1,
        None => map.push((q, 1)),
    };
    for q in [2u64, 3, 5] {
        while rest.is_multiple_of(q) {
            push(q, &mut map);
            rest /= q;
        }
    }
    let mut q = 7u64;
    while q < (1 << 16) && q * q <= rest {
        while rest.is_multiple_of(q) {
            push(q, &mut map);
            rest /= q;
        }
        q += 2;
    }
    if rest > 1 {
        let mut stack = vec![rest];
        while let Some(x) = stack.pop() {
            if is_prime(x) {
                push(x, &mut map);
            } else {
                let f = pollard_rho(x);
                stack.push(f);
                stack.push(x / f);
            }
        }
    }
    map.sort_unstable();
    Factorization {
        value: k,
        factors: map,
    }
}

// Brent's variant; only reached for cofactors above 2^32.
fn pollard_rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    for c in 1u64.. {
        let f = |x: u64| add_mod(mul_mod(x, x, n), c, n);
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!()
}

/// Splits `k` into its 7-smooth part `m` and the cofactor `n = k / m`.
pub fn smooth_split(k: u64) -> (u64, u64) {
    let mut m = 1;
    let mut n = k;
    for q in [2u64, 3, 5, 7] {
        while n.is_multiple_of(q) {
            n /= q;
            m *= q;
        }
    }
    (m, n)
}

/// Multiplicative order of `x` modulo the prime `modulus`, given the
/// factorization of `modulus - 1`.
pub fn element_order(x: u64, modulus: u64, phi_factors: &Factorization) -> Result<u64, ArithError> {
    if x.is_multiple_of(modulus) {
        return Err(ArithError::ZeroElement);
    }
    debug_assert_eq!(phi_factors.value(), modulus - 1);
    let mut order = modulus - 1;
    for &(q, e) in phi_factors.factors() {
        for _ in 0..e {
            if pow_mod(x, order / q, modulus) == 1 {
                order /= q;
            } else {
                break;
            }
        }
    }
    Ok(order)
}

/// Smallest generator of the unit group modulo the odd prime `p`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let phi = factorize(p - 1);
    primitive_root_with(p, &phi)
}

pub fn primitive_root_with(p: u64, phi: &Factorization) -> u64 {
    (2..p)
        .find(|&g| phi.primes().all(|q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("prime modulus has a generator")
}

/// Discrete logarithm of `y` to the base `g`, a generator modulo the prime
/// `n` (Pohlig-Hellman over the factorization of `n - 1`, baby-step
/// giant-step inside each prime-power component).
pub fn discrete_log(y: u64, g: u64, n: u64, phi: &Factorization) -> u64 {
    let order = n - 1;
    let mut residues = Vec::new();
    for &(q, e) in phi.factors() {
        let qe = q.pow(e);
        let cofactor = order / qe;
        let g_sub = pow_mod(g, cofactor, n);
        let y_sub = pow_mod(y, cofactor, n);
        // digits of the log in base q
        let gamma = pow_mod(g_sub, qe / q, n);
        let gamma_inv = inv_mod(g_sub, n).expect("unit");
        let mut x = 0u64;
        let mut q_pow = 1u64;
        for k in 0..e {
            let shifted = mul_mod(y_sub, pow_mod(gamma_inv, x, n), n);
            let h = pow_mod(shifted, qe / q / q.pow(k), n);
            let digit = bsgs(gamma, h, q, n);
            x += digit * q_pow;
            q_pow *= q;
        }
        residues.push((x, qe));
    }
    let mut acc = 0u64;
    let mut modulus = 1u64;
    for (r, m) in residues {
        // acc + modulus * t == r (mod m)
        let diff = (r + m - acc % m) % m;
        let t = mul_mod(diff, inv_mod(modulus % m, m).expect("coprime"), m);
        acc += modulus * t;
        modulus *= m;
    }
    acc % order
}

// Solves base^x == target with 0 <= x < order.
fn bsgs(base: u64, target: u64, order: u64, n: u64) -> u64 {
    let step = (order as f64).sqrt().ceil() as u64 + 1;
    let mut table = HashMap::with_capacity(step as usize);
    let mut cur = 1u64;
    for j in 0..step {
        table.entry(cur).or_insert(j);
        cur = mul_mod(cur, base, n);
    }
    let giant = inv_mod(pow_mod(base, step, n), n).expect("unit");
    let mut gamma = target;
    for i in 0..=step {
        if let Some(&j) = table.get(&gamma) {
            return (i * step + j) % order;
        }
        gamma = mul_mod(gamma, giant, n);
    }
    panic!("bsgs: {target} is not a power of {base} modulo {n}");
}

/// Finds a generator `z` modulo the prime `n` with `z^M == y`, where
/// `M = (n - 1) / ord(y)` must not exceed `m_max`.
pub fn solve_power_generator(n: u64, y: u64, m_max: u64) -> Result<(u64, u64), ArithError> {
    let phi = factorize(n - 1);
    let order = element_order(y, n, &phi)?;
    let m = (n - 1) / order;
    if m > m_max {
        return Err(ArithError::OrderTooSmall {
            needed: m,
            limit: m_max,
        });
    }
    let g = primitive_root_with(n, &phi);
    let a = discrete_log(y % n, g, n, &phi);
    // z = g^b with b*M == a (mod n - 1) and gcd(b, n - 1) == 1
    let base = a / m;
    let b = (0..m)
        .map(|k| base + k * order)
        .find(|&b| gcd(b, n - 1) == 1)
        .expect("some lift of the exponent is a unit");
    Ok((pow_mod(g, b, n), m))
}

/// Barrett reduction for moduli below 2^32, where a product of two
/// residues fits in a `u64`. Avoids hardware division in per-residue loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmallMod {
    p: u64,
    m: u64,
}

impl SmallMod {
    pub fn new(p: u64) -> Self {
        assert!(p > 1 && p < 1 << 32, "SmallMod: modulus {p} out of range");
        SmallMod { p, m: u64::MAX / p }
    }

    #[inline(always)]
    pub fn modulus(self) -> u64 {
        self.p
    }

    /// `x mod p` for any `u64`.
    #[inline(always)]
    pub fn reduce(self, x: u64) -> u64 {
        // the quotient estimate is low by at most one
        let q = ((x as u128 * self.m as u128) >> 64) as u64;
        let r = x - q * self.p;
        r.min(r.wrapping_sub(self.p))
    }

    /// Floor of `x / p`.
    #[inline(always)]
    pub fn quotient(self, x: u64) -> u64 {
        let q = ((x as u128 * self.m as u128) >> 64) as u64;
        q + (x - q * self.p >= self.p) as u64
    }

    #[inline(always)]
    pub fn reduce_i64(self, x: i64) -> u64 {
        let r = self.reduce(x.unsigned_abs());
        if x < 0 {
            let n = self.p - r;
            n.min(n.wrapping_sub(self.p))
        } else {
            r
        }
    }

    #[inline(always)]
    pub fn reduce_i128(self, x: i128) -> u64 {
        match i64::try_from(x) {
            Ok(v) => self.reduce_i64(v),
            Err(_) => x.rem_euclid(self.p as i128) as u64,
        }
    }

    /// `a b mod p` for `a, b < 2^32`.
    #[inline(always)]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        debug_assert!(a >> 32 == 0 && b >> 32 == 0);
        self.reduce(a * b)
    }

    #[inline(always)]
    pub fn add(self, a: u64, b: u64) -> u64 {
        add_mod(a, b, self.p)
    }
}

/// Calls `f(k, x^k mod p)` for `k < count` in order. Four interleaved
/// chains, since one is bound by multiplication latency.
pub fn for_each_power(sm: SmallMod, x: u64, count: usize, mut f: impl FnMut(usize, u64)) {
    let mut lanes = [1u64; 4];
    for l in 1..4 {
        lanes[l] = sm.mul(lanes[l - 1], x);
    }
    let step = sm.mul(lanes[3], x);
    let mut k = 0;
    while k + 4 <= count {
        for (l, v) in lanes.iter_mut().enumerate() {
            f(k + l, *v);
            *v = sm.mul(*v, step);
        }
        k += 4;
    }
    for (l, &v) in lanes.iter().enumerate().take(count - k) {
        f(k + l, v);
    }
}

/// Multiplication by a fixed constant with a precomputed quotient
/// (Shoup's trick). Works for any modulus below 2^63.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShoupConst {
    pub value: u64,
    pub quotient: u64,
}

impl ShoupConst {
    #[inline]
    pub fn new(value: u64, modulus: u64) -> Self {
        debug_assert!(value < modulus);
        let quotient = (((value as u128) << 64) / modulus as u128) as u64;
        ShoupConst { value, quotient }
    }

    /// Returns `x * value` modulo `modulus`, in `[0, 2 * modulus)`.
    #[inline(always)]
    pub fn mul_lazy(self, x: u64, modulus: u64) -> u64 {
        let hi = ((x as u128 * self.quotient as u128) >> 64) as u64;
        x.wrapping_mul(self.value)
            .wrapping_sub(hi.wrapping_mul(modulus))
    }

    #[inline(always)]
    pub fn mul(self, x: u64, modulus: u64) -> u64 {
        let r = self.mul_lazy(x, modulus);
        r.min(r.wrapping_sub(modulus))
    }
}

/// Montgomery reduction with `R = 2^64` for odd moduli below 2^62.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Montgomery {
    modulus: u64,
    neg_inv: u64,
    r_mod: u64,
    r2_mod: u64,
}

impl Montgomery {
    pub fn new(modulus: u64) -> Self {
        assert!(
            modulus % 2 == 1 && modulus < (1 << 62),
            "Montgomery: bad modulus {modulus}"
        );
        // Newton iteration for modulus^{-1} mod 2^64
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(modulus.wrapping_mul(inv)));
        }
        let r_mod = ((1u128 << 64) % modulus as u128) as u64;
        let r2_mod = mul_mod(r_mod, r_mod, modulus);
        Montgomery {
            modulus,
            neg_inv: inv.wrapping_neg(),
            r_mod,
            r2_mod,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// `R mod q`, i.e. the Montgomery form of one.
    pub fn r_mod(&self) -> u64 {
        self.r_mod
    }

    /// Returns `t / R mod q` in `[0, 2q)` for `t < q * R`.
    #[inline(always)]
    pub fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        ((t + m as u128 * self.modulus as u128) >> 64) as u64
    }

    /// Montgomery product `a * b / R`, in `[0, 2q)` for `a, b < 2q`.
    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    pub fn to_mont(&self, x: u64) -> u64 {
        self.normalize(self.mul(x % self.modulus, self.r2_mod))
    }

    pub fn from_mont(&self, x: u64) -> u64 {
        self.normalize(self.redc(x as u128))
    }

    #[inline(always)]
    pub fn normalize(&self, x: u64) -> u64 {
        x.min(x.wrapping_sub(self.modulus))
    }

    /// Exponentiation of a Montgomery-form base; result in Montgomery form.
    pub fn pow(&self, base: u64, mut exp: u64) -> u64 {
        let mut result = self.r_mod;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.normalize(self.mul(result, b));
            }
            b = self.normalize(self.mul(b, b));
            exp >>= 1;
        }
        result
    }
}

/// Primes in `[from, to]`, ascending.
pub fn primes_in_range(from: u64, to: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_prime(from, to, |p| out.push(p));
    out
}

/// Number of primes in `[from, to]`.
pub fn count_primes(from: u64, to: u64) -> u64 {
    let mut count = 0;
    for_each_prime(from, to, |_| count += 1);
    count
}

/// Calls `f` on every prime in `[from, to]` in ascending order (segmented
/// sieve of Eratosthenes).
pub fn for_each_prime(from: u64, to: u64, mut f: impl FnMut(u64)) {
    if to < 2 || from > to {
        return;
    }
    let from = from.max(2);
    let root = (to as f64).sqrt() as u64 + 1;
    let mut small = vec![true; root as usize + 1];
    let mut base = Vec::new();
    for i in 2..=root as usize {
        if small[i] {
            base.push(i as u64);
            let mut j = i * i;
            while j <= root as usize {
                small[j] = false;
                j += i;
            }
        }
    }
    const SEGMENT: u64 = 1 << 18;
    let mut lo = from;
    while lo <= to {
        let hi = (lo + SEGMENT - 1).min(to);
        let mut sieve = vec![true; (hi - lo + 1) as usize];
        for &q in &base {
            if q * q > hi {
                break;
            }
            let mut start = (lo.div_ceil(q) * q).max(q * q);
            while start <= hi {
                sieve[(start - lo) as usize] = false;
                start += q;
            }
        }
        for (i, _) in sieve.iter().enumerate().filter(|&(_, &is)| is) {
            f(lo + i as u64);
        }
        if hi == u64::MAX {
            break;
        }
        lo = hi + 1;
    }
}
