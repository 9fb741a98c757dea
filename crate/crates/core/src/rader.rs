//! Row DFTs of prime length and of length `n1 * n2` (two distinct primes),
//! reduced to exact integer convolutions of small-coefficient inputs.

use std::sync::Arc;

use thiserror::Error;

use crate::arith::{
    factorize, for_each_power, gcd, lcm, lift_centered, mul_mod, pow_mod, primitive_root, solve_power_generator,
    ArithError, SmallMod,
};
use crate::ntt::{
    kernel_is_supported, shared_plan_for_bound, CyclicEngine, LinearConvolver, NttError, NttPlan,
    PreparedOperand,
};

/// Largest `lcm(e1, e2)` accepted by [`build_de_split`].
pub const MAX_CYCLIC_LCM: u64 = 1 << 16;
/// Bound on `M` in `z^M = y`.
pub const MAX_POWER_STEP: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RaderError {
    #[error("rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Ntt(#[from] NttError),
}

/// Generator data for a prime length `n`: `z` generates the units mod `n`
/// and `z^M = y` with `y` in `{2, 3}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaderPlan1 {
    pub n: u64,
    pub z: u64,
    pub m_exp: u64,
    pub y: u64,
    /// `perm_in[s] = z^{-s} mod n`
    pub perm_in: Vec<u32>,
    /// `perm_out[t] = z^t mod n`
    pub perm_out: Vec<u32>,
}

pub fn build_rader_plan(n: u64) -> Result<RaderPlan1, RaderError> {
    if n < 5 || !crate::arith::is_prime(n) || n >= 1 << 32 {
        return Err(RaderError::Rejected(format!(
            "{n} is not a usable prime length"
        )));
    }
    let (z, m_exp, y) = match solve_power_generator(n, 2, MAX_POWER_STEP) {
        Ok((z, m)) => (z, m, 2),
        Err(ArithError::OrderTooSmall { .. }) => {
            match solve_power_generator(n, 3, MAX_POWER_STEP) {
                Ok((z, m)) => (z, m, 3),
                Err(e) => {
                    return Err(RaderError::Rejected(format!(
                        "2 and 3 both have small order mod {n}: {e}"
                    )))
                }
            }
        }
        Err(e) => return Err(RaderError::Rejected(e.to_string())),
    };
    let z_inv = crate::arith::inv_mod(z, n).expect("generator is a unit");
    let len = (n - 1) as usize;
    let mut perm_in = Vec::with_capacity(len);
    let mut perm_out = Vec::with_capacity(len);
    let (mut fwd, mut back) = (1u64, 1u64);
    for _ in 0..len {
        perm_out.push(fwd as u32);
        perm_in.push(back as u32);
        fwd = fwd * z % n;
        back = back * z_inv % n;
    }
    Ok(RaderPlan1 {
        n,
        z,
        m_exp,
        y,
        perm_in,
        perm_out,
    })
}

/// `start^{z^s} mod p` for `s < length`: the first `M` terms by direct
/// exponentiation, every later one as the `y`-th power of the term `M`
/// places back.
pub fn gen_geometric(start: u64, p: u64, plan: &RaderPlan1, length: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(length);
    let mut e = 1u64;
    for _ in 0..length.min(plan.m_exp as usize) {
        out.push(pow_mod(start, e, p));
        e = e * plan.z % plan.n;
    }
    for s in out.len()..length {
        let prev = out[s - plan.m_exp as usize];
        let sq = mul_mod(prev, prev, p);
        out.push(if plan.y == 2 {
            sq
        } else {
            mul_mod(sq, prev, p)
        });
    }
    out
}

/// DFT of prime length `n` over `Z/pZ` for integer inputs of bounded size,
/// with the root-of-unity polynomial transformed once.
pub struct RaderDft {
    plan: RaderPlan1,
    sm: SmallMod,
    conv: LinearConvolver,
    v: PreparedOperand,
}

impl RaderDft {
    /// `root` must have order `n` mod `p`; inputs must satisfy
    /// `|x_k| <= input_bound`.
    pub fn new(plan: RaderPlan1, root: u64, p: u64, input_bound: u64) -> Result<Self, RaderError> {
        let len = (plan.n - 1) as usize;
        let v: Vec<i64> = gen_geometric(root, p, &plan, len)
            .into_iter()
            .map(|x| lift_centered(x, p))
            .collect();
        let out_bound = len as u128 * input_bound as u128 * (p / 2) as u128;
        let conv = LinearConvolver::compact(len, len, out_bound)?;
        let v = conv.prepare(&v);
        Ok(RaderDft {
            plan,
            sm: SmallMod::new(p),
            conv,
            v,
        })
    }

    pub fn plan(&self) -> &RaderPlan1 {
        &self.plan
    }

    pub fn lane_count(&self) -> usize {
        self.conv.lane_count()
    }

    /// `out[l] = sum_k root^{k l} x_k mod p` for all `l < n`.
    pub fn dft(&self, x: &[i64], out: &mut [u64]) {
        let n = self.plan.n as usize;
        let len = n - 1;
        debug_assert_eq!(x.len(), n);
        let sm = self.sm;
        let u: Vec<i64> = self.plan.perm_in.iter().map(|&k| x[k as usize]).collect();
        let mut w = vec![0u64; len];
        self.conv.multiply_with(&u, &self.v, |k, c| {
            let slot = if k >= len { k - len } else { k };
            w[slot] = sm.add(w[slot], sm.reduce_i128(c));
        });
        let x0 = sm.reduce_i64(x[0]);
        for (t, &l) in self.plan.perm_out.iter().enumerate() {
            out[l as usize] = sm.add(x0, w[t]);
        }
        // |x_k| is tiny next to 2^63 / n
        out[0] = sm.reduce_i64(x.iter().sum());
    }
}

/// Factorizations `n1 - 1 = d1 e1`, `n2 - 1 = d2 e2` with `gcd(d1, d2) = 1`,
/// and generators of the three cyclic factors of the unit group mod `n1 n2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeSplit {
    pub n1: u64,
    pub n2: u64,
    pub d1: u64,
    pub e1: u64,
    pub d2: u64,
    pub e2: u64,
    pub u0: u64,
    pub u1: u64,
    pub u2: u64,
}

impl DeSplit {
    pub fn n(&self) -> u64 {
        self.n1 * self.n2
    }

    pub fn d(&self) -> u64 {
        self.d1 * self.d2
    }
}

fn is_7_smooth(mut k: u64) -> bool {
    for r in [2, 3, 5, 7] {
        while k.is_multiple_of(r) {
            k /= r;
        }
    }
    k == 1
}

// x with x = a mod n1 and x = b mod n2
fn crt_small(a: u64, n1: u64, b: u64, n2: u64) -> u64 {
    let inv = crate::arith::inv_mod(n1 % n2, n2).expect("distinct primes");
    let t = mul_mod((b + n2 - a % n2) % n2, inv, n2);
    a + n1 * t
}

/// Splits the exponents of `(n1 - 1)(n2 - 1)`: each prime power goes to the
/// `d` side of whichever factor holds it to the larger exponent.
pub fn build_de_split(n1: u64, n2: u64) -> Result<DeSplit, RaderError> {
    if n1 == n2 || !crate::arith::is_prime(n1) || !crate::arith::is_prime(n2) {
        return Err(RaderError::Rejected(format!(
            "{n1}, {n2} are not distinct primes"
        )));
    }
    let f1 = factorize(n1 - 1);
    let f2 = factorize(n2 - 1);
    let mut primes: Vec<u64> = f1.primes().chain(f2.primes()).collect();
    primes.sort_unstable();
    primes.dedup();
    let (mut d1, mut e1, mut d2, mut e2) = (1u64, 1u64, 1u64, 1u64);
    for pi in primes {
        let (a1, a2) = (f1.exponent_of(pi), f2.exponent_of(pi));
        if a1 >= a2 {
            d1 *= pi.pow(a1);
            e2 *= pi.pow(a2);
        } else {
            e1 *= pi.pow(a1);
            d2 *= pi.pow(a2);
        }
    }
    debug_assert_eq!(gcd(d1, d2), 1);
    if !is_7_smooth(e1) || !is_7_smooth(e2) || lcm(e1, e2) > MAX_CYCLIC_LCM {
        return Err(RaderError::Rejected(format!(
            "cyclic factors e1 = {e1}, e2 = {e2} are not small and smooth"
        )));
    }
    let g1 = primitive_root(n1);
    let g2 = primitive_root(n2);
    let u0 = crt_small(pow_mod(g1, e1, n1), n1, pow_mod(g2, e2, n2), n2);
    let u1 = crt_small(pow_mod(g1, d1, n1), n1, 1, n2);
    let u2 = crt_small(1, n1, pow_mod(g2, d2, n2), n2);
    Ok(DeSplit {
        n1,
        n2,
        d1,
        e1,
        d2,
        e2,
        u0,
        u1,
        u2,
    })
}

/// Length of the zero-padded axis of the three-dimensional convolution.
pub fn padded_len(split: &DeSplit) -> usize {
    (2 * split.d() as usize - 1).next_power_of_two()
}

/// The NTT plan for the three-dimensional convolution of a split, or a
/// rejection if no prime has the needed roots of unity or the output bound
/// does not fit in one prime.
pub fn conv_plan_for(split: &DeSplit, p: u64) -> Result<Arc<NttPlan>, RaderError> {
    let e = lcm(split.e1, split.e2);
    if !kernel_is_supported(split.e1 as usize) || !kernel_is_supported(split.e2 as usize) {
        return Err(RaderError::Rejected("unsupported cyclic length".into()));
    }
    let units = (split.n1 - 1) * (split.n2 - 1);
    let bound = units as u128 * 2 * (p / 2) as u128;
    let plan = shared_plan_for_bound(padded_len(split) as u64, e, bound)
        .map_err(|e| RaderError::Rejected(e.to_string()))?;
    if 2 * bound >= plan.modulus() as u128 {
        return Err(RaderError::Rejected(
            "output bound exceeds the NTT prime".into(),
        ));
    }
    Ok(plan)
}

/// Per-prime state for length-`n1 n2` row transforms.
pub struct Rader2Dft {
    split: DeSplit,
    sm: SmallMod,
    dft1: RaderDft,
    dft2: RaderDft,
    engine: CyclicEngine,
    q: u64,
    l0: usize,
    // in convolution layout [s1][s2][s0], the index u^{-s} and the index u^{t}
    idx_in: Vec<u32>,
    idx_out: Vec<u32>,
    // idx_out reduced mod n1 and mod n2
    out_residues: Vec<(u32, u32)>,
    v: Vec<u64>,
}

impl Rader2Dft {
    /// `root` has order `n = n1 n2` mod `p`; inputs satisfy `|x_k| <= 2`.
    pub fn new(
        split: DeSplit,
        plan1: RaderPlan1,
        plan2: RaderPlan1,
        conv_plan: &NttPlan,
        root: u64,
        p: u64,
    ) -> Result<Self, RaderError> {
        let (n1, n2) = (split.n1, split.n2);
        let n = split.n();
        let dft1 = RaderDft::new(plan1, pow_mod(root, n2, p), p, 2 * n2)?;
        let dft2 = RaderDft::new(plan2, pow_mod(root, n1, p), p, 2 * n1)?;
        let d = split.d() as usize;
        let (e1, e2) = (split.e1 as usize, split.e2 as usize);
        let l0 = padded_len(&split);
        let engine = CyclicEngine::new(conv_plan, &[e1, e2, l0])?;
        let q = conv_plan.modulus();

        // T[s1][s2][s0] = u0^s0 u1^s1 u2^s2 mod n
        let units = d * e1 * e2;
        let sm_n = SmallMod::new(n);
        let mut table = vec![0u32; units];
        let mut a1 = 1u64;
        for s1 in 0..e1 {
            let mut a2 = a1;
            for s2 in 0..e2 {
                let base = (s1 * e2 + s2) * d;
                for_each_power(sm_n, split.u0, d, |s0, a0| {
                    table[base + s0] = sm_n.mul(a2, a0) as u32;
                });
                a2 = sm_n.mul(a2, split.u2);
            }
            a1 = sm_n.mul(a1, split.u1);
        }
        let neg = |s: usize, len: usize| if s == 0 { 0 } else { len - s };
        let mut idx_in = vec![0u32; units];
        for s1 in 0..e1 {
            for s2 in 0..e2 {
                for s0 in 0..d {
                    idx_in[(s1 * e2 + s2) * d + s0] =
                        table[(neg(s1, e1) * e2 + neg(s2, e2)) * d + neg(s0, d)];
                }
            }
        }

        // powers of the root indexed by exponent mod n
        let mut powers = vec![0u64; n as usize];
        for_each_power(SmallMod::new(p), root, n as usize, |k, v| powers[k] = v);
        let mut v = vec![0u64; e1 * e2 * l0];
        for s12 in 0..e1 * e2 {
            for s0 in 0..d {
                let w = lift_centered(powers[table[s12 * d + s0] as usize], p);
                v[s12 * l0 + s0] = if w < 0 {
                    (w + q as i64) as u64
                } else {
                    w as u64
                };
            }
        }
        let mut scratch = Vec::new();
        engine.forward(&mut v, &mut scratch);
        engine.fold_scale(&mut v);
        Ok(Rader2Dft {
            split,
            sm: SmallMod::new(p),
            dft1,
            dft2,
            engine,
            q,
            l0,
            idx_in,
            out_residues: {
                let (r1, r2) = (SmallMod::new(n1), SmallMod::new(n2));
                table
                    .iter()
                    .map(|&l| (r1.reduce(l as u64) as u32, r2.reduce(l as u64) as u32))
                    .collect()
            },
            idx_out: table,
            v,
        })
    }

    pub fn split(&self) -> &DeSplit {
        &self.split
    }

    /// `out[l] = sum_k root^{k l} x_k mod p` for all `l < n1 n2`.
    pub fn dft(&self, x: &[i64], out: &mut [u64]) {
        let (n1, n2) = (self.split.n1 as usize, self.split.n2 as usize);
        let n = n1 * n2;
        debug_assert_eq!(x.len(), n);
        // l = n2 l': row sums over k mod n1
        let mut folded1 = vec![0i64; n1];
        for chunk in x.chunks(n1) {
            for (f, &v) in folded1.iter_mut().zip(chunk) {
                *f += v;
            }
        }
        let mut out1 = vec![0u64; n1];
        self.dft1.dft(&folded1, &mut out1);
        for (l1, &v) in out1.iter().enumerate().skip(1) {
            out[n2 * l1] = v;
        }
        let mut folded2 = vec![0i64; n2];
        for chunk in x.chunks(n2) {
            for (f, &v) in folded2.iter_mut().zip(chunk) {
                *f += v;
            }
        }
        let mut out2 = vec![0u64; n2];
        self.dft2.dft(&folded2, &mut out2);
        for (l2, &v) in out2.iter().enumerate().skip(1) {
            out[n1 * l2] = v;
        }
        out[0] = out1[0];

        // l coprime to n: sparse terms on multiples of n2 and n1, then the
        // convolution over the units
        let mut g = vec![0i64; n1];
        for k in 1..n1 {
            g[k] = x[n2 * k];
        }
        let mut big_g = vec![0u64; n1];
        self.dft1.dft(&g, &mut big_g);
        let mut h = vec![0i64; n2];
        for k in 1..n2 {
            h[k] = x[n1 * k];
        }
        let mut big_h = vec![0u64; n2];
        self.dft2.dft(&h, &mut big_h);

        let d = self.split.d() as usize;
        let l0 = self.l0;
        let q = self.q;
        let blocks = self.idx_in.len() / d;
        let mut buf = vec![0u64; blocks * l0];
        for blk in 0..blocks {
            let src = &self.idx_in[blk * d..(blk + 1) * d];
            let dst = &mut buf[blk * l0..blk * l0 + d];
            for (slot, &k) in dst.iter_mut().zip(src) {
                let v = x[k as usize];
                *slot = (v as u64).wrapping_add(q & ((v >> 63) as u64));
            }
        }
        let mut scratch = Vec::new();
        self.engine.forward(&mut buf, &mut scratch);
        self.engine.pointwise(&mut buf, &self.v);
        self.engine.inverse(&mut buf, &mut scratch);
        self.engine.normalize(&mut buf);

        let sm = self.sm;
        let half = q / 2;
        // each half is below q / 2 in absolute value, so sums fit an i64
        let centered = |v: u64| v as i64 - (q & ((v > half) as u64).wrapping_neg()) as i64;
        for blk in 0..blocks {
            let row = &buf[blk * l0..(blk + 1) * l0];
            for t0 in 0..d {
                let mut c = centered(row[t0]);
                if t0 + d < l0 {
                    c += centered(row[t0 + d]);
                }
                let at = blk * d + t0;
                let (r1, r2) = self.out_residues[at];
                let s = x[0] + big_g[r1 as usize] as i64 + big_h[r2 as usize] as i64 + c;
                out[self.idx_out[at] as usize] = sm.reduce_i64(s);
            }
        }
    }
}
