//! Exact integer products via one or two 62-bit NTT primes, or a single
//! smaller prime when the result is small enough for the vector kernels.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use super::{find_ntt_prime, simd, CyclicEngine, NttError, NttPlan};
use crate::arith::{inv_mod, reduce_signed, sub_mod, ShoupConst};

/// Two-adic valuation guaranteed for the global primes. Zero-padded
/// products of length up to 2^32 are supported, far beyond any scan bound.
const UMBRELLA_TWO_ADIC: u64 = 1 << 32;

fn umbrella_plans() -> &'static [Arc<NttPlan>; 2] {
    static PLANS: OnceLock<[Arc<NttPlan>; 2]> = OnceLock::new();
    PLANS.get_or_init(|| {
        let first = find_ntt_prime(UMBRELLA_TWO_ADIC, 1, 62).expect("first global prime");
        // next qualifying prime below the first one
        let q1 = first.modulus();
        let mut q = q1 - UMBRELLA_TWO_ADIC;
        while !crate::arith::is_prime(q) {
            q -= UMBRELLA_TWO_ADIC;
        }
        let second = NttPlan::new(q, 32, 1).expect("second global prime");
        [Arc::new(first), Arc::new(second)]
    })
}

/// Largest prime below 2^50 with the same two-adic valuation, for products
/// small enough to use the vector kernels.
fn compact_plan() -> &'static Arc<NttPlan> {
    static PLAN: OnceLock<Arc<NttPlan>> = OnceLock::new();
    PLAN.get_or_init(|| {
        Arc::new(
            find_ntt_prime(UMBRELLA_TWO_ADIC, 1, simd::SIMD_MODULUS_BITS).expect("compact prime"),
        )
    })
}

/// The two fixed primes used for integer products, largest first.
pub fn umbrella_primes() -> (u64, u64) {
    let [a, b] = umbrella_plans();
    (a.modulus(), b.modulus())
}

/// Integer polynomial with a declared coefficient bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedCoeffs {
    coeffs: Vec<i128>,
    bound: u128,
}

impl SignedCoeffs {
    pub fn new(coeffs: Vec<i128>, bound: u128) -> Result<Self, NttError> {
        if let Some(c) = coeffs.iter().find(|c| c.unsigned_abs() > bound) {
            return Err(NttError::BoundViolation(format!("|{c}| exceeds {bound}")));
        }
        Ok(SignedCoeffs { coeffs, bound })
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.coeffs
    }

    pub fn bound(&self) -> u128 {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Reconstructs the unique `x` in `(-q1 q2 / 2, q1 q2 / 2]` with the given
/// residues.
pub fn crt_pair(r1: u64, q1: u64, r2: u64, q2: u64) -> i128 {
    let q1_inv = ShoupConst::new(inv_mod(q1 % q2, q2).expect("distinct primes"), q2);
    crt_with(r1 % q1, q1, r2 % q2, q2, q1_inv)
}

#[inline]
fn crt_with(r1: u64, q1: u64, r2: u64, q2: u64, q1_inv: ShoupConst) -> i128 {
    // r1 < q1 and r2 < q2 here
    let k = q1_inv.mul(sub_mod(r2, r1 % q2, q2), q2);
    let x = r1 as u128 + q1 as u128 * k as u128;
    let product = q1 as u128 * q2 as u128;
    if x > product / 2 {
        x as i128 - product as i128
    } else {
        x as i128
    }
}

#[inline]
fn to_residue(x: i128, q: u64) -> u64 {
    if x >= 0 && (x as u128) < q as u128 {
        x as u64
    } else if x < 0 && x > -(q as i128) {
        (x + q as i128) as u64
    } else {
        reduce_signed(x, q)
    }
}

struct Lane {
    plan: Arc<NttPlan>,
    engine: CyclicEngine,
}

/// Linear convolution of integer sequences of fixed lengths, with one
/// operand transformed once and reused.
pub(crate) struct LinearConvolver {
    len_a: usize,
    len_b: usize,
    lanes: Vec<Lane>,
    q1_inv: ShoupConst,
    transforms: AtomicU64,
}

/// Transformed operand, one buffer per prime.
pub(crate) struct PreparedOperand {
    lanes: Vec<Vec<u64>>,
}

impl LinearConvolver {
    /// Uses one umbrella prime when `2 * out_bound < q1` and two otherwise.
    pub fn new(len_a: usize, len_b: usize, out_bound: u128) -> Result<Self, NttError> {
        let plans = umbrella_plans();
        let q1 = plans[0].modulus();
        if out_bound.saturating_mul(2) < q1 as u128 {
            Self::with_plans(len_a, len_b, &plans[..1])
        } else if out_bound < (q1 as u128 * plans[1].modulus() as u128) / 2 {
            Self::with_plans(len_a, len_b, &plans[..])
        } else {
            Err(NttError::BoundOverflow { bound: out_bound })
        }
    }

    /// Like [`LinearConvolver::new`], but prefers a single prime below 2^50
    /// (vector kernels) when the bound allows.
    pub fn compact(len_a: usize, len_b: usize, out_bound: u128) -> Result<Self, NttError> {
        if simd::available() {
            let plan = compact_plan();
            if out_bound.saturating_mul(2) < plan.modulus() as u128 {
                return Self::with_plans(len_a, len_b, std::slice::from_ref(plan));
            }
        }
        Self::new(len_a, len_b, out_bound)
    }

    fn with_plans(len_a: usize, len_b: usize, plans: &[Arc<NttPlan>]) -> Result<Self, NttError> {
        if len_a == 0 || len_b == 0 {
            return Err(NttError::ShapeMismatch("empty operand".into()));
        }
        let len = (len_a + len_b - 1).next_power_of_two();
        let lanes = plans
            .iter()
            .map(|plan| {
                Ok(Lane {
                    plan: Arc::clone(plan),
                    engine: CyclicEngine::new(plan, &[len])?,
                })
            })
            .collect::<Result<Vec<_>, NttError>>()?;
        let q1_inv = match plans {
            [a, b] => ShoupConst::new(
                inv_mod(a.modulus() % b.modulus(), b.modulus()).expect("distinct primes"),
                b.modulus(),
            ),
            _ => ShoupConst {
                value: 0,
                quotient: 0,
            },
        };
        Ok(LinearConvolver {
            len_a,
            len_b,
            lanes,
            q1_inv,
            transforms: AtomicU64::new(0),
        })
    }

    pub fn lane_count(&self) -> usize {
        self.lanes.len()
    }

    pub fn transform_len(&self) -> usize {
        self.lanes[0].engine.total()
    }

    /// Number of length-[`transform_len`] transforms issued so far, one per
    /// prime per forward or inverse pass.
    pub fn transforms_issued(&self) -> u64 {
        self.transforms.load(Ordering::Relaxed)
    }

    fn load_i64(&self, lane: &Lane, values: &[i64]) -> Vec<u64> {
        let q = lane.plan.modulus();
        let mut buf = vec![0u64; self.transform_len()];
        for (slot, &v) in buf.iter_mut().zip(values) {
            *slot = if v.unsigned_abs() < q {
                // branch free: signs are random, magnitudes are not
                (v as u64).wrapping_add(q & ((v >> 63) as u64))
            } else {
                reduce_signed(v as i128, q)
            };
        }
        buf
    }

    fn load(&self, lane: &Lane, values: impl Iterator<Item = i128>) -> Vec<u64> {
        let q = lane.plan.modulus();
        let mut buf = vec![0u64; self.transform_len()];
        for (slot, v) in buf.iter_mut().zip(values) {
            *slot = to_residue(v, q);
        }
        buf
    }

    pub fn prepare(&self, b: &[i64]) -> PreparedOperand {
        assert_eq!(b.len(), self.len_b);
        self.transforms
            .fetch_add(self.lanes.len() as u64, Ordering::Relaxed);
        let mut scratch = Vec::new();
        let lanes = self
            .lanes
            .iter()
            .map(|lane| {
                let mut buf = self.load_i64(lane, b);
                lane.engine.forward(&mut buf, &mut scratch);
                lane.engine.fold_scale(&mut buf);
                buf
            })
            .collect();
        PreparedOperand { lanes }
    }

    /// Calls `emit(k, c_k)` for every coefficient of `a * b`, in order.
    pub fn multiply_with(&self, a: &[i64], b: &PreparedOperand, mut emit: impl FnMut(usize, i128)) {
        assert_eq!(a.len(), self.len_a);
        self.transforms
            .fetch_add(2 * self.lanes.len() as u64, Ordering::Relaxed);
        let mut scratch = Vec::new();
        let outputs: Vec<Vec<u64>> = self
            .lanes
            .iter()
            .zip(&b.lanes)
            .map(|(lane, prepared)| {
                let mut buf = self.load_i64(lane, a);
                lane.engine.forward(&mut buf, &mut scratch);
                lane.engine.pointwise(&mut buf, prepared);
                lane.engine.inverse(&mut buf, &mut scratch);
                lane.engine.normalize(&mut buf);
                buf
            })
            .collect();
        let out_len = self.len_a + self.len_b - 1;
        let q1 = self.lanes[0].plan.modulus();
        match outputs.as_slice() {
            [r] => {
                let half = q1 / 2;
                for (k, &x) in r[..out_len].iter().enumerate() {
                    let v = x as i64 - (q1 & ((x > half) as u64).wrapping_neg()) as i64;
                    emit(k, v as i128);
                }
            }
            [r1, r2] => {
                let q2 = self.lanes[1].plan.modulus();
                for k in 0..out_len {
                    emit(k, crt_with(r1[k], q1, r2[k], q2, self.q1_inv));
                }
            }
            _ => unreachable!(),
        }
    }

    fn prepare_wide(&self, b: &[i128]) -> PreparedOperand {
        let mut scratch = Vec::new();
        let lanes = self
            .lanes
            .iter()
            .map(|lane| {
                let mut buf = self.load(lane, b.iter().copied());
                lane.engine.forward(&mut buf, &mut scratch);
                lane.engine.fold_scale(&mut buf);
                buf
            })
            .collect();
        PreparedOperand { lanes }
    }
}

/// Exact product of two integer polynomials whose coefficients are known to
/// stay within `out_bound` in absolute value.
pub fn poly_mul_integer(
    a: &SignedCoeffs,
    b: &SignedCoeffs,
    out_bound: u128,
) -> Result<SignedCoeffs, NttError> {
    if a.is_empty() || b.is_empty() {
        return Err(NttError::ShapeMismatch("empty operand".into()));
    }
    let needed = (a.len().min(b.len()) as u128)
        .checked_mul(a.bound())
        .and_then(|x| x.checked_mul(b.bound()));
    match needed {
        Some(n) if n <= out_bound => {}
        _ => {
            return Err(NttError::BoundViolation(format!(
                "out_bound {out_bound} is below min(len) * bound(A) * bound(B)"
            )))
        }
    }
    let conv = LinearConvolver::new(a.len(), b.len(), out_bound)?;
    let prepared = conv.prepare_wide(b.coeffs());
    let mut scratch = Vec::new();
    let outputs: Vec<Vec<u64>> = conv
        .lanes
        .iter()
        .zip(&prepared.lanes)
        .map(|(lane, op)| {
            let mut buf = conv.load(lane, a.coeffs().iter().copied());
            lane.engine.forward(&mut buf, &mut scratch);
            lane.engine.pointwise(&mut buf, op);
            lane.engine.inverse(&mut buf, &mut scratch);
            lane.engine.normalize(&mut buf);
            buf
        })
        .collect();
    let out_len = a.len() + b.len() - 1;
    let q1 = conv.lanes[0].plan.modulus();
    let coeffs = match outputs.as_slice() {
        [r] => r[..out_len]
            .iter()
            .map(|&x| {
                if x > q1 / 2 {
                    x as i128 - q1 as i128
                } else {
                    x as i128
                }
            })
            .collect(),
        [r1, r2] => {
            let q2 = conv.lanes[1].plan.modulus();
            (0..out_len)
                .map(|k| crt_with(r1[k], q1, r2[k], q2, conv.q1_inv))
                .collect()
        }
        _ => unreachable!(),
    };
    SignedCoeffs::new(coeffs, out_bound)
}

#[cfg(test)]
impl LinearConvolver {
    pub fn multiply(&self, a: &[i64], b: &PreparedOperand) -> Vec<i128> {
        let mut out = Vec::with_capacity(self.len_a + self.len_b - 1);
        self.multiply_with(a, b, |_, c| out.push(c));
        out
    }

    /// Product reduced modulo an odd `p`.
    pub fn multiply_mod(&self, a: &[i64], b: &PreparedOperand, p: u64) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len_a + self.len_b - 1);
        self.multiply_with(a, b, |_, c| out.push(reduce_signed(c, p)));
        out
    }
}
