//! Row DFTs of any length by Bluestein's chirp transform, with the
//! polynomial product lifted to the integers.

use crate::arith::{inv_mod, lift_centered, mul_mod, reduce_signed, ShoupConst};
use crate::ntt::{LinearConvolver, NttError, PreparedOperand};

/// Per-prime chirp tables and the transformed `V` polynomial.
pub struct BluesteinScratch {
    p: u64,
    n: usize,
    /// `xi^{k^2}` for `k < n`
    xi_sq: Vec<u64>,
    conv: LinearConvolver,
    v: PreparedOperand,
}

// xi^{k^2} for k < n via the running ratio xi^{2k+1}
fn chirp(xi: u64, p: u64, n: usize) -> Vec<u64> {
    let xi2 = ShoupConst::new(mul_mod(xi, xi, p), p);
    let mut out = Vec::with_capacity(n);
    let mut cur = 1 % p;
    let mut ratio = xi;
    for _ in 0..n {
        out.push(cur);
        cur = mul_mod(cur, ratio, p);
        ratio = xi2.mul(ratio, p);
    }
    out
}

/// Lifted `V` with coefficients `xi^{-k^2}` in `(-p/2, p/2)`.
pub fn lifted_v(xi: u64, p: u64, n: usize) -> Vec<i64> {
    let xi_inv = inv_mod(xi, p).expect("xi is a unit");
    chirp(xi_inv, p, n)
        .into_iter()
        .map(|x| lift_centered(x, p))
        .collect()
}

/// Lifted `U` for a row of residues `a_k`.
pub fn lifted_u(scratch: &BluesteinScratch, row: &[u64]) -> Vec<i64> {
    let p = scratch.p;
    row.iter()
        .zip(&scratch.xi_sq)
        .map(|(&a, &w)| lift_centered(mul_mod(a, w, p), p))
        .collect()
}

/// Builds the chirp tables for a prime with row length `n` and `xi` of
/// order `n`, and transforms `V` once.
pub fn prepare_v(p: u64, n: usize, xi: u64) -> Result<BluesteinScratch, NttError> {
    let half = (p / 2) as u128;
    let conv = LinearConvolver::new(n, n, n as u128 * half * half)?;
    let v = conv.prepare(&lifted_v(xi, p, n));
    Ok(BluesteinScratch {
        p,
        n,
        xi_sq: chirp(xi, p, n),
        conv,
        v,
    })
}

impl BluesteinScratch {
    /// Transforms issued so far, counting each prime separately.
    pub fn transforms_issued(&self) -> u64 {
        self.conv.transforms_issued()
    }

    pub fn lane_count(&self) -> usize {
        self.conv.lane_count()
    }

    pub fn transform_len(&self) -> usize {
        self.conv.transform_len()
    }
}

/// `d_l = 2 sum_k omega^{k l} a_k mod p` for a row of residues `a_k`.
pub fn bluestein_row(scratch: &BluesteinScratch, row: &[u64], out: &mut [u64]) {
    let (p, n) = (scratch.p, scratch.n);
    debug_assert_eq!(row.len(), n);
    let u = lifted_u(scratch, row);
    let mut w = vec![0u64; n];
    scratch.conv.multiply_with(&u, &scratch.v, |k, c| {
        let slot = if k >= n { k - n } else { k };
        let r = reduce_signed(c, p);
        let s = w[slot] + r;
        w[slot] = if s >= p { s - p } else { s };
    });
    for ((o, &wl), &chirp) in out.iter_mut().zip(&w).zip(&scratch.xi_sq) {
        let v = mul_mod(wl, chirp, p);
        let v = v + v;
        *o = if v >= p { v - p } else { v };
    }
}
