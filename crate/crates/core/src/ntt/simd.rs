//! AVX-512 IFMA butterflies for NTT primes below 2^50.
//!
//! The 52-bit multiply-add instructions give an eight-wide Shoup product:
//! with `w' = floor(w 2^52 / q)` and `x < 2^52`, the estimate
//! `k = floor(x w' / 2^52)` leaves `x w - k q` in `[0, 2q)`, and that value
//! is exact modulo 2^52. Inputs stay below `4q < 2^52`.

use crate::ntt::kernel::ShoupTable;

/// Moduli this many bits or fewer can use the vector kernels.
pub(crate) const SIMD_MODULUS_BITS: u32 = 50;

/// Whether this CPU runs the vector kernels. Checked once.
pub(crate) fn available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        use std::sync::OnceLock;
        static AVAILABLE: OnceLock<bool> = OnceLock::new();
        *AVAILABLE.get_or_init(|| {
            std::is_x86_feature_detected!("avx512f") && std::is_x86_feature_detected!("avx512ifma")
        })
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Twiddles split into values and 52-bit quotients, laid out like the
/// scalar table so the same index ranges apply.
#[derive(Debug)]
pub(crate) struct SimdTable {
    w: Vec<u64>,
    wq: Vec<u64>,
}

impl SimdTable {
    pub fn new(table: &ShoupTable, q: u64) -> Self {
        debug_assert!(q < 1 << SIMD_MODULUS_BITS);
        SimdTable {
            w: table.iter().map(|c| c.value).collect(),
            wq: table
                .iter()
                .map(|c| (((c.value as u128) << 52) / q as u128) as u64)
                .collect(),
        }
    }
}

/// Vector width in words.
pub(crate) const WIDTH: usize = 8;

#[cfg(target_arch = "x86_64")]
mod imp {
    use super::SimdTable;
    use std::arch::x86_64::*;

    struct Consts {
        zero: __m512i,
        two_q: __m512i,
        neg_q: __m512i,
        mask: __m512i,
    }

    #[inline(always)]
    unsafe fn consts(q: u64) -> Consts {
        Consts {
            zero: _mm512_setzero_si512(),
            two_q: _mm512_set1_epi64((2 * q) as i64),
            neg_q: _mm512_set1_epi64(((1u64 << 52) - q) as i64),
            mask: _mm512_set1_epi64(((1u64 << 52) - 1) as i64),
        }
    }

    #[inline(always)]
    unsafe fn load(p: *const u64) -> __m512i {
        _mm512_loadu_si512(p as *const __m512i)
    }

    #[inline(always)]
    unsafe fn store(p: *mut u64, v: __m512i) {
        _mm512_storeu_si512(p as *mut __m512i, v)
    }

    #[inline(always)]
    unsafe fn reduce(v: __m512i, c: &Consts) -> __m512i {
        _mm512_min_epu64(v, _mm512_sub_epi64(v, c.two_q))
    }

    #[inline(always)]
    unsafe fn mul_lazy(x: __m512i, w: __m512i, wq: __m512i, c: &Consts) -> __m512i {
        let k = _mm512_madd52hi_epu64(c.zero, x, wq);
        let lo = _mm512_madd52lo_epu64(c.zero, x, w);
        _mm512_and_si512(_mm512_madd52lo_epu64(lo, k, c.neg_q), c.mask)
    }

    /// Same contract as the scalar forward pass; `h / 2` must be a multiple
    /// of eight.
    #[target_feature(enable = "avx512f,avx512ifma")]
    pub unsafe fn forward_pass4(data: &mut [u64], h: usize, q: u64, t: &SimdTable) {
        let c = consts(q);
        let quarter = h / 2;
        let (w, wq) = (t.w.as_ptr(), t.wq.as_ptr());
        for chunk in data.chunks_exact_mut(2 * h) {
            let base = chunk.as_mut_ptr();
            for j in (0..quarter).step_by(super::WIDTH) {
                let p0 = base.add(j);
                let (p1, p2, p3) = (p0.add(quarter), p0.add(h), p0.add(h + quarter));
                let (a0, a1, a2, a3) = (load(p0), load(p1), load(p2), load(p3));
                let b0 = reduce(_mm512_add_epi64(a0, a2), &c);
                let d0 = _mm512_sub_epi64(_mm512_add_epi64(a0, c.two_q), a2);
                let b2 = mul_lazy(d0, load(w.add(h + j)), load(wq.add(h + j)), &c);
                let b1 = reduce(_mm512_add_epi64(a1, a3), &c);
                let d1 = _mm512_sub_epi64(_mm512_add_epi64(a1, c.two_q), a3);
                let b3 = mul_lazy(
                    d1,
                    load(w.add(h + quarter + j)),
                    load(wq.add(h + quarter + j)),
                    &c,
                );
                let (wb, wbq) = (load(w.add(quarter + j)), load(wq.add(quarter + j)));
                store(p0, reduce(_mm512_add_epi64(b0, b1), &c));
                let e0 = _mm512_sub_epi64(_mm512_add_epi64(b0, c.two_q), b1);
                store(p1, mul_lazy(e0, wb, wbq, &c));
                store(p2, reduce(_mm512_add_epi64(b2, b3), &c));
                let e1 = _mm512_sub_epi64(_mm512_add_epi64(b2, c.two_q), b3);
                store(p3, mul_lazy(e1, wb, wbq, &c));
            }
        }
    }

    /// Same contract as the scalar inverse pass; `h` must be a multiple of
    /// eight.
    #[target_feature(enable = "avx512f,avx512ifma")]
    pub unsafe fn inverse_pass4(data: &mut [u64], h: usize, q: u64, t: &SimdTable) {
        let c = consts(q);
        let (w, wq) = (t.w.as_ptr(), t.wq.as_ptr());
        for chunk in data.chunks_exact_mut(4 * h) {
            let base = chunk.as_mut_ptr();
            for j in (0..h).step_by(super::WIDTH) {
                let p0 = base.add(j);
                let (p1, p2, p3) = (p0.add(h), p0.add(2 * h), p0.add(3 * h));
                let (wa, waq) = (load(w.add(h + j)), load(wq.add(h + j)));
                let a = reduce(load(p0), &c);
                let t0 = mul_lazy(load(p1), wa, waq, &c);
                let b0 = _mm512_add_epi64(a, t0);
                let b1 = _mm512_sub_epi64(_mm512_add_epi64(a, c.two_q), t0);
                let a = reduce(load(p2), &c);
                let t1 = mul_lazy(load(p3), wa, waq, &c);
                let b2 = _mm512_add_epi64(a, t1);
                let b3 = _mm512_sub_epi64(_mm512_add_epi64(a, c.two_q), t1);
                let a = reduce(b0, &c);
                let t2 = mul_lazy(b2, load(w.add(2 * h + j)), load(wq.add(2 * h + j)), &c);
                store(p0, _mm512_add_epi64(a, t2));
                store(p2, _mm512_sub_epi64(_mm512_add_epi64(a, c.two_q), t2));
                let a = reduce(b1, &c);
                let t3 = mul_lazy(b3, load(w.add(3 * h + j)), load(wq.add(3 * h + j)), &c);
                store(p1, _mm512_add_epi64(a, t3));
                store(p3, _mm512_sub_epi64(_mm512_add_epi64(a, c.two_q), t3));
            }
        }
    }
}

/// Vector DIF pass; callers check [`available`] and the size conditions.
pub(crate) fn forward_pass4(data: &mut [u64], h: usize, q: u64, table: &SimdTable) {
    debug_assert!(available() && (h / 2).is_multiple_of(WIDTH) && table.w.len() >= 2 * h);
    #[cfg(target_arch = "x86_64")]
    // SAFETY: the CPU features were detected at runtime; every access stays
    // inside chunks of length 2h and twiddle ranges below 2h.
    unsafe {
        imp::forward_pass4(data, h, q, table)
    }
    #[cfg(not(target_arch = "x86_64"))]
    unreachable!("vector kernels are x86-64 only: {data:?} {h} {q} {table:?}")
}

/// Vector DIT pass; callers check [`available`] and the size conditions.
pub(crate) fn inverse_pass4(data: &mut [u64], h: usize, q: u64, table: &SimdTable) {
    debug_assert!(available() && h.is_multiple_of(WIDTH) && table.w.len() >= 4 * h);
    #[cfg(target_arch = "x86_64")]
    // SAFETY: as above, with chunks of length 4h and twiddles below 4h.
    unsafe {
        imp::inverse_pass4(data, h, q, table)
    }
    #[cfg(not(target_arch = "x86_64"))]
    unreachable!("vector kernels are x86-64 only: {data:?} {h} {q} {table:?}")
}
