//! Transform kernels over `Z/qZ` for `q < 2^62`.
//!
//! Both kernels keep values lazily reduced in `[0, 2q)` and take a `block`
//! size: element `i` of a length-`len` transform is the contiguous slice
//! `data[i * block..(i + 1) * block]`, and every lane of the block is
//! transformed independently. Buffers holding several consecutive
//! transforms are processed in one call.

use super::simd::{self, SimdTable, SIMD_MODULUS_BITS};
use crate::arith::{inv_mod, mul_mod, pow_mod, ShoupConst};

pub(crate) type ShoupTable = [ShoupConst];

/// Radix-2 twiddles. Entry `h + j` holds `w_{2h}^j` where `w_{2h}` is a
/// primitive `2h`-th root of unity, so one table serves every power-of-two
/// length up to `max_len`.
#[derive(Debug)]
pub(crate) struct Pow2Kernel {
    q: u64,
    max_len: usize,
    fwd: Vec<ShoupConst>,
    inv: Vec<ShoupConst>,
    // forward and inverse tables for the vector passes, when usable
    simd: Option<(SimdTable, SimdTable)>,
}

fn fill_pow2_table(max_len: usize, q: u64, root: u64) -> Vec<ShoupConst> {
    let mut table = vec![ShoupConst::new(1 % q, q); max_len.max(2)];
    let mut h = 1;
    while h < max_len {
        let w = ShoupConst::new(pow_mod(root, (max_len / (2 * h)) as u64, q), q);
        let mut cur = 1 % q;
        for slot in &mut table[h..2 * h] {
            *slot = ShoupConst::new(cur, q);
            cur = w.mul(cur, q);
        }
        h *= 2;
    }
    table
}

impl Pow2Kernel {
    /// `root` must have exact order `max_len` modulo `q`.
    pub fn new(max_len: usize, q: u64, root: u64) -> Self {
        Self::with_simd(max_len, q, root, simd::available())
    }

    /// As [`Pow2Kernel::new`]; `use_simd` is honoured only when the CPU and
    /// the modulus allow it.
    pub fn with_simd(max_len: usize, q: u64, root: u64, use_simd: bool) -> Self {
        assert!(max_len.is_power_of_two());
        let root_inv = inv_mod(root, q).expect("root of unity is a unit");
        let fwd = fill_pow2_table(max_len, q, root);
        let inv = fill_pow2_table(max_len, q, root_inv);
        let simd = (use_simd && simd::available() && q < 1 << SIMD_MODULUS_BITS)
            .then(|| (SimdTable::new(&fwd, q), SimdTable::new(&inv, q)));
        Pow2Kernel {
            q,
            max_len,
            fwd,
            inv,
            simd,
        }
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Decimation in frequency: natural order in, bit-reversed order out.
    pub fn forward(&self, data: &mut [u64], len: usize, block: usize) {
        debug_assert!(len <= self.max_len && len.is_power_of_two());
        debug_assert_eq!(data.len() % (len * block), 0);
        if block == 1 {
            return self.forward_contiguous(data, len);
        }
        let q = self.q;
        let two_q = 2 * q;
        let mut h = len / 2;
        while h >= 1 {
            let tw = &self.fwd[h..2 * h];
            for chunk in data.chunks_exact_mut(2 * h * block) {
                let (xs, ys) = chunk.split_at_mut(h * block);
                if block == 1 {
                    for ((x, y), w) in xs.iter_mut().zip(ys.iter_mut()).zip(tw) {
                        let (a, b) = (*x, *y);
                        let s = a + b;
                        *x = reduce_2q(s, two_q);
                        *y = w.mul_lazy(a + two_q - b, q);
                    }
                } else {
                    for ((xb, yb), w) in xs
                        .chunks_exact_mut(block)
                        .zip(ys.chunks_exact_mut(block))
                        .zip(tw)
                    {
                        for (x, y) in xb.iter_mut().zip(yb.iter_mut()) {
                            let (a, b) = (*x, *y);
                            let s = a + b;
                            *x = reduce_2q(s, two_q);
                            *y = w.mul_lazy(a + two_q - b, q);
                        }
                    }
                }
            }
            h /= 2;
        }
    }

    /// Decimation in time with the inverse root: bit-reversed order in,
    /// natural order out. No `1/len` scaling.
    pub fn inverse(&self, data: &mut [u64], len: usize, block: usize) {
        debug_assert!(len <= self.max_len && len.is_power_of_two());
        debug_assert_eq!(data.len() % (len * block), 0);
        if block == 1 {
            self.inverse_contiguous(data, len);
            let two_q = 2 * self.q;
            for x in data.iter_mut() {
                *x = reduce_2q(*x, two_q);
            }
            return;
        }
        let q = self.q;
        let two_q = 2 * q;
        let mut h = 1;
        while h < len {
            let tw = &self.inv[h..2 * h];
            for chunk in data.chunks_exact_mut(2 * h * block) {
                let (xs, ys) = chunk.split_at_mut(h * block);
                if block == 1 {
                    for ((x, y), w) in xs.iter_mut().zip(ys.iter_mut()).zip(tw) {
                        let a = *x;
                        let t = w.mul_lazy(*y, q);
                        let s = a + t;
                        *x = reduce_2q(s, two_q);
                        let d = a + two_q - t;
                        *y = reduce_2q(d, two_q);
                    }
                } else {
                    for ((xb, yb), w) in xs
                        .chunks_exact_mut(block)
                        .zip(ys.chunks_exact_mut(block))
                        .zip(tw)
                    {
                        for (x, y) in xb.iter_mut().zip(yb.iter_mut()) {
                            let a = *x;
                            let t = w.mul_lazy(*y, q);
                            let s = a + t;
                            *x = reduce_2q(s, two_q);
                            let d = a + two_q - t;
                            *y = reduce_2q(d, two_q);
                        }
                    }
                }
            }
            h *= 2;
        }
    }

    // Depth first: the top two layers run over the whole buffer, then each
    // quarter is finished on its own while it is still in cache.
    fn forward_contiguous(&self, data: &mut [u64], len: usize) {
        if len <= LEAF_LEN {
            for chunk in data.chunks_exact_mut(len) {
                self.forward_leaf(chunk);
            }
            return;
        }
        for chunk in data.chunks_exact_mut(len) {
            self.forward_pass4(chunk, len / 2);
            for quarter in chunk.chunks_exact_mut(len / 4) {
                self.forward_contiguous(quarter, len / 4);
            }
        }
    }

    fn forward_leaf(&self, data: &mut [u64]) {
        let len = data.len();
        let mut h = len / 2;
        while h >= 2 {
            self.forward_pass4(data, h);
            h /= 4;
        }
        if h == 1 {
            let two_q = 2 * self.q;
            for pair in data.chunks_exact_mut(2) {
                let (a, b) = (pair[0], pair[1]);
                pair[0] = reduce_2q(a + b, two_q);
                pair[1] = reduce_2q(a + two_q - b, two_q);
            }
        }
    }

    // DIF layers `h` and `h / 2` on every chunk of length `2h`; values stay
    // in [0, 2q).
    fn forward_pass4(&self, data: &mut [u64], h: usize) {
        if let Some((table, _)) = &self.simd {
            if (h / 2).is_multiple_of(simd::WIDTH) {
                return simd::forward_pass4(data, h, self.q, table);
            }
        }
        let q = self.q;
        let two_q = 2 * q;
        let quarter = h / 2;
        let (tw_a0, tw_a1) = self.fwd[h..2 * h].split_at(quarter);
        let tw_b = &self.fwd[quarter..h];
        for chunk in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            let (x0, x1) = lo.split_at_mut(quarter);
            let (x2, x3) = hi.split_at_mut(quarter);
            let lanes = x0
                .iter_mut()
                .zip(x1.iter_mut())
                .zip(x2.iter_mut().zip(x3.iter_mut()));
            let twiddles = tw_a0.iter().zip(tw_a1).zip(tw_b);
            for (((x0, x1), (x2, x3)), ((wa0, wa1), wb)) in lanes.zip(twiddles) {
                let (a0, a1, a2, a3) = (*x0, *x1, *x2, *x3);
                let b0 = reduce_2q(a0 + a2, two_q);
                let b2 = wa0.mul_lazy(a0 + two_q - a2, q);
                let b1 = reduce_2q(a1 + a3, two_q);
                let b3 = wa1.mul_lazy(a1 + two_q - a3, q);
                *x0 = reduce_2q(b0 + b1, two_q);
                *x1 = wb.mul_lazy(b0 + two_q - b1, q);
                *x2 = reduce_2q(b2 + b3, two_q);
                *x3 = wb.mul_lazy(b2 + two_q - b3, q);
            }
        }
    }

    // Inside the inverse, values live in [0, 4q) (one conditional subtraction
    // per butterfly); the caller brings them back to [0, 2q) at the end.
    fn inverse_contiguous(&self, data: &mut [u64], len: usize) {
        if len <= LEAF_LEN {
            for chunk in data.chunks_exact_mut(len) {
                self.inverse_leaf(chunk);
            }
            return;
        }
        for chunk in data.chunks_exact_mut(len) {
            for quarter in chunk.chunks_exact_mut(len / 4) {
                self.inverse_contiguous(quarter, len / 4);
            }
            self.inverse_pass4(chunk, len / 4);
        }
    }

    fn inverse_leaf(&self, data: &mut [u64]) {
        let len = data.len();
        let mut h = 1;
        while 4 * h <= len {
            self.inverse_pass4(data, h);
            h *= 4;
        }
        if h < len {
            let (q, two_q) = (self.q, 2 * self.q);
            let tw = &self.inv[h..2 * h];
            for chunk in data.chunks_exact_mut(2 * h) {
                let (xs, ys) = chunk.split_at_mut(h);
                for ((x, y), w) in xs.iter_mut().zip(ys.iter_mut()).zip(tw) {
                    let a = reduce_2q(*x, two_q);
                    let t = w.mul_lazy(*y, q);
                    *x = a + t;
                    *y = a + two_q - t;
                }
            }
        }
    }

    // DIT layers `h` and `2h` on every chunk of length `4h`.
    fn inverse_pass4(&self, data: &mut [u64], h: usize) {
        if let Some((_, table)) = &self.simd {
            if h.is_multiple_of(simd::WIDTH) {
                return simd::inverse_pass4(data, h, self.q, table);
            }
        }
        let q = self.q;
        let two_q = 2 * q;
        let tw_a = &self.inv[h..2 * h];
        let (tw_b0, tw_b1) = self.inv[2 * h..4 * h].split_at(h);
        for chunk in data.chunks_exact_mut(4 * h) {
            let (lo, hi) = chunk.split_at_mut(2 * h);
            let (x0, x1) = lo.split_at_mut(h);
            let (x2, x3) = hi.split_at_mut(h);
            let lanes = x0
                .iter_mut()
                .zip(x1.iter_mut())
                .zip(x2.iter_mut().zip(x3.iter_mut()));
            let twiddles = tw_a.iter().zip(tw_b0).zip(tw_b1);
            for (((x0, x1), (x2, x3)), ((wa, wb0), wb1)) in lanes.zip(twiddles) {
                let a = reduce_2q(*x0, two_q);
                let t = wa.mul_lazy(*x1, q);
                let (b0, b1) = (a + t, a + two_q - t);
                let a = reduce_2q(*x2, two_q);
                let t = wa.mul_lazy(*x3, q);
                let (b2, b3) = (a + t, a + two_q - t);
                let a = reduce_2q(b0, two_q);
                let t = wb0.mul_lazy(b2, q);
                *x0 = a + t;
                *x2 = a + two_q - t;
                let a = reduce_2q(b1, two_q);
                let t = wb1.mul_lazy(b3, q);
                *x1 = a + t;
                *x3 = a + two_q - t;
            }
        }
    }
}

/// Transforms up to this length run breadth first; a buffer this size and
/// its twiddles fit in L1/L2.
const LEAF_LEN: usize = 1 << 12;

// Branch free: for `s < 2q` the subtraction wraps above `s`. Data-dependent
// branches here mispredict about half the time.
#[inline(always)]
fn reduce_2q(s: u64, two_q: u64) -> u64 {
    s.min(s.wrapping_sub(two_q))
}

/// Permutes the blocks of every length-`len` transform in `data` into
/// bit-reversed index order (an involution).
pub(crate) fn bit_reverse_blocks(data: &mut [u64], len: usize, block: usize) {
    if len <= 2 {
        return;
    }
    let bits = len.trailing_zeros();
    for chunk in data.chunks_exact_mut(len * block) {
        for i in 0..len {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if i < j {
                for b in 0..block {
                    chunk.swap(i * block + b, j * block + b);
                }
            }
        }
    }
}

pub(crate) const SMALL_RADICES: [usize; 4] = [2, 3, 5, 7];

/// Splits `len` into radices from [`SMALL_RADICES`]; `None` if `len` is not
/// 7-smooth.
pub(crate) fn small_radix_factors(mut len: usize) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for r in SMALL_RADICES {
        while len.is_multiple_of(r) {
            out.push(r);
            len /= r;
        }
    }
    (len == 1).then_some(out)
}

#[derive(Debug, Clone)]
struct Stage {
    radix: usize,
    // length of the sub-transforms already combined before this stage
    span: usize,
    twiddles: Vec<ShoupConst>,
    roots: Vec<ShoupConst>,
}

/// Stockham autosort transform of 7-smooth length, natural order on both
/// sides, built from small DFTs of length 2, 3, 5 and 7 done as plain
/// matrix products (radix 2 as a butterfly).
#[derive(Debug, Clone)]
pub(crate) struct MixedRadixKernel {
    q: u64,
    len: usize,
    fwd: Vec<Stage>,
    inv: Vec<Stage>,
}

fn build_stages(q: u64, len: usize, radices: &[usize], root: u64) -> Vec<Stage> {
    let mut stages = Vec::with_capacity(radices.len());
    let mut span = 1;
    for &r in radices {
        let w_lr = pow_mod(root, (len / (span * r)) as u64, q);
        let mut twiddles = Vec::with_capacity(span * r);
        let mut w_q = 1 % q;
        for _ in 0..span {
            let mut cur = 1 % q;
            for _ in 0..r {
                twiddles.push(ShoupConst::new(cur, q));
                cur = mul_mod(cur, w_q, q);
            }
            w_q = mul_mod(w_q, w_lr, q);
        }
        let w_r = pow_mod(root, (len / r) as u64, q);
        // row u of the radix-r DFT matrix
        let roots = (0..r * r)
            .map(|k| ShoupConst::new(pow_mod(w_r, ((k / r) * (k % r) % r) as u64, q), q))
            .collect();
        stages.push(Stage {
            radix: r,
            span,
            twiddles,
            roots,
        });
        span *= r;
    }
    stages
}

impl MixedRadixKernel {
    /// `root` must have exact order `len`; `len` must be 7-smooth.
    pub fn new(len: usize, q: u64, root: u64) -> Option<Self> {
        let radices = small_radix_factors(len)?;
        let root_inv = inv_mod(root, q).ok()?;
        Some(MixedRadixKernel {
            q,
            len,
            fwd: build_stages(q, len, &radices, root),
            inv: build_stages(q, len, &radices, root_inv),
        })
    }

    /// Unscaled transform of every length-`len` transform in `data`.
    /// Inputs must lie in `[0, 2q)`; outputs do as well.
    pub fn apply(&self, data: &mut [u64], scratch: &mut Vec<u64>, block: usize, inverse: bool) {
        let stages = if inverse { &self.inv } else { &self.fwd };
        if stages.is_empty() {
            return;
        }
        let size = self.len * block;
        debug_assert_eq!(data.len() % size, 0);
        scratch.resize(size, 0);
        for chunk in data.chunks_exact_mut(size) {
            let mut in_chunk = true;
            let mut m = self.len;
            for stage in stages {
                if in_chunk {
                    self.run_stage(stage, chunk, scratch, m, block);
                } else {
                    self.run_stage(stage, scratch, chunk, m, block);
                }
                in_chunk = !in_chunk;
                m /= stage.radix;
            }
            if !in_chunk {
                chunk.copy_from_slice(scratch);
            }
        }
    }

    fn run_stage(&self, stage: &Stage, src: &[u64], dst: &mut [u64], m: usize, block: usize) {
        match stage.radix {
            2 => self.stage_radix::<2>(stage, src, dst, m, block),
            3 => self.stage_radix::<3>(stage, src, dst, m, block),
            5 => self.stage_radix::<5>(stage, src, dst, m, block),
            7 => self.stage_radix::<7>(stage, src, dst, m, block),
            r => unreachable!("radix {r}"),
        }
    }

    fn stage_radix<const R: usize>(
        &self,
        stage: &Stage,
        src: &[u64],
        dst: &mut [u64],
        m: usize,
        block: usize,
    ) {
        let l = stage.span;
        let m_next = m / R;
        let row = |u: usize| -> [ShoupConst; R] { std::array::from_fn(|j| stage.roots[u * R + j]) };
        let matrix: [[ShoupConst; R]; R] = std::array::from_fn(row);
        for qi in 0..l {
            let tw: [ShoupConst; R] = std::array::from_fn(|j| stage.twiddles[qi * R + j]);
            for k in 0..m_next {
                let ins: [usize; R] = std::array::from_fn(|j| (k + m_next * j + m * qi) * block);
                let outs: [usize; R] =
                    std::array::from_fn(|u| (k + m_next * qi + m_next * l * u) * block);
                // the first sub-transform has unit twiddles
                if qi == 0 {
                    self.small_dft::<R, false>(&matrix, &tw, src, dst, ins, outs, block);
                } else {
                    self.small_dft::<R, true>(&matrix, &tw, src, dst, ins, outs, block);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    #[inline(always)]
    fn small_dft<const R: usize, const TWIDDLE: bool>(
        &self,
        matrix: &[[ShoupConst; R]; R],
        tw: &[ShoupConst; R],
        src: &[u64],
        dst: &mut [u64],
        ins: [usize; R],
        outs: [usize; R],
        block: usize,
    ) {
        let q = self.q;
        let two_q = 2 * q;
        for b in 0..block {
            let mut a = [0u64; R];
            for j in 0..R {
                let v = src[ins[j] + b];
                a[j] = if TWIDDLE && j > 0 {
                    tw[j].mul_lazy(v, q)
                } else {
                    v
                };
            }
            if R == 2 {
                dst[outs[0] + b] = reduce_2q(a[0] + a[1], two_q);
                dst[outs[1] + b] = reduce_2q(a[0] + two_q - a[1], two_q);
                continue;
            }
            let mut sum = a[0];
            for &x in &a[1..] {
                sum = reduce_2q(sum + x, two_q);
            }
            dst[outs[0] + b] = sum;
            for u in 1..R {
                let mut acc = a[0];
                for j in 1..R {
                    acc = reduce_2q(acc + matrix[u][j].mul_lazy(a[j], q), two_q);
                }
                dst[outs[u] + b] = acc;
            }
        }
    }
}
