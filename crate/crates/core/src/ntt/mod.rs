//! Number-theoretic transforms over word-sized primes: multi-dimensional
//! cyclic convolution and exact integer polynomial multiplication.

mod integer;
mod kernel;
mod simd;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use thiserror::Error;

use crate::arith::{
    factorize, inv_mod, is_prime, mul_mod, pow_mod, primitive_root_with, Montgomery, ShoupConst,
};
use kernel::{bit_reverse_blocks, small_radix_factors, Pow2Kernel};

pub use integer::{crt_pair, poly_mul_integer, umbrella_primes, SignedCoeffs};
pub(crate) use integer::{LinearConvolver, PreparedOperand};
pub(crate) use kernel::MixedRadixKernel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NttError {
    #[error("no NTT prime below 2^{bits} for modulus structure 2^{two_adic} * {cyclic_factor}")]
    NoPrimeFound {
        two_adic: u32,
        cyclic_factor: u64,
        bits: u32,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("output bound {bound} needs more than two NTT primes")]
    BoundOverflow { bound: u128 },
    #[error("declared bound is too small: {0}")]
    BoundViolation(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
}

/// How a convolution dimension treats indices that run off the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DimKind {
    /// Acyclic; the caller leaves enough zero padding that nothing wraps.
    ZeroPadded,
    Cyclic,
}

/// Dimensions of a (row-major) multi-dimensional transform.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConvShape {
    dims: Vec<(usize, DimKind)>,
}

impl ConvShape {
    pub fn new(dims: Vec<(usize, DimKind)>) -> Self {
        ConvShape { dims }
    }

    pub fn one_dim(len: usize, kind: DimKind) -> Self {
        ConvShape::new(vec![(len, kind)])
    }

    pub fn dims(&self) -> &[(usize, DimKind)] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().map(|d| d.0).product()
    }

    fn lengths(&self) -> Vec<usize> {
        self.dims.iter().map(|d| d.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// A prime `q < 2^62` together with a root of unity of order
/// `2^two_adic * cyclic_factor` (`cyclic_factor` odd).
#[derive(Debug)]
pub struct NttPlan {
    q: u64,
    two_adic: u32,
    cyclic_factor: u64,
    root: u64,
    mont: Montgomery,
    // grow-only cache; contents are a pure function of (q, root)
    pow2: RwLock<Option<Arc<Pow2Kernel>>>,
}

impl NttPlan {
    /// Builds a plan for a prime `q` with `2^two_adic * cyclic_factor | q - 1`.
    /// Powers of two inside `cyclic_factor` are moved into `two_adic`.
    pub fn new(q: u64, two_adic: u32, cyclic_factor: u64) -> Result<Self, NttError> {
        if cyclic_factor == 0 || two_adic >= 62 {
            return Err(NttError::InvalidPlan("zero cyclic factor".into()));
        }
        if !(3..1 << 62).contains(&q) || !is_prime(q) {
            return Err(NttError::InvalidPlan(format!(
                "{q} is not an odd prime below 2^62"
            )));
        }
        let shift = cyclic_factor.trailing_zeros();
        let two_adic = two_adic + shift;
        let cyclic_factor = cyclic_factor >> shift;
        let order = (1u128 << two_adic) * cyclic_factor as u128;
        if !((q - 1) as u128).is_multiple_of(order) {
            return Err(NttError::InvalidPlan(format!(
                "{q} - 1 is not divisible by 2^{two_adic} * {cyclic_factor}"
            )));
        }
        let order = order as u64;
        let phi = factorize(q - 1);
        let g = primitive_root_with(q, &phi);
        let root = pow_mod(g, (q - 1) / order, q);
        Ok(NttPlan {
            q,
            two_adic,
            cyclic_factor,
            root,
            mont: Montgomery::new(q),
            pow2: RwLock::new(None),
        })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn two_adic(&self) -> u32 {
        self.two_adic
    }

    pub fn cyclic_factor(&self) -> u64 {
        self.cyclic_factor
    }

    /// Exact multiplicative order of [`NttPlan::root`].
    pub fn order(&self) -> u64 {
        (1u64 << self.two_adic) * self.cyclic_factor
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// A root of unity of exact order `len`, if `len` divides the plan order.
    pub fn root_of_order(&self, len: u64) -> Option<u64> {
        (len > 0 && self.order().is_multiple_of(len)).then(|| pow_mod(self.root, self.order() / len, self.q))
    }

    pub(crate) fn montgomery(&self) -> &Montgomery {
        &self.mont
    }

    fn pow2_kernel(&self, len: usize) -> Result<Arc<Pow2Kernel>, NttError> {
        if let Some(k) = self.pow2.read().unwrap().as_ref() {
            if k.max_len() >= len {
                return Ok(Arc::clone(k));
            }
        }
        let mut slot = self.pow2.write().unwrap();
        if let Some(k) = slot.as_ref() {
            if k.max_len() >= len {
                return Ok(Arc::clone(k));
            }
        }
        let root = self.root_of_order(len as u64).ok_or_else(|| {
            NttError::ShapeMismatch(format!("no root of order {len} mod {}", self.q))
        })?;
        let kernel = Arc::new(Pow2Kernel::new(len, self.q, root));
        *slot = Some(Arc::clone(&kernel));
        Ok(kernel)
    }
}

/// Largest prime `q < 2^bits` with `q ≡ 1 mod 2^a * cyclic_factor`, where
/// `2^a` is the smallest power of two that is at least `two_adic_len`.
pub fn find_ntt_prime(
    two_adic_len: u64,
    cyclic_factor: u64,
    bits: u32,
) -> Result<NttPlan, NttError> {
    const WINDOW: u64 = 1 << 16;
    let a = two_adic_len.max(1).next_power_of_two().trailing_zeros();
    let fail = NttError::NoPrimeFound {
        two_adic: a,
        cyclic_factor,
        bits,
    };
    if cyclic_factor == 0 || !(2..=62).contains(&bits) {
        return Err(fail);
    }
    let step = (1u128 << a) * cyclic_factor as u128;
    let limit = 1u128 << bits;
    if step >= limit {
        return Err(fail);
    }
    let step = step as u64;
    let mut k = ((1u64 << bits) - 2) / step;
    let mut tried = 0;
    while k > 0 && tried < WINDOW {
        let q = k * step + 1;
        if is_prime(q) {
            return NttPlan::new(q, a, cyclic_factor);
        }
        k -= 1;
        tried += 1;
    }
    Err(fail)
}

/// Process-wide cache of plans keyed by modulus structure, so that primes
/// with the same convolution geometry share tables.
fn cached_plan(two_adic_len: u64, cyclic_factor: u64, bits: u32) -> Result<Arc<NttPlan>, NttError> {
    type Cache = HashMap<(u64, u64, u32), Result<Arc<NttPlan>, NttError>>;
    static CACHE: OnceLock<Mutex<Cache>> = OnceLock::new();
    let key = (two_adic_len.max(1).next_power_of_two(), cyclic_factor, bits);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(plan) = cache.lock().unwrap().get(&key) {
        return plan.clone();
    }
    // failed searches are remembered too; they are not cheap
    let plan = find_ntt_prime(key.0, key.1, bits).map(Arc::new);
    cache.lock().unwrap().insert(key, plan.clone());
    plan
}

/// Shared 62-bit plan for the given modulus structure.
pub fn shared_plan(two_adic_len: u64, cyclic_factor: u64) -> Result<Arc<NttPlan>, NttError> {
    cached_plan(two_adic_len, cyclic_factor, 62)
}

/// Like [`shared_plan`], but picks a prime below 2^50 when the vector
/// kernels are available and results of size `out_bound` still fit.
pub fn shared_plan_for_bound(
    two_adic_len: u64,
    cyclic_factor: u64,
    out_bound: u128,
) -> Result<Arc<NttPlan>, NttError> {
    if simd::available() {
        if let Ok(plan) = cached_plan(two_adic_len, cyclic_factor, simd::SIMD_MODULUS_BITS) {
            if out_bound.saturating_mul(2) < plan.modulus() as u128 {
                return Ok(plan);
            }
        }
    }
    shared_plan(two_adic_len, cyclic_factor)
}

/// Whether a cyclic dimension of this length can be transformed directly
/// (powers of two, or products of 2, 3, 5 and 7).
pub fn kernel_is_supported(len: usize) -> bool {
    len.is_power_of_two() || small_radix_factors(len).is_some()
}

enum AxisKernel {
    Trivial,
    Pow2(Arc<Pow2Kernel>),
    Mixed(MixedRadixKernel),
}

/// Transform machinery for a fixed row-major shape over one plan.
///
/// Power-of-two axes are left in bit-reversed order by [`forward`]; the
/// matching [`inverse`] expects that order, so convolutions never permute.
pub(crate) struct CyclicEngine {
    q: u64,
    mont: Montgomery,
    dims: Vec<usize>,
    kernels: Vec<AxisKernel>,
    total: usize,
    // R / total mod q, applied to the prepared operand
    fold: ShoupConst,
}

impl CyclicEngine {
    pub fn new(plan: &NttPlan, dims: &[usize]) -> Result<Self, NttError> {
        let q = plan.modulus();
        let mut kernels = Vec::with_capacity(dims.len());
        for &len in dims {
            if len == 0 {
                return Err(NttError::ShapeMismatch("zero-length dimension".into()));
            }
            let kernel = if len == 1 {
                AxisKernel::Trivial
            } else if len.is_power_of_two() {
                AxisKernel::Pow2(plan.pow2_kernel(len)?)
            } else {
                let root = plan.root_of_order(len as u64).ok_or_else(|| {
                    NttError::ShapeMismatch(format!("no root of order {len} mod {q}"))
                })?;
                if small_radix_factors(len).is_none() {
                    return Err(NttError::ShapeMismatch(format!(
                        "length {len} is not 7-smooth"
                    )));
                }
                AxisKernel::Mixed(MixedRadixKernel::new(len, q, root).expect("root exists"))
            };
            kernels.push(kernel);
        }
        let total: usize = dims.iter().product();
        let mont = *plan.montgomery();
        let total_inv = inv_mod(total as u64 % q, q).map_err(|_| {
            NttError::ShapeMismatch(format!("length {total} not invertible mod {q}"))
        })?;
        let fold = ShoupConst::new(mul_mod(mont.r_mod(), total_inv, q), q);
        Ok(CyclicEngine {
            q,
            mont,
            dims: dims.to_vec(),
            kernels,
            total,
            fold,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    fn inner(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    fn run(&self, data: &mut [u64], scratch: &mut Vec<u64>, inverse: bool) {
        debug_assert_eq!(data.len(), self.total);
        for (axis, kernel) in self.kernels.iter().enumerate() {
            let len = self.dims[axis];
            let inner = self.inner(axis);
            match kernel {
                AxisKernel::Trivial => {}
                AxisKernel::Pow2(k) => {
                    if inverse {
                        k.inverse(data, len, inner)
                    } else {
                        k.forward(data, len, inner)
                    }
                }
                AxisKernel::Mixed(k) => k.apply(data, scratch, inner, inverse),
            }
        }
    }

    /// Unscaled forward transform; inputs in `[0, 2q)`, outputs likewise.
    pub fn forward(&self, data: &mut [u64], scratch: &mut Vec<u64>) {
        self.run(data, scratch, false);
    }

    /// Unscaled inverse transform; inputs in `[0, 2q)`, outputs likewise.
    pub fn inverse(&self, data: &mut [u64], scratch: &mut Vec<u64>) {
        self.run(data, scratch, true);
    }

    /// Brings power-of-two axes from bit-reversed to natural order (or back).
    fn permute(&self, data: &mut [u64]) {
        for (axis, kernel) in self.kernels.iter().enumerate() {
            if let AxisKernel::Pow2(_) = kernel {
                bit_reverse_blocks(data, self.dims[axis], self.inner(axis));
            }
        }
    }

    /// Prepares a transformed operand for [`CyclicEngine::pointwise`], which
    /// then also divides by the transform size.
    pub fn fold_scale(&self, data: &mut [u64]) {
        for x in data.iter_mut() {
            *x = self.fold.mul_lazy(*x, self.q);
        }
    }

    pub fn pointwise(&self, acc: &mut [u64], prepared: &[u64]) {
        for (a, &b) in acc.iter_mut().zip(prepared) {
            *a = self.mont.mul(*a, b);
        }
    }

    pub fn normalize(&self, data: &mut [u64]) {
        for x in data.iter_mut() {
            *x = (*x).min(x.wrapping_sub(self.q));
        }
    }
}

fn check_len(data_len: usize, shape: &ConvShape) -> Result<(), NttError> {
    if shape.dims().is_empty() {
        return Err(NttError::ShapeMismatch("empty shape".into()));
    }
    if data_len != shape.total() {
        return Err(NttError::ShapeMismatch(format!(
            "data has {data_len} entries, shape needs {}",
            shape.total()
        )));
    }
    Ok(())
}

/// Multi-dimensional DFT in natural order. The inverse includes the `1/N`
/// factor, so `inverse(forward(x)) == x`. Outputs are canonical in `[0, q)`.
pub fn transform(
    plan: &NttPlan,
    data: &[u64],
    shape: &ConvShape,
    direction: Direction,
) -> Result<Vec<u64>, NttError> {
    check_len(data.len(), shape)?;
    let q = plan.modulus();
    let engine = CyclicEngine::new(plan, &shape.lengths())?;
    let mut buf: Vec<u64> = data.iter().map(|&x| x % q).collect();
    let mut scratch = Vec::new();
    match direction {
        Direction::Forward => {
            engine.forward(&mut buf, &mut scratch);
            engine.permute(&mut buf);
        }
        Direction::Inverse => {
            engine.permute(&mut buf);
            engine.inverse(&mut buf, &mut scratch);
            let scale = ShoupConst::new(inv_mod(engine.total() as u64 % q, q).unwrap(), q);
            for x in buf.iter_mut() {
                *x = scale.mul_lazy(*x, q);
            }
        }
    }
    engine.normalize(&mut buf);
    Ok(buf)
}

/// Largest coordinate along `axis` over the nonzero entries of `data`.
fn extent(data: &[u64], dims: &[usize], axis: usize) -> Option<usize> {
    let inner: usize = dims[axis + 1..].iter().product();
    let len = dims[axis];
    data.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, _)| (i / inner) % len)
        .max()
}

/// Convolution modulo `q`: indices wrap in cyclic dimensions; zero-padded
/// dimensions must be long enough that the acyclic product fits.
pub fn convolve_multidim(
    plan: &NttPlan,
    a: &[u64],
    b: &[u64],
    shape: &ConvShape,
) -> Result<Vec<u64>, NttError> {
    check_len(a.len(), shape)?;
    check_len(b.len(), shape)?;
    let q = plan.modulus();
    let dims = shape.lengths();
    let a: Vec<u64> = a.iter().map(|&x| x % q).collect();
    let mut b: Vec<u64> = b.iter().map(|&x| x % q).collect();
    for (axis, &(len, kind)) in shape.dims().iter().enumerate() {
        if kind != DimKind::ZeroPadded {
            continue;
        }
        if let (Some(ea), Some(eb)) = (extent(&a, &dims, axis), extent(&b, &dims, axis)) {
            if ea + eb >= len {
                return Err(NttError::ShapeMismatch(format!(
                    "zero-padded axis {axis} of length {len} is too short for extents {ea} + {eb}"
                )));
            }
        }
    }
    let engine = CyclicEngine::new(plan, &dims)?;
    let mut scratch = Vec::new();
    engine.forward(&mut b, &mut scratch);
    engine.fold_scale(&mut b);
    let mut out = a;
    engine.forward(&mut out, &mut scratch);
    engine.pointwise(&mut out, &b);
    engine.inverse(&mut out, &mut scratch);
    engine.normalize(&mut out);
    Ok(out)
}
