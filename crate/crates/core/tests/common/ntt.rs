//! Strategies, naive oracles and the property checks for the transforms.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use irregular::arith::{gcd, mul_mod, pow_mod};
use irregular::ntt::{
    convolve_multidim, crt_pair, find_ntt_prime, poly_mul_integer, transform, umbrella_primes,
    ConvShape, DimKind, Direction, NttPlan, SignedCoeffs,
};

pub type Dims = Vec<(usize, DimKind)>;

pub const MAX_TOTAL: usize = 1 << 10;
const CYCLIC_LENS: [usize; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 15, 21];
const PADDED_LENS: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 1024];

fn odd_part(n: usize) -> u64 {
    (n >> n.trailing_zeros()) as u64
}

fn total(dims: &[(usize, DimKind)]) -> usize {
    dims.iter().map(|d| d.0).product()
}

/// A plan whose order every dimension divides; `bits` selects between the
/// small primes (vector kernels, where present) and full-width ones.
pub fn plan_for(dims: &[(usize, DimKind)], bits: u32) -> NttPlan {
    let pow2 = dims.iter().map(|d| 1u64 << d.0.trailing_zeros()).max().unwrap();
    let odd = dims
        .iter()
        .map(|d| odd_part(d.0))
        .fold(1, |acc, o| acc / gcd(acc, o) * o);
    find_ntt_prime(pow2, odd, bits).unwrap()
}

/// Up to three dimensions, at most 2^10 entries, below `max_total`.
pub fn shape(max_total: usize) -> impl Strategy<Value = Dims> {
    let dim = prop_oneof![
        prop::sample::select(&CYCLIC_LENS[..]).prop_map(|l| (l, DimKind::Cyclic)),
        prop::sample::select(&PADDED_LENS[..]).prop_map(|l| (l, DimKind::ZeroPadded)),
    ];
    prop::collection::vec(dim, 1..=3).prop_filter("total size", move |d| total(d) <= max_total)
}

pub fn bits() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![50u32, 62])
}

/// A shape with one data array of matching size.
pub fn shaped_data(max_total: usize) -> impl Strategy<Value = (Dims, Vec<u64>)> {
    shape(max_total).prop_flat_map(|d| {
        let n = total(&d);
        (Just(d), prop::collection::vec(any::<u64>(), n))
    })
}

/// A shape with two data arrays of matching size.
pub fn shaped_pair(max_total: usize) -> impl Strategy<Value = (Dims, Vec<u64>, Vec<u64>)> {
    shape(max_total).prop_flat_map(|d| {
        let n = total(&d);
        (
            Just(d),
            prop::collection::vec(any::<u64>(), n),
            prop::collection::vec(any::<u64>(), n),
        )
    })
}

fn coords(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut c = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        c[a] = i % dims[a];
        i /= dims[a];
    }
    c
}

pub fn naive_dft(plan: &NttPlan, x: &[u64], dims: &[usize], inverse: bool) -> Vec<u64> {
    let q = plan.modulus();
    let roots: Vec<u64> = dims
        .iter()
        .map(|&l| {
            let w = plan.root_of_order(l as u64).unwrap();
            if inverse {
                pow_mod(w, l as u64 - 1, q)
            } else {
                w
            }
        })
        .collect();
    let mut out = vec![0u64; x.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let ck = coords(k, dims);
        let mut acc = 0u128;
        for (j, &xj) in x.iter().enumerate() {
            let cj = coords(j, dims);
            let mut w = 1;
            for a in 0..dims.len() {
                w = mul_mod(w, pow_mod(roots[a], ((cj[a] * ck[a]) % dims[a]) as u64, q), q);
            }
            acc = (acc + mul_mod(w, xj, q) as u128) % q as u128;
        }
        *o = acc as u64;
    }
    if inverse {
        let scale = pow_mod(x.len() as u64 % q, q - 2, q);
        out.iter_mut().for_each(|v| *v = mul_mod(*v, scale, q));
    }
    out
}

pub fn schoolbook(q: u64, a: &[u64], b: &[u64], dims: &[(usize, DimKind)]) -> Vec<u64> {
    let lens: Vec<usize> = dims.iter().map(|d| d.0).collect();
    let mut out = vec![0u64; a.len()];
    for (i, &ai) in a.iter().enumerate().filter(|x| *x.1 != 0) {
        let ci = coords(i, &lens);
        for (j, &bj) in b.iter().enumerate().filter(|x| *x.1 != 0) {
            let cj = coords(j, &lens);
            let mut k = 0;
            for (axis, &(len, kind)) in dims.iter().enumerate() {
                let s = ci[axis] + cj[axis];
                if kind == DimKind::ZeroPadded {
                    assert!(s < len, "inputs must not wrap in padded dimensions");
                }
                k = k * len + s % len;
            }
            out[k] = (out[k] + mul_mod(ai, bj, q)) % q;
        }
    }
    out
}

/// Zero outside the lower half of every zero-padded dimension, so the
/// acyclic product fits.
pub fn operand(seed: &[u64], dims: &[(usize, DimKind)], q: u64) -> Vec<u64> {
    let lens: Vec<usize> = dims.iter().map(|d| d.0).collect();
    (0..seed.len())
        .map(|i| {
            let c = coords(i, &lens);
            let inside = dims
                .iter()
                .zip(&c)
                .all(|(&(len, kind), &x)| kind == DimKind::Cyclic || x < len / 2);
            if inside {
                seed[i] % q
            } else {
                0
            }
        })
        .collect()
}

pub fn check_round_trip(dims: Dims, x: Vec<u64>, bits: u32) -> Result<(), TestCaseError> {
    let plan = plan_for(&dims, bits);
    let q = plan.modulus();
    let shape = ConvShape::new(dims);
    let x: Vec<u64> = x.iter().map(|v| v % q).collect();
    let fwd = transform(&plan, &x, &shape, Direction::Forward).unwrap();
    prop_assert!(fwd.iter().all(|&v| v < q));
    prop_assert_eq!(transform(&plan, &fwd, &shape, Direction::Inverse).unwrap(), x);
    Ok(())
}

pub fn check_naive_dft(dims: Dims, x: Vec<u64>, bits: u32) -> Result<(), TestCaseError> {
    let plan = plan_for(&dims, bits);
    let lens: Vec<usize> = dims.iter().map(|d| d.0).collect();
    let shape = ConvShape::new(dims);
    let x: Vec<u64> = x.iter().map(|v| v % plan.modulus()).collect();
    prop_assert_eq!(
        transform(&plan, &x, &shape, Direction::Forward).unwrap(),
        naive_dft(&plan, &x, &lens, false)
    );
    prop_assert_eq!(
        transform(&plan, &x, &shape, Direction::Inverse).unwrap(),
        naive_dft(&plan, &x, &lens, true)
    );
    Ok(())
}

pub fn check_convolution(dims: Dims, a: Vec<u64>, b: Vec<u64>, bits: u32) -> Result<(), TestCaseError> {
    let plan = plan_for(&dims, bits);
    let q = plan.modulus();
    let a = operand(&a, &dims, q);
    let b = operand(&b, &dims, q);
    let expected = schoolbook(q, &a, &b, &dims);
    let shape = ConvShape::new(dims);
    prop_assert_eq!(convolve_multidim(&plan, &a, &b, &shape).unwrap(), expected);
    Ok(())
}

pub fn integer_operands() -> impl Strategy<Value = (Vec<i128>, Vec<i128>, bool)> {
    (
        prop::collection::vec(-(1i128 << 40)..(1i128 << 40), 1..300),
        prop::collection::vec(-(1i128 << 40)..(1i128 << 40), 1..300),
        any::<bool>(),
    )
}

/// `small` keeps the product within one prime; otherwise two are needed.
pub fn check_integer_product(a: Vec<i128>, b: Vec<i128>, small: bool) -> Result<(), TestCaseError> {
    let shift = if small { 20 } else { 0 };
    let a: Vec<i128> = a.iter().map(|x| x >> shift).collect();
    let b: Vec<i128> = b.iter().map(|x| x >> shift).collect();
    let bound = 1u128 << (40 - shift);
    let out_bound = a.len().min(b.len()) as u128 * bound * bound;
    let prod = poly_mul_integer(
        &SignedCoeffs::new(a.clone(), bound).unwrap(),
        &SignedCoeffs::new(b.clone(), bound).unwrap(),
        out_bound,
    )
    .unwrap();
    let mut expected = vec![0i128; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            expected[i + j] += x * y;
        }
    }
    prop_assert_eq!(prod.coeffs(), &expected[..]);
    Ok(())
}

/// Any integer in `(-q1 q2 / 2, q1 q2 / 2]` survives reduction and CRT.
pub fn check_crt(x: i128) -> Result<(), TestCaseError> {
    let (q1, q2) = umbrella_primes();
    let half = (q1 as i128 * q2 as i128) / 2;
    let x = x.rem_euclid(2 * half) - half + 1;
    let r1 = x.rem_euclid(q1 as i128) as u64;
    let r2 = x.rem_euclid(q2 as i128) as u64;
    prop_assert_eq!(crt_pair(r1, q1, r2, q2), x);
    Ok(())
}
