//! Exactness properties of the transforms, checked against naive sums.

mod common;

use proptest::prelude::*;

use common::ntt::*;
use irregular::ntt::{convolve_multidim, crt_pair, find_ntt_prime, umbrella_primes, ConvShape, DimKind};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(160))]

    #[test]
    fn inverse_undoes_forward((dims, x) in shaped_data(MAX_TOTAL), bits in bits()) {
        check_round_trip(dims, x, bits)?;
    }

    #[test]
    fn forward_matches_naive_dft((dims, x) in shaped_data(256), bits in bits()) {
        check_naive_dft(dims, x, bits)?;
    }

    #[test]
    fn convolution_theorem((dims, a, b) in shaped_pair(512), bits in bits()) {
        check_convolution(dims, a, b, bits)?;
    }

    #[test]
    fn integer_products_are_exact((a, b, small) in integer_operands()) {
        check_integer_product(a, b, small)?;
    }

    #[test]
    fn crt_round_trip(x in any::<i128>()) {
        check_crt(x)?;
    }
}

#[test]
fn crt_edges() {
    let (q1, q2) = umbrella_primes();
    let n = q1 as i128 * q2 as i128;
    for x in [0i128, 1, -1, n / 2, -(n / 2) + 1, q1 as i128, -(q2 as i128)] {
        let r1 = x.rem_euclid(q1 as i128) as u64;
        let r2 = x.rem_euclid(q2 as i128) as u64;
        assert_eq!(crt_pair(r1, q1, r2, q2), x, "{x}");
    }
}

#[test]
fn cyclic_wrap_of_length_three() {
    let plan = find_ntt_prime(1, 3, 62).unwrap();
    let shape = ConvShape::one_dim(3, DimKind::Cyclic);
    let x2 = [0, 0, 1];
    assert_eq!(convolve_multidim(&plan, &x2, &x2, &shape).unwrap(), [0, 1, 0]);
}

#[test]
fn padded_overflow_is_refused() {
    let plan = find_ntt_prime(8, 1, 62).unwrap();
    let shape = ConvShape::one_dim(8, DimKind::ZeroPadded);
    let a = [0, 0, 0, 0, 0, 1, 0, 0];
    assert!(convolve_multidim(&plan, &a, &a, &shape).is_err());
}
