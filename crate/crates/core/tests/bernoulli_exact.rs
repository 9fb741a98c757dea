//! Bernoulli numbers from exact rational arithmetic, reduced mod p.

mod common;

use num_rational::BigRational;

use common::{bernoulli_numbers, reduce_rational};
use irregular::arith::primes_in_range;
use irregular::checks::bernoulli_single;
use irregular::par::Parallelism;
use irregular::pipeline::{classify_prime, compute_table};

#[test]
fn classical_values() {
    let b = bernoulli_numbers(12);
    let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    assert_eq!(b[1], q(-1, 2));
    assert_eq!(b[2], q(1, 6));
    assert_eq!(b[3], q(0, 1));
    assert_eq!(b[12], q(-691, 2730));
}

#[test]
fn pipeline_matches_exact_rationals() {
    let b = bernoulli_numbers(48);
    for p in primes_in_range(5, 50) {
        let table = compute_table(&classify_prime(p), Parallelism::Sequential).unwrap();
        for r in (2..=p - 3).step_by(2) {
            let exact = reduce_rational(&b[r as usize], p);
            assert_eq!(table.bern[r as usize], exact, "p = {p}, r = {r}");
            assert_eq!(bernoulli_single(p, r).unwrap(), exact, "p = {p}, r = {r}");
        }
        let irregular: Vec<u64> = (2..=p - 3)
            .step_by(2)
            .filter(|&r| reduce_rational(&b[r as usize], p) == 0)
            .collect();
        assert_eq!(table.irregular, irregular, "p = {p}");
    }
}
