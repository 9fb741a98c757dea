mod common;

use common::{EXCEPTIONAL, NINE_INDEX_PRIME, NINE_INDICES};
use irregular::arith::pow_mod;
use irregular::checks::{bernoulli_single, iwasawa_check, CheckError, Verdict};

#[test]
fn exceptional_pairs_fail_the_first_condition() {
    for &(p, r) in &EXCEPTIONAL {
        assert_eq!(pow_mod(2, r, p), 1, "({p}, {r})");
        assert_eq!(bernoulli_single(p, r), Ok(0), "({p}, {r})");
    }
    for &(p, r) in &EXCEPTIONAL[..3] {
        let rep = iwasawa_check(p, r).unwrap();
        assert!(!rep.cond1, "({p}, {r})");
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert_eq!(rep.failed_conditions()[0], 1);
    }
}

#[test]
fn ordinary_pairs_are_confirmed() {
    for (p, r) in [(37, 32), (59, 44), (67, 58), (157, 62), (157, 110), (491, 292), (491, 336), (491, 338)] {
        let rep = iwasawa_check(p, r).unwrap_or_else(|e| panic!("({p}, {r}): {e}"));
        assert_eq!(rep.verdict, Verdict::Confirmed, "{rep:?}");
    }
}

#[test]
fn regular_pairs_are_refused() {
    assert_eq!(iwasawa_check(37, 30), Err(CheckError::NotIrregular { p: 37, r: 30 }));
    assert!(matches!(iwasawa_check(37, 31), Err(CheckError::BadIndex { .. })));
    assert!(matches!(iwasawa_check(35, 2), Err(CheckError::BadPrime { .. })));
}

#[test]
fn largest_index_prime_spot_check() {
    assert_eq!(bernoulli_single(NINE_INDEX_PRIME, NINE_INDICES[0]), Ok(0));
}
