//! Oracles and published reference values shared by the test targets.
#![allow(dead_code)]

pub mod ntt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use irregular::arith::{mul_mod, reduce_signed};
use irregular::pipeline::{build_layout, PrimeContext};
use irregular::results::{aux_lines, record_line};
use irregular::pipeline::IrregularRecord;

/// `B_0 .. B_n` from `sum_{k<=m} C(m+1, k) B_k = 0`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = vec![BigRational::one()];
    for m in 1..=n {
        let mut binom = BigInt::one(); // C(m+1, k)
        let mut acc = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            acc += BigRational::from_integer(binom.clone()) * bk;
            binom = binom * BigInt::from(m + 1 - k) / BigInt::from(k + 1);
        }
        b.push(-acc / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// `x mod p` for a rational whose denominator is prime to `p`.
pub fn reduce_rational(x: &BigRational, p: u64) -> u64 {
    let p = BigInt::from(p);
    let den = x.denom().modpow(&(&p - 2u32), &p);
    let num = x.numer() % &p;
    let num = if num.is_negative() { num + &p } else { num };
    let r: BigInt = num * den % &p;
    r.try_into().unwrap()
}

/// The worked example: p = 131, gamma = c = 2, row 3 of the 5 x 13 matrix.
pub const TOY_P: u64 = 131;
pub const TOY_ROW: usize = 3;
/// Coefficients from X^0 upwards.
pub const TOY_UMBRELLA_U: [i64; 13] = [65, -40, 16, -43, -26, -9, 34, -34, 9, -26, -43, 16, 40];
pub const TOY_UMBRELLA_V: [i64; 13] = [1, -18, 45, -32, 63, -51, 52, 52, -51, 63, -32, 45, -18];
pub const TOY_RADER_U: [i64; 12] = [-1, 1, 1, 1, -1, -1, 1, -1, 1, -1, -1, -1];
pub const TOY_RADER_V: [i64; 12] = [-19, -32, -24, 52, -47, -18, 62, 45, 60, 63, 39, -51];

/// Row `i2` as residues of `f_c`, the input of the umbrella path.
pub fn umbrella_row(ctx: &PrimeContext, i2: usize) -> Vec<u64> {
    let p = ctx.p;
    let half = p.div_ceil(2);
    build_layout(ctx)
        .row(i2)
        .iter()
        .map(|&v| mul_mod(reduce_signed(v as i128, p), half, p))
        .collect()
}

/// Irregular pairs with `2^r = 1 mod p`.
pub const EXCEPTIONAL: [(u64, u64); 5] = [
    (130811, 52324),
    (599479, 359568),
    (2010401, 1234960),
    (355011619, 280274852),
    (358350581, 232032460),
];

/// The only prime below 2^31 with nine irregular indices.
pub const NINE_INDEX_PRIME: u64 = 1767218027;
pub const NINE_INDICES: [u64; 9] = [
    63562190, 274233542, 290632386, 619227758, 902737892, 1279901568, 1337429618, 1603159110,
    1692877044,
];

/// Primes below 2^31 with `i_p = m`, m = 0..9.
pub const INDEX_COUNTS: [u64; 10] =
    [63751120, 31873681, 7963496, 1326171, 165211, 16410, 1384, 86, 4, 1];
/// Published P_m with the number of printed decimals.
pub const POISSON_PRINTED: [(f64, i32); 10] = [
    (0.606531, 6),
    (0.303265, 6),
    (0.075816, 6),
    (0.0126361, 7),
    (0.00157951, 8),
    (0.000157951, 9),
    (0.000013163, 9),
    (0.000000940, 9),
    (0.0000000588, 10),
    (0.0000000033, 10),
];
/// `(X_j, p-value)` for the sixteen intervals of width 2^27, dof 6.
pub const INTERVAL_STATS: [(f64, f64); 16] = [
    (4.654, 0.589),
    (10.559, 0.103),
    (6.472, 0.372),
    (3.209, 0.782),
    (3.099, 0.796),
    (8.530, 0.202),
    (4.025, 0.673),
    (5.819, 0.444),
    (1.908, 0.927),
    (4.657, 0.588),
    (12.850, 0.045),
    (5.972, 0.426),
    (4.538, 0.604),
    (1.612, 0.952),
    (6.765, 0.343),
    (4.716, 0.580),
];

/// What a scan would write for this record.
pub fn rendered(rec: &IrregularRecord) -> String {
    let mut s = String::new();
    if !rec.irregular.is_empty() {
        s += &record_line(rec.p, &rec.irregular);
    }
    s + &aux_lines(rec.p, &rec.ten_pairs)
}
