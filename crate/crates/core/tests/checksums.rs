use irregular::arith::primes_in_range;
use irregular::par::{self, Parallelism};
use irregular::pipeline::{
    build_layout, classify_prime, classify_with, compute_table, RowEngine, Strategy,
};
use irregular::umbrella::prepare_v;

/// Every strategy must get the checksum right on its own, without the
/// umbrella retry.
#[test]
fn checksum_holds_up_to_1e5() {
    let primes = primes_in_range(5, 100_000);
    let bad: Vec<u64> = par::map(Parallelism::Rayon, &primes, |&p| {
        let table = compute_table(&classify_prime(p), Parallelism::Sequential).unwrap();
        (table.checksum != p - 4).then_some(p)
    })
    .into_iter()
    .flatten()
    .collect();
    assert!(bad.is_empty(), "{bad:?}");
}

/// One transform of V per umbrella prime, then a forward and an inverse
/// transform per row and prime.
#[test]
fn umbrella_transform_count() {
    let mut lanes_seen = [false; 2];
    for p in [131u64, 1_000_003, 999_983, 3_000_539] {
        let ctx = classify_with(p, Some(Strategy::Umbrella));
        let mut layout = build_layout(&ctx);
        let engine = RowEngine::new(&ctx).unwrap();
        let RowEngine::Umbrella(scratch) = &engine else {
            panic!("forced umbrella");
        };
        let lanes = scratch.lane_count() as u64;
        lanes_seen[lanes as usize - 1] = true;
        let n = ctx.n as usize;
        for i2 in 0..ctx.m as usize {
            let row = layout.row(i2).to_vec();
            engine.row(&ctx, &row, &mut layout.d[i2 * n..(i2 + 1) * n]);
        }
        assert_eq!(scratch.transforms_issued(), lanes * (2 * ctx.m + 1), "p = {p}");
    }
    // with two primes this is the 4m + 2 of the classical count
    assert!(lanes_seen[0] && lanes_seen[1]);
    let ctx = classify_with(131, Some(Strategy::Umbrella));
    let scratch = prepare_v(ctx.p, ctx.n as usize, ctx.xi).unwrap();
    assert_eq!(scratch.transforms_issued(), scratch.lane_count() as u64);
}
