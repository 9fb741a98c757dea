//! Per-prime driver: layout, horizontal and vertical DFTs, assembly of the
//! Bernoulli residues and the checksum.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::arith::{
    batch_inverse, element_order, factorize, inv_mod, mul_mod, pow_mod, primitive_root_with,
    for_each_power, reduce_signed, smooth_split, Factorization, ShoupConst, SmallMod,
};
use crate::ntt::{MixedRadixKernel, NttPlan};
use crate::par::{self, Parallelism};
use crate::rader::{
    build_de_split, build_rader_plan, conv_plan_for, DeSplit, Rader2Dft, RaderDft, RaderError,
    RaderPlan1,
};
use crate::umbrella::{bluestein_row, prepare_v, BluesteinScratch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Rader1,
    Rader2,
    Umbrella,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rader1, Strategy::Rader2, Strategy::Umbrella];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Rader1 => "rader1",
            Strategy::Rader2 => "rader2",
            Strategy::Umbrella => "umbrella",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected rader1, rader2 or umbrella)"))
    }
}

/// Why a prime ended up on the umbrella path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    /// `n = 1`: nothing to gain from Rader.
    TrivialRow,
    TooManyFactors,
    RepeatedFactor,
    /// Both 2 and 3 have order at most `(p - 1) / 100` mod `p`.
    SmallOrder,
    /// No generator `z` of the units mod a factor of `n` with small `z^M in {2, 3}`.
    PowerGenerator,
    /// The `(d, e)` split or its NTT prime is not admissible.
    Split,
    /// A different strategy was requested and this one does not apply.
    Forced,
}

impl Rejection {
    pub fn name(self) -> &'static str {
        match self {
            Rejection::TrivialRow => "trivial-row",
            Rejection::TooManyFactors => "too-many-factors",
            Rejection::RepeatedFactor => "repeated-factor",
            Rejection::SmallOrder => "small-order",
            Rejection::PowerGenerator => "power-generator",
            Rejection::Split => "split",
            Rejection::Forced => "forced",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub(crate) enum RaderSetup {
    None,
    One(RaderPlan1),
    Two {
        split: DeSplit,
        plan1: RaderPlan1,
        plan2: RaderPlan1,
        conv: Arc<NttPlan>,
    },
}

/// Everything derived from `p` that the pipeline needs.
#[derive(Debug, Clone)]
pub struct PrimeContext {
    pub p: u64,
    pub gamma: u64,
    pub c: u64,
    pub alpha_c: u64,
    pub m: u64,
    pub n: u64,
    pub n_factors: Factorization,
    pub omega: u64,
    pub theta: u64,
    pub xi: u64,
    pub strategy: Strategy,
    /// Set when the umbrella path was taken although Rader was tried.
    pub rejection: Option<Rejection>,
    pub(crate) setup: RaderSetup,
}

impl PrimeContext {
    pub fn de_split(&self) -> Option<&DeSplit> {
        match &self.setup {
            RaderSetup::Two { split, .. } => Some(split),
            _ => None,
        }
    }

    pub fn rader_plans(&self) -> Vec<&RaderPlan1> {
        match &self.setup {
            RaderSetup::None => vec![],
            RaderSetup::One(plan) => vec![plan],
            RaderSetup::Two { plan1, plan2, .. } => vec![plan1, plan2],
        }
    }
}

/// `2 f_c(x) = 2 floor(c (x/c mod p) / p) - (c - 1)`.
pub fn f_value(c: u64, p: u64, x: u64) -> i64 {
    let y = mul_mod(x, inv_mod(c, p).expect("c is a unit"), p);
    let t = (c as u128 * y as u128 / p as u128) as i64;
    2 * t - (c as i64 - 1)
}

pub fn classify_prime(p: u64) -> PrimeContext {
    classify_with(p, None)
}

/// Like [`classify_prime`], but with a requested strategy. A request that
/// does not apply to `p` falls back to the umbrella path.
pub fn classify_with(p: u64, force: Option<Strategy>) -> PrimeContext {
    assert!((5..1 << 32).contains(&p), "classify: p = {p} out of range");
    let phi = factorize(p - 1);
    let gamma = primitive_root_with(p, &phi);
    let (m, n) = smooth_split((p - 1) / 2);
    let n_factors = factorize(n);
    let order = p - 1;
    let gp = |e: u128| pow_mod(gamma, (e % order as u128) as u64, p);
    let (m128, n128) = (m as u128, n as u128);
    let mut ctx = PrimeContext {
        p,
        gamma,
        c: gamma,
        alpha_c: order,
        m,
        n,
        n_factors,
        omega: gp(4 * m128 * m128),
        theta: gp(n128 * n128),
        xi: gp(2 * m128 * m128),
        strategy: Strategy::Umbrella,
        rejection: None,
        setup: RaderSetup::None,
    };
    if force == Some(Strategy::Umbrella) {
        return ctx;
    }
    let chosen = choose_rader(&ctx, &phi);
    match chosen {
        Ok((c, alpha_c, strategy, setup)) if force.is_none() || force == Some(strategy) => {
            ctx.c = c;
            ctx.alpha_c = alpha_c;
            ctx.strategy = strategy;
            ctx.setup = setup;
        }
        Ok(_) => ctx.rejection = Some(Rejection::Forced),
        Err(why) => ctx.rejection = Some(why),
    }
    ctx
}

fn choose_rader(
    ctx: &PrimeContext,
    phi: &Factorization,
) -> Result<(u64, u64, Strategy, RaderSetup), Rejection> {
    let (p, n) = (ctx.p, ctx.n);
    if n == 1 {
        return Err(Rejection::TrivialRow);
    }
    if !ctx.n_factors.is_squarefree() {
        return Err(Rejection::RepeatedFactor);
    }
    if ctx.n_factors.distinct_primes() > 2 {
        return Err(Rejection::TooManyFactors);
    }
    let mut pick = None;
    for c in [2u64, 3] {
        let alpha = element_order(c, p, phi).expect("c is a unit");
        if 100 * alpha > p - 1 {
            pick = Some((c, alpha));
            break;
        }
    }
    let (c, alpha) = pick.ok_or(Rejection::SmallOrder)?;
    let primes: Vec<u64> = ctx.n_factors.primes().collect();
    match primes.as_slice() {
        [_] => {
            let plan = build_rader_plan(n).map_err(|_| Rejection::PowerGenerator)?;
            Ok((c, alpha, Strategy::Rader1, RaderSetup::One(plan)))
        }
        &[n1, n2] => {
            let plan1 = build_rader_plan(n1).map_err(|_| Rejection::PowerGenerator)?;
            let plan2 = build_rader_plan(n2).map_err(|_| Rejection::PowerGenerator)?;
            let split = build_de_split(n1, n2).map_err(|_| Rejection::Split)?;
            let conv = conv_plan_for(&split, p).map_err(|_| Rejection::Split)?;
            Ok((
                c,
                alpha,
                Strategy::Rader2,
                RaderSetup::Two {
                    split,
                    plan1,
                    plan2,
                    conv,
                },
            ))
        }
        _ => unreachable!("n has one or two prime factors here"),
    }
}

/// The Good-Thomas matrix: row `i2` holds `2 f_c(gamma^i)` for
/// `i = 2m i1 + n i2 mod (p - 1)`; `d` receives the horizontal DFTs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub m: usize,
    pub n: usize,
    pub a2: Vec<i64>,
    pub d: Vec<u64>,
}

impl Layout {
    pub fn row(&self, i2: usize) -> &[i64] {
        &self.a2[i2 * self.n..(i2 + 1) * self.n]
    }

    pub fn d_row(&self, i2: usize) -> &[u64] {
        &self.d[i2 * self.n..(i2 + 1) * self.n]
    }
}

pub fn build_layout(ctx: &PrimeContext) -> Layout {
    let (p, c) = (ctx.p, ctx.c);
    let (m, n) = (ctx.m as usize, ctx.n as usize);
    let order = p - 1;
    let step = ShoupConst::new(pow_mod(ctx.gamma, (2 * ctx.m) % order, p), p);
    let c_inv = inv_mod(c, p).expect("c is a unit");
    let offset = c as i64 - 1;
    let sm = SmallMod::new(p);
    let mut a2 = Vec::with_capacity(m * n);
    for i2 in 0..m as u64 {
        // y = gamma^i / c, so that f_c(gamma^i) only needs floor(c y / p)
        let mut y = mul_mod(pow_mod(ctx.gamma, (ctx.n * i2) % order, p), c_inv, p);
        for _ in 0..n {
            let t = sm.quotient(c * y) as i64;
            a2.push(2 * t - offset);
            y = step.mul(y, p);
        }
    }
    Layout {
        m,
        n,
        a2,
        d: vec![0; m * n],
    }
}

/// Row transform selected by the strategy of a context. Built once per
/// prime, so the variant size gap does not matter.
#[allow(clippy::large_enum_variant)]
pub enum RowEngine {
    Rader1(RaderDft),
    Rader2(Rader2Dft),
    Umbrella(BluesteinScratch),
}

impl RowEngine {
    pub fn new(ctx: &PrimeContext) -> Result<Self, RaderError> {
        let (p, n) = (ctx.p, ctx.n);
        Ok(match &ctx.setup {
            RaderSetup::One(plan) => {
                RowEngine::Rader1(RaderDft::new(plan.clone(), ctx.omega, p, ctx.c - 1)?)
            }
            RaderSetup::Two {
                split,
                plan1,
                plan2,
                conv,
            } => RowEngine::Rader2(Rader2Dft::new(
                split.clone(),
                plan1.clone(),
                plan2.clone(),
                conv,
                ctx.omega,
                p,
            )?),
            RaderSetup::None => RowEngine::Umbrella(prepare_v(p, n as usize, ctx.xi)?),
        })
    }

    /// `out[j1] = sum_{i1} omega^{i1 j1} row[i1] mod p`.
    pub fn row(&self, ctx: &PrimeContext, row: &[i64], out: &mut [u64]) {
        match self {
            RowEngine::Rader1(dft) => dft.dft(row, out),
            RowEngine::Rader2(dft) => dft.dft(row, out),
            RowEngine::Umbrella(scratch) => {
                let p = ctx.p;
                let half = p.div_ceil(2);
                let residues: Vec<u64> = row
                    .iter()
                    .map(|&v| mul_mod(reduce_signed(v as i128, p), half, p))
                    .collect();
                bluestein_row(scratch, &residues, out);
            }
        }
    }
}

/// Fills `layout.d` with the horizontal DFTs of all rows.
pub fn horizontal_dfts(
    ctx: &PrimeContext,
    layout: &mut Layout,
    rows: Parallelism,
) -> Result<(), RaderError> {
    let engine = RowEngine::new(ctx)?;
    run_rows(ctx, &engine, layout, rows);
    Ok(())
}

pub(crate) fn run_rows(
    ctx: &PrimeContext,
    engine: &RowEngine,
    layout: &mut Layout,
    rows: Parallelism,
) {
    let n = layout.n;
    par::for_each_chunk(rows, &layout.a2, n, &mut layout.d, n, |_, row, out| {
        engine.row(ctx, row, out)
    });
}

/// Vertical twisted DFTs. Returns `b` indexed by `j < p - 1`; only odd
/// entries are meaningful (`b_{p-2}` included).
pub fn vertical_dfts(ctx: &PrimeContext, layout: &Layout) -> Vec<u64> {
    vertical_in_place(ctx, layout.m, layout.n, layout.d.clone())
}

fn vertical_in_place(ctx: &PrimeContext, m: usize, n: usize, mut data: Vec<u64>) -> Vec<u64> {
    let p = ctx.p;
    let twist_step = ShoupConst::new(ctx.theta, p);
    let mut twist = 1u64;
    for row in data.chunks_exact_mut(n) {
        let tw = ShoupConst::new(twist, p);
        for v in row.iter_mut() {
            *v = tw.mul(*v, p);
        }
        twist = twist_step.mul(twist, p);
    }
    let root = mul_mod(ctx.theta, ctx.theta, p);
    let kernel = MixedRadixKernel::new(m, p, root).expect("m is 7-smooth");
    let mut scratch = Vec::new();
    kernel.apply(&mut data, &mut scratch, n, false);

    let order = p - 1;
    let mut b = vec![0u64; order as usize];
    let (m64, n64) = (m as u64, n as u64);
    let step = 2 * m64 % order;
    for (jp, column) in data.chunks_exact(n).enumerate() {
        let mut j = n64 * (2 * jp as u64 + 1) % order;
        for &v in column {
            b[j as usize] = v.min(v.wrapping_sub(p));
            j += step;
            j = j.min(j.wrapping_sub(order));
        }
    }
    b
}

/// `B_r mod p` for even `r = j alpha_c <= p - 3`, which the congruence with
/// base `c` cannot see. Uses one pass over the powers of `gamma`.
pub fn recover_missing(ctx: &PrimeContext) -> BTreeMap<u64, u64> {
    let (p, gamma, alpha) = (ctx.p, ctx.gamma, ctx.alpha_c);
    let mut out = BTreeMap::new();
    let big_n = (p - 1) / alpha;
    let wanted: Vec<u64> = (1..big_n)
        .map(|j| j * alpha)
        .filter(|r| r % 2 == 0 && *r <= p - 3)
        .collect();
    if wanted.is_empty() {
        return out;
    }
    let sm = SmallMod::new(p);
    let big_n = big_n as usize;
    let offset = gamma - 1;
    // four lanes over i = 4t + l, each with y = gamma^{i-1} and
    // weight = gamma^{-i}; one chain alone is latency bound
    const LANES: usize = 4;
    let gamma_inv = inv_mod(gamma, p).expect("unit");
    let y_step = ShoupConst::new(pow_mod(gamma, LANES as u64, p), p);
    let w_step = ShoupConst::new(pow_mod(gamma_inv, LANES as u64, p), p);
    let mut y = [0u64; LANES];
    let mut weight = [0u64; LANES];
    let mut k = [0usize; LANES];
    for l in 0..LANES {
        y[l] = mul_mod(gamma_inv, pow_mod(gamma, l as u64, p), p);
        weight[l] = pow_mod(gamma_inv, l as u64, p);
        k[l] = l % big_n;
    }
    let mut sums = vec![[0u64; LANES]; big_n];
    let total = (p - 1) as usize;
    for t in 0..total.div_ceil(LANES) {
        let live = (total - t * LANES).min(LANES);
        for l in 0..live {
            let f2 = sm.reduce(2 * sm.quotient(gamma * y[l]) + p - offset); // 2 f_gamma(gamma^i)
            let s = &mut sums[k[l]][l];
            *s = sm.add(*s, sm.mul(f2, weight[l]));
            y[l] = y_step.mul(y[l], p);
            weight[l] = w_step.mul(weight[l], p);
            k[l] += LANES;
            while k[l] >= big_n {
                k[l] -= big_n;
            }
        }
    }
    let sums: Vec<u64> = sums.iter().map(|s| s.iter().fold(0, |a, &v| sm.add(a, v))).collect();
    let root = pow_mod(gamma, alpha, p);
    let half = p.div_ceil(2);
    for r in wanted {
        let j = r / alpha;
        let step = pow_mod(root, j, p);
        let mut acc = 0u64;
        let mut w = 1u64;
        for &s in &sums {
            acc = (acc + mul_mod(w, s, p)) % p;
            w = mul_mod(w, step, p);
        }
        let denom = (pow_mod(gamma, r, p) + p - 1) % p;
        let value = mul_mod(mul_mod(r % p, half, p), acc, p);
        out.insert(
            r,
            mul_mod(value, inv_mod(denom, p).expect("gamma^r != 1"), p),
        );
    }
    out
}

/// Transform outputs and the Bernoulli residues derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueTable {
    pub p: u64,
    /// `b[j]` for odd `j < p - 1`; even slots are zero.
    pub b: Vec<u64>,
    /// `bern[r] = B_r mod p` for even `2 <= r <= p - 3`; other slots are zero.
    pub bern: Vec<u64>,
    pub irregular: Vec<u64>,
    pub checksum: u64,
    pub ten_pairs: Vec<(u64, u64)>,
}

impl ResidueTable {
    pub fn checksum_ok(&self) -> bool {
        self.checksum == self.p - 4
    }
}

/// `C_p = sum_{r <= p-3} 2^r (r + 1) B_r mod p`, with `B_0 = 1`, `B_1 = -1/2`.
pub fn checksum_of(p: u64, bern: &[u64]) -> u64 {
    let sm = SmallMod::new(p);
    let count = ((p - 3) / 2) as usize;
    // r = 0 and r = 1 contribute 1 - 2; the rest pairs 4^k with r = 2k
    let mut acc = [p - 1, 0, 0, 0];
    for_each_power(sm, 4 % p, count + 1, |k, four_k| {
        if k > 0 {
            let r = 2 * k as u64;
            let term = sm.mul(sm.mul(four_k, r + 1), bern[r as usize]);
            acc[k % 4] = sm.add(acc[k % 4], term);
        }
    });
    acc.iter().fold(0, |s, &a| sm.add(s, a))
}

pub fn checksum_verify(table: &ResidueTable) -> bool {
    checksum_of(table.p, &table.bern) == table.p - 4
}

/// The ten smallest `(r, B_r)` by residue, then by `r`.
pub fn smallest_pairs(p: u64, bern: &[u64], count: usize) -> Vec<(u64, u64)> {
    if count == 0 {
        return Vec::new();
    }
    // (residue, r), sorted; r ascends, so a tie never displaces an entry
    let mut best: Vec<(u64, u64)> = Vec::with_capacity(count + 1);
    for r in (2..=p.saturating_sub(3)).step_by(2) {
        let v = bern[r as usize];
        if best.len() == count && v >= best[count - 1].0 {
            continue;
        }
        let at = best.partition_point(|&e| e <= (v, r));
        best.insert(at, (v, r));
        best.truncate(count);
    }
    best.into_iter().map(|(v, r)| (r, v)).collect()
}

pub fn assemble(ctx: &PrimeContext, b: Vec<u64>, missing: &BTreeMap<u64, u64>) -> ResidueTable {
    let (p, c) = (ctx.p, ctx.c);
    let len = (p - 2) as usize;
    let sm = SmallMod::new(p);
    // slot k holds r = 2k + 2
    let count = len.saturating_sub(2).div_ceil(2);
    let mut denoms = vec![1u64; count];
    let mut unknown = Vec::new();
    for_each_power(sm, sm.mul(c, c), count + 1, |k, c_r| {
        if k > 0 {
            let d = sm.add(c_r, p - 1);
            if d == 0 {
                unknown.push(k - 1);
            } else {
                denoms[k - 1] = d;
            }
        }
    });
    batch_inverse(&mut denoms, p);
    let mut bern = vec![0u64; len];
    for (k, &inv) in denoms.iter().enumerate() {
        let r = 2 * k + 2;
        bern[r] = sm.mul(sm.mul(r as u64, b[r - 1]), inv);
    }
    for k in unknown {
        let r = 2 * k + 2;
        bern[r] = *missing
            .get(&(r as u64))
            .unwrap_or_else(|| panic!("B_{r} mod {p} was not recovered"));
    }
    let irregular = (2..len as u64)
        .step_by(2)
        .filter(|&r| bern[r as usize] == 0)
        .collect();
    let checksum = checksum_of(p, &bern);
    let ten_pairs = smallest_pairs(p, &bern, 10);
    ResidueTable {
        p,
        b,
        bern,
        irregular,
        checksum,
        ten_pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PipelineOptions {
    pub force: Option<Strategy>,
    pub rows: Parallelism,
    /// Recompute with the umbrella path when a Rader checksum fails.
    pub retry_on_checksum_failure: bool,
}

impl PipelineOptions {
    pub fn sequential() -> Self {
        PipelineOptions {
            force: None,
            rows: Parallelism::Sequential,
            retry_on_checksum_failure: true,
        }
    }
}

/// Full table for a prime under a given context.
pub fn compute_table(ctx: &PrimeContext, rows: Parallelism) -> Result<ResidueTable, RaderError> {
    let mut layout = build_layout(ctx);
    horizontal_dfts(ctx, &mut layout, rows)?;
    let b = vertical_in_place(ctx, layout.m, layout.n, layout.d);
    let missing = if ctx.alpha_c < ctx.p - 1 {
        recover_missing(ctx)
    } else {
        BTreeMap::new()
    };
    Ok(assemble(ctx, b, &missing))
}

/// What a scan keeps for each prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrregularRecord {
    pub p: u64,
    pub strategy: Strategy,
    pub rejection: Option<Rejection>,
    pub irregular: Vec<u64>,
    pub ten_pairs: Vec<(u64, u64)>,
    pub checksum_ok: bool,
    /// The first attempt failed its checksum and was redone on the umbrella path.
    pub retried: bool,
}

pub fn compute_irregular(p: u64) -> IrregularRecord {
    compute_irregular_with(p, PipelineOptions::sequential())
}

pub fn compute_irregular_with(p: u64, opts: PipelineOptions) -> IrregularRecord {
    let ctx = classify_with(p, opts.force);
    let (ctx, table, retried) = match compute_table(&ctx, opts.rows) {
        Ok(table) if table.checksum_ok() || ctx.strategy == Strategy::Umbrella => {
            (ctx, table, false)
        }
        Ok(table) if !opts.retry_on_checksum_failure => (ctx, table, false),
        _ => {
            let umbrella = classify_with(p, Some(Strategy::Umbrella));
            let table = compute_table(&umbrella, opts.rows).expect("umbrella path is universal");
            (umbrella, table, true)
        }
    };
    IrregularRecord {
        p,
        strategy: ctx.strategy,
        rejection: ctx.rejection,
        irregular: table.irregular,
        checksum_ok: table.checksum == p - 4,
        ten_pairs: table.ten_pairs,
        retried,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_value_examples() {
        assert_eq!(f_value(2, 131, 1), 1);
        assert_eq!(f_value(3, 7, 1), 2);
        for c in [2u64, 3, 5, 17] {
            for x in 1..131 {
                assert_eq!(f_value(c, 131, 131 - x), -f_value(c, 131, x));
            }
        }
    }

    #[test]
    fn classification_examples() {
        let ctx = classify_prime(131);
        assert_eq!(
            (ctx.strategy, ctx.gamma, ctx.c, ctx.m, ctx.n),
            (Strategy::Rader1, 2, 2, 5, 13)
        );
        let ctx = classify_prime(859);
        assert_eq!((ctx.strategy, ctx.m, ctx.n), (Strategy::Rader2, 3, 143));
        let ctx = classify_prime(11);
        assert_eq!((ctx.strategy, ctx.n), (Strategy::Umbrella, 1));
        assert_eq!(ctx.rejection, Some(Rejection::TrivialRow));
    }

    #[test]
    fn context_invariants() {
        for p in crate::arith::primes_in_range(5, 3000) {
            let ctx = classify_prime(p);
            assert_eq!(2 * ctx.m * ctx.n, p - 1);
            assert_eq!(pow_mod(ctx.omega, ctx.n, p), 1);
            assert_eq!(pow_mod(ctx.theta, 2 * ctx.m, p), 1);
            assert_eq!(mul_mod(ctx.xi, ctx.xi, p), ctx.omega);
            if ctx.strategy == Strategy::Umbrella {
                assert_eq!(ctx.c, ctx.gamma);
            }
        }
    }

    #[test]
    fn small_checksums() {
        for p in [5u64, 7, 11, 13, 37] {
            let ctx = classify_prime(p);
            let table = compute_table(&ctx, Parallelism::Sequential).unwrap();
            assert!(table.checksum_ok(), "p = {p}");
        }
    }

    #[test]
    fn forcing_an_inapplicable_strategy_falls_back() {
        let ctx = classify_with(131, Some(Strategy::Rader2));
        assert_eq!(ctx.strategy, Strategy::Umbrella);
        assert_eq!(ctx.rejection, Some(Rejection::Forced));
    }

    #[test]
    fn power_chains_and_pair_selection() {
        let p = 1009;
        let sm = SmallMod::new(p);
        for count in 0..11 {
            let mut seen = Vec::new();
            for_each_power(sm, 11, count, |k, v| seen.push((k, v)));
            let want: Vec<(usize, u64)> =
                (0..count).map(|k| (k, pow_mod(11, k as u64, p))).collect();
            assert_eq!(seen, want);
        }
        // many ties at residue 0 and 1
        let bern: Vec<u64> = (0..p - 2)
            .map(|r| if r % 2 == 0 { r * r % 7 } else { 0 })
            .collect();
        let mut all: Vec<(u64, u64)> = (2..=p - 3)
            .step_by(2)
            .map(|r| (bern[r as usize], r))
            .collect();
        all.sort_unstable();
        let want: Vec<(u64, u64)> = all.iter().take(10).map(|&(v, r)| (r, v)).collect();
        assert_eq!(smallest_pairs(p, &bern, 10), want);
        assert_eq!(
            smallest_pairs(7, &[0, 0, 5, 0, 3], 10),
            vec![(4, 3), (2, 5)]
        );
    }
}
