//! The p = 131 worked example: gamma = 2, c = 2, m = 5, n = 13, row 3.

mod common;

use common::*;
use irregular::arith::lift_centered;
use irregular::pipeline::{build_layout, classify_prime, classify_with, Strategy};
use irregular::rader::{build_rader_plan, gen_geometric};
use irregular::umbrella::{lifted_u, lifted_v, prepare_v};

#[test]
fn umbrella_polynomials() {
    let ctx = classify_with(TOY_P, Some(Strategy::Umbrella));
    assert_eq!((ctx.gamma, ctx.c, ctx.m, ctx.n), (2, 2, 5, 13));
    let scratch = prepare_v(TOY_P, 13, ctx.xi).unwrap();
    assert_eq!(lifted_u(&scratch, &umbrella_row(&ctx, TOY_ROW)), TOY_UMBRELLA_U);
    assert_eq!(lifted_v(ctx.xi, TOY_P, 13), TOY_UMBRELLA_V);
}

#[test]
fn rader_polynomials() {
    let ctx = classify_prime(TOY_P);
    assert_eq!(ctx.strategy, Strategy::Rader1);
    assert_eq!(ctx.omega, TOY_P - 19);
    let plan = build_rader_plan(13).unwrap();
    assert_eq!((plan.z, plan.m_exp, plan.y), (2, 1, 2));
    let layout = build_layout(&ctx);
    let row = layout.row(TOY_ROW);
    let u: Vec<i64> = plan.perm_in.iter().map(|&k| row[k as usize]).collect();
    assert_eq!(u, TOY_RADER_U);
    let v: Vec<i64> = gen_geometric(ctx.omega, TOY_P, &plan, 12)
        .into_iter()
        .map(|x| lift_centered(x, TOY_P))
        .collect();
    assert_eq!(v, TOY_RADER_V);
}
