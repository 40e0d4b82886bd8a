#![allow(dead_code)]

use krein_core::expr::{BinOp, Constant, Expr, Func};
use proptest::prelude::*;

fn literal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..1000).prop_map(f64::from),
        0.0f64..1e6,
        (1e-12f64..1.0),
        (1e15f64..1e300),
    ]
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        literal().prop_map(Expr::Num),
        Just(Expr::X),
        Just(Expr::Const(Constant::Pi)),
        Just(Expr::Const(Constant::E)),
        Just(Expr::Const(Constant::I)),
    ];
    leaf.prop_recursive(6, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(o, l, r)| Expr::Binary(o, Box::new(l), Box::new(r))),
            (proptest::sample::select(Func::ALL.to_vec()), inner)
                .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
        ]
    })
}

pub fn token_soup() -> impl Strategy<Value = String> {
    let token = proptest::sample::select(vec![
        "x", "1", "2.5", "1e3", "1e", ".", "pi", "e", "i", "+", "-", "*", "/", "^", "(", ")", "sin", "sinh", "conj",
        "log", " ", "foo", "0", "9999999999999999999999", "^-", "((", "))",
    ]);
    proptest::collection::vec(token, 0..40).prop_map(|v| v.concat())
}
