#![allow(dead_code)]

use std::collections::BTreeMap;

use crnkit::expr::{BinaryOp, Builtin, Expr, UnaryOp};
use crnkit::model::ReactionNetwork;
use crnkit::randgen::{random_crn, CountDist, RandomCrnParams};
use proptest::prelude::*;

pub const IDENTS: [&str; 5] = ["a", "b", "c", "x1", "y_2"];

const BINARY: [BinaryOp; 14] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Rem,
    BinaryOp::Pow,
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
    BinaryOp::Eq,
    BinaryOp::Ne,
    BinaryOp::And,
    BinaryOp::Or,
];

const CALLS: [Builtin; 10] = [
    Builtin::Abs,
    Builtin::Min,
    Builtin::Max,
    Builtin::Exp,
    Builtin::Log,
    Builtin::Sqrt,
    Builtin::Pow,
    Builtin::Floor,
    Builtin::Ceil,
    Builtin::If,
];

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..20).prop_map(f64::from),
        (0.0f64..10.0),
        (1e-6f64..1e6),
        Just(0.5),
        Just(1e-300),
    ]
}

/// Deterministic expressions over [`IDENTS`]; numbers are nonnegative since
/// a negative literal prints as a negation.
pub fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        number().prop_map(Expr::num),
        prop::sample::select(IDENTS.to_vec()).prop_map(Expr::ident),
    ];
    leaf.prop_recursive(6, 48, 3, |inner| {
        prop_oneof![
            (prop::bool::ANY, inner.clone()).prop_map(|(neg, e)| {
                Expr::Unary(if neg { UnaryOp::Neg } else { UnaryOp::Not }, Box::new(e))
            }),
            (prop::sample::select(BINARY.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (prop::sample::select(CALLS.to_vec()), prop::collection::vec(inner, 3)).prop_map(|(f, mut args)| {
                args.truncate(f.arity());
                Expr::Call(f, args)
            }),
        ]
    })
}

/// Prints every compound node in parentheses, so the text fixes the tree
/// regardless of precedence rules.
pub fn parenthesized(e: &Expr) -> String {
    match e {
        Expr::Number(v) => format!("{v:?}"),
        Expr::Ident(s) => s.clone(),
        Expr::Unary(UnaryOp::Neg, a) => format!("(-{})", parenthesized(a)),
        Expr::Unary(UnaryOp::Not, a) => format!("(!{})", parenthesized(a)),
        Expr::Binary(op, a, b) => format!("({} {} {})", parenthesized(a), op.symbol(), parenthesized(b)),
        Expr::Call(f, args) => {
            let args: Vec<String> = args.iter().map(parenthesized).collect();
            format!("{}({})", f.name(), args.join(", "))
        }
    }
}

pub fn bindings(values: [f64; 5]) -> BTreeMap<String, f64> {
    IDENTS.iter().map(|s| s.to_string()).zip(values).collect()
}

/// Same value, or both NaN, or both errors.
pub fn same_outcome<E>(a: &Result<f64, E>, b: &Result<f64, E>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

/// Random closed mass-action network whose reactions all have two
/// reactant and two product molecules.
pub fn closed_network(seed: u64, n_species: usize, n_reactions: usize) -> ReactionNetwork {
    let mut p = RandomCrnParams::new(n_species, n_reactions, seed);
    p.reactant_count_dist = CountDist::fixed(2);
    p.product_count_dist = CountDist::fixed(2);
    random_crn(&p).expect("feasible parameters")
}

/// Random open network with influx and efflux reactions.
pub fn open_network(seed: u64) -> ReactionNetwork {
    let mut p = RandomCrnParams::new(5, 6, seed);
    p.influx_ratio = 0.4;
    p.efflux_ratio = 0.4;
    random_crn(&p).expect("feasible parameters")
}
