//! File formats: SBML, Matlab/Octave scripts, CSV traces and project files.

pub mod csv;
pub mod project;
pub mod sbml;
pub mod script;

use crate::expr::{BinaryOp, Expr};
use crate::model::{RateLaw, Reaction, Term};

/// Local parameter names used in exported kinetic laws.
pub const K_FWD: &str = "k_fwd";
pub const K_BWD: &str = "k_bwd";
pub const K_CAT: &str = "k_cat";
pub const K_M: &str = "K_m";

pub fn inhibitor_param(i: usize) -> String {
    format!("K_i_{}", i + 1)
}

fn product(factors: impl IntoIterator<Item = Expr>) -> Option<Expr> {
    factors
        .into_iter()
        .reduce(|acc, f| Expr::binary(BinaryOp::Mul, acc, f))
}

fn mass_term(terms: &[Term], species: impl Fn(&str) -> Expr) -> Vec<Expr> {
    terms
        .iter()
        .map(|t| match t.stoich {
            1 => species(&t.species),
            n => Expr::binary(BinaryOp::Pow, species(&t.species), Expr::num(n as f64)),
        })
        .collect()
}

/// Rate of `r` as an expression, matching what the simulator integrates.
///
/// `param(name, value)` renders a rate constant and `species(label)` names
/// a concentration, so the same builder serves inline numbers and named
/// parameters.
pub fn rate_expr(r: &Reaction, param: &dyn Fn(&str, f64) -> Expr, name_of: &dyn Fn(&str) -> String) -> Expr {
    let species = |label: &str| Expr::ident(name_of(label));
    let base = match &r.rate {
        RateLaw::MassAction { k_fwd, k_bwd } => {
            let mut factors = vec![param(K_FWD, *k_fwd)];
            factors.extend(mass_term(&r.reactants, species));
            let fwd = product(factors).expect("nonempty");
            let net = match (r.bidirectional, k_bwd) {
                (true, Some(kb)) => {
                    let mut back = vec![param(K_BWD, *kb)];
                    back.extend(mass_term(&r.products, species));
                    Expr::binary(BinaryOp::Sub, fwd, product(back).expect("nonempty"))
                }
                _ => fwd,
            };
            let mut factors = vec![net];
            factors.extend(r.catalysts.iter().map(|c| species(c)));
            product(factors).expect("nonempty")
        }
        RateLaw::MichaelisMenten { k_cat, k_m } => {
            let s = species(&r.reactants[0].species);
            let num = product([param(K_CAT, *k_cat), species(&r.catalysts[0]), s.clone()]).expect("nonempty");
            Expr::binary(BinaryOp::Div, num, Expr::binary(BinaryOp::Add, param(K_M, *k_m), s))
        }
        RateLaw::Custom { expression } => expression.rename(name_of),
    };
    let mut factors = vec![base];
    for (i, inh) in r.inhibitors.iter().enumerate() {
        let k = param(&inhibitor_param(i), inh.k_i);
        factors.push(Expr::binary(
            BinaryOp::Div,
            k.clone(),
            Expr::binary(BinaryOp::Add, k, species(&inh.species)),
        ));
    }
    product(factors).expect("nonempty")
}

/// Inverse of the inhibitor factors appended by [`rate_expr`]: strips them
/// from the right if they match, returning the inner expression.
pub(crate) fn strip_inhibitors(mut e: Expr, factors: &[Expr]) -> Option<Expr> {
    for f in factors.iter().rev() {
        match e {
            Expr::Binary(BinaryOp::Mul, a, b) if *b == *f => e = *a,
            _ => return None,
        }
    }
    Some(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Inhibitor, ReactionNetwork, Species};
    use crate::sim::Rhs;
    use std::collections::BTreeMap;

    #[test]
    fn rate_expression_matches_simulator() {
        let mut rev = Reaction::reversible("rev", &[("A", 2)], &[("B", 1)], 0.7, 0.2);
        rev.catalysts.push("E".into());
        rev.inhibitors.push(Inhibitor {
            species: "I".into(),
            k_i: 0.4,
        });
        let mut custom = Reaction::mass_action("c", &[("A", 1)], &[], 1.0);
        custom.rate = RateLaw::Custom {
            expression: crate::expr::parse("A * B / (1 + E)").unwrap(),
        };
        let net = ReactionNetwork {
            name: "n".into(),
            species: ["A", "B", "E", "I", "P"].iter().map(|s| Species::new(*s)).collect(),
            reactions: vec![
                rev,
                custom,
                Reaction::michaelis_menten("mm", "A", "E", "P", 2.0, 0.5),
            ],
            parent: None,
        };
        let rhs = Rhs::new(&net).unwrap();
        let x = [0.3, 1.7, 0.9, 0.25, 0.0];
        let env: BTreeMap<String, f64> = net.species_labels().into_iter().zip(x).collect();
        for (j, r) in net.reactions.iter().enumerate() {
            let e = rate_expr(r, &|_, v| Expr::num(v), &|s| s.to_string());
            let want = rhs.rate(j, &x).unwrap();
            assert!((e.eval(&env, None).unwrap() - want).abs() < 1e-14, "{}", r.label);
        }
    }
}
