//! Matlab and Octave ODE scripts.

use std::fmt::Write as _;

use thiserror::Error;

use super::rate_expr;
use crate::expr::{fmt_number, BinaryOp, Builtin, Expr, UnaryOp};
use crate::model::{RateLaw, ReactionNetwork};
use crate::sim::Rhs;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dialect {
    Matlab,
    Octave,
}

impl Dialect {
    fn name(self) -> &'static str {
        match self {
            Dialect::Matlab => "MATLAB",
            Dialect::Octave => "GNU Octave",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("network is invalid: {0}")]
    InvalidNetwork(String),
    #[error("rate law of '{0}' uses a random function; scripts must be deterministic")]
    Random(String),
}

fn number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "Inf" } else { "(-Inf)" }.into()
    } else if v < 0.0 {
        format!("({})", fmt_number(v))
    } else {
        fmt_number(v)
    }
}

/// Fully parenthesized Matlab syntax.
fn write_m(e: &Expr, o: &mut String, var: &dyn Fn(&str) -> String) {
    match e {
        Expr::Number(v) => o.push_str(&number(*v)),
        Expr::Ident(id) => o.push_str(&var(id)),
        Expr::Unary(op, a) => {
            o.push_str(if *op == UnaryOp::Neg { "-(" } else { "~(" });
            write_m(a, o, var);
            o.push(')');
        }
        Expr::Binary(BinaryOp::Rem, a, b) => {
            o.push_str("rem(");
            write_m(a, o, var);
            o.push_str(", ");
            write_m(b, o, var);
            o.push(')');
        }
        Expr::Binary(op, a, b) => {
            let sym = match op {
                BinaryOp::Ne => "~=",
                BinaryOp::And => "&&",
                BinaryOp::Or => "||",
                other => other.symbol(),
            };
            o.push('(');
            write_m(a, o, var);
            write!(o, " {sym} ").unwrap();
            write_m(b, o, var);
            o.push(')');
        }
        Expr::Call(Builtin::If, args) => {
            // Branch-free select: cond * a + ~cond * b.
            o.push_str("((");
            write_m(&args[0], o, var);
            o.push_str(") * (");
            write_m(&args[1], o, var);
            o.push_str(") + ~(");
            write_m(&args[0], o, var);
            o.push_str(") * (");
            write_m(&args[2], o, var);
            o.push_str("))");
        }
        Expr::Call(f, args) => {
            let name = match f {
                Builtin::Pow => "power",
                Builtin::Ceil => "ceil",
                other => other.name(),
            };
            o.push_str(name);
            o.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    o.push_str(", ");
                }
                write_m(a, o, var);
            }
            o.push(')');
        }
    }
}

/// Emits a self-contained script: initial conditions, the right-hand side
/// as an anonymous function of `(t, x)`, and a solver call over `[0, t_end]`.
pub fn export_script(network: &ReactionNetwork, dialect: Dialect, t_end: f64) -> Result<String, ScriptError> {
    for r in &network.reactions {
        if let RateLaw::Custom { expression } = &r.rate {
            if expression.is_random() {
                return Err(ScriptError::Random(r.label.clone()));
            }
        }
    }
    let rhs = Rhs::new(network).map_err(|e| ScriptError::InvalidNetwork(e.to_string()))?;
    let labels = rhs.labels();
    let index = |label: &str| labels.iter().position(|l| l == label).map(|i| i + 1);
    let var = |id: &str| match index(id) {
        Some(i) => format!("x({i})"),
        None => id.to_string(),
    };
    let rates: Vec<Expr> = network
        .reactions
        .iter()
        .map(|r| rate_expr(r, &|_, v| Expr::num(v), &|s| s.to_string()))
        .collect();
    let nu = rhs.stoichiometry();

    let mut o = String::new();
    writeln!(o, "% {}: mass-action ODE model for {}", network.name, dialect.name()).unwrap();
    for (i, l) in labels.iter().enumerate() {
        writeln!(o, "% x({}) = {l}", i + 1).unwrap();
    }
    let init: Vec<String> = network.initial_state().iter().map(|v| number(*v)).collect();
    writeln!(o, "x0 = [{}];", init.join("; ")).unwrap();
    writeln!(o, "tspan = [0, {}];", number(t_end)).unwrap();
    o.push_str("rhs = @(t, x) [ ...\n");
    for (i, row) in nu.iter().enumerate() {
        let mut line = String::new();
        for (j, &c) in row.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut term = String::new();
            write_m(&rates[j], &mut term, &var);
            let sign = if c < 0.0 { "-" } else { "+" };
            let mag = c.abs();
            let term = if mag == 1.0 { term } else { format!("{} * {term}", number(mag)) };
            if line.is_empty() {
                line = if c < 0.0 { format!("-{term}") } else { term };
            } else {
                write!(line, " {sign} {term}").unwrap();
            }
        }
        if line.is_empty() {
            line.push('0');
        }
        writeln!(o, "  {line}; ... % d{}/dt", labels[i]).unwrap();
    }
    o.push_str("];\n");
    match dialect {
        Dialect::Matlab => o.push_str("[t, x] = ode45(rhs, tspan, x0);\n"),
        Dialect::Octave => {
            o.push_str("t = linspace(tspan(1), tspan(2), 101)'; x = lsode(@(x, t) rhs(t, x), x0, t);\n")
        }
    }
    Ok(o)
}
