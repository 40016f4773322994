//! SBML Level 3 Version 1 subset: one compartment, species, reactions with
//! explicit MathML kinetic laws and local parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use super::{inhibitor_param, rate_expr, strip_inhibitors, K_BWD, K_CAT, K_FWD, K_M};
use crate::expr::{fmt_number, BinaryOp, Builtin, Expr, UnaryOp};
use crate::model::{Inhibitor, RateLaw, Reaction, ReactionNetwork, Species, Term};

const SBML_NS: &str = "http://www.sbml.org/sbml/level3/version1/core";
const MATHML_NS: &str = "http://www.w3.org/1998/Math/MathML";
const SBO_CATALYST: &str = "SBO:0000013";
const SBO_INHIBITOR: &str = "SBO:0000020";
const COMPARTMENT: &str = "cell";

/// Elements outside the supported subset.
const UNSUPPORTED: [&str; 8] = [
    "event",
    "rateRule",
    "assignmentRule",
    "algebraicRule",
    "functionDefinition",
    "initialAssignment",
    "constraint",
    "delay",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SbmlError {
    #[error("network is invalid: {0}")]
    InvalidNetwork(String),
    #[error("rate law of '{0}' uses a random function, which SBML cannot express")]
    Random(String),
    #[error("XML error: {0}")]
    Xml(String),
    #[error("unsupported SBML constructs: {}", .0.join(", "))]
    Unsupported(Vec<String>),
    #[error("invalid SBML: {0}")]
    Invalid(String),
}

fn is_sid_char(c: char, first: bool) -> bool {
    c.is_ascii_alphabetic() || c == '_' || (!first && c.is_ascii_digit())
}

fn sanitize(label: &str) -> String {
    let mut id = String::new();
    if !label.starts_with(|c: char| is_sid_char(c, true)) {
        id.push('_');
    }
    id.extend(label.chars().map(|c| if is_sid_char(c, false) { c } else { '_' }));
    id
}

fn reserved(id: &str) -> bool {
    [K_FWD, K_BWD, K_CAT, K_M, COMPARTMENT].contains(&id) || id.starts_with("K_i_")
}

/// Assigns unique SIds to labels in order.
struct Ids {
    used: BTreeSet<String>,
}

impl Ids {
    fn assign(&mut self, label: &str) -> String {
        let base = sanitize(label);
        let mut id = base.clone();
        let mut n = 2;
        while reserved(&id) || self.used.contains(&id) {
            id = format!("{base}_{n}");
            n += 1;
        }
        self.used.insert(id.clone());
        id
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn num(v: f64) -> String {
    fmt_number(v)
}

pub fn export_sbml(network: &ReactionNetwork) -> Result<String, SbmlError> {
    if let Some(v) = network.validate().first() {
        return Err(SbmlError::InvalidNetwork(v.to_string()));
    }
    let mut ids = Ids { used: BTreeSet::new() };
    let model_id = sanitize(&network.name);
    let species_ids: BTreeMap<&str, String> = network
        .species
        .iter()
        .map(|s| (s.label.as_str(), ids.assign(&s.label)))
        .collect();
    let reaction_ids: Vec<String> = network.reactions.iter().map(|r| ids.assign(&r.label)).collect();

    let mut o = String::new();
    o.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(o, "<sbml xmlns=\"{SBML_NS}\" level=\"3\" version=\"1\">").unwrap();
    writeln!(o, "  <model id=\"{model_id}\" name=\"{}\">", esc(&network.name)).unwrap();
    o.push_str("    <listOfCompartments>\n");
    writeln!(o, "      <compartment id=\"{COMPARTMENT}\" spatialDimensions=\"3\" size=\"1\" constant=\"true\"/>").unwrap();
    o.push_str("    </listOfCompartments>\n");
    if !network.species.is_empty() {
        o.push_str("    <listOfSpecies>\n");
        for s in &network.species {
            writeln!(
                o,
                "      <species id=\"{}\" name=\"{}\" compartment=\"{COMPARTMENT}\" initialConcentration=\"{}\" hasOnlySubstanceUnits=\"false\" boundaryCondition=\"false\" constant=\"false\"/>",
                species_ids[s.label.as_str()],
                esc(&s.label),
                num(s.initial)
            )
            .unwrap();
        }
        o.push_str("    </listOfSpecies>\n");
    }
    if !network.reactions.is_empty() {
        o.push_str("    <listOfReactions>\n");
        for (r, rid) in network.reactions.iter().zip(&reaction_ids) {
            if let RateLaw::Custom { expression } = &r.rate {
                if expression.is_random() {
                    return Err(SbmlError::Random(r.label.clone()));
                }
            }
            writeln!(
                o,
                "      <reaction id=\"{rid}\" name=\"{}\" reversible=\"{}\">",
                esc(&r.label),
                r.bidirectional
            )
            .unwrap();
            for (tag, terms) in [("listOfReactants", &r.reactants), ("listOfProducts", &r.products)] {
                if terms.is_empty() {
                    continue;
                }
                writeln!(o, "        <{tag}>").unwrap();
                for t in terms {
                    writeln!(
                        o,
                        "          <speciesReference species=\"{}\" stoichiometry=\"{}\" constant=\"true\"/>",
                        species_ids[t.species.as_str()],
                        t.stoich
                    )
                    .unwrap();
                }
                writeln!(o, "        </{tag}>").unwrap();
            }
            if !r.catalysts.is_empty() || !r.inhibitors.is_empty() {
                o.push_str("        <listOfModifiers>\n");
                let mods = r
                    .catalysts
                    .iter()
                    .map(|c| (c, SBO_CATALYST))
                    .chain(r.inhibitors.iter().map(|i| (&i.species, SBO_INHIBITOR)));
                for (s, sbo) in mods {
                    writeln!(
                        o,
                        "          <modifierSpeciesReference species=\"{}\" sboTerm=\"{sbo}\"/>",
                        species_ids[s.as_str()]
                    )
                    .unwrap();
                }
                o.push_str("        </listOfModifiers>\n");
            }
            let params = std::cell::RefCell::new(Vec::new());
            let law = rate_expr(
                r,
                &|name, value| {
                    params.borrow_mut().push((name.to_string(), value));
                    Expr::ident(name)
                },
                &|label| species_ids[label].clone(),
            );
            o.push_str("        <kineticLaw>\n");
            writeln!(o, "          <math xmlns=\"{MATHML_NS}\">").unwrap();
            write_mathml(&law, 12, &mut o);
            o.push_str("          </math>\n");
            let mut params = params.into_inner();
            params.dedup_by(|a, b| a.0 == b.0);
            if !params.is_empty() {
                o.push_str("          <listOfLocalParameters>\n");
                for (name, value) in params {
                    writeln!(o, "            <localParameter id=\"{name}\" value=\"{}\"/>", num(value)).unwrap();
                }
                o.push_str("          </listOfLocalParameters>\n");
            }
            o.push_str("        </kineticLaw>\n");
            o.push_str("      </reaction>\n");
        }
        o.push_str("    </listOfReactions>\n");
    }
    o.push_str("  </model>\n</sbml>\n");
    Ok(o)
}

fn write_mathml(e: &Expr, indent: usize, o: &mut String) {
    let pad = " ".repeat(indent);
    let apply = |op: &str, args: &[&Expr], o: &mut String| {
        writeln!(o, "{pad}<apply>").unwrap();
        writeln!(o, "{pad}  <{op}/>").unwrap();
        for a in args {
            write_mathml(a, indent + 2, o);
        }
        writeln!(o, "{pad}</apply>").unwrap();
    };
    match e {
        Expr::Number(v) => writeln!(o, "{pad}<cn> {} </cn>", num(*v)).unwrap(),
        Expr::Ident(id) => writeln!(o, "{pad}<ci> {id} </ci>").unwrap(),
        Expr::Unary(UnaryOp::Neg, a) => apply("minus", &[a], o),
        Expr::Unary(UnaryOp::Not, a) => apply("not", &[a], o),
        Expr::Binary(op, a, b) => {
            let tag = match op {
                BinaryOp::Add => "plus",
                BinaryOp::Sub => "minus",
                BinaryOp::Mul => "times",
                BinaryOp::Div => "divide",
                BinaryOp::Rem => "rem",
                BinaryOp::Pow => "power",
                BinaryOp::Lt => "lt",
                BinaryOp::Le => "leq",
                BinaryOp::Gt => "gt",
                BinaryOp::Ge => "geq",
                BinaryOp::Eq => "eq",
                BinaryOp::Ne => "neq",
                BinaryOp::And => "and",
                BinaryOp::Or => "or",
            };
            apply(tag, &[a, b], o);
        }
        Expr::Call(Builtin::If, args) => {
            writeln!(o, "{pad}<piecewise>").unwrap();
            writeln!(o, "{pad}  <piece>").unwrap();
            write_mathml(&args[1], indent + 4, o);
            write_mathml(&args[0], indent + 4, o);
            writeln!(o, "{pad}  </piece>").unwrap();
            writeln!(o, "{pad}  <otherwise>").unwrap();
            write_mathml(&args[2], indent + 4, o);
            writeln!(o, "{pad}  </otherwise>").unwrap();
            writeln!(o, "{pad}</piecewise>").unwrap();
        }
        Expr::Call(f, args) => {
            let tag = match f {
                Builtin::Abs => "abs",
                Builtin::Min => "min",
                Builtin::Max => "max",
                Builtin::Exp => "exp",
                Builtin::Log => "ln",
                Builtin::Sqrt => "root",
                Builtin::Pow => "power",
                Builtin::Floor => "floor",
                Builtin::Ceil => "ceiling",
                other => unreachable!("{} is rejected before export", other.name()),
            };
            let refs: Vec<&Expr> = args.iter().collect();
            apply(tag, &refs, o);
        }
    }
}

// ---------------------------------------------------------------------------
// import

fn invalid(msg: impl Into<String>) -> SbmlError {
    SbmlError::Invalid(msg.into())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn elements<'a, 'i>(node: Node<'a, 'i>, list: &str, item: &str) -> Vec<Node<'a, 'i>> {
    child(node, list)
        .map(|l| l.children().filter(|c| c.is_element() && c.tag_name().name() == item).collect())
        .unwrap_or_default()
}

fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, SbmlError> {
    node.attribute(name)
        .ok_or_else(|| invalid(format!("<{}> lacks attribute '{name}'", node.tag_name().name())))
}

fn float_attr(node: Node, name: &str) -> Result<Option<f64>, SbmlError> {
    node.attribute(name)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("attribute {name}=\"{v}\" is not a number")))
        })
        .transpose()
}

fn mathml(node: Node) -> Result<Expr, SbmlError> {
    let kids: Vec<Node> = node.children().filter(|c| c.is_element()).collect();
    let text = || node.text().unwrap_or("").trim().to_string();
    match node.tag_name().name() {
        "math" => match kids.as_slice() {
            [one] => mathml(*one),
            _ => Err(invalid("<math> must hold exactly one expression")),
        },
        "cn" => {
            let v = if node.attribute("type") == Some("e-notation") {
                let parts: Vec<&str> = node.children().filter(|c| c.is_text()).filter_map(|c| c.text()).collect();
                let [m, e] = parts.as_slice() else {
                    return Err(invalid("malformed e-notation <cn>"));
                };
                format!("{}e{}", m.trim(), e.trim())
            } else {
                text()
            };
            v.parse::<f64>().map(Expr::num).map_err(|_| invalid(format!("bad number '{v}'")))
        }
        "ci" => Ok(Expr::ident(text())),
        "true" => Ok(Expr::num(1.0)),
        "false" => Ok(Expr::num(0.0)),
        "pi" => Ok(Expr::num(std::f64::consts::PI)),
        "exponentiale" => Ok(Expr::num(std::f64::consts::E)),
        "piecewise" => {
            let mut otherwise = None;
            let mut pieces = Vec::new();
            for k in &kids {
                let parts: Vec<Node> = k.children().filter(|c| c.is_element()).collect();
                match (k.tag_name().name(), parts.as_slice()) {
                    ("piece", [value, cond]) => pieces.push((mathml(*value)?, mathml(*cond)?)),
                    ("otherwise", [value]) => otherwise = Some(mathml(*value)?),
                    _ => return Err(invalid("malformed <piecewise>")),
                }
            }
            let mut e = otherwise.unwrap_or(Expr::num(0.0));
            for (value, cond) in pieces.into_iter().rev() {
                e = Expr::Call(Builtin::If, vec![cond, value, e]);
            }
            Ok(e)
        }
        "apply" => {
            let (op, args) = kids.split_first().ok_or_else(|| invalid("empty <apply>"))?;
            let args = args.iter().map(|a| mathml(*a)).collect::<Result<Vec<_>, _>>()?;
            apply_op(op.tag_name().name(), args)
        }
        other => Err(SbmlError::Unsupported(vec![format!("MathML <{other}>")])),
    }
}

fn apply_op(op: &str, mut args: Vec<Expr>) -> Result<Expr, SbmlError> {
    let n = args.len();
    let arity = |want: usize| {
        if n == want {
            Ok(())
        } else {
            Err(invalid(format!("<{op}> takes {want} arguments, got {n}")))
        }
    };
    let fold = |op: BinaryOp, args: Vec<Expr>, empty: f64| {
        args.into_iter()
            .reduce(|a, b| Expr::binary(op, a, b))
            .unwrap_or(Expr::num(empty))
    };
    let binary = |bop: BinaryOp, mut args: Vec<Expr>| -> Result<Expr, SbmlError> {
        arity(2)?;
        let b = args.pop().unwrap();
        let a = args.pop().unwrap();
        Ok(Expr::binary(bop, a, b))
    };
    let call = |f: Builtin, args: Vec<Expr>| -> Result<Expr, SbmlError> {
        arity(f.arity())?;
        Ok(Expr::Call(f, args))
    };
    match op {
        "plus" => Ok(fold(BinaryOp::Add, args, 0.0)),
        "times" => Ok(fold(BinaryOp::Mul, args, 1.0)),
        "and" => Ok(fold(BinaryOp::And, args, 1.0)),
        "or" => Ok(fold(BinaryOp::Or, args, 0.0)),
        "minus" if n == 1 => Ok(Expr::Unary(UnaryOp::Neg, Box::new(args.pop().unwrap()))),
        "not" => {
            arity(1)?;
            Ok(Expr::Unary(UnaryOp::Not, Box::new(args.pop().unwrap())))
        }
        "minus" => binary(BinaryOp::Sub, args),
        "divide" => binary(BinaryOp::Div, args),
        "rem" => binary(BinaryOp::Rem, args),
        "power" => binary(BinaryOp::Pow, args),
        "lt" => binary(BinaryOp::Lt, args),
        "leq" => binary(BinaryOp::Le, args),
        "gt" => binary(BinaryOp::Gt, args),
        "geq" => binary(BinaryOp::Ge, args),
        "eq" => binary(BinaryOp::Eq, args),
        "neq" => binary(BinaryOp::Ne, args),
        "abs" => call(Builtin::Abs, args),
        "exp" => call(Builtin::Exp, args),
        "ln" => call(Builtin::Log, args),
        "root" => call(Builtin::Sqrt, args),
        "floor" => call(Builtin::Floor, args),
        "ceiling" => call(Builtin::Ceil, args),
        "min" => call(Builtin::Min, args),
        "max" => call(Builtin::Max, args),
        other => Err(SbmlError::Unsupported(vec![format!("MathML <{other}>")])),
    }
}

/// Replaces identifiers found in `values` by their numbers.
fn substitute(e: &Expr, values: &BTreeMap<String, f64>) -> Expr {
    match e {
        Expr::Ident(id) => values.get(id).map_or_else(|| e.clone(), |v| Expr::num(*v)),
        Expr::Number(_) => e.clone(),
        Expr::Unary(op, a) => Expr::Unary(*op, Box::new(substitute(a, values))),
        Expr::Binary(op, a, b) => Expr::binary(*op, substitute(a, values), substitute(b, values)),
        Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| substitute(a, values)).collect()),
    }
}

/// Reads the supported SBML subset. Mass-action and Michaelis-Menten laws
/// written the way [`export_sbml`] writes them come back as such; any other
/// kinetic law becomes a custom rate with parameters inlined.
pub fn import_sbml(text: &str) -> Result<ReactionNetwork, SbmlError> {
    let doc = Document::parse(text).map_err(|e| SbmlError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "sbml" {
        return Err(invalid("root element is not <sbml>"));
    }
    let mut unsupported: Vec<String> = Vec::new();
    for n in root.descendants().filter(|n| n.is_element()) {
        let name = n.tag_name().name();
        if UNSUPPORTED.contains(&name) && !unsupported.iter().any(|u| u == name) {
            unsupported.push(name.to_string());
        }
    }
    if !unsupported.is_empty() {
        return Err(SbmlError::Unsupported(unsupported));
    }
    let model = child(root, "model").ok_or_else(|| invalid("no <model>"))?;
    let name = model.attribute("name").or(model.attribute("id")).unwrap_or("imported").to_string();

    let mut globals: BTreeMap<String, f64> = BTreeMap::new();
    let mut sizes: BTreeMap<String, f64> = BTreeMap::new();
    for c in elements(model, "listOfCompartments", "compartment") {
        let size = float_attr(c, "size")?.unwrap_or(1.0);
        sizes.insert(attr(c, "id")?.to_string(), size);
        globals.insert(attr(c, "id")?.to_string(), size);
    }
    for p in elements(model, "listOfParameters", "parameter") {
        let v = float_attr(p, "value")?.ok_or_else(|| invalid("global parameter without value"))?;
        globals.insert(attr(p, "id")?.to_string(), v);
    }

    let mut labels: BTreeMap<String, String> = BTreeMap::new();
    let mut species = Vec::new();
    for s in elements(model, "listOfSpecies", "species") {
        let id = attr(s, "id")?;
        let label = s.attribute("name").unwrap_or(id).to_string();
        let size = s.attribute("compartment").and_then(|c| sizes.get(c)).copied().unwrap_or(1.0);
        let initial = match (float_attr(s, "initialConcentration")?, float_attr(s, "initialAmount")?) {
            (Some(c), _) => c,
            (None, Some(a)) => a / size,
            (None, None) => 0.0,
        };
        labels.insert(id.to_string(), label.clone());
        species.push(Species::with_initial(label, initial));
    }
    let label_of = |id: &str| -> Result<String, SbmlError> {
        labels
            .get(id)
            .cloned()
            .ok_or_else(|| invalid(format!("unknown species '{id}'")))
    };

    let mut reactions = Vec::new();
    for r in elements(model, "listOfReactions", "reaction") {
        let id = attr(r, "id")?;
        let label = r.attribute("name").unwrap_or(id).to_string();
        let terms = |list: &str| -> Result<Vec<Term>, SbmlError> {
            elements(r, list, "speciesReference")
                .into_iter()
                .map(|t| {
                    let stoich = float_attr(t, "stoichiometry")?.unwrap_or(1.0);
                    if stoich < 1.0 || stoich.fract() != 0.0 {
                        return Err(invalid(format!("reaction '{id}': stoichiometry {stoich} is not a positive integer")));
                    }
                    Ok(Term::new(label_of(attr(t, "species")?)?, stoich as u32))
                })
                .collect()
        };
        let reactants = terms("listOfReactants")?;
        let products = terms("listOfProducts")?;
        let law = child(r, "kineticLaw").ok_or_else(|| invalid(format!("reaction '{id}' has no kinetic law")))?;
        let math = child(law, "math")
            .filter(|m| m.tag_name().namespace() == Some(MATHML_NS))
            .ok_or_else(|| invalid(format!("reaction '{id}' kinetic law has no MathML")))?;
        let expr = mathml(math)?;
        let mut locals: BTreeMap<String, f64> = BTreeMap::new();
        for list in ["listOfLocalParameters", "listOfParameters"] {
            for item in ["localParameter", "parameter"] {
                for p in elements(law, list, item) {
                    let v = float_attr(p, "value")?.ok_or_else(|| invalid("local parameter without value"))?;
                    locals.insert(attr(p, "id")?.to_string(), v);
                }
            }
        }
        let mut catalysts = Vec::new();
        let mut inhibitor_ids = Vec::new();
        for m in elements(r, "listOfModifiers", "modifierSpeciesReference") {
            let sid = attr(m, "species")?;
            if m.attribute("sboTerm") == Some(SBO_INHIBITOR) {
                inhibitor_ids.push(sid.to_string());
            } else {
                catalysts.push(label_of(sid)?);
            }
        }
        let inhibitors: Option<Vec<Inhibitor>> = inhibitor_ids
            .iter()
            .enumerate()
            .map(|(i, sid)| {
                Some(Inhibitor {
                    species: label_of(sid).ok()?,
                    k_i: *locals.get(&inhibitor_param(i))?,
                })
            })
            .collect();
        let reversible = r.attribute("reversible") == Some("true");
        let skeleton = Reaction {
            label,
            reactants,
            products,
            catalysts,
            inhibitors: inhibitors.clone().unwrap_or_default(),
            rate: RateLaw::mass_action(0.0),
            bidirectional: reversible,
        };
        reactions.push(recognise(skeleton, expr, &locals, &globals, &labels, inhibitors.is_some())?);
    }
    Ok(ReactionNetwork {
        name,
        species,
        reactions,
        parent: None,
    })
}

fn recognise(
    skeleton: Reaction,
    expr: Expr,
    locals: &BTreeMap<String, f64>,
    globals: &BTreeMap<String, f64>,
    labels: &BTreeMap<String, String>,
    inhibitors_known: bool,
) -> Result<Reaction, SbmlError> {
    let ids: BTreeMap<&str, &str> = labels.iter().map(|(id, l)| (l.as_str(), id.as_str())).collect();
    let id_of = |label: &str| ids.get(label).map_or(label.to_string(), |s| s.to_string());
    let rebuilt = |r: &Reaction| rate_expr(r, &|name, _| Expr::ident(name), &id_of);
    let local = |name: &str| locals.get(name).copied();

    if inhibitors_known {
        if let Some(k_fwd) = local(K_FWD) {
            let k_bwd = local(K_BWD);
            let candidate = Reaction {
                rate: RateLaw::MassAction { k_fwd, k_bwd },
                bidirectional: skeleton.bidirectional && k_bwd.is_some(),
                ..skeleton.clone()
            };
            if rebuilt(&candidate) == expr {
                return Ok(candidate);
            }
        }
        if let (Some(k_cat), Some(k_m)) = (local(K_CAT), local(K_M)) {
            if skeleton.reactants.len() == 1 && skeleton.reactants[0].stoich == 1 && skeleton.catalysts.len() == 1 {
                let candidate = Reaction {
                    rate: RateLaw::MichaelisMenten { k_cat, k_m },
                    bidirectional: false,
                    ..skeleton.clone()
                };
                if rebuilt(&candidate) == expr {
                    return Ok(candidate);
                }
            }
        }
    }

    // Custom law: peel our own inhibitor factors, then inline parameters.
    let mut inner = expr.clone();
    let mut inhibitors = Vec::new();
    if inhibitors_known && !skeleton.inhibitors.is_empty() {
        let factors: Vec<Expr> = skeleton
            .inhibitors
            .iter()
            .enumerate()
            .map(|(i, inh)| {
                let k = Expr::ident(inhibitor_param(i));
                Expr::binary(BinaryOp::Div, k.clone(), Expr::binary(BinaryOp::Add, k, Expr::ident(id_of(&inh.species))))
            })
            .collect();
        if let Some(stripped) = strip_inhibitors(expr, &factors) {
            inner = stripped;
            inhibitors = skeleton.inhibitors.clone();
        }
    }
    let mut values = globals.clone();
    values.extend(locals.iter().map(|(k, v)| (k.clone(), *v)));
    for id in labels.keys() {
        values.remove(id);
    }
    let inlined = substitute(&inner, &values).rename(&|id| labels.get(id).cloned().unwrap_or_else(|| id.to_string()));
    Ok(Reaction {
        rate: RateLaw::Custom { expression: inlined },
        inhibitors,
        bidirectional: false,
        ..skeleton
    })
}
