//! DNA strand displacement: CRN-to-DSD transformation, a small Visual DSD
//! syntax subset, and SVG rendering of strand structures.
//!
//! Structure grammar:
//!
//! ```text
//! structure = { ws } segment { { ws } segment } { ws } ;
//! segment   = "<" domains ">"      (* upper overhang *)
//!           | "{" domains "}"      (* lower overhang *)
//!           | "[" domains "]" ;    (* duplex *)
//! domains   = { ws } domain { ws+ domain } { ws } ;
//! domain    = name [ "^" ] [ "*" ] ;
//! name      = ( letter | digit | "_" ) { letter | digit | "_" } ;
//! ```
//!
//! Numeric names are domain ids as written. Other names get fresh ids above
//! every numeric id in the same document, in first-appearance order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RateLaw, Reaction, ReactionNetwork, Species, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DsdError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("empty strand at byte {offset}")]
    EmptyStrand { offset: usize },
    #[error("domain {0} used both as toehold and as long domain")]
    InconsistentToehold(u32),
    #[error("reaction '{reaction}' cannot be transformed: {reason}")]
    Unsupported { reaction: String, reason: String },
    #[error("invalid transform parameters: {0}")]
    Parameters(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Domain {
    pub id: u32,
    pub toehold: bool,
    pub complemented: bool,
}

impl Domain {
    pub fn long(id: u32) -> Self {
        Domain {
            id,
            toehold: false,
            complemented: false,
        }
    }

    pub fn toehold(id: u32) -> Self {
        Domain {
            toehold: true,
            ..Domain::long(id)
        }
    }

    pub fn complement(self) -> Self {
        Domain {
            complemented: !self.complemented,
            ..self
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        if self.toehold {
            f.write_str("^")?;
        }
        if self.complemented {
            f.write_str("*")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "domains", rename_all = "snake_case")]
pub enum Segment {
    UpperOverhang(Vec<Domain>),
    LowerOverhang(Vec<Domain>),
    Duplex(Vec<Domain>),
}

impl Segment {
    pub fn domains(&self) -> &[Domain] {
        match self {
            Segment::UpperOverhang(d) | Segment::LowerOverhang(d) | Segment::Duplex(d) => d,
        }
    }

    fn brackets(&self) -> (char, char) {
        match self {
            Segment::UpperOverhang(_) => ('<', '>'),
            Segment::LowerOverhang(_) => ('{', '}'),
            Segment::Duplex(_) => ('[', ']'),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Signal,
    Fuel,
    /// Short-lived gate or strand formed mid-displacement.
    Intermediate,
    Waste,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsdSpecies {
    pub name: String,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub role: Role,
}

impl DsdSpecies {
    pub fn new(name: impl Into<String>, segments: Vec<Segment>, role: Role) -> Self {
        DsdSpecies {
            name: name.into(),
            segments,
            role,
        }
    }

    pub fn structure(&self) -> String {
        let mut out = String::new();
        for s in &self.segments {
            let (open, close) = s.brackets();
            out.push(open);
            for (i, d) in s.domains().iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{d}").unwrap();
            }
            out.push(close);
        }
        out
    }

    pub fn domain_count(&self) -> usize {
        self.segments.iter().map(|s| s.domains().len()).sum()
    }

    /// Strands making up the complex: the bottom strand plus one top strand
    /// per maximal run of upper/duplex segments, or 1 for a single strand.
    pub fn strand_count(&self) -> usize {
        let has_bottom = self.segments.iter().any(|s| !matches!(s, Segment::UpperOverhang(_)));
        let has_top = self.segments.iter().any(|s| !matches!(s, Segment::LowerOverhang(_)));
        usize::from(has_bottom) + usize::from(has_top)
    }

    fn check(&self) -> Result<(), DsdError> {
        if self.segments.is_empty() {
            return Err(DsdError::EmptyStrand { offset: 0 });
        }
        let mut kinds: BTreeMap<u32, bool> = BTreeMap::new();
        for d in self.segments.iter().flat_map(|s| s.domains()) {
            if *kinds.entry(d.id).or_insert(d.toehold) != d.toehold {
                return Err(DsdError::InconsistentToehold(d.id));
            }
        }
        match self.segments.iter().find(|s| s.domains().is_empty()) {
            Some(_) => Err(DsdError::EmptyStrand { offset: 0 }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for DsdSpecies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.structure())
    }
}

// ---------------------------------------------------------------------------
// parsing

struct RawDomain {
    name: String,
    toehold: bool,
    complemented: bool,
}

struct RawSegment {
    kind: char,
    domains: Vec<RawDomain>,
}

fn syntax(offset: usize, message: impl Into<String>) -> DsdError {
    DsdError::Syntax {
        offset,
        message: message.into(),
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// `base` is added to every reported offset.
fn lex_structure(text: &str, base: usize) -> Result<Vec<RawSegment>, DsdError> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut segments = Vec::new();
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    loop {
        skip_ws(&mut pos);
        if pos == bytes.len() {
            break;
        }
        let open = pos;
        let (kind, close) = match bytes[pos] {
            b'<' => ('<', b'>'),
            b'{' => ('{', b'}'),
            b'[' => ('[', b']'),
            c => return Err(syntax(base + pos, format!("expected '<', '{{' or '[', found '{}'", c as char))),
        };
        pos += 1;
        let mut domains = Vec::new();
        loop {
            skip_ws(&mut pos);
            if pos == bytes.len() {
                return Err(syntax(base + pos, format!("missing '{}'", close as char)));
            }
            if bytes[pos] == close {
                pos += 1;
                break;
            }
            let start = pos;
            while pos < bytes.len() && is_name_char(bytes[pos] as char) {
                pos += 1;
            }
            if start == pos {
                return Err(syntax(base + pos, format!("unexpected '{}'", bytes[pos] as char)));
            }
            let name = text[start..pos].to_string();
            let toehold = pos < bytes.len() && bytes[pos] == b'^';
            pos += usize::from(toehold);
            let complemented = pos < bytes.len() && bytes[pos] == b'*';
            pos += usize::from(complemented);
            if pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != close {
                return Err(syntax(base + pos, "domains must be separated by whitespace"));
            }
            domains.push(RawDomain {
                name,
                toehold,
                complemented,
            });
        }
        if domains.is_empty() {
            return Err(DsdError::EmptyStrand { offset: base + open });
        }
        segments.push(RawSegment { kind, domains });
    }
    if segments.is_empty() {
        return Err(syntax(base + pos, "empty structure"));
    }
    Ok(segments)
}

/// Maps domain names to ids across a whole document.
struct DomainTable {
    ids: BTreeMap<String, u32>,
    next: u32,
    toeholds: BTreeMap<u32, bool>,
}

impl DomainTable {
    fn new<'a>(names: impl Iterator<Item = &'a str>) -> Self {
        let mut ids = BTreeMap::new();
        let mut max = 0;
        for n in names {
            if let Ok(id) = n.parse::<u32>() {
                ids.insert(n.to_string(), id);
                max = max.max(id);
            }
        }
        DomainTable {
            ids,
            next: max + 1,
            toeholds: BTreeMap::new(),
        }
    }

    fn resolve(&mut self, raw: &RawDomain) -> Result<Domain, DsdError> {
        let id = match self.ids.get(&raw.name) {
            Some(id) => *id,
            None => {
                let id = self.next;
                self.next += 1;
                self.ids.insert(raw.name.clone(), id);
                id
            }
        };
        if *self.toeholds.entry(id).or_insert(raw.toehold) != raw.toehold {
            return Err(DsdError::InconsistentToehold(id));
        }
        Ok(Domain {
            id,
            toehold: raw.toehold,
            complemented: raw.complemented,
        })
    }

    fn build(&mut self, name: &str, raw: Vec<RawSegment>) -> Result<DsdSpecies, DsdError> {
        let mut segments = Vec::with_capacity(raw.len());
        for seg in raw {
            let domains = seg.domains.iter().map(|d| self.resolve(d)).collect::<Result<Vec<_>, _>>()?;
            segments.push(match seg.kind {
                '<' => Segment::UpperOverhang(domains),
                '{' => Segment::LowerOverhang(domains),
                _ => Segment::Duplex(domains),
            });
        }
        Ok(DsdSpecies::new(name, segments, Role::Signal))
    }
}

/// Parses one structure such as `{1*}[2 3]<4>`.
pub fn parse_dsd(text: &str) -> Result<DsdSpecies, DsdError> {
    let raw = lex_structure(text, 0)?;
    let mut table = DomainTable::new(raw.iter().flat_map(|s| s.domains.iter().map(|d| d.name.as_str())));
    table.build("", raw)
}

/// Parses a species file: one `name = structure` per line, `#` comments.
pub fn parse_dsd_file(text: &str) -> Result<Vec<DsdSpecies>, DsdError> {
    let mut entries = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let content = line.split('#').next().unwrap_or("");
        if !content.trim().is_empty() {
            let Some(eq) = content.find('=') else {
                return Err(syntax(offset, "expected 'name = structure'"));
            };
            let name = content[..eq].trim();
            if name.is_empty() || !name.chars().all(|c| is_name_char(c) || c == '\'' || c == '.') {
                return Err(syntax(offset, format!("invalid species name '{name}'")));
            }
            entries.push((name.to_string(), lex_structure(&content[eq + 1..], offset + eq + 1)?));
        }
        offset += line.len();
    }
    let mut table = DomainTable::new(
        entries
            .iter()
            .flat_map(|(_, segs)| segs.iter().flat_map(|s| s.domains.iter().map(|d| d.name.as_str()))),
    );
    let mut seen = BTreeSet::new();
    entries
        .into_iter()
        .map(|(name, raw)| {
            if !seen.insert(name.clone()) {
                return Err(syntax(0, format!("species '{name}' defined twice")));
            }
            table.build(&name, raw)
        })
        .collect()
}

pub fn format_dsd_file(species: &[DsdSpecies]) -> String {
    species.iter().map(|s| format!("{} = {}\n", s.name, s.structure())).collect()
}

// ---------------------------------------------------------------------------
// SVG

pub const DOMAIN_WIDTH: f64 = 30.0;
pub const TOEHOLD_COLOR: &str = "#cc0000";
pub const LONG_COLOR: &str = "#808080";
const MARGIN: f64 = 20.0;
const TOP_Y: f64 = 30.0;
const BOTTOM_Y: f64 = 50.0;
const HEIGHT: f64 = 80.0;

/// Deterministic SVG 1.1 drawing: upper strands on the top row, lower
/// strands on the bottom row, duplexes on both with one rung per domain.
pub fn render_svg(species: &DsdSpecies) -> Result<String, DsdError> {
    species.check()?;
    let width = 2.0 * MARGIN + DOMAIN_WIDTH * species.domain_count() as f64;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{HEIGHT}" viewBox="0 0 {width} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", xml_escape(&species.name)).unwrap();
    let mut x = MARGIN;
    for seg in &species.segments {
        for d in seg.domains() {
            let color = if d.toehold { TOEHOLD_COLOR } else { LONG_COLOR };
            let (x1, x2, mid) = (x, x + DOMAIN_WIDTH, x + DOMAIN_WIDTH / 2.0);
            let line = |out: &mut String, y: f64| {
                writeln!(
                    out,
                    r#"<line class="domain" x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="{color}" stroke-width="3"/>"#
                )
                .unwrap();
            };
            let label = |out: &mut String, y: f64| {
                writeln!(
                    out,
                    r#"<text x="{mid}" y="{y}" font-family="monospace" font-size="10" text-anchor="middle">{d}</text>"#
                )
                .unwrap();
            };
            match seg {
                Segment::UpperOverhang(_) => {
                    line(&mut out, TOP_Y);
                    label(&mut out, TOP_Y - 6.0);
                }
                Segment::LowerOverhang(_) => {
                    line(&mut out, BOTTOM_Y);
                    label(&mut out, BOTTOM_Y + 14.0);
                }
                Segment::Duplex(_) => {
                    line(&mut out, TOP_Y);
                    line(&mut out, BOTTOM_Y);
                    writeln!(
                        out,
                        r##"<line class="rung" x1="{mid}" y1="{TOP_Y}" x2="{mid}" y2="{BOTTOM_Y}" stroke="#bbbbbb" stroke-width="1"/>"##
                    )
                    .unwrap();
                    label(&mut out, TOP_Y - 6.0);
                }
            }
            x = x2;
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

// ---------------------------------------------------------------------------
// transformation

#[derive(Clone, Debug, PartialEq)]
pub struct DsdTransformResult {
    pub network: ReactionNetwork,
    pub structures: BTreeMap<String, DsdSpecies>,
    /// Gates and translators, supplied at `c_max`; they only ever react.
    pub fuel_species: Vec<String>,
    /// Buffer strands released by the reversible first step, also at `c_max`.
    pub buffer_species: Vec<String>,
    /// Original species to the signal strand that represents it.
    pub mapping: BTreeMap<String, String>,
    /// Source reaction label to its displacement reactions.
    pub groups: Vec<(String, Vec<String>)>,
}

/// Per-species domains: history, toehold, recognition.
fn signal_domains(i: usize) -> [Domain; 3] {
    let base = 3 * i as u32;
    [Domain::long(base + 1), Domain::toehold(base + 2), Domain::long(base + 3)]
}

struct Namer {
    taken: BTreeSet<String>,
}

impl Namer {
    fn fresh(&mut self, stem: &str) -> String {
        let mut name = stem.to_string();
        while self.taken.contains(&name) {
            name.push('_');
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Label, reactants, products and rate constant of one direction.
type OneWay = (String, Vec<Term>, Vec<Term>, f64);

/// Unidirectional copies of a source reaction: bidirectional ones split in two.
fn unidirectional(r: &Reaction) -> Result<Vec<OneWay>, DsdError> {
    let unsupported = |reason: &str| DsdError::Unsupported {
        reaction: r.label.clone(),
        reason: reason.to_string(),
    };
    let RateLaw::MassAction { k_fwd, k_bwd } = r.rate else {
        return Err(unsupported("only mass-action reactions can be transformed"));
    };
    if !r.catalysts.is_empty() || !r.inhibitors.is_empty() {
        return Err(unsupported("catalysts and inhibitors are not supported"));
    }
    let mut out = vec![(r.label.clone(), r.reactants.clone(), r.products.clone(), k_fwd)];
    if r.bidirectional {
        out[0].0 = format!("{}_fwd", r.label);
        let k = k_bwd.ok_or_else(|| unsupported("bidirectional reaction without a backward rate"))?;
        out.push((format!("{}_bwd", r.label), r.products.clone(), r.reactants.clone(), k));
    }
    Ok(out)
}

fn expand(terms: &[Term]) -> Vec<&str> {
    terms
        .iter()
        .flat_map(|t| std::iter::repeat_n(t.species.as_str(), t.stoich as usize))
        .collect()
}

/// Rewrites every reaction as strand displacement steps, with `q_scale` as
/// the fast displacement rate `q`.
///
/// * `X1 + X2 -k->` becomes `X1 + L <=> H + B` (k, q), `X2 + H -> O + W1` (q),
///   `O + T -> products + W2` (q). With `[L] = [B] = c_max`, `H` settles at
///   `k·X1·L / (q·(B + X2))`, so the net rate is `k·X1·X2` up to
///   `O(X2 / c_max)`, with a fraction `k / q` of `X1` held in `H`.
/// * `X -k->` becomes `X + G -> O + W` (k / c_max), `O + T -> products + W'` (q).
///
/// Fast modes relax at about `q·c_max`, which bounds the explicit step size.
pub fn transform_soloveichik(network: &ReactionNetwork, c_max: f64, q_scale: f64) -> Result<DsdTransformResult, DsdError> {
    if !(c_max > 0.0 && c_max.is_finite() && q_scale > 0.0 && q_scale.is_finite()) {
        return Err(DsdError::Parameters("c_max and q_scale must be positive".into()));
    }
    let q = q_scale;
    let originals: Vec<&str> = network.species.iter().map(|s| s.label.as_str()).collect();
    let mut namer = Namer {
        taken: originals.iter().map(|s| s.to_string()).collect(),
    };
    let mut species: Vec<Species> = network.species.clone();
    let mut reactions = Vec::new();
    let mut structures = BTreeMap::new();
    let mut fuel_species = Vec::new();
    let mut buffer_species = Vec::new();
    let mut groups = Vec::new();
    let mut mapping = BTreeMap::new();

    let index_of = |label: &str| originals.iter().position(|s| *s == label);
    for (i, s) in originals.iter().enumerate() {
        let [h, t, x] = signal_domains(i);
        structures.insert(s.to_string(), DsdSpecies::new(*s, vec![Segment::UpperOverhang(vec![h, t, x])], Role::Signal));
        mapping.insert(s.to_string(), s.to_string());
    }
    let mut next_domain = 3 * originals.len() as u32 + 1;

    for source in &network.reactions {
        for (label, reactants, products, k) in unidirectional(source)? {
            let ins = expand(&reactants);
            let outs = expand(&products);
            let unsupported = |reason: String| DsdError::Unsupported {
                reaction: label.clone(),
                reason,
            };
            if ins.is_empty() || ins.len() > 2 {
                return Err(unsupported(format!("{} reactant molecules; need 1 or 2", ins.len())));
            }
            if outs.len() > 2 {
                return Err(unsupported(format!("{} product molecules; need at most 2", outs.len())));
            }
            for s in ins.iter().chain(&outs) {
                if index_of(s).is_none() {
                    return Err(unsupported(format!("unknown species '{s}'")));
                }
            }
            let stem = format!("r{}", groups.len() + 1);
            let (to, xo) = (Domain::toehold(next_domain), Domain::long(next_domain + 1));
            next_domain += 2;
            let product_domains: Vec<Domain> = outs
                .iter()
                .flat_map(|s| signal_domains(index_of(s).unwrap()))
                .collect();
            let mut add = |stem_letter: &str, initial: f64, segments: Vec<Segment>, role: Role| -> String {
                let name = namer.fresh(&format!("{stem_letter}_{stem}"));
                species.push(Species::with_initial(name.clone(), initial));
                structures.insert(name.clone(), DsdSpecies::new(name.clone(), segments, role));
                name
            };
            let [_, t1, x1] = signal_domains(index_of(ins[0]).unwrap());
            let mut translator = vec![Segment::LowerOverhang(vec![to.complement()]), Segment::Duplex(vec![xo])];
            if !product_domains.is_empty() {
                translator.push(Segment::UpperOverhang(product_domains));
            }
            let mut labels = Vec::new();
            let product_terms: Vec<(&str, u32)> = products.iter().map(|t| (t.species.as_str(), t.stoich)).collect();

            if ins.len() == 2 {
                let [_, t2, x2] = signal_domains(index_of(ins[1]).unwrap());
                let l = add(
                    "L",
                    c_max,
                    vec![
                        Segment::LowerOverhang(vec![t1.complement()]),
                        Segment::Duplex(vec![x1, t2, x2]),
                        Segment::UpperOverhang(vec![to, xo]),
                    ],
                    Role::Fuel,
                );
                let h = add(
                    "H",
                    0.0,
                    vec![
                        Segment::Duplex(vec![t1, x1]),
                        Segment::LowerOverhang(vec![t2.complement()]),
                        Segment::Duplex(vec![x2]),
                        Segment::UpperOverhang(vec![to, xo]),
                    ],
                    Role::Intermediate,
                );
                let b = add("B", c_max, vec![Segment::UpperOverhang(vec![x1, t2])], Role::Fuel);
                let o = add("O", 0.0, vec![Segment::UpperOverhang(vec![x2, to, xo])], Role::Intermediate);
                let t = add("T", c_max, translator, Role::Fuel);
                let w1 = add("W1", 0.0, vec![Segment::Duplex(vec![t1, x1, t2, x2])], Role::Waste);
                let w2 = add("W2", 0.0, vec![Segment::Duplex(vec![to, xo])], Role::Waste);
                reactions.push(Reaction::reversible(format!("{label}.1"), &[(ins[0], 1), (&l, 1)], &[(&h, 1), (&b, 1)], k, q));
                reactions.push(Reaction::mass_action(format!("{label}.2"), &[(ins[1], 1), (&h, 1)], &[(&o, 1), (&w1, 1)], q));
                let mut step3_products = product_terms.clone();
                step3_products.push((&w2, 1));
                reactions.push(Reaction::mass_action(format!("{label}.3"), &[(&o, 1), (&t, 1)], &step3_products, q));
                fuel_species.extend([l, t]);
                buffer_species.push(b);
            } else {
                let g = add(
                    "G",
                    c_max,
                    vec![
                        Segment::LowerOverhang(vec![t1.complement()]),
                        Segment::Duplex(vec![x1]),
                        Segment::UpperOverhang(vec![to, xo]),
                    ],
                    Role::Fuel,
                );
                let o = add("O", 0.0, vec![Segment::UpperOverhang(vec![x1, to, xo])], Role::Intermediate);
                let t = add("T", c_max, translator, Role::Fuel);
                let w1 = add("W1", 0.0, vec![Segment::Duplex(vec![t1, x1])], Role::Waste);
                let w2 = add("W2", 0.0, vec![Segment::Duplex(vec![to, xo])], Role::Waste);
                reactions.push(Reaction::mass_action(format!("{label}.1"), &[(ins[0], 1), (&g, 1)], &[(&o, 1), (&w1, 1)], k / c_max));
                let mut step2_products = product_terms.clone();
                step2_products.push((&w2, 1));
                reactions.push(Reaction::mass_action(format!("{label}.2"), &[(&o, 1), (&t, 1)], &step2_products, q));
                fuel_species.extend([g, t]);
            }
            let n = if ins.len() == 2 { 3 } else { 2 };
            labels.extend(reactions[reactions.len() - n..].iter().map(|r| r.label.clone()));
            groups.push((label.clone(), labels));
        }
    }

    Ok(DsdTransformResult {
        network: ReactionNetwork {
            name: format!("{}_dsd", network.name),
            species,
            reactions,
            parent: None,
        },
        structures,
        fuel_species,
        buffer_species,
        mapping,
        groups,
    })
}
