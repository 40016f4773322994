//! Reaction networks, compartment trees and permeation channels.
//!
//! The reserved no-species symbol (written `λ` or `lambda`) is never stored:
//! an empty reactant or product list stands for it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Expr;

/// Labels reserved for the empty side of a reaction.
pub const LAMBDA_LABELS: [&str; 2] = ["λ", "lambda"];

pub fn is_lambda(label: &str) -> bool {
    LAMBDA_LABELS.contains(&label)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub label: String,
    /// Concentration at t = 0 before any interaction runs.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub initial: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Species {
    pub fn new(label: impl Into<String>) -> Self {
        Species {
            label: label.into(),
            initial: 0.0,
        }
    }

    pub fn with_initial(label: impl Into<String>, initial: f64) -> Self {
        Species {
            label: label.into(),
            initial,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub species: String,
    pub stoich: u32,
}

impl Term {
    pub fn new(species: impl Into<String>, stoich: u32) -> Self {
        Term {
            species: species.into(),
            stoich,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateLaw {
    MassAction {
        k_fwd: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_bwd: Option<f64>,
    },
    MichaelisMenten {
        k_cat: f64,
        k_m: f64,
    },
    Custom {
        expression: Expr,
    },
}

impl RateLaw {
    pub fn mass_action(k: f64) -> Self {
        RateLaw::MassAction {
            k_fwd: k,
            k_bwd: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inhibitor {
    pub species: String,
    pub k_i: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub label: String,
    #[serde(default)]
    pub reactants: Vec<Term>,
    #[serde(default)]
    pub products: Vec<Term>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub catalysts: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inhibitors: Vec<Inhibitor>,
    pub rate: RateLaw,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub bidirectional: bool,
}

impl Reaction {
    /// Unidirectional mass-action reaction. Terms are `(species, stoich)`.
    pub fn mass_action(
        label: impl Into<String>,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        k: f64,
    ) -> Self {
        Reaction {
            label: label.into(),
            reactants: terms(reactants),
            products: terms(products),
            catalysts: Vec::new(),
            inhibitors: Vec::new(),
            rate: RateLaw::mass_action(k),
            bidirectional: false,
        }
    }

    pub fn reversible(
        label: impl Into<String>,
        reactants: &[(&str, u32)],
        products: &[(&str, u32)],
        k_fwd: f64,
        k_bwd: f64,
    ) -> Self {
        Reaction {
            rate: RateLaw::MassAction {
                k_fwd,
                k_bwd: Some(k_bwd),
            },
            bidirectional: true,
            ..Reaction::mass_action(label, reactants, products, k_fwd)
        }
    }

    /// `substrate -E-> product` with Michaelis-Menten kinetics.
    pub fn michaelis_menten(
        label: impl Into<String>,
        substrate: &str,
        enzyme: &str,
        product: &str,
        k_cat: f64,
        k_m: f64,
    ) -> Self {
        Reaction {
            label: label.into(),
            reactants: terms(&[(substrate, 1)]),
            products: terms(&[(product, 1)]),
            catalysts: vec![enzyme.to_string()],
            inhibitors: Vec::new(),
            rate: RateLaw::MichaelisMenten { k_cat, k_m },
            bidirectional: false,
        }
    }

    /// Every species label this reaction mentions, including those inside a
    /// custom rate expression.
    pub fn referenced_species(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .reactants
            .iter()
            .chain(&self.products)
            .map(|t| t.species.clone())
            .chain(self.catalysts.iter().cloned())
            .chain(self.inhibitors.iter().map(|i| i.species.clone()))
            .collect();
        if let RateLaw::Custom { expression } = &self.rate {
            out.extend(expression.identifiers());
        }
        let mut seen = BTreeSet::new();
        out.retain(|s| seen.insert(s.clone()));
        out
    }

    /// Returns a copy with species and identifiers mapped through `rename`.
    pub fn renamed(&self, label: String, rename: &dyn Fn(&str) -> String) -> Reaction {
        let map_terms = |ts: &[Term]| {
            ts.iter()
                .map(|t| Term::new(rename(&t.species), t.stoich))
                .collect()
        };
        Reaction {
            label,
            reactants: map_terms(&self.reactants),
            products: map_terms(&self.products),
            catalysts: self.catalysts.iter().map(|c| rename(c)).collect(),
            inhibitors: self
                .inhibitors
                .iter()
                .map(|i| Inhibitor {
                    species: rename(&i.species),
                    k_i: i.k_i,
                })
                .collect(),
            rate: match &self.rate {
                RateLaw::Custom { expression } => RateLaw::Custom {
                    expression: expression.rename(rename),
                },
                other => other.clone(),
            },
            bidirectional: self.bidirectional,
        }
    }
}

fn terms(list: &[(&str, u32)]) -> Vec<Term> {
    list.iter().map(|(s, n)| Term::new(*s, *n)).collect()
}

fn fmt_side(f: &mut fmt::Formatter<'_>, side: &[Term]) -> fmt::Result {
    if side.is_empty() {
        return f.write_str("λ");
    }
    for (i, t) in side.iter().enumerate() {
        if i > 0 {
            f.write_str(" + ")?;
        }
        if t.stoich != 1 {
            write!(f, "{}", t.stoich)?;
        }
        f.write_str(&t.species)?;
    }
    Ok(())
}

impl fmt::Display for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.label)?;
        fmt_side(f, &self.reactants)?;
        f.write_str(if self.bidirectional { " <-> " } else { " -> " })?;
        fmt_side(f, &self.products)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub name: String,
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    /// The network this one was extended from.
    #[serde(skip)]
    pub parent: Option<Arc<ReactionNetwork>>,
}

/// Structural equality; the parent link is compared by name only.
impl PartialEq for ReactionNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.species == other.species
            && self.reactions == other.reactions
            && self.parent.as_ref().map(|p| &p.name) == other.parent.as_ref().map(|p| &p.name)
    }
}

/// A single structural problem found by [`ReactionNetwork::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Reaction or species label the problem belongs to.
    pub subject: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("reaction '{0}' is defined differently in the two networks")]
    ReactionConflict(String),
    #[error("species '{0}' is defined differently in the two networks")]
    SpeciesConflict(String),
    #[error("channel '{0}' is defined twice")]
    DuplicateChannel(String),
    #[error("invalid compartment tree: {0}")]
    InvalidTree(String),
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },
}

impl ReactionNetwork {
    pub fn new(name: impl Into<String>) -> Self {
        ReactionNetwork {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with_species(mut self, labels: &[&str]) -> Self {
        self.species.extend(labels.iter().map(|l| Species::new(*l)));
        self
    }

    pub fn with_reaction(mut self, reaction: Reaction) -> Self {
        self.reactions.push(reaction);
        self
    }

    pub fn species_index(&self, label: &str) -> Option<usize> {
        self.species.iter().position(|s| s.label == label)
    }

    pub fn reaction(&self, label: &str) -> Option<&Reaction> {
        self.reactions.iter().find(|r| r.label == label)
    }

    pub fn species_labels(&self) -> Vec<String> {
        self.species.iter().map(|s| s.label.clone()).collect()
    }

    pub fn initial_state(&self) -> Vec<f64> {
        self.species.iter().map(|s| s.initial).collect()
    }

    /// Lists every broken structural rule; empty means the network is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |subject: &str, rule: String| {
            out.push(Violation {
                subject: subject.to_string(),
                rule,
            })
        };

        let mut labels = BTreeSet::new();
        for s in &self.species {
            if s.label.is_empty() {
                push("<species>", "species label is empty".into());
            } else if is_lambda(&s.label) {
                push(&s.label, "the no-species symbol cannot be stored as a species".into());
            } else if !labels.insert(s.label.as_str()) {
                push(&s.label, "duplicate species label".into());
            }
            if !(s.initial >= 0.0 && s.initial.is_finite()) {
                push(&s.label, format!("initial concentration {} is not a nonnegative number", s.initial));
            }
        }

        let mut reaction_labels = BTreeSet::new();
        for r in &self.reactions {
            let subject = r.label.as_str();
            if !reaction_labels.insert(subject) {
                push(subject, "duplicate reaction label".into());
            }
            if r.reactants.is_empty() && r.products.is_empty() {
                push(subject, "reactants and products are both empty".into());
            }
            for side in [&r.reactants, &r.products] {
                let mut seen = BTreeSet::new();
                for t in side {
                    if t.stoich == 0 {
                        push(subject, format!("stoichiometry of '{}' must be at least 1", t.species));
                    }
                    if !seen.insert(t.species.as_str()) {
                        push(subject, format!("species '{}' appears twice on one side", t.species));
                    }
                }
            }
            for c in &r.catalysts {
                if r.reactants.iter().any(|t| &t.species == c) {
                    push(subject, format!("catalyst '{c}' is also a reactant"));
                }
            }
            for inh in &r.inhibitors {
                if !(inh.k_i > 0.0 && inh.k_i.is_finite()) {
                    push(subject, format!("inhibition constant for '{}' must be positive", inh.species));
                }
            }
            for name in r.referenced_species() {
                if is_lambda(&name) {
                    push(subject, "the no-species symbol is written as an empty side".into());
                } else if !labels.contains(name.as_str()) {
                    push(subject, format!("unknown species '{name}'"));
                }
            }
            match &r.rate {
                RateLaw::MassAction { k_fwd, k_bwd } => {
                    if !(*k_fwd > 0.0 && k_fwd.is_finite()) {
                        push(subject, format!("forward rate {k_fwd} must be positive"));
                    }
                    match (k_bwd, r.bidirectional) {
                        (Some(k), true) if !(*k > 0.0 && k.is_finite()) => {
                            push(subject, format!("backward rate {k} must be positive"))
                        }
                        (None, true) => {
                            push(subject, "bidirectional reaction lacks a backward rate".into())
                        }
                        (Some(_), false) => push(
                            subject,
                            "backward rate given for a unidirectional reaction".into(),
                        ),
                        _ => {}
                    }
                }
                RateLaw::MichaelisMenten { k_cat, k_m } => {
                    if r.bidirectional {
                        push(subject, "bidirectional reactions must use mass action".into());
                    }
                    if !(*k_cat > 0.0 && k_cat.is_finite()) || !(*k_m > 0.0 && k_m.is_finite()) {
                        push(subject, "k_cat and K_m must be positive".into());
                    }
                    if r.catalysts.len() != 1 {
                        push(subject, "Michaelis-Menten needs exactly one catalyst".into());
                    }
                    if r.reactants.len() != 1 || r.reactants[0].stoich != 1 {
                        push(
                            subject,
                            "Michaelis-Menten needs exactly one reactant with stoichiometry 1".into(),
                        );
                    }
                }
                RateLaw::Custom { expression } => {
                    if r.bidirectional {
                        push(subject, "bidirectional reactions must use mass action".into());
                    }
                    if expression.is_random() {
                        push(subject, "nondeterministic function in rate".into());
                    }
                }
            }
        }
        out
    }

    /// Union of species by label, concatenation of reactions. Reactions that
    /// appear in both with an identical definition are kept once.
    pub fn merge(&self, other: &ReactionNetwork) -> Result<ReactionNetwork, ModelError> {
        let mut out = ReactionNetwork {
            name: self.name.clone(),
            species: self.species.clone(),
            reactions: self.reactions.clone(),
            parent: None,
        };
        out.absorb(&other.species, &other.reactions)?;
        Ok(out)
    }

    /// Builds a new network on top of `self`; `self` becomes the parent.
    pub fn extend(
        self: &Arc<Self>,
        name: impl Into<String>,
        species: &[Species],
        reactions: &[Reaction],
    ) -> Result<ReactionNetwork, ModelError> {
        let mut out = ReactionNetwork {
            name: name.into(),
            species: self.species.clone(),
            reactions: self.reactions.clone(),
            parent: Some(Arc::clone(self)),
        };
        out.absorb(species, reactions)?;
        Ok(out)
    }

    fn absorb(&mut self, species: &[Species], reactions: &[Reaction]) -> Result<(), ModelError> {
        for s in species {
            match self.species.iter().find(|x| x.label == s.label) {
                Some(existing) if existing == s => {}
                Some(_) => return Err(ModelError::SpeciesConflict(s.label.clone())),
                None => self.species.push(s.clone()),
            }
        }
        for r in reactions {
            match self.reactions.iter().find(|x| x.label == r.label) {
                Some(existing) if existing == r => {}
                Some(_) => return Err(ModelError::ReactionConflict(r.label.clone())),
                None => self.reactions.push(r.clone()),
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// compartments

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub source: String,
    pub target: String,
    /// Species in the source compartment.
    pub reactant: String,
    /// Species in the target compartment.
    pub product: String,
    pub permeability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compartment {
    pub name: String,
    pub network: ReactionNetwork,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Compartment>,
}

impl Compartment {
    pub fn new(name: impl Into<String>, network: ReactionNetwork) -> Self {
        Compartment {
            name: name.into(),
            network,
            children: Vec::new(),
        }
    }

    pub fn with_child(mut self, child: Compartment) -> Self {
        self.children.push(child);
        self
    }

    fn walk<'a>(&'a self, parent: Option<&'a str>, out: &mut Vec<(&'a Compartment, Option<&'a str>)>) {
        out.push((self, parent));
        for c in &self.children {
            c.walk(Some(&self.name), out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompartmentTree {
    pub name: String,
    pub root: Compartment,
    #[serde(default)]
    pub channels: Vec<Channel>,
}

/// One row of the flattening table: where a flattened species came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatEntry {
    pub compartment: String,
    pub label: String,
    pub flat_label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FlattenMap {
    pub entries: Vec<FlatEntry>,
}

impl FlattenMap {
    pub fn flat_label(&self, compartment: &str, label: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.compartment == compartment && e.label == label)
            .map(|e| e.flat_label.as_str())
    }

    pub fn original(&self, flat_label: &str) -> Option<(&str, &str)> {
        self.entries
            .iter()
            .find(|e| e.flat_label == flat_label)
            .map(|e| (e.compartment.as_str(), e.label.as_str()))
    }
}

pub fn qualified(compartment: &str, label: &str) -> String {
    format!("{compartment}.{label}")
}

impl CompartmentTree {
    pub fn new(name: impl Into<String>, root: Compartment) -> Self {
        CompartmentTree {
            name: name.into(),
            root,
            channels: Vec::new(),
        }
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channels.push(channel);
        self
    }

    /// Compartments in depth-first order with their parent's name.
    pub fn compartments(&self) -> Vec<(&Compartment, Option<&str>)> {
        let mut out = Vec::new();
        self.root.walk(None, &mut out);
        out
    }

    pub fn compartment(&self, name: &str) -> Option<&Compartment> {
        self.compartments().into_iter().map(|(c, _)| c).find(|c| c.name == name)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let comps = self.compartments();
        let mut names = BTreeSet::new();
        let mut parents: BTreeMap<&str, Option<&str>> = BTreeMap::new();
        for (c, parent) in &comps {
            if !names.insert(c.name.as_str()) {
                out.push(Violation {
                    subject: c.name.clone(),
                    rule: "duplicate compartment name".into(),
                });
            }
            parents.insert(&c.name, *parent);
            for v in c.network.validate() {
                out.push(Violation {
                    subject: qualified(&c.name, &v.subject),
                    rule: v.rule,
                });
            }
        }
        let mut channel_labels = BTreeSet::new();
        for ch in &self.channels {
            let subject = ch.label.clone();
            if !channel_labels.insert(ch.label.as_str()) {
                out.push(Violation {
                    subject: subject.clone(),
                    rule: "duplicate channel label".into(),
                });
            }
            if !(ch.permeability > 0.0 && ch.permeability.is_finite()) {
                out.push(Violation {
                    subject: subject.clone(),
                    rule: "permeability must be positive".into(),
                });
            }
            let adjacent = parents.get(ch.source.as_str()) == Some(&Some(ch.target.as_str()))
                || parents.get(ch.target.as_str()) == Some(&Some(ch.source.as_str()));
            if !adjacent {
                out.push(Violation {
                    subject: subject.clone(),
                    rule: format!(
                        "compartments '{}' and '{}' are not parent and child",
                        ch.source, ch.target
                    ),
                });
            }
            for (comp, species) in [(&ch.source, &ch.reactant), (&ch.target, &ch.product)] {
                let known = comps
                    .iter()
                    .find(|(c, _)| &c.name == comp)
                    .is_some_and(|(c, _)| c.network.species_index(species).is_some());
                if !known {
                    out.push(Violation {
                        subject: subject.clone(),
                        rule: format!("species '{species}' not found in compartment '{comp}'"),
                    });
                }
            }
        }
        out
    }

    /// Collapses the tree into one network with `compartment.label` species
    /// names. Each channel becomes a first-order reaction named after the
    /// channel with rate constant equal to its permeability.
    pub fn flatten(&self) -> Result<(ReactionNetwork, FlattenMap), ModelError> {
        let violations = self.validate();
        if let Some(v) = violations.first() {
            return Err(ModelError::InvalidTree(v.to_string()));
        }
        let mut net = ReactionNetwork::new(self.name.clone());
        let mut map = FlattenMap::default();
        for (comp, _) in self.compartments() {
            let prefix = comp.name.clone();
            let rename = move |label: &str| qualified(&prefix, label);
            for s in &comp.network.species {
                let flat = rename(&s.label);
                map.entries.push(FlatEntry {
                    compartment: comp.name.clone(),
                    label: s.label.clone(),
                    flat_label: flat.clone(),
                });
                net.species.push(Species::with_initial(flat, s.initial));
            }
            for r in &comp.network.reactions {
                net.reactions.push(r.renamed(rename(&r.label), &rename));
            }
        }
        for ch in &self.channels {
            let reactant = qualified(&ch.source, &ch.reactant);
            let product = qualified(&ch.target, &ch.product);
            net.reactions.push(Reaction::mass_action(
                ch.label.clone(),
                &[(&reactant, 1)],
                &[(&product, 1)],
                ch.permeability,
            ));
        }
        let flat_species: BTreeSet<&str> = net.species.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(flat_species.len(), net.species.len(), "flattened species collide");
        if let Some(v) = net.validate().first() {
            return Err(ModelError::InvalidTree(v.to_string()));
        }
        Ok((net, map))
    }
}

// ---------------------------------------------------------------------------
// models and rate references

/// Either a single network or a compartment tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Network(ReactionNetwork),
    Tree(CompartmentTree),
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::Network(n) => &n.name,
            Model::Tree(t) => &t.name,
        }
    }

    /// The network that is actually integrated, plus the naming table for trees.
    pub fn flatten(&self) -> Result<(ReactionNetwork, Option<FlattenMap>), ModelError> {
        match self {
            Model::Network(n) => Ok((n.clone(), None)),
            Model::Tree(t) => t.flatten().map(|(n, m)| (n, Some(m))),
        }
    }

    pub fn get_rate(&self, r: &RateRef) -> Result<f64, ModelError> {
        let mut copy = self.clone();
        let mut found = None;
        copy.visit_rate(r, &mut |v| found = Some(*v))?;
        Ok(found.expect("visit_rate calls back on success"))
    }

    pub fn set_rate(&mut self, r: &RateRef, value: f64) -> Result<(), ModelError> {
        self.visit_rate(r, &mut |v| *v = value)
    }

    fn visit_rate(&mut self, r: &RateRef, f: &mut dyn FnMut(&mut f64)) -> Result<(), ModelError> {
        let unknown = || ModelError::Unknown {
            kind: "rate constant",
            name: r.to_string(),
        };
        if r.param == RateParam::Permeability {
            let Model::Tree(tree) = self else {
                return Err(unknown());
            };
            let ch = tree
                .channels
                .iter_mut()
                .find(|c| c.label == r.target)
                .ok_or_else(unknown)?;
            f(&mut ch.permeability);
            return Ok(());
        }
        let reaction = match self {
            Model::Network(n) => n.reactions.iter_mut().find(|x| x.label == r.target),
            Model::Tree(t) => find_tree_reaction(&mut t.root, &r.target),
        }
        .ok_or_else(unknown)?;
        let slot = match (&mut reaction.rate, r.param) {
            (RateLaw::MassAction { k_fwd, .. }, RateParam::Forward) => k_fwd,
            (RateLaw::MassAction { k_bwd: Some(k), .. }, RateParam::Backward) => k,
            (RateLaw::MichaelisMenten { k_cat, .. }, RateParam::KCat) => k_cat,
            (RateLaw::MichaelisMenten { k_m, .. }, RateParam::Km) => k_m,
            _ => return Err(unknown()),
        };
        f(slot);
        Ok(())
    }
}

/// Tree reactions are addressed as `compartment.reaction`.
fn find_tree_reaction<'a>(c: &'a mut Compartment, target: &str) -> Option<&'a mut Reaction> {
    if let Some(rest) = target.strip_prefix(&c.name).and_then(|r| r.strip_prefix('.')) {
        if let Some(r) = c.network.reactions.iter_mut().find(|r| r.label == rest) {
            return Some(r);
        }
    }
    c.children
        .iter_mut()
        .find_map(|child| find_tree_reaction(child, target))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RateParam {
    Forward,
    Backward,
    KCat,
    Km,
    Permeability,
}

impl RateParam {
    fn tag(self) -> &'static str {
        match self {
            RateParam::Forward => "fwd",
            RateParam::Backward => "bwd",
            RateParam::KCat => "kcat",
            RateParam::Km => "km",
            RateParam::Permeability => "perm",
        }
    }
}

/// Reference to one rate constant, written `label:param` where param is one
/// of `fwd`, `bwd`, `kcat`, `km`, `perm`. A bare label means `fwd`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RateRef {
    pub target: String,
    pub param: RateParam,
}

impl RateRef {
    pub fn forward(target: impl Into<String>) -> Self {
        RateRef {
            target: target.into(),
            param: RateParam::Forward,
        }
    }
}

impl fmt::Display for RateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.target, self.param.tag())
    }
}

impl std::str::FromStr for RateRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (target, param) = match s.rsplit_once(':') {
            Some((t, p)) => {
                let param = [
                    RateParam::Forward,
                    RateParam::Backward,
                    RateParam::KCat,
                    RateParam::Km,
                    RateParam::Permeability,
                ]
                .into_iter()
                .find(|x| x.tag() == p)
                .ok_or_else(|| format!("unknown rate parameter '{p}' in '{s}'"))?;
                (t, param)
            }
            None => (s, RateParam::Forward),
        };
        if target.is_empty() {
            return Err(format!("empty rate reference '{s}'"));
        }
        Ok(RateRef {
            target: target.to_string(),
            param,
        })
    }
}

impl Serialize for RateRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RateRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}
