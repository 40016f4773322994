//! Interaction series (timed interventions) and translation series (readouts).
//!
//! Text format for interaction series, one action per line:
//!
//! ```text
//! # comment
//! at 0
//!   IN -> 3
//! at 100 every 100 until 1000 in outer
//!   X1inj -> coin(0.5) * IN
//!   X1' <- X1inj
//! ```
//!
//! `species <- expr` sets a concentration, `var -> expr` assigns a variable.
//! The optional `in <compartment>` scopes species names for compartment trees.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Bindings, EvalError, Expr, SimRng};
use crate::model::qualified;
use crate::sim::Trace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    SetConcentration { species: String, expr: Expr },
    SetVariable { name: String, expr: Expr },
}

impl Action {
    pub fn set_concentration(species: &str, expr: &str) -> Result<Action, expr::ParseError> {
        Ok(Action::SetConcentration {
            species: species.to_string(),
            expr: expr::parse(expr)?,
        })
    }

    pub fn set_variable(name: &str, expr: &str) -> Result<Action, expr::ParseError> {
        Ok(Action::SetVariable {
            name: name.to_string(),
            expr: expr::parse(expr)?,
        })
    }

    pub fn expr(&self) -> &Expr {
        match self {
            Action::SetConcentration { expr, .. } | Action::SetVariable { expr, .. } => expr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repeat {
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub time: f64,
    pub actions: Vec<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<Repeat>,
}

impl Interaction {
    pub fn at(time: f64, actions: Vec<Action>) -> Self {
        Interaction {
            time,
            actions,
            repeat: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionSeries {
    pub name: String,
    pub interactions: Vec<Interaction>,
    /// Interaction index to compartment name, for compartment trees.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scopes: BTreeMap<usize, String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("interaction at t={time}, action {action}: {source}")]
    Action {
        time: f64,
        action: usize,
        #[source]
        source: EvalError,
    },
    #[error("interaction at t={time}, action {action}: unknown species '{species}'")]
    UnknownSpecies {
        time: f64,
        action: usize,
        species: String,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("sample time {time} outside the recorded range [{start}, {end}]")]
    OutOfRange { time: f64, start: f64, end: f64 },
    #[error("translation '{name}': {source}")]
    Translation {
        name: String,
        #[source]
        source: EvalError,
    },
}

impl InteractionSeries {
    pub fn new(name: impl Into<String>, interactions: Vec<Interaction>) -> Self {
        InteractionSeries {
            name: name.into(),
            interactions,
            scopes: BTreeMap::new(),
        }
    }

    /// Event list up to `t_end` with periodic entries expanded. Times are
    /// nondecreasing; ties keep definition order.
    pub fn schedule(&self, t_end: f64) -> Vec<(f64, usize)> {
        let mut events = Vec::new();
        for (idx, it) in self.interactions.iter().enumerate() {
            if !it.time.is_finite() || it.time > t_end {
                continue;
            }
            match it.repeat {
                Some(Repeat { period, until }) if period > 0.0 => {
                    let last = until.unwrap_or(f64::INFINITY).min(t_end);
                    let mut j = 0u64;
                    loop {
                        let t = it.time + j as f64 * period;
                        if t > last {
                            break;
                        }
                        events.push((t, idx));
                        j += 1;
                    }
                }
                _ => events.push((it.time, idx)),
            }
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        events
    }

    /// Rewrites scoped interactions to flattened `compartment.label` names.
    /// Identifiers that name a species of the compartment get the prefix;
    /// variables are left alone.
    pub fn scoped_to_flat(&self, species_of: &dyn Fn(&str) -> Option<BTreeSet<String>>) -> Result<InteractionSeries, String> {
        let mut out = self.clone();
        out.scopes.clear();
        for (&idx, comp) in &self.scopes {
            let local = species_of(comp).ok_or_else(|| format!("unknown compartment '{comp}'"))?;
            let Some(it) = out.interactions.get_mut(idx) else {
                return Err(format!("scope refers to missing interaction {idx}"));
            };
            let rename = |name: &str| {
                if local.contains(name) {
                    qualified(comp, name)
                } else {
                    name.to_string()
                }
            };
            for action in &mut it.actions {
                *action = match action {
                    Action::SetConcentration { species, expr } => Action::SetConcentration {
                        species: rename(species),
                        expr: expr.rename(&rename),
                    },
                    Action::SetVariable { name, expr } => Action::SetVariable {
                        name: name.clone(),
                        expr: expr.rename(&rename),
                    },
                };
            }
        }
        Ok(out)
    }

    /// Checks species references and expression identifiers. Variables are
    /// visible to actions that come after their first assignment in time order.
    pub fn validate(&self, species: &[String]) -> Vec<String> {
        let species_set: BTreeSet<&str> = species.iter().map(String::as_str).collect();
        let mut defined: BTreeSet<String> = species.iter().cloned().collect();
        let mut out = Vec::new();
        let mut order: Vec<usize> = (0..self.interactions.len()).collect();
        order.sort_by(|a, b| {
            self.interactions[*a]
                .time
                .total_cmp(&self.interactions[*b].time)
                .then(a.cmp(b))
        });
        for idx in order {
            let it = &self.interactions[idx];
            if !it.time.is_finite() || it.time < 0.0 {
                out.push(format!("interaction {idx}: time {} must be finite and nonnegative", it.time));
            }
            if let Some(r) = it.repeat {
                if !(r.period > 0.0 && r.period.is_finite()) || r.until.is_some_and(|u| !u.is_finite()) {
                    out.push(format!("interaction {idx}: repeat period must be positive and finite"));
                }
            }
            for (a, action) in it.actions.iter().enumerate() {
                for v in action.expr().validate(&defined, false) {
                    out.push(format!("interaction {idx}, action {a}: {v}"));
                }
                match action {
                    Action::SetConcentration { species, .. } => {
                        if !species_set.contains(species.as_str()) {
                            out.push(format!("interaction {idx}, action {a}: unknown species '{species}'"));
                        }
                    }
                    Action::SetVariable { name, .. } => {
                        if species_set.contains(name.as_str()) {
                            out.push(format!(
                                "interaction {idx}, action {a}: variable '{name}' shadows a species"
                            ));
                        }
                        defined.insert(name.clone());
                    }
                }
            }
        }
        out
    }
}

/// Concentrations, user variables and the current time of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub concentrations: Vec<f64>,
    pub variables: BTreeMap<String, f64>,
}

impl SimState {
    pub fn new(time: f64, concentrations: Vec<f64>) -> Self {
        SimState {
            time,
            concentrations,
            variables: BTreeMap::new(),
        }
    }
}

/// Name lookup over species concentrations, then variables, then extras.
pub struct StateView<'a> {
    pub labels: &'a [String],
    pub concentrations: &'a [f64],
    pub variables: &'a BTreeMap<String, f64>,
    pub extra: Option<&'a BTreeMap<String, f64>>,
}

impl Bindings for StateView<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        if let Some(i) = self.labels.iter().position(|l| l == name) {
            return Some(self.concentrations[i]);
        }
        self.variables
            .get(name)
            .or_else(|| self.extra.and_then(|e| e.get(name)))
            .copied()
    }
}

/// Applies the actions of one interaction in order. Each action sees the
/// effects of the ones before it; concentrations are clamped at zero.
pub fn apply(
    state: &mut SimState,
    labels: &[String],
    interaction: &Interaction,
    rng: &mut SimRng,
) -> Result<(), ProtocolError> {
    for (i, action) in interaction.actions.iter().enumerate() {
        let value = {
            let view = StateView {
                labels,
                concentrations: &state.concentrations,
                variables: &state.variables,
                extra: None,
            };
            action
                .expr()
                .eval(&view, Some(&mut *rng))
                .map_err(|source| ProtocolError::Action {
                    time: state.time,
                    action: i,
                    source,
                })?
        };
        match action {
            Action::SetConcentration { species, .. } => {
                let idx = labels.iter().position(|l| l == species).ok_or_else(|| {
                    ProtocolError::UnknownSpecies {
                        time: state.time,
                        action: i,
                        species: species.clone(),
                    }
                })?;
                state.concentrations[idx] = value.max(0.0);
            }
            Action::SetVariable { name, .. } => {
                state.variables.insert(name.clone(), value);
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// text format

pub fn parse_series(name: &str, text: &str) -> Result<InteractionSeries, ProtocolError> {
    let mut series = InteractionSeries::new(name, Vec::new());
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| ProtocolError::Syntax {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("at ") {
            let mut words = rest.split_whitespace();
            let num = |w: Option<&str>, what: &str| -> Result<f64, ProtocolError> {
                w.and_then(|w| w.parse::<f64>().ok())
                    .ok_or_else(|| err(format!("expected a number after '{what}'")))
            };
            let time = num(words.next(), "at")?;
            let mut interaction = Interaction::at(time, Vec::new());
            let mut scope = None;
            while let Some(word) = words.next() {
                match word {
                    "every" => {
                        let period = num(words.next(), "every")?;
                        interaction.repeat = Some(Repeat {
                            period,
                            until: None,
                        });
                    }
                    "until" => {
                        let until = num(words.next(), "until")?;
                        let r = interaction
                            .repeat
                            .as_mut()
                            .ok_or_else(|| err("'until' without 'every'".into()))?;
                        r.until = Some(until);
                    }
                    "in" => {
                        scope = Some(
                            words
                                .next()
                                .ok_or_else(|| err("expected a compartment after 'in'".into()))?
                                .to_string(),
                        )
                    }
                    other => return Err(err(format!("unexpected '{other}'"))),
                }
            }
            if let Some(c) = scope {
                series.scopes.insert(series.interactions.len(), c);
            }
            series.interactions.push(interaction);
            continue;
        }
        let current = series
            .interactions
            .last_mut()
            .ok_or_else(|| err("action before the first 'at' line".into()))?;
        let arrow_at = [line.find("<-"), line.find("->")]
            .into_iter()
            .flatten()
            .min()
            .ok_or_else(|| err("expected 'species <- expr' or 'var -> expr'".into()))?;
        let (target, arrow, rhs) = (
            line[..arrow_at].trim(),
            &line[arrow_at..arrow_at + 2],
            &line[arrow_at + 2..],
        );
        if !expr::is_identifier(target) {
            return Err(err(format!("'{target}' is not a valid name")));
        }
        let e = expr::parse(rhs.trim()).map_err(|e| err(e.to_string()))?;
        current.actions.push(if arrow == "<-" {
            Action::SetConcentration {
                species: target.to_string(),
                expr: e,
            }
        } else {
            Action::SetVariable {
                name: target.to_string(),
                expr: e,
            }
        });
    }
    Ok(series)
}

pub fn format_series(series: &InteractionSeries) -> String {
    let mut out = String::new();
    for (idx, it) in series.interactions.iter().enumerate() {
        write!(out, "at {}", it.time).unwrap();
        if let Some(r) = it.repeat {
            write!(out, " every {}", r.period).unwrap();
            if let Some(until) = r.until {
                write!(out, " until {until}").unwrap();
            }
        }
        if let Some(c) = series.scopes.get(&idx) {
            write!(out, " in {c}").unwrap();
        }
        out.push('\n');
        for a in &it.actions {
            match a {
                Action::SetConcentration { species, expr } => writeln!(out, "  {species} <- {expr}"),
                Action::SetVariable { name, expr } => writeln!(out, "  {name} -> {expr}"),
            }
            .unwrap();
        }
    }
    out
}

// ---------------------------------------------------------------------------
// translations

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Boolean,
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleTimes {
    Explicit(Vec<f64>),
    Periodic { start: f64, period: f64, end: f64 },
}

impl SampleTimes {
    pub fn times(&self) -> Vec<f64> {
        match self {
            SampleTimes::Explicit(v) => v.clone(),
            SampleTimes::Periodic { start, period, end } => {
                let mut out = Vec::new();
                if *period <= 0.0 {
                    return vec![*start];
                }
                let mut j = 0u64;
                loop {
                    let t = start + j as f64 * period;
                    if t > *end {
                        break;
                    }
                    out.push(t);
                    j += 1;
                }
                out
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Translation {
    pub name: String,
    pub expr: Expr,
    pub kind: OutputKind,
    pub samples: SampleTimes,
}

impl Translation {
    /// Evaluates the readout on the recorded sample at or just before `t`.
    pub fn translate(
        &self,
        trace: &Trace,
        constants: &BTreeMap<String, f64>,
        t: f64,
    ) -> Result<f64, ProtocolError> {
        let (start, end) = (trace.times[0], *trace.times.last().unwrap());
        if !(t >= start && t <= end) {
            return Err(ProtocolError::OutOfRange { time: t, start, end });
        }
        let row = trace.times.partition_point(|&x| x <= t) - 1;
        let view = StateView {
            labels: &trace.labels,
            concentrations: &trace.values[row],
            variables: &trace.variables[row],
            extra: Some(constants),
        };
        let v = self
            .expr
            .eval(&view, None)
            .map_err(|source| ProtocolError::Translation {
                name: self.name.clone(),
                source,
            })?;
        Ok(match self.kind {
            OutputKind::Numeric => v,
            OutputKind::Boolean => {
                if v >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::seeded_rng;

    #[test]
    fn schedule_expands_periodic_entries() {
        let once = InteractionSeries::new("s", vec![Interaction::at(0.0, vec![])]);
        assert_eq!(once.schedule(10.0), vec![(0.0, 0)]);

        let periodic = InteractionSeries::new(
            "p",
            vec![Interaction {
                time: 0.0,
                actions: vec![],
                repeat: Some(Repeat {
                    period: 1000.0,
                    until: None,
                }),
            }],
        );
        let times: Vec<f64> = periodic.schedule(3000.0).iter().map(|e| e.0).collect();
        assert_eq!(times, vec![0.0, 1000.0, 2000.0, 3000.0]);
    }

    #[test]
    fn schedule_ties_keep_definition_order() {
        let s = InteractionSeries::new(
            "t",
            vec![
                Interaction::at(5.0, vec![]),
                Interaction::at(1.0, vec![]),
                Interaction::at(5.0, vec![]),
            ],
        );
        assert_eq!(s.schedule(10.0), vec![(1.0, 1), (5.0, 0), (5.0, 2)]);
        assert_eq!(s.schedule(4.0), vec![(1.0, 1)]);
    }

    #[test]
    fn apply_is_sequential_and_clamps() {
        let labels = vec!["A".to_string(), "Y".to_string()];
        let mut state = SimState::new(0.0, vec![0.0, 0.7]);
        let it = Interaction::at(
            0.0,
            vec![
                Action::set_variable("IN", "3").unwrap(),
                Action::set_concentration("A", "IN").unwrap(),
                Action::set_concentration("Y", "0").unwrap(),
            ],
        );
        apply(&mut state, &labels, &it, &mut seeded_rng(0)).unwrap();
        assert_eq!(state.concentrations, vec![3.0, 0.0]);
        assert_eq!(state.variables["IN"], 3.0);

        let neg = Interaction::at(0.0, vec![Action::set_concentration("A", "A - 10").unwrap()]);
        apply(&mut state, &labels, &neg, &mut seeded_rng(0)).unwrap();
        assert_eq!(state.concentrations[0], 0.0);
    }

    #[test]
    fn apply_reports_action_index() {
        let labels = vec!["A".to_string()];
        let mut state = SimState::new(2.0, vec![1.0]);
        let it = Interaction::at(
            2.0,
            vec![
                Action::set_concentration("A", "1").unwrap(),
                Action::set_concentration("A", "log(0)").unwrap(),
            ],
        );
        let err = apply(&mut state, &labels, &it, &mut seeded_rng(0)).unwrap_err();
        assert!(matches!(err, ProtocolError::Action { action: 1, .. }), "{err}");
    }

    #[test]
    fn text_format_round_trip() {
        let text = "\
# perceptron cycle
at 0
  IN -> 3
at 100 every 100 until 1000 in outer
  X1inj -> coin(0.5) * IN
  X1' <- X1inj
  Y <- 0
";
        let s = parse_series("fig", text).unwrap();
        assert_eq!(s.interactions.len(), 2);
        assert_eq!(s.scopes.get(&1).map(String::as_str), Some("outer"));
        assert_eq!(
            s.interactions[1].repeat,
            Some(Repeat {
                period: 100.0,
                until: Some(1000.0)
            })
        );
        assert!(matches!(s.interactions[1].actions[1], Action::SetConcentration { .. }));
        let again = parse_series("fig", &format_series(&s)).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn text_format_errors_carry_line_numbers() {
        let err = parse_series("x", "A <- 1").unwrap_err();
        assert!(matches!(err, ProtocolError::Syntax { line: 1, .. }));
        let err = parse_series("x", "at 0\n\nA = 1").unwrap_err();
        assert!(matches!(err, ProtocolError::Syntax { line: 3, .. }));
        let err = parse_series("x", "at zero").unwrap_err();
        assert!(matches!(err, ProtocolError::Syntax { line: 1, .. }));
    }

    #[test]
    fn validate_checks_species_and_variable_order() {
        let labels = vec!["A".to_string()];
        let s = parse_series("v", "at 5\n A <- V\nat 1\n V -> 2\n B <- 1\n A -> 1").unwrap();
        let v = s.validate(&labels);
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v.iter().any(|m| m.contains("unknown species 'B'")));
        assert!(v.iter().any(|m| m.contains("shadows")));
        let bad = parse_series("v", "at 0\n A <- W").unwrap();
        assert_eq!(bad.validate(&labels).len(), 1);
    }

    fn small_trace() -> Trace {
        Trace {
            labels: vec!["Y".into()],
            times: vec![0.0, 1.0, 2.0],
            values: vec![vec![0.1], vec![0.7], vec![0.2]],
            variables: vec![BTreeMap::new(); 3],
            events: vec![],
        }
    }

    #[test]
    fn translate_reads_sample_at_or_before() {
        let trace = small_trace();
        let numeric = Translation {
            name: "y".into(),
            expr: expr::parse("Y").unwrap(),
            kind: OutputKind::Numeric,
            samples: SampleTimes::Explicit(vec![1.0]),
        };
        let none = BTreeMap::new();
        assert_eq!(numeric.translate(&trace, &none, 1.0).unwrap(), 0.7);
        assert_eq!(numeric.translate(&trace, &none, 1.5).unwrap(), 0.7);
        let boolean = Translation {
            expr: expr::parse("Y > 0.5").unwrap(),
            kind: OutputKind::Boolean,
            ..numeric.clone()
        };
        assert_eq!(boolean.translate(&trace, &none, 1.0).unwrap(), 1.0);
        assert!(matches!(
            numeric.translate(&trace, &none, 2.5),
            Err(ProtocolError::OutOfRange { .. })
        ));
        let unbound = Translation {
            expr: expr::parse("Z").unwrap(),
            ..numeric
        };
        assert!(matches!(
            unbound.translate(&trace, &none, 1.0),
            Err(ProtocolError::Translation { .. })
        ));
    }

    #[test]
    fn periodic_sample_times() {
        let s = SampleTimes::Periodic {
            start: 0.0,
            period: 0.5,
            end: 2.0,
        };
        assert_eq!(s.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
