//! ODE assembly and deterministic integration with interaction events.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{seeded_rng, EvalError, Expr};
use crate::model::{Model, ModelError, RateLaw, ReactionNetwork};
use crate::protocol::{self, InteractionSeries, ProtocolError, SimState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid interaction series: {}", .0.join("; "))]
    InvalidSeries(Vec<String>),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("step size fell below {min_step} at t={time}; the system may be stiff")]
    StepUnderflow { time: f64, min_step: f64 },
    #[error("state became non-finite at t={time}")]
    NonFinite { time: f64 },
    #[error("rate of reaction '{reaction}' at t={time}: {source}")]
    Rate {
        reaction: String,
        time: f64,
        #[source]
        source: EvalError,
    },
    #[error("event {event}: {source}")]
    Event {
        event: usize,
        #[source]
        source: ProtocolError,
    },
}

// ---------------------------------------------------------------------------
// right-hand side

#[derive(Clone, Debug)]
enum CompiledLaw {
    MassAction { k_fwd: f64, k_bwd: Option<f64> },
    MichaelisMenten { k_cat: f64, k_m: f64, substrate: usize, enzyme: usize },
    Custom(Expr),
}

#[derive(Clone, Debug)]
struct CompiledReaction {
    label: String,
    reactants: Vec<(usize, i32)>,
    products: Vec<(usize, i32)>,
    catalysts: Vec<usize>,
    inhibitors: Vec<(usize, f64)>,
    /// Net stoichiometric change per species.
    delta: Vec<(usize, f64)>,
    law: CompiledLaw,
}

/// Something an integrator can advance.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SimError>;
}

/// Compiled d[X]/dt for a reaction network. Species order follows the network.
#[derive(Clone, Debug)]
pub struct Rhs {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    reactions: Vec<CompiledReaction>,
}

impl Rhs {
    pub fn new(network: &ReactionNetwork) -> Result<Rhs, SimError> {
        let violations = network.validate();
        if !violations.is_empty() {
            return Err(SimError::InvalidModel(
                violations.iter().map(ToString::to_string).collect(),
            ));
        }
        let labels = network.species_labels();
        let index: HashMap<String, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let idx = |label: &str| index[label];
        let mut reactions = Vec::with_capacity(network.reactions.len());
        for r in &network.reactions {
            let side = |terms: &[crate::model::Term]| -> Vec<(usize, i32)> {
                terms.iter().map(|t| (idx(&t.species), t.stoich as i32)).collect()
            };
            let reactants = side(&r.reactants);
            let products = side(&r.products);
            let mut net: BTreeMap<usize, f64> = BTreeMap::new();
            for &(i, a) in &reactants {
                *net.entry(i).or_default() -= a as f64;
            }
            for &(i, b) in &products {
                *net.entry(i).or_default() += b as f64;
            }
            let law = match &r.rate {
                RateLaw::MassAction { k_fwd, k_bwd } => CompiledLaw::MassAction {
                    k_fwd: *k_fwd,
                    k_bwd: if r.bidirectional { *k_bwd } else { None },
                },
                RateLaw::MichaelisMenten { k_cat, k_m } => CompiledLaw::MichaelisMenten {
                    k_cat: *k_cat,
                    k_m: *k_m,
                    substrate: reactants[0].0,
                    enzyme: idx(&r.catalysts[0]),
                },
                RateLaw::Custom { expression } => CompiledLaw::Custom(expression.clone()),
            };
            reactions.push(CompiledReaction {
                label: r.label.clone(),
                reactants,
                products,
                // Catalysts act as first-order multipliers on mass-action
                // rates only; the other laws already account for them.
                catalysts: if matches!(law, CompiledLaw::MassAction { .. }) {
                    r.catalysts.iter().map(|c| idx(c)).collect()
                } else {
                    Vec::new()
                },
                inhibitors: r.inhibitors.iter().map(|i| (idx(&i.species), i.k_i)).collect(),
                delta: net.into_iter().filter(|(_, d)| *d != 0.0).collect(),
                law,
            });
        }
        Ok(Rhs {
            labels,
            index,
            reactions,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn reaction_count(&self) -> usize {
        self.reactions.len()
    }

    /// Rate of reaction `j` at state `x` (net rate for bidirectional ones).
    pub fn rate(&self, j: usize, x: &[f64]) -> Result<f64, EvalError> {
        let r = &self.reactions[j];
        let mass = |terms: &[(usize, i32)]| terms.iter().map(|&(i, a)| x[i].powi(a)).product::<f64>();
        let mut rate = match &r.law {
            CompiledLaw::MassAction { k_fwd, k_bwd } => {
                let fwd = k_fwd * mass(&r.reactants);
                match k_bwd {
                    Some(kb) => fwd - kb * mass(&r.products),
                    None => fwd,
                }
            }
            CompiledLaw::MichaelisMenten {
                k_cat,
                k_m,
                substrate,
                enzyme,
            } => {
                let s = x[*substrate];
                k_cat * x[*enzyme] * s / (k_m + s)
            }
            CompiledLaw::Custom(expr) => {
                let lookup = |name: &str| self.index.get(name).map(|&i| x[i]);
                expr.eval(&lookup, None)?
            }
        };
        for &c in &r.catalysts {
            rate *= x[c];
        }
        for &(i, k_i) in &r.inhibitors {
            rate *= k_i / (k_i + x[i]);
        }
        Ok(rate)
    }

    pub fn rates(&self, x: &[f64]) -> Result<Vec<f64>, SimError> {
        (0..self.reactions.len())
            .map(|j| self.rate(j, x).map_err(|e| self.rate_error(j, f64::NAN, e)))
            .collect()
    }

    fn rate_error(&self, j: usize, time: f64, source: EvalError) -> SimError {
        SimError::Rate {
            reaction: self.reactions[j].label.clone(),
            time,
            source,
        }
    }

    pub fn derivative(&self, x: &[f64]) -> Result<Vec<f64>, SimError> {
        let mut dx = vec![0.0; self.labels.len()];
        self.eval(f64::NAN, x, &mut dx)?;
        Ok(dx)
    }

    /// Species-by-reaction matrix of net stoichiometric changes.
    pub fn stoichiometry(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.reactions.len()]; self.labels.len()];
        for (j, r) in self.reactions.iter().enumerate() {
            for &(i, d) in &r.delta {
                m[i][j] = d;
            }
        }
        m
    }
}

impl OdeSystem for Rhs {
    fn dim(&self) -> usize {
        self.labels.len()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SimError> {
        dy.iter_mut().for_each(|d| *d = 0.0);
        for (j, r) in self.reactions.iter().enumerate() {
            let rate = self.rate(j, y).map_err(|e| self.rate_error(j, t, e))?;
            for &(i, d) in &r.delta {
                dy[i] += d * rate;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// solvers

fn unbounded() -> f64 {
    f64::INFINITY
}

fn is_unbounded(v: &f64) -> bool {
    *v == f64::INFINITY
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Rk4 {
        step: f64,
    },
    Rkf45 {
        abs_tol: f64,
        rel_tol: f64,
        min_step: f64,
        /// Unbounded when omitted.
        #[serde(default = "unbounded", skip_serializing_if = "is_unbounded")]
        max_step: f64,
    },
    DormandPrince45 {
        abs_tol: f64,
        rel_tol: f64,
        min_step: f64,
        /// Unbounded when omitted.
        #[serde(default = "unbounded", skip_serializing_if = "is_unbounded")]
        max_step: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub method: Method,
    /// Defaults to t_end / 1000.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
}

impl SolverConfig {
    pub fn rk4(step: f64) -> Self {
        SolverConfig {
            method: Method::Rk4 { step },
            record_interval: None,
        }
    }

    pub fn rkf45(abs_tol: f64, rel_tol: f64) -> Self {
        SolverConfig {
            method: Method::Rkf45 {
                abs_tol,
                rel_tol,
                min_step: 1e-12,
                max_step: f64::INFINITY,
            },
            record_interval: None,
        }
    }

    pub fn dormand_prince(abs_tol: f64, rel_tol: f64) -> Self {
        SolverConfig {
            method: Method::DormandPrince45 {
                abs_tol,
                rel_tol,
                min_step: 1e-12,
                max_step: f64::INFINITY,
            },
            record_interval: None,
        }
    }

    pub fn with_record_interval(mut self, interval: f64) -> Self {
        self.record_interval = Some(interval);
        self
    }

    /// Absolute tolerance of adaptive methods; zero for fixed-step.
    pub fn abs_tol(&self) -> f64 {
        match self.method {
            Method::Rk4 { .. } => 0.0,
            Method::Rkf45 { abs_tol, .. } | Method::DormandPrince45 { abs_tol, .. } => abs_tol,
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => {
                return bad("step must be positive");
            }
            Method::Rkf45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            }
            | Method::DormandPrince45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            } => {
                if !(abs_tol > 0.0 && rel_tol > 0.0) {
                    return bad("tolerances must be positive");
                }
                if !(min_step > 0.0 && min_step <= max_step) {
                    return bad("need 0 < min_step <= max_step");
                }
            }
            _ => {}
        }
        if let Some(r) = self.record_interval {
            if !(r > 0.0 && r.is_finite()) {
                return bad("record_interval must be positive");
            }
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::dormand_prince(1e-9, 1e-7)
    }
}

struct Tableau {
    c: &'static [f64],
    a: &'static [&'static [f64]],
    /// Weights of the propagated (higher-order) solution.
    b: &'static [f64],
    /// Weights of the embedded lower-order solution.
    b_low: &'static [f64],
}

const FEHLBERG: Tableau = Tableau {
    c: &[0.0, 0.25, 0.375, 12.0 / 13.0, 1.0, 0.5],
    a: &[
        &[],
        &[0.25],
        &[3.0 / 32.0, 9.0 / 32.0],
        &[1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0],
        &[439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0],
        &[-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ],
    b: &[16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0],
    b_low: &[25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0],
};

const DORMAND_PRINCE: Tableau = Tableau {
    c: &[0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0],
    a: &[
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ],
    b: &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0],
    b_low: &[
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ],
};

/// Stateful integrator; carries the adaptive step size between segments.
pub struct Integrator {
    method: Method,
    h: Option<f64>,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    pub steps: u64,
}

impl Integrator {
    pub fn new(method: Method, dim: usize) -> Self {
        let stages = match method {
            Method::Rk4 { .. } => 4,
            Method::Rkf45 { .. } => 6,
            Method::DormandPrince45 { .. } => 7,
        };
        Integrator {
            method,
            h: None,
            k: vec![vec![0.0; dim]; stages],
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            steps: 0,
        }
    }

    /// Advances `y` from `t0` to exactly `t1`.
    pub fn advance(&mut self, sys: &dyn OdeSystem, t0: f64, t1: f64, y: &mut [f64]) -> Result<(), SimError> {
        if t1 <= t0 {
            return Ok(());
        }
        match self.method {
            Method::Rk4 { step } => self.advance_rk4(sys, step, t0, t1, y),
            Method::Rkf45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            } => self.advance_adaptive(sys, &FEHLBERG, [abs_tol, rel_tol, min_step, max_step], t0, t1, y),
            Method::DormandPrince45 {
                abs_tol,
                rel_tol,
                min_step,
                max_step,
            } => self.advance_adaptive(sys, &DORMAND_PRINCE, [abs_tol, rel_tol, min_step, max_step], t0, t1, y),
        }
    }

    fn advance_rk4(&mut self, sys: &dyn OdeSystem, step: f64, t0: f64, t1: f64, y: &mut [f64]) -> Result<(), SimError> {
        let n = y.len();
        let mut t = t0;
        // Step count is fixed up front so rounding cannot add a sliver step.
        let count = ((t1 - t0) / step * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        for i in 0..count {
            let t_next = if i + 1 == count { t1 } else { t0 + (i + 1) as f64 * step };
            let h = t_next - t;
            let [k1, k2, k3, k4] = &mut self.k[..] else { unreachable!() };
            sys.eval(t, y, k1)?;
            for j in 0..n {
                self.tmp[j] = y[j] + 0.5 * h * k1[j];
            }
            sys.eval(t + 0.5 * h, &self.tmp, k2)?;
            for j in 0..n {
                self.tmp[j] = y[j] + 0.5 * h * k2[j];
            }
            sys.eval(t + 0.5 * h, &self.tmp, k3)?;
            for j in 0..n {
                self.tmp[j] = y[j] + h * k3[j];
            }
            sys.eval(t + h, &self.tmp, k4)?;
            for j in 0..n {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            t = t_next;
            self.steps += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(SimError::NonFinite { time: t });
            }
        }
        Ok(())
    }

    fn initial_step(&mut self, sys: &dyn OdeSystem, t: f64, y: &[f64], atol: f64, rtol: f64) -> Result<f64, SimError> {
        let k0 = &mut self.k[0];
        sys.eval(t, y, k0)?;
        let scale = |i: usize| atol + rtol * y[i].abs();
        let n = y.len().max(1) as f64;
        let d0 = (y.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (k0.iter().enumerate().map(|(i, v)| (v / scale(i)).powi(2)).sum::<f64>() / n).sqrt();
        Ok(if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 })
    }

    fn advance_adaptive(
        &mut self,
        sys: &dyn OdeSystem,
        tab: &Tableau,
        [atol, rtol, min_step, max_step]: [f64; 4],
        t0: f64,
        t1: f64,
        y: &mut [f64],
    ) -> Result<(), SimError> {
        let n = y.len();
        let mut t = t0;
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(sys, t, y, atol, rtol)?,
        }
        .clamp(min_step, max_step);
        while t < t1 {
            let remaining = t1 - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            for s in 0..tab.c.len() {
                for j in 0..n {
                    let mut acc = y[j];
                    for (m, a) in tab.a[s].iter().enumerate() {
                        acc += h_try * a * self.k[m][j];
                    }
                    self.tmp[j] = acc;
                }
                sys.eval(t + tab.c[s] * h_try, &self.tmp, &mut self.k[s])?;
            }
            let mut err_sq = 0.0;
            for j in 0..n {
                let mut hi = y[j];
                let mut lo = y[j];
                for s in 0..tab.c.len() {
                    hi += h_try * tab.b[s] * self.k[s][j];
                    lo += h_try * tab.b_low[s] * self.k[s][j];
                }
                self.y_new[j] = hi;
                let sc = atol + rtol * y[j].abs().max(hi.abs());
                err_sq += ((hi - lo) / sc).powi(2);
            }
            let err = (err_sq / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                h = h_try * 0.2;
                if h < min_step {
                    return Err(SimError::NonFinite { time: t });
                }
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                y.copy_from_slice(&self.y_new);
                t = if last { t1 } else { t + h_try };
                self.steps += 1;
                let proposed = (h_try * factor).min(max_step);
                h = if last && h_try < h { h.max(proposed) } else { proposed };
            } else {
                h = h_try * factor;
                if h < min_step {
                    return Err(SimError::StepUnderflow { time: t, min_step });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// traces and simulation

/// Time-indexed concentrations with the user variables visible at each sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    /// One row per sample, one column per species.
    pub values: Vec<Vec<f64>>,
    pub variables: Vec<BTreeMap<String, f64>>,
    /// Times at which interactions were applied.
    pub events: Vec<f64>,
}

impl Trace {
    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.values.iter().map(|row| row[i]).collect())
    }

    /// Value of `label` at the sample at or before `t`.
    pub fn value_at(&self, label: &str, t: f64) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == label)?;
        let row = self.times.partition_point(|&x| x <= t).checked_sub(1)?;
        Some(self.values[row][i])
    }

    pub fn final_state(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Sample grid: multiples of the record interval, the end time and every
/// event time, with near-coincident points merged onto the event time.
fn sample_grid(t_end: f64, interval: f64, events: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = Vec::new();
    let count = (t_end / interval * (1.0 + 1e-12)).floor() as u64;
    for k in 0..=count {
        grid.push((k as f64 * interval).min(t_end));
    }
    grid.push(t_end);
    grid.extend_from_slice(events);
    let event_set: BTreeSet<u64> = events.iter().map(|t| t.to_bits()).collect();
    grid.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(grid.len());
    for t in grid {
        match out.last_mut() {
            Some(prev) if (t - *prev).abs() <= 1e-12 * t.abs().max(1.0) => {
                if event_set.contains(&t.to_bits()) {
                    *prev = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Runs a model with an interaction series. Compartment trees are flattened
/// first; the run is a pure function of its arguments.
pub fn simulate(
    model: &Model,
    series: &InteractionSeries,
    solver: &SolverConfig,
    t_end: f64,
    seed: u64,
) -> Result<Trace, SimError> {
    let (network, map) = model.flatten()?;
    let series = match (&map, model) {
        (Some(_), Model::Tree(tree)) if !series.scopes.is_empty() => series
            .scoped_to_flat(&|comp| {
                tree.compartment(comp)
                    .map(|c| c.network.species_labels().into_iter().collect())
            })
            .map_err(|e| SimError::InvalidSeries(vec![e]))?,
        _ => series.clone(),
    };
    simulate_network(&network, &series, solver, t_end, seed)
}

pub fn simulate_network(
    network: &ReactionNetwork,
    series: &InteractionSeries,
    solver: &SolverConfig,
    t_end: f64,
    seed: u64,
) -> Result<Trace, SimError> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(SimError::InvalidConfig(format!("t_end must be positive, got {t_end}")));
    }
    solver.check()?;
    let rhs = Rhs::new(network)?;
    let labels = rhs.labels().to_vec();
    let problems = series.validate(&labels);
    if !problems.is_empty() {
        return Err(SimError::InvalidSeries(problems));
    }

    let schedule = series.schedule(t_end);
    let event_times: Vec<f64> = schedule.iter().map(|e| e.0).collect();
    let interval = solver.record_interval.unwrap_or(t_end / 1000.0);
    let grid = sample_grid(t_end, interval, &event_times);

    let mut rng = seeded_rng(seed);
    let mut state = SimState::new(0.0, network.initial_state());
    let mut integrator = Integrator::new(solver.method, labels.len());
    let mut trace = Trace {
        labels: labels.clone(),
        times: Vec::with_capacity(grid.len()),
        values: Vec::with_capacity(grid.len()),
        variables: Vec::with_capacity(grid.len()),
        events: Vec::new(),
    };
    let mut next_event = 0;
    for &t in &grid {
        integrator.advance(&rhs, state.time, t, &mut state.concentrations)?;
        state.time = t;
        let mut fired = false;
        while next_event < schedule.len() && schedule[next_event].0 <= t {
            let (_, idx) = schedule[next_event];
            state.concentrations.iter_mut().for_each(|c| *c = c.max(0.0));
            protocol::apply(&mut state, &labels, &series.interactions[idx], &mut rng)
                .map_err(|source| SimError::Event {
                    event: next_event,
                    source,
                })?;
            next_event += 1;
            fired = true;
        }
        if fired {
            trace.events.push(t);
        }
        trace.times.push(t);
        trace
            .values
            .push(state.concentrations.iter().map(|c| c.max(0.0)).collect());
        trace.variables.push(state.variables.clone());
    }
    Ok(trace)
}
