//! Batch performance evaluation, perturbation analysis and dynamics analysis.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{self, JobFailure};
use crate::expr::seeded_rng;
use crate::model::{Model, ModelError, RateRef, ReactionNetwork};
use crate::protocol::{InteractionSeries, OutputKind, Translation};
use crate::sim::{self, Integrator, OdeSystem, Rhs, SimError, SolverConfig, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("invalid evaluation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("could not draw a positive value for {target} after {tries} tries")]
    NonPositive { target: String, tries: u32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    pub model: Model,
    pub series: InteractionSeries,
    pub translations: Vec<Translation>,
    pub repetitions: usize,
    pub solver: SolverConfig,
    pub t_end: f64,
    pub base_seed: u64,
    /// Named constants visible to translations.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
}

/// Readout values of one repetition: `[translation][sample]`.
pub type Readout = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationStats {
    pub name: String,
    pub kind: OutputKind,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Population standard deviation across successful repetitions.
    pub std: Vec<f64>,
    /// Fraction of repetitions reading 1; boolean translations only.
    pub success_rate: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerformanceResult {
    pub repetitions: usize,
    pub failures: usize,
    pub translations: Vec<TranslationStats>,
    /// Per-repetition readouts or failure messages, in repetition order.
    pub outcomes: Vec<Result<Readout, String>>,
}

impl PerformanceResult {
    /// Mean of every per-time mean across all translations.
    pub fn summary(&self) -> f64 {
        let all: Vec<f64> = self
            .translations
            .iter()
            .flat_map(|t| t.mean.iter().copied())
            .collect();
        all.iter().sum::<f64>() / all.len() as f64
    }
}

impl EvaluationSpec {
    pub fn seed_for(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }

    fn check(&self) -> Result<(), EvaluationError> {
        if self.repetitions == 0 {
            return Err(EvaluationError::Invalid("repetitions must be at least 1".into()));
        }
        if self.translations.is_empty() {
            return Err(EvaluationError::Invalid("no translations to evaluate".into()));
        }
        for t in &self.translations {
            if t.samples.times().iter().any(|s| !(*s >= 0.0 && *s <= self.t_end)) {
                return Err(EvaluationError::Invalid(format!(
                    "translation '{}' samples outside [0, {}]",
                    t.name, self.t_end
                )));
            }
        }
        Ok(())
    }

    /// One repetition: simulate and read every translation.
    pub fn run_once(&self, repetition: usize) -> Result<Readout, String> {
        let trace = sim::simulate(&self.model, &self.series, &self.solver, self.t_end, self.seed_for(repetition))
            .map_err(|e| e.to_string())?;
        readout(&self.translations, &trace, &self.constants)
    }
}

pub fn readout(translations: &[Translation], trace: &Trace, constants: &BTreeMap<String, f64>) -> Result<Readout, String> {
    translations
        .iter()
        .map(|t| {
            t.samples
                .times()
                .iter()
                .map(|&s| t.translate(trace, constants, s).map_err(|e| e.to_string()))
                .collect()
        })
        .collect()
}

/// Runs `spec.repetitions` independent simulations (seed = base_seed + i)
/// and aggregates each translation per sample time.
pub fn evaluate_batch(spec: &EvaluationSpec, workers: usize) -> Result<PerformanceResult, EvaluationError> {
    spec.check()?;
    let reps: Vec<usize> = (0..spec.repetitions).collect();
    let (results, _) = executor::map_batch(&reps, workers, |&i| spec.run_once(i));
    let outcomes: Vec<Result<Readout, String>> = results
        .into_iter()
        .map(|r| r.unwrap_or_else(|f: JobFailure| Err(f.to_string())))
        .collect();
    Ok(aggregate(&spec.translations, spec.repetitions, outcomes))
}

fn aggregate(translations: &[Translation], repetitions: usize, outcomes: Vec<Result<Readout, String>>) -> PerformanceResult {
    let ok: Vec<&Readout> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let n = ok.len() as f64;
    let stats = translations
        .iter()
        .enumerate()
        .map(|(ti, t)| {
            let times = t.samples.times();
            let mut mean = vec![0.0; times.len()];
            let mut std = vec![0.0; times.len()];
            for s in 0..times.len() {
                let m = ok.iter().map(|r| r[ti][s]).sum::<f64>() / n;
                let var = ok.iter().map(|r| (r[ti][s] - m).powi(2)).sum::<f64>() / n;
                mean[s] = m;
                std[s] = var.sqrt();
            }
            let success_rate = (t.kind == OutputKind::Boolean).then(|| mean.clone());
            TranslationStats {
                name: t.name.clone(),
                kind: t.kind,
                times,
                mean,
                std,
                success_rate,
            }
        })
        .collect();
    PerformanceResult {
        repetitions,
        failures: outcomes.iter().filter(|o| o.is_err()).count(),
        translations: stats,
        outcomes,
    }
}

// ---------------------------------------------------------------------------
// perturbation

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerturbationMode {
    /// value · (1 + σ·N(0, 1))
    RelativeGaussian { sigma: f64 },
    /// value · U(lo, hi)
    UniformFactor { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub targets: Vec<RateRef>,
    #[serde(flatten)]
    pub mode: PerturbationMode,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    100
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSample {
    pub rates: Vec<f64>,
    pub summary: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationResult {
    pub samples: Vec<PerturbationSample>,
    pub mean: f64,
    pub std: f64,
    /// 5th, 25th, 50th, 75th and 95th percentiles of the summaries.
    pub quantiles: [f64; 5],
}

/// Redraws the target constants `pert.samples` times and evaluates a batch
/// for each draw. Every batch reuses the spec's base seed.
pub fn perturb_and_evaluate(
    spec: &EvaluationSpec,
    pert: &PerturbationSpec,
    workers: usize,
) -> Result<PerturbationResult, EvaluationError> {
    if pert.samples == 0 {
        return Err(EvaluationError::Invalid("samples must be at least 1".into()));
    }
    match pert.mode {
        PerturbationMode::RelativeGaussian { sigma } if !(sigma >= 0.0) => {
            return Err(EvaluationError::Invalid("sigma must be nonnegative".into()))
        }
        PerturbationMode::UniformFactor { lo, hi } if !(lo <= hi) => {
            return Err(EvaluationError::Invalid("need lo <= hi".into()))
        }
        _ => {}
    }
    let base: Vec<f64> = pert
        .targets
        .iter()
        .map(|t| spec.model.get_rate(t))
        .collect::<Result<_, _>>()?;
    let mut rng = seeded_rng(pert.seed);
    let mut samples = Vec::with_capacity(pert.samples);
    for _ in 0..pert.samples {
        let mut model = spec.model.clone();
        let mut rates = Vec::with_capacity(base.len());
        for (target, &value) in pert.targets.iter().zip(&base) {
            let mut tries = 0;
            let drawn = loop {
                let v = match pert.mode {
                    PerturbationMode::RelativeGaussian { sigma } => {
                        let z: f64 = rng.sample(StandardNormal);
                        value * (1.0 + sigma * z)
                    }
                    PerturbationMode::UniformFactor { lo, hi } => value * rng.random_range(lo..=hi),
                };
                if v > 0.0 && v.is_finite() {
                    break v;
                }
                tries += 1;
                if tries >= pert.max_retries {
                    return Err(EvaluationError::NonPositive {
                        target: target.to_string(),
                        tries,
                    });
                }
            };
            model.set_rate(target, drawn)?;
            rates.push(drawn);
        }
        let perturbed = EvaluationSpec {
            model,
            ..spec.clone()
        };
        let result = evaluate_batch(&perturbed, workers)?;
        samples.push(PerturbationSample {
            rates,
            summary: result.summary(),
            failures: result.failures,
        });
    }
    let values: Vec<f64> = samples.iter().map(|s| s.summary).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| quantile(&sorted, q));
    Ok(PerturbationResult {
        samples,
        mean,
        std,
        quantiles,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

// ---------------------------------------------------------------------------
// dynamics

/// Reference and companion trajectory integrated as one system so both see
/// identical step sizes.
struct Pair<'a> {
    rhs: &'a Rhs,
    n: usize,
}

impl OdeSystem for Pair<'_> {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), SimError> {
        let (y1, y2) = y.split_at(self.n);
        let (d1, d2) = dy.split_at_mut(self.n);
        self.rhs.eval(t, y1, d1)?;
        self.rhs.eval(t, y2, d2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovOptions {
    pub horizon: f64,
    pub renorm_interval: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    pub solver: SolverConfig,
}

fn default_delta0() -> f64 {
    1e-8
}

/// Largest Lyapunov exponent by repeated renormalisation of a companion
/// trajectory started `delta0` away. The first 10% of intervals are
/// discarded as transient.
pub fn lyapunov_largest(network: &ReactionNetwork, initial: &[f64], opts: &LyapunovOptions) -> Result<f64, EvaluationError> {
    if !(opts.delta0 > 0.0) || !(opts.renorm_interval > 0.0) || !(opts.horizon >= opts.renorm_interval) {
        return Err(EvaluationError::Invalid(
            "need delta0 > 0 and 0 < renorm_interval <= horizon".into(),
        ));
    }
    opts.solver.check()?;
    let rhs = Rhs::new(network)?;
    let n = rhs.labels().len();
    if initial.len() != n {
        return Err(EvaluationError::Invalid(format!(
            "initial state has {} values for {n} species",
            initial.len()
        )));
    }
    if n == 0 {
        return Err(EvaluationError::Invalid("network has no species".into()));
    }
    let pair = Pair { rhs: &rhs, n };
    let offset = opts.delta0 / (n as f64).sqrt();
    let mut y: Vec<f64> = initial.iter().copied().chain(initial.iter().map(|v| v + offset)).collect();
    let mut integrator = Integrator::new(opts.solver.method, 2 * n);
    let intervals = (opts.horizon / opts.renorm_interval).round().max(1.0) as usize;
    let skip = intervals / 10;
    let mut logs = Vec::with_capacity(intervals);
    let mut t = 0.0;
    for i in 0..intervals {
        let t_next = (i + 1) as f64 * opts.renorm_interval;
        integrator.advance(&pair, t, t_next, &mut y)?;
        t = t_next;
        let (y1, y2) = y.split_at_mut(n);
        let d = y1.iter().zip(y2.iter()).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
        if !(d > 0.0 && d.is_finite()) {
            return Err(EvaluationError::Invalid(format!(
                "trajectory separation became {d} at t={t}"
            )));
        }
        logs.push((d / opts.delta0).ln() / opts.renorm_interval);
        let scale = opts.delta0 / d;
        for (a, b) in y1.iter().zip(y2.iter_mut()) {
            *b = a + (*b - a) * scale;
        }
    }
    let kept = &logs[skip..];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoints {
    pub flags: Vec<bool>,
    pub count: usize,
}

/// Flags species whose concentration range over the final `window` time
/// units of the trace stays below `eps`.
pub fn fixed_points(trace: &Trace, eps: f64, window: f64) -> FixedPoints {
    let end = trace.times.last().copied().unwrap_or(0.0);
    let first = trace.times.partition_point(|&t| t < end - window.max(0.0));
    let rows = &trace.values[first.min(trace.values.len())..];
    let flags: Vec<bool> = (0..trace.labels.len())
        .map(|i| {
            let (lo, hi) = rows
                .iter()
                .map(|r| r[i])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            !rows.is_empty() && hi - lo < eps
        })
        .collect();
    let count = flags.iter().filter(|f| **f).count();
    FixedPoints { flags, count }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsReport {
    pub labels: Vec<String>,
    pub largest_lyapunov: Option<f64>,
    pub fixed_points: FixedPoints,
    /// |d[X]/dt| at the final state.
    pub final_derivative: Vec<f64>,
}

/// Simulates the network from its initial concentrations and reports fixed
/// points, final derivative magnitudes and optionally the Lyapunov exponent.
pub fn analyze(
    network: &ReactionNetwork,
    solver: &SolverConfig,
    t_end: f64,
    eps: f64,
    window: f64,
    lyapunov: Option<&LyapunovOptions>,
) -> Result<DynamicsReport, EvaluationError> {
    let trace = sim::simulate_network(network, &InteractionSeries::default(), solver, t_end, 0)?;
    let fixed_points = fixed_points(&trace, eps, window);
    let rhs = Rhs::new(network)?;
    let final_derivative = rhs.derivative(trace.final_state())?.iter().map(|d| d.abs()).collect();
    let largest_lyapunov = lyapunov
        .map(|opts| lyapunov_largest(network, &network.initial_state(), opts))
        .transpose()?;
    Ok(DynamicsReport {
        labels: trace.labels.clone(),
        largest_lyapunov,
        fixed_points,
        final_derivative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Reaction, Species};
    use crate::protocol::{parse_series, SampleTimes};

    fn decay(k: f64) -> ReactionNetwork {
        ReactionNetwork {
            name: "decay".into(),
            species: vec![Species::with_initial("A", 1.0)],
            reactions: vec![Reaction::mass_action("d", &[("A", 1)], &[], k)],
            parent: None,
        }
    }

    fn spec(series: InteractionSeries, translations: Vec<Translation>, reps: usize) -> EvaluationSpec {
        EvaluationSpec {
            model: Model::Network(decay(0.5)),
            series,
            translations,
            repetitions: reps,
            solver: SolverConfig::default().with_record_interval(0.1),
            t_end: 2.0,
            base_seed: 42,
            constants: BTreeMap::new(),
        }
    }

    fn translation(name: &str, expr: &str, kind: OutputKind, times: Vec<f64>) -> Translation {
        Translation {
            name: name.into(),
            expr: crate::expr::parse(expr).unwrap(),
            kind,
            samples: SampleTimes::Explicit(times),
        }
    }

    #[test]
    fn deterministic_batch_has_zero_spread() {
        let s = spec(
            InteractionSeries::default(),
            vec![translation("a", "A", OutputKind::Numeric, vec![0.0, 1.0, 2.0])],
            5,
        );
        let r = evaluate_batch(&s, 2).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.translations[0].std.iter().all(|s| *s == 0.0));
        assert!((r.translations[0].mean[2] - (-1.0f64).exp()).abs() < 1e-6);
        assert!(r.translations[0].success_rate.is_none());
    }

    #[test]
    fn always_true_boolean_has_full_success() {
        let s = spec(
            InteractionSeries::default(),
            vec![translation("pos", "A >= 0", OutputKind::Boolean, vec![1.0, 2.0])],
            4,
        );
        let r = evaluate_batch(&s, 3).unwrap();
        assert_eq!(r.translations[0].success_rate, Some(vec![1.0, 1.0]));
    }

    #[test]
    fn coin_readout_success_rate_near_half() {
        let series = parse_series("c", "at 0.5\n A <- coin(0.5) * 3").unwrap();
        let s = spec(
            series,
            vec![translation("hit", "A > 1", OutputKind::Boolean, vec![1.0])],
            2000,
        );
        let r = evaluate_batch(&s, 4).unwrap();
        let rate = r.translations[0].success_rate.as_ref().unwrap()[0];
        // 2000 draws: binomial standard error ~0.011
        assert!((rate - 0.5).abs() < 0.04, "{rate}");
    }

    #[test]
    fn batch_is_worker_invariant_and_extensible() {
        let series = parse_series("c", "at 0.5\n A <- uniform(0, 2)").unwrap();
        let t = vec![translation("a", "A", OutputKind::Numeric, vec![1.0, 2.0])];
        let small = evaluate_batch(&spec(series.clone(), t.clone(), 6), 1).unwrap();
        let wide = evaluate_batch(&spec(series.clone(), t.clone(), 6), 8).unwrap();
        assert_eq!(small, wide);
        let more = evaluate_batch(&spec(series, t, 9), 3).unwrap();
        assert_eq!(&more.outcomes[..6], &small.outcomes[..]);
    }

    #[test]
    fn failing_repetitions_are_counted() {
        let series = parse_series("f", "at 1\n A <- log(A - 10)").unwrap();
        let s = spec(series, vec![translation("a", "A", OutputKind::Numeric, vec![0.0])], 3);
        let r = evaluate_batch(&s, 2).unwrap();
        assert_eq!(r.failures, 3);
        assert!(r.outcomes.iter().all(|o| o.is_err()));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let t = vec![translation("a", "A", OutputKind::Numeric, vec![5.0])];
        assert!(evaluate_batch(&spec(InteractionSeries::default(), t, 2), 1).is_err());
        assert!(evaluate_batch(&spec(InteractionSeries::default(), vec![], 2), 1).is_err());
    }

    fn decay_readout_spec() -> EvaluationSpec {
        spec(
            InteractionSeries::default(),
            vec![translation("a", "A", OutputKind::Numeric, vec![1.0])],
            1,
        )
    }

    #[test]
    fn degenerate_perturbations_reproduce_the_baseline() {
        let s = decay_readout_spec();
        let baseline = evaluate_batch(&s, 1).unwrap().summary();
        for mode in [
            PerturbationMode::RelativeGaussian { sigma: 0.0 },
            PerturbationMode::UniformFactor { lo: 1.0, hi: 1.0 },
        ] {
            let p = PerturbationSpec {
                targets: vec![RateRef::forward("d")],
                mode,
                samples: 4,
                seed: 1,
                max_retries: 10,
            };
            let r = perturb_and_evaluate(&s, &p, 2).unwrap();
            assert!(r.samples.iter().all(|x| x.summary == baseline));
            assert_eq!(r.std, 0.0);
        }
    }

    #[test]
    fn gaussian_perturbation_spreads_the_readout() {
        let s = decay_readout_spec();
        let p = PerturbationSpec {
            targets: vec![RateRef::forward("d")],
            mode: PerturbationMode::RelativeGaussian { sigma: 0.1 },
            samples: 20,
            seed: 3,
            max_retries: 10,
        };
        let r = perturb_and_evaluate(&s, &p, 2).unwrap();
        assert!(r.std > 0.0);
        // Forward oracle: each sample's readout equals exp(-k) for its own k.
        for sample in &r.samples {
            assert!((sample.summary - (-sample.rates[0]).exp()).abs() < 1e-6);
        }
        assert!(r.quantiles.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn perturbation_gives_up_on_nonpositive_draws() {
        let p = PerturbationSpec {
            targets: vec![RateRef::forward("d")],
            mode: PerturbationMode::UniformFactor { lo: -2.0, hi: -1.0 },
            samples: 1,
            seed: 0,
            max_retries: 5,
        };
        assert!(matches!(
            perturb_and_evaluate(&decay_readout_spec(), &p, 1),
            Err(EvaluationError::NonPositive { tries: 5, .. })
        ));
        let missing = PerturbationSpec {
            targets: vec![RateRef::forward("nope")],
            ..p
        };
        assert!(matches!(
            perturb_and_evaluate(&decay_readout_spec(), &missing, 1),
            Err(EvaluationError::Model(_))
        ));
    }

    fn lyap_opts(horizon: f64, tau: f64) -> LyapunovOptions {
        LyapunovOptions {
            horizon,
            renorm_interval: tau,
            delta0: 1e-8,
            solver: SolverConfig::dormand_prince(1e-12, 1e-10),
        }
    }

    #[test]
    fn lyapunov_of_linear_decay() {
        let k = 0.5;
        let l = lyapunov_largest(&decay(k), &[1.0], &lyap_opts(50.0 / k, 1.0)).unwrap();
        assert!((l + k).abs() <= 0.05 * k, "{l}");
    }

    #[test]
    fn lyapunov_of_constant_influx_is_zero() {
        let net = ReactionNetwork::new("influx")
            .with_species(&["A"])
            .with_reaction(Reaction::mass_action("in", &[], &[("A", 1)], 1.0));
        let l = lyapunov_largest(&net, &[0.0], &lyap_opts(100.0, 1.0)).unwrap();
        assert!(l.abs() <= 0.05, "{l}");
    }

    #[test]
    fn lyapunov_negative_for_point_attractor() {
        // dX/dt = X - X^3: settles at X = 1 where the slope is -2.
        let net = ReactionNetwork {
            name: "cubic".into(),
            species: vec![Species::with_initial("X", 0.5)],
            reactions: vec![
                Reaction::mass_action("grow", &[("X", 1)], &[("X", 2)], 1.0),
                Reaction::mass_action("limit", &[("X", 3)], &[("X", 2)], 1.0),
            ],
            parent: None,
        };
        let trace = sim::simulate_network(&net, &InteractionSeries::default(), &SolverConfig::default(), 40.0, 0).unwrap();
        assert!((trace.final_state()[0] - 1.0).abs() < 1e-6);
        let l = lyapunov_largest(&net, &[0.5], &lyap_opts(40.0, 0.5)).unwrap();
        assert!(l < 0.0, "{l}");
    }

    #[test]
    fn fixed_point_flags() {
        let decayed = Trace {
            labels: vec!["A".into(), "G".into()],
            times: vec![0.0, 1.0, 2.0, 3.0],
            values: vec![vec![1.0, 0.0], vec![1e-9, 1.0], vec![1e-10, 2.0], vec![0.0, 3.0]],
            variables: vec![BTreeMap::new(); 4],
            events: vec![],
        };
        let fp = fixed_points(&decayed, 1e-6, 2.0);
        assert_eq!(fp.flags, vec![true, false]);
        assert_eq!(fp.count, 1);

        let k = 0.5;
        let trace = sim::simulate_network(&decay(k), &InteractionSeries::default(), &SolverConfig::default(), 20.0 / k, 0).unwrap();
        let fp = fixed_points(&trace, 1e-4, 4.0);
        assert_eq!(fp.flags, vec![true]);
    }

    #[test]
    fn analyze_reports_all_parts() {
        let report = analyze(&decay(1.0), &SolverConfig::default(), 30.0, 1e-6, 3.0, Some(&lyap_opts(20.0, 1.0))).unwrap();
        assert_eq!(report.fixed_points.count, 1);
        assert!(report.final_derivative[0] < 1e-9);
        assert!((report.largest_lyapunov.unwrap() + 1.0).abs() < 0.05);
    }
}
