//! Genetic algorithm over real-valued rate-constant chromosomes.
//!
//! Mutation names follow the usual "bit" vocabulary but act on whole genes:
//! a chromosome is a vector of reals, not a bit string.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor;
use crate::expr::{fmt_number, seeded_rng, SimRng};
use crate::model::{Model, ModelError, RateRef};
use crate::sim::Trace;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaError {
    #[error("invalid gene spec for {target}: {message}")]
    Gene { target: String, message: String },
    #[error("invalid GA config: {0}")]
    Config(String),
    #[error("chromosome lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("crossover point {point} outside 0..={len}")]
    CrossoverPoint { point: usize, len: usize },
    #[error("{0} mutation needs at least 2 genes")]
    TooShort(&'static str),
    #[error("every fitness evaluation failed in generation {0}")]
    AllFailed(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneSpec {
    pub target: RateRef,
    pub range: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_group: Option<String>,
}

impl GeneSpec {
    pub fn new(target: RateRef, min: f64, max: f64) -> Self {
        GeneSpec {
            target,
            range: [min, max],
            tie_group: None,
        }
    }

    pub fn tied(mut self, group: &str) -> Self {
        self.tie_group = Some(group.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Chromosome {
    pub genes: Vec<f64>,
}

impl From<Vec<f64>> for Chromosome {
    fn from(genes: Vec<f64>) -> Self {
        Chromosome { genes }
    }
}

/// One chromosome position and the rate constants it drives.
#[derive(Clone, Debug, PartialEq)]
pub struct Gene {
    pub range: [f64; 2],
    pub targets: Vec<RateRef>,
}

/// Gene specs with tie groups collapsed, in first-appearance order.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneLayout {
    pub genes: Vec<Gene>,
}

impl GeneLayout {
    pub fn new(specs: &[GeneSpec]) -> Result<GeneLayout, GaError> {
        let mut genes: Vec<Gene> = Vec::new();
        let mut groups: BTreeMap<&str, usize> = BTreeMap::new();
        for spec in specs {
            let [lo, hi] = spec.range;
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(GaError::Gene {
                    target: spec.target.to_string(),
                    message: format!("range [{lo}, {hi}] must satisfy 0 < min < max"),
                });
            }
            match spec.tie_group.as_deref().and_then(|g| groups.get(g).map(|i| (g, *i))) {
                Some((group, i)) => {
                    if genes[i].range != spec.range {
                        return Err(GaError::Gene {
                            target: spec.target.to_string(),
                            message: format!("range differs from the rest of tie group '{group}'"),
                        });
                    }
                    genes[i].targets.push(spec.target.clone());
                }
                None => {
                    if let Some(g) = spec.tie_group.as_deref() {
                        groups.insert(g, genes.len());
                    }
                    genes.push(Gene {
                        range: spec.range,
                        targets: vec![spec.target.clone()],
                    });
                }
            }
        }
        Ok(GeneLayout { genes })
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn ranges(&self) -> Vec<[f64; 2]> {
        self.genes.iter().map(|g| g.range).collect()
    }

    /// Writes every gene into all of its targets.
    pub fn apply(&self, model: &Model, c: &Chromosome) -> Result<Model, GaError> {
        if c.genes.len() != self.len() {
            return Err(GaError::LengthMismatch(c.genes.len(), self.len()));
        }
        let mut out = model.clone();
        for (gene, &value) in self.genes.iter().zip(&c.genes) {
            for target in &gene.targets {
                out.set_rate(target, value)?;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selection {
    Elite { k: usize },
    Roulette,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossover {
    OnePoint,
    Shuffle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mutation {
    OneBit,
    TwoBit,
    Exchange,
    PerBit { p: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MutationMode {
    /// Uniform redraw within the gene range.
    Replace,
    /// Multiply by 1 + sigma·N(0, 1), then clamp to the range.
    Perturb {
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
}

fn default_sigma() -> f64 {
    0.1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Maximize,
    Minimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub selection: Selection,
    pub crossover: Crossover,
    pub crossover_prob: f64,
    pub mutation: Mutation,
    pub mutation_mode: MutationMode,
    #[serde(default)]
    pub renormalize_fitness: bool,
    pub objective: Objective,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 30,
            generations: 40,
            selection: Selection::Elite { k: 3 },
            crossover: Crossover::OnePoint,
            crossover_prob: 0.7,
            mutation: Mutation::OneBit,
            mutation_mode: MutationMode::Perturb { sigma: 0.1 },
            renormalize_fitness: false,
            objective: Objective::Maximize,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn check(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::Config(m.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.generations == 0 {
            return bad("generations must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return bad("crossover_prob must be in [0, 1]");
        }
        if let Mutation::PerBit { p } = self.mutation {
            if !(0.0..=1.0).contains(&p) {
                return bad("per_bit probability must be in [0, 1]");
            }
        }
        if let MutationMode::Perturb { sigma } = self.mutation_mode {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad("perturb sigma must be nonnegative");
            }
        }
        if let Selection::Elite { k } = self.selection {
            if k == 0 {
                return bad("elite k must be at least 1");
            }
        }
        Ok(())
    }

    fn score(&self, f: f64) -> f64 {
        match self.objective {
            Objective::Maximize => f,
            Objective::Minimize => -f,
        }
    }
}

/// Child takes genes `[0, p)` from `a` and `[p, n)` from `b`.
pub fn crossover_one_point(a: &Chromosome, b: &Chromosome, p: usize) -> Result<Chromosome, GaError> {
    if a.genes.len() != b.genes.len() {
        return Err(GaError::LengthMismatch(a.genes.len(), b.genes.len()));
    }
    if p > a.genes.len() {
        return Err(GaError::CrossoverPoint {
            point: p,
            len: a.genes.len(),
        });
    }
    Ok(a.genes[..p].iter().chain(&b.genes[p..]).copied().collect::<Vec<_>>().into())
}

/// Each gene comes from `a` or `b` with probability 1/2.
pub fn crossover_shuffle(a: &Chromosome, b: &Chromosome, rng: &mut SimRng) -> Result<Chromosome, GaError> {
    if a.genes.len() != b.genes.len() {
        return Err(GaError::LengthMismatch(a.genes.len(), b.genes.len()));
    }
    Ok(a.genes
        .iter()
        .zip(&b.genes)
        .map(|(x, y)| if rng.random_bool(0.5) { *x } else { *y })
        .collect::<Vec<_>>()
        .into())
}

fn redraw(value: f64, range: [f64; 2], mode: MutationMode, rng: &mut SimRng) -> f64 {
    match mode {
        MutationMode::Replace => rng.random_range(range[0]..=range[1]),
        MutationMode::Perturb { sigma } => {
            let z: f64 = rng.sample(StandardNormal);
            (value * (1.0 + sigma * z)).clamp(range[0], range[1])
        }
    }
}

pub fn mutate(
    c: &Chromosome,
    ranges: &[[f64; 2]],
    mutation: Mutation,
    mode: MutationMode,
    rng: &mut SimRng,
) -> Result<Chromosome, GaError> {
    let n = c.genes.len();
    if ranges.len() != n {
        return Err(GaError::LengthMismatch(n, ranges.len()));
    }
    let mut genes = c.genes.clone();
    match mutation {
        Mutation::OneBit => {
            if n > 0 {
                let i = rng.random_range(0..n);
                genes[i] = redraw(genes[i], ranges[i], mode, rng);
            }
        }
        Mutation::TwoBit => {
            if n < 2 {
                return Err(GaError::TooShort("two_bit"));
            }
            let (i, j) = two_distinct(n, rng);
            genes[i] = redraw(genes[i], ranges[i], mode, rng);
            genes[j] = redraw(genes[j], ranges[j], mode, rng);
        }
        Mutation::Exchange => {
            if n < 2 {
                return Err(GaError::TooShort("exchange"));
            }
            let (i, j) = two_distinct(n, rng);
            genes.swap(i, j);
            genes[i] = genes[i].clamp(ranges[i][0], ranges[i][1]);
            genes[j] = genes[j].clamp(ranges[j][0], ranges[j][1]);
        }
        Mutation::PerBit { p } => {
            for i in 0..n {
                if rng.random_bool(p) {
                    genes[i] = redraw(genes[i], ranges[i], mode, rng);
                }
            }
        }
    }
    Ok(genes.into())
}

fn two_distinct(n: usize, rng: &mut SimRng) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    (i, j)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    pub best_genes: Vec<f64>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub best: Chromosome,
    pub best_fitness: f64,
    pub history: Vec<GenerationStats>,
}

/// Roulette weights from selection scores (already sign-adjusted for the
/// objective). Nonpositive scores force renormalisation; a flat population
/// selects uniformly.
pub fn roulette_weights(scores: &[f64], renormalize: bool) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let raw: Vec<f64> = if renormalize || lo <= 0.0 {
        scores.iter().map(|s| (s - lo) / (hi - lo)).collect()
    } else {
        scores.to_vec()
    };
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn spin(weights: &[f64], rng: &mut SimRng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Runs the GA. `fitness` may fail or panic; such chromosomes get the worst
/// fitness seen in their generation. Fitness calls within a generation run
/// on `workers` threads; the result does not depend on `workers`.
pub fn run_ga<F>(layout: &GeneLayout, config: &GaConfig, workers: usize, fitness: F) -> Result<GaResult, GaError>
where
    F: Fn(&Chromosome) -> Result<f64, String> + Sync,
{
    config.check()?;
    let ranges = layout.ranges();
    let mut rng = seeded_rng(config.seed);
    let mut population: Vec<(Chromosome, Option<f64>)> = (0..config.population_size)
        .map(|_| {
            let genes = ranges.iter().map(|r| rng.random_range(r[0]..=r[1])).collect::<Vec<_>>();
            (genes.into(), None)
        })
        .collect();
    let mut history = Vec::with_capacity(config.generations);
    let mut best: Option<(Chromosome, f64)> = None;

    for generation in 0..config.generations {
        let pending: Vec<&Chromosome> = population.iter().filter(|(_, f)| f.is_none()).map(|(c, _)| c).collect();
        let (results, _) = executor::map_batch(&pending, workers, |c| fitness(c));
        let mut fresh = results.into_iter();
        let mut failures = 0;
        let raw: Vec<Option<f64>> = population
            .iter()
            .map(|(c, cached)| match cached {
                Some(f) => Some(*f),
                None => match fresh.next().expect("one result per pending chromosome") {
                    Ok(Ok(f)) if f.is_finite() => Some(f),
                    other => {
                        failures += 1;
                        let why = match other {
                            Ok(Ok(f)) => format!("non-finite fitness {f}"),
                            Ok(Err(e)) => e,
                            Err(e) => e.to_string(),
                        };
                        warn!("generation {generation}: fitness failed for {:?}: {why}", c.genes);
                        None
                    }
                },
            })
            .collect();
        let worst_score = raw
            .iter()
            .flatten()
            .map(|f| config.score(*f))
            .fold(f64::INFINITY, f64::min);
        if worst_score == f64::INFINITY {
            return Err(GaError::AllFailed(generation));
        }
        // Failed chromosomes take the worst score; only real values are cached.
        let scores: Vec<f64> = raw.iter().map(|f| f.map_or(worst_score, |f| config.score(f))).collect();
        for ((_, cached), f) in population.iter_mut().zip(&raw) {
            *cached = *f;
        }

        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let top = order[0];
        let unscore = |s: f64| config.score(s);
        history.push(GenerationStats {
            generation,
            best: unscore(scores[top]),
            mean: unscore(scores.iter().sum::<f64>() / scores.len() as f64),
            worst: unscore(worst_score),
            best_genes: population[top].0.genes.clone(),
            failures,
        });
        if best.as_ref().is_none_or(|(_, s)| scores[top] > *s) {
            best = Some((population[top].0.clone(), scores[top]));
        }

        if generation + 1 == config.generations {
            break;
        }
        population = breed(&population, &scores, &order, &ranges, config, &mut rng)?;
    }

    let (best, score) = best.expect("at least one generation ran");
    Ok(GaResult {
        best,
        best_fitness: config.score(score),
        history,
    })
}

fn breed(
    population: &[(Chromosome, Option<f64>)],
    scores: &[f64],
    order: &[usize],
    ranges: &[[f64; 2]],
    config: &GaConfig,
    rng: &mut SimRng,
) -> Result<Vec<(Chromosome, Option<f64>)>, GaError> {
    let size = config.population_size;
    let mut next = Vec::with_capacity(size);
    let parents: Vec<usize>;
    let weights: Option<Vec<f64>>;
    match config.selection {
        Selection::Elite { k } => {
            let k = k.min(size);
            parents = order[..k].to_vec();
            next.extend(parents.iter().map(|&i| population[i].clone()));
            weights = None;
        }
        Selection::Roulette => {
            parents = (0..size).collect();
            weights = Some(roulette_weights(scores, config.renormalize_fitness));
        }
    }
    let pick = |rng: &mut SimRng| -> usize {
        match &weights {
            Some(w) => parents[spin(w, rng)],
            None => *parents.choose(rng).expect("elite set is nonempty"),
        }
    };
    let n = ranges.len();
    while next.len() < size {
        let a = &population[pick(rng)].0;
        let child = if rng.random_bool(config.crossover_prob) {
            let b = &population[pick(rng)].0;
            match config.crossover {
                Crossover::OnePoint => {
                    let p = rng.random_range(0..=n);
                    crossover_one_point(a, b, p)?
                }
                Crossover::Shuffle => crossover_shuffle(a, b, rng)?,
            }
        } else {
            a.clone()
        };
        let child = mutate(&child, ranges, config.mutation, config.mutation_mode, rng)?;
        next.push((child, None));
    }
    Ok(next)
}

/// `generation,best,mean,worst,failures,gene_0,...` with one row per generation.
pub fn history_csv(history: &[GenerationStats]) -> String {
    let genes = history.first().map_or(0, |h| h.best_genes.len());
    let mut out = String::from("generation,best,mean,worst,failures");
    for i in 0..genes {
        write!(out, ",gene_{i}").unwrap();
    }
    out.push('\n');
    for h in history {
        write!(
            out,
            "{},{},{},{},{}",
            h.generation,
            fmt_number(h.best),
            fmt_number(h.mean),
            fmt_number(h.worst),
            h.failures
        )
        .unwrap();
        for g in &h.best_genes {
            write!(out, ",{}", fmt_number(*g)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reference samples for least-squares trace fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub species: Vec<String>,
    pub times: Vec<f64>,
    /// `values[i][j]`: species j at times[i].
    pub values: Vec<Vec<f64>>,
}

impl ReferenceData {
    pub fn from_trace(trace: &Trace, species: &[String], times: &[f64]) -> Option<ReferenceData> {
        let values = times
            .iter()
            .map(|&t| species.iter().map(|s| trace.value_at(s, t)).collect::<Option<Vec<f64>>>())
            .collect::<Option<Vec<_>>>()?;
        Some(ReferenceData {
            species: species.to_vec(),
            times: times.to_vec(),
            values,
        })
    }

    /// Sum of squared deviations of `trace` from the reference samples.
    pub fn squared_error(&self, trace: &Trace) -> Result<f64, String> {
        let mut total = 0.0;
        for (t, row) in self.times.iter().zip(&self.values) {
            for (s, v) in self.species.iter().zip(row) {
                let got = trace
                    .value_at(s, *t)
                    .ok_or_else(|| format!("no sample of {s} at t={t}"))?;
                total += (got - v).powi(2);
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Reaction, ReactionNetwork, Species};
    use crate::protocol::InteractionSeries;
    use crate::sim::{simulate, SolverConfig};

    fn ch(v: &[f64]) -> Chromosome {
        v.to_vec().into()
    }

    #[test]
    fn one_point_examples() {
        let a = ch(&[1.0, 2.0, 3.0, 4.0]);
        let b = ch(&[5.0, 6.0, 7.0, 8.0]);
        assert_eq!(crossover_one_point(&a, &b, 2).unwrap(), ch(&[1.0, 2.0, 7.0, 8.0]));
        assert_eq!(crossover_one_point(&a, &b, 0).unwrap(), b);
        assert_eq!(crossover_one_point(&a, &b, 4).unwrap(), a);
        assert!(crossover_one_point(&a, &b, 5).is_err());
        assert!(crossover_one_point(&a, &ch(&[1.0]), 0).is_err());
    }

    #[test]
    fn shuffle_properties() {
        let a = ch(&[1.0, 2.0, 3.0]);
        let mut rng = seeded_rng(1);
        assert_eq!(crossover_shuffle(&a, &a, &mut rng).unwrap(), a);

        let ones = ch(&[1.0; 100]);
        let zeros = ch(&[0.0; 100]);
        let mut from_a = 0.0;
        for _ in 0..100 {
            from_a += crossover_shuffle(&ones, &zeros, &mut rng).unwrap().genes.iter().sum::<f64>();
        }
        // 10,000 Bernoulli(1/2) draws: standard error 0.005
        assert!((from_a / 10_000.0 - 0.5).abs() < 0.02);

        let c1 = crossover_shuffle(&ones, &zeros, &mut seeded_rng(9)).unwrap();
        let c2 = crossover_shuffle(&ones, &zeros, &mut seeded_rng(9)).unwrap();
        assert_eq!(c1, c2);
    }

    fn changed(a: &Chromosome, b: &Chromosome) -> usize {
        a.genes.iter().zip(&b.genes).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn mutation_operators() {
        let ranges = [[0.0, 10.0]; 5];
        let c = ch(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let mut rng = seeded_rng(3);
        for _ in 0..200 {
            let m = mutate(&c, &ranges, Mutation::OneBit, MutationMode::Replace, &mut rng).unwrap();
            assert_eq!(changed(&c, &m), 1);
            let m = mutate(&c, &ranges, Mutation::TwoBit, MutationMode::Replace, &mut rng).unwrap();
            assert_eq!(changed(&c, &m), 2);
            let m = mutate(&c, &ranges, Mutation::Exchange, MutationMode::Replace, &mut rng).unwrap();
            assert_eq!(changed(&c, &m), 2);
            let mut sorted = m.genes.clone();
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, c.genes);
        }
        let m = mutate(&c, &ranges, Mutation::PerBit { p: 0.0 }, MutationMode::Replace, &mut rng).unwrap();
        assert_eq!(m, c);
        let m = mutate(&c, &ranges, Mutation::PerBit { p: 1.0 }, MutationMode::Replace, &mut rng).unwrap();
        assert_eq!(changed(&c, &m), 5);
        let short = ch(&[1.0]);
        assert!(mutate(&short, &ranges[..1], Mutation::TwoBit, MutationMode::Replace, &mut rng).is_err());
        assert!(mutate(&short, &ranges[..1], Mutation::Exchange, MutationMode::Replace, &mut rng).is_err());
    }

    #[test]
    fn exchange_swaps_three_genes() {
        let c = ch(&[1.0, 2.0, 3.0]);
        let ranges = [[0.0, 5.0]; 3];
        let mut seen_outer_swap = false;
        for seed in 0..50 {
            let m = mutate(&c, &ranges, Mutation::Exchange, MutationMode::Replace, &mut seeded_rng(seed)).unwrap();
            seen_outer_swap |= m == ch(&[3.0, 2.0, 1.0]);
        }
        assert!(seen_outer_swap);
    }

    #[test]
    fn mutation_stays_in_range() {
        let ranges = [[0.5, 1.5], [10.0, 20.0]];
        let c = ch(&[1.4, 19.0]);
        let mut rng = seeded_rng(5);
        for mode in [MutationMode::Replace, MutationMode::Perturb { sigma: 2.0 }] {
            for _ in 0..1000 {
                let m = mutate(&c, &ranges, Mutation::PerBit { p: 0.7 }, mode, &mut rng).unwrap();
                for (g, r) in m.genes.iter().zip(&ranges) {
                    assert!(*g >= r[0] && *g <= r[1]);
                }
            }
        }
    }

    #[test]
    fn layout_collapses_tie_groups() {
        let specs = vec![
            GeneSpec::new(RateRef::forward("a"), 0.1, 1.0).tied("g"),
            GeneSpec::new(RateRef::forward("b"), 0.1, 2.0),
            GeneSpec::new(RateRef::forward("c"), 0.1, 1.0).tied("g"),
        ];
        let layout = GeneLayout::new(&specs).unwrap();
        assert_eq!(layout.len(), 2);
        assert_eq!(layout.genes[0].targets.len(), 2);

        let bad = vec![
            GeneSpec::new(RateRef::forward("a"), 0.1, 1.0).tied("g"),
            GeneSpec::new(RateRef::forward("c"), 0.1, 3.0).tied("g"),
        ];
        assert!(GeneLayout::new(&bad).is_err());
        assert!(GeneLayout::new(&[GeneSpec::new(RateRef::forward("a"), 1.0, 1.0)]).is_err());

        let net = ReactionNetwork::new("n")
            .with_species(&["X"])
            .with_reaction(Reaction::mass_action("a", &[("X", 1)], &[], 1.0))
            .with_reaction(Reaction::mass_action("b", &[], &[("X", 1)], 1.0))
            .with_reaction(Reaction::mass_action("c", &[("X", 2)], &[], 1.0));
        let m = layout.apply(&Model::Network(net), &ch(&[0.25, 1.5])).unwrap();
        assert_eq!(m.get_rate(&RateRef::forward("a")).unwrap(), 0.25);
        assert_eq!(m.get_rate(&RateRef::forward("c")).unwrap(), 0.25);
        assert_eq!(m.get_rate(&RateRef::forward("b")).unwrap(), 1.5);
    }

    #[test]
    fn roulette_renormalization_is_affine_invariant() {
        let f = [1.0, 3.0, 2.0, 7.0];
        let w = roulette_weights(&f, true);
        let g: Vec<f64> = f.iter().map(|x| 4.0 * x - 11.0).collect();
        let w2 = roulette_weights(&g, false);
        for (a, b) in w.iter().zip(&w2) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(roulette_weights(&[2.0, 2.0], true), vec![0.5, 0.5]);
        let plain = roulette_weights(&[1.0, 3.0], false);
        assert_eq!(plain, vec![0.25, 0.75]);
    }

    fn one_gene(lo: f64, hi: f64) -> GeneLayout {
        GeneLayout::new(&[GeneSpec::new(RateRef::forward("k"), lo, hi)]).unwrap()
    }

    #[test]
    fn finds_quadratic_optimum() {
        let layout = one_gene(1e-3, 1.0);
        let config = GaConfig {
            population_size: 20,
            generations: 50,
            seed: 11,
            ..GaConfig::default()
        };
        let r = run_ga(&layout, &config, 2, |c| Ok(-(c.genes[0] - 0.7).powi(2))).unwrap();
        assert!((r.best.genes[0] - 0.7).abs() < 0.05, "{:?}", r.best);
        assert_eq!(r.history.len(), 50);
    }

    #[test]
    fn elitism_is_monotone_for_both_objectives() {
        let layout = GeneLayout::new(&[
            GeneSpec::new(RateRef::forward("a"), 0.1, 5.0),
            GeneSpec::new(RateRef::forward("b"), 0.1, 5.0),
        ])
        .unwrap();
        let f = |c: &Chromosome| Ok((c.genes[0] * 3.0).sin() + c.genes[1].cos());
        for objective in [Objective::Maximize, Objective::Minimize] {
            let config = GaConfig {
                objective,
                mutation: Mutation::PerBit { p: 0.5 },
                mutation_mode: MutationMode::Replace,
                crossover: Crossover::Shuffle,
                generations: 30,
                ..GaConfig::default()
            };
            let r = run_ga(&layout, &config, 3, f).unwrap();
            for w in r.history.windows(2) {
                match objective {
                    Objective::Maximize => assert!(w[1].best >= w[0].best),
                    Objective::Minimize => assert!(w[1].best <= w[0].best),
                }
            }
        }
        let all_elite = GaConfig {
            selection: Selection::Elite { k: 30 },
            ..GaConfig::default()
        };
        let r = run_ga(&layout, &all_elite, 1, f).unwrap();
        assert!(r.history.windows(2).all(|w| w[1].best >= w[0].best));
    }

    #[test]
    fn roulette_runs_and_failures_get_worst_fitness() {
        let layout = one_gene(0.1, 1.0);
        let config = GaConfig {
            selection: Selection::Roulette,
            renormalize_fitness: true,
            generations: 5,
            ..GaConfig::default()
        };
        let r = run_ga(&layout, &config, 2, |c| {
            if c.genes[0] > 0.8 {
                Err("too large".into())
            } else {
                Ok(c.genes[0])
            }
        })
        .unwrap();
        assert!(r.history.iter().any(|h| h.failures > 0));
        for h in &r.history {
            assert!(h.best <= 0.8 && h.worst <= h.mean && h.mean <= h.best);
        }
        let panicking = run_ga(&layout, &config, 2, |c| {
            assert!(c.genes[0] < 0.5, "boom");
            Ok(c.genes[0])
        });
        assert!(panicking.is_ok());
        assert!(matches!(
            run_ga(&layout, &config, 2, |_| Err("never".to_string())),
            Err(GaError::AllFailed(0))
        ));
    }

    #[test]
    fn deterministic_across_workers() {
        let layout = one_gene(0.1, 2.0);
        let config = GaConfig {
            crossover: Crossover::Shuffle,
            seed: 99,
            ..GaConfig::default()
        };
        let f = |c: &Chromosome| Ok((c.genes[0] - 1.3).abs());
        let a = run_ga(&layout, &config, 1, f).unwrap();
        let b = run_ga(&layout, &config, 8, f).unwrap();
        assert_eq!(a, b);
        assert_eq!(history_csv(&a.history), history_csv(&b.history));
    }

    #[test]
    fn history_csv_layout() {
        let h = vec![GenerationStats {
            generation: 0,
            best: 1.5,
            mean: 1.0,
            worst: 0.25,
            best_genes: vec![0.3, 2.0],
            failures: 0,
        }];
        assert_eq!(
            history_csv(&h),
            "generation,best,mean,worst,failures,gene_0,gene_1\n0,1.5,1,0.25,0,0.3,2\n"
        );
    }

    #[test]
    fn recovers_decay_constant() {
        let net = |k: f64| ReactionNetwork {
            name: "ab".into(),
            species: vec![Species::with_initial("A", 1.0), Species::new("B")],
            reactions: vec![Reaction::mass_action("k", &[("A", 1)], &[("B", 1)], k)],
            parent: None,
        };
        let solver = SolverConfig::default().with_record_interval(0.5);
        let series = InteractionSeries::default();
        let truth = simulate(&Model::Network(net(0.3)), &series, &solver, 10.0, 0).unwrap();
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let reference = ReferenceData::from_trace(&truth, &["A".into(), "B".into()], &times).unwrap();
        let layout = one_gene(0.01, 1.0);
        let base = Model::Network(net(1.0));
        let config = GaConfig {
            objective: Objective::Minimize,
            seed: 7,
            ..GaConfig::default()
        };
        let r = run_ga(&layout, &config, 4, |c| {
            let m = layout.apply(&base, c).map_err(|e| e.to_string())?;
            let trace = simulate(&m, &series, &solver, 10.0, 0).map_err(|e| e.to_string())?;
            reference.squared_error(&trace)
        })
        .unwrap();
        assert!((r.best.genes[0] - 0.3).abs() < 0.015, "{:?}", r.best);
    }
}
