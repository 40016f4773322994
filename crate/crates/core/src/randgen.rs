//! Seeded generators for random reaction networks and random strand
//! displacement circuits.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsd::{Domain, DsdSpecies, Role, Segment};
use crate::expr::{seeded_rng, SimRng};
use crate::model::{Reaction, ReactionNetwork, Species, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RandgenError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("{requested} reactions requested but only {bound} distinct reactions exist")]
    Infeasible { requested: usize, bound: u128 },
    #[error("positive-normal draw failed after {0} tries")]
    NoPositiveDraw(u32),
}

const MAX_POSITIVE_TRIES: u32 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateDist {
    Uniform { lo: f64, hi: f64 },
    /// Normal resampled until positive.
    PositiveNormal { mean: f64, std: f64 },
}

impl RateDist {
    fn check(&self) -> Result<(), RandgenError> {
        let ok = match *self {
            RateDist::Uniform { lo, hi } => lo >= 0.0 && lo <= hi && hi.is_finite(),
            RateDist::PositiveNormal { mean, std } => mean > 0.0 && std > 0.0 && mean.is_finite() && std.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(RandgenError::Invalid(format!("bad distribution {self:?}")))
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> Result<f64, RandgenError> {
        match *self {
            RateDist::Uniform { lo, hi } => Ok(rng.random_range(lo..=hi)),
            RateDist::PositiveNormal { mean, std } => {
                for _ in 0..MAX_POSITIVE_TRIES {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = mean + std * z;
                    if v > 0.0 {
                        return Ok(v);
                    }
                }
                Err(RandgenError::NoPositiveDraw(MAX_POSITIVE_TRIES))
            }
        }
    }
}

/// Weights for drawing a molecule count of 0, 1 or 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountDist(pub [f64; 3]);

impl CountDist {
    pub fn fixed(count: usize) -> Self {
        let mut w = [0.0; 3];
        w[count] = 1.0;
        CountDist(w)
    }

    fn check(&self) -> Result<(), RandgenError> {
        if self.0.iter().all(|w| *w >= 0.0 && w.is_finite()) && self.0.iter().sum::<f64>() > 0.0 {
            Ok(())
        } else {
            Err(RandgenError::Invalid(format!("bad count weights {:?}", self.0)))
        }
    }

    fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|c| self.0[*c] > 0.0)
    }

    fn sample(&self, rng: &mut SimRng) -> usize {
        let total: f64 = self.0.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        for (c, w) in self.0.iter().enumerate() {
            acc += w;
            if u < acc {
                return c;
            }
        }
        self.support().last().unwrap_or(0)
    }
}

fn default_initial() -> RateDist {
    RateDist::Uniform { lo: 0.0, hi: 1.0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCrnParams {
    pub n_species: usize,
    pub n_reactions: usize,
    pub reactant_count_dist: CountDist,
    pub product_count_dist: CountDist,
    pub rate_dist: RateDist,
    #[serde(default)]
    pub influx_ratio: f64,
    #[serde(default)]
    pub efflux_ratio: f64,
    #[serde(default = "default_initial")]
    pub initial_dist: RateDist,
    pub seed: u64,
}

impl RandomCrnParams {
    pub fn new(n_species: usize, n_reactions: usize, seed: u64) -> Self {
        RandomCrnParams {
            n_species,
            n_reactions,
            reactant_count_dist: CountDist([0.0, 0.5, 0.5]),
            product_count_dist: CountDist([0.0, 0.5, 0.5]),
            rate_dist: RateDist::Uniform { lo: 0.1, hi: 1.0 },
            influx_ratio: 0.0,
            efflux_ratio: 0.0,
            initial_dist: default_initial(),
            seed,
        }
    }
}

/// Multisets of size `c` over `n` kinds: C(n + c - 1, c).
fn multisets(n: u128, c: usize) -> u128 {
    match c {
        0 => 1,
        1 => n,
        _ => n * (n + 1) / 2,
    }
}

/// Distinct non-identity reactions reachable with the given count supports.
pub fn reaction_space(n_species: usize, reactants: &CountDist, products: &CountDist) -> u128 {
    let n = n_species as u128;
    let mut total = 0;
    for cr in reactants.support() {
        for cp in products.support() {
            total += multisets(n, cr) * multisets(n, cp);
            if cr == cp {
                total -= multisets(n, cr);
            }
        }
    }
    total
}

type Side = Vec<usize>;

fn draw_side(n: usize, count: usize, rng: &mut SimRng) -> Side {
    let mut side: Side = (0..count).map(|_| rng.random_range(0..n)).collect();
    side.sort_unstable();
    side
}

fn all_sides(n: usize, count: usize) -> Vec<Side> {
    match count {
        0 => vec![vec![]],
        1 => (0..n).map(|i| vec![i]).collect(),
        _ => (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect(),
    }
}

fn terms(side: &[usize], labels: &[String]) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    for &i in side {
        match out.last_mut() {
            Some(t) if t.species == labels[i] => t.stoich += 1,
            _ => out.push(Term::new(labels[i].clone(), 1)),
        }
    }
    out
}

fn check_ratio(name: &str, r: f64) -> Result<(), RandgenError> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(RandgenError::Invalid(format!("{name} must be in [0, 1]")))
    }
}

/// Species `S1..Sn`, `n_reactions` distinct core reactions `r1..`, then
/// influx `in1..` (λ → S) and efflux `out1..` (S → λ) reactions for
/// `round(ratio · n)` distinct species not already fed or drained by a core
/// reaction.
pub fn random_crn(params: &RandomCrnParams) -> Result<ReactionNetwork, RandgenError> {
    let n = params.n_species;
    if n == 0 {
        return Err(RandgenError::Invalid("n_species must be at least 1".into()));
    }
    params.reactant_count_dist.check()?;
    params.product_count_dist.check()?;
    params.rate_dist.check()?;
    params.initial_dist.check()?;
    check_ratio("influx_ratio", params.influx_ratio)?;
    check_ratio("efflux_ratio", params.efflux_ratio)?;
    let bound = reaction_space(n, &params.reactant_count_dist, &params.product_count_dist);
    if params.n_reactions as u128 > bound {
        return Err(RandgenError::Infeasible {
            requested: params.n_reactions,
            bound,
        });
    }

    let mut rng = seeded_rng(params.seed);
    let labels: Vec<String> = (1..=n).map(|i| format!("S{i}")).collect();
    let mut species = Vec::with_capacity(n);
    for l in &labels {
        species.push(Species::with_initial(l.clone(), params.initial_dist.sample(&mut rng)?));
    }

    let mut seen: BTreeSet<(Side, Side)> = BTreeSet::new();
    let mut chosen: Vec<(Side, Side)> = Vec::with_capacity(params.n_reactions);
    let budget = 100 * params.n_reactions + 1000;
    let mut attempts = 0;
    while chosen.len() < params.n_reactions && attempts < budget {
        attempts += 1;
        let lhs = draw_side(n, params.reactant_count_dist.sample(&mut rng), &mut rng);
        let rhs = draw_side(n, params.product_count_dist.sample(&mut rng), &mut rng);
        if lhs != rhs && seen.insert((lhs.clone(), rhs.clone())) {
            chosen.push((lhs, rhs));
        }
    }
    if chosen.len() < params.n_reactions {
        // Dense request: draw the rest from the explicit list of what is left.
        let mut left: Vec<(Side, Side)> = Vec::new();
        for cr in params.reactant_count_dist.support() {
            for cp in params.product_count_dist.support() {
                for l in all_sides(n, cr) {
                    for r in all_sides(n, cp) {
                        if l != r && !seen.contains(&(l.clone(), r.clone())) {
                            left.push((l.clone(), r));
                        }
                    }
                }
            }
        }
        left.shuffle(&mut rng);
        chosen.extend(left.into_iter().take(params.n_reactions - chosen.len()));
    }

    let mut reactions = Vec::new();
    for (i, (lhs, rhs)) in chosen.iter().enumerate() {
        let k = params.rate_dist.sample(&mut rng)?;
        let mut r = Reaction::mass_action(format!("r{}", i + 1), &[], &[], k);
        r.reactants = terms(lhs, &labels);
        r.products = terms(rhs, &labels);
        reactions.push(r);
    }
    for (ratio, influx) in [(params.influx_ratio, true), (params.efflux_ratio, false)] {
        let mut free: Vec<usize> = (0..n)
            .filter(|&i| {
                let key = if influx { (vec![], vec![i]) } else { (vec![i], vec![]) };
                !seen.contains(&key)
            })
            .collect();
        free.shuffle(&mut rng);
        let count = ((ratio * n as f64).round() as usize).min(free.len());
        let mut picked = free[..count].to_vec();
        picked.sort_unstable();
        for (j, i) in picked.into_iter().enumerate() {
            let k = params.rate_dist.sample(&mut rng)?;
            let s = labels[i].as_str();
            reactions.push(if influx {
                Reaction::mass_action(format!("in{}", j + 1), &[], &[(s, 1)], k)
            } else {
                Reaction::mass_action(format!("out{}", j + 1), &[(s, 1)], &[], k)
            });
        }
    }
    Ok(ReactionNetwork {
        name: format!("random_{}", params.seed),
        species,
        reactions,
        parent: None,
    })
}

// ---------------------------------------------------------------------------
// strand circuits

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDsdParams {
    pub n_single_strands: usize,
    /// Fraction of single strands that are upper strands.
    pub upper_lower_ratio: f64,
    /// Fraction of upper strands that get a complementary lower strand.
    pub upper_complement_ratio: f64,
    /// Partial doubles per complemented upper strand; `mean`/`std` of a
    /// positive normal, rounded.
    pub partial_double_per_upper: [f64; 2],
    /// Rate constants; `mean`/`std` of a positive normal.
    pub rate_dist: [f64; 2],
    #[serde(default)]
    pub influx_ratio: f64,
    #[serde(default)]
    pub efflux_ratio: f64,
    pub seed: u64,
}

impl RandomDsdParams {
    pub fn new(n_single_strands: usize, seed: u64) -> Self {
        RandomDsdParams {
            n_single_strands,
            upper_lower_ratio: 0.6,
            upper_complement_ratio: 0.7,
            partial_double_per_upper: [1.5, 1.0],
            rate_dist: [1.0, 0.3],
            influx_ratio: 0.0,
            efflux_ratio: 0.0,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomCircuit {
    pub network: ReactionNetwork,
    pub structures: BTreeMap<String, DsdSpecies>,
    /// Displacement order of single strands: a strand only displaces
    /// strands of lower rank.
    pub ranks: BTreeMap<String, usize>,
}

/// Builds a random circuit from upper strands `U<i> = <t^ x>`, lower strands
/// (complements `C<i> = {t^* x*}` of some upper strands, the rest free),
/// full doubles `F<i> = [t^ x]` and partial doubles `P<i>_<v> = {t^*}[x]`
/// in which upper strand `v` occupies the long domain of `i`.
///
/// Reactions: hybridisation `U<i> + C<i> -> F<i>`, and for every partial
/// double either `U<i> + P<i>_<v> -> F<i> + U<v>` (when `i` outranks `v`) or
/// `U<v> + F<i> -> P<i>_<v> + U<i>` (otherwise).
pub fn random_dsd_circuit(params: &RandomDsdParams) -> Result<RandomCircuit, RandgenError> {
    let n = params.n_single_strands;
    if n == 0 {
        return Err(RandgenError::Invalid("n_single_strands must be at least 1".into()));
    }
    check_ratio("upper_lower_ratio", params.upper_lower_ratio)?;
    check_ratio("upper_complement_ratio", params.upper_complement_ratio)?;
    check_ratio("influx_ratio", params.influx_ratio)?;
    check_ratio("efflux_ratio", params.efflux_ratio)?;
    let partials = RateDist::PositiveNormal {
        mean: params.partial_double_per_upper[0],
        std: params.partial_double_per_upper[1],
    };
    let rates = RateDist::PositiveNormal {
        mean: params.rate_dist[0],
        std: params.rate_dist[1],
    };
    partials.check()?;
    rates.check()?;

    let mut rng = seeded_rng(params.seed);
    let n_upper = (params.upper_lower_ratio * n as f64).round() as usize;
    let n_lower = n - n_upper;
    let n_complemented = ((params.upper_complement_ratio * n_upper as f64).round() as usize).min(n_lower);
    let mut upper_order: Vec<usize> = (0..n_upper).collect();
    upper_order.shuffle(&mut rng);
    let mut complemented: Vec<usize> = upper_order[..n_complemented].to_vec();
    complemented.sort_unstable();

    let mut species = Vec::new();
    let mut structures = BTreeMap::new();
    let mut add = |name: String, initial: f64, segments: Vec<Segment>, role: Role| {
        species.push(Species::with_initial(name.clone(), initial));
        structures.insert(name.clone(), DsdSpecies::new(name, segments, role));
    };
    let dom = |i: usize| (Domain::toehold(2 * i as u32 + 1), Domain::long(2 * i as u32 + 2));
    let upper = |i: usize| format!("U{}", i + 1);
    let mut singles = Vec::new();
    for i in 0..n_upper {
        let (t, x) = dom(i);
        add(upper(i), 1.0, vec![Segment::UpperOverhang(vec![t, x])], Role::Signal);
        singles.push(upper(i));
    }
    for &i in &complemented {
        let (t, x) = dom(i);
        add(
            format!("C{}", i + 1),
            1.0,
            vec![Segment::LowerOverhang(vec![t.complement(), x.complement()])],
            Role::Signal,
        );
        singles.push(format!("C{}", i + 1));
    }
    for j in 0..n_lower - n_complemented {
        let (t, x) = dom(n_upper + j);
        let name = format!("L{}", j + 1);
        add(
            name.clone(),
            1.0,
            vec![Segment::LowerOverhang(vec![t.complement(), x.complement()])],
            Role::Signal,
        );
        singles.push(name);
    }
    let mut rank_order: Vec<usize> = (0..singles.len()).collect();
    rank_order.shuffle(&mut rng);
    let ranks: BTreeMap<String, usize> = rank_order.iter().enumerate().map(|(r, &s)| (singles[s].clone(), r)).collect();

    let mut reactions = Vec::new();
    for &i in &complemented {
        let (t, x) = dom(i);
        let full = format!("F{}", i + 1);
        add(full.clone(), 0.0, vec![Segment::Duplex(vec![t, x])], Role::Waste);
        let k = rates.sample(&mut rng)?;
        reactions.push(Reaction::mass_action(
            format!("hyb{}", i + 1),
            &[(&upper(i), 1), (&format!("C{}", i + 1), 1)],
            &[(&full, 1)],
            k,
        ));
        let mut incumbents: Vec<usize> = (0..n_upper).filter(|&v| v != i).collect();
        incumbents.shuffle(&mut rng);
        let wanted = partials.sample(&mut rng)?.round() as usize;
        let mut chosen = incumbents[..wanted.min(incumbents.len())].to_vec();
        chosen.sort_unstable();
        for v in chosen {
            let partial = format!("P{}_{}", i + 1, v + 1);
            add(
                partial.clone(),
                1.0,
                vec![Segment::LowerOverhang(vec![t.complement()]), Segment::Duplex(vec![x])],
                Role::Fuel,
            );
            let k = rates.sample(&mut rng)?;
            let (ui, uv) = (upper(i), upper(v));
            let label = format!("d{}_{}", i + 1, v + 1);
            reactions.push(if ranks[&ui] > ranks[&uv] {
                Reaction::mass_action(label, &[(&ui, 1), (&partial, 1)], &[(&full, 1), (&uv, 1)], k)
            } else {
                Reaction::mass_action(label, &[(&uv, 1), (&full, 1)], &[(&partial, 1), (&ui, 1)], k)
            });
        }
    }
    for (ratio, influx) in [(params.influx_ratio, true), (params.efflux_ratio, false)] {
        let mut pool = singles.clone();
        pool.shuffle(&mut rng);
        let count = (ratio * singles.len() as f64).round() as usize;
        let mut picked: Vec<&String> = pool[..count].iter().collect();
        picked.sort();
        for (j, s) in picked.into_iter().enumerate() {
            let k = rates.sample(&mut rng)?;
            reactions.push(if influx {
                Reaction::mass_action(format!("in{}", j + 1), &[], &[(s, 1)], k)
            } else {
                Reaction::mass_action(format!("out{}", j + 1), &[(s, 1)], &[], k)
            });
        }
    }
    Ok(RandomCircuit {
        network: ReactionNetwork {
            name: format!("circuit_{}", params.seed),
            species,
            reactions,
            parent: None,
        },
        structures,
        ranks,
    })
}
