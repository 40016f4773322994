mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use crnkit::dsd::{parse_dsd, transform_soloveichik, Domain, DsdSpecies, Role, Segment};
use crnkit::evaluation::{evaluate_batch, EvaluationSpec};
use crnkit::executor::map_batch;
use crnkit::expr::{parse, seeded_rng};
use crnkit::ga::{crossover_one_point, crossover_shuffle, mutate, roulette_weights, Chromosome, Mutation, MutationMode};
use crnkit::io::csv::{export_csv, parse_csv};
use crnkit::io::project::Project;
use crnkit::io::sbml::{export_sbml, import_sbml};
use crnkit::model::{Model, Reaction, ReactionNetwork, Species};
use crnkit::protocol::{apply, parse_series, InteractionSeries, OutputKind, SampleTimes, SimState, Translation};
use crnkit::randgen::{random_crn, RandomCrnParams};
use crnkit::sim::{simulate_network, SolverConfig};

fn quick(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

// expressions ---------------------------------------------------------------

proptest! {
    #![proptest_config(quick(256))]

    #[test]
    fn expression_print_parse_fixpoint(e in common::expr_strategy()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn expression_precedence_matches_explicit_grouping(
        e in common::expr_strategy(),
        values in prop::array::uniform5(-5.0f64..5.0),
    ) {
        let explicit = parse(&common::parenthesized(&e)).unwrap();
        prop_assert_eq!(&explicit, &e);
        let env = common::bindings(values);
        let reparsed = parse(&e.to_string()).unwrap();
        prop_assert!(common::same_outcome(&e.eval(&env, None), &reparsed.eval(&env, None)));
    }

    #[test]
    fn random_expressions_replay_under_a_seed(seed in any::<u64>()) {
        let e = parse("gauss(1, 0.5) + uniform(0, 2) * coin(0.3) + rand()").unwrap();
        let env = common::bindings([0.0; 5]);
        let draw = || e.eval(&env, Some(&mut seeded_rng(seed))).unwrap();
        prop_assert_eq!(draw().to_bits(), draw().to_bits());
    }
}

// model ---------------------------------------------------------------------

proptest! {
    #![proptest_config(quick(64))]

    #[test]
    fn merge_with_itself_is_identity(seed in 0u64..1000) {
        let net = common::open_network(seed);
        prop_assert_eq!(net.merge(&net).unwrap(), net);
    }

    #[test]
    fn merge_of_valid_disjoint_networks_is_valid(a in 0u64..500, b in 0u64..500) {
        let left = common::open_network(a);
        let mut right = common::open_network(b);
        // Shared labels must agree on the initial value to merge.
        for (l, r) in left.species.iter().zip(&mut right.species) {
            r.initial = l.initial;
        }
        for r in &mut right.reactions {
            r.label = format!("b_{}", r.label);
        }
        prop_assert!(left.validate().is_empty());
        prop_assert!(right.validate().is_empty());
        let merged = left.merge(&right).unwrap();
        prop_assert!(merged.validate().is_empty());
        prop_assert_eq!(merged.reactions.len(), left.reactions.len() + right.reactions.len());
    }
}

// interaction series --------------------------------------------------------

fn series_strategy() -> impl Strategy<Value = InteractionSeries> {
    let one = (0.0f64..20.0, prop::option::of((0.5f64..5.0, prop::option::of(5.0f64..30.0))));
    prop::collection::vec(one, 1..5).prop_map(|items| {
        let mut text = String::new();
        for (t, repeat) in items {
            text.push_str(&format!("at {t:?}"));
            if let Some((period, until)) = repeat {
                text.push_str(&format!(" every {period:?}"));
                if let Some(u) = until {
                    text.push_str(&format!(" until {u:?}"));
                }
            }
            text.push_str("\n  A <- A + 1\n");
        }
        parse_series("generated", &text).unwrap()
    })
}

proptest! {
    #![proptest_config(quick(128))]

    #[test]
    fn schedule_is_sorted_and_a_prefix_of_longer_horizons(
        series in series_strategy(),
        t1 in 0.0f64..40.0,
        extra in 0.0f64..40.0,
    ) {
        let short = series.schedule(t1);
        let long = series.schedule(t1 + extra);
        prop_assert!(short.windows(2).all(|w| w[0].0 <= w[1].0));
        prop_assert!(short.iter().all(|e| e.0 <= t1));
        prop_assert_eq!(&long[..short.len()], &short[..]);
    }

    #[test]
    fn apply_never_leaves_negative_concentrations(
        start in prop::collection::vec(0.0f64..5.0, 2),
        shift in -10.0f64..10.0,
        seed in any::<u64>(),
    ) {
        let text = format!("at 0\n  A <- A + {shift:?}\n  B <- gauss(B, 3)\n");
        let text = text.replace("+ -", "- ");
        let series = parse_series("s", &text).unwrap();
        let labels = vec!["A".to_string(), "B".to_string()];
        let mut state = SimState::new(0.0, start);
        apply(&mut state, &labels, &series.interactions[0], &mut seeded_rng(seed)).unwrap();
        prop_assert!(state.concentrations.iter().all(|&c| c >= 0.0));
    }
}

// simulation ----------------------------------------------------------------

proptest! {
    #![proptest_config(quick(24))]

    #[test]
    fn recorded_concentrations_stay_nonnegative(seed in 0u64..10_000) {
        let solver = SolverConfig::dormand_prince(1e-9, 1e-7);
        let series = parse_series("drain", "at 2 every 3\n  S1 <- S1 - 0.4\n  S2 <- 0\n").unwrap();
        let trace = simulate_network(&common::open_network(seed), &series, &solver, 10.0, seed).unwrap();
        prop_assert!(trace.values.iter().flatten().all(|&c| c >= -solver.abs_tol()));
        prop_assert!(trace.times.windows(2).all(|w| w[0] < w[1]));
        for t in [2.0, 5.0, 8.0] {
            prop_assert!(trace.times.contains(&t));
        }
    }

    #[test]
    fn adaptive_and_fixed_step_agree_on_decay(k in 0.1f64..2.0, a0 in 0.1f64..10.0) {
        let net = ReactionNetwork {
            name: "decay".into(),
            species: vec![Species::with_initial("A", a0)],
            reactions: vec![Reaction::mass_action("d", &[("A", 1)], &[], k)],
            parent: None,
        };
        let series = InteractionSeries::default();
        let adaptive = SolverConfig::rkf45(1e-12, 1e-10).with_record_interval(0.5);
        let fixed = SolverConfig::rk4(1e-3).with_record_interval(0.5);
        let a = simulate_network(&net, &series, &adaptive, 5.0, 0).unwrap();
        let b = simulate_network(&net, &series, &fixed, 5.0, 0).unwrap();
        prop_assert_eq!(&a.times, &b.times);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x[0] - y[0]).abs() <= 1e-5 * x[0].abs().max(1e-12));
        }
    }
}

// evaluation and executor ---------------------------------------------------

fn noisy_spec(repetitions: usize, base_seed: u64) -> EvaluationSpec {
    EvaluationSpec {
        model: Model::Network(common::open_network(3)),
        series: parse_series("noise", "at 1 every 1\n  S1 <- S1 + uniform(0, 0.5)\n").unwrap(),
        translations: vec![Translation {
            name: "s1".into(),
            expr: parse("S1").unwrap(),
            kind: OutputKind::Numeric,
            samples: SampleTimes::Explicit(vec![2.0, 4.0]),
        }],
        repetitions,
        solver: SolverConfig::dormand_prince(1e-8, 1e-6),
        t_end: 4.0,
        base_seed,
        constants: Default::default(),
    }
}

proptest! {
    #![proptest_config(quick(16))]

    #[test]
    fn batch_results_ignore_worker_count(base_seed in any::<u64>(), workers in 2usize..9) {
        let spec = noisy_spec(6, base_seed);
        prop_assert_eq!(evaluate_batch(&spec, 1).unwrap(), evaluate_batch(&spec, workers).unwrap());
    }

    #[test]
    fn more_repetitions_extend_earlier_outcomes(base_seed in any::<u64>(), n in 1usize..5, more in 1usize..4) {
        let few = evaluate_batch(&noisy_spec(n, base_seed), 2).unwrap();
        let many = evaluate_batch(&noisy_spec(n + more, base_seed), 3).unwrap();
        prop_assert_eq!(&many.outcomes[..n], &few.outcomes[..]);
    }

    #[test]
    fn executor_returns_results_in_index_order(items in prop::collection::vec(any::<u32>(), 0..60), workers in 1usize..9) {
        let (results, stats) = map_batch(&items, workers, |x| u64::from(*x) * 3);
        let values: Vec<u64> = results.into_iter().map(Result::unwrap).collect();
        let expected: Vec<u64> = items.iter().map(|x| u64::from(*x) * 3).collect();
        prop_assert_eq!(values, expected);
        prop_assert_eq!(stats.completed.iter().sum::<usize>(), items.len());
    }
}

// genetic algorithm ---------------------------------------------------------

fn ranged_chromosome() -> impl Strategy<Value = (Vec<[f64; 2]>, Chromosome)> {
    prop::collection::vec((0.0f64..10.0, 0.01f64..10.0, 0.0f64..=1.0), 2..12).prop_map(|genes| {
        let ranges = genes.iter().map(|(lo, w, _)| [*lo, lo + w]).collect();
        let values: Vec<f64> = genes.iter().map(|(lo, w, u)| lo + w * u).collect();
        (ranges, values.into())
    })
}

fn mutation_strategy() -> impl Strategy<Value = (Mutation, MutationMode)> {
    let kind = prop_oneof![
        Just(Mutation::OneBit),
        Just(Mutation::TwoBit),
        Just(Mutation::Exchange),
        (0.0f64..=1.0).prop_map(|p| Mutation::PerBit { p }),
    ];
    let mode = prop_oneof![
        Just(MutationMode::Replace),
        (0.01f64..2.0).prop_map(|sigma| MutationMode::Perturb { sigma }),
    ];
    (kind, mode)
}

proptest! {
    #![proptest_config(quick(256))]

    #[test]
    fn mutation_keeps_genes_in_range((ranges, c) in ranged_chromosome(), (m, mode) in mutation_strategy(), seed in any::<u64>()) {
        let out = mutate(&c, &ranges, m, mode, &mut seeded_rng(seed)).unwrap();
        prop_assert_eq!(out.genes.len(), c.genes.len());
        for (g, r) in out.genes.iter().zip(&ranges) {
            prop_assert!(*g >= r[0] && *g <= r[1], "{} outside {:?}", g, r);
        }
    }

    #[test]
    fn crossover_takes_each_gene_from_a_parent(
        (_, a) in ranged_chromosome(),
        seed in any::<u64>(),
        cut in 0usize..12,
    ) {
        let b: Chromosome = a.genes.iter().map(|g| g + 100.0).collect::<Vec<_>>().into();
        let child = crossover_shuffle(&a, &b, &mut seeded_rng(seed)).unwrap();
        for (i, g) in child.genes.iter().enumerate() {
            prop_assert!(*g == a.genes[i] || *g == b.genes[i]);
        }
        let p = cut.min(a.genes.len());
        let child = crossover_one_point(&a, &b, p).unwrap();
        prop_assert_eq!(&child.genes[..p], &a.genes[..p]);
        prop_assert_eq!(&child.genes[p..], &b.genes[p..]);
    }

    #[test]
    fn renormalised_roulette_ignores_affine_rescaling(
        scores in prop::collection::vec(-10.0f64..10.0, 2..20),
        alpha in 0.1f64..10.0,
        beta in -50.0f64..50.0,
    ) {
        let base = roulette_weights(&scores, true);
        let scaled: Vec<f64> = scores.iter().map(|f| alpha * f + beta).collect();
        let moved = roulette_weights(&scaled, true);
        for (x, y) in base.iter().zip(&moved) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((base.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

// DSD -----------------------------------------------------------------------

fn domain() -> impl Strategy<Value = Domain> {
    (1u32..25, any::<bool>()).prop_map(|(id, comp)| {
        // Toehold-ness is a function of the id so a species stays consistent.
        let d = if id % 3 == 0 { Domain::toehold(id) } else { Domain::long(id) };
        if comp {
            d.complement()
        } else {
            d
        }
    })
}

fn dsd_species() -> impl Strategy<Value = DsdSpecies> {
    let segment = (0u8..3, prop::collection::vec(domain(), 1..5)).prop_map(|(kind, ds)| match kind {
        0 => Segment::UpperOverhang(ds),
        1 => Segment::LowerOverhang(ds),
        _ => Segment::Duplex(ds),
    });
    prop::collection::vec(segment, 1..5).prop_map(|segs| DsdSpecies::new("", segs, Role::Signal))
}

proptest! {
    #![proptest_config(quick(256))]

    #[test]
    fn dsd_structure_print_parse_fixpoint(s in dsd_species()) {
        let printed = s.structure();
        let back = parse_dsd(&printed).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.structure(), printed);
    }
}

proptest! {
    #![proptest_config(quick(32))]

    #[test]
    fn transform_obeys_count_law_and_hygiene(seed in 0u64..5000, c_exp in 2i32..5) {
        let net = random_crn(&RandomCrnParams::new(4, 5, seed)).unwrap();
        let molecules = |r: &Reaction| r.reactants.iter().map(|t| t.stoich).sum::<u32>();
        let bi = net.reactions.iter().filter(|r| molecules(r) == 2).count();
        let uni = net.reactions.iter().filter(|r| molecules(r) == 1).count();
        let out = transform_soloveichik(&net, 10f64.powi(c_exp), 100.0).unwrap();
        prop_assert_eq!(out.network.reactions.len(), 3 * bi + 2 * uni);

        let originals: BTreeSet<&str> = net.species.iter().map(|s| s.label.as_str()).collect();
        for name in out.fuel_species.iter().chain(&out.buffer_species) {
            prop_assert!(!originals.contains(name.as_str()));
        }
        for (name, s) in &out.structures {
            if s.role == Role::Waste {
                prop_assert!(!originals.contains(name.as_str()));
                prop_assert!(out.network.reactions.iter().all(|r| r.reactants.iter().all(|t| &t.species != name)));
            }
        }
        for fuel in &out.fuel_species {
            prop_assert!(out.network.reactions.iter().all(|r| r.products.iter().all(|t| &t.species != fuel)));
        }
        for s in out.structures.values() {
            let back = parse_dsd(&s.structure()).unwrap();
            prop_assert_eq!(back.structure(), s.structure());
        }
    }
}

// random generation ---------------------------------------------------------

proptest! {
    #![proptest_config(quick(64))]

    #[test]
    fn random_networks_match_requested_counts(
        n_species in 1usize..8,
        n_reactions in 0usize..12,
        influx in 0.0f64..=1.0,
        efflux in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut p = RandomCrnParams::new(n_species, n_reactions, seed);
        p.influx_ratio = influx;
        p.efflux_ratio = efflux;
        let Ok(net) = random_crn(&p) else {
            // Only an infeasible request may be refused.
            prop_assert!(n_reactions as u128 > crnkit::randgen::reaction_space(n_species, &p.reactant_count_dist, &p.product_count_dist));
            return Ok(());
        };
        prop_assert_eq!(net.species.len(), n_species);
        prop_assert_eq!(net.reactions.iter().filter(|r| r.label.starts_with('r')).count(), n_reactions);
        let signatures: BTreeSet<String> = net
            .reactions
            .iter()
            .map(|r| format!("{:?}->{:?}", r.reactants, r.products))
            .collect();
        prop_assert_eq!(signatures.len(), net.reactions.len());
        prop_assert!(net.validate().is_empty());
        prop_assert_eq!(random_crn(&p).unwrap(), net);
    }
}

// formats -------------------------------------------------------------------

proptest! {
    #![proptest_config(quick(48))]

    #[test]
    fn sbml_round_trip_is_exact(seed in any::<u64>()) {
        let net = common::open_network(seed);
        let text = export_sbml(&net).unwrap();
        let back = import_sbml(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(export_sbml(&back).unwrap(), text);
    }

    #[test]
    fn project_text_round_trip_is_exact(seed in any::<u64>()) {
        let mut closed = common::closed_network(seed, 4, 3);
        closed.name.push_str("_closed");
        let project = Project {
            networks: vec![common::open_network(seed), closed],
            ..Project::default()
        };
        let text = project.to_text().unwrap();
        let back = Project::from_text(&text).unwrap();
        prop_assert_eq!(&back, &project);
        prop_assert_eq!(back.to_text().unwrap(), text);
    }

    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec(prop::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), 0.0f64..1.0], 3), 1..20),
    ) {
        let trace = crnkit::sim::Trace {
            labels: vec!["A".into(), "B".into(), "C".into()],
            times: (0..rows.len()).map(|i| i as f64 * 0.1).collect(),
            values: rows,
            variables: Vec::new(),
            events: Vec::new(),
        };
        let text = export_csv(&trace, None).unwrap();
        let table = parse_csv(&text).unwrap();
        prop_assert_eq!(&table.times, &trace.times);
        prop_assert_eq!(&table.values, &trace.values);
        prop_assert_eq!(export_csv(&trace, None).unwrap(), text);
    }
}
