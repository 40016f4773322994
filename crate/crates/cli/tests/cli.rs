use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use crnkit::ga::{GaConfig, GeneSpec, ReferenceData};
use crnkit::io::project::{load_project, save_project, EvaluationEntry, Fitness, OptimizationEntry, Project};
use crnkit::model::{RateLaw, RateRef, Reaction, ReactionNetwork, Species};
use crnkit::protocol::{parse_series, OutputKind, SampleTimes, Translation};
use crnkit::sim::{simulate_network, SolverConfig};

fn crnkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crnkit"))
        .args(args)
        .env("COLOR", "0")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn decay() -> ReactionNetwork {
    ReactionNetwork {
        name: "decay".into(),
        species: vec![Species::with_initial("A", 2.0)],
        reactions: vec![Reaction::mass_action("r", &[("A", 1)], &[], 0.5)],
        parent: None,
    }
}

fn conversion(k: f64) -> ReactionNetwork {
    ReactionNetwork {
        name: "convert".into(),
        species: vec![Species::with_initial("A", 1.0), Species::new("B")],
        reactions: vec![Reaction::mass_action("k", &[("A", 1)], &[("B", 1)], k)],
        parent: None,
    }
}

fn project(dir: &Path) -> PathBuf {
    let truth = simulate_network(
        &conversion(0.3),
        &Default::default(),
        &SolverConfig::dormand_prince(1e-10, 1e-8),
        10.0,
        0,
    )
    .unwrap();
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    let reference = ReferenceData::from_trace(&truth, &["B".to_string()], &times).unwrap();
    let p = Project {
        networks: vec![decay(), conversion(0.9)],
        series: vec![parse_series("pulse", "at 2\n  A <- A + 1\n").unwrap()],
        translations: vec![Translation {
            name: "low".into(),
            expr: crnkit::expr::parse("A < 0.5").unwrap(),
            kind: OutputKind::Boolean,
            samples: SampleTimes::Periodic {
                start: 1.0,
                period: 1.0,
                end: 5.0,
            },
        }],
        evaluations: vec![EvaluationEntry {
            name: "decay_eval".into(),
            model: "decay".into(),
            series: Some("pulse".into()),
            translations: vec!["low".into()],
            repetitions: 6,
            solver: SolverConfig::dormand_prince(1e-9, 1e-7),
            t_end: 6.0,
            base_seed: 11,
            constants: Default::default(),
        }],
        optimizations: vec![OptimizationEntry {
            name: "kfit".into(),
            model: "convert".into(),
            series: None,
            genes: vec![GeneSpec::new(RateRef::forward("k"), 0.01, 1.0)],
            config: GaConfig {
                seed: 7,
                ..GaConfig::default()
            },
            fitness: Fitness::TraceFit {
                reference,
                solver: SolverConfig::dormand_prince(1e-10, 1e-8),
                t_end: 10.0,
            },
        }],
        ..Project::default()
    };
    let path = dir.join("demo.crnproj");
    save_project(&p, &path).unwrap();
    path
}

#[test]
fn simulate_writes_time_and_species_header() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let out = dir.path().join("trace.csv");
    let o = crnkit(&["simulate", s(&proj), "decay", "--t-end", "4", "--seed", "1", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("time,A"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], 4.0);
    assert!((last[1] - 2.0 * (-2.0f64).exp()).abs() < 1e-5);
}

#[test]
fn omitted_seed_is_printed() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let o = crnkit(&["simulate", s(&proj), "decay", "pulse", "--t-end", "3"]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().any(|l| l.starts_with("seed: ")), "{err}");
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("time,A\n"));
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let o = crnkit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert!(o.stdout.is_empty());
}

#[test]
fn user_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let o = crnkit(&["simulate", s(&proj), "missing", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no model named 'missing'"));
    let o = crnkit(&["validate", "/nonexistent/p.crnproj", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    assert!(crnkit(&["validate", s(&proj), "decay"]).status.success());

    let mut p = load_project(&proj).unwrap();
    let mut bad = decay();
    bad.name = "bad".into();
    bad.reactions.push(Reaction::mass_action("r", &[("Z", 1)], &[], -1.0));
    p.networks.push(bad);
    save_project(&p, &proj).unwrap();
    let o = crnkit(&["validate", s(&proj), "bad"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 2, "{stdout}");
}

#[test]
fn optimize_recovers_rate_constant() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let hist = dir.path().join("history.csv");
    let best = dir.path().join("best.crnproj");
    let o = crnkit(&["optimize", s(&proj), "kfit", "--out", s(&hist), "--best", s(&best), "--workers", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&hist).unwrap();
    assert!(csv.starts_with("generation,best,mean,worst,failures,gene_0\n"));
    assert_eq!(csv.lines().count(), 41);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[5] - 0.3).abs() / 0.3 <= 0.05, "best k {}", last[5]);
    let fitted = load_project(&best).unwrap();
    match &fitted.network("convert").unwrap().reactions[0].rate {
        RateLaw::MassAction { k_fwd, .. } => assert!((k_fwd - 0.3).abs() / 0.3 <= 0.05),
        other => panic!("{other:?}"),
    }
}

#[test]
fn evaluate_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let run = |w: &str| {
        let o = crnkit(&["evaluate", s(&proj), "decay_eval", "--workers", w]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("8"));
    let text = String::from_utf8(one).unwrap();
    assert!(text.starts_with("translation,time,mean,std,success_rate\nlow,1,"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn perturb_and_analyze_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let o = crnkit(&[
        "perturb", s(&proj), "decay_eval", "--targets", "r:fwd", "--sigma", "0.2", "--samples", "4", "--seed", "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("sample,r:fwd,summary,failures\n"));
    assert_eq!(text.lines().count(), 5);

    let o = crnkit(&["analyze", s(&proj), "decay", "--lyapunov", "--t-end", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lyap: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("largest_lyapunov,,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((lyap + 0.5).abs() < 0.025, "{lyap}");
    assert!(!text.contains("fixed_point,"));
}

#[test]
fn sbml_export_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let proj = project(dir.path());
    let sbml = dir.path().join("decay.sbml");
    assert!(crnkit(&["export", "sbml", s(&proj), "decay", "--out", s(&sbml)]).status.success());
    let fresh = dir.path().join("fresh.crnproj");
    let o = crnkit(&["import", "sbml", s(&sbml), "--into", s(&fresh)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_project(&fresh).unwrap().network("decay").unwrap(), &decay());

    let m = crnkit(&["export", "matlab", s(&proj), "decay"]);
    assert!(String::from_utf8_lossy(&m.stdout).contains("ode45"));
    let o = crnkit(&["export", "octave", s(&proj), "decay"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("lsode"));
}

#[test]
fn dsd_commands() {
    let dir = tempfile::tempdir().unwrap();
    let strands = dir.path().join("gate.dsd");
    std::fs::write(&strands, "# gate\nsignal = <1 2^ 3>\ngate = {2^*}[3 4^]<5>\n").unwrap();
    let o = crnkit(&["dsd", "parse", s(&strands)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("signal = <1 2^ 3>"));

    let svg = dir.path().join("svg");
    assert!(crnkit(&["dsd", "render", s(&strands), "--out", s(&svg)]).status.success());
    assert!(std::fs::read_to_string(svg.join("gate.svg")).unwrap().starts_with("<svg"));

    let proj = project(dir.path());
    let out = dir.path().join("dsd.crnproj");
    let o = crnkit(&["dsd", "transform", s(&proj), "decay", "--cmax", "1000", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(load_project(&out).unwrap().networks[0].reactions.len(), 2);

    std::fs::write(&strands, "broken = <1 2^\n").unwrap();
    assert_eq!(crnkit(&["dsd", "parse", s(&strands)]).status.code(), Some(1));
}

#[test]
fn randgen_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("crn.json");
    std::fs::write(
        &params,
        r#"{"n_species": 4, "n_reactions": 5, "reactant_count_dist": [0, 0.5, 0.5],
            "product_count_dist": [0, 0.5, 0.5], "rate_dist": {"kind": "uniform", "lo": 0.1, "hi": 1}}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a.crnproj"), dir.path().join("b.crnproj"));
    for out in [&a, &b] {
        let o = crnkit(&["randgen", "crn", s(&params), "--seed", "3", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let net = &load_project(&a).unwrap().networks[0];
    assert_eq!(net.reactions.len(), 5);

    let circuit = dir.path().join("circuit.json");
    std::fs::write(
        &circuit,
        r#"{"n_single_strands": 6, "upper_lower_ratio": 0.5, "upper_complement_ratio": 1.0,
            "partial_double_per_upper": [1, 0.5], "rate_dist": [1, 0.2]}"#,
    )
    .unwrap();
    let strands = dir.path().join("c.dsd");
    let o = crnkit(&["randgen", "circuit", s(&circuit), "--out", s(&a), "--strands", s(&strands)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed: "));
    assert_eq!(load_project(&a).unwrap().networks.len(), 2);
    assert!(crnkit(&["dsd", "parse", s(&strands)]).status.success());
}
