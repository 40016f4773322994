//! `crnkit` command-line driver.

use std::collections::hash_map::RandomState;
use std::hash::{BuildHasher, Hasher};
use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, ColorChoice, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use crnkit::dsd::{format_dsd_file, parse_dsd_file, render_svg, transform_soloveichik};
use crnkit::evaluation::{analyze, evaluate_batch, perturb_and_evaluate, LyapunovOptions, PerturbationMode, PerturbationSpec};
use crnkit::executor::default_workers;
use crnkit::ga::{history_csv, run_ga, GeneLayout, Objective};
use crnkit::io::csv::{export_csv, perturbation_csv, performance_csv, report_csv};
use crnkit::io::project::{load_project, save_project, Fitness, Project};
use crnkit::io::sbml::{export_sbml, import_sbml};
use crnkit::io::script::{export_script, Dialect};
use crnkit::model::{Model, RateRef};
use crnkit::randgen::{random_crn, random_dsd_circuit, RandomCrnParams, RandomDsdParams};
use crnkit::sim::{simulate, SolverConfig};

/// Chemical reaction network toolkit.
#[derive(Parser)]
#[command(name = "crnkit", version)]
struct Cli {
    /// Worker threads for batch jobs (default: logical CPU count).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network for structural violations.
    Validate { project: PathBuf, network: String },
    /// Simulate a network or compartment tree and write a CSV trace.
    Simulate(SimulateArgs),
    /// Run a stored batch evaluation.
    Evaluate(EvaluateArgs),
    /// Perturb rate constants and re-run a stored evaluation per draw.
    Perturb(PerturbArgs),
    /// Fixed points and largest Lyapunov exponent of a network.
    Analyze(AnalyzeArgs),
    /// Run a stored genetic-algorithm optimization.
    Optimize(OptimizeArgs),
    /// DNA strand displacement tools.
    #[command(subcommand)]
    Dsd(DsdCommand),
    /// Random network generators.
    #[command(subcommand)]
    Randgen(RandgenCommand),
    /// Export a network as SBML or an ODE script.
    Export(ExportArgs),
    /// Import a network into a project.
    Import(ImportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverKind {
    Dp45,
    Rkf45,
    Rk4,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "dp45")]
    solver: SolverKind,
    #[arg(long, default_value_t = 1e-9)]
    atol: f64,
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Fixed step for rk4.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Spacing of recorded samples (default: t_end / 1000).
    #[arg(long)]
    record_interval: Option<f64>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let c = match self.solver {
            SolverKind::Dp45 => SolverConfig::dormand_prince(self.atol, self.rtol),
            SolverKind::Rkf45 => SolverConfig::rkf45(self.atol, self.rtol),
            SolverKind::Rk4 => SolverConfig::rk4(self.step),
        };
        match self.record_interval {
            Some(r) => c.with_record_interval(r),
            None => c,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    project: PathBuf,
    model: String,
    /// Interaction series to apply.
    series: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated species to keep.
    #[arg(long, value_delimiter = ',')]
    species: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    project: PathBuf,
    spec: String,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PerturbArgs {
    project: PathBuf,
    spec: String,
    /// Comma-separated rate references such as `r1:fwd,r2:kcat`.
    #[arg(long, value_delimiter = ',', required = true)]
    targets: Vec<String>,
    /// Relative Gaussian noise: k · (1 + sigma · N(0, 1)).
    #[arg(long, conflicts_with = "uniform")]
    sigma: Option<f64>,
    /// Uniform factor range `lo,hi`: k · U[lo, hi].
    #[arg(long, value_delimiter = ',', num_args = 2)]
    uniform: Option<Vec<f64>>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    retries: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    project: PathBuf,
    network: String,
    /// Estimate the largest Lyapunov exponent.
    #[arg(long, action = ArgAction::SetTrue)]
    lyapunov: bool,
    /// Report per-species fixed-point flags.
    #[arg(long, action = ArgAction::SetTrue)]
    fixed_points: bool,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Trailing time window for the fixed-point test (default: t_end / 10).
    #[arg(long)]
    window: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    /// Lyapunov renormalisation interval.
    #[arg(long, default_value_t = 1.0)]
    renorm: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    project: PathBuf,
    /// Name of the stored optimization.
    gaconfig: String,
    #[arg(long)]
    seed: Option<u64>,
    /// History CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Project file receiving the best model.
    #[arg(long)]
    best: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DsdCommand {
    /// Compile a network into strand displacement reactions.
    Transform {
        project: PathBuf,
        network: String,
        #[arg(long, default_value_t = 1e4)]
        cmax: f64,
        /// Fast displacement rate.
        #[arg(long, default_value_t = 100.0)]
        q: f64,
        /// Project receiving the compiled network (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Also write the strand structures here.
        #[arg(long)]
        strands: Option<PathBuf>,
    },
    /// Render every species of a strand file as SVG.
    Render {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a strand file and print it in canonical form.
    Parse { file: PathBuf },
}

#[derive(Subcommand)]
enum RandgenCommand {
    /// Random mass-action network from a JSON parameter file.
    Crn(RandgenArgs),
    /// Random strand displacement circuit from a JSON parameter file.
    Circuit(RandgenArgs),
}

#[derive(Args)]
struct RandgenArgs {
    params: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Project receiving the network (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Circuits only: write the strand structures here.
    #[arg(long)]
    strands: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Sbml,
    Matlab,
    Octave,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(value_enum)]
    format: ExportFormat,
    project: PathBuf,
    network: String,
    /// Script integration horizon.
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ImportFormat {
    Sbml,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(value_enum)]
    format: ImportFormat,
    file: PathBuf,
    /// Project receiving the network (created if missing).
    #[arg(long)]
    into: PathBuf,
}

/// A user or input error (exit code 1). Panics are internal (exit code 2).
struct Failure(String);

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn user(msg: impl Into<String>) -> Failure {
    Failure(msg.into())
}

type CliResult<T = ()> = Result<T, Failure>;

fn color_enabled() -> bool {
    std::env::var("COLOR").map_or(true, |v| v != "0") && std::io::stderr().is_terminal()
}

fn fresh_seed() -> u64 {
    let mut h = RandomState::new().build_hasher();
    h.write_u128(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos()),
    );
    h.finish() >> 1
}

/// Flag, then stored value, then a fresh seed that is printed for replay.
fn resolve_seed(flag: Option<u64>, stored: Option<u64>) -> u64 {
    flag.or(stored).unwrap_or_else(|| {
        let s = fresh_seed();
        eprintln!("seed: {s}");
        s
    })
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| user(format!("cannot read {}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| user(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_or_new(path: &Path) -> CliResult<Project> {
    if path.exists() {
        Ok(load_project(path)?)
    } else {
        Ok(Project::default())
    }
}

fn run(cli: Cli) -> CliResult {
    let workers = cli.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(user("--workers must be at least 1"));
    }
    match cli.command {
        Command::Validate { project, network } => {
            let p = load_project(&project)?;
            let violations = p.network(&network)?.validate();
            if violations.is_empty() {
                println!("{network}: valid");
                return Ok(());
            }
            for v in &violations {
                println!("{v}");
            }
            Err(user(format!("{network}: {} violation(s)", violations.len())))
        }
        Command::Simulate(a) => {
            let p = load_project(&a.project)?;
            let model = p.model(&a.model)?;
            let series = p.series_or_empty(a.series.as_deref())?;
            let seed = resolve_seed(a.seed, None);
            let trace = simulate(&model, &series, &a.solver.config(), a.t_end, seed)?;
            write_out(a.out.as_deref(), &export_csv(&trace, a.species.as_deref())?)
        }
        Command::Evaluate(a) => {
            let p = load_project(&a.project)?;
            let mut spec = p.evaluation_spec(&a.spec)?;
            if let Some(r) = a.reps {
                spec.repetitions = r;
            }
            spec.base_seed = resolve_seed(a.seed, Some(spec.base_seed));
            let result = evaluate_batch(&spec, workers)?;
            eprintln!(
                "{}: {} repetitions, {} failed, summary {}",
                a.spec,
                result.repetitions,
                result.failures,
                result.summary()
            );
            write_out(a.out.as_deref(), &performance_csv(&result)?)
        }
        Command::Perturb(a) => {
            let p = load_project(&a.project)?;
            let spec = p.evaluation_spec(&a.spec)?;
            let targets = a
                .targets
                .iter()
                .map(|t| t.parse::<RateRef>().map_err(user))
                .collect::<Result<Vec<_>, _>>()?;
            let mode = match (a.sigma, a.uniform.as_deref()) {
                (Some(sigma), None) => PerturbationMode::RelativeGaussian { sigma },
                (None, Some([lo, hi])) => PerturbationMode::UniformFactor { lo: *lo, hi: *hi },
                (None, None) => return Err(user("one of --sigma or --uniform is required")),
                _ => return Err(user("--uniform takes exactly two values")),
            };
            let pert = PerturbationSpec {
                targets,
                mode,
                samples: a.samples,
                seed: resolve_seed(a.seed, None),
                max_retries: a.retries,
            };
            let result = perturb_and_evaluate(&spec, &pert, workers)?;
            eprintln!(
                "mean {} std {} quantiles(5,25,50,75,95) {:?}",
                result.mean, result.std, result.quantiles
            );
            write_out(a.out.as_deref(), &perturbation_csv(&a.targets, &result)?)
        }
        Command::Analyze(a) => {
            let p = load_project(&a.project)?;
            let net = p.network(&a.network)?;
            let solver = a.solver.config();
            let both = !a.lyapunov && !a.fixed_points;
            let lyap = (a.lyapunov || both).then_some(LyapunovOptions {
                horizon: a.t_end,
                renorm_interval: a.renorm,
                delta0: 1e-8,
                solver,
            });
            let window = a.window.unwrap_or(a.t_end / 10.0);
            let report = analyze(net, &solver, a.t_end, a.eps, window, lyap.as_ref())?;
            write_out(a.out.as_deref(), &report_csv(&report, a.fixed_points || both)?)
        }
        Command::Optimize(a) => optimize(a, workers),
        Command::Dsd(c) => dsd(c),
        Command::Randgen(c) => randgen(c),
        Command::Export(a) => {
            let p = load_project(&a.project)?;
            let net = p.network(&a.network)?;
            let text = match a.format {
                ExportFormat::Sbml => export_sbml(net)?,
                ExportFormat::Matlab => export_script(net, Dialect::Matlab, a.t_end)?,
                ExportFormat::Octave => export_script(net, Dialect::Octave, a.t_end)?,
            };
            write_out(a.out.as_deref(), &text)
        }
        Command::Import(a) => {
            let ImportFormat::Sbml = a.format;
            let net = import_sbml(&read(&a.file)?)?;
            let mut p = load_or_new(&a.into)?;
            eprintln!("imported '{}' ({} species, {} reactions)", net.name, net.species.len(), net.reactions.len());
            p.upsert_network(net);
            Ok(save_project(&p, &a.into)?)
        }
    }
}

fn optimize(a: OptimizeArgs, workers: usize) -> CliResult {
    let p = load_project(&a.project)?;
    let entry = p.optimization(&a.gaconfig)?;
    let model = p.model(&entry.model)?;
    let series = p.series_or_empty(entry.series.as_deref())?;
    let layout = GeneLayout::new(&entry.genes)?;
    let mut config = entry.config.clone();
    config.seed = resolve_seed(a.seed, Some(config.seed));
    let sim_seed = config.seed;
    let result = match &entry.fitness {
        Fitness::TraceFit { reference, solver, t_end } => {
            config.objective = Objective::Minimize;
            run_ga(&layout, &config, workers, |c| {
                let m = layout.apply(&model, c).map_err(|e| e.to_string())?;
                let trace = simulate(&m, &series, solver, *t_end, sim_seed).map_err(|e| e.to_string())?;
                reference.squared_error(&trace)
            })?
        }
        Fitness::Evaluation { evaluation } => {
            let base = p.evaluation_spec(evaluation)?;
            run_ga(&layout, &config, workers, |c| {
                let mut spec = base.clone();
                spec.model = layout.apply(&model, c).map_err(|e| e.to_string())?;
                if entry.series.is_some() {
                    spec.series = series.clone();
                }
                evaluate_batch(&spec, 1).map(|r| r.summary()).map_err(|e| e.to_string())
            })?
        }
    };
    eprintln!("best fitness {} genes {:?}", result.best_fitness, result.best.genes);
    write_out(a.out.as_deref(), &history_csv(&result.history))?;
    if let Some(path) = a.best {
        let mut out = load_or_new(&path)?;
        match layout.apply(&model, &result.best)? {
            Model::Network(n) => out.upsert_network(n),
            Model::Tree(t) => {
                out.trees.retain(|x| x.name != t.name);
                out.trees.push(t);
            }
        }
        save_project(&out, &path)?;
    }
    Ok(())
}

fn dsd(c: DsdCommand) -> CliResult {
    match c {
        DsdCommand::Transform {
            project,
            network,
            cmax,
            q,
            out,
            strands,
        } => {
            let p = load_project(&project)?;
            let result = transform_soloveichik(p.network(&network)?, cmax, q)?;
            eprintln!(
                "{} -> {} species, {} reactions",
                network,
                result.network.species.len(),
                result.network.reactions.len()
            );
            if let Some(path) = strands {
                let list: Vec<_> = result.structures.values().cloned().collect();
                write_out(Some(&path), &format_dsd_file(&list))?;
            }
            let mut target = load_or_new(&out)?;
            target.upsert_network(result.network);
            Ok(save_project(&target, &out)?)
        }
        DsdCommand::Render { file, out } => {
            let species = parse_dsd_file(&read(&file)?)?;
            std::fs::create_dir_all(&out).map_err(|e| user(format!("cannot create {}: {e}", out.display())))?;
            for s in &species {
                write_out(Some(&out.join(format!("{}.svg", s.name))), &render_svg(s)?)?;
            }
            eprintln!("rendered {} species into {}", species.len(), out.display());
            Ok(())
        }
        DsdCommand::Parse { file } => {
            let species = parse_dsd_file(&read(&file)?)?;
            print!("{}", format_dsd_file(&species));
            Ok(())
        }
    }
}

/// Reads JSON parameters, letting `--seed` override the file's seed.
fn params<T: serde::de::DeserializeOwned>(path: &Path, seed: Option<u64>) -> CliResult<T> {
    let mut v: serde_json::Value =
        serde_json::from_str(&read(path)?).map_err(|e| user(format!("{}: {e}", path.display())))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| user(format!("{}: expected a JSON object", path.display())))?;
    let stored = obj.get("seed").and_then(serde_json::Value::as_u64);
    obj.insert("seed".into(), resolve_seed(seed, stored).into());
    serde_json::from_value(v).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn randgen(c: RandgenCommand) -> CliResult {
    let (network, args) = match c {
        RandgenCommand::Crn(a) => {
            let p: RandomCrnParams = params(&a.params, a.seed)?;
            (random_crn(&p)?, a)
        }
        RandgenCommand::Circuit(a) => {
            let p: RandomDsdParams = params(&a.params, a.seed)?;
            let circuit = random_dsd_circuit(&p)?;
            if let Some(path) = &a.strands {
                let list: Vec<_> = circuit.structures.values().cloned().collect();
                write_out(Some(path), &format_dsd_file(&list))?;
            }
            (circuit.network, a)
        }
    };
    eprintln!(
        "generated '{}' ({} species, {} reactions)",
        network.name,
        network.species.len(),
        network.reactions.len()
    );
    let mut p = load_or_new(&args.out)?;
    p.upsert_network(network);
    Ok(save_project(&p, &args.out)?)
}

fn main() -> ExitCode {
    let color = color_enabled();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .write_style(if color {
            env_logger::WriteStyle::Auto
        } else {
            env_logger::WriteStyle::Never
        })
        .init();
    let command = Cli::command().color(if color { ColorChoice::Auto } else { ColorChoice::Never });
    let cli = match command.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let prefix = if color { "\x1b[31merror:\x1b[0m" } else { "error:" };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure(msg))) => {
            eprintln!("{prefix} {msg}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("{prefix} internal failure (panic)");
            ExitCode::from(2)
        }
    }
}
