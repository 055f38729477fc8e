//! `wallfeed` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 domain error (invalid graph, unsolvable
//! system, bad simulation settings), 3 threshold exceeded, 4 I/O.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wallfeed::experiments::{self, ComparisonPoint, ComparisonReport, ExperimentError};
use wallfeed::export::{
    estimate_csv, estimate_json, format_float, read_psi, solution_csv, solution_json, table_csv,
};
use wallfeed::graph::{ActivityRates, GraphError, LeaderGraph};
use wallfeed::simulator::{self, Eviction, Interarrival, Selection, SimError, SimulationConfig};
use wallfeed::solver::{self, rank, Method, SolveError, DEFAULT_FIXED_POINT_TOL};

#[derive(Parser, Debug)]
#[command(name = "wallfeed", version, about = "Influence of users on a Wall/Newsfeed social platform")]
struct Cli {
    /// Seed for simulations and random graphs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file (directory for `experiment`). Defaults to stdout.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as JSON.
    Gen {
        #[command(subcommand)]
        topology: Topology,
    },
    /// Solve the steady-state system and rank users.
    Solve {
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
        /// Fixed-point stopping tolerance.
        #[arg(long, default_value_t = DEFAULT_FIXED_POINT_TOL)]
        tol: f64,
        /// Solve even when existence could not be established.
        #[arg(long)]
        force: bool,
    },
    /// Estimate Wall and Newsfeed composition by simulation.
    Simulate {
        graph: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Compare solver and simulator influence values.
    Validate {
        graph: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Fail (exit 3) if the largest relative error exceeds this.
        #[arg(long)]
        max_rel: Option<f64>,
        /// Fail (exit 3) if the largest absolute error exceeds this.
        #[arg(long)]
        max_abs: Option<f64>,
        /// Apply the thresholds to the influence averaged over users instead
        /// of user by user. Suits symmetric graphs, where all users share
        /// one model value.
        #[arg(long)]
        average: bool,
    },
    /// Rank users from a graph file or a solution/estimate file.
    Rank { input: PathBuf },
    /// Run a named study and write its tables under the output directory.
    Experiment {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(experiments::SCENARIOS))]
        scenario: String,
        /// Override the simulation event budget.
        #[arg(long)]
        events: Option<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum Topology {
    /// Everyone follows everyone.
    Complete {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
    },
    /// Lattice with 4-neighbor leaders.
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
    },
    /// Circle where each user follows its `radius` nearest users on each side.
    Ring {
        #[arg(long)]
        n: usize,
        #[arg(long, required_unless_present = "random")]
        radius: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Draw radii in 1..=max-radius and both rates in [rate-min, rate-max]
        /// from --seed.
        #[arg(long, conflicts_with_all = ["radius", "lambda", "mu"])]
        random: bool,
        #[arg(long, requires = "random")]
        max_radius: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        rate_min: f64,
        #[arg(long, default_value_t = 10.0)]
        rate_max: f64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Direct,
    FixedPoint,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum InterarrivalArg {
    Exponential,
    Hyperexp,
    Deterministic,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Wall size K.
    #[arg(long, default_value_t = 10)]
    wall_size: usize,
    /// Newsfeed size M.
    #[arg(long, default_value_t = 20)]
    feed_size: usize,
    /// random, newest, most_popular or least_popular.
    #[arg(long, default_value = "random")]
    selection: String,
    /// random or oldest.
    #[arg(long, default_value = "random")]
    eviction: String,
    #[arg(long, value_enum, default_value_t = InterarrivalArg::Exponential)]
    interarrival: InterarrivalArg,
    /// Squared coefficient of variation for `hyperexp`.
    #[arg(long, default_value_t = 4.0)]
    scv: f64,
    /// Total events, warm-up included.
    #[arg(long, default_value_t = 300_000)]
    events: u64,
    #[arg(long, default_value_t = 0.2)]
    warmup: f64,
    #[arg(long, default_value_t = 10)]
    batches: usize,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    replications: usize,
}

impl SimArgs {
    fn config(&self, seed: u64) -> Result<SimulationConfig, CliError> {
        let cfg = SimulationConfig {
            wall_size: self.wall_size,
            feed_size: self.feed_size,
            selection: self.selection.parse::<Selection>().map_err(CliError::usage)?,
            eviction: self.eviction.parse::<Eviction>().map_err(CliError::usage)?,
            interarrival: match self.interarrival {
                InterarrivalArg::Exponential => Interarrival::Exponential,
                InterarrivalArg::Hyperexp => Interarrival::HyperExponential { scv: self.scv },
                InterarrivalArg::Deterministic => Interarrival::Deterministic,
            },
            total_events: self.events,
            warmup_fraction: self.warmup,
            seed,
            batches: self.batches,
        };
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    const USAGE: u8 = 1;
    const DOMAIN: u8 = 2;
    const THRESHOLD: u8 = 3;
    const IO: u8 = 4;

    fn usage(e: impl ToString) -> Self {
        CliError {
            code: Self::USAGE,
            message: e.to_string(),
        }
    }

    fn io(path: &Path, e: impl ToString) -> Self {
        CliError {
            code: Self::IO,
            message: format!("{}: {}", path.display(), e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        let code = if matches!(e, GraphError::Io(_)) { Self::IO } else { Self::DOMAIN };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Graph(g) => g.into(),
            other => CliError {
                code: Self::DOMAIN,
                message: other.to_string(),
            },
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Graph(g) => g.into(),
            SimError::InvalidConfig(_) => CliError::usage(e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Graph(g) => g.into(),
            ExperimentError::Solve(s) => s.into(),
            ExperimentError::Sim(s) => s.into(),
            ExperimentError::UnknownScenario(_) => CliError::usage(e),
            ExperimentError::Io(m) => CliError {
                code: Self::IO,
                message: m,
            },
        }
    }
}

/// Writes to `--out` or stdout.
fn emit(out: Option<&Path>, data: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, data).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

/// Solve, simulate and validate print their human-readable summary to
/// stdout when data goes to a file, and to stderr otherwise.
fn note(cli: &Cli, text: &str) {
    if cli.out.is_some() {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn load(path: &Path) -> Result<LeaderGraph, CliError> {
    Ok(LeaderGraph::from_file(path)?)
}

fn ranking_lines(graph_names: Option<&[String]>, psi: &[f64]) -> String {
    let mut s = String::new();
    for (pos, (user, v)) in rank(psi).into_iter().enumerate() {
        let name = graph_names.map_or_else(|| user.to_string(), |n| n[user.index()].clone());
        let _ = writeln!(s, "{}\t{}\t{}", pos + 1, name, format_float(v));
    }
    s
}

fn config_line(cfg: &SimulationConfig, replications: usize) -> String {
    format!(
        "config: {} replications={}\n",
        serde_json::to_string(cfg).expect("config serializes"),
        replications
    )
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(CliError::usage)?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Gen { topology } => {
            let graph = match *topology {
                Topology::Complete { n, lambda, mu } => LeaderGraph::complete(n, ActivityRates::new(lambda, mu)),
                Topology::Grid { rows, cols, lambda, mu } => LeaderGraph::grid(rows, cols, ActivityRates::new(lambda, mu)),
                Topology::Ring {
                    n,
                    radius,
                    lambda,
                    mu,
                    random,
                    max_radius,
                    rate_min,
                    rate_max,
                } => {
                    if random {
                        let max = max_radius.unwrap_or(n.saturating_sub(1) / 2);
                        if !(rate_min > 0.0 && rate_min <= rate_max) {
                            return Err(CliError::usage(format!("bad rate range [{rate_min}, {rate_max}]")));
                        }
                        if max == 0 {
                            return Err(CliError::usage("ring too small"));
                        }
                        let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                        LeaderGraph::random_ring(n, max, (rate_min, rate_max), &mut rng)
                    } else {
                        LeaderGraph::uniform_ring(n, radius.expect("clap enforces radius"), ActivityRates::new(lambda, mu))
                    }
                }
            }
            .map_err(CliError::usage)?;
            graph.ensure_valid().map_err(CliError::usage)?;
            emit(out, &graph.to_json())
        }
        Command::Solve {
            graph,
            method,
            tol,
            force,
        } => {
            let g = load(graph)?;
            let system = solver::PropagationSystem::build(&g)?;
            let report = solver::check_existence(&g, &system, solver::DEFAULT_RHO_TOL, solver::DEFAULT_RHO_MAX_ITER);
            note(cli, &format!("existence: {report}\n"));
            if !report.solvable && !force {
                return Err(SolveError::NotSolvable { rho: report.rho() }.into());
            }
            let method = match method {
                MethodArg::Direct => Method::Direct,
                MethodArg::FixedPoint => Method::FixedPoint,
            };
            let (_, solution) = solver::solve_graph(&g, method, *tol, true)?;
            note(cli, &ranking_lines(Some(g.names()), &solution.psi));
            let data = match cli.format {
                Format::Json => solution_json(&solution),
                Format::Csv => solution_csv(g.names(), &solution),
            };
            emit(out, &data)
        }
        Command::Simulate { graph, sim } => {
            let g = load(graph)?;
            let cfg = sim.config(cli.seed)?;
            note(cli, &config_line(&cfg, sim.replications));
            let est = simulator::replicate(&g, &cfg, sim.replications)?;
            let data = match cli.format {
                Format::Json => estimate_json(&est),
                Format::Csv => estimate_csv(g.names(), &est),
            };
            emit(out, &data)
        }
        Command::Validate {
            graph,
            sim,
            max_rel,
            max_abs,
            average,
        } => {
            let g = load(graph)?;
            let cfg = sim.config(cli.seed)?;
            note(cli, &config_line(&cfg, sim.replications));
            let (_, model) = solver::solve_graph(&g, Method::Direct, DEFAULT_FIXED_POINT_TOL, false)?;
            let est = simulator::replicate(&g, &cfg, sim.replications)?;
            let points = (0..g.n_users())
                .map(|u| ComparisonPoint {
                    label: g.names()[u].clone(),
                    model: model.psi[u],
                    simulated: est.psi_hat[u],
                    half_width: est.psi_half_width[u],
                })
                .collect();
            let report = ComparisonReport::new(graph.display().to_string(), points);
            let n = g.n_users() as f64;
            let (sim_mean, sim_hw) = est.mean_psi();
            let mean = ComparisonPoint {
                label: "mean".into(),
                model: model.psi.iter().sum::<f64>() / n,
                simulated: sim_mean,
                half_width: sim_hw,
            };
            emit(out, &validation_data(&report, &mean, cli.format))?;
            let report = if *average {
                ComparisonReport::new(report.scenario, vec![mean])
            } else {
                report
            };
            note(
                cli,
                &format!(
                    "max_relative_error={} max_absolute_error={}\n",
                    format_float(report.max_relative_error),
                    format_float(report.max_absolute_error)
                ),
            );
            let mut failures = Vec::new();
            if let Some(limit) = max_rel.filter(|&l| report.max_relative_error > l) {
                failures.push(format!("relative error {} > {}", format_float(report.max_relative_error), limit));
            }
            if let Some(limit) = max_abs.filter(|&l| report.max_absolute_error > l) {
                failures.push(format!("absolute error {} > {}", format_float(report.max_absolute_error), limit));
            }
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError {
                    code: CliError::THRESHOLD,
                    message: format!("threshold exceeded: {}", failures.join(", ")),
                })
            }
        }
        Command::Rank { input } => {
            let text = fs::read_to_string(input).map_err(|e| CliError::io(input, e))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
            let (names, psi) = if value.get("users").is_some() {
                let g = LeaderGraph::from_json(&text)?;
                let (report, sol) = solver::solve_graph(&g, Method::Direct, DEFAULT_FIXED_POINT_TOL, false)?;
                note(cli, &format!("existence: {report}\n"));
                (Some(g.names().to_vec()), sol.psi)
            } else {
                let psi = read_psi(&text).map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
                (None, psi)
            };
            let names = names.unwrap_or_else(|| (0..psi.len()).map(|u| u.to_string()).collect());
            emit(out, &ranking_data(&names, &psi, cli.format))
        }
        Command::Experiment { scenario, events } => {
            let output = experiments::run_named(scenario, cli.seed, *events)?;
            let dir = out.unwrap_or(Path::new("results"));
            let written = output.write(dir)?;
            println!("{}", written.display());
            if let Some(r) = &output.report {
                println!(
                    "max_relative_error={} max_absolute_error={}",
                    format_float(r.max_relative_error),
                    format_float(r.max_absolute_error)
                );
            }
            Ok(())
        }
    }
}

fn point_json(p: &ComparisonPoint) -> String {
    format!(
        "{{\"half_width\":{},\"model\":{},\"simulated\":{},\"user\":{}}}",
        format_float(p.half_width),
        format_float(p.model),
        format_float(p.simulated),
        serde_json::to_string(&p.label).expect("string serializes")
    )
}

fn validation_data(report: &ComparisonReport, mean: &ComparisonPoint, format: Format) -> String {
    match format {
        Format::Csv => {
            let columns: Vec<String> = ["user", "model_psi", "sim_psi", "half_width", "abs_error"]
                .iter()
                .map(|s| s.to_string())
                .collect();
            let rows: Vec<Vec<f64>> = report
                .points
                .iter()
                .enumerate()
                .map(|(u, p)| vec![u as f64, p.model, p.simulated, p.half_width, p.absolute_error()])
                .collect();
            table_csv(&columns, &rows)
        }
        Format::Json => {
            let points: Vec<String> = report.points.iter().map(point_json).collect();
            format!(
                "{{\"max_absolute_error\":{},\"max_relative_error\":{},\"mean\":{},\"points\":[{}]}}\n",
                format_float(report.max_absolute_error),
                format_float(report.max_relative_error),
                point_json(mean),
                points.join(",")
            )
        }
    }
}

fn ranking_data(names: &[String], psi: &[f64], format: Format) -> String {
    let ranked = rank(psi);
    match format {
        Format::Csv => {
            let mut s = String::from("rank,user,psi\n");
            for (pos, (user, v)) in ranked.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", pos + 1, names[user.index()], format_float(*v));
            }
            s
        }
        Format::Json => {
            let mut s = String::from("[");
            for (pos, (user, v)) in ranked.iter().enumerate() {
                if pos > 0 {
                    s.push(',');
                }
                let name = serde_json::to_string(&names[user.index()]).expect("string serializes");
                let _ = write!(s, "{{\"psi\":{},\"user\":{}}}", format_float(*v), name);
            }
            s.push_str("]\n");
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CliError::USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
