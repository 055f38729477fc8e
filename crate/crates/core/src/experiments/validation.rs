use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ComparisonPoint, ComparisonReport, ExperimentError, ScenarioOutput, Table, RING_GRAPH_SEED};
use crate::graph::{ActivityRates, LeaderGraph, UserId};
use crate::simulator::{self, SimulationConfig};
use crate::solver::{solve_direct, PropagationSystem};

/// Topology and parameters of a model-versus-simulation sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum ValidationParams {
    /// One point per `(N, lambda/mu)` pair. The graph is symmetric, so each
    /// point compares the solver's common influence value with the simulated
    /// influence averaged over users.
    Complete {
        sizes: Vec<usize>,
        rhos: Vec<f64>,
        mu: f64,
    },
    /// Square grids; per side, the corner, edge-middle and center users.
    Grid { sides: Vec<usize>, rates: ActivityRates },
    /// One random ring, every user a point.
    Ring {
        n_users: usize,
        max_radius: usize,
        rate_range: (f64, f64),
        graph_seed: u64,
    },
}

impl ValidationParams {
    pub fn complete_default() -> Self {
        ValidationParams::Complete {
            sizes: vec![5, 10, 20, 40],
            rhos: vec![0.5, 1.0, 2.0],
            mu: 1.0,
        }
    }

    pub fn grid_default() -> Self {
        ValidationParams::Grid {
            sides: vec![3, 5, 7],
            rates: ActivityRates::new(5.0, 3.0),
        }
    }

    pub fn ring_default() -> Self {
        ValidationParams::Ring {
            n_users: 31,
            max_radius: 15,
            rate_range: (0.1, 10.0),
            graph_seed: RING_GRAPH_SEED,
        }
    }

    fn scenario_name(&self) -> &'static str {
        match self {
            ValidationParams::Complete { .. } => "validate-complete",
            ValidationParams::Grid { .. } => "validate-grid",
            ValidationParams::Ring { .. } => "validate-ring",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationScenario {
    pub params: ValidationParams,
    /// Shared simulation settings. Graph `k` of the sweep is simulated with
    /// seed `sim.seed + k`.
    pub sim: SimulationConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationOutcome {
    pub report: ComparisonReport,
    pub output: ScenarioOutput,
}

/// Per-user comparison of one graph.
struct GraphRun {
    name: String,
    model: Vec<f64>,
    simulated: Vec<f64>,
    half_width: Vec<f64>,
    mean: (f64, f64),
}

fn compare_graph(name: String, graph: &LeaderGraph, sim: &SimulationConfig) -> Result<GraphRun, ExperimentError> {
    let model = solve_direct(&PropagationSystem::build(graph)?)?.psi;
    let est = simulator::run(graph, sim)?;
    Ok(GraphRun {
        name,
        model,
        mean: est.mean_psi(),
        simulated: est.psi_hat,
        half_width: est.psi_half_width,
    })
}

fn user_table(run: &GraphRun) -> Table {
    let mut t = Table::new(run.name.clone(), &["user", "model_psi", "sim_psi", "half_width"]);
    for u in 0..run.model.len() {
        t.push(vec![u as f64, run.model[u], run.simulated[u], run.half_width[u]]);
    }
    t
}

fn point(label: String, model: f64, simulated: f64, half_width: f64) -> ComparisonPoint {
    ComparisonPoint {
        label,
        model,
        simulated,
        half_width,
    }
}

/// Runs solver and simulator on the same graphs and compares influence.
pub fn run_validation(scenario: &ValidationScenario) -> Result<ValidationOutcome, ExperimentError> {
    scenario.sim.check()?;
    let seeded = |k: usize| SimulationConfig {
        seed: scenario.sim.seed.wrapping_add(k as u64),
        ..scenario.sim.clone()
    };
    let name = scenario.params.scenario_name();
    let mut tables = Vec::new();
    let points = match &scenario.params {
        ValidationParams::Complete { sizes, rhos, mu } => {
            let grid: Vec<(usize, f64)> = sizes.iter().flat_map(|&n| rhos.iter().map(move |&r| (n, r))).collect();
            let runs: Vec<GraphRun> = grid
                .par_iter()
                .enumerate()
                .map(|(k, &(n, rho))| {
                    let g = LeaderGraph::complete(n, ActivityRates::new(rho * mu, *mu))?;
                    compare_graph(format!("n{n}_rho{rho}"), &g, &seeded(k))
                })
                .collect::<Result<_, _>>()?;
            let mut sweep = Table::new("sweep", &["n", "rho", "model_psi", "sim_mean_psi", "half_width"]);
            let mut points = Vec::new();
            for (run, &(n, rho)) in runs.iter().zip(&grid) {
                sweep.push(vec![n as f64, rho, run.model[0], run.mean.0, run.mean.1]);
                points.push(point(run.name.clone(), run.model[0], run.mean.0, run.mean.1));
                tables.push(user_table(run));
            }
            tables.insert(0, sweep);
            points
        }
        ValidationParams::Grid { sides, rates } => {
            let runs: Vec<GraphRun> = sides
                .par_iter()
                .enumerate()
                .map(|(k, &side)| {
                    let g = LeaderGraph::grid(side, side, *rates)?;
                    compare_graph(format!("side{side}"), &g, &seeded(k))
                })
                .collect::<Result<_, _>>()?;
            let mut positions = Table::new("positions", &["side", "position", "user", "model_psi", "sim_psi", "half_width"]);
            let mut points = Vec::new();
            for (run, &side) in runs.iter().zip(sides) {
                let half = side / 2;
                for (pos, (label, user)) in [("corner", 0), ("edge", half), ("center", half * side + half)]
                    .into_iter()
                    .enumerate()
                {
                    positions.push(vec![
                        side as f64,
                        pos as f64,
                        user as f64,
                        run.model[user],
                        run.simulated[user],
                        run.half_width[user],
                    ]);
                    points.push(point(
                        format!("side{side}_{label}"),
                        run.model[user],
                        run.simulated[user],
                        run.half_width[user],
                    ));
                }
                tables.push(user_table(run));
            }
            tables.insert(0, positions);
            points
        }
        ValidationParams::Ring {
            n_users,
            max_radius,
            rate_range,
            graph_seed,
        } => {
            let g = seeded_ring(*n_users, *max_radius, *rate_range, *graph_seed)?;
            let run = compare_graph("users".into(), &g, &seeded(0))?;
            tables.push(user_table(&run));
            (0..g.n_users())
                .map(|u| {
                    point(
                        g.name(UserId(u)).to_owned(),
                        run.model[u],
                        run.simulated[u],
                        run.half_width[u],
                    )
                })
                .collect()
        }
    };
    let report = ComparisonReport::new(name, points);
    Ok(ValidationOutcome {
        output: ScenarioOutput {
            scenario: name.to_owned(),
            tables,
            report: Some(report.clone()),
            facts: Vec::new(),
        },
        report,
    })
}

/// The random ring drawn from `graph_seed`.
pub(crate) fn seeded_ring(
    n_users: usize,
    max_radius: usize,
    rate_range: (f64, f64),
    graph_seed: u64,
) -> Result<LeaderGraph, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(graph_seed);
    Ok(LeaderGraph::random_ring(n_users, max_radius, rate_range, &mut rng)?)
}
