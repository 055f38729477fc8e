use rayon::prelude::*;

use super::{ComparisonPoint, ComparisonReport, ExperimentError, ScenarioOutput, Table};
use crate::graph::{ActivityRates, LeaderGraph};
use crate::simulator::{self, Eviction, Interarrival, Selection, SimulationConfig};
use crate::solver::{solve_direct, PropagationSystem};

/// Which modelling assumption is varied. The first variant of each
/// dimension is the baseline the others are measured against.
#[derive(Clone, Debug, PartialEq)]
pub enum RobustnessDimension {
    /// Exponential, deterministic and hyperexponential inter-arrival times.
    Interarrival { scv: f64 },
    /// Selection/eviction pairs, starting from random/random.
    Policies,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessScenario {
    pub dimension: RobustnessDimension,
    pub sizes: Vec<usize>,
    pub rates: ActivityRates,
    /// Baseline settings; each variant overrides the varied fields. All
    /// variants at the `s`-th size share seed `sim.seed + s`.
    pub sim: SimulationConfig,
}

impl RobustnessScenario {
    /// Complete graphs with `N` in {5, 10, 20} and `(lambda, mu) = (10, 5)`.
    pub fn standard(sim: SimulationConfig) -> Self {
        RobustnessScenario {
            dimension: RobustnessDimension::Policies,
            sizes: vec![5, 10, 20],
            rates: ActivityRates::new(10.0, 5.0),
            sim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessRow {
    pub variant: String,
    pub n_users: usize,
    pub model: f64,
    /// Simulated influence averaged over users, and its half-width.
    pub simulated: f64,
    pub half_width: f64,
    /// `(simulated - baseline) / baseline` against the baseline variant at the
    /// same `N`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessOutcome {
    pub rows: Vec<RobustnessRow>,
    pub output: ScenarioOutput,
}

impl RobustnessOutcome {
    /// Largest `|deviation|` of a variant over all sizes.
    pub fn max_deviation(&self, variant: &str) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| r.deviation.abs())
            .reduce(f64::max)
    }

    pub fn variants(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.variant.as_str()) {
                out.push(&r.variant);
            }
        }
        out
    }
}

fn variants(dimension: &RobustnessDimension, base: &SimulationConfig) -> Vec<(String, SimulationConfig)> {
    let with = |f: &dyn Fn(&mut SimulationConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    match dimension {
        RobustnessDimension::Interarrival { scv } => [
            Interarrival::Exponential,
            Interarrival::Deterministic,
            Interarrival::HyperExponential { scv: *scv },
        ]
        .into_iter()
        .map(|ia| {
            let name = match ia {
                Interarrival::HyperExponential { scv } => format!("hyperexp_scv{scv}"),
                other => other.to_string(),
            };
            (name, with(&|c| c.interarrival = ia))
        })
        .collect(),
        RobustnessDimension::Policies => [
            (Selection::Random, Eviction::Random),
            (Selection::Newest, Eviction::Random),
            (Selection::Random, Eviction::Oldest),
            (Selection::Newest, Eviction::Oldest),
            (Selection::MostPopular, Eviction::Random),
            (Selection::LeastPopular, Eviction::Random),
        ]
        .into_iter()
        .map(|(s, e)| {
            (
                format!("{s}-{e}"),
                with(&|c| {
                    c.selection = s;
                    c.eviction = e;
                }),
            )
        })
        .collect(),
    }
}

/// Simulates every variant on complete graphs of each size and reports the
/// user-averaged influence against the model and the baseline variant.
pub fn run_robustness(scenario: &RobustnessScenario) -> Result<RobustnessOutcome, ExperimentError> {
    let variants = variants(&scenario.dimension, &scenario.sim);
    for (_, cfg) in &variants {
        cfg.check()?;
    }
    let models: Vec<f64> = scenario
        .sizes
        .iter()
        .map(|&n| -> Result<f64, ExperimentError> {
            let g = LeaderGraph::complete(n, scenario.rates)?;
            Ok(solve_direct(&PropagationSystem::build(&g)?)?.psi[0])
        })
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..scenario.sizes.len()).map(move |s| (v, s)))
        .collect();
    let sims: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(v, s)| {
            let g = LeaderGraph::complete(scenario.sizes[s], scenario.rates)?;
            let cfg = SimulationConfig {
                seed: variants[v].1.seed.wrapping_add(s as u64),
                ..variants[v].1.clone()
            };
            Ok(simulator::run(&g, &cfg)?.mean_psi())
        })
        .collect::<Result<_, ExperimentError>>()?;

    let n_sizes = scenario.sizes.len();
    let mut rows = Vec::with_capacity(jobs.len());
    let mut tables = Vec::new();
    let mut points = Vec::new();
    for (v, (name, _)) in variants.iter().enumerate() {
        let mut t = Table::new(name.clone(), &["n", "model_psi", "sim_mean_psi", "half_width", "deviation"]);
        for (s, &n) in scenario.sizes.iter().enumerate() {
            let (simulated, half_width) = sims[v * n_sizes + s];
            let baseline = sims[s].0;
            let row = RobustnessRow {
                variant: name.clone(),
                n_users: n,
                model: models[s],
                simulated,
                half_width,
                deviation: (simulated - baseline) / baseline,
            };
            t.push(vec![n as f64, row.model, simulated, half_width, row.deviation]);
            points.push(ComparisonPoint {
                label: format!("{name}_n{n}"),
                model: row.model,
                simulated,
                half_width,
            });
            rows.push(row);
        }
        tables.push(t);
    }
    let scenario_name = match scenario.dimension {
        RobustnessDimension::Interarrival { .. } => "robust-interarrival",
        RobustnessDimension::Policies => "robust-policies",
    };
    let facts = variants
        .iter()
        .skip(1)
        .map(|(name, _)| {
            let worst = rows
                .iter()
                .filter(|r| &r.variant == name)
                .map(|r| r.deviation.abs())
                .fold(0.0, f64::max);
            (format!("max_deviation_{name}"), worst)
        })
        .collect();
    Ok(RobustnessOutcome {
        output: ScenarioOutput {
            scenario: scenario_name.to_owned(),
            tables,
            report: Some(ComparisonReport::new(scenario_name, points)),
            facts,
        },
        rows,
    })
}
