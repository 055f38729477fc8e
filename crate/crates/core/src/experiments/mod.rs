//! Scripted studies comparing the solver with the simulator, or exercising
//! the solver alone.
//!
//! Each study returns a [`ScenarioOutput`]: named numeric tables plus an
//! optional [`ComparisonReport`]. [`ScenarioOutput::write`] lays them out as
//! `<dir>/<scenario>/<table>.csv` with a `summary.json` next to them. Every
//! study is a pure function of its parameters and seed.

mod exploitation;
mod robustness;
mod validation;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use exploitation::{
    ring_offset, run_exploitation, CornerRow, CornerStudy, ExploitationOutcome, ExploitationStudy, GridStudy,
    RingRow, RingStudy,
};
pub use robustness::{run_robustness, RobustnessDimension, RobustnessOutcome, RobustnessRow, RobustnessScenario};
pub use validation::{run_validation, ValidationOutcome, ValidationParams, ValidationScenario};

use crate::export::table_csv;
use crate::graph::GraphError;
use crate::simulator::{SimError, SimulationConfig};
use crate::solver::SolveError;

/// Relative errors are only taken where the model value exceeds this.
pub const MODEL_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub label: String,
    pub model: f64,
    pub simulated: f64,
    pub half_width: f64,
}

impl ComparisonPoint {
    pub fn absolute_error(&self) -> f64 {
        (self.simulated - self.model).abs()
    }

    /// `None` where the model value is too small for a relative error.
    pub fn relative_error(&self) -> Option<f64> {
        (self.model > MODEL_FLOOR).then(|| self.absolute_error() / self.model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub points: Vec<ComparisonPoint>,
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
}

impl ComparisonReport {
    /// Errors are taken over points with model value above [`MODEL_FLOOR`].
    pub fn new(scenario: impl Into<String>, points: Vec<ComparisonPoint>) -> Self {
        let counted = points.iter().filter(|p| p.model > MODEL_FLOOR);
        let (mut rel, mut abs) = (0.0f64, 0.0f64);
        for p in counted {
            abs = abs.max(p.absolute_error());
            rel = rel.max(p.relative_error().unwrap_or(0.0));
        }
        ComparisonReport {
            scenario: scenario.into(),
            points,
            max_relative_error: rel,
            max_absolute_error: abs,
        }
    }

    pub fn worst_relative(&self) -> Option<&ComparisonPoint> {
        self.points
            .iter()
            .filter(|p| p.model > MODEL_FLOOR)
            .max_by(|a, b| a.relative_error().unwrap().total_cmp(&b.relative_error().unwrap()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub scenario: String,
    pub tables: Vec<Table>,
    pub report: Option<ComparisonReport>,
    /// Extra scalar facts for `summary.json`.
    pub facts: Vec<(String, f64)>,
}

impl ScenarioOutput {
    pub fn summary_json(&self) -> String {
        let mut map = serde_json::Map::new();
        map.insert("scenario".into(), self.scenario.clone().into());
        if let Some(r) = &self.report {
            map.insert("max_relative_error".into(), r.max_relative_error.into());
            map.insert("max_absolute_error".into(), r.max_absolute_error.into());
            map.insert("points".into(), serde_json::to_value(&r.points).expect("points serialize"));
        }
        for (k, v) in &self.facts {
            map.insert(k.clone(), (*v).into());
        }
        map.insert(
            "tables".into(),
            self.tables.iter().map(|t| format!("{}.csv", t.name)).collect::<Vec<_>>().into(),
        );
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `<dir>/<scenario>/*.csv` and `summary.json`; returns the
    /// scenario directory.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf, ExperimentError> {
        let root = dir.as_ref().join(&self.scenario);
        let io = |e: std::io::Error| ExperimentError::Io(format!("{}: {e}", root.display()));
        fs::create_dir_all(&root).map_err(io)?;
        for t in &self.tables {
            fs::write(root.join(format!("{}.csv", t.name)), table_csv(&t.columns, &t.rows)).map_err(io)?;
        }
        fs::write(root.join("summary.json"), self.summary_json()).map_err(io)?;
        Ok(root)
    }
}

/// Scenario names accepted by [`run_named`].
pub const SCENARIOS: &[&str] = &[
    "validate-complete",
    "validate-grid",
    "validate-ring",
    "robust-interarrival",
    "robust-policies",
    "exploit-ring",
    "exploit-grid",
    "exploit-corner",
];

/// Seed of the random ring used by `validate-ring`.
pub const RING_GRAPH_SEED: u64 = 31;

/// Event budget of `validate-ring`. The seeded ring contains users whose
/// influence is around 1e-3, and their estimates need this many events to
/// settle within a few percent.
pub const RING_VALIDATION_EVENTS: u64 = 30_000_000;

/// Runs a named scenario with its default parameters. `events` overrides the
/// simulation budget.
pub fn run_named(name: &str, seed: u64, events: Option<u64>) -> Result<ScenarioOutput, ExperimentError> {
    let sim = |default_events: u64| SimulationConfig {
        seed,
        total_events: events.unwrap_or(default_events),
        ..Default::default()
    };
    match name {
        "validate-complete" => Ok(run_validation(&ValidationScenario {
            params: ValidationParams::complete_default(),
            sim: sim(300_000),
        })?
        .output),
        "validate-grid" => Ok(run_validation(&ValidationScenario {
            params: ValidationParams::grid_default(),
            sim: sim(300_000),
        })?
        .output),
        "validate-ring" => Ok(run_validation(&ValidationScenario {
            params: ValidationParams::ring_default(),
            sim: sim(RING_VALIDATION_EVENTS),
        })?
        .output),
        "robust-interarrival" => Ok(run_robustness(&RobustnessScenario {
            dimension: RobustnessDimension::Interarrival { scv: 4.0 },
            ..RobustnessScenario::standard(sim(300_000))
        })?
        .output),
        "robust-policies" => Ok(run_robustness(&RobustnessScenario {
            dimension: RobustnessDimension::Policies,
            ..RobustnessScenario::standard(sim(300_000))
        })?
        .output),
        "exploit-ring" => Ok(run_exploitation(&ExploitationStudy::ring_default())?.output()),
        "exploit-grid" => Ok(run_exploitation(&ExploitationStudy::grid_default())?.output()),
        "exploit-corner" => Ok(run_exploitation(&ExploitationStudy::corner_default())?.output()),
        other => Err(ExperimentError::UnknownScenario(other.to_owned())),
    }
}
