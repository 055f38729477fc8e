//! Event-by-event simulation of the platform.
//!
//! Every user runs two independent renewal processes, one for self-posts and
//! one for re-posts. A self-post creates a new post labelled with its author;
//! a re-post copies one entry of the user's Newsfeed (the entry stays where
//! it is). Either way the new entry lands on the user's Wall and, at the same
//! instant, on the Newsfeed of every follower. Each insertion overwrites one
//! slot chosen by the eviction policy, so every Wall always holds exactly `K`
//! entries and every Newsfeed exactly `M`.
//!
//! Estimates are time averages of list composition over the post-warm-up
//! window. The window is cut into equal-event batches and the batch averages
//! give Student-t confidence half-widths.

mod engine;
mod policy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

pub use engine::run;
pub use policy::{evict_slot, hyperexp_phases, select_post, Eviction, Interarrival, ListEntry, Selection};

use crate::graph::{GraphError, LeaderGraph};
use crate::matrix::DenseMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Posts per Wall (`K`).
    pub wall_size: usize,
    /// Posts per Newsfeed (`M`).
    pub feed_size: usize,
    pub selection: Selection,
    pub eviction: Eviction,
    pub interarrival: Interarrival,
    /// Self-posts plus re-posts, warm-up included.
    pub total_events: u64,
    /// Leading share of `total_events` excluded from the estimates.
    pub warmup_fraction: f64,
    pub seed: u64,
    pub batches: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            wall_size: 10,
            feed_size: 20,
            selection: Selection::Random,
            eviction: Eviction::Random,
            interarrival: Interarrival::Exponential,
            total_events: 300_000,
            warmup_fraction: 0.2,
            seed: 0,
            batches: 10,
        }
    }
}

impl SimulationConfig {
    pub fn warmup_events(&self) -> u64 {
        (self.warmup_fraction * self.total_events as f64).floor() as u64
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.wall_size == 0 || self.feed_size == 0 {
            return bad(format!(
                "list sizes must be positive (K={}, M={})",
                self.wall_size, self.feed_size
            ));
        }
        if self.total_events == 0 {
            return bad("total_events must be positive".into());
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return bad(format!("warmup_fraction {} outside [0, 1)", self.warmup_fraction));
        }
        if self.batches < 2 {
            return bad(format!("need at least 2 batches, got {}", self.batches));
        }
        if self.total_events - self.warmup_events() < self.batches as u64 {
            return bad("fewer observed events than batches".into());
        }
        self.interarrival.check()
    }
}

/// Post-warm-up activity counts, for rate checks.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimCounters {
    pub self_posts: Vec<u64>,
    pub reposts: Vec<u64>,
    pub feed_arrivals: Vec<u64>,
    /// Length of the observation window.
    pub observed_time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimEstimate {
    /// Time-averaged Wall composition, row = label, column = user.
    pub q_hat: DenseMatrix,
    /// Time-averaged Newsfeed composition.
    pub p_hat: DenseMatrix,
    /// 95% half-widths for `q_hat`.
    pub half_width: DenseMatrix,
    pub p_half_width: DenseMatrix,
    pub psi_hat: Vec<f64>,
    pub psi_half_width: Vec<f64>,
    /// Influence vector of each batch (or replication, after pooling).
    pub psi_samples: Vec<Vec<f64>>,
    pub counters: SimCounters,
}

impl SimEstimate {
    /// Point value and 95% half-width of a scalar statistic of the influence
    /// vector, using the batch (or replication) samples for the spread.
    pub fn psi_statistic(&self, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
        let samples: Vec<f64> = self.psi_samples.iter().map(|s| f(s)).collect();
        (f(&self.psi_hat), half_width(&samples))
    }

    /// Mean influence over all users, `sum_i psi_i / N`.
    pub fn mean_psi(&self) -> (f64, f64) {
        self.psi_statistic(|p| p.iter().sum::<f64>() / p.len() as f64)
    }
}

/// 95% Student-t half-width of the mean of `samples`.
pub fn half_width(samples: &[f64]) -> f64 {
    let b = samples.len();
    if b < 2 {
        return f64::NAN;
    }
    let mean = samples.iter().sum::<f64>() / b as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    t_quantile_975(b - 1) * (var / b as f64).sqrt()
}

fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

/// Runs independent replications with seeds `seed, seed + 1, …` and pools
/// them. With one replication the result is exactly [`run`]; otherwise the
/// point estimates are replication means and the half-widths come from the
/// spread across replications.
pub fn replicate(
    graph: &LeaderGraph,
    config: &SimulationConfig,
    n_replications: usize,
) -> Result<SimEstimate, SimError> {
    if n_replications == 0 {
        return Err(SimError::InvalidConfig("need at least one replication".into()));
    }
    if n_replications == 1 {
        return run(graph, config);
    }
    let runs: Vec<SimEstimate> = (0..n_replications as u64)
        .into_par_iter()
        .map(|r| {
            let cfg = SimulationConfig {
                seed: config.seed.wrapping_add(r),
                ..config.clone()
            };
            run(graph, &cfg)
        })
        .collect::<Result<_, _>>()?;
    Ok(pool(&runs))
}

fn pool(runs: &[SimEstimate]) -> SimEstimate {
    let n = runs[0].psi_hat.len();
    let reps = runs.len() as f64;
    let stack = |get: &dyn Fn(&SimEstimate) -> &DenseMatrix| {
        let mut mean = DenseMatrix::zeros(n, n);
        let mut hw = DenseMatrix::zeros(n, n);
        let mut column = vec![0.0; runs.len()];
        for i in 0..n {
            for u in 0..n {
                for (slot, r) in column.iter_mut().zip(runs) {
                    *slot = get(r)[(i, u)];
                }
                mean[(i, u)] = column.iter().sum::<f64>() / reps;
                hw[(i, u)] = half_width(&column);
            }
        }
        (mean, hw)
    };
    let (q_hat, half_width_q) = stack(&|r| &r.q_hat);
    let (p_hat, p_half_width) = stack(&|r| &r.p_hat);
    let psi_samples: Vec<Vec<f64>> = runs.iter().map(|r| r.psi_hat.clone()).collect();
    let psi_hat = (0..n)
        .map(|i| psi_samples.iter().map(|s| s[i]).sum::<f64>() / reps)
        .collect();
    let psi_half_width = (0..n)
        .map(|i| half_width(&psi_samples.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect();
    let mut counters = SimCounters {
        self_posts: vec![0; n],
        reposts: vec![0; n],
        feed_arrivals: vec![0; n],
        observed_time: 0.0,
    };
    for r in runs {
        for u in 0..n {
            counters.self_posts[u] += r.counters.self_posts[u];
            counters.reposts[u] += r.counters.reposts[u];
            counters.feed_arrivals[u] += r.counters.feed_arrivals[u];
        }
        counters.observed_time += r.counters.observed_time;
    }
    SimEstimate {
        q_hat,
        p_hat,
        half_width: half_width_q,
        p_half_width,
        psi_hat,
        psi_half_width,
        psi_samples,
        counters,
    }
}
