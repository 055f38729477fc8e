use rayon::prelude::*;

use super::{ExperimentError, ScenarioOutput, Table};
use crate::graph::{grid_position, ActivityRates, LeaderGraph, UserId};
use crate::solver::{solve_direct, PropagationSystem, SolutionSet};

/// Uniform ring, one solve per `rho = lambda / mu`; tracks how the posts of
/// `label` spread around the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct RingStudy {
    pub n_users: usize,
    pub radius: usize,
    pub rhos: Vec<f64>,
    pub mu: f64,
    pub label: usize,
}

/// Square grid with uniform rates; influence of every user.
#[derive(Clone, Debug, PartialEq)]
pub struct GridStudy {
    pub side: usize,
    pub rates: ActivityRates,
}

/// Square grid where one corner user's self-post rate is swept.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerStudy {
    pub side: usize,
    pub rates: ActivityRates,
    pub corner_lambdas: Vec<f64>,
    pub corner_mu: f64,
}

impl CornerStudy {
    /// Bottom-left corner.
    pub fn corner(&self) -> UserId {
        UserId((self.side - 1) * self.side)
    }

    /// The corner's diagonal neighbor.
    pub fn diagonal(&self) -> UserId {
        UserId((self.side - 2) * self.side + 1)
    }

    pub fn center(&self) -> UserId {
        UserId((self.side / 2) * self.side + self.side / 2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExploitationStudy {
    Ring(RingStudy),
    Grid(GridStudy),
    Corner(CornerStudy),
}

impl ExploitationStudy {
    pub fn ring_default() -> Self {
        ExploitationStudy::Ring(RingStudy {
            n_users: 31,
            radius: 3,
            rhos: vec![0.1, 1.0, 10.0],
            mu: 1.0,
            label: 0,
        })
    }

    pub fn grid_default() -> Self {
        ExploitationStudy::Grid(GridStudy {
            side: 20,
            rates: ActivityRates::new(10.0, 10.0),
        })
    }

    pub fn corner_default() -> Self {
        ExploitationStudy::Corner(CornerStudy {
            side: 20,
            rates: ActivityRates::new(10.0, 10.0),
            corner_lambdas: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            corner_mu: 10.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingRow {
    pub rho: f64,
    /// `q[n]`: share of `label` posts on the Wall of user `n`.
    pub q: Vec<f64>,
    /// Mean of `q` over the followers of `label`.
    pub direct: f64,
    /// Mean of `q` over the other users, `label` excluded.
    pub indirect: f64,
}

impl RingRow {
    pub fn ratio(&self) -> f64 {
        self.direct / self.indirect
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CornerRow {
    pub corner_lambda: f64,
    pub corner: f64,
    pub diagonal: f64,
    pub center: f64,
    /// Most influential user at this point, lowest id among equals.
    pub argmax: UserId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExploitationOutcome {
    Ring { study: RingStudy, rows: Vec<RingRow> },
    Grid { study: GridStudy, psi: Vec<f64> },
    Corner { study: CornerStudy, rows: Vec<CornerRow> },
}

/// Offset of `user` from `label` along the shorter arc.
pub fn ring_offset(label: usize, user: usize, n_users: usize) -> usize {
    let d = (user + n_users - label) % n_users;
    d.min(n_users - d)
}

fn solve(graph: &LeaderGraph) -> Result<SolutionSet, ExperimentError> {
    Ok(solve_direct(&PropagationSystem::build(graph)?)?)
}

fn argmax(values: &[f64]) -> UserId {
    // first index among equals, matching the ranking tie-break
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = k;
        }
    }
    UserId(best)
}

/// Solver-only studies of how position and activity shape influence.
pub fn run_exploitation(study: &ExploitationStudy) -> Result<ExploitationOutcome, ExperimentError> {
    match study {
        ExploitationStudy::Ring(s) => {
            let rows = s
                .rhos
                .par_iter()
                .map(|&rho| {
                    let g = LeaderGraph::uniform_ring(s.n_users, s.radius, ActivityRates::new(rho * s.mu, s.mu))?;
                    let sol = solve(&g)?;
                    let q = sol.q.row(s.label).to_vec();
                    let label = UserId(s.label);
                    let (mut direct, mut nd, mut indirect, mut ni) = (0.0, 0, 0.0, 0);
                    for (n, &v) in q.iter().enumerate() {
                        if n == s.label {
                            continue;
                        }
                        if g.is_leader_of(label, UserId(n)) {
                            direct += v;
                            nd += 1;
                        } else {
                            indirect += v;
                            ni += 1;
                        }
                    }
                    Ok(RingRow {
                        rho,
                        q,
                        direct: direct / nd as f64,
                        indirect: indirect / ni.max(1) as f64,
                    })
                })
                .collect::<Result<_, ExperimentError>>()?;
            Ok(ExploitationOutcome::Ring { study: s.clone(), rows })
        }
        ExploitationStudy::Grid(s) => {
            let g = LeaderGraph::grid(s.side, s.side, s.rates)?;
            Ok(ExploitationOutcome::Grid {
                study: s.clone(),
                psi: solve(&g)?.psi,
            })
        }
        ExploitationStudy::Corner(s) => {
            let base = LeaderGraph::grid(s.side, s.side, s.rates)?;
            let rows = s
                .corner_lambdas
                .par_iter()
                .map(|&lambda| {
                    let g = base.with_rates(s.corner(), ActivityRates::new(lambda, s.corner_mu));
                    let psi = solve(&g)?.psi;
                    Ok(CornerRow {
                        corner_lambda: lambda,
                        corner: psi[s.corner().index()],
                        diagonal: psi[s.diagonal().index()],
                        center: psi[s.center().index()],
                        argmax: argmax(&psi),
                    })
                })
                .collect::<Result<_, ExperimentError>>()?;
            Ok(ExploitationOutcome::Corner { study: s.clone(), rows })
        }
    }
}

impl ExploitationOutcome {
    pub fn output(&self) -> ScenarioOutput {
        let mut tables = Vec::new();
        let mut facts = Vec::new();
        let scenario = match self {
            ExploitationOutcome::Ring { study, rows } => {
                let mut gap = Table::new("gap", &["rho", "direct", "indirect", "ratio"]);
                for r in rows {
                    let mut t = Table::new(format!("rho{}", r.rho), &["user", "offset", "q"]);
                    for (n, &v) in r.q.iter().enumerate() {
                        t.push(vec![n as f64, ring_offset(study.label, n, study.n_users) as f64, v]);
                    }
                    tables.push(t);
                    gap.push(vec![r.rho, r.direct, r.indirect, r.ratio()]);
                }
                tables.insert(0, gap);
                "exploit-ring"
            }
            ExploitationOutcome::Grid { study, psi } => {
                let mut t = Table::new("psi", &["user", "row", "col", "psi"]);
                for (u, &v) in psi.iter().enumerate() {
                    let (r, c) = grid_position(UserId(u), study.side);
                    t.push(vec![u as f64, r as f64, c as f64, v]);
                }
                tables.push(t);
                let best = argmax(psi);
                facts.push(("argmax_user".to_owned(), best.index() as f64));
                facts.push(("max_psi".to_owned(), psi[best.index()]));
                "exploit-grid"
            }
            ExploitationOutcome::Corner { rows, .. } => {
                let mut t = Table::new("sweep", &["corner_lambda", "corner_psi", "diagonal_psi", "center_psi", "argmax_user"]);
                for r in rows {
                    t.push(vec![r.corner_lambda, r.corner, r.diagonal, r.center, r.argmax.index() as f64]);
                }
                tables.push(t);
                "exploit-corner"
            }
        };
        ScenarioOutput {
            scenario: scenario.to_owned(),
            tables,
            report: None,
            facts,
        }
    }
}
