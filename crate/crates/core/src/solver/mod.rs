//! Steady-state Newsfeed and Wall probabilities for every label.
//!
//! For a label `i`, `p_i[n]` is the probability that a post on the Newsfeed
//! of `n` was originally authored by `i`, and `q_i[n]` the same for the Wall.
//! Both come out of one linear system per label that shares its matrix across
//! labels. [`solve_direct`] factorizes `I - A` once; [`solve_fixed_point`]
//! iterates `p <- A p + b_i`. Neither takes a list size: the probabilities do
//! not depend on how many posts a Wall or Newsfeed holds.

mod existence;
pub mod lu;
mod metrics;
mod spectral;
mod system;

use rayon::prelude::*;
use thiserror::Error;

pub use existence::{check_existence, is_irreducible, CycleWitness, ExistenceReport};
pub use metrics::{balance_residuals, psi, rank, BalanceResiduals};
pub use spectral::{spectral_radius_estimate, SpectralEstimate, DEFAULT_RHO_MAX_ITER, DEFAULT_RHO_TOL};
pub use system::PropagationSystem;

use crate::graph::{GraphError, LeaderGraph, UserId};
use crate::matrix::DenseMatrix;
use lu::SparseLu;

pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("I - A is singular (pivot {pivot:e} at row {row}); rho(A) estimate {rho}")]
    Singular { row: usize, pivot: f64, rho: f64 },
    #[error("not solvable: rho(A)={rho}")]
    NotSolvable { rho: f64 },
    #[error("label {label}: no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        label: UserId,
        iterations: usize,
        last_change: f64,
    },
    #[error("influence needs at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("initial vector has length {got}, expected {expected}")]
    BadInit { expected: usize, got: usize },
}

/// Newsfeed matrix `P`, Wall matrix `Q` (row = label, column = user) and the
/// influence vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub p: DenseMatrix,
    pub q: DenseMatrix,
    pub psi: Vec<f64>,
}

impl SolutionSet {
    pub fn n_users(&self) -> usize {
        self.psi.len()
    }

    fn from_feeds(system: &PropagationSystem, p: DenseMatrix) -> Result<Self, SolveError> {
        let n = system.n_users();
        let mut q = DenseMatrix::zeros(n, n);
        for i in 0..n {
            system.wall_from_feed(UserId(i), p.row(i), q.row_mut(i));
        }
        let psi = psi(&q)?;
        Ok(SolutionSet { p, q, psi })
    }
}

/// Solves every label with one sparse factorization of `I - A`.
pub fn solve_direct(system: &PropagationSystem) -> Result<SolutionSet, SolveError> {
    let n = system.n_users();
    let lu = SparseLu::factor_identity_minus(system.propagation()).map_err(|e| {
        let rho = spectral_radius_estimate(system.propagation(), DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER).rho;
        SolveError::Singular {
            row: e.row,
            pivot: e.pivot,
            rho,
        }
    })?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = system.b(UserId(i));
            lu.solve_in_place(&mut x);
            x
        })
        .collect();
    let mut p = DenseMatrix::from_rows(rows);
    // Every Newsfeed column is a distribution over labels. Rescaling by the
    // computed column sum removes the shared rounding factor, so a label that
    // fills a feed alone gets exactly 1. Fixed-point iterates are left alone:
    // their defect is truncation, not rounding.
    for col in 0..p.cols() {
        let sum = p.column_sum(col);
        if sum > 0.0 && sum.is_finite() {
            for label in 0..p.rows() {
                p[(label, col)] /= sum;
            }
        }
    }
    SolutionSet::from_feeds(system, p)
}

/// Starting point of the fixed-point iteration.
#[derive(Clone, Debug, Default)]
pub enum FixedPointInit {
    #[default]
    Zero,
    /// The same vector for every label.
    Shared(Vec<f64>),
    /// Row `i` seeds label `i`.
    PerLabel(DenseMatrix),
}

#[derive(Clone, Debug)]
pub struct FixedPointOptions {
    /// Target bound on the max-norm error of each `p_i`.
    pub tol: f64,
    /// Defaults to `max(100 N, 10_000)`.
    pub max_iter: Option<usize>,
    pub init: FixedPointInit,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: DEFAULT_FIXED_POINT_TOL,
            max_iter: None,
            init: FixedPointInit::Zero,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub solution: SolutionSet,
    /// Iterations used by each label.
    pub iterations: Vec<usize>,
    /// Max-norm change of the final step, per label.
    pub last_change: Vec<f64>,
}

/// Iterates `p_i(t) = A p_i(t-1) + b_i` for every label.
///
/// With `r = max row sum of A < 1`, the error after a step of size `delta`
/// is at most `r delta / (1 - r)`, and iteration stops once that bound drops
/// below `tol`. When some row sum equals 1 the bound is unavailable and the
/// step size itself is compared to `tol`.
pub fn solve_fixed_point(
    system: &PropagationSystem,
    options: &FixedPointOptions,
) -> Result<FixedPointSolution, SolveError> {
    let n = system.n_users();
    let a = system.propagation();
    let max_iter = options.max_iter.unwrap_or_else(|| (100 * n).max(10_000));
    let r = a.row_sums().into_iter().fold(0.0, f64::max);
    let step_tol = if r < 1.0 {
        options.tol * (1.0 - r) / r.max(f64::MIN_POSITIVE)
    } else {
        options.tol
    };
    match &options.init {
        FixedPointInit::Shared(v) if v.len() != n => {
            return Err(SolveError::BadInit {
                expected: n,
                got: v.len(),
            })
        }
        FixedPointInit::PerLabel(m) if m.rows() != n || m.cols() != n => {
            return Err(SolveError::BadInit {
                expected: n,
                got: m.cols(),
            })
        }
        _ => {}
    }

    let per_label: Vec<Result<(Vec<f64>, usize, f64), SolveError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let b = system.b(UserId(i));
            let mut x = match &options.init {
                FixedPointInit::Zero => vec![0.0; n],
                FixedPointInit::Shared(v) => v.clone(),
                FixedPointInit::PerLabel(m) => m.row(i).to_vec(),
            };
            let mut next = vec![0.0; n];
            let mut change = f64::INFINITY;
            for it in 1..=max_iter {
                a.mul_vec_into(&x, &mut next);
                change = 0.0;
                for ((nx, &bx), &old) in next.iter_mut().zip(&b).zip(&x) {
                    *nx += bx;
                    change = f64::max(change, (*nx - old).abs());
                }
                std::mem::swap(&mut x, &mut next);
                if change <= step_tol {
                    return Ok((x, it, change));
                }
            }
            Err(SolveError::NoConvergence {
                label: UserId(i),
                iterations: max_iter,
                last_change: change,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(n);
    let mut iterations = Vec::with_capacity(n);
    let mut last_change = Vec::with_capacity(n);
    for res in per_label {
        let (x, it, ch) = res?;
        rows.push(x);
        iterations.push(it);
        last_change.push(ch);
    }
    Ok(FixedPointSolution {
        solution: SolutionSet::from_feeds(system, DenseMatrix::from_rows(rows))?,
        iterations,
        last_change,
    })
}

/// Which route [`solve_graph`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    FixedPoint,
}

/// Builds the system, checks existence, and solves. Refuses unsolvable
/// systems unless `force` is set.
pub fn solve_graph(
    graph: &LeaderGraph,
    method: Method,
    tol: f64,
    force: bool,
) -> Result<(ExistenceReport, SolutionSet), SolveError> {
    let system = PropagationSystem::build(graph)?;
    let report = check_existence(graph, &system, DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER);
    if !report.solvable && !force {
        return Err(SolveError::NotSolvable { rho: report.rho() });
    }
    let solution = match method {
        Method::Direct => solve_direct(&system)?,
        Method::FixedPoint => {
            solve_fixed_point(
                &system,
                &FixedPointOptions {
                    tol,
                    ..Default::default()
                },
            )?
            .solution
        }
    };
    Ok((report, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ActivityRates;
    use approx::assert_abs_diff_eq;

    fn system(g: &LeaderGraph) -> PropagationSystem {
        PropagationSystem::build(g).unwrap()
    }

    #[test]
    fn direct_two_users() {
        let g = LeaderGraph::complete(2, ActivityRates::new(1.0, 1.0)).unwrap();
        let s = solve_direct(&system(&g)).unwrap();
        assert_abs_diff_eq!(s.p[(0, 0)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p[(0, 1)], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q[(0, 0)], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q[(0, 1)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.psi[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.psi[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn direct_without_reposts() {
        let g = LeaderGraph::grid(3, 3, ActivityRates::new(2.0, 0.0)).unwrap();
        let sys = system(&g);
        let s = solve_direct(&sys).unwrap();
        for i in 0..9 {
            assert_eq!(s.p.row(i), sys.b(UserId(i)).as_slice());
            for n in 0..9 {
                assert_eq!(s.q[(i, n)], if i == n { 1.0 } else { 0.0 });
            }
            assert_eq!(s.psi[i], 0.0);
        }
    }

    #[test]
    fn direct_singular_names_rho() {
        let g = LeaderGraph::complete(3, ActivityRates::new(0.0, 1.0)).unwrap();
        match solve_direct(&system(&g)) {
            Err(SolveError::Singular { rho, .. }) => assert!((rho - 1.0).abs() < 1e-9),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn fixed_point_from_exact_solution_takes_one_step() {
        let g = LeaderGraph::complete(2, ActivityRates::new(1.0, 1.0)).unwrap();
        let sys = system(&g);
        let exact = DenseMatrix::from_rows(vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]]);
        let fp = solve_fixed_point(
            &sys,
            &FixedPointOptions {
                init: FixedPointInit::PerLabel(exact),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(fp.iterations, vec![1, 1]);
        assert!(fp.last_change.iter().all(|&c| c < 1e-15));
    }

    #[test]
    fn fixed_point_with_zero_propagation() {
        let g = LeaderGraph::complete(4, ActivityRates::new(1.0, 0.0)).unwrap();
        let sys = system(&g);
        let fp = solve_fixed_point(&sys, &FixedPointOptions::default()).unwrap();
        assert_eq!(fp.iterations, vec![1; 4]);
        for i in 0..4 {
            assert_eq!(fp.solution.p.row(i), sys.b(UserId(i)).as_slice());
        }
    }

    #[test]
    fn fixed_point_matches_direct_and_ignores_init() {
        let g = LeaderGraph::grid(4, 5, ActivityRates::new(0.3, 4.0)).unwrap();
        let sys = system(&g);
        let direct = solve_direct(&sys).unwrap();
        for init in [FixedPointInit::Zero, FixedPointInit::Shared(vec![0.9; 20])] {
            let fp = solve_fixed_point(
                &sys,
                &FixedPointOptions {
                    init,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(fp.solution.p.max_abs_diff(&direct.p) < 1e-11);
            assert!(fp.solution.q.max_abs_diff(&direct.q) < 1e-11);
        }
    }

    #[test]
    fn fixed_point_budget() {
        let g = LeaderGraph::complete(3, ActivityRates::new(0.01, 1.0)).unwrap();
        let err = solve_fixed_point(
            &system(&g),
            &FixedPointOptions {
                max_iter: Some(3),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, SolveError::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn solve_graph_refuses_unsolvable() {
        let g = LeaderGraph::complete(3, ActivityRates::new(0.0, 1.0)).unwrap();
        assert!(matches!(
            solve_graph(&g, Method::Direct, 1e-12, false),
            Err(SolveError::NotSolvable { .. })
        ));
    }
}
