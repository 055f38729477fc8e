use std::fmt;

use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;

use super::spectral::{spectral_radius_estimate, SpectralEstimate};
use super::system::PropagationSystem;
use crate::graph::{LeaderGraph, UserId};

/// Evidence that the cycle condition holds.
#[derive(Clone, Debug, PartialEq)]
pub enum CycleWitness {
    /// `A` is irreducible and this user self-posts.
    IrreducibleWithPoster { poster: UserId },
}

impl fmt::Display for CycleWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleWitness::IrreducibleWithPoster { poster } => {
                write!(f, "propagation matrix irreducible, user {poster} self-posts")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport {
    pub spectral: SpectralEstimate,
    /// Every user self-posts.
    pub all_self_post: bool,
    /// `None` when the irreducible special case was not established.
    pub cycle_witness: Option<CycleWitness>,
    pub solvable: bool,
}

impl ExistenceReport {
    pub fn rho(&self) -> f64 {
        self.spectral.rho
    }
}

impl fmt::Display for ExistenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rho(A)={:.12} ({}), cs1={}, cs2={}, solvable={}",
            self.spectral.rho,
            if self.spectral.converged { "converged" } else { "upper bound" },
            self.all_self_post,
            self.cycle_witness
                .as_ref()
                .map_or_else(|| "not established".to_owned(), |w| w.to_string()),
            self.solvable
        )
    }
}

/// `true` when the directed graph of nonzeros of `A` is strongly connected.
pub fn is_irreducible(system: &PropagationSystem) -> bool {
    let a = system.propagation();
    let n = a.dim();
    let mut g = DiGraph::<(), ()>::with_capacity(n, a.nnz());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (r, c, _) in a.iter() {
        g.add_edge(nodes[r], nodes[c], ());
    }
    kosaraju_scc(&g).len() == 1
}

/// Checks the sufficient conditions for `rho(A) < 1` and combines them with a
/// numerical estimate of `rho(A)`.
pub fn check_existence(
    graph: &LeaderGraph,
    system: &PropagationSystem,
    tol: f64,
    max_iter: usize,
) -> ExistenceReport {
    let spectral = spectral_radius_estimate(system.propagation(), tol, max_iter);
    let all_self_post = graph.users().all(|u| graph.rates(u).lambda > 0.0);
    let poster = graph.users().find(|&u| graph.rates(u).lambda > 0.0);
    let cycle_witness = match poster {
        Some(poster) if is_irreducible(system) => Some(CycleWitness::IrreducibleWithPoster { poster }),
        _ => None,
    };
    let solvable = all_self_post || cycle_witness.is_some() || spectral.rho < 1.0 - tol;
    ExistenceReport {
        spectral,
        all_self_post,
        cycle_witness,
        solvable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ActivityRates;
    use crate::solver::spectral::{DEFAULT_RHO_MAX_ITER, DEFAULT_RHO_TOL};

    fn report(g: &LeaderGraph) -> ExistenceReport {
        let s = PropagationSystem::build(g).unwrap();
        check_existence(g, &s, DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER)
    }

    #[test]
    fn all_posting() {
        let r = report(&LeaderGraph::grid(3, 4, ActivityRates::new(0.5, 2.0)).unwrap());
        assert!(r.all_self_post);
        assert!(r.solvable);
        assert!(r.rho() < 1.0);
    }

    #[test]
    fn single_poster_on_strongly_connected_graph() {
        let g = LeaderGraph::complete(5, ActivityRates::new(0.0, 1.0))
            .unwrap()
            .with_rates(UserId(3), ActivityRates::new(2.0, 1.0));
        let r = report(&g);
        assert!(!r.all_self_post);
        assert_eq!(
            r.cycle_witness,
            Some(CycleWitness::IrreducibleWithPoster { poster: UserId(3) })
        );
        assert!(r.solvable);
    }

    #[test]
    fn pure_reposting_is_unsolvable() {
        let r = report(&LeaderGraph::uniform_ring(7, 2, ActivityRates::new(0.0, 1.0)).unwrap());
        assert!((r.rho() - 1.0).abs() < 1e-10);
        assert!(!r.solvable);
        assert!(r.cycle_witness.is_none());
    }

    #[test]
    fn reducible_but_contracting() {
        // 0 and 1 follow each other and only 0 posts; 2 follows 0 but nobody
        // follows 2, so A is reducible. rho < 1 still holds.
        let g = LeaderGraph::from_parts(
            vec![vec![1], vec![0], vec![0, 1]],
            vec![
                ActivityRates::new(1.0, 1.0),
                ActivityRates::new(0.0, 1.0),
                ActivityRates::new(0.0, 1.0),
            ],
        )
        .unwrap();
        let r = report(&g);
        assert!(r.cycle_witness.is_none());
        assert!(!r.all_self_post);
        assert!(r.solvable, "{r}");
    }
}
