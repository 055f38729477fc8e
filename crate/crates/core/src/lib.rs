//! Steady-state influence of users on a Wall/Newsfeed social platform.
//!
//! Every user owns a Wall (the `K` posts it most recently self-posted or
//! re-posted) and a Newsfeed (the `M` posts most recently put on the Walls of
//! the users it follows). Posts keep the label of their original author as
//! they are re-posted. This crate computes, for every pair of users `(i, n)`,
//! the steady-state probability that a post on the Newsfeed or Wall of `n`
//! carries label `i`, and derives from it an influence score per user.
//!
//! - [`graph`] holds the leader/follower graph and its generators.
//! - [`solver`] assembles and solves the linear system.
//! - [`simulator`] runs the platform event by event, with no modelling
//!   shortcuts, to check the solver and probe its assumptions.
//! - [`experiments`] packages the standard comparison studies.
//! - [`export`] writes solutions and estimates as CSV or canonical JSON.
//!
//! ```
//! use wallfeed::graph::{ActivityRates, LeaderGraph};
//! use wallfeed::solver::{solve_direct, PropagationSystem};
//!
//! let graph = LeaderGraph::complete(3, ActivityRates::new(1.0, 1.0)).unwrap();
//! let system = PropagationSystem::build(&graph).unwrap();
//! let solution = solve_direct(&system).unwrap();
//! assert!((solution.psi[0] - 0.2).abs() < 1e-12);
//! ```

pub mod graph;
pub mod matrix;
pub mod solver;
pub mod simulator;
pub mod experiments;
pub mod export;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/influence.md")]
    mod influence {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
}
