use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wallfeed::graph::{ActivityRates, LeaderGraph, UserId};
use wallfeed::solver::{
    balance_residuals, check_existence, solve_direct, solve_fixed_point, spectral_radius_estimate,
    FixedPointOptions, PropagationSystem, DEFAULT_RHO_MAX_ITER, DEFAULT_RHO_TOL,
};

fn random_graph(n: usize, max_leaders: usize, seed: u64) -> LeaderGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LeaderGraph::random_leaders(n, max_leaders, (0.1, 10.0), &mut rng).unwrap()
}

fn graphs() -> impl Strategy<Value = LeaderGraph> {
    (2usize..60, 1usize..8, any::<u64>()).prop_map(|(n, k, seed)| random_graph(n, k, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_graphs_are_valid(g in graphs()) {
        prop_assert!(g.validate().is_empty());
        for u in g.users() {
            for &l in g.leaders(u) {
                prop_assert!(g.followers(l).contains(&u));
            }
        }
    }

    #[test]
    fn columns_are_distributions(g in graphs()) {
        let s = solve_direct(&PropagationSystem::build(&g).unwrap()).unwrap();
        for n in 0..g.n_users() {
            prop_assert!((s.p.column_sum(n) - 1.0).abs() < 1e-9);
            prop_assert!((s.q.column_sum(n) - 1.0).abs() < 1e-9);
        }
        prop_assert!(s.p.as_slice().iter().chain(s.q.as_slice()).all(|&x| (-1e-15..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn row_mass_and_spectral_bounds(g in graphs()) {
        let sys = PropagationSystem::build(&g).unwrap();
        prop_assert!(sys.row_mass_defect() < 1e-12);
        let sums = sys.propagation().row_sums();
        let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().copied().fold(0.0, f64::max);
        prop_assert!(hi <= 1.0);
        let est = spectral_radius_estimate(sys.propagation(), DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER);
        prop_assert!(est.rho >= lo && est.rho <= hi, "{} not in [{lo}, {hi}]", est.rho);
        prop_assert!(check_existence(&g, &sys, DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER).solvable);
    }

    #[test]
    fn fixed_point_matches_direct(g in graphs()) {
        let sys = PropagationSystem::build(&g).unwrap();
        let direct = solve_direct(&sys).unwrap();
        let fp = solve_fixed_point(&sys, &FixedPointOptions::default()).unwrap().solution;
        prop_assert!(direct.p.max_abs_diff(&fp.p) <= 1e-11);
        prop_assert!(direct.q.max_abs_diff(&fp.q) <= 1e-11);
        let r = balance_residuals(&g, &direct);
        prop_assert!(r.feed < 1e-9 && r.wall < 1e-9, "{r:?}");
    }

    #[test]
    fn silent_reposters_keep_their_walls(n in 2usize..30, k in 1usize..5, seed in any::<u64>()) {
        let mut g = random_graph(n, k, seed);
        for u in 0..n {
            let lambda = g.rates(UserId(u)).lambda;
            g = g.with_rates(UserId(u), ActivityRates::new(lambda, 0.0));
        }
        let s = solve_direct(&PropagationSystem::build(&g).unwrap()).unwrap();
        for i in 0..n {
            for m in 0..n {
                prop_assert_eq!(s.q[(i, m)], if i == m { 1.0 } else { 0.0 });
            }
            prop_assert_eq!(s.psi[i], 0.0);
        }
    }
}

#[test]
fn complete_graph_influence_is_monotone() {
    let value = |n: usize, rho: f64| {
        let g = LeaderGraph::complete(n, ActivityRates::new(rho, 1.0)).unwrap();
        solve_direct(&PropagationSystem::build(&g).unwrap()).unwrap().psi[0]
    };
    for &rho in &[0.5, 1.0, 2.0] {
        for n in 3..50 {
            assert!(value(n + 1, rho) < value(n, rho), "n={n} rho={rho}");
        }
    }
    for n in [3, 10, 50] {
        assert!(value(n, 0.5) > value(n, 1.0));
        assert!(value(n, 1.0) > value(n, 2.0));
    }
}

#[test]
fn single_poster_takes_every_wall() {
    let rates: Vec<ActivityRates> = (0..6)
        .map(|u| ActivityRates::new(if u == 2 { 1.5 } else { 0.0 }, 1.0))
        .collect();
    let leaders = (0..6).map(|u| (0..6).filter(|&k| k != u).collect()).collect();
    let g = LeaderGraph::from_parts(leaders, rates).unwrap();
    let s = solve_direct(&PropagationSystem::build(&g).unwrap()).unwrap();
    for n in 0..6 {
        assert!((s.q[(2, n)] - 1.0).abs() < 1e-12);
    }
    assert!((s.psi[2] - 1.0).abs() < 1e-12);
}
