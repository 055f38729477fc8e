//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wallfeed::experiments::{
    run_exploitation, run_robustness, run_validation, CornerStudy, ExploitationOutcome, ExploitationStudy,
    RobustnessDimension, RobustnessScenario, ValidationParams, ValidationScenario, RING_VALIDATION_EVENTS,
};
use wallfeed::graph::{ActivityRates, LeaderGraph};
use wallfeed::simulator::{self, SimulationConfig};
use wallfeed::solver::{
    balance_residuals, check_existence, solve_direct, solve_fixed_point, FixedPointOptions, PropagationSystem,
    SolutionSet, DEFAULT_RHO_MAX_ITER, DEFAULT_RHO_TOL,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn solve(g: &LeaderGraph) -> SolutionSet {
    solve_direct(&PropagationSystem::build(g).unwrap()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn hand_solved() -> Verdict {
    let tol = 1e-10;
    let two = solve(&LeaderGraph::complete(2, ActivityRates::new(1.0, 1.0)).unwrap());
    let mut ok = close(two.p[(0, 0)], 1.0 / 3.0, tol)
        && close(two.p[(0, 1)], 2.0 / 3.0, tol)
        && close(two.q[(0, 0)], 2.0 / 3.0, tol)
        && close(two.q[(0, 1)], 1.0 / 3.0, tol)
        && two.psi.iter().all(|&v| close(v, 1.0 / 3.0, tol));
    let three = solve(&LeaderGraph::complete(3, ActivityRates::new(1.0, 1.0)).unwrap());
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 0.2 } else { 0.4 };
            ok &= close(three.p[(i, j)], want, tol);
        }
        ok &= close(three.psi[i], 0.2, tol);
    }
    verdict(ok, "2-user mutual and complete N=3 at 1e-10")
}

fn trivial_limits() -> Verdict {
    let silent = solve(&LeaderGraph::grid(4, 3, ActivityRates::new(2.0, 0.0)).unwrap());
    let n = silent.n_users();
    let mut ok = silent.psi.iter().all(|&v| v == 0.0);
    for i in 0..n {
        for m in 0..n {
            ok &= silent.q[(i, m)] == if i == m { 1.0 } else { 0.0 };
        }
    }
    let rates = (0..5).map(|u| ActivityRates::new(if u == 0 { 1.0 } else { 0.0 }, 1.0)).collect();
    let leaders = (0..5).map(|u| (0..5).filter(|&k| k != u).collect()).collect();
    let single = solve(&LeaderGraph::from_parts(leaders, rates).unwrap());
    ok &= single.psi[0] == 1.0;
    let idle = LeaderGraph::complete(6, ActivityRates::new(0.0, 1.0)).unwrap();
    let sys = PropagationSystem::build(&idle).unwrap();
    let report = check_existence(&idle, &sys, DEFAULT_RHO_TOL, DEFAULT_RHO_MAX_ITER);
    ok &= !report.solvable && report.rho() == 1.0;
    verdict(
        ok,
        format!("mu=0 identity walls, single poster psi={}, lambda=0 rho={}", single.psi[0], report.rho()),
    )
}

/// The random graphs shared by criteria 3 and 4.
fn random_graphs() -> Vec<LeaderGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    for k in 0..24 {
        let n = rng.random_range(2..=200);
        let max_leaders = 1 + k % 12;
        out.push(LeaderGraph::random_leaders(n, max_leaders, (0.1, 10.0), &mut rng).unwrap());
    }
    out.push(LeaderGraph::random_ring(151, 20, (0.1, 10.0), &mut rng).unwrap());
    out.push(LeaderGraph::random_ring(31, 15, (0.1, 10.0), &mut rng).unwrap());
    out
}

fn method_equivalence(graphs: &[LeaderGraph]) -> Verdict {
    let (mut diff, mut feed, mut wall) = (0.0f64, 0.0f64, 0.0f64);
    for g in graphs {
        let sys = PropagationSystem::build(g).unwrap();
        let direct = solve_direct(&sys).unwrap();
        let fp = solve_fixed_point(
            &sys,
            &FixedPointOptions {
                tol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap()
        .solution;
        diff = diff.max(direct.p.max_abs_diff(&fp.p)).max(direct.q.max_abs_diff(&fp.q));
        let r = balance_residuals(g, &direct);
        feed = feed.max(r.feed);
        wall = wall.max(r.wall);
    }
    verdict(
        graphs.len() >= 20 && diff <= 1e-10 && feed < 1e-9 && wall < 1e-9,
        format!(
            "{} graphs, max |direct - fixed point| {diff:.2e}, residuals feed {feed:.2e} wall {wall:.2e}",
            graphs.len()
        ),
    )
}

fn stochasticity(graphs: &[LeaderGraph]) -> Verdict {
    let (mut col, mut row_sum, mut mass) = (0.0f64, 0.0f64, 0.0f64);
    for g in graphs {
        let sys = PropagationSystem::build(g).unwrap();
        let s = solve_direct(&sys).unwrap();
        for n in 0..g.n_users() {
            col = col.max((s.p.column_sum(n) - 1.0).abs()).max((s.q.column_sum(n) - 1.0).abs());
        }
        row_sum = sys.propagation().row_sums().into_iter().fold(row_sum, f64::max);
        mass = mass.max(sys.row_mass_defect());
    }
    verdict(
        col <= 1e-9 && row_sum <= 1.0 && mass <= 1e-12,
        format!("column defect {col:.2e}, max row sum of A {row_sum}, row mass defect {mass:.2e}"),
    )
}

fn standard_sim(seed: u64) -> SimulationConfig {
    SimulationConfig {
        wall_size: 10,
        feed_size: 20,
        total_events: 300_000,
        seed,
        ..Default::default()
    }
}

fn complete_validation() -> Verdict {
    let out = run_validation(&ValidationScenario {
        params: ValidationParams::complete_default(),
        sim: standard_sim(100),
    })
    .unwrap();
    let worst = out.report.worst_relative().unwrap();
    verdict(
        out.report.max_relative_error <= 0.02,
        format!(
            "N in {{5,10,20,40}}, rho in {{0.5,1,2}}: max relative error {:.4} at {}",
            out.report.max_relative_error, worst.label
        ),
    )
}

fn grid_validation() -> Verdict {
    let out = run_validation(&ValidationScenario {
        params: ValidationParams::grid_default(),
        sim: standard_sim(200),
    })
    .unwrap();
    verdict(
        out.report.max_absolute_error <= 5e-3,
        format!("N in {{9,25,49}}: max absolute error {:.2e} over corner/edge/center", out.report.max_absolute_error),
    )
}

fn ring_validation() -> Verdict {
    let out = run_validation(&ValidationScenario {
        params: ValidationParams::ring_default(),
        sim: SimulationConfig {
            total_events: RING_VALIDATION_EVENTS,
            seed: 300,
            ..standard_sim(0)
        },
    })
    .unwrap();
    let worst = out.report.worst_relative().unwrap();
    verdict(
        out.report.max_relative_error <= 0.05,
        format!(
            "N=31 seeded ring, {RING_VALIDATION_EVENTS} events: worst-user relative error {:.4} (user {})",
            out.report.max_relative_error, worst.label
        ),
    )
}

fn insensitivity() -> Verdict {
    let g = LeaderGraph::complete(10, ActivityRates::new(1.0, 1.0)).unwrap();
    let big = simulator::run(&g, &standard_sim(400)).unwrap();
    let small = simulator::run(
        &g,
        &SimulationConfig {
            feed_size: 5,
            wall_size: 3,
            ..standard_sim(401)
        },
    )
    .unwrap();
    let n = g.n_users();
    let mut inside = 0;
    for i in 0..n {
        for m in 0..n {
            let gap = (big.q_hat[(i, m)] - small.q_hat[(i, m)]).abs();
            if gap <= big.half_width[(i, m)] + small.half_width[(i, m)] {
                inside += 1;
            }
        }
    }
    let share = inside as f64 / (n * n) as f64;
    verdict(
        share >= 0.95,
        format!("(M,K)=(20,10) vs (5,3): {inside}/{} entries within combined 95% intervals", n * n),
    )
}

fn robustness() -> Verdict {
    let inter = run_robustness(&RobustnessScenario {
        dimension: RobustnessDimension::Interarrival { scv: 4.0 },
        ..RobustnessScenario::standard(standard_sim(500))
    })
    .unwrap();
    let policies = run_robustness(&RobustnessScenario {
        dimension: RobustnessDimension::Policies,
        ..RobustnessScenario::standard(standard_sim(600))
    })
    .unwrap();
    let det = inter.max_deviation("deterministic").unwrap();
    let hyp = inter.max_deviation("hyperexp_scv4").unwrap();
    let no = policies.max_deviation("newest-oldest").unwrap();
    let most = policies.max_deviation("most_popular-random").unwrap();
    let least = policies.max_deviation("least_popular-random").unwrap();
    verdict(
        det < 0.03 && hyp < 0.03 && no < 0.03,
        format!(
            "deviation deterministic {det:.4}, hyperexp {hyp:.4}, newest/oldest {no:.4}; \
             reported only: most popular {most:.4}, least popular {least:.4}"
        ),
    )
}

fn exploitation() -> Verdict {
    let mut notes = Vec::new();

    let ExploitationOutcome::Ring { study, rows } = run_exploitation(&ExploitationStudy::ring_default()).unwrap() else {
        unreachable!()
    };
    let n = study.n_users;
    let mut ring_ok = true;
    for r in &rows {
        for k in 1..n {
            ring_ok &= (r.q[k] - r.q[n - k]).abs() <= 1e-9;
        }
        for k in 1..n / 2 {
            ring_ok &= r.q[k + 1] <= r.q[k];
        }
        let min = r.q.iter().copied().fold(f64::INFINITY, f64::min);
        ring_ok &= r.q[15] <= min + 1e-15;
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio()).collect();
    ring_ok &= ratios.windows(2).all(|w| w[0] < w[1]);
    notes.push(format!(
        "(a) {} direct/indirect ratios {:.1}/{:.1}/{:.1}",
        if ring_ok { "ok" } else { "FAILED" },
        ratios[0],
        ratios[1],
        ratios[2]
    ));

    let ExploitationOutcome::Grid { study, psi } = run_exploitation(&ExploitationStudy::grid_default()).unwrap() else {
        unreachable!()
    };
    let s = study.side;
    let diagonals = [s + 1, 2 * s - 2, (s - 2) * s + 1, (s - 1) * s - 2];
    let corners = [0, s - 1, (s - 1) * s, s * s - 1];
    let max = psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let argmax = (0..psi.len()).find(|&u| psi[u] == max).unwrap();
    let grid_ok = diagonals.contains(&argmax)
        && corners.iter().all(|&c| psi[c] <= min + 1e-15)
        && (0..psi.len()).filter(|u| !corners.contains(u)).all(|u| psi[u] > min + 1e-12);
    notes.push(format!("(b) {} argmax user {argmax}", if grid_ok { "ok" } else { "FAILED" }));

    let ExploitationOutcome::Corner { study, rows } = run_exploitation(&ExploitationStudy::corner_default()).unwrap()
    else {
        unreachable!()
    };
    let study: CornerStudy = study;
    let center_spread = rows.iter().map(|r| (r.center - rows[0].center).abs()).fold(0.0, f64::max);
    let last = rows.last().unwrap();
    let corner_ok = rows.windows(2).all(|w| w[1].corner > w[0].corner)
        && rows.windows(2).all(|w| w[1].diagonal < w[0].diagonal)
        && center_spread <= 1e-6
        && last.corner_lambda == 100.0
        && last.argmax == study.corner();
    notes.push(format!(
        "(c) {} center spread {center_spread:.1e}, argmax at lambda=100 user {}",
        if corner_ok { "ok" } else { "FAILED" },
        last.argmax
    ));
    verdict(ring_ok && grid_ok && corner_ok, notes.join("; "))
}

fn monotonicity() -> Verdict {
    let value = |n: usize, rho: f64| solve(&LeaderGraph::complete(n, ActivityRates::new(rho, 1.0)).unwrap()).psi[0];
    let rhos = [0.5, 1.0, 2.0];
    let mut ok = true;
    for n in 3..=50 {
        let v: Vec<f64> = rhos.iter().map(|&r| value(n, r)).collect();
        ok &= v[0] > v[1] && v[1] > v[2];
        if n < 50 {
            for (k, &r) in rhos.iter().enumerate() {
                ok &= value(n + 1, r) < v[k];
            }
        }
    }
    verdict(ok, "complete graphs N=3..50, rho in {0.5,1,2}")
}

fn main() -> ExitCode {
    let graphs = random_graphs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("hand-solved instances", Box::new(hand_solved)),
        ("trivial limits", Box::new(trivial_limits)),
        ("method equivalence", Box::new(|| method_equivalence(&graphs))),
        ("stochasticity invariants", Box::new(|| stochasticity(&graphs))),
        ("complete-graph validation", Box::new(complete_validation)),
        ("grid validation", Box::new(grid_validation)),
        ("ring validation", Box::new(ring_validation)),
        ("insensitivity to list sizes", Box::new(insensitivity)),
        ("robustness", Box::new(robustness)),
        ("exploitation properties", Box::new(exploitation)),
        ("monotonicity", Box::new(monotonicity)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} [{:>2}] {name}: {} ({:.1}s)",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
