use wallfeed::experiments::{
    ring_offset, run_exploitation, run_named, ExploitationOutcome, ExploitationStudy, GridStudy, RingStudy, SCENARIOS,
};
use wallfeed::graph::{grid_position, ActivityRates};

#[test]
fn ring_profile_is_symmetric_and_decreasing() {
    let ExploitationOutcome::Ring { study, rows } = run_exploitation(&ExploitationStudy::ring_default()).unwrap() else {
        unreachable!()
    };
    let n = study.n_users;
    for row in &rows {
        for k in 1..n {
            assert!((row.q[k] - row.q[n - k]).abs() < 1e-9, "rho={} k={k}", row.rho);
        }
        for k in 1..n / 2 {
            assert!(row.q[k + 1] <= row.q[k], "rho={} k={k}", row.rho);
        }
        let min = row.q.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((row.q[15] - min).abs() < 1e-15);
        assert_eq!(ring_offset(0, 15, n), n / 2);
    }
    assert!(rows[0].ratio() < rows[1].ratio() && rows[1].ratio() < rows[2].ratio());
}

#[test]
fn grid_influence_has_dihedral_symmetry() {
    for side in [5, 8] {
        let study = ExploitationStudy::Grid(GridStudy {
            side,
            rates: ActivityRates::new(3.0, 2.0),
        });
        let ExploitationOutcome::Grid { psi, .. } = run_exploitation(&study).unwrap() else { unreachable!() };
        let at = |r: usize, c: usize| psi[r * side + c];
        for (u, &v) in psi.iter().enumerate() {
            let (r, c) = grid_position(wallfeed::graph::UserId(u), side);
            let m = side - 1;
            for image in [at(c, r), at(m - r, c), at(r, m - c), at(m - c, m - r), at(m - r, m - c)] {
                assert!((image - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn uniform_ring_is_translation_invariant() {
    let study = ExploitationStudy::Ring(RingStudy {
        n_users: 13,
        radius: 2,
        rhos: vec![1.0],
        mu: 2.0,
        label: 4,
    });
    let ExploitationOutcome::Ring { rows, .. } = run_exploitation(&study).unwrap() else { unreachable!() };
    let base = run_exploitation(&ExploitationStudy::Ring(RingStudy {
        label: 0,
        ..match study {
            ExploitationStudy::Ring(s) => s,
            _ => unreachable!(),
        }
    }))
    .unwrap();
    let ExploitationOutcome::Ring { rows: base, .. } = base else { unreachable!() };
    for k in 0..13 {
        assert!((rows[0].q[(k + 4) % 13] - base[0].q[k]).abs() < 1e-12);
    }
}

#[test]
fn scenario_outputs_are_reproducible_on_disk() {
    let tmp = tempfile::TempDir::new().unwrap();
    let a = run_named("exploit-corner", 0, None).unwrap();
    let b = run_named("exploit-corner", 0, None).unwrap();
    assert_eq!(a, b);
    let dir = a.write(tmp.path()).unwrap();
    let first = std::fs::read(dir.join("sweep.csv")).unwrap();
    b.write(tmp.path()).unwrap();
    assert_eq!(first, std::fs::read(dir.join("sweep.csv")).unwrap());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "exploit-corner");
    assert!(SCENARIOS.contains(&"exploit-corner"));
}

#[test]
fn simulated_scenarios_with_small_budget() {
    for name in ["validate-grid", "robust-interarrival"] {
        let out = run_named(name, 3, Some(6_000)).unwrap();
        let report = out.report.as_ref().unwrap();
        assert!(!report.points.is_empty());
        assert!(report.max_absolute_error.is_finite());
        assert_eq!(out, run_named(name, 3, Some(6_000)).unwrap());
    }
}
