use std::sync::Arc;

use semiwave::media::QuasiPeriodicMedium;
use semiwave::oracle::solve_speed;
use semiwave::solver::{evolve, init_cutoff, Solver, SolverConfig, Stop};
use semiwave::steady_state::compute_steady_state;
use semiwave::{builder::uniform_grid, extract_profile, speed_law, tail_gap};

fn constant_run(
    h_end: f64,
) -> (
    Arc<semiwave::steady_state::SteadyState>,
    semiwave::solver::Trajectory,
) {
    let medium = QuasiPeriodicMedium::constant(1.0).unwrap();
    let cfg = SolverConfig {
        dx: 0.1,
        dt: 4e-3,
        depth: 20.0,
        snapshot_stride: 25,
        ..SolverConfig::default()
    };
    let st = Arc::new(compute_steady_state(&medium, h_end + 30.0, cfg.dx, 1e-10).unwrap());
    let init = init_cutoff(&st, 0.0, 1, &cfg).unwrap();
    let mut solver = Solver::new(cfg, st.clone()).unwrap();
    let traj = evolve(&mut solver, init, Stop::Front(h_end)).unwrap();
    (st, traj)
}

#[test]
fn constant_semiwave_matches_the_shooting_profile() {
    let (_, traj) = constant_run(60.0);
    let oracle = solve_speed(1.0, 1.0, 1e-12).unwrap();
    let p = extract_profile(&traj, &uniform_grid(45.0, 55.0, 5)).unwrap();
    for k in 0..p.tau().len() {
        let err = p
            .xi()
            .iter()
            .zip(p.slice(k))
            .map(|(&xi, &v)| (v - oracle.profile.eval(xi)).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.01, "tau {}: {err}", p.tau()[k]);
    }
}

#[test]
fn constant_speed_law_is_flat_and_tail_decays() {
    let (st, traj) = constant_run(60.0);
    let law = speed_law(&traj, 20.0).unwrap();
    assert!(law.max() - law.min() < 0.01 * law.mean());

    // a0 − v decays exponentially with depth, so ln(gap) grows with ξ.
    let p = extract_profile(&traj, &uniform_grid(45.0, 55.0, 5)).unwrap();
    let gap = tail_gap(&p, &st).unwrap();
    let pts: Vec<(f64, f64)> = [-12.0, -10.0, -8.0, -6.0, -4.0]
        .iter()
        .map(|&x| (x, gap.at(x).ln()))
        .collect();
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(
        slope > 0.0,
        "gap should grow toward the front, slope {slope}"
    );
}
