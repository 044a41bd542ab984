use sgmcmc_web::{kl_sweep, simulate, BINS, GRID_HI, GRID_LO};

#[test]
fn split_run_produces_a_density_close_to_the_target() {
    let run = simulate("msgnht-split", 0.05, 200_000, 1.0, 3).unwrap();
    assert_eq!(run.centers.len(), BINS);
    assert_eq!(run.estimate.len(), BINS);
    let width = (GRID_HI - GRID_LO) / BINS as f64;
    let mass: f64 = run.truth.iter().sum::<f64>() * width;
    assert!((mass - 1.0).abs() < 1e-9, "true density mass {mass}");
    assert!(run.diverged_at.is_none());
    assert!(run.kl.is_finite() && run.kl < 0.5, "kl {}", run.kl);
    assert_eq!(run.trace_xi.len(), 500);
    assert_eq!(run.trace_steps.last(), Some(&200_000.0));
}

#[test]
fn same_seed_same_run() {
    let a = simulate("msgnht-euler", 0.1, 20_000, 1.0, 9).unwrap();
    assert_eq!(a, simulate("msgnht-euler", 0.1, 20_000, 1.0, 9).unwrap());
    assert_ne!(a, simulate("msgnht-euler", 0.1, 20_000, 1.0, 10).unwrap());
}

#[test]
fn euler_divergence_is_reported_not_raised() {
    let run = simulate("msgnht-euler", 0.3, 200_000, 1.0, 1).unwrap();
    assert!(run.diverged_at.is_some());
    assert_eq!(run.kl, f64::INFINITY);
}

#[test]
fn rejects_bad_arguments() {
    assert!(simulate("leapfrog", 0.1, 100, 1.0, 0).is_err());
    assert!(simulate("sghmc-split", 0.1, 100, 1.0, 0).unwrap_err().contains("thermostat"));
    assert!(simulate("msgnht-split", 0.0, 100, 1.0, 0).is_err());
    assert!(simulate("msgnht-split", 0.1, 5, 1.0, 0).is_err());
    assert!(simulate("msgnht-split", 0.1, 100, f64::NAN, 0).is_err());
}

#[test]
fn sweep_lists_euler_then_split() {
    let hs = [0.05, 0.1];
    let kl = kl_sweep(&hs, 5_000, 1.0, 4).unwrap();
    assert_eq!(kl.len(), 4);
    assert_eq!(kl[1], simulate("msgnht-euler", 0.1, 5_000, 1.0, 4).unwrap().kl);
    assert_eq!(kl[2], simulate("msgnht-split", 0.05, 5_000, 1.0, 4).unwrap().kl);
}
