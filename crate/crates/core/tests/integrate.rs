use holomenta_core::integrate::{self, IntegratorOptions, Method};
use holomenta_core::mechanics::{Energy, MPoint, Momentum, Observable, QuasiVelocity};
use holomenta_core::systems::builtin;
use holomenta_core::Error;

fn particle_start() -> MPoint {
    MPoint::from_slices(&[0.0, 0.0, 0.0], &[1.0, 1.0])
}

fn px_at_one(opts: &IntegratorOptions) -> f64 {
    let (sys, _) = builtin("particle").unwrap().system().unwrap();
    let traj = integrate::integrate(&sys, &particle_start(), 1.0, opts).unwrap();
    sys.momenta(traj.last()).unwrap()[0]
}

#[test]
fn particle_closed_form_at_one() {
    let (sys, _) = builtin("particle").unwrap().system().unwrap();
    let traj = integrate::integrate(&sys, &particle_start(), 1.0, &IntegratorOptions::rk45(1e-10)).unwrap();
    let end = traj.last();
    assert!((end.q[1] - 1.0).abs() < 1e-8);
    let px = sys.momenta(end).unwrap()[0];
    assert!((px - 0.5f64.sqrt()).abs() < 1e-8, "{px}");
    assert_eq!(traj.times.len(), 201);
    assert_eq!(*traj.times.last().unwrap(), 1.0);

    // p_x on its own is not conserved.
    let values: Vec<f64> = traj.states.iter().map(|m| Momentum(0).value(&sys, m).unwrap()).collect();
    assert!((integrate::drift(&values) - (1.0 - 0.5f64.sqrt())).abs() < 1e-6);
}

#[test]
fn particle_conservation_over_ten() {
    let fx = builtin("particle").unwrap();
    let (sys, _) = fx.system().unwrap();
    let traj = integrate::integrate(&sys, &particle_start(), 10.0, &IntegratorOptions::rk45(1e-10)).unwrap();
    let f = fx.observable("f").unwrap();
    let rep = integrate::conservation_report(
        &sys,
        &traj,
        &[("f", f), ("py", &QuasiVelocity(0)), ("energy", &Energy)],
    )
    .unwrap();
    assert!(rep["f"] <= 1e-8, "{rep:?}");
    assert!(rep["py"] <= 1e-10, "{rep:?}");
    assert!(rep["energy"] <= 1e-8, "{rep:?}");
}

#[test]
fn rest_state_is_stationary() {
    let (sys, _) = builtin("disk").unwrap().system().unwrap();
    let m0 = MPoint::from_slices(&[0.1, 0.2, 0.3, 0.4], &[0.0, 0.0]);
    let traj = integrate::integrate(&sys, &m0, 2.0, &IntegratorOptions::default()).unwrap();
    for m in &traj.states {
        assert_eq!(m, &m0);
    }
}

#[test]
fn disk_rolls_on_a_circle() {
    let (sys, _) = builtin("disk").unwrap().system().unwrap();
    let (phid, psid) = (1.0, 0.5);
    let m0 = MPoint::from_slices(&[0.1, -0.2, 0.3, 0.4], &[phid, psid]);
    let traj = integrate::integrate(&sys, &m0, 10.0, &IntegratorOptions::rk45(1e-10)).unwrap();
    let rho = phid / psid;
    for (t, m) in traj.times.iter().zip(&traj.states) {
        assert!((&m.v - &m0.v).norm() < 1e-12);
        let psi = 0.4 + psid * t;
        let x = 0.1 + rho * (psi.sin() - 0.4f64.sin());
        let y = -0.2 - rho * (psi.cos() - 0.4f64.cos());
        assert!((m.q[0] - x).abs() < 1e-8 && (m.q[1] - y).abs() < 1e-8, "t={t}");
        assert!((m.q[2] - (0.3 + phid * t)).abs() < 1e-8);
    }

    // ψ̇ = 0 gives a straight line.
    let m0 = MPoint::from_slices(&[0.0, 0.0, 0.0, 0.4], &[2.0, 0.0]);
    let traj = integrate::integrate(&sys, &m0, 3.0, &IntegratorOptions::rk45(1e-10)).unwrap();
    for (t, m) in traj.times.iter().zip(&traj.states) {
        assert!((m.q[0] - 2.0 * t * 0.4f64.cos()).abs() < 1e-8);
        assert!((m.q[1] - 2.0 * t * 0.4f64.sin()).abs() < 1e-8);
    }
}

#[test]
fn rk4_is_fourth_order() {
    let exact = 0.5f64.sqrt();
    let e1 = (px_at_one(&IntegratorOptions::rk4(0.1)) - exact).abs();
    let e2 = (px_at_one(&IntegratorOptions::rk4(0.05)) - exact).abs();
    let ratio = e1 / e2;
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} ({e1:e}, {e2:e})");
}

#[test]
fn rk45_meets_tolerance() {
    let exact = 0.5f64.sqrt();
    for tol in [1e-6, 1e-8, 1e-10] {
        // Endpoints only, so sampling does not cap the step size.
        let err = (px_at_one(&IntegratorOptions::rk45(tol).with_samples(2)) - exact).abs();
        assert!(err <= 100.0 * tol, "tol {tol}: {err:e}");
    }
}

#[test]
fn rk45_agrees_with_fine_rk4_on_the_ball() {
    let fx = builtin("ball").unwrap();
    let (sys, _) = fx.system().unwrap();
    let reference = integrate::integrate(&sys, &fx.initial, 2.0, &IntegratorOptions::rk4(1e-3)).unwrap();
    let tol = 1e-8;
    let traj = integrate::integrate(&sys, &fx.initial, 2.0, &IntegratorOptions::rk45(tol)).unwrap();
    let a = reference.last();
    let b = traj.last();
    let err = (&a.q - &b.q).norm() + (&a.v - &b.v).norm();
    assert!(err <= 100.0 * tol, "{err:e}");
    assert_eq!(traj.stats.method, Method::Rk45 { tol }.name());
    assert!(traj.stats.accepted_steps > 0);
}

#[test]
fn reversal_returns_to_start() {
    for name in ["particle", "disk", "ball"] {
        let fx = builtin(name).unwrap();
        let (sys, _) = fx.system().unwrap();
        let fwd = integrate::integrate(&sys, &fx.initial, 3.0, &IntegratorOptions::rk45(1e-11)).unwrap();
        let back = integrate::integrate(&sys, fwd.last(), 3.0, &IntegratorOptions::rk45(1e-11).reversed()).unwrap();
        let end = back.last();
        let err = (&end.q - &fx.initial.q).norm() + (&end.v - &fx.initial.v).norm();
        assert!(err < 1e-7, "{name}: {err:e}");
        // Samples of the reversed run retrace the forward one.
        let mid = &back.states[100];
        assert!((&mid.q - &fwd.states[100].q).norm() < 1e-7, "{name}");
    }
}

#[test]
fn invalid_requests() {
    let (sys, _) = builtin("disk").unwrap().system().unwrap();
    let m0 = MPoint::from_slices(&[0.0; 4], &[1.0, 1.0]);
    assert!(matches!(
        integrate::integrate(&sys, &m0, 0.0, &IntegratorOptions::default()),
        Err(Error::InvalidInput(_))
    ));
    assert!(integrate::integrate(&sys, &m0, -1.0, &IntegratorOptions::default()).is_err());
    let bad = MPoint::from_slices(&[0.0; 4], &[1.0]);
    assert!(integrate::integrate(&sys, &bad, 1.0, &IntegratorOptions::default()).is_err());
}

#[test]
fn drift_of_constant_is_zero() {
    assert_eq!(integrate::drift(&[3.5; 10]), 0.0);
    assert_eq!(integrate::drift(&[]), 0.0);
}
