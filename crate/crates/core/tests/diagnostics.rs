use holomenta_core::diagnostics::{self, CheckOptions};
use holomenta_core::systems::{builtin, sample_states, BUILTINS};

#[test]
fn structural_suite_on_builtins() {
    for name in BUILTINS {
        let fx = builtin(name).unwrap();
        let (sys, act) = fx.system().unwrap();
        let states = sample_states(&fx.chart_box, sys.rank(), 100, 0);
        let rep = diagnostics::structural_suite(&sys, &act, &states).unwrap();
        assert_eq!(rep.states, 100);
        assert!(rep.solve_residual_max <= 1e-10, "{name}: {rep:?}");
        assert_eq!(rep.antisymmetry_max, 0.0, "{name}");
        assert!(rep.condition_max < 1e8, "{name}: {rep:?}");
        assert!(rep.tangency_max < 1e-9, "{name}: {rep:?}");
        assert!(rep.base_projection_max <= 1e-8, "{name}: {rep:?}");
        assert!(rep.hamiltonian_identity_max <= 1e-6, "{name}: {rep:?}");
        assert!(rep.lift_agreement_max <= 1e-6, "{name}: {rep:?}");
        assert!(rep.jk_condition_max < 1e8, "{name}: {rep:?}");
    }
}

#[test]
fn omega_jk_adds_pairing_to_base_block() {
    let fx = builtin("particle").unwrap();
    let (sys, act) = fx.definition_with("Wz").unwrap().build().unwrap();
    let m = holomenta_core::mechanics::MPoint::from_slices(&[0.0, 1.0, 0.0], &[0.5, 1.0]);
    let plain = sys.c_basis(&m).unwrap().two_form();
    let jk = diagnostics::omega_jk(&sys, &act, &m).unwrap();
    let diff = &jk - &plain;
    // Base directions are ∂y and ∂x + y∂z: the pairing is −y p_x.
    assert!((diff[(0, 1)] + 1.0).abs() < 1e-7, "{diff}");
    assert!((diff[(1, 0)] - 1.0).abs() < 1e-7);
    assert!(diff.rows(2, 2).amax() == 0.0);
}

#[test]
fn check_suite_passes_for_every_builtin() {
    for name in BUILTINS {
        let fx = builtin(name).unwrap();
        let lines = diagnostics::check_builtin(&fx, &CheckOptions::default()).unwrap();
        assert!(lines.len() > 10);
        for l in &lines {
            assert!(l.pass, "{name}: {l:?}");
        }
    }
}
