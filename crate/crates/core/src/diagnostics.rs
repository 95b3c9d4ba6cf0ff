//! Pointwise structural identities and the per-builtin check suite.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Result;
use crate::geom::{self, Matrix, Vector};
use crate::integrate::{self, IntegratorOptions};
use crate::mechanics::{CTangent, Energy, MPoint, MechanicalSystem, Observable};
use crate::symmetry::{
    self, GaugeOptions, LieAlgebraAction, ProjectedSection, Section,
};
use crate::systems::{sample_states, BuiltinFixture};

/// Matrix of `Ω_M + ⟨J, K_W⟩` on the C-basis.
pub fn omega_jk(sys: &MechanicalSystem, act: &LieAlgebraAction, m: &MPoint) -> Result<Matrix> {
    let c = sys.c_basis(m)?;
    let mut a = c.two_form();
    let r = sys.rank();
    let x = sys.frame(&m.q)?;
    for i in 0..r {
        for j in (i + 1)..r {
            let u = CTangent {
                qdot: x.column(i).into_owned(),
                vdot: Vector::zeros(r),
            };
            let w = CTangent {
                qdot: x.column(j).into_owned(),
                vdot: Vector::zeros(r),
            };
            let k = symmetry::jk_pairing(sys, act, m, &u, &w)?;
            a[(i, j)] += k;
            a[(j, i)] -= k;
        }
    }
    Ok(a)
}

/// Both sides of `ξ_Q^M(H_M) = −Σ_a ⟨J, η_a⟩ X_nh(f_a)` for `ξ = Σ f_a η_a`.
pub fn hamiltonian_derivative_sides(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    xi: &dyn Section,
) -> Result<(f64, f64)> {
    let lift = symmetry::m_cotangent_lift(sys, act, m, xi)?;
    let lhs = Energy.differential(sys, m)?.apply(&lift);
    let xnh = sys.nonholonomic_vector_field(m)?;
    let df = geom::jacobian(|q| xi.coefficients(q), &m.q)?;
    let g = act.generator_matrix(&m.q)?;
    let p = sys.momenta(m)?;
    let mut rhs = 0.0;
    for a in 0..act.dim() {
        let ja = p.dot(&g.column(a));
        rhs -= ja * df.row(a).transpose().dot(&xnh.qdot);
    }
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StructuralReport {
    pub states: usize,
    /// Relative residual of the two-form solve for `X_nh`.
    pub solve_residual_max: f64,
    /// `max |A + Aᵀ|` for the restricted two-form.
    pub antisymmetry_max: f64,
    pub condition_max: f64,
    /// Distance of `X_nh` base parts from `D`.
    pub tangency_max: f64,
    /// `|Tτ_M(ξ_Q^M) − ξ_Q|`, relative.
    pub base_projection_max: f64,
    pub hamiltonian_identity_max: f64,
    /// The M-cotangent lift assembled from generators vs the Hamiltonian route.
    pub lift_agreement_max: f64,
    pub jk_condition_max: f64,
}

/// Evaluate every structural identity at each state, using the sections
/// `P_{g_S}(e_a)` for the standard algebra basis.
pub fn structural_suite(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    states: &[MPoint],
) -> Result<StructuralReport> {
    let mut rep = StructuralReport {
        states: states.len(),
        ..Default::default()
    };
    let s = act.dim();
    for m in states {
        let sol = sys.nonholonomic_solution(m)?;
        rep.solve_residual_max = rep.solve_residual_max.max(sol.residual);
        let a = sys.constrained_two_form(m)?;
        rep.antisymmetry_max = rep.antisymmetry_max.max((&a + a.transpose()).amax());
        rep.condition_max = rep.condition_max.max(geom::condition_number(&a));
        rep.tangency_max = rep.tangency_max.max(sys.tangency_defect(&m.q, &sol.field)?);
        let jk = omega_jk(sys, act, m)?;
        rep.jk_condition_max = rep.jk_condition_max.max(geom::condition_number(&jk));
        for e in 0..s {
            let mut eta = Vector::zeros(s);
            eta[e] = 1.0;
            let section = ProjectedSection { sys, act, eta };
            let xi = section.coefficients(&m.q)?;
            let xi_q = act.generator(&m.q, &xi)?;
            let lift = symmetry::m_cotangent_lift(sys, act, m, &section)?;
            let base = (&lift.qdot - &xi_q).norm() / xi_q.norm().max(1.0);
            rep.base_projection_max = rep.base_projection_max.max(base);

            let (lhs, rhs) = hamiltonian_derivative_sides(sys, act, m, &section)?;
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            rep.hamiltonian_identity_max = rep.hamiltonian_identity_max.max((lhs - rhs).abs() / scale);

            let assembled = symmetry::m_cotangent_lift_via_generators(sys, act, m, &section)?;
            let gap = assembled.sub(&lift).norm() / lift.norm().max(1.0);
            rep.lift_agreement_max = rep.lift_agreement_max.max(gap);
        }
    }
    Ok(rep)
}

/// One line of a check table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

impl CheckLine {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            threshold: format!("<= {limit:e}"),
            pass: value <= limit,
        }
    }

    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            threshold: format!("< {limit:e}"),
            pass: value < limit,
        }
    }

    fn equals(name: impl Into<String>, value: f64, expected: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            threshold: format!("== {expected}"),
            pass: value == expected,
        }
    }
}

/// Options for [`check_builtin`].
#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub states: usize,
    pub seed: u64,
    pub analysis_samples: usize,
    pub t_final: f64,
    pub residual_tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            states: 100,
            seed: 0,
            analysis_samples: 50,
            t_final: 10.0,
            residual_tol: symmetry::DEFAULT_RESIDUAL_TOL,
        }
    }
}

/// The full invariant and drift suite for one builtin, for each of its
/// vertical complements.
pub fn check_builtin(fixture: &BuiltinFixture, opts: &CheckOptions) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let (sys, _) = fixture.system()?;
    let traj = integrate::integrate(&sys, &fixture.initial, opts.t_final, &IntegratorOptions::default())?;
    let mut named: Vec<(&str, &dyn Observable)> = Vec::new();
    named.push(("energy", &Energy));
    for o in &fixture.observables {
        named.push((o.name.as_str(), o));
    }
    let drifts: BTreeMap<String, f64> = integrate::conservation_report(&sys, &traj, &named)?;
    for (name, d) in drifts {
        lines.push(CheckLine::at_most(format!("drift {name}"), d, 1e-8));
    }

    for comp in &fixture.complements {
        let tag = comp.name;
        let (sys, act) = fixture.definition_with(tag)?.build()?;
        let states = sample_states(&fixture.chart_box, sys.rank(), opts.states, opts.seed);
        let mut invariance: f64 = 0.0;
        for m in &states {
            sys.validate_at(&m.q)?;
            invariance = invariance.max(act.invariance_residual(&sys, &m.q)?.max());
        }
        lines.push(CheckLine::at_most(format!("[{tag}] action invariance"), invariance, 1e-6));
        let rep = structural_suite(&sys, &act, &states)?;
        lines.push(CheckLine::at_most(format!("[{tag}] X_nh solve residual"), rep.solve_residual_max, 1e-10));
        lines.push(CheckLine::at_most(format!("[{tag}] two-form antisymmetry"), rep.antisymmetry_max, 0.0));
        lines.push(CheckLine::below(format!("[{tag}] two-form condition"), rep.condition_max, 1e8));
        lines.push(CheckLine::at_most(format!("[{tag}] X_nh tangent to D"), rep.tangency_max, 1e-9));
        lines.push(CheckLine::at_most(format!("[{tag}] lift base projection"), rep.base_projection_max, 1e-8));
        lines.push(CheckLine::at_most(
            format!("[{tag}] lift derivative of H_M"),
            rep.hamiltonian_identity_max,
            1e-6,
        ));
        lines.push(CheckLine::at_most(format!("[{tag}] lift via generators"), rep.lift_agreement_max, 1e-6));
        lines.push(CheckLine::below(format!("[{tag}] Omega_JK condition"), rep.jk_condition_max, 1e8));

        let samples = sample_states(&fixture.chart_box, sys.rank(), opts.analysis_samples, opts.seed);
        let gauge = GaugeOptions {
            residual_tol: opts.residual_tol,
            initial: Some(fixture.initial.clone()),
            t_final: opts.t_final,
            ..Default::default()
        };
        let analysis = symmetry::horizontal_gauge_momenta(&sys, &act, &samples, &gauge)?;
        lines.push(CheckLine::equals(
            format!("[{tag}] rank S"),
            analysis.rank_s as f64,
            fixture.expected_rank_s as f64,
        ));
        lines.push(CheckLine {
            name: format!("[{tag}] vertical symmetry"),
            value: analysis.vertical_symmetry_defect,
            threshold: comp.vertical_symmetry.to_string(),
            pass: analysis.vertical_symmetry == comp.vertical_symmetry,
        });
        let got: Vec<&str> = analysis.reports.iter().map(|r| r.verdict.as_str()).collect();
        let want: Vec<&str> = comp.verdicts.iter().map(|v| v.as_str()).collect();
        lines.push(CheckLine {
            name: format!("[{tag}] verdicts {}", got.join(",")),
            value: analysis.reports.len() as f64,
            threshold: want.join(","),
            pass: got == want,
        });
    }
    Ok(lines)
}
