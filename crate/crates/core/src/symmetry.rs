//! Symmetry data: vertical spaces, the algebra splitting induced by a
//! vertical complement, momentum maps, the W-curvature pairing, the
//! M-cotangent lift and the gauge-momentum discovery pipeline.

use alloc::format;
use alloc::vec::Vec;

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fd;
use crate::field::FrameExpr;
use crate::geom::{self, DirectSum, Matrix, SubspaceBasis, Vector};
use crate::integrate::{self, IntegratorOptions};
use crate::mechanics::{CTangent, Differential, MPoint, MechanicalSystem, Observable};

/// Principal-angle threshold for the vertical symmetry condition.
pub const VERTICAL_SYMMETRY_TOL: f64 = 1e-7;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-7;
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;

/// Infinitesimal generators `(η_a)_Q` of a Lie algebra action, for a fixed
/// basis `{η_a}` of the algebra.
#[derive(Debug, Clone)]
pub struct LieAlgebraAction {
    generators: FrameExpr,
}

/// Lie-derivative residuals of the system data along the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceResidual {
    pub metric: f64,
    pub distribution: f64,
    pub complement: f64,
}

impl InvarianceResidual {
    pub fn max(&self) -> f64 {
        self.metric.max(self.distribution).max(self.complement)
    }
}

impl LieAlgebraAction {
    pub fn new(generators: FrameExpr) -> Self {
        LieAlgebraAction { generators }
    }

    /// Dimension `s` of the algebra.
    pub fn dim(&self) -> usize {
        self.generators.count()
    }

    /// `n × s` matrix whose column `a` is `(η_a)_Q(q)`.
    pub fn generator_matrix(&self, q: &Vector) -> Result<Matrix> {
        self.generators.eval(q)
    }

    /// `ξ_Q(q)` for algebra coefficients `xi`.
    pub fn generator(&self, q: &Vector, xi: &Vector) -> Result<Vector> {
        check_len(xi, self.dim(), "algebra element")?;
        Ok(self.generator_matrix(q)? * xi)
    }

    pub fn is_free_at(&self, q: &Vector, tol: f64) -> Result<bool> {
        Ok(geom::rank(&self.generator_matrix(q)?, tol) == self.dim())
    }

    /// Residuals of `L_η κ = 0`, `[η_Q, D] ⊂ D` and `[η_Q, W] ⊂ W` at `q`,
    /// maximized over the generators.
    pub fn invariance_residual(&self, sys: &MechanicalSystem, q: &Vector) -> Result<InvarianceResidual> {
        let n = sys.dim();
        let k = sys.metric(q)?;
        let local = sys.local(q)?;
        let dk = &local.dmetric;
        let dx = &local.dframe;
        let x = sys.frame(q)?;
        let w = sys.complement(q)?;
        let d_span = SubspaceBasis::span_of(&x, sys.tol());
        let w_span = SubspaceBasis::span_of(&w, sys.tol());
        let dw: Vec<Matrix> = (0..n)
            .map(|i| jacobian_column_block(sys, q, i))
            .collect::<Result<_>>()?;
        let mut out = InvarianceResidual {
            metric: 0.0,
            distribution: 0.0,
            complement: 0.0,
        };
        for a in 0..self.dim() {
            let field = self.generators.field(a);
            let y = field.eval(q)?;
            let jy = field.jacobian(q)?;
            let mut lie = &k * &jy + jy.transpose() * &k;
            for (i, dki) in dk.iter().enumerate() {
                lie += dki * y[i];
            }
            out.metric = out.metric.max(lie.amax() / k.amax().max(1.0));
            let bracket_defect = |frame: &Matrix, partials: &[Matrix], span: &SubspaceBasis| {
                let mut worst: f64 = 0.0;
                for j in 0..frame.ncols() {
                    let xj = frame.column(j).into_owned();
                    let mut jx_y = Vector::zeros(n);
                    for (i, p) in partials.iter().enumerate() {
                        jx_y += p.column(j) * y[i];
                    }
                    let br = jx_y - &jy * &xj;
                    let scale = 1.0 + y.norm() * xj.norm();
                    worst = worst.max((&br - span.project(&br)).norm() / scale);
                }
                worst
            };
            out.distribution = out.distribution.max(bracket_defect(&x, dx, &d_span));
            out.complement = out.complement.max(bracket_defect(&w, &dw, &w_span));
        }
        Ok(out)
    }
}

fn jacobian_column_block(sys: &MechanicalSystem, q: &Vector, i: usize) -> Result<Matrix> {
    let h = fd::step(q[i]);
    let mut qp = q.clone();
    let mut qm = q.clone();
    qp[i] += h;
    qm[i] -= h;
    let span = qp[i] - qm[i];
    Ok((sys.complement(&qp)? - sys.complement(&qm)?) / span)
}

fn check_len(v: &Vector, n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::InvalidInput(format!(
            "{what} has {} entries, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

/// True iff `D_q + V_q = T_qQ`.
pub fn dimension_assumption(sys: &MechanicalSystem, act: &LieAlgebraAction, q: &Vector) -> Result<bool> {
    let x = sys.frame(q)?;
    let g = act.generator_matrix(q)?;
    let n = sys.dim();
    let mut both = Matrix::zeros(n, x.ncols() + g.ncols());
    both.columns_mut(0, x.ncols()).copy_from(&x);
    both.columns_mut(x.ncols(), g.ncols()).copy_from(&g);
    Ok(geom::rank(&both, sys.tol()) == n)
}

/// Rank of `S_q = D_q ∩ V_q`.
pub fn rank_s(sys: &MechanicalSystem, act: &LieAlgebraAction, q: &Vector) -> Result<usize> {
    let d = SubspaceBasis::span_of(&sys.frame(q)?, sys.tol());
    let v = SubspaceBasis::span_of(&act.generator_matrix(q)?, sys.tol());
    Ok(geom::subspace_intersection(&d, &v).dim())
}

/// The splitting `g = g_S ⊕ g_W` at one configuration, in coefficients over
/// the standard basis of the algebra.
#[derive(Debug, Clone)]
pub struct AlgebraSplitting {
    pub q: Vector,
    gs: Matrix,
    gw: Matrix,
    sum: DirectSum,
    // g_W-coordinates from W-coefficients: ζ = gw · w_solve · c_W.
    w_solve: Matrix,
    generators: Matrix,
    tangent_split: DirectSum,
}

fn clean(m: &mut Matrix, scale: f64) {
    let cut = 1e-12 * scale.max(1.0);
    m.iter_mut().for_each(|x| {
        if x.abs() <= cut {
            *x = 0.0
        }
    });
}

impl AlgebraSplitting {
    /// Orthonormal basis of `g_S` (columns in `R^s`).
    pub fn g_s(&self) -> &Matrix {
        &self.gs
    }

    /// Orthonormal basis of `g_W`.
    pub fn g_w(&self) -> &Matrix {
        &self.gw
    }

    pub fn g_s_basis(&self) -> SubspaceBasis {
        SubspaceBasis::span_of(&self.gs, geom::DEFAULT_TOL)
    }

    pub fn g_w_basis(&self) -> SubspaceBasis {
        SubspaceBasis::span_of(&self.gw, geom::DEFAULT_TOL)
    }

    pub fn rank_s(&self) -> usize {
        self.gs.ncols()
    }

    pub fn project_g_s(&self, eta: &Vector) -> Result<Vector> {
        self.sum.project_first(eta)
    }

    pub fn project_g_w(&self, eta: &Vector) -> Result<Vector> {
        self.sum.project_second(eta)
    }

    /// The `g_W`-valued form `A_W` applied to a tangent vector at `q`.
    pub fn a_w(&self, tangent: &Vector) -> Result<Vector> {
        let (_, cw) = self.tangent_split.decompose(tangent)?;
        Ok(&self.gw * (&self.w_solve * cw))
    }

    /// `n × s` generator matrix at `q`.
    pub fn generators(&self) -> &Matrix {
        &self.generators
    }
}

pub fn algebra_splitting(sys: &MechanicalSystem, act: &LieAlgebraAction, q: &Vector) -> Result<AlgebraSplitting> {
    let n = sys.dim();
    let r = sys.rank();
    let s = act.dim();
    let g = act.generator_matrix(q)?;
    let tangent_split = sys.splitting(q)?;
    let mut a_d = Matrix::zeros(r, s);
    let mut a_w = Matrix::zeros(n - r, s);
    for a in 0..s {
        let (cd, cw) = tangent_split.decompose(&g.column(a).into_owned())?;
        a_d.set_column(a, &cd);
        a_w.set_column(a, &cw);
    }
    let scale = g.amax();
    clean(&mut a_d, scale);
    clean(&mut a_w, scale);
    let tol = sys.tol();
    let gs = geom::null_space(&a_w, tol);
    let gw = if r == 0 { Matrix::identity(s, s) } else { geom::null_space(&a_d, tol) };
    if gw.ncols() != n - r {
        return Err(Error::SplitFailure(format!(
            "g_W has dimension {} but W has rank {} (W is not vertical)",
            gw.ncols(),
            n - r
        )));
    }
    if gs.ncols() + gw.ncols() != s {
        return Err(Error::SplitFailure(format!(
            "dim g_S + dim g_W = {} + {} differs from {s} (action not free?)",
            gs.ncols(),
            gw.ncols()
        )));
    }
    let sum = DirectSum::new(&gs, &gw, tol).map_err(|e| Error::SplitFailure(format!("{e}")))?;
    let aw_gw = &a_w * &gw;
    let w_solve = if aw_gw.nrows() == 0 {
        Matrix::zeros(0, 0)
    } else {
        aw_gw
            .try_inverse()
            .ok_or_else(|| Error::SplitFailure("A_W restricted to g_W is singular".into()))?
    };
    Ok(AlgebraSplitting {
        q: q.clone(),
        gs,
        gw,
        sum,
        w_solve,
        generators: g,
        tangent_split,
    })
}

/// Coefficients of `P_{g_S}(η)` at `q`.
pub fn project_g_s(sys: &MechanicalSystem, act: &LieAlgebraAction, q: &Vector, eta: &Vector) -> Result<Vector> {
    check_len(eta, act.dim(), "algebra element")?;
    algebra_splitting(sys, act, q)?.project_g_s(eta)
}

/// Largest principal sine between `g_W` at the first sample and at every
/// other sample.
pub fn vertical_symmetry_defect(sys: &MechanicalSystem, act: &LieAlgebraAction, samples: &[Vector]) -> Result<f64> {
    let Some(first) = samples.first() else {
        return Err(Error::InvalidInput("no sample points".into()));
    };
    let reference = algebra_splitting(sys, act, first)?.g_w_basis();
    let mut worst: f64 = 0.0;
    for q in &samples[1..] {
        let here = algebra_splitting(sys, act, q)?.g_w_basis();
        worst = worst.max(geom::max_principal_sine(&reference, &here));
    }
    Ok(worst)
}

/// True iff `g_W` is the same subspace of the algebra at every sample.
pub fn vertical_symmetry_condition(sys: &MechanicalSystem, act: &LieAlgebraAction, samples: &[Vector]) -> Result<bool> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    Ok(vertical_symmetry_defect(sys, act, samples)? <= VERTICAL_SYMMETRY_TOL)
}

/// `⟨J^nh, ξ⟩(m) = p(m) · ξ_Q(q)`.
pub fn momentum_pairing(sys: &MechanicalSystem, act: &LieAlgebraAction, m: &MPoint, xi: &Vector) -> Result<f64> {
    Ok(sys.momenta(m)?.dot(&act.generator(&m.q, xi)?))
}

pub fn a_w(sys: &MechanicalSystem, act: &LieAlgebraAction, q: &Vector, tangent: &Vector) -> Result<Vector> {
    check_len(tangent, sys.dim(), "tangent vector")?;
    algebra_splitting(sys, act, q)?.a_w(tangent)
}

/// `⟨J(m), K_W(u, w)⟩` with `K_W(u, w) = −A_W([ū, w̄])`, where the
/// extensions are `P_D` applied to the constant fields `u.qdot`, `w.qdot`.
/// Only base parts enter.
pub fn jk_pairing(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    u: &CTangent,
    w: &CTangent,
) -> Result<f64> {
    let split = algebra_splitting(sys, act, &m.q)?;
    jk_pairing_with(sys, &split, m, u, w)
}

fn jk_pairing_with(
    sys: &MechanicalSystem,
    split: &AlgebraSplitting,
    m: &MPoint,
    u: &CTangent,
    w: &CTangent,
) -> Result<f64> {
    let ub = &u.qdot;
    let wb = &w.qdot;
    let bracket = geom::lie_bracket(|q| sys.project_d(q, ub), |q| sys.project_d(q, wb), &m.q)?;
    let zeta = -split.a_w(&bracket)?;
    Ok(sys.momenta(m)?.dot(&(split.generators() * zeta)))
}

/// An algebra-valued function on `Q`, in coefficients over the standard
/// basis.
pub trait Section {
    fn coefficients(&self, q: &Vector) -> Result<Vector>;
}

impl Section for Vector {
    fn coefficients(&self, _q: &Vector) -> Result<Vector> {
        Ok(self.clone())
    }
}

/// Section given by a closure.
pub struct FnSection<F>(pub F);

impl<F> Section for FnSection<F>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    fn coefficients(&self, q: &Vector) -> Result<Vector> {
        (self.0)(q)
    }
}

/// `q ↦ P_{g_S}(η)` for a constant `η`.
pub struct ProjectedSection<'a> {
    pub sys: &'a MechanicalSystem,
    pub act: &'a LieAlgebraAction,
    pub eta: Vector,
}

impl Section for ProjectedSection<'_> {
    fn coefficients(&self, q: &Vector) -> Result<Vector> {
        project_g_s(self.sys, self.act, q, &self.eta)
    }
}

/// The linear function `m ↦ ⟨J^nh, ξ(q)⟩(m)`.
pub struct SectionMomentum<'a> {
    pub act: &'a LieAlgebraAction,
    pub section: &'a dyn Section,
}

impl Observable for SectionMomentum<'_> {
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        momentum_pairing(sys, self.act, m, &self.section.coefficients(&m.q)?)
    }

    fn differential(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<Differential> {
        // Linear in v: ∂/∂v = Xᵀ κ ξ_Q exactly.
        let y = self.act.generator(&m.q, &self.section.coefficients(&m.q)?)?;
        let dv = sys.frame(&m.q)?.transpose() * (sys.metric(&m.q)? * y);
        let mut dq = Vector::zeros(m.q.len());
        let mut probe = m.clone();
        for k in 0..m.q.len() {
            let x = m.q[k];
            dq[k] = fd::central_derivative(
                |t| {
                    probe.q[k] = t;
                    self.value(sys, &probe)
                },
                x,
            )?;
            probe.q[k] = x;
        }
        Ok(Differential { dq, dv })
    }
}

/// `ξ_Q^M = −π♯_nh(d⟨J^nh, ξ⟩)`.
pub fn m_cotangent_lift(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    xi: &dyn Section,
) -> Result<CTangent> {
    sys.ham_vector_field(m, &SectionMomentum { act, section: xi })
}

/// Infinitesimal generator on `M` of a constant algebra element, as the
/// derivative at zero of the induced flow on `(q, v)`: the base point moves
/// along `η_Q` and the velocity `X v` is transported by the tangent flow,
/// then re-expressed in the `D` frame at the new point.
pub fn constant_generator_on_m(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    eta: &Vector,
) -> Result<CTangent> {
    let q = &m.q;
    let qdot = act.generator(q, eta)?;
    let jac = geom::jacobian(|x| act.generator(x, eta), q)?;
    let u = sys.frame(q)? * &m.v;
    let ju = &jac * &u;
    let h = fd::step(q.amax());
    let moved = |e: f64| -> Result<Vector> {
        let qe = q + &qdot * e;
        let ue = &u + &ju * e;
        Ok(sys.splitting(&qe)?.decompose(&ue)?.0)
    };
    let plus = moved(h)?;
    let minus = moved(-h)?;
    Ok(CTangent {
        qdot,
        vdot: (plus - minus) / (2.0 * h),
    })
}

/// `Σ_a ⟨J, η_a⟩ X_{f_a}` for a section `ξ = Σ f_a η_a`.
pub fn coefficient_correction(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    xi: &dyn Section,
) -> Result<CTangent> {
    let s = act.dim();
    let g = act.generator_matrix(&m.q)?;
    let p = sys.momenta(m)?;
    let df = geom::jacobian(|q| xi.coefficients(q), &m.q)?;
    let mut out = CTangent::zeros(sys.dim(), sys.rank());
    for a in 0..s {
        let ja = p.dot(&g.column(a));
        let d = Differential {
            dq: df.row(a).transpose(),
            dv: Vector::zeros(sys.rank()),
        };
        let xf = sys.solve_ham_field(m, &d)?.field;
        out = out.add(&xf.scaled(ja));
    }
    Ok(out)
}

/// The M-cotangent lift assembled from the frozen generator `ξ_M` and the
/// coefficient differentials: `ξ_M − Σ_a ⟨J, η_a⟩ π♯_nh(df_a)`.
pub fn m_cotangent_lift_via_generators(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    m: &MPoint,
    xi: &dyn Section,
) -> Result<CTangent> {
    let frozen = constant_generator_on_m(sys, act, m, &xi.coefficients(&m.q)?)?;
    Ok(frozen.add(&coefficient_correction(sys, act, m, xi)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Certified,
    ResidualFailed,
    EmpiricalOnly,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "certified",
            Verdict::ResidualFailed => "residual_failed",
            Verdict::EmpiricalOnly => "empirical_only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaugeMomentumReport {
    pub eta: Vector,
    /// `(q, P_{g_S}(η)(q))` at each sample.
    pub section_samples: Vec<(Vector, Vector)>,
    pub jk_residual_max: f64,
    pub drift: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct GaugeOptions {
    pub residual_tol: f64,
    pub drift_tol: f64,
    /// Start of the drift trajectory; the first sample when absent.
    pub initial: Option<MPoint>,
    pub t_final: f64,
    pub integrator: IntegratorOptions,
}

impl Default for GaugeOptions {
    fn default() -> Self {
        GaugeOptions {
            residual_tol: DEFAULT_RESIDUAL_TOL,
            drift_tol: DEFAULT_DRIFT_TOL,
            initial: None,
            t_final: 10.0,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaugeAnalysis {
    pub rank_s: usize,
    pub vertical_symmetry: bool,
    pub vertical_symmetry_defect: f64,
    pub reports: Vec<GaugeMomentumReport>,
}

/// `f_η(m) = p · P_D(η_Q(q))`.
pub fn gauge_momentum(sys: &MechanicalSystem, act: &LieAlgebraAction, eta: &Vector, m: &MPoint) -> Result<f64> {
    momentum_pairing(sys, act, m, &project_g_s(sys, act, &m.q, eta)?)
}

fn unit(s: usize, a: usize) -> Vector {
    let mut e = Vector::zeros(s);
    e[a] = 1.0;
    e
}

/// Greedily pick standard basis vectors that increase the rank of
/// `[fixed | map(chosen)]` until `count` are chosen.
fn greedy_basis<F>(s: usize, fixed: &Matrix, count: usize, tol: f64, mut map: F) -> Result<Vec<Vector>>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    let mut cols: Vec<Vector> = fixed.column_iter().map(|c| c.into_owned()).collect();
    let base_rank = if cols.is_empty() { 0 } else { geom::rank(&Matrix::from_columns(&cols), tol) };
    let mut chosen = Vec::new();
    for a in 0..s {
        if chosen.len() == count {
            break;
        }
        let e = unit(s, a);
        cols.push(map(&e)?);
        if geom::rank(&Matrix::from_columns(&cols), tol) == base_rank + chosen.len() + 1 {
            chosen.push(e);
        } else {
            cols.pop();
        }
    }
    if chosen.len() != count {
        return Err(Error::SplitFailure(format!(
            "could only find {} of {count} independent candidates",
            chosen.len()
        )));
    }
    Ok(chosen)
}

/// Candidate horizontal gauge momenta of the form `⟨J, P_{g_S}(η)⟩` for
/// constant `η`, each tested against the `⟨J, K_W⟩` obstruction and along
/// one integrated trajectory.
pub fn horizontal_gauge_momenta(
    sys: &MechanicalSystem,
    act: &LieAlgebraAction,
    samples: &[MPoint],
    opts: &GaugeOptions,
) -> Result<GaugeAnalysis> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    for (i, m) in samples.iter().enumerate() {
        if !dimension_assumption(sys, act, &m.q)? {
            return Err(Error::DimensionAssumptionFailure(i));
        }
    }
    let s = act.dim();
    let splittings = samples
        .iter()
        .map(|m| algebra_splitting(sys, act, &m.q))
        .collect::<Result<Vec<_>>>()?;
    let k = rank_s(sys, act, &samples[0].q)?;
    if splittings.iter().any(|sp| sp.rank_s() != k) {
        return Err(Error::SplitFailure("rank of g_S varies across samples".into()));
    }
    let reference = splittings[0].g_w_basis();
    let defect = splittings[1..]
        .iter()
        .map(|sp| geom::max_principal_sine(&reference, &sp.g_w_basis()))
        .fold(0.0, f64::max);
    let vertical = defect <= VERTICAL_SYMMETRY_TOL;

    let etas = if vertical {
        greedy_basis(s, splittings[0].g_w(), k, sys.tol(), |e| Ok(e.clone()))?
    } else {
        let sp = &splittings[0];
        greedy_basis(s, &Matrix::zeros(s, 0), k, sys.tol(), |e| sp.project_g_s(e))?
    };

    let nh: Vec<CTangent> = samples
        .iter()
        .map(|m| sys.nonholonomic_vector_field(m))
        .collect::<Result<_>>()?;
    let momenta: Vec<Vector> = samples.iter().map(|m| sys.momenta(m)).collect::<Result<_>>()?;

    let m0 = opts.initial.clone().unwrap_or_else(|| samples[0].clone());
    let traj = integrate::integrate(sys, &m0, opts.t_final, &opts.integrator)?;

    let mut reports = Vec::with_capacity(k);
    for eta in etas {
        let mut section_samples = Vec::with_capacity(samples.len());
        let mut residual: f64 = 0.0;
        for (i, m) in samples.iter().enumerate() {
            let sp = &splittings[i];
            let xi = sp.project_g_s(&eta)?;
            let w = CTangent {
                qdot: sp.generators() * &xi,
                vdot: Vector::zeros(sys.rank()),
            };
            let val = jk_pairing_with(sys, sp, m, &nh[i], &w)?;
            let norm = 1.0 + momenta[i].norm() * nh[i].norm();
            residual = residual.max(val.abs() / norm);
            section_samples.push((m.q.clone(), xi));
        }
        let values = traj
            .states
            .iter()
            .map(|m| gauge_momentum(sys, act, &eta, m))
            .collect::<Result<Vec<_>>>()?;
        let drift = integrate::drift(&values);
        let drift_ok = drift <= opts.drift_tol;
        let verdict = if vertical && residual <= opts.residual_tol && drift_ok {
            Verdict::Certified
        } else if drift_ok {
            Verdict::EmpiricalOnly
        } else {
            Verdict::ResidualFailed
        };
        reports.push(GaugeMomentumReport {
            eta,
            section_samples,
            jk_residual_max: residual,
            drift,
            verdict,
        });
    }
    Ok(GaugeAnalysis {
        rank_s: k,
        vertical_symmetry: vertical,
        vertical_symmetry_defect: defect,
        reports,
    })
}
