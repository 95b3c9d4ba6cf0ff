//! Mechanical systems with linear constraints, parametrized by
//! quasi-velocities.
//!
//! A point of the constraint manifold is `(q, v)` with momenta
//! `p = κ(q) X(q) v`, where the columns of `X` span the constraint
//! distribution `D`. Tangent vectors whose base part lies in `D` are spanned
//! by the C-basis; the restricted canonical two-form on that basis is a dense
//! `2r × 2r` matrix, and every Hamiltonian-type vector field is found by one
//! linear solve against it.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::expr::CompiledExpr;
use crate::fd;
use crate::field::{FrameExpr, MatrixExpr};
use crate::geom::{self, DirectSum, Matrix, Vector};

/// Condition number above which the restricted two-form is rejected.
pub const MAX_FORM_CONDITION: f64 = 1e12;

/// A point of the constraint manifold in `(q, v)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MPoint {
    pub q: Vector,
    pub v: Vector,
}

impl MPoint {
    pub fn new(q: Vector, v: Vector) -> Self {
        MPoint { q, v }
    }

    pub fn from_slices(q: &[f64], v: &[f64]) -> Self {
        MPoint {
            q: Vector::from_column_slice(q),
            v: Vector::from_column_slice(v),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// A tangent vector to the constraint manifold whose base part lies in `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CTangent {
    pub qdot: Vector,
    pub vdot: Vector,
}

impl CTangent {
    pub fn zeros(n: usize, r: usize) -> Self {
        CTangent {
            qdot: Vector::zeros(n),
            vdot: Vector::zeros(r),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.qdot.norm_squared() + self.vdot.norm_squared()).sqrt()
    }

    pub fn scaled(&self, a: f64) -> CTangent {
        CTangent {
            qdot: &self.qdot * a,
            vdot: &self.vdot * a,
        }
    }

    pub fn add(&self, other: &CTangent) -> CTangent {
        CTangent {
            qdot: &self.qdot + &other.qdot,
            vdot: &self.vdot + &other.vdot,
        }
    }

    pub fn sub(&self, other: &CTangent) -> CTangent {
        CTangent {
            qdot: &self.qdot - &other.qdot,
            vdot: &self.vdot - &other.vdot,
        }
    }
}

/// Differential of a function on `M` in `(q, v)` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Differential {
    pub dq: Vector,
    pub dv: Vector,
}

impl Differential {
    /// Directional derivative along a tangent vector.
    pub fn apply(&self, t: &CTangent) -> f64 {
        self.dq.dot(&t.qdot) + self.dv.dot(&t.vdot)
    }
}

/// A smooth function on the constraint manifold.
pub trait Observable {
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64>;

    /// Default: central differences in every `q` and `v` coordinate.
    fn differential(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<Differential> {
        let mut dq = Vector::zeros(m.q.len());
        let mut dv = Vector::zeros(m.v.len());
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
        for j in 0..m.v.len() {
            let x = m.v[j];
            dv[j] = fd::central_derivative(
                |t| {
                    probe.v[j] = t;
                    self.value(sys, &probe)
                },
                x,
            )?;
            probe.v[j] = x;
        }
        Ok(Differential { dq, dv })
    }
}

impl<F> Observable for F
where
    F: Fn(&MechanicalSystem, &MPoint) -> Result<f64>,
{
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        self(sys, m)
    }
}

/// The restricted Hamiltonian `H_M`, with an analytic differential assembled
/// from entrywise partials of `κ`, `X` and `U`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Energy;

impl Observable for Energy {
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        sys.hamiltonian(m)
    }

    fn differential(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<Differential> {
        let local = sys.local(&m.q)?;
        Ok(local.energy_differential(&m.v))
    }
}

/// Coordinate function `q_k`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn value(&self, _sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        Ok(m.q[self.0])
    }

    fn differential(&self, _sys: &MechanicalSystem, m: &MPoint) -> Result<Differential> {
        let mut dq = Vector::zeros(m.q.len());
        dq[self.0] = 1.0;
        Ok(Differential { dq, dv: Vector::zeros(m.v.len()) })
    }
}

/// Quasi-velocity `v_j`.
#[derive(Debug, Clone, Copy)]
pub struct QuasiVelocity(pub usize);

impl Observable for QuasiVelocity {
    fn value(&self, _sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        Ok(m.v[self.0])
    }

    fn differential(&self, _sys: &MechanicalSystem, m: &MPoint) -> Result<Differential> {
        let mut dv = Vector::zeros(m.v.len());
        dv[self.0] = 1.0;
        Ok(Differential { dq: Vector::zeros(m.q.len()), dv })
    }
}

/// Canonical momentum `p_k`.
#[derive(Debug, Clone, Copy)]
pub struct Momentum(pub usize);

impl Observable for Momentum {
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        Ok(sys.momenta(m)?[self.0])
    }
}

/// Everything about the system at one configuration that the dynamics needs.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub q: Vector,
    pub metric: Matrix,
    pub frame: Matrix,
    pub dmetric: Vec<Matrix>,
    pub dframe: Vec<Matrix>,
    pub dpotential: Vector,
}

impl LocalGeometry {
    pub fn momenta(&self, v: &Vector) -> Vector {
        &self.metric * (&self.frame * v)
    }

    /// Column `k` is `∂p/∂q_k` at fixed `v`.
    pub fn momentum_jacobian(&self, v: &Vector) -> Matrix {
        let n = self.q.len();
        let xv = &self.frame * v;
        let mut jac = Matrix::zeros(n, n);
        for k in 0..n {
            let col = &self.dmetric[k] * &xv + &self.metric * (&self.dframe[k] * v);
            jac.set_column(k, &col);
        }
        jac
    }

    pub fn energy_differential(&self, v: &Vector) -> Differential {
        let n = self.q.len();
        let xv = &self.frame * v;
        let p = &self.metric * &xv;
        let mut dq = self.dpotential.clone();
        for k in 0..n {
            let dx = &self.dframe[k] * v;
            let dk = &self.dmetric[k] * &xv;
            dq[k] += p.dot(&dx) + 0.5 * xv.dot(&dk);
        }
        let dv = self.frame.transpose() * p;
        Differential { dq, dv }
    }

    pub fn c_basis(&self, v: &Vector) -> CBasis {
        let r = self.frame.ncols();
        let n = self.q.len();
        let pq = self.momentum_jacobian(v);
        let kx = &self.metric * &self.frame;
        let mut base = Vec::with_capacity(2 * r);
        let mut fiber = Vec::with_capacity(2 * r);
        for j in 0..r {
            let xj = self.frame.column(j).into_owned();
            fiber.push(&pq * &xj);
            base.push(xj);
        }
        for j in 0..r {
            base.push(Vector::zeros(n));
            fiber.push(kx.column(j).into_owned());
        }
        CBasis { base, fiber }
    }
}

/// The `2r` tangent vectors to `M ⊂ T*Q` spanning `C`, in canonical
/// `(δq, δp)` components.
#[derive(Debug, Clone)]
pub struct CBasis {
    pub base: Vec<Vector>,
    pub fiber: Vec<Vector>,
}

impl CBasis {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Gram matrix of the canonical form `Ω((a,α),(b,β)) = a·β − b·α`.
    pub fn two_form(&self) -> Matrix {
        let k = self.len();
        let mut a = Matrix::zeros(k, k);
        for i in 0..k {
            for j in (i + 1)..k {
                let w = self.base[i].dot(&self.fiber[j]) - self.base[j].dot(&self.fiber[i]);
                a[(i, j)] = w;
                a[(j, i)] = -w;
            }
        }
        a
    }
}

/// Output of a Hamiltonian-field solve.
#[derive(Debug, Clone)]
pub struct HamSolution {
    pub field: CTangent,
    /// Relative residual of the linear solve.
    pub residual: f64,
    pub condition: f64,
}

/// Solve `i_X Ω = df` on the C-basis. In matrix form `Aᵀ w = b`, with
/// `w = (w¹, w²)` the C-basis coefficients of `X`.
pub fn solve_two_form(form: &Matrix, rhs: &Vector) -> Result<(Vector, f64, f64)> {
    let condition = geom::condition_number(form);
    if !(condition <= MAX_FORM_CONDITION) {
        return Err(Error::DegenerateForm { condition });
    }
    let at = form.transpose();
    let w = at
        .clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::DegenerateForm { condition })?;
    let scale = at.norm() * w.norm() + rhs.norm();
    let residual = if scale == 0.0 {
        0.0
    } else {
        (&at * &w - rhs).norm() / scale
    };
    Ok((w, residual, condition))
}

/// A mechanical system with linear constraints on a single chart.
#[derive(Debug, Clone)]
pub struct MechanicalSystem {
    name: String,
    coords: Vec<String>,
    metric: MatrixExpr,
    potential: CompiledExpr,
    d_basis: FrameExpr,
    w_basis: FrameExpr,
    tol: f64,
}

impl MechanicalSystem {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        metric: MatrixExpr,
        potential: CompiledExpr,
        d_basis: FrameExpr,
        w_basis: FrameExpr,
        tol: f64,
    ) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::InvalidInput("no coordinates".into()));
        }
        if metric.dim() != n {
            return Err(Error::InvalidInput(format!(
                "metric is {0}x{0} but there are {n} coordinates",
                metric.dim()
            )));
        }
        let r = d_basis.count();
        if r == 0 || r > n {
            return Err(Error::InvalidInput(format!(
                "distribution needs between 1 and {n} fields, got {r}"
            )));
        }
        if w_basis.count() != n - r {
            return Err(Error::InvalidInput(format!(
                "vertical complement needs {} fields, got {}",
                n - r,
                w_basis.count()
            )));
        }
        Ok(MechanicalSystem {
            name: name.into(),
            coords,
            metric,
            potential,
            d_basis,
            w_basis,
            tol,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Rank of the constraint distribution.
    pub fn rank(&self) -> usize {
        self.d_basis.count()
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coords
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn metric(&self, q: &Vector) -> Result<Matrix> {
        self.metric.eval(q)
    }

    pub fn potential(&self, q: &Vector) -> Result<f64> {
        self.potential.eval(q.as_slice())
    }

    /// `n × r` matrix whose columns span `D_q`.
    pub fn frame(&self, q: &Vector) -> Result<Matrix> {
        self.d_basis.eval(q)
    }

    /// `n × (n−r)` matrix whose columns span `W_q`.
    pub fn complement(&self, q: &Vector) -> Result<Matrix> {
        self.w_basis.eval(q)
    }

    pub fn d_basis(&self) -> &FrameExpr {
        &self.d_basis
    }

    /// The splitting `T_qQ = D_q ⊕ W_q`.
    pub fn splitting(&self, q: &Vector) -> Result<DirectSum> {
        DirectSum::new(&self.frame(q)?, &self.complement(q)?, self.tol)
    }

    /// `P_D` applied to a tangent vector at `q`.
    pub fn project_d(&self, q: &Vector, t: &Vector) -> Result<Vector> {
        self.splitting(q)?.project_first(t)
    }

    pub fn local(&self, q: &Vector) -> Result<LocalGeometry> {
        let n = self.dim();
        if q.len() != n {
            return Err(Error::InvalidInput(format!(
                "configuration has {} entries, expected {n}",
                q.len()
            )));
        }
        let mut dmetric = Vec::with_capacity(n);
        let mut dframe = Vec::with_capacity(n);
        for k in 0..n {
            dmetric.push(if self.metric.independent_of(k) {
                Matrix::zeros(n, n)
            } else {
                self.metric.partial(q, k)?
            });
            dframe.push(self.d_basis.partial(q, k)?);
        }
        let dpotential = Vector::from_vec(self.potential.gradient(q.as_slice())?);
        Ok(LocalGeometry {
            q: q.clone(),
            metric: self.metric.eval(q)?,
            frame: self.d_basis.eval(q)?,
            dmetric,
            dframe,
            dpotential,
        })
    }

    fn check_point(&self, m: &MPoint) -> Result<()> {
        if m.q.len() != self.dim() || m.v.len() != self.rank() {
            return Err(Error::InvalidInput(format!(
                "state has {} coordinates and {} velocities, expected {} and {}",
                m.q.len(),
                m.v.len(),
                self.dim(),
                self.rank()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("state".into()));
        }
        Ok(())
    }

    /// Check the structural invariants at one configuration: symmetric
    /// positive definite metric, independent `D` frame, `D ⊕ W = R^n`.
    pub fn validate_at(&self, q: &Vector) -> Result<()> {
        let k = self.metric(q)?;
        let asym = (&k - k.transpose()).amax();
        if asym > 1e-12 * (1.0 + k.amax()) {
            return Err(Error::InvalidInput(format!(
                "metric is not symmetric at {:?}",
                q.as_slice()
            )));
        }
        let min_eig = k.clone().symmetric_eigenvalues().min();
        if !(min_eig > 0.0) {
            return Err(Error::InvalidInput(format!(
                "metric is not positive definite at {:?} (min eigenvalue {min_eig:e})",
                q.as_slice()
            )));
        }
        let x = self.frame(q)?;
        if geom::rank(&x, self.tol) != self.rank() {
            return Err(Error::InvalidInput(format!(
                "distribution frame is degenerate at {:?}",
                q.as_slice()
            )));
        }
        self.splitting(q).map(|_| ())
    }

    pub fn momenta(&self, m: &MPoint) -> Result<Vector> {
        self.check_point(m)?;
        Ok(self.metric(&m.q)? * (self.frame(&m.q)? * &m.v))
    }

    pub fn hamiltonian(&self, m: &MPoint) -> Result<f64> {
        self.check_point(m)?;
        let k = self.metric(&m.q)?;
        let xv = self.frame(&m.q)? * &m.v;
        Ok(0.5 * xv.dot(&(k * &xv)) + self.potential(&m.q)?)
    }

    pub fn c_basis(&self, m: &MPoint) -> Result<CBasis> {
        self.check_point(m)?;
        Ok(self.local(&m.q)?.c_basis(&m.v))
    }

    /// Matrix of the canonical two-form restricted to `C`, in the C-basis.
    pub fn constrained_two_form(&self, m: &MPoint) -> Result<Matrix> {
        let a = self.c_basis(m)?.two_form();
        let condition = geom::condition_number(&a);
        if !(condition <= MAX_FORM_CONDITION) {
            return Err(Error::DegenerateForm { condition });
        }
        Ok(a)
    }

    /// Hamiltonian vector field of a function with known differential.
    pub fn solve_ham_field(&self, m: &MPoint, df: &Differential) -> Result<HamSolution> {
        self.check_point(m)?;
        let local = self.local(&m.q)?;
        self.solve_with(&local, m, df)
    }

    fn solve_with(&self, local: &LocalGeometry, m: &MPoint, df: &Differential) -> Result<HamSolution> {
        let r = self.rank();
        let form = local.c_basis(&m.v).two_form();
        let x = &local.frame;
        let mut b = Vector::zeros(2 * r);
        let bq = x.transpose() * &df.dq;
        for j in 0..r {
            b[j] = bq[j];
            b[r + j] = df.dv[j];
        }
        let (w, residual, condition) = solve_two_form(&form, &b)?;
        let w1 = w.rows(0, r).into_owned();
        let field = CTangent {
            qdot: x * w1,
            vdot: w.rows(r, r).into_owned(),
        };
        if !field.qdot.iter().chain(field.vdot.iter()).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("Hamiltonian vector field".into()));
        }
        Ok(HamSolution { field, residual, condition })
    }

    /// Nonholonomic Hamiltonian vector field `X_f` of an observable.
    pub fn ham_vector_field(&self, m: &MPoint, f: &dyn Observable) -> Result<CTangent> {
        let df = f.differential(self, m)?;
        Ok(self.solve_ham_field(m, &df)?.field)
    }

    /// The equations of motion: `X_nh = X_{H_M}`.
    pub fn nonholonomic_vector_field(&self, m: &MPoint) -> Result<CTangent> {
        Ok(self.nonholonomic_solution(m)?.field)
    }

    pub fn nonholonomic_solution(&self, m: &MPoint) -> Result<HamSolution> {
        self.check_point(m)?;
        let local = self.local(&m.q)?;
        let dh = local.energy_differential(&m.v);
        self.solve_with(&local, m, &dh)
    }

    /// `{f, g}_nh = −X_f(g)`.
    pub fn nh_bracket(&self, m: &MPoint, f: &dyn Observable, g: &dyn Observable) -> Result<f64> {
        let xf = self.ham_vector_field(m, f)?;
        let dg = g.differential(self, m)?;
        Ok(-dg.apply(&xf))
    }

    /// `π♯_nh(df) = −X_f`.
    pub fn pi_sharp(&self, m: &MPoint, f: &dyn Observable) -> Result<CTangent> {
        Ok(self.ham_vector_field(m, f)?.scaled(-1.0))
    }

    /// Relative distance of `qdot` from `D_q`.
    pub fn tangency_defect(&self, q: &Vector, t: &CTangent) -> Result<f64> {
        let basis = geom::SubspaceBasis::span_of(&self.frame(q)?, self.tol);
        Ok(basis.relative_distance(&t.qdot))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::field::{parse_rows, FieldExpr};
    use alloc::string::ToString;
    use alloc::vec;

    fn frame(rows: &[&[&str]], coords: &[&str]) -> FrameExpr {
        let fields = rows
            .iter()
            .map(|r| FieldExpr::parse(r, coords).unwrap())
            .collect();
        FrameExpr::new(coords.len(), fields).unwrap()
    }

    fn system(
        coords: &[&str],
        metric: &[&[&str]],
        d: &[&[&str]],
        w: &[&[&str]],
    ) -> MechanicalSystem {
        let rows: Vec<Vec<&str>> = metric.iter().map(|r| r.to_vec()).collect();
        let metric = MatrixExpr::compile(&parse_rows(&rows).unwrap(), coords).unwrap();
        let potential = Expression::parse("0").unwrap().compile(coords).unwrap();
        MechanicalSystem::new(
            "test",
            coords.iter().map(|s| s.to_string()).collect(),
            metric,
            potential,
            frame(d, coords),
            frame(w, coords),
            geom::DEFAULT_TOL,
        )
        .unwrap()
    }

    fn particle() -> MechanicalSystem {
        system(
            &["x", "y", "z"],
            &[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]],
            &[&["0", "1", "0"], &["1", "0", "y"]],
            &[&["0", "0", "1"]],
        )
    }

    fn disk() -> MechanicalSystem {
        system(
            &["x", "y", "phi", "psi"],
            &[
                &["1", "0", "0", "0"],
                &["0", "1", "0", "0"],
                &["0", "0", "1", "0"],
                &["0", "0", "0", "1"],
            ],
            &[&["cos(psi)", "sin(psi)", "1", "0"], &["0", "0", "0", "1"]],
            &[&["1", "0", "0", "0"], &["0", "1", "0", "0"]],
        )
    }

    fn close(a: &Vector, b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn particle_momenta() {
        let sys = particle();
        let m = MPoint::from_slices(&[0.0, 1.0, 0.0], &[1.0, 1.0]);
        assert!(close(&sys.momenta(&m).unwrap(), &[1.0, 1.0, 1.0], 1e-15));
        let m0 = MPoint::from_slices(&[0.0, 1.0, 0.0], &[0.0, 0.0]);
        assert!(close(&sys.momenta(&m0).unwrap(), &[0.0; 3], 0.0));
    }

    #[test]
    fn disk_momenta_and_energy() {
        let sys = disk();
        let psi = 0.4;
        let m = MPoint::from_slices(&[0.0, 0.0, 0.0, psi], &[2.0, 3.0]);
        let p = sys.momenta(&m).unwrap();
        assert!(close(&p, &[2.0 * psi.cos(), 2.0 * psi.sin(), 2.0, 3.0], 1e-15));
        assert!((sys.hamiltonian(&m).unwrap() - 8.5).abs() < 1e-14);
    }

    #[test]
    fn particle_energy() {
        let sys = particle();
        let m = MPoint::from_slices(&[0.0, 1.0, 0.0], &[1.0, 1.0]);
        assert!((sys.hamiltonian(&m).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn particle_c_basis_at_origin() {
        let sys = particle();
        let (v1, v2) = (0.7, -1.3);
        let c = sys.c_basis(&MPoint::from_slices(&[0.0; 3], &[v1, v2])).unwrap();
        assert_eq!(c.len(), 4);
        assert!(close(&c.base[0], &[0.0, 1.0, 0.0], 0.0));
        assert!(close(&c.fiber[0], &[0.0, 0.0, v2], 1e-9));
        assert!(close(&c.base[1], &[1.0, 0.0, 0.0], 0.0));
        assert!(close(&c.fiber[1], &[0.0; 3], 1e-12));
        assert!(close(&c.base[2], &[0.0; 3], 0.0));
        assert!(close(&c.fiber[2], &[0.0, 1.0, 0.0], 0.0));
        assert!(close(&c.fiber[3], &[1.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn particle_two_form_at_origin() {
        let sys = particle();
        let a = sys
            .constrained_two_form(&MPoint::from_slices(&[0.0; 3], &[0.3, 0.8]))
            .unwrap();
        let expected = Matrix::from_row_slice(
            4,
            4,
            &[
                0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0,
            ],
        );
        assert!((a - expected).amax() < 1e-9);
    }

    #[test]
    fn unconstrained_two_form_is_canonical() {
        let sys = system(
            &["a", "b"],
            &[&["1", "0"], &["0", "1"]],
            &[&["1", "0"], &["0", "1"]],
            &[],
        );
        let a = sys
            .constrained_two_form(&MPoint::from_slices(&[0.2, -0.1], &[1.0, 2.0]))
            .unwrap();
        let mut j = Matrix::zeros(4, 4);
        for i in 0..2 {
            j[(i, i + 2)] = 1.0;
            j[(i + 2, i)] = -1.0;
        }
        assert!((a - j).amax() < 1e-12);
    }

    #[test]
    fn hamiltonian_field_of_coordinate() {
        // With i_X Ω = df, the field of y is −∂/∂v1, so {y, v1} = +1.
        let sys = particle();
        let m = MPoint::from_slices(&[0.0; 3], &[0.5, -0.25]);
        let xy = sys.ham_vector_field(&m, &Coordinate(1)).unwrap();
        assert!(close(&xy.qdot, &[0.0; 3], 1e-12));
        assert!(close(&xy.vdot, &[-1.0, 0.0], 1e-12));
        let br = sys.nh_bracket(&m, &Coordinate(1), &QuasiVelocity(0)).unwrap();
        assert!((br - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function_has_zero_field() {
        let sys = particle();
        let m = MPoint::from_slices(&[0.1, 0.4, -0.3], &[0.5, 0.2]);
        let c = |_: &MechanicalSystem, _: &MPoint| Ok(3.0);
        let x = sys.ham_vector_field(&m, &c).unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn particle_dynamics() {
        let sys = particle();
        let m = MPoint::from_slices(&[0.0, 1.0, 0.0], &[1.0, 1.0]);
        let sol = sys.nonholonomic_solution(&m).unwrap();
        assert!(sol.residual <= 1e-10);
        assert!(close(&sol.field.qdot, &[1.0, 1.0, 1.0], 1e-9));
        assert!(close(&sol.field.vdot, &[0.0, -0.5], 1e-9));
        let via_fd = sys
            .ham_vector_field(&m, &|s: &MechanicalSystem, m: &MPoint| s.hamiltonian(m))
            .unwrap();
        assert!(via_fd.sub(&sol.field).norm() < 1e-8);
    }

    #[test]
    fn disk_dynamics_is_uniform() {
        let sys = disk();
        for (psi, a, b) in [(0.0, 2.0, 3.0), (1.1, -0.4, 0.9), (2.5, 1.0, 0.0)] {
            let m = MPoint::from_slices(&[0.3, -0.2, 0.1, psi], &[a, b]);
            let x = sys.nonholonomic_vector_field(&m).unwrap();
            assert!(x.vdot.amax() < 1e-9, "{:?}", x.vdot);
            assert!(sys.tangency_defect(&m.q, &x).unwrap() < 1e-9);
        }
    }

    #[test]
    fn rest_is_equilibrium() {
        let sys = particle();
        let x = sys
            .nonholonomic_vector_field(&MPoint::from_slices(&[0.2, 0.3, 0.4], &[0.0, 0.0]))
            .unwrap();
        assert_eq!(x.norm(), 0.0);
    }

    #[test]
    fn particle_first_integral_brackets() {
        let sys = particle();
        let f = |s: &MechanicalSystem, m: &MPoint| {
            let p = s.momenta(m)?;
            Ok(p[0] * (1.0 + m.q[1] * m.q[1]).sqrt())
        };
        let m = MPoint::from_slices(&[0.3, 0.8, -0.2], &[0.6, -1.1]);
        assert!(sys.nh_bracket(&m, &f, &Energy).unwrap().abs() < 1e-7);
        assert!(sys.nh_bracket(&m, &f, &f).unwrap().abs() < 1e-7);
    }

    #[test]
    fn wrong_state_shape_is_rejected() {
        let sys = particle();
        let m = MPoint::from_slices(&[0.0; 3], &[1.0]);
        assert!(matches!(sys.momenta(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn shape_validation() {
        let coords = ["x", "y"];
        let metric =
            MatrixExpr::compile(&parse_rows(&[vec!["1", "0"], vec!["0", "1"]]).unwrap(), &coords)
                .unwrap();
        let potential = Expression::parse("0").unwrap().compile(&coords).unwrap();
        let res = MechanicalSystem::new(
            "bad",
            coords.iter().map(|s| s.to_string()).collect(),
            metric,
            potential,
            frame(&[&["1", "0"]], &coords),
            frame(&[], &coords),
            1e-9,
        );
        assert!(matches!(res, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn validation_rejects_indefinite_metric() {
        let sys = system(
            &["x", "y"],
            &[&["1", "0"], &["0", "x"]],
            &[&["1", "0"], &["0", "1"]],
            &[],
        );
        assert!(sys.validate_at(&Vector::from_vec(vec![1.0, 0.0])).is_ok());
        assert!(sys.validate_at(&Vector::from_vec(vec![-1.0, 0.0])).is_err());
    }
}
