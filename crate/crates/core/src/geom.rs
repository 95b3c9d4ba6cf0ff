//! Dense small-dimension linear algebra with explicit rank tolerances, and
//! finite-difference Jacobians / Lie brackets of vector fields on a chart.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fd;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default relative rank threshold (smallest kept singular value over the
/// largest one).
pub const DEFAULT_TOL: f64 = 1e-9;

/// Singular values of `m` (empty for degenerate shapes).
pub fn singular_values(m: &Matrix) -> Vector {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

pub fn rank(m: &Matrix, tol: f64) -> usize {
    let s = singular_values(m);
    let max = s.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > tol * max).count()
}

/// Ratio of extreme singular values; infinite for singular matrices.
pub fn condition_number(m: &Matrix) -> f64 {
    let s = singular_values(m);
    if s.is_empty() {
        return 1.0;
    }
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn orthonormal_span(m: &Matrix, tol: f64) -> Matrix {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Matrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let max = s.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Matrix::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > tol * max).collect();
    Matrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis of the null space of `m`, as columns.
pub fn null_space(m: &Matrix, tol: f64) -> Matrix {
    let cols = m.ncols();
    if cols == 0 {
        return Matrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return Matrix::identity(cols, cols);
    }
    // Pad to at least square so the SVD returns a complete right basis.
    let rows = m.nrows().max(cols);
    let mut padded = Matrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let s = &svd.singular_values;
    let max = s.iter().cloned().fold(0.0, f64::max);
    let null: Vec<usize> = (0..s.len())
        .filter(|&i| max == 0.0 || s[i] <= tol * max)
        .collect();
    Matrix::from_fn(cols, null.len(), |r, c| vt[(null[c], r)])
}

/// A finite list of linearly independent vectors in `R^ambient_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: Matrix,
    tol: f64,
}

impl SubspaceBasis {
    /// Keep the given vectors as the basis; fails if they are dependent at
    /// `tol` or have the wrong length.
    pub fn new(ambient_dim: usize, vectors: &[Vector], tol: f64) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != ambient_dim) {
            return Err(Error::InvalidInput(format!(
                "vector of length {} in ambient dimension {ambient_dim}",
                v.len()
            )));
        }
        let m = if vectors.is_empty() {
            Matrix::zeros(ambient_dim, 0)
        } else {
            Matrix::from_columns(vectors)
        };
        Self::from_matrix(m, tol)
    }

    pub fn from_matrix(vectors: Matrix, tol: f64) -> Result<Self> {
        let k = vectors.ncols();
        if k > vectors.nrows() || rank(&vectors, tol) != k {
            return Err(Error::InvalidInput(format!(
                "{k} vectors are not linearly independent at tolerance {tol:e}"
            )));
        }
        Ok(SubspaceBasis {
            ambient_dim: vectors.nrows(),
            vectors,
            tol,
        })
    }

    /// Orthonormal basis of the span of arbitrary (possibly dependent)
    /// vectors given as columns.
    pub fn span_of(m: &Matrix, tol: f64) -> Self {
        SubspaceBasis {
            ambient_dim: m.nrows(),
            vectors: orthonormal_span(m, tol),
            tol,
        }
    }

    pub fn empty(ambient_dim: usize, tol: f64) -> Self {
        SubspaceBasis {
            ambient_dim,
            vectors: Matrix::zeros(ambient_dim, 0),
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Basis vectors as the columns of a matrix.
    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.vectors.column(i).into_owned()
    }

    pub fn orthonormal(&self) -> Matrix {
        orthonormal_span(&self.vectors, self.tol)
    }

    /// Orthogonal projection of `v` onto the span.
    pub fn project(&self, v: &Vector) -> Vector {
        let q = self.orthonormal();
        &q * (q.transpose() * v)
    }

    /// Distance from `v` to the span, relative to `max(1, |v|)`.
    pub fn relative_distance(&self, v: &Vector) -> f64 {
        (v - self.project(v)).norm() / v.norm().max(1.0)
    }

    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        self.relative_distance(v) <= tol
    }
}

/// Span of the union `A + B`, orthonormalized.
pub fn subspace_sum(a: &SubspaceBasis, b: &SubspaceBasis) -> SubspaceBasis {
    assert_eq!(a.ambient_dim, b.ambient_dim, "ambient dimensions differ");
    let n = a.ambient_dim;
    let mut m = Matrix::zeros(n, a.dim() + b.dim());
    m.view_mut((0, 0), (n, a.dim())).copy_from(&a.vectors);
    m.view_mut((0, a.dim()), (n, b.dim())).copy_from(&b.vectors);
    SubspaceBasis::span_of(&m, a.tol.max(b.tol))
}

/// Orthonormal basis of `A ∩ B`.
///
/// Solves `A c = B d` through the null space of the stacked system
/// `[A | -B]` and maps the `c` part back through `A`.
pub fn subspace_intersection(a: &SubspaceBasis, b: &SubspaceBasis) -> SubspaceBasis {
    assert_eq!(a.ambient_dim, b.ambient_dim, "ambient dimensions differ");
    let n = a.ambient_dim;
    let tol = a.tol.max(b.tol);
    if a.dim() == 0 || b.dim() == 0 {
        return SubspaceBasis::empty(n, tol);
    }
    // Orthonormalize first so the stacked system is well scaled.
    let qa = a.orthonormal();
    let qb = b.orthonormal();
    let mut stacked = Matrix::zeros(n, qa.ncols() + qb.ncols());
    stacked.view_mut((0, 0), (n, qa.ncols())).copy_from(&qa);
    stacked
        .view_mut((0, qa.ncols()), (n, qb.ncols()))
        .copy_from(&(-&qb));
    let null = null_space(&stacked, tol);
    let coeffs = null.rows(0, qa.ncols()).into_owned();
    SubspaceBasis::span_of(&(&qa * coeffs), tol)
}

/// Largest sine of the principal angles between two subspaces; 1 when the
/// dimensions differ.
pub fn max_principal_sine(a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    if a.dim() != b.dim() {
        return 1.0;
    }
    if a.dim() == 0 {
        return 0.0;
    }
    let qa = a.orthonormal();
    let qb = b.orthonormal();
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    let residual = &qb - &qa * (qa.transpose() * &qb);
    singular_values(&residual).iter().cloned().fold(0.0, f64::max)
}

/// A pair of subspaces forming a direct sum, factorized once for repeated
/// decompositions.
#[derive(Debug, Clone)]
pub struct DirectSum {
    split: usize,
    stacked: Matrix,
    pinv: Matrix,
}

/// Relative residual above which a vector is declared outside `A ⊕ B`.
const SPAN_RESIDUAL_TOL: f64 = 1e-7;

impl DirectSum {
    pub fn new(a: &Matrix, b: &Matrix, tol: f64) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(Error::DirectSumViolation(format!(
                "ambient dimensions {} and {} differ",
                a.nrows(),
                b.nrows()
            )));
        }
        let n = a.nrows();
        let k = a.ncols() + b.ncols();
        if k > n {
            return Err(Error::DirectSumViolation(format!(
                "{k} vectors cannot be independent in dimension {n}"
            )));
        }
        let mut stacked = Matrix::zeros(n, k);
        stacked.view_mut((0, 0), (n, a.ncols())).copy_from(a);
        stacked.view_mut((0, a.ncols()), (n, b.ncols())).copy_from(b);
        if k == 0 {
            return Ok(DirectSum {
                split: 0,
                pinv: Matrix::zeros(0, n),
                stacked,
            });
        }
        let svd = stacked.clone().svd(true, true);
        let s = &svd.singular_values;
        let max = s.iter().cloned().fold(0.0, f64::max);
        let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
        if max == 0.0 || min <= tol * max {
            return Err(Error::DirectSumViolation(format!(
                "stacked basis is rank deficient (sigma_min / sigma_max = {:e})",
                if max == 0.0 { 0.0 } else { min / max }
            )));
        }
        let pinv = svd
            .pseudo_inverse(0.0)
            .map_err(|e| Error::DirectSumViolation(e.into()))?;
        Ok(DirectSum {
            split: a.ncols(),
            stacked,
            pinv,
        })
    }

    pub fn from_bases(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Self> {
        Self::new(a.matrix(), b.matrix(), a.tol.max(b.tol))
    }

    pub fn ambient_dim(&self) -> usize {
        self.stacked.nrows()
    }

    pub fn first(&self) -> Matrix {
        self.stacked.columns(0, self.split).into_owned()
    }

    pub fn second(&self) -> Matrix {
        self.stacked
            .columns(self.split, self.stacked.ncols() - self.split)
            .into_owned()
    }

    /// Coefficients `(ca, cb)` with `vec = A ca + B cb`.
    pub fn decompose(&self, vec: &Vector) -> Result<(Vector, Vector)> {
        if vec.len() != self.stacked.nrows() {
            return Err(Error::DirectSumViolation(format!(
                "vector of length {} in ambient dimension {}",
                vec.len(),
                self.stacked.nrows()
            )));
        }
        let coeffs = &self.pinv * vec;
        // One step of refinement keeps the reconstruction at round-off.
        let residual = vec - &self.stacked * &coeffs;
        let coeffs = coeffs + &self.pinv * &residual;
        let residual = (vec - &self.stacked * &coeffs).norm();
        if residual > SPAN_RESIDUAL_TOL * vec.norm() {
            return Err(Error::DirectSumViolation(format!(
                "vector lies outside A ⊕ B (residual {residual:e})"
            )));
        }
        let total = coeffs.len();
        Ok((
            coeffs.rows(0, self.split).into_owned(),
            coeffs.rows(self.split, total - self.split).into_owned(),
        ))
    }

    /// Component of `vec` in the first summand.
    pub fn project_first(&self, vec: &Vector) -> Result<Vector> {
        let (ca, _) = self.decompose(vec)?;
        Ok(self.stacked.columns(0, self.split) * ca)
    }

    /// Component of `vec` in the second summand.
    pub fn project_second(&self, vec: &Vector) -> Result<Vector> {
        let (_, cb) = self.decompose(vec)?;
        let k = self.stacked.ncols();
        Ok(self.stacked.columns(self.split, k - self.split) * cb)
    }
}

/// Coefficients of `vec` in the direct sum `A ⊕ B`.
pub fn decompose(vec: &Vector, a: &SubspaceBasis, b: &SubspaceBasis) -> Result<(Vector, Vector)> {
    DirectSum::from_bases(a, b)?.decompose(vec)
}

/// Central-difference Jacobian of `field` at `q`; entry `(i, j)` is
/// `∂field_i / ∂q_j`.
pub fn jacobian<F>(mut field: F, q: &Vector) -> Result<Matrix>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    let n = q.len();
    let mut jac: Option<Matrix> = None;
    let mut work = q.clone();
    for j in 0..n {
        let h = fd::step(q[j]);
        work[j] = q[j] + h;
        let plus = field(&work)?;
        let hp = work[j] - q[j];
        work[j] = q[j] - h;
        let minus = field(&work)?;
        let hm = q[j] - work[j];
        work[j] = q[j];
        if plus.len() != minus.len() {
            return Err(Error::InvalidInput("field changed output length".into()));
        }
        if plus.iter().chain(minus.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "field value at stencil point along coordinate {j}"
            )));
        }
        let jac = jac.get_or_insert_with(|| Matrix::zeros(plus.len(), n));
        let col = (plus - minus) / (hp + hm);
        jac.set_column(j, &col);
    }
    Ok(jac.unwrap_or_else(|| Matrix::zeros(0, 0)))
}

/// `[A, B](q) = JB(q) A(q) - JA(q) B(q)`.
pub fn lie_bracket<A, B>(mut a: A, mut b: B, q: &Vector) -> Result<Vector>
where
    A: FnMut(&Vector) -> Result<Vector>,
    B: FnMut(&Vector) -> Result<Vector>,
{
    let a_at = a(q)?;
    let b_at = b(q)?;
    let ja = jacobian(&mut a, q)?;
    let jb = jacobian(&mut b, q)?;
    Ok(jb * a_at - ja * b_at)
}
