//! Vector- and matrix-valued fields on a coordinate chart, built from
//! compiled expressions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{CompiledExpr, Expression};
use crate::geom::{Matrix, Vector};

/// A map `q -> R^m` given componentwise by expressions in the chart
/// coordinates.
#[derive(Debug, Clone)]
pub struct FieldExpr {
    components: Vec<CompiledExpr>,
}

impl FieldExpr {
    pub fn compile<S: AsRef<str>>(exprs: &[Expression], coords: &[S]) -> Result<Self> {
        let components = exprs
            .iter()
            .map(|e| e.compile(coords))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldExpr { components })
    }

    /// Parse and compile a list of source strings.
    pub fn parse<S: AsRef<str>>(sources: &[S], coords: &[S]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| Expression::parse(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::compile(&exprs, coords)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval(&self, q: &Vector) -> Result<Vector> {
        let x = q.as_slice();
        let mut out = Vector::zeros(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            out[i] = c.eval(x)?;
        }
        Ok(out)
    }

    /// Componentwise partial derivative with respect to coordinate `k`.
    pub fn partial(&self, q: &Vector, k: usize) -> Result<Vector> {
        let x = q.as_slice();
        let mut out = Vector::zeros(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            out[i] = c.partial(x, k)?;
        }
        Ok(out)
    }

    pub fn jacobian(&self, q: &Vector) -> Result<Matrix> {
        let mut jac = Matrix::zeros(self.components.len(), q.len());
        for k in 0..q.len() {
            jac.set_column(k, &self.partial(q, k)?);
        }
        Ok(jac)
    }
}

/// A list of fields evaluated as the columns of a matrix (a frame).
#[derive(Debug, Clone)]
pub struct FrameExpr {
    dim: usize,
    fields: Vec<FieldExpr>,
}

impl FrameExpr {
    pub fn new(dim: usize, fields: Vec<FieldExpr>) -> Result<Self> {
        if let Some(f) = fields.iter().find(|f| f.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "field with {} components in a chart of dimension {dim}",
                f.len()
            )));
        }
        Ok(FrameExpr { dim, fields })
    }

    pub fn count(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, j: usize) -> &FieldExpr {
        &self.fields[j]
    }

    pub fn eval(&self, q: &Vector) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.dim, self.fields.len());
        for (j, f) in self.fields.iter().enumerate() {
            m.set_column(j, &f.eval(q)?);
        }
        Ok(m)
    }

    /// `∂/∂q_k` of the frame matrix.
    pub fn partial(&self, q: &Vector, k: usize) -> Result<Matrix> {
        let mut m = Matrix::zeros(self.dim, self.fields.len());
        for (j, f) in self.fields.iter().enumerate() {
            m.set_column(j, &f.partial(q, k)?);
        }
        Ok(m)
    }
}

/// Square matrix field (row-major expressions).
#[derive(Debug, Clone)]
pub struct MatrixExpr {
    dim: usize,
    entries: Vec<CompiledExpr>,
}

impl MatrixExpr {
    pub fn compile<S: AsRef<str>>(rows: &[Vec<Expression>], coords: &[S]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "matrix row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for e in row {
                entries.push(e.compile(coords)?);
            }
        }
        Ok(MatrixExpr { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, q: &Vector) -> Result<Matrix> {
        let x = q.as_slice();
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entries[i * self.dim + j].eval(x)?;
            }
        }
        Ok(m)
    }

    pub fn partial(&self, q: &Vector, k: usize) -> Result<Matrix> {
        let x = q.as_slice();
        let mut m = Matrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.entries[i * self.dim + j].partial(x, k)?;
            }
        }
        Ok(m)
    }

    /// True when no entry depends on coordinate `k`.
    pub fn independent_of(&self, k: usize) -> bool {
        self.entries.iter().all(|e| !e.depends_on(k))
    }
}

/// Parse a list of rows of source strings.
pub fn parse_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Vec<Vec<Expression>>> {
    rows.iter()
        .map(|row| row.iter().map(|s| Expression::parse(s.as_ref())).collect())
        .collect()
}

