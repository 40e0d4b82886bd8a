//! Matrix-valued functions of `x` built from expression entries.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{parse, EvalError, Expr, ParseError};
use crate::CMat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixFnError {
    #[error("entry ({row}, {col}): {source}")]
    Parse {
        row: usize,
        col: usize,
        #[source]
        source: ParseError,
    },
    #[error("entry ({row}, {col}): {source}")]
    Eval {
        row: usize,
        col: usize,
        #[source]
        source: EvalError,
    },
    #[error("matrix is singular at x = {x}")]
    Singular { x: f64 },
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Const(Complex64),
    Expr(Expr),
}

impl Entry {
    fn eval(&self, x: f64) -> Result<Complex64, EvalError> {
        match self {
            Entry::Const(c) => Ok(*c),
            Entry::Expr(e) => e.eval(x),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Entry::Const(c) if *c == Complex64::new(0.0, 0.0))
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Grid(Vec<Entry>),
    Inverse(Arc<MatrixFn>),
    Adjoint(Arc<MatrixFn>),
    Neg(Arc<MatrixFn>),
}

/// An `rows x cols` complex matrix whose entries depend on `x`.
///
/// Entries are stored row-major. Derived functions (inverse, adjoint,
/// negation) are evaluated pointwise from their operand.
#[derive(Debug, Clone)]
pub struct MatrixFn {
    rows: usize,
    cols: usize,
    kind: Kind,
}

impl MatrixFn {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Entry>) -> Result<Self, MatrixFnError> {
        if entries.len() != rows * cols {
            return Err(MatrixFnError::Shape {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        Ok(MatrixFn {
            rows,
            cols,
            kind: Kind::Grid(entries),
        })
    }

    /// Parses a row-major list of expression strings. Entries without `x`
    /// are folded to constants.
    pub fn parse_grid<S: AsRef<str>>(rows: usize, cols: usize, texts: &[S]) -> Result<Self, MatrixFnError> {
        if texts.len() != rows * cols {
            return Err(MatrixFnError::Shape {
                expected: rows * cols,
                got: texts.len(),
            });
        }
        let mut entries = Vec::with_capacity(texts.len());
        for (idx, text) in texts.iter().enumerate() {
            let (row, col) = (idx / cols, idx % cols);
            let expr = parse(text.as_ref()).map_err(|source| MatrixFnError::Parse { row, col, source })?;
            let entry = if expr.is_constant() {
                match expr.eval(0.0) {
                    Ok(c) => Entry::Const(c),
                    Err(source) => return Err(MatrixFnError::Eval { row, col, source }),
                }
            } else {
                Entry::Expr(expr)
            };
            entries.push(entry);
        }
        Self::from_entries(rows, cols, entries)
    }

    /// A scalar expression times the `m x m` identity.
    pub fn scalar_identity(m: usize, text: &str) -> Result<Self, MatrixFnError> {
        let mut texts = vec!["0".to_string(); m * m];
        for k in 0..m {
            texts[k * m + k] = text.to_string();
        }
        Self::parse_grid(m, m, &texts)
    }

    pub fn constant(value: &CMat) -> Self {
        let mut entries = Vec::with_capacity(value.len());
        for r in 0..value.nrows() {
            for c in 0..value.ncols() {
                entries.push(Entry::Const(value[(r, c)]));
            }
        }
        MatrixFn {
            rows: value.nrows(),
            cols: value.ncols(),
            kind: Kind::Grid(entries),
        }
    }

    pub fn zeros(m: usize) -> Self {
        Self::constant(&CMat::zeros(m, m))
    }

    pub fn identity(m: usize) -> Self {
        Self::constant(&CMat::identity(m, m))
    }

    pub fn inverse(&self) -> Self {
        MatrixFn {
            rows: self.cols,
            cols: self.rows,
            kind: Kind::Inverse(Arc::new(self.clone())),
        }
    }

    pub fn adjoint(&self) -> Self {
        MatrixFn {
            rows: self.cols,
            cols: self.rows,
            kind: Kind::Adjoint(Arc::new(self.clone())),
        }
    }

    pub fn neg(&self) -> Self {
        MatrixFn {
            rows: self.rows,
            cols: self.cols,
            kind: Kind::Neg(Arc::new(self.clone())),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Structurally zero: every entry is the constant 0.
    pub fn is_zero(&self) -> bool {
        match &self.kind {
            Kind::Grid(entries) => entries.iter().all(Entry::is_zero),
            Kind::Adjoint(inner) | Kind::Neg(inner) => inner.is_zero(),
            Kind::Inverse(_) => false,
        }
    }

    /// No entry depends on `x`.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            Kind::Grid(entries) => entries.iter().all(|e| matches!(e, Entry::Const(_))),
            Kind::Inverse(inner) | Kind::Adjoint(inner) | Kind::Neg(inner) => inner.is_constant(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<CMat, MatrixFnError> {
        match &self.kind {
            Kind::Grid(entries) => {
                let mut out = DMatrix::zeros(self.rows, self.cols);
                for (idx, entry) in entries.iter().enumerate() {
                    let (row, col) = (idx / self.cols, idx % self.cols);
                    out[(row, col)] = entry
                        .eval(x)
                        .map_err(|source| MatrixFnError::Eval { row, col, source })?;
                }
                Ok(out)
            }
            Kind::Inverse(inner) => inner
                .eval(x)?
                .try_inverse()
                .filter(|m| m.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
                .ok_or(MatrixFnError::Singular { x }),
            Kind::Adjoint(inner) => Ok(inner.eval(x)?.adjoint()),
            Kind::Neg(inner) => Ok(-inner.eval(x)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_evaluates_row_major() {
        let f = MatrixFn::parse_grid(2, 2, &["1", "x", "x^2", "i"]).unwrap();
        let v = f.eval(2.0).unwrap();
        assert_eq!(v[(0, 1)], c(2.0));
        assert_eq!(v[(1, 0)], c(4.0));
        assert_eq!(v[(1, 1)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn derived_functions() {
        let f = MatrixFn::parse_grid(2, 2, &["2", "i", "0", "1+x"]).unwrap();
        let x = 0.5;
        let base = f.eval(x).unwrap();
        let inv = f.inverse().eval(x).unwrap();
        assert!((base.clone() * inv - CMat::identity(2, 2)).norm() < 1e-15);
        assert_eq!(f.adjoint().eval(x).unwrap(), base.adjoint());
        assert_eq!(f.neg().eval(x).unwrap(), -base);
    }

    #[test]
    fn singular_inverse_reports_location() {
        let f = MatrixFn::parse_grid(1, 1, &["x - 1"]).unwrap();
        assert_eq!(f.inverse().eval(1.0), Err(MatrixFnError::Singular { x: 1.0 }));
    }

    #[test]
    fn evaluation_error_names_entry() {
        let f = MatrixFn::parse_grid(1, 2, &["1", "1/x"]).unwrap();
        match f.eval(0.0) {
            Err(MatrixFnError::Eval { row: 0, col: 1, source }) => assert_eq!(source.x, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_detection() {
        assert!(MatrixFn::zeros(3).is_zero());
        assert!(MatrixFn::parse_grid(1, 1, &["0*1"]).unwrap().is_zero());
        assert!(!MatrixFn::parse_grid(1, 1, &["0*x"]).unwrap().is_zero());
        assert!(MatrixFn::zeros(2).neg().is_zero());
    }

    #[test]
    fn shape_mismatch() {
        assert_eq!(
            MatrixFn::parse_grid(2, 2, &["1"]).unwrap_err(),
            MatrixFnError::Shape { expected: 4, got: 1 }
        );
    }
}
