//! Lagrange brackets `[F, G]_Z` of solutions, evaluated from stored traces.
//!
//! A solution with `c` columns is represented by its `2MN x c` trace matrix
//! at each grid point; block row `j` holds the quasi-derivative `F^[j]`.
//! Scalar solutions are the case `c = 1`.

use num_complex::Complex64;
use thiserror::Error;

use crate::odeint::{FundamentalMatrix, IntegrationError};
use crate::CMat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BracketError {
    #[error("trace shapes differ: {0}")]
    Dimension(String),
    #[error("operand grids differ")]
    GridMismatch,
    #[error("x = {x} is not a grid point")]
    OffGrid { x: f64 },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

/// Traces of a (matrix-valued) solution on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTraces {
    block_size: usize,
    half_order: usize,
    grid: Vec<f64>,
    traces: Vec<CMat>,
}

impl SolutionTraces {
    pub fn new(block_size: usize, half_order: usize, grid: Vec<f64>, traces: Vec<CMat>) -> Result<Self, BracketError> {
        let dim = 2 * block_size * half_order;
        if grid.len() != traces.len() || grid.is_empty() {
            return Err(BracketError::Dimension(format!(
                "{} grid points but {} trace matrices",
                grid.len(),
                traces.len()
            )));
        }
        let cols = traces[0].ncols();
        if let Some(bad) = traces.iter().find(|t| t.nrows() != dim || t.ncols() != cols) {
            return Err(BracketError::Dimension(format!(
                "trace matrix is {}x{}, expected {dim}x{cols}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        Ok(SolutionTraces {
            block_size,
            half_order,
            grid,
            traces,
        })
    }

    /// The solution with initial traces `initial` (`2MN x c`), on the integrator's nodes.
    pub fn from_fundamental(
        fm: &FundamentalMatrix,
        block_size: usize,
        half_order: usize,
        initial: &CMat,
    ) -> Result<Self, BracketError> {
        let traces = fm.values().iter().map(|psi| psi * initial).collect();
        Self::new(block_size, half_order, fm.nodes().to_vec(), traces)
    }

    /// Same solution sampled at arbitrary points through dense output.
    pub fn sample(
        fm: &FundamentalMatrix,
        block_size: usize,
        half_order: usize,
        initial: &CMat,
        xs: &[f64],
    ) -> Result<Self, BracketError> {
        let traces = xs
            .iter()
            .map(|&x| fm.at(x).map(|psi| psi * initial))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(block_size, half_order, xs.to_vec(), traces)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn traces(&self) -> &[CMat] {
        &self.traces
    }

    pub fn columns(&self) -> usize {
        self.traces[0].ncols()
    }

    /// Column `k` as a scalar solution.
    pub fn column(&self, k: usize) -> SolutionTraces {
        SolutionTraces {
            block_size: self.block_size,
            half_order: self.half_order,
            grid: self.grid.clone(),
            traces: self.traces.iter().map(|t| t.columns(k, 1).into_owned()).collect(),
        }
    }

    pub fn scale(&self, alpha: Complex64) -> SolutionTraces {
        SolutionTraces {
            traces: self.traces.iter().map(|t| t * alpha).collect(),
            ..self.clone()
        }
    }

    fn index_of(&self, x: f64) -> Option<usize> {
        self.grid.iter().position(|&g| g == x)
    }
}

/// `(-1)^N sum_j (-1)^(1-j) (G^[2N-j-1])* F^[j]` for trace matrices at one point.
pub fn bracket_of_traces(f: &CMat, g: &CMat, block_size: usize, half_order: usize) -> CMat {
    let m = block_size;
    let order = 2 * half_order;
    let mut out = CMat::zeros(g.ncols(), f.ncols());
    for j in 0..order {
        let fj = f.rows(j * m, m);
        let gj = g.rows((order - 1 - j) * m, m);
        let term = gj.adjoint() * fj;
        // (-1)^(1-j) is -1 for even j.
        if j % 2 == 0 {
            out -= term;
        } else {
            out += term;
        }
    }
    if half_order % 2 == 1 {
        out = -out;
    }
    out
}

fn check_compatible(f: &SolutionTraces, g: &SolutionTraces) -> Result<(), BracketError> {
    if f.block_size != g.block_size || f.half_order != g.half_order {
        return Err(BracketError::Dimension(format!(
            "(M, N) = ({}, {}) vs ({}, {})",
            f.block_size, f.half_order, g.block_size, g.half_order
        )));
    }
    Ok(())
}

/// `[f, g]_Z(x)`, a `cols(g) x cols(f)` matrix; `M x M` for matrix solutions.
pub fn lagrange_bracket(f: &SolutionTraces, g: &SolutionTraces, x: f64) -> Result<CMat, BracketError> {
    check_compatible(f, g)?;
    let (i, k) = match (f.index_of(x), g.index_of(x)) {
        (Some(i), Some(k)) => (i, k),
        _ => return Err(BracketError::OffGrid { x }),
    };
    Ok(bracket_of_traces(&f.traces[i], &g.traces[k], f.block_size, f.half_order))
}

/// `max_x ||[f, g](x) - [f, g](x_0)||_F` over the shared grid, divided by
/// `max(1, max_x ||f(x)||_F ||g(x)||_F)`, the size of the products the bracket cancels.
pub fn check_bracket_constancy(f: &SolutionTraces, g: &SolutionTraces) -> Result<f64, BracketError> {
    check_compatible(f, g)?;
    if f.grid != g.grid {
        return Err(BracketError::GridMismatch);
    }
    let at = |i: usize| bracket_of_traces(&f.traces[i], &g.traces[i], f.block_size, f.half_order);
    let first = at(0);
    let drift = (1..f.grid.len()).map(|i| (at(i) - &first).norm()).fold(0.0, f64::max);
    let scale = f
        .traces
        .iter()
        .zip(&g.traces)
        .map(|(a, b)| a.norm() * b.norm())
        .fold(1.0, f64::max);
    Ok(drift / scale)
}
