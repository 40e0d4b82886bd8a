//! Small dense complex helpers shared by the boundary-matrix code.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::CMat;

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn min_singular_value(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Rank cutoff `sigma_max * dim * eps * 64`, with `dim` the larger side.
pub fn rank_threshold(sv: &[f64], dim: usize) -> f64 {
    sv.first().copied().unwrap_or(0.0) * dim as f64 * f64::EPSILON * 64.0
}

pub fn numerical_rank(m: &CMat) -> usize {
    let sv = singular_values(m);
    let tol = rank_threshold(&sv, m.nrows().max(m.ncols()));
    sv.iter().filter(|&&s| s > tol).count()
}

/// Dimension of the right nullspace of `m` (columns minus rank).
pub fn nullity(m: &CMat) -> usize {
    m.ncols() - numerical_rank(m)
}

/// 2-norm condition number; infinite for singular input.
pub fn condition_number(m: &CMat) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Smallest eigenvalue of the Hermitian part `(m + m*) / 2`.
pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn hermitian_residual(m: &CMat) -> f64 {
    (m - m.adjoint()).norm()
}

/// LU inverse followed by one Newton-Schulz step `X (2I - M X)`.
pub fn inverse(m: &CMat) -> Option<CMat> {
    let x = m.clone().try_inverse()?;
    let n = m.nrows();
    let two = CMat::identity(n, n) * Complex64::new(2.0, 0.0);
    let refined = &x * (two - m * &x);
    if refined.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(refined)
    } else {
        Some(x)
    }
}

/// Copy of the `(row, col)` block of size `rows x cols` starting at the given offsets.
pub fn block(m: &CMat, row: usize, col: usize, rows: usize, cols: usize) -> CMat {
    m.view((row, col), (rows, cols)).into_owned()
}

pub fn set_block(m: &mut CMat, row: usize, col: usize, value: &CMat) {
    m.view_mut((row, col), (value.nrows(), value.ncols())).copy_from(value);
}

/// `[[tl, tr], [bl, br]]`.
pub fn block2x2(tl: &CMat, tr: &CMat, bl: &CMat, br: &CMat) -> CMat {
    let (r0, c0) = tl.shape();
    let mut out = DMatrix::zeros(r0 + bl.nrows(), c0 + tr.ncols());
    set_block(&mut out, 0, 0, tl);
    set_block(&mut out, 0, c0, tr);
    set_block(&mut out, r0, 0, bl);
    set_block(&mut out, r0, c0, br);
    out
}

pub fn real(m: &DMatrix<f64>) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, cols: usize, data: &[f64]) -> CMat {
        real(&DMatrix::from_row_slice(rows, cols, data))
    }

    #[test]
    fn rank_and_nullity() {
        let m = cm(2, 4, &[1.0, 2.0, 0.0, 1.0, 2.0, 4.0, 0.0, 2.0]);
        assert_eq!(numerical_rank(&m), 1);
        assert_eq!(nullity(&m), 3);
        assert_eq!(numerical_rank(&CMat::identity(3, 3)), 3);
        assert_eq!(numerical_rank(&CMat::zeros(2, 2)), 0);
    }

    #[test]
    fn hermitian_eigenvalue() {
        let m = cm(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!((min_hermitian_eigenvalue(&m) - 1.0).abs() < 1e-14);
        let mut z = CMat::identity(2, 2);
        z[(0, 1)] = Complex64::new(0.0, 1.0);
        z[(1, 0)] = Complex64::new(0.0, -1.0);
        assert!(min_hermitian_eigenvalue(&z).abs() < 1e-14);
        assert_eq!(hermitian_residual(&z), 0.0);
    }

    #[test]
    fn condition_of_singular_is_infinite() {
        assert!(condition_number(&cm(2, 2, &[1.0, 1.0, 1.0, 1.0])).is_infinite());
        assert!((condition_number(&cm(2, 2, &[2.0, 0.0, 0.0, 0.5])) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn blocks_round_trip() {
        let a = cm(1, 1, &[1.0]);
        let b = cm(1, 2, &[2.0, 3.0]);
        let c = cm(2, 1, &[4.0, 7.0]);
        let d = cm(2, 2, &[5.0, 6.0, 8.0, 9.0]);
        let m = block2x2(&a, &b, &c, &d);
        assert_eq!(m, cm(3, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]));
        assert_eq!(block(&m, 1, 1, 2, 2), d);
    }
}
