//! Exact boundary data for the pure operator `(-1)^N y^(2N)` (`M = 1`).
//!
//! Everything here is generic over [`Field`]. [`Rational`] gives exact
//! answers for rational `b - a`; `f64` is the fallback for irrational
//! intervals.
//!
//! Matrix indices in formulas and doc comments are one-based, matching the
//! usual `(j, k)` notation; storage is zero-based.

mod basis;
mod identities;
mod matrices;

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

pub use basis::{
    basis_polynomials, basis_polynomials_explicit, gamma_of_basis, krein_matrices, phi_blocks,
    phi_blocks_by_differentiation, phi_on_interval, t1, t2, toeplitz_tk, verify_factorization, FactorizationReport,
    PhiBlocks, PolyBasis, ScaledBasis,
};
pub use identities::{
    check_involution, check_negation, check_vandermonde, lemma_identities_exhaustive, IdentityCheck,
};
pub use matrices::{
    a_inverse, d_inv_c_a_inv, d_inverse, lambda_inverse, lambda_matrix, matrix_a, matrix_c, matrix_d, matrix_p,
    matrix_q, p_inverse,
};

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = BigRational;

/// The scalar operations the closed forms need.
pub trait Field:
    Clone
    + PartialEq
    + Debug
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and identities are checked for equality.
    const EXACT: bool;
    /// Relative tolerance for identity checks when not exact.
    const TOLERANCE: f64;

    fn from_ratio(num: BigInt, den: BigInt) -> Self;

    fn to_f64(&self) -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(BigInt::from(n), BigInt::one())
    }

    fn from_big(n: &BigInt) -> Self {
        Self::from_ratio(n.clone(), BigInt::one())
    }
}

impl Field for BigRational {
    const EXACT: bool = true;
    const TOLERANCE: f64 = 0.0;

    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        BigRational::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(if self.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        })
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    const TOLERANCE: f64 = 1e-10;

    fn from_ratio(num: BigInt, den: BigInt) -> Self {
        num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// Binomial coefficient with integer upper index. Zero for `k < 0`; for
/// `n < 0` it is `(-1)^k C(k - n - 1, k)`, the polynomial continuation.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 {
        return BigInt::zero();
    }
    if n < 0 {
        let v = binomial(k - n - 1, k);
        return if k % 2 == 0 { v } else { -v };
    }
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 1..=k {
        acc = acc * BigInt::from(n - k + i) / BigInt::from(i);
    }
    acc
}

/// `r (r - 1) ... (r - k + 1) / k!` for `k >= 0`, zero for `k < 0`.
pub fn binomial_rational(r: &Rational, k: i64) -> Rational {
    if k < 0 {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    for i in 0..k {
        acc = acc * (r - Rational::from_integer(BigInt::from(i))) / Rational::from_integer(BigInt::from(i + 1));
    }
    acc
}

/// `1 / n!`, with `1 / n! = 0` for negative `n`.
pub(crate) fn inv_factorial<T: Field>(n: i64) -> T {
    if n < 0 {
        T::zero()
    } else {
        T::from_ratio(BigInt::one(), factorial(n as u64))
    }
}

pub(crate) fn fact<T: Field>(n: i64) -> T {
    assert!(n >= 0, "factorial of negative {n}");
    T::from_big(&factorial(n as u64))
}

pub(crate) fn binom<T: Field>(n: i64, k: i64) -> T {
    T::from_big(&binomial(n, k))
}

pub(crate) fn sign<T: Field>(e: i64) -> T {
    if e.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `h^e` for any integer `e`.
pub(crate) fn powi<T: Field>(h: &T, e: i64) -> T {
    let mut acc = T::one();
    for _ in 0..e.unsigned_abs() {
        acc = acc * h.clone();
    }
    if e < 0 {
        T::one() / acc
    } else {
        acc
    }
}

pub fn identity<T: Field>(n: usize) -> DMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
}

pub fn zeros<T: Field>(rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::zero())
}

pub fn matmul<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| {
        (0..a.ncols()).fold(T::zero(), |acc, k| acc + a[(i, k)].clone() * b[(k, j)].clone())
    })
}

pub fn matsub<T: Field>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(a.shape(), b.shape(), "shapes differ");
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].clone() - b[(i, j)].clone())
}

pub fn negate<T: Field>(a: &DMatrix<T>) -> DMatrix<T> {
    a.map(|v| -v)
}

pub fn block2x2<T: Field>(tl: &DMatrix<T>, tr: &DMatrix<T>, bl: &DMatrix<T>, br: &DMatrix<T>) -> DMatrix<T> {
    let (r0, c0) = tl.shape();
    DMatrix::from_fn(r0 + bl.nrows(), c0 + tr.ncols(), |i, j| match (i < r0, j < c0) {
        (true, true) => tl[(i, j)].clone(),
        (true, false) => tr[(i, j - c0)].clone(),
        (false, true) => bl[(i - r0, j)].clone(),
        (false, false) => br[(i - r0, j - c0)].clone(),
    })
}

pub fn sub_block<T: Field>(m: &DMatrix<T>, row: usize, col: usize, rows: usize, cols: usize) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |i, j| m[(row + i, col + j)].clone())
}

pub fn to_f64_matrix<T: Field>(m: &DMatrix<T>) -> DMatrix<f64> {
    m.map(|v| v.to_f64())
}

/// Difference between two matrices that should agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    /// Every entry of the difference is exactly zero.
    pub exact: bool,
    pub holds: bool,
}

pub fn residual<T: Field>(lhs: &DMatrix<T>, rhs: &DMatrix<T>) -> Residual {
    let diff = matsub(lhs, rhs);
    let exact = diff.iter().all(Zero::is_zero);
    let max_abs = diff.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
    let scale = lhs
        .iter()
        .chain(rhs.iter())
        .map(|v| v.to_f64().abs())
        .fold(1.0, f64::max);
    let holds = if T::EXACT {
        exact
    } else {
        max_abs <= T::TOLERANCE * scale
    };
    Residual { max_abs, exact, holds }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(5, 7), BigInt::zero());
        assert_eq!(binomial(5, -1), BigInt::zero());
        assert_eq!(binomial(-2, 1), BigInt::from(-2));
        assert_eq!(binomial(-1, 3), BigInt::from(-1));
        assert_eq!(binomial(0, 0), BigInt::one());
        assert_eq!(binomial(40, 20), "137846528820".parse::<BigInt>().unwrap());
        assert_eq!(binomial_rational(&rational(1, 2), 2), rational(-1, 8));
        assert_eq!(binomial_rational(&rational(-2, 1), 1), rational(-2, 1));
        assert_eq!(binomial_rational(&rational(3, 1), 5), Rational::zero());
    }

    #[test]
    fn reciprocal_factorial_of_negative_is_zero() {
        assert_eq!(inv_factorial::<Rational>(-3), Rational::zero());
        assert_eq!(inv_factorial::<Rational>(4), rational(1, 24));
        assert_eq!(factorial(24), "620448401733239439360000".parse::<BigInt>().unwrap());
    }

    #[test]
    fn rationals_are_canonical() {
        let r = rational(6, -4);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
    }

    #[test]
    fn powers_with_negative_exponent() {
        assert_eq!(powi(&rational(2, 3), -2), rational(9, 4));
        assert_eq!(powi(&rational(2, 3), 0), Rational::one());
        assert!((powi(&2.0f64, -3) - 0.125).abs() < 1e-16);
    }
}
