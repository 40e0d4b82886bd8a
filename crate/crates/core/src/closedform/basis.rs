//! Kernel basis polynomials, their boundary derivatives and the Toeplitz
//! transfer matrix.

use nalgebra::DMatrix;
use serde::Serialize;

use super::matrices::lambda_inverse;
use super::{
    binom, block2x2, fact, identity, inv_factorial, matmul, negate, powi, residual, sign, sub_block, zeros, Field,
    Residual,
};

/// The polynomials `p_k` on `[0, 1]` with `Gamma p_k = e_k`.
/// Column `k - 1` of `coeffs` holds the coefficients of `1, x, ..., x^(2N-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBasis<T: Field> {
    pub n: usize,
    pub coeffs: DMatrix<T>,
}

impl<T: Field> PolyBasis<T> {
    /// `p_k^(d)(x)`, `k` one-based.
    pub fn derivative_at(&self, k: usize, d: usize, x: &T) -> T {
        poly_derivative(&self.coeffs, k - 1, d, x)
    }
}

/// `phi_k(x) = h^{s_k} p_k((x - a) / h)` on `[a, a + h]`, as polynomials in `x - a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledBasis<T: Field> {
    pub n: usize,
    pub a: T,
    pub h: T,
    pub coeffs: DMatrix<T>,
}

impl<T: Field> ScaledBasis<T> {
    /// `phi_k^(d)(x)`, `k` one-based.
    pub fn derivative_at(&self, k: usize, d: usize, x: &T) -> T {
        poly_derivative(&self.coeffs, k - 1, d, &(x.clone() - self.a.clone()))
    }

    pub fn b(&self) -> T {
        self.a.clone() + self.h.clone()
    }
}

fn poly_derivative<T: Field>(coeffs: &DMatrix<T>, col: usize, d: usize, t: &T) -> T {
    let mut acc = T::zero();
    for p in (d..coeffs.nrows()).rev() {
        // Horner in t over the surviving terms p!/(p-d)! c_p t^(p-d).
        let c = coeffs[(p, col)].clone() * fact::<T>(p as i64) * inv_factorial((p - d) as i64);
        acc = acc * t.clone() + c;
    }
    acc
}

/// Columns of `Lambda^{-1}`.
pub fn basis_polynomials<T: Field>(n: usize) -> PolyBasis<T> {
    PolyBasis {
        n,
        coeffs: lambda_inverse(n),
    }
}

/// `sum_l C(l-1, s-1) C(N+l-r-1, N-1)`, indexed `[s-1][r-1]`.
fn inner_sums<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    DMatrix::from_fn(n, n, |i, j| {
        let (s, r) = (i as i64 + 1, j as i64 + 1);
        (1..=nn).fold(T::zero(), |acc, l| acc + binom::<T>(l - 1, s - 1) * binom(nn + l - r - 1, nn - 1))
    })
}

/// The coefficients written out term by term rather than read from `Lambda^{-1}`.
pub fn basis_polynomials_explicit<T: Field>(n: usize) -> PolyBasis<T> {
    let nn = n as i64;
    let g = inner_sums::<T>(n);
    let mut coeffs = zeros::<T>(2 * n, 2 * n);
    for k in 1..=nn {
        let col = (k - 1) as usize;
        coeffs[(col, col)] = inv_factorial(k - 1);
        for s in 1..=nn {
            let row = (nn - 1 + s) as usize;
            let mut lower = T::zero();
            for r in 1..=nn {
                let w = sign::<T>(s + r) * inv_factorial(r - 1) * inv_factorial(k - r);
                lower = lower + w * g[((s - 1) as usize, (r - 1) as usize)].clone();
            }
            coeffs[(row, col)] = coeffs[(row, col)].clone() - lower;
            let upper = sign::<T>(s + k) * inv_factorial(k - 1) * g[((s - 1) as usize, col)].clone();
            coeffs[(row, col + n)] = upper;
        }
    }
    PolyBasis { n, coeffs }
}

/// Scales and translates the `p_k` to `[a, b]`.
pub fn phi_on_interval<T: Field>(n: usize, a: T, b: T) -> ScaledBasis<T> {
    let h = b - a.clone();
    let base = basis_polynomials::<T>(n);
    let coeffs = DMatrix::from_fn(2 * n, 2 * n, |p, col| {
        let shift = if col < n { col } else { col - n } as i64;
        base.coeffs[(p, col)].clone() * powi(&h, shift - p as i64)
    });
    ScaledBasis { n, a, h, coeffs }
}

/// `Gamma p_k` for every `k`, as columns.
pub fn gamma_of_basis<T: Field>(basis: &PolyBasis<T>) -> DMatrix<T> {
    let n = basis.n;
    DMatrix::from_fn(2 * n, 2 * n, |row, col| {
        let (d, x) = if row < n { (row, T::zero()) } else { (row - n, T::one()) };
        basis.derivative_at(col + 1, d, &x)
    })
}

/// `Phi_X = (phi_{k+X}^(N+j-1))_{j,k}` at both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiBlocks<T: Field> {
    pub phi0_a: DMatrix<T>,
    pub phi0_b: DMatrix<T>,
    pub phin_a: DMatrix<T>,
    pub phin_b: DMatrix<T>,
}

/// Closed-form `Phi` blocks for an interval of length `h`.
pub fn phi_blocks<T: Field>(n: usize, h: &T) -> PhiBlocks<T> {
    let nn = n as i64;
    let g = inner_sums::<T>(n);
    let gi = |s: i64, r: i64| g[((s - 1) as usize, (r - 1) as usize)].clone();
    let scale = |j: i64, k: i64| T::one() / powi(h, nn - k + j);
    let square = |f: &dyn Fn(i64, i64) -> T| DMatrix::from_fn(n, n, |i, j| f(i as i64 + 1, j as i64 + 1));

    let phi0_a = square(&|j, k| {
        let sum = (1..=nn).fold(T::zero(), |acc, r| {
            acc + sign::<T>(j + r) * inv_factorial(r - 1) * inv_factorial(k - r) * gi(j, r)
        });
        -(fact::<T>(nn - 1 + j) * scale(j, k) * sum)
    });
    let phi0_b = square(&|j, k| {
        let mut sum = T::zero();
        for s in 1..=nn {
            let fs = inv_factorial::<T>(s - j);
            if fs.is_zero() {
                continue;
            }
            for r in 1..=nn {
                sum = sum
                    + sign::<T>(r + s)
                        * fact(nn - 1 + s)
                        * inv_factorial(r - 1)
                        * inv_factorial(k - r)
                        * fs.clone()
                        * gi(s, r);
            }
        }
        -(scale(j, k) * sum)
    });
    let phin_a = square(&|j, k| {
        fact::<T>(nn - 1 + j) * scale(j, k) * sign(j + k) * inv_factorial(k - 1) * gi(j, k)
    });
    let phin_b = square(&|j, k| {
        let sum = (1..=nn).fold(T::zero(), |acc, s| {
            acc + sign::<T>(s + k) * fact(nn - 1 + s) * inv_factorial(k - 1) * inv_factorial(s - j) * gi(s, k)
        });
        scale(j, k) * sum
    });
    PhiBlocks {
        phi0_a,
        phi0_b,
        phin_a,
        phin_b,
    }
}

/// `Phi` blocks obtained by differentiating the scaled basis.
pub fn phi_blocks_by_differentiation<T: Field>(basis: &ScaledBasis<T>) -> PhiBlocks<T> {
    let n = basis.n;
    let (a, b) = (basis.a.clone(), basis.b());
    let blk = |shift: usize, x: &T| DMatrix::from_fn(n, n, |i, j| basis.derivative_at(j + 1 + shift, n + i, x));
    PhiBlocks {
        phi0_a: blk(0, &a),
        phi0_b: blk(0, &b),
        phin_a: blk(n, &a),
        phin_b: blk(n, &b),
    }
}

/// `T_K = (h^(k-j) / (k-j)!)`, upper triangular Toeplitz of size `2N`.
pub fn toeplitz_tk<T: Field>(n: usize, h: &T) -> DMatrix<T> {
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j >= i {
            let d = (j - i) as i64;
            powi(h, d) * inv_factorial(d)
        } else {
            T::zero()
        }
    })
}

/// Upper-left (and lower-right) `N x N` block of `T_K`.
pub fn t1<T: Field>(n: usize, h: &T) -> DMatrix<T> {
    sub_block(&toeplitz_tk(n, h), 0, 0, n, n)
}

/// Upper-right block of `T_K`, `h^(N+k-j) / (N+k-j)!`.
pub fn t2<T: Field>(n: usize, h: &T) -> DMatrix<T> {
    sub_block(&toeplitz_tk(n, h), 0, n, n, n)
}

/// `(A_K, B_K)` assembled from the blocks.
pub fn krein_matrices<T: Field>(blocks: &PhiBlocks<T>) -> (DMatrix<T>, DMatrix<T>) {
    let n = blocks.phi0_a.nrows();
    let id = identity::<T>(n);
    let zero = zeros::<T>(n, n);
    let a = block2x2(&negate(&blocks.phi0_a), &id, &blocks.phi0_b, &zero);
    let b = block2x2(&blocks.phin_a, &zero, &negate(&blocks.phin_b), &id);
    (a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub n: usize,
    pub checks: Vec<(String, Residual)>,
    pub holds: bool,
}

/// The four block identities and `A_K = B_K T_K` on an interval of length `h`.
pub fn verify_factorization<T: Field>(n: usize, h: &T) -> FactorizationReport {
    let blocks = phi_blocks(n, h);
    let (t1, t2) = (t1(n, h), t2(n, h));
    let (a, b) = krein_matrices(&blocks);
    let checks = vec![
        (
            "-Phi_N(a) T_1 = Phi_0(a)".to_string(),
            residual(&negate(&matmul(&blocks.phin_a, &t1)), &blocks.phi0_a),
        ),
        (
            "-Phi_N(b) T_1 = Phi_0(b)".to_string(),
            residual(&negate(&matmul(&blocks.phin_b, &t1)), &blocks.phi0_b),
        ),
        (
            "Phi_N(a) T_2 = I".to_string(),
            residual(&matmul(&blocks.phin_a, &t2), &identity(n)),
        ),
        (
            "Phi_N(b) T_2 = T_1".to_string(),
            residual(&matmul(&blocks.phin_b, &t2), &t1),
        ),
        (
            "A_K = B_K T_K".to_string(),
            residual(&a, &matmul(&b, &toeplitz_tk(n, h))),
        ),
    ];
    let holds = checks.iter().all(|(_, r)| r.holds);
    FactorizationReport { n, checks, holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{rational, Rational};
    use num_traits::{One, Zero};

    fn q(rows: usize, data: &[(i64, i64)]) -> DMatrix<Rational> {
        DMatrix::from_row_slice(
            rows,
            data.len() / rows,
            &data.iter().map(|&(a, b)| rational(a, b)).collect::<Vec<_>>(),
        )
    }

    #[test]
    fn second_order_basis() {
        let b = basis_polynomials::<Rational>(1);
        // p_1 = 1 - x, p_2 = x
        assert_eq!(b.coeffs, q(2, &[(1, 1), (0, 1), (-1, 1), (1, 1)]));
        let s = phi_on_interval(1, rational(2, 1), rational(5, 1));
        let x = rational(3, 1);
        assert_eq!(s.derivative_at(1, 0, &x), rational(2, 3));
        assert_eq!(s.derivative_at(2, 0, &x), rational(1, 3));
        let blocks = phi_blocks_by_differentiation(&phi_on_interval(1, Rational::zero(), Rational::one()));
        assert_eq!(blocks.phi0_a, q(1, &[(-1, 1)]));
        assert_eq!(blocks.phi0_b, q(1, &[(-1, 1)]));
        assert_eq!(blocks.phin_a, q(1, &[(1, 1)]));
        assert_eq!(blocks.phin_b, q(1, &[(1, 1)]));
    }

    #[test]
    fn toeplitz_examples() {
        assert_eq!(toeplitz_tk(1, &Rational::one()), q(2, &[(1, 1), (1, 1), (0, 1), (1, 1)]));
        let t = toeplitz_tk(2, &Rational::one());
        let want = q(
            4,
            &[
                (1, 1),
                (1, 1),
                (1, 2),
                (1, 6),
                (0, 1),
                (1, 1),
                (1, 1),
                (1, 2),
                (0, 1),
                (0, 1),
                (1, 1),
                (1, 1),
                (0, 1),
                (0, 1),
                (0, 1),
                (1, 1),
            ],
        );
        assert_eq!(t, want);
    }

    #[test]
    fn explicit_coefficients_match_inverse() {
        for n in 1..=6 {
            assert_eq!(basis_polynomials_explicit::<Rational>(n), basis_polynomials(n), "N = {n}");
        }
    }

    #[test]
    fn boundary_values_are_unit_vectors() {
        for n in 1..=6 {
            let b = basis_polynomials::<Rational>(n);
            assert_eq!(gamma_of_basis(&b), identity(2 * n), "N = {n}");
        }
    }

    #[test]
    fn closed_blocks_match_differentiation() {
        for n in 1..=6 {
            for (a, b) in [(0, 1), (1, 4)] {
                let (a, b) = (rational(a, 1), rational(b, 1));
                let h = b.clone() - a.clone();
                let by_diff = phi_blocks_by_differentiation(&phi_on_interval(n, a, b));
                assert_eq!(phi_blocks(n, &h), by_diff, "N = {n}, h = {h}");
            }
            let h = rational(3, 2);
            let by_diff = phi_blocks_by_differentiation(&phi_on_interval(n, rational(-1, 3), rational(7, 6)));
            assert_eq!(phi_blocks(n, &h), by_diff);
        }
    }

    #[test]
    fn phin_a_sign_pattern() {
        let p = phi_blocks::<Rational>(4, &Rational::one()).phin_a;
        for j in 0..4 {
            for k in 0..4 {
                let v = &p[(j, k)];
                if !v.is_zero() {
                    let positive = v > &Rational::zero();
                    assert_eq!(positive, (j + k) % 2 == 0, "({j}, {k})");
                }
            }
        }
    }

    #[test]
    fn factorization_exact_for_small_orders() {
        for n in 1..=5 {
            for h in [rational(1, 1), rational(5, 3)] {
                let r = verify_factorization(n, &h);
                assert!(r.holds, "{r:?}");
            }
        }
    }

    #[test]
    fn floating_factorization_on_irrational_interval() {
        let h = std::f64::consts::SQRT_2 * std::f64::consts::PI;
        for n in 1..=4 {
            let r = verify_factorization(n, &h);
            assert!(r.holds, "{r:?}");
        }
    }
}
