//! `Lambda = [[A, 0], [C, D]]` on `[0, 1]` and its inverse in closed form.

use nalgebra::DMatrix;

use super::{binom, block2x2, fact, inv_factorial, negate, sign, zeros, Field};

fn square<T: Field>(n: usize, f: impl Fn(i64, i64) -> T) -> DMatrix<T> {
    DMatrix::from_fn(n, n, |i, j| f(i as i64 + 1, j as i64 + 1))
}

/// `A = diag((j-1)!)`: derivatives of `1, x, ..., x^(N-1)` at 0.
pub fn matrix_a<T: Field>(n: usize) -> DMatrix<T> {
    square(n, |j, k| if j == k { fact(j - 1) } else { T::zero() })
}

pub fn a_inverse<T: Field>(n: usize) -> DMatrix<T> {
    square(n, |j, k| if j == k { inv_factorial(j - 1) } else { T::zero() })
}

/// `C_{jk} = (k-1)! / (k-j)!`: derivatives of `x^(k-1)` at 1.
pub fn matrix_c<T: Field>(n: usize) -> DMatrix<T> {
    square(n, |j, k| fact::<T>(k - 1) * inv_factorial(k - j))
}

/// `D_{jk} = (N+k-1)! / (N+k-j)!`: derivatives of `x^(N+k-1)` at 1.
pub fn matrix_d<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    square(n, |j, k| fact::<T>(nn + k - 1) * inv_factorial(nn + k - j))
}

/// Pascal matrix `P_{jk} = C(k-1, j-1)`.
pub fn matrix_p<T: Field>(n: usize) -> DMatrix<T> {
    square(n, |j, k| binom(k - 1, j - 1))
}

pub fn p_inverse<T: Field>(n: usize) -> DMatrix<T> {
    square(n, |j, k| sign::<T>(j + k) * binom(k - 1, j - 1))
}

/// `Q_{jk} = (-1)^(j-k) C(N-1+j-k, j-k)`.
pub fn matrix_q<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    square(n, |j, k| sign::<T>(j - k) * binom(nn - 1 + j - k, j - k))
}

/// `D^{-1}_{jk} = sum_l (-1)^(j+k) / (k-1)! C(l-1, j-1) C(N-1+l-k, l-k)`.
pub fn d_inverse<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    square(n, |j, k| {
        let sum = (1..=nn).fold(T::zero(), |acc, l| {
            acc + binom::<T>(l - 1, j - 1) * binom(nn - 1 + l - k, l - k)
        });
        sign::<T>(j + k) * inv_factorial(k - 1) * sum
    })
}

/// `(D^{-1} C A^{-1})_{jk} = sum_{r,l} (-1)^(j+r) / ((r-1)! (k-r)!) C(l-1, j-1) C(N+l-r-1, N-1)`.
pub fn d_inv_c_a_inv<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    square(n, |j, k| {
        let mut acc = T::zero();
        for r in 1..=nn {
            let outer = sign::<T>(j + r) * inv_factorial(r - 1) * inv_factorial(k - r);
            if outer.is_zero() {
                continue;
            }
            let inner = (1..=nn).fold(T::zero(), |s, l| {
                s + binom::<T>(l - 1, j - 1) * binom(nn + l - r - 1, nn - 1)
            });
            acc = acc + outer * inner;
        }
        acc
    })
}

/// `(Gamma 1 | Gamma x | ... | Gamma x^(2N-1))` on `[0, 1]`, by differentiating monomials.
pub fn lambda_matrix<T: Field>(n: usize) -> DMatrix<T> {
    let nn = n as i64;
    DMatrix::from_fn(2 * n, 2 * n, |row, col| {
        let (d, at_one) = if row < n {
            (row as i64, false)
        } else {
            (row as i64 - nn, true)
        };
        let p = col as i64;
        // d-th derivative of x^p is p! / (p-d)! x^(p-d).
        let coeff = fact::<T>(p) * inv_factorial(p - d);
        if at_one || p == d {
            coeff
        } else {
            T::zero()
        }
    })
}

/// `[[A^{-1}, 0], [-D^{-1} C A^{-1}, D^{-1}]]`.
pub fn lambda_inverse<T: Field>(n: usize) -> DMatrix<T> {
    block2x2(
        &a_inverse(n),
        &zeros(n, n),
        &negate(&d_inv_c_a_inv(n)),
        &d_inverse(n),
    )
}
