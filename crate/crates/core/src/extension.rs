//! Boundary conditions of the Krein–von Neumann and Friedrichs extensions.
//!
//! Every self-adjoint extension is written as `A Y(a) = B Y(b)` with
//! `2MN x 2MN` matrices `A`, `B`. The Friedrichs conditions
//! `y^[j](a) = y^[j](b) = 0`, `j < N`, are separated; they are embedded in
//! this convention by putting the selector `[I 0]` in the top rows of `A` and
//! the bottom rows of `B`, so that `A Y(a) - B Y(b) = (P Y(a), -P Y(b))`.
//!
//! Kernel basis columns are ordered `(j, k)` with `j` outer (`1..=2N`) and
//! `k` inner (`1..=M`); the `M` columns with a common `j` form the matrix
//! solution `phi_j`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::bracket::{check_bracket_constancy, BracketError, SolutionTraces};
use crate::linalg::{block, block2x2, condition_number, inverse, max_abs_diff, nullity, numerical_rank, singular_values};
use crate::odeint::FundamentalMatrix;
use crate::system::{build_j, ShinZettlSystem, TraceVector};
use crate::CMat;

/// Largest condition number of `Lambda` for which the kernel basis is trusted.
pub const MAX_GAMMA_CONDITION: f64 = 1e12;
/// `Lambda` is only known to about `rel_tol` relative accuracy, so it counts
/// as singular once `condition * rel_tol` exceeds this.
pub const GAMMA_RESOLUTION: f64 = 1e-3;

/// Condition limit for matrices built from a solve at relative tolerance `rel`.
pub fn condition_limit(rel: f64) -> f64 {
    MAX_GAMMA_CONDITION.min(GAMMA_RESOLUTION / rel)
}
/// Relative symplectic defect accepted by [`verify_self_adjoint`].
pub const SELF_ADJOINT_TOL: f64 = 1e-8;
/// Relative agreement required between the structured and dense inverse of `B_K`.
pub const INVERSE_CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtensionError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("kernel basis needs the fundamental matrix at lambda = 0, got {lambda}")]
    NonzeroLambda { lambda: Complex64 },
    #[error(
        "Gamma-bijectivity failure: condition number of Lambda is {condition:e}; \
         the minimal operator is probably not strictly positive"
    )]
    GammaBijectivity { condition: f64 },
    #[error("Phi_N(a) is numerically singular (condition {condition:e}); the kernel basis is unreliable")]
    SingularPhiN { condition: f64 },
    #[error("structured and dense inverses of B_K differ by {deviation:e} (relative)")]
    InverseCrossCheck { deviation: f64 },
    #[error("operation requires a Krein pair, got {0:?}")]
    Role(Role),
    #[error(transparent)]
    Bracket(#[from] BracketError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Krein,
    Friedrichs,
    Custom,
}

/// `A Y(a) = B Y(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    pub a: CMat,
    pub b: CMat,
    pub role: Role,
    /// `M`; fixes the layout of the symplectic form `J_{M,2N}`.
    pub block_size: usize,
}

impl BoundaryPair {
    pub fn custom(a: CMat, b: CMat, block_size: usize) -> Result<Self, ExtensionError> {
        let ok = a.shape() == b.shape()
            && a.nrows() == a.ncols()
            && block_size > 0
            && a.nrows().is_multiple_of(2 * block_size)
            && a.nrows() > 0;
        if !ok {
            return Err(ExtensionError::Dimension(format!(
                "A is {:?}, B is {:?}; both must be square with size a positive multiple of 2M = {}",
                a.shape(),
                b.shape(),
                2 * block_size
            )));
        }
        Ok(BoundaryPair {
            a,
            b,
            role: Role::Custom,
            block_size,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// The basis `phi_{j,k}` of the kernel of the maximal operator with
/// `Gamma phi_{j,k} = e_{(j,k)}`.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    block_size: usize,
    half_order: usize,
    lambda: CMat,
    c: CMat,
    eb: CMat,
    condition: f64,
}

impl KernelBasis {
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn half_order(&self) -> usize {
        self.half_order
    }

    pub fn dim(&self) -> usize {
        2 * self.block_size * self.half_order
    }

    /// The matrix `Lambda` that was inverted.
    pub fn lambda_matrix(&self) -> &CMat {
        &self.lambda
    }

    /// Initial traces `Y(a)` of the basis, one column per `(j, k)`.
    pub fn c(&self) -> &CMat {
        &self.c
    }

    /// End traces `Y(b) = Psi(b) C`.
    pub fn eb(&self) -> &CMat {
        &self.eb
    }

    /// Condition number of `Lambda`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn half(&self) -> usize {
        self.block_size * self.half_order
    }

    fn phi(&self, at_b: bool, shift: bool) -> CMat {
        let h = self.half();
        let src = if at_b { &self.eb } else { &self.c };
        block(src, h, if shift { h } else { 0 }, h, h)
    }

    pub fn phi0_a(&self) -> CMat {
        self.phi(false, false)
    }

    pub fn phin_a(&self) -> CMat {
        self.phi(false, true)
    }

    pub fn phi0_b(&self) -> CMat {
        self.phi(true, false)
    }

    pub fn phin_b(&self) -> CMat {
        self.phi(true, true)
    }

    /// `phi_j^[l]` at `a` or `b`, with `j` one-based and `l` zero-based.
    pub fn quasi_derivative(&self, j: usize, l: usize, at_b: bool) -> CMat {
        let m = self.block_size;
        let src = if at_b { &self.eb } else { &self.c };
        block(src, l * m, (j - 1) * m, m, m)
    }

    /// `max |Lambda C - I|`.
    pub fn gamma_residual(&self) -> f64 {
        let dim = self.dim();
        max_abs_diff(&(&self.lambda * &self.c), &CMat::identity(dim, dim))
    }

    /// Largest deviation in the entrywise symplectic relations between the
    /// bottom-row quasi-derivatives of the basis at `a` and at `b`, relative
    /// to `max(1, max |Phi entry|)`.
    pub fn symplectic_relation_defect(&self) -> f64 {
        let n = self.half_order;
        let mut worst: f64 = 0.0;
        for j in 1..=n {
            for k in 1..=n {
                let sign = |p: usize| if p.is_multiple_of(2) { 1.0 } else { -1.0 };
                let lhs = self.quasi_derivative(k, n + j - 1, false);
                let rhs = self.quasi_derivative(n + 1 - j, 2 * n - k, false).adjoint()
                    * Complex64::new(sign(n + j + k + 1), 0.0);
                worst = worst.max(max_abs_diff(&lhs, &rhs));
                let lhs = self.quasi_derivative(n + k, n + j - 1, false);
                let rhs = self.quasi_derivative(n + 1 - j, 2 * n - k, true).adjoint()
                    * Complex64::new(sign(n + j + k), 0.0);
                worst = worst.max(max_abs_diff(&lhs, &rhs));
            }
        }
        let scale = [self.phi0_a(), self.phin_a(), self.phi0_b(), self.phin_b()]
            .iter()
            .flat_map(|m| m.iter().map(|z| z.norm()).collect::<Vec<_>>())
            .fold(1.0, f64::max);
        worst / scale
    }

    /// All `2MN` basis functions as traces on the integrator grid.
    pub fn traces(&self, fm: &FundamentalMatrix) -> Result<SolutionTraces, ExtensionError> {
        Ok(SolutionTraces::from_fundamental(
            fm,
            self.block_size,
            self.half_order,
            &self.c,
        )?)
    }

    /// The matrix solution `phi_j` (`j` one-based) as traces on the integrator grid.
    pub fn solution(&self, fm: &FundamentalMatrix, j: usize) -> Result<SolutionTraces, ExtensionError> {
        let m = self.block_size;
        let cols = self.c.columns((j - 1) * m, m).into_owned();
        Ok(SolutionTraces::from_fundamental(fm, m, self.half_order, &cols)?)
    }

    /// Largest bracket drift over all pairs `(phi_j, phi_k)` of matrix solutions.
    pub fn bracket_constancy(&self, fm: &FundamentalMatrix) -> Result<f64, ExtensionError> {
        let sols = (1..=2 * self.half_order)
            .map(|j| self.solution(fm, j))
            .collect::<Result<Vec<_>, _>>()?;
        let mut worst: f64 = 0.0;
        for f in &sols {
            for g in &sols {
                worst = worst.max(check_bracket_constancy(f, g)?);
            }
        }
        Ok(worst)
    }
}

/// `(y^[0..N-1](a), y^[0..N-1](b))`: the top halves of both traces.
pub fn gamma_map(ya: &TraceVector, yb: &TraceVector) -> Result<DVector<Complex64>, ExtensionError> {
    if ya.len() != yb.len() || !ya.len().is_multiple_of(2) {
        return Err(ExtensionError::Dimension(format!(
            "traces of length {} and {}",
            ya.len(),
            yb.len()
        )));
    }
    let h = ya.len() / 2;
    let mut out = DVector::zeros(2 * h);
    out.rows_mut(0, h).copy_from(&ya.as_vector().rows(0, h));
    out.rows_mut(h, h).copy_from(&yb.as_vector().rows(0, h));
    Ok(out)
}

/// `Lambda = [[P], [P Psi(b)]]`, where `P` keeps the first `MN` rows.
pub fn lambda_matrix(sys: &ShinZettlSystem, fm: &FundamentalMatrix) -> CMat {
    let dim = sys.dim();
    let h = dim / 2;
    let top = block(&CMat::identity(dim, dim), 0, 0, h, dim);
    let mut out = CMat::zeros(dim, dim);
    out.rows_mut(0, h).copy_from(&top);
    out.rows_mut(h, h).copy_from(&fm.end().rows(0, h));
    out
}

/// Inverts `Lambda` at `lambda = 0`.
pub fn kernel_basis(sys: &ShinZettlSystem, fm: &FundamentalMatrix) -> Result<KernelBasis, ExtensionError> {
    if fm.lambda() != Complex64::new(0.0, 0.0) {
        return Err(ExtensionError::NonzeroLambda { lambda: fm.lambda() });
    }
    let dim = sys.dim();
    if fm.end().nrows() != dim {
        return Err(ExtensionError::Dimension(format!(
            "fundamental matrix is {0}x{0}, system needs {dim}",
            fm.end().nrows()
        )));
    }
    let lambda = lambda_matrix(sys, fm);
    let condition = condition_number(&lambda);
    if condition.is_nan() || condition > condition_limit(fm.tolerances().rel) {
        return Err(ExtensionError::GammaBijectivity { condition });
    }
    let c = inverse(&lambda).ok_or(ExtensionError::GammaBijectivity { condition })?;
    let eb = fm.end() * &c;
    Ok(KernelBasis {
        block_size: sys.block_size(),
        half_order: sys.half_order(),
        lambda,
        c,
        eb,
        condition,
    })
}

/// `A_K = [[-Phi_0(a), I], [Phi_0(b), 0]]`, `B_K = [[Phi_N(a), 0], [-Phi_N(b), I]]`.
pub fn build_krein_pair(basis: &KernelBasis) -> BoundaryPair {
    let h = basis.half();
    let id = CMat::identity(h, h);
    let zero = CMat::zeros(h, h);
    let a = block2x2(&-basis.phi0_a(), &id, &basis.phi0_b(), &zero);
    let b = block2x2(&basis.phin_a(), &zero, &-basis.phin_b(), &id);
    BoundaryPair {
        a,
        b,
        role: Role::Krein,
        block_size: basis.block_size,
    }
}

/// `B_K^{-1} = [[Phi_N(a)^{-1}, 0], [Phi_N(b) Phi_N(a)^{-1}, I]]`, checked against dense inversion.
pub fn invert_b(pair: &BoundaryPair, basis: &KernelBasis) -> Result<CMat, ExtensionError> {
    if pair.role != Role::Krein {
        return Err(ExtensionError::Role(pair.role));
    }
    let h = basis.half();
    let phin_a = basis.phin_a();
    let condition = condition_number(&phin_a);
    let singular = ExtensionError::SingularPhiN { condition };
    if condition.is_nan() || condition > MAX_GAMMA_CONDITION {
        return Err(singular);
    }
    let inv_a = inverse(&phin_a).ok_or(singular)?;
    let lower = basis.phin_b() * &inv_a;
    let structured = block2x2(&inv_a, &CMat::zeros(h, h), &lower, &CMat::identity(h, h));

    let dense = inverse(&pair.b).ok_or(ExtensionError::SingularPhiN { condition })?;
    let deviation = (&structured - &dense).norm() / structured.norm().max(1.0);
    if deviation.is_nan() || deviation > INVERSE_CROSS_CHECK_TOL {
        return Err(ExtensionError::InverseCrossCheck { deviation });
    }
    Ok(structured)
}

/// `T_K = B_K^{-1} A_K`, mapping `Y(a)` to `Y(b)` on the Krein domain.
pub fn transfer_matrix(pair: &BoundaryPair, b_inv: &CMat) -> CMat {
    b_inv * &pair.a
}

/// `y^[j](a) = y^[j](b) = 0` for `j < N`.
pub fn friedrichs_pair(block_size: usize, half_order: usize) -> BoundaryPair {
    let h = block_size * half_order;
    let mut a = CMat::zeros(2 * h, 2 * h);
    let mut b = CMat::zeros(2 * h, 2 * h);
    for i in 0..h {
        a[(i, i)] = Complex64::new(1.0, 0.0);
        b[(h + i, i)] = Complex64::new(1.0, 0.0);
    }
    BoundaryPair {
        a,
        b,
        role: Role::Friedrichs,
        block_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfAdjointnessReport {
    pub rank_ab: usize,
    pub required_rank: usize,
    pub symplectic_defect: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

/// `rank(A | B) = 2MN` and `A J A* = B J B*`.
pub fn verify_self_adjoint(pair: &BoundaryPair) -> SelfAdjointnessReport {
    let dim = pair.dim();
    let mut ab = CMat::zeros(dim, 2 * dim);
    ab.columns_mut(0, dim).copy_from(&pair.a);
    ab.columns_mut(dim, dim).copy_from(&pair.b);
    let rank_ab = numerical_rank(&ab);
    let j = build_j(pair.block_size, dim / pair.block_size);
    let aja = &pair.a * &j * pair.a.adjoint();
    let bjb = &pair.b * &j * pair.b.adjoint();
    let symplectic_defect = (&aja - &bjb).norm() / aja.norm().max(1.0);
    SelfAdjointnessReport {
        rank_ab,
        required_rank: dim,
        symplectic_defect,
        tolerance: SELF_ADJOINT_TOL,
        verdict: rank_ab == dim && symplectic_defect <= SELF_ADJOINT_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub residual: f64,
}

/// Whether the traces `(Y(a), Y(b))` satisfy `A Y(a) = B Y(b)`.
pub fn membership(pair: &BoundaryPair, ya: &TraceVector, yb: &TraceVector, tol: f64) -> Result<Membership, ExtensionError> {
    let dim = pair.dim();
    if ya.len() != dim || yb.len() != dim {
        return Err(ExtensionError::Dimension(format!(
            "traces of length {} and {}, pair of size {dim}",
            ya.len(),
            yb.len()
        )));
    }
    let r = &pair.a * ya.as_vector() - &pair.b * yb.as_vector();
    let residual = r.norm() / (ya.as_vector().norm() + yb.as_vector().norm()).max(1.0);
    Ok(Membership {
        member: residual <= tol,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Primeness {
    pub relatively_prime: bool,
    pub common_nullity: usize,
    pub min_singular_value: f64,
}

/// Dimension of the set of boundary traces satisfying both pairs.
pub fn relative_primeness(p: &BoundaryPair, q: &BoundaryPair) -> Result<Primeness, ExtensionError> {
    let dim = p.dim();
    if q.dim() != dim {
        return Err(ExtensionError::Dimension(format!("pairs of size {dim} and {}", q.dim())));
    }
    let mut stacked = CMat::zeros(2 * dim, 2 * dim);
    stacked.view_mut((0, 0), (dim, dim)).copy_from(&p.a);
    stacked.view_mut((0, dim), (dim, dim)).copy_from(&-&p.b);
    stacked.view_mut((dim, 0), (dim, dim)).copy_from(&q.a);
    stacked.view_mut((dim, dim), (dim, dim)).copy_from(&-&q.b);
    let common_nullity = nullity(&stacked);
    let min_singular_value = singular_values(&stacked).last().copied().unwrap_or(0.0);
    Ok(Primeness {
        relatively_prime: common_nullity == 0,
        common_nullity,
        min_singular_value,
    })
}
