//! Fundamental matrices `Psi(x; lambda)` of the companion system
//! `U' = S(x; lambda) U`, `U(a) = I`.
//!
//! The integrator is the Dormand–Prince 5(4) pair with step rejection and
//! its quartic dense output. Every accepted step keeps its interpolation
//! coefficients, so `Psi` can be read at any `x` in the interval.
//!
//! Coefficient discontinuities are not located; the step-size controller
//! absorbs them at the cost of extra rejected steps.

use num_complex::Complex64;
use thiserror::Error;

use crate::system::{companion_matrix, ShinZettlSystem, SpectralParameter, SystemError, TraceVector};
use crate::CMat;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
/// Every run takes at least this many steps, so dense output covers at least 33 nodes.
pub const MIN_STEPS: usize = 32;
pub const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("tolerances must lie in (0, 1): rel = {rel}, abs = {abs}")]
    Tolerance { rel: f64, abs: f64 },
    #[error("step size underflow at x = {x} (h = {h:e}); coefficients may blow up here")]
    StepUnderflow { x: f64, h: f64 },
    #[error("step budget of {steps} exhausted at x = {x}")]
    MaxSteps { x: f64, steps: usize },
    #[error("non-finite solution at x = {x}")]
    NonFinite { x: f64 },
    #[error("x = {x} lies outside [{a}, {b}]")]
    OutOfInterval { x: f64, a: f64, b: f64 },
    #[error("trace vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rel: DEFAULT_REL_TOL,
            abs: DEFAULT_ABS_TOL,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<(), IntegrationError> {
        let ok = |t: f64| t > 0.0 && t < 1.0;
        if ok(self.rel) && ok(self.abs) {
            Ok(())
        } else {
            Err(IntegrationError::Tolerance {
                rel: self.rel,
                abs: self.abs,
            })
        }
    }
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolation data of one accepted step.
#[derive(Debug, Clone)]
struct DenseStep {
    x0: f64,
    h: f64,
    r: [CMat; 5],
}

impl DenseStep {
    fn eval(&self, x: f64) -> CMat {
        let theta = ((x - self.x0) / self.h).clamp(0.0, 1.0);
        let t1 = 1.0 - theta;
        let s = |v: f64| Complex64::new(v, 0.0);
        let inner = &self.r[3] + &self.r[4] * s(t1);
        let inner = &self.r[2] + inner * s(theta);
        let inner = &self.r[1] + inner * s(t1);
        &self.r[0] + inner * s(theta)
    }
}

/// `Psi(x; lambda)` on the system interval, with dense output.
#[derive(Debug, Clone)]
pub struct FundamentalMatrix {
    lambda: SpectralParameter,
    nodes: Vec<f64>,
    values: Vec<CMat>,
    steps: Vec<DenseStep>,
    error_estimate: f64,
    rejected: usize,
    tolerances: Tolerances,
}

impl FundamentalMatrix {
    pub fn lambda(&self) -> SpectralParameter {
        self.lambda
    }

    /// Accepted step endpoints `a = x_0 < ... < x_K = b`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `Psi(x_k)` at each node.
    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    /// Largest normalized local error estimate over accepted steps (at most 1).
    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tolerances
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn finish(&self) -> f64 {
        *self.nodes.last().expect("at least one node")
    }

    /// `Psi` at the right endpoint.
    pub fn end(&self) -> &CMat {
        self.values.last().expect("at least one node")
    }

    pub fn at(&self, x: f64) -> Result<CMat, IntegrationError> {
        let (a, b) = (self.start(), self.finish());
        if !(x >= a && x <= b) {
            return Err(IntegrationError::OutOfInterval { x, a, b });
        }
        let idx = self.nodes.partition_point(|&n| n < x);
        if idx < self.nodes.len() && self.nodes[idx] == x {
            return Ok(self.values[idx].clone());
        }
        Ok(self.steps[idx - 1].eval(x))
    }

    /// `Y(x) = Psi(x) Y(a)`.
    pub fn trace_at(&self, x: f64, initial: &TraceVector) -> Result<TraceVector, IntegrationError> {
        let dim = self.values[0].nrows();
        if initial.len() != dim {
            return Err(IntegrationError::Dimension {
                expected: dim,
                got: initial.len(),
            });
        }
        Ok(TraceVector::new(self.at(x)? * initial.as_vector()))
    }
}

/// Integrates over the whole system interval.
pub fn fundamental_matrix(
    sys: &ShinZettlSystem,
    lambda: SpectralParameter,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<FundamentalMatrix, IntegrationError> {
    let iv = sys.interval();
    integrate(sys, lambda, iv.a, iv.b, Tolerances { rel: rel_tol, abs: abs_tol })
}

/// Integrates from `x0` (where `Psi = I`) to `x1`, both inside the system interval.
pub fn integrate(
    sys: &ShinZettlSystem,
    lambda: SpectralParameter,
    x0: f64,
    x1: f64,
    tol: Tolerances,
) -> Result<FundamentalMatrix, IntegrationError> {
    tol.validate()?;
    let iv = sys.interval();
    for x in [x0, x1] {
        if !iv.contains(x) {
            return Err(IntegrationError::OutOfInterval { x, a: iv.a, b: iv.b });
        }
    }
    if x0.is_nan() || x1.is_nan() || x0 >= x1 {
        return Err(IntegrationError::OutOfInterval { x: x1, a: x0, b: iv.b });
    }

    let dim = sys.dim();
    let cached = if sys.is_constant() {
        Some(companion_matrix(sys, x0, lambda)?)
    } else {
        None
    };
    let rhs = |x: f64, u: &CMat| -> Result<CMat, IntegrationError> {
        match &cached {
            Some(s) => Ok(s * u),
            None => Ok(companion_matrix(sys, x, lambda)? * u),
        }
    };

    let length = x1 - x0;
    let h_max = length / MIN_STEPS as f64;
    let h_min = 1e-14 * length.max(x0.abs()).max(x1.abs());
    let c = |v: f64| Complex64::new(v, 0.0);

    let mut x = x0;
    let mut y = CMat::identity(dim, dim);
    let mut k1 = rhs(x, &y)?;
    let mut h = initial_step(&y, &k1, tol, h_max);

    let mut out = FundamentalMatrix {
        lambda,
        nodes: vec![x0],
        values: vec![y.clone()],
        steps: Vec::new(),
        error_estimate: 0.0,
        rejected: 0,
        tolerances: tol,
    };

    let mut attempts = 0usize;
    while x < x1 {
        attempts += 1;
        if attempts > MAX_STEPS {
            return Err(IntegrationError::MaxSteps { x, steps: MAX_STEPS });
        }
        if h < h_min {
            return Err(IntegrationError::StepUnderflow { x, h });
        }
        let last = x + h >= x1 || x1 - (x + h) < 1e-3 * h;
        if last {
            h = x1 - x;
        }

        let hc = c(h);
        let k2 = rhs(x + C2 * h, &(&y + &k1 * (hc * A21)))?;
        let k3 = rhs(x + C3 * h, &(&y + (&k1 * c(A31) + &k2 * c(A32)) * hc))?;
        let k4 = rhs(x + C4 * h, &(&y + (&k1 * c(A41) + &k2 * c(A42) + &k3 * c(A43)) * hc))?;
        let k5 = rhs(
            x + C5 * h,
            &(&y + (&k1 * c(A51) + &k2 * c(A52) + &k3 * c(A53) + &k4 * c(A54)) * hc),
        )?;
        let k6 = rhs(
            x + h,
            &(&y + (&k1 * c(A61) + &k2 * c(A62) + &k3 * c(A63) + &k4 * c(A64) + &k5 * c(A65)) * hc),
        )?;
        let y1 = &y + (&k1 * c(A71) + &k3 * c(A73) + &k4 * c(A74) + &k5 * c(A75) + &k6 * c(A76)) * hc;
        let x_new = if last { x1 } else { x + h };
        let k7 = rhs(x_new, &y1)?;

        let err_vec = (&k1 * c(E1) + &k3 * c(E3) + &k4 * c(E4) + &k5 * c(E5) + &k6 * c(E6) + &k7 * c(E7)) * hc;
        let err = error_norm(&err_vec, &y, &y1, tol);
        if !err.is_finite() || y1.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            if h <= h_min {
                return Err(IntegrationError::NonFinite { x });
            }
            h *= 0.2;
            out.rejected += 1;
            continue;
        }

        if err <= 1.0 {
            let r1 = y.clone();
            let r2 = &y1 - &y;
            let r3 = &k1 * hc - &r2;
            let r4 = &r2 - &k7 * hc - &r3;
            let r5 = (&k1 * c(D1) + &k3 * c(D3) + &k4 * c(D4) + &k5 * c(D5) + &k6 * c(D6) + &k7 * c(D7)) * hc;
            out.steps.push(DenseStep {
                x0: x,
                h,
                r: [r1, r2, r3, r4, r5],
            });
            out.error_estimate = out.error_estimate.max(err);
            x = x_new;
            y = y1;
            k1 = k7;
            out.nodes.push(x);
            out.values.push(y.clone());
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(h_max);
        } else {
            out.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(out)
}

fn error_norm(err: &CMat, y0: &CMat, y1: &CMat, tol: Tolerances) -> f64 {
    let mut sum = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let scale = tol.abs + tol.rel * a.norm().max(b.norm());
        sum += (e.norm() / scale).powi(2);
    }
    (sum / err.len() as f64).sqrt()
}

fn initial_step(y: &CMat, f: &CMat, tol: Tolerances, h_max: f64) -> f64 {
    let scale = |z: &Complex64| tol.abs + tol.rel * z.norm();
    let d0: f64 = y.iter().map(|z| (z.norm() / scale(z)).powi(2)).sum::<f64>().sqrt();
    let d1: f64 = f
        .iter()
        .zip(y.iter())
        .map(|(fz, yz)| (fz.norm() / scale(yz)).powi(2))
        .sum::<f64>()
        .sqrt();
    let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    guess.min(h_max).max(h_max * 1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::matfn::MatrixFn;
    use crate::system::{preset_four_coeff, preset_pure, Interval};

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    fn one_coeff() -> MatrixFn {
        MatrixFn::identity(1)
    }

    #[test]
    fn pure_second_order_is_shear() {
        let sys = preset_pure(1, Interval::unit()).unwrap();
        let fm = fundamental_matrix(&sys, zero(), 1e-10, 1e-12).unwrap();
        let want = CMat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0].map(|v| Complex64::new(v, 0.0)));
        assert!(max_abs_diff(fm.end(), &want) < 1e-13);
        assert!(fm.nodes().len() >= 33);
        assert_eq!(fm.values()[0], CMat::identity(2, 2));
    }

    #[test]
    fn hyperbolic_kernel() {
        let one = one_coeff();
        let sys = preset_four_coeff(&one, &one, &one, &MatrixFn::zeros(1), Interval::unit()).unwrap();
        let fm = fundamental_matrix(&sys, zero(), 1e-10, 1e-12).unwrap();
        let (ch, sh) = (1f64.cosh(), 1f64.sinh());
        let want = CMat::from_row_slice(2, 2, &[ch, sh, sh, ch].map(|v| Complex64::new(v, 0.0)));
        assert!(max_abs_diff(fm.end(), &want) < 1e-9);
    }

    #[test]
    fn traces_of_linear_solutions() {
        let sys = preset_pure(1, Interval::unit()).unwrap();
        let fm = fundamental_matrix(&sys, zero(), 1e-10, 1e-12).unwrap();
        let y = fm.trace_at(1.0, &TraceVector::from_real(&[0.0, 1.0])).unwrap();
        assert!((y.as_vector()[0] - 1.0).norm() < 1e-13);
        let y = fm.trace_at(1.0, &TraceVector::from_real(&[1.0, -1.0])).unwrap();
        assert!(y.as_vector()[0].norm() < 1e-13);
        let start = TraceVector::from_real(&[2.0, 3.0]);
        assert_eq!(fm.trace_at(0.0, &start).unwrap(), start);
        let mid = fm.trace_at(0.37, &TraceVector::from_real(&[0.0, 1.0])).unwrap();
        assert!((mid.as_vector()[0] - 0.37).norm() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let sys = preset_pure(1, Interval::unit()).unwrap();
        assert!(matches!(
            fundamental_matrix(&sys, zero(), 0.0, 1e-12),
            Err(IntegrationError::Tolerance { .. })
        ));
        let fm = fundamental_matrix(&sys, zero(), 1e-8, 1e-10).unwrap();
        assert!(matches!(fm.at(1.5), Err(IntegrationError::OutOfInterval { .. })));
        assert!(matches!(
            fm.trace_at(0.5, &TraceVector::zeros(3)),
            Err(IntegrationError::Dimension { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn singular_coefficient_underflows() {
        let p = MatrixFn::scalar_identity(1, "x - 0.5").unwrap();
        let q = MatrixFn::parse_grid(1, 1, &["1/(x-0.5)^2"]).unwrap();
        let z = vec![MatrixFn::zeros(1), p.inverse(), q, MatrixFn::zeros(1)];
        let sys = ShinZettlSystem::new(1, 1, Interval::unit(), one_coeff(), z).unwrap();
        let err = fundamental_matrix(&sys, zero(), 1e-10, 1e-12).unwrap_err();
        match err {
            IntegrationError::StepUnderflow { x, .. } | IntegrationError::NonFinite { x } => {
                assert!((x - 0.5).abs() < 1e-3, "stopped at {x}")
            }
            IntegrationError::System(_) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
