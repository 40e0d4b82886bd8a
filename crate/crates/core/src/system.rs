//! Shin–Zettl systems: the coefficient grid `Z`, the weight `W`, the
//! hypothesis checks they must satisfy, and the first-order companion form
//! used by the integrator.
//!
//! Block indices are zero-based throughout: block `(j, k)` of `Z` with
//! `0 <= j, k < 2N` multiplies the `k`-th quasi-derivative in the recursion
//! for the `(j + 1)`-th one.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{hermitian_residual, min_hermitian_eigenvalue, min_singular_value, set_block};
use crate::matfn::{MatrixFn, MatrixFnError};
use crate::CMat;

/// Residual and eigenvalue tolerance for the hypothesis checks.
pub const VALIDATION_TOL: f64 = 1e-10;
/// Default number of Chebyshev sample points.
pub const DEFAULT_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("invalid interval [{a}, {b}]: endpoints must be finite with a < b")]
    Interval { a: f64, b: f64 },
    #[error("malformed system: {0}")]
    Structure(String),
    #[error("coefficient {name} at x = {x}: {source}")]
    Eval {
        name: String,
        x: f64,
        #[source]
        source: MatrixFnError,
    },
    #[error("hypothesis check failed: {0}")]
    Hypothesis(Box<ValidationReport>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self, SystemError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SystemError::Interval { a, b });
        }
        Ok(Interval { a, b })
    }

    pub fn unit() -> Self {
        Interval { a: 0.0, b: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Chebyshev–Lobatto points, endpoints included exactly.
    pub fn chebyshev_points(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![0.5 * (self.a + self.b)],
            _ => {
                let mid = 0.5 * (self.a + self.b);
                let half = 0.5 * self.length();
                let mut pts: Vec<f64> = (0..count)
                    .map(|i| {
                        let theta = std::f64::consts::PI * i as f64 / (count - 1) as f64;
                        (mid - half * theta.cos()).clamp(self.a, self.b)
                    })
                    .collect();
                pts[0] = self.a;
                pts[count - 1] = self.b;
                pts
            }
        }
    }
}

/// Stacked quasi-derivatives `y^[0](x), ..., y^[2N-1](x)`, each block of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceVector(DVector<Complex64>);

impl TraceVector {
    pub fn new(entries: DVector<Complex64>) -> Self {
        TraceVector(entries)
    }

    pub fn from_slice(entries: &[Complex64]) -> Self {
        TraceVector(DVector::from_column_slice(entries))
    }

    pub fn from_real(entries: &[f64]) -> Self {
        TraceVector(DVector::from_iterator(
            entries.len(),
            entries.iter().map(|&v| Complex64::new(v, 0.0)),
        ))
    }

    pub fn zeros(dim: usize) -> Self {
        TraceVector(DVector::zeros(dim))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<Complex64> {
        self.0
    }

    /// Quasi-derivative of order `j` as a length-`m` vector.
    pub fn block(&self, j: usize, m: usize) -> DVector<Complex64> {
        self.0.rows(j * m, m).into_owned()
    }
}

pub type SpectralParameter = Complex64;

/// A regular Shin–Zettl system on a compact interval.
#[derive(Debug, Clone)]
pub struct ShinZettlSystem {
    block_size: usize,
    half_order: usize,
    interval: Interval,
    weight: MatrixFn,
    z: Vec<MatrixFn>,
    constant: bool,
}

impl ShinZettlSystem {
    /// `z` holds the `2N x 2N` grid row-major; every block must be `M x M`.
    pub fn new(
        block_size: usize,
        half_order: usize,
        interval: Interval,
        weight: MatrixFn,
        z: Vec<MatrixFn>,
    ) -> Result<Self, SystemError> {
        if block_size == 0 || half_order == 0 {
            return Err(SystemError::Structure("M and N must be positive".into()));
        }
        let order = 2 * half_order;
        if z.len() != order * order {
            return Err(SystemError::Structure(format!(
                "coefficient grid has {} blocks, expected {}",
                z.len(),
                order * order
            )));
        }
        if weight.rows() != block_size || weight.cols() != block_size {
            return Err(SystemError::Structure(format!(
                "weight is {}x{}, expected {block_size}x{block_size}",
                weight.rows(),
                weight.cols()
            )));
        }
        for (idx, blk) in z.iter().enumerate() {
            if blk.rows() != block_size || blk.cols() != block_size {
                return Err(SystemError::Structure(format!(
                    "block Z({}, {}) is {}x{}, expected {block_size}x{block_size}",
                    idx / order,
                    idx % order,
                    blk.rows(),
                    blk.cols()
                )));
            }
        }
        let constant = weight.is_constant() && z.iter().all(MatrixFn::is_constant);
        Ok(ShinZettlSystem {
            block_size,
            half_order,
            interval,
            weight,
            z,
            constant,
        })
    }

    /// `M`.
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    /// `N`; the differential order is `2N`.
    pub fn half_order(&self) -> usize {
        self.half_order
    }

    pub fn order(&self) -> usize {
        2 * self.half_order
    }

    /// `2MN`, the length of a trace vector.
    pub fn dim(&self) -> usize {
        2 * self.block_size * self.half_order
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn weight(&self) -> &MatrixFn {
        &self.weight
    }

    /// True when no coefficient depends on `x`.
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn z_block(&self, j: usize, k: usize) -> &MatrixFn {
        &self.z[j * self.order() + k]
    }

    pub fn z_block_at(&self, j: usize, k: usize, x: f64) -> Result<CMat, SystemError> {
        self.z_block(j, k).eval(x).map_err(|source| SystemError::Eval {
            name: format!("Z({j}, {k})"),
            x,
            source,
        })
    }

    pub fn weight_at(&self, x: f64) -> Result<CMat, SystemError> {
        self.weight.eval(x).map_err(|source| SystemError::Eval {
            name: "W".into(),
            x,
            source,
        })
    }

    /// The full `2MN x 2MN` matrix `Z(x)`.
    pub fn z_matrix(&self, x: f64) -> Result<CMat, SystemError> {
        let m = self.block_size;
        let order = self.order();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for j in 0..order {
            for k in 0..order {
                let blk = self.z_block(j, k);
                if blk.is_zero() {
                    continue;
                }
                set_block(&mut out, j * m, k * m, &self.z_block_at(j, k, x)?);
            }
        }
        Ok(out)
    }
}

/// `J_{M,n}`: block `(j, k)` is `(-1)^(j+1) I_M` when `j + k = n - 1` (zero-based).
///
/// With `n = 2N` this is the symplectic form of the boundary conditions;
/// with `n = N` it is the half-size matrix used in the block identities.
pub fn build_j(m: usize, n: usize) -> CMat {
    let mut out = DMatrix::zeros(m * n, m * n);
    for j in 0..n {
        let k = n - 1 - j;
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        for d in 0..m {
            out[(j * m + d, k * m + d)] = Complex64::new(sign, 0.0);
        }
    }
    out
}

/// The matrix `S(x; lambda)` with `Y' = S Y` for solutions of `tau y = lambda y`.
pub fn companion_matrix(sys: &ShinZettlSystem, x: f64, lambda: SpectralParameter) -> Result<CMat, SystemError> {
    let m = sys.block_size();
    let order = sys.order();
    let mut out = DMatrix::zeros(sys.dim(), sys.dim());
    for j in 0..order {
        let last = if j + 1 < order { j + 1 } else { order - 1 };
        for k in 0..=last {
            let blk = sys.z_block(j, k);
            if blk.is_zero() {
                continue;
            }
            set_block(&mut out, j * m, k * m, &sys.z_block_at(j, k, x)?);
        }
    }
    if lambda != Complex64::new(0.0, 0.0) {
        let sign = if sys.half_order().is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = sys.weight_at(x)? * (lambda * sign);
        let row = (order - 1) * m;
        let mut view = out.view_mut((row, 0), (m, m));
        view += w;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Superdiagonal blocks invertible.
    A1Invertible,
    /// Blocks above the superdiagonal vanish.
    A2Zero,
    /// `Z = J Z* J`.
    A3Symmetry,
    WeightHermitian,
    WeightPositive,
    LeadingHermitian,
    LeadingPositive,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A1Invertible => "(A1) superdiagonal invertible",
            Condition::A2Zero => "(A2) zero above superdiagonal",
            Condition::A3Symmetry => "(A3) Z = J Z* J",
            Condition::WeightHermitian => "W Hermitian",
            Condition::WeightPositive => "W positive definite",
            Condition::LeadingHermitian => "leading coefficient Hermitian",
            Condition::LeadingPositive => "leading coefficient positive definite",
        };
        f.write_str(s)
    }
}

/// Worst value of one condition over the sample grid.
///
/// For residual conditions `worst` is the largest residual norm; for the
/// invertibility and positivity conditions it is the smallest singular value
/// or eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub condition: Condition,
    pub worst: f64,
    pub at: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub checks: Vec<ConditionCheck>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn check(&self, condition: Condition) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<String> = self
            .failures()
            .map(|c| format!("{} (worst {:.3e} at x = {})", c.condition, c.worst, c.at))
            .collect();
        if failed.is_empty() {
            write!(f, "all conditions hold on {} samples", self.samples)
        } else {
            write!(f, "{}", failed.join("; "))
        }
    }
}

struct Tracker {
    condition: Condition,
    worst: f64,
    at: f64,
    minimize: bool,
}

impl Tracker {
    fn max(condition: Condition) -> Self {
        Tracker {
            condition,
            worst: 0.0,
            at: f64::NAN,
            minimize: false,
        }
    }

    fn min(condition: Condition) -> Self {
        Tracker {
            condition,
            worst: f64::INFINITY,
            at: f64::NAN,
            minimize: true,
        }
    }

    fn update(&mut self, value: f64, x: f64) {
        let worse = if self.minimize {
            value < self.worst || value.is_nan()
        } else {
            value > self.worst || value.is_nan()
        };
        if worse || self.at.is_nan() {
            if worse {
                self.worst = value;
            }
            self.at = x;
        }
    }

    fn finish(self) -> ConditionCheck {
        let pass = if self.minimize {
            self.worst >= VALIDATION_TOL
        } else {
            self.worst <= VALIDATION_TOL
        };
        ConditionCheck {
            condition: self.condition,
            worst: self.worst,
            at: self.at,
            pass,
        }
    }
}

/// Samples every hypothesis at `samples` Chebyshev points of the interval.
pub fn validate_hypothesis(sys: &ShinZettlSystem, samples: usize) -> Result<ValidationReport, SystemError> {
    let samples = samples.max(1);
    let m = sys.block_size();
    let n = sys.half_order();
    let order = sys.order();
    let j_full = build_j(m, order);

    let mut a1 = Tracker::min(Condition::A1Invertible);
    let mut a2 = Tracker::max(Condition::A2Zero);
    let mut a3 = Tracker::max(Condition::A3Symmetry);
    let mut w_herm = Tracker::max(Condition::WeightHermitian);
    let mut w_pos = Tracker::min(Condition::WeightPositive);
    let mut lead_herm = Tracker::max(Condition::LeadingHermitian);
    let mut lead_pos = Tracker::min(Condition::LeadingPositive);

    for x in sys.interval().chebyshev_points(samples) {
        let z = sys.z_matrix(x)?;
        for j in 0..order - 1 {
            let blk = crate::linalg::block(&z, j * m, (j + 1) * m, m, m);
            a1.update(min_singular_value(&blk), x);
        }
        let mut above = 0.0_f64;
        for j in 0..order {
            for k in (j + 2)..order {
                above = above.max(crate::linalg::block(&z, j * m, k * m, m, m).norm());
            }
        }
        a2.update(above, x);
        let mirrored = &j_full * z.adjoint() * &j_full;
        a3.update((&z - mirrored).norm(), x);

        let w = sys.weight_at(x)?;
        w_herm.update(hermitian_residual(&w), x);
        w_pos.update(min_hermitian_eigenvalue(&w), x);

        let lead = crate::linalg::block(&z, (n - 1) * m, n * m, m, m);
        lead_herm.update(hermitian_residual(&lead), x);
        lead_pos.update(min_hermitian_eigenvalue(&lead), x);
    }

    let checks: Vec<ConditionCheck> = [a1, a2, a3, w_herm, w_pos, lead_herm, lead_pos]
        .into_iter()
        .map(Tracker::finish)
        .collect();
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { samples, checks, pass })
}

fn validated(sys: ShinZettlSystem) -> Result<ShinZettlSystem, SystemError> {
    let report = validate_hypothesis(&sys, DEFAULT_SAMPLES)?;
    if report.pass {
        Ok(sys)
    } else {
        Err(SystemError::Hypothesis(Box::new(report)))
    }
}

/// `(-1)^N y^(2N)` with `W = 1`: ones on the superdiagonal of `Z`.
pub fn preset_pure(half_order: usize, interval: Interval) -> Result<ShinZettlSystem, SystemError> {
    let order = 2 * half_order;
    let mut z = vec![MatrixFn::zeros(1); order * order];
    for j in 0..order.saturating_sub(1) {
        z[j * order + j + 1] = MatrixFn::identity(1);
    }
    validated(ShinZettlSystem::new(1, half_order, interval, MatrixFn::identity(1), z)?)
}

/// `y'''' + y` with `W = 1`.
pub fn preset_fourth_order(interval: Interval) -> Result<ShinZettlSystem, SystemError> {
    let mut z = vec![MatrixFn::zeros(1); 16];
    z[1] = MatrixFn::identity(1);
    z[4 + 2] = MatrixFn::identity(1);
    z[8 + 3] = MatrixFn::identity(1);
    z[12] = MatrixFn::constant(&CMat::from_element(1, 1, Complex64::new(-1.0, 0.0)));
    validated(ShinZettlSystem::new(1, 2, interval, MatrixFn::identity(1), z)?)
}

/// The interval on which the fourth-order example has its closed-form answer.
pub fn fourth_order_reference_interval() -> Interval {
    Interval {
        a: 0.0,
        b: std::f64::consts::SQRT_2 * std::f64::consts::PI,
    }
}

/// `r^{-1} [ -(p (y' + s y))' + s* p (y' + s y) + q y ]`, i.e.
/// `Z = [[-s, p^{-1}], [q, s*]]` and `W = r`.
pub fn preset_four_coeff(
    p: &MatrixFn,
    q: &MatrixFn,
    r: &MatrixFn,
    s: &MatrixFn,
    interval: Interval,
) -> Result<ShinZettlSystem, SystemError> {
    let m = p.rows();
    for (name, f) in [("p", p), ("q", q), ("r", r), ("s", s)] {
        if f.rows() != m || f.cols() != m {
            return Err(SystemError::Structure(format!(
                "coefficient {name} is {}x{}, expected {m}x{m}",
                f.rows(),
                f.cols()
            )));
        }
    }
    let z = vec![s.neg(), p.inverse(), q.clone(), s.adjoint()];
    validated(ShinZettlSystem::new(m, 1, interval, r.clone(), z)?)
}

/// Named systems used across tests, the CLI and the demo: the pure operators
/// of order 2 to 8 on `[0, 1]`, `y'''' + y` on its reference interval, the
/// constant four-coefficient operator `-y'' + y`, a variable-coefficient
/// scalar one and a `2 x 2` matrix one.
pub fn preset_catalog() -> Vec<(String, ShinZettlSystem)> {
    let unit = Interval::unit();
    let scalar = |t: &str| MatrixFn::scalar_identity(1, t).expect("preset expression");
    let grid2 = |t: [&str; 4]| MatrixFn::parse_grid(2, 2, &t).expect("preset expression");
    let mut out = Vec::new();
    for n in 1..=4 {
        out.push((format!("pure-{}", 2 * n), preset_pure(n, unit).expect("pure preset")));
    }
    out.push((
        "fourth-order".into(),
        preset_fourth_order(fourth_order_reference_interval()).expect("fourth-order preset"),
    ));
    out.push((
        "four-coeff".into(),
        preset_four_coeff(&scalar("1"), &scalar("1"), &scalar("1"), &scalar("0"), unit).expect("four-coeff preset"),
    ));
    out.push((
        "four-coeff-variable".into(),
        preset_four_coeff(
            &scalar("1 + x"),
            &scalar("2 + sin(3*x)"),
            &scalar("1 + x^2"),
            &scalar("0.5*i*x"),
            Interval { a: 0.0, b: 2.0 },
        )
        .expect("variable four-coeff preset"),
    ));
    out.push((
        "matrix-2x2".into(),
        preset_four_coeff(
            &grid2(["2", "i", "-i", "2 + x"]),
            &grid2(["1", "0.5*x", "0.5*x", "3"]),
            &grid2(["1", "0", "0", "1 + x"]),
            &grid2(["0", "0.25", "0", "0"]),
            unit,
        )
        .expect("matrix preset"),
    ));
    out
}

/// Looks up a catalog entry by name.
pub fn preset_by_name(name: &str) -> Option<ShinZettlSystem> {
    preset_catalog().into_iter().find(|(n, _)| n == name).map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;

    fn unit() -> Interval {
        Interval::unit()
    }

    fn scalar(text: &str) -> MatrixFn {
        MatrixFn::scalar_identity(1, text).unwrap()
    }

    #[test]
    fn interval_rejects_bad_endpoints() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
    }

    #[test]
    fn chebyshev_points_cover_endpoints() {
        let pts = Interval::new(-1.0, 3.0).unwrap().chebyshev_points(9);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], -1.0);
        assert_eq!(pts[8], 3.0);
        assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn j_small_cases() {
        let j = build_j(1, 2);
        assert_eq!(j, real(&DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])));
        assert_eq!(build_j(1, 1), real(&DMatrix::from_row_slice(1, 1, &[-1.0])));
    }

    #[test]
    fn half_size_j_inverse_relation() {
        for m in 1..=3 {
            for n in 1..=6 {
                let j = build_j(m, n);
                let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
                let expected = CMat::identity(m * n, m * n) * Complex64::new(sign, 0.0);
                assert_eq!(&j * &j, expected, "M={m} N={n}");
                let inv = j.clone().try_inverse().unwrap();
                assert!((inv - &j * Complex64::new(sign, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_preset_validates_exactly() {
        for n in 1..=5 {
            let sys = preset_pure(n, unit()).unwrap();
            let report = validate_hypothesis(&sys, 33).unwrap();
            assert!(report.pass);
            for cond in [Condition::A2Zero, Condition::A3Symmetry, Condition::WeightHermitian] {
                assert_eq!(report.check(cond).unwrap().worst, 0.0, "N={n} {cond}");
            }
        }
    }

    #[test]
    fn pure_preset_shape() {
        let sys = preset_pure(1, unit()).unwrap();
        assert_eq!((sys.block_size(), sys.half_order()), (1, 1));
        assert_eq!(
            sys.z_matrix(0.3).unwrap(),
            real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]))
        );
        assert_eq!(sys.weight_at(0.3).unwrap(), CMat::identity(1, 1));
        assert!(sys.is_constant());
    }

    #[test]
    fn zero_superdiagonal_fails_a1() {
        let z = vec![MatrixFn::zeros(1); 4];
        let sys = ShinZettlSystem::new(1, 1, unit(), MatrixFn::identity(1), z).unwrap();
        let report = validate_hypothesis(&sys, 17).unwrap();
        assert!(!report.pass);
        assert!(!report.check(Condition::A1Invertible).unwrap().pass);
    }

    #[test]
    fn four_coeff_unit_case() {
        let one = scalar("1");
        let sys = preset_four_coeff(&one, &one, &one, &scalar("0"), unit()).unwrap();
        assert_eq!(
            sys.z_matrix(0.5).unwrap(),
            real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))
        );
        assert!(validate_hypothesis(&sys, DEFAULT_SAMPLES).unwrap().pass);
    }

    #[test]
    fn four_coeff_rejects_non_hermitian_q() {
        let one = scalar("1");
        let err = preset_four_coeff(&one, &scalar("1 + i"), &one, &scalar("0"), unit()).unwrap_err();
        match err {
            SystemError::Hypothesis(report) => assert!(!report.check(Condition::A3Symmetry).unwrap().pass),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn four_coeff_rejects_indefinite_weight() {
        let one = scalar("1");
        let err = preset_four_coeff(&one, &one, &scalar("x - 0.5"), &scalar("0"), unit()).unwrap_err();
        assert!(matches!(err, SystemError::Hypothesis(_)));
    }

    #[test]
    fn four_coeff_variable_matrix_coefficients() {
        let p = MatrixFn::parse_grid(2, 2, &["2 + x", "i*x", "-i*x", "3"]).unwrap();
        let q = MatrixFn::parse_grid(2, 2, &["1", "x", "x", "2"]).unwrap();
        let r = MatrixFn::parse_grid(2, 2, &["1 + x^2", "0", "0", "1"]).unwrap();
        let s = MatrixFn::parse_grid(2, 2, &["x", "1", "0", "i"]).unwrap();
        let sys = preset_four_coeff(&p, &q, &r, &s, unit()).unwrap();
        assert!(!sys.is_constant());
        let report = validate_hypothesis(&sys, DEFAULT_SAMPLES).unwrap();
        assert!(report.check(Condition::A3Symmetry).unwrap().worst <= 1e-12);
    }

    #[test]
    fn fourth_order_companion() {
        let sys = preset_fourth_order(fourth_order_reference_interval()).unwrap();
        let s = companion_matrix(&sys, 1.0, Complex64::new(0.0, 0.0)).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected[(0, 1)] = 1.0;
        expected[(1, 2)] = 1.0;
        expected[(2, 3)] = 1.0;
        expected[(3, 0)] = -1.0;
        assert_eq!(s, real(&expected));
    }

    #[test]
    fn pure_companion_with_lambda() {
        let sys = preset_pure(1, unit()).unwrap();
        let lam = Complex64::new(2.5, -1.0);
        let s = companion_matrix(&sys, 0.2, lam).unwrap();
        assert_eq!(s[(0, 1)], Complex64::new(1.0, 0.0));
        assert_eq!(s[(1, 0)], -lam);
        assert_eq!(s[(0, 0)], Complex64::new(0.0, 0.0));
        let s0 = companion_matrix(&sys, 0.2, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(s0, real(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])));
    }

    #[test]
    fn fourth_order_lambda_sign() {
        // N = 2: y^[4] = +lambda W y.
        let sys = preset_fourth_order(unit()).unwrap();
        let s = companion_matrix(&sys, 0.0, Complex64::new(3.0, 0.0)).unwrap();
        assert_eq!(s[(3, 0)], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn companion_zero_blocks_follow_structure() {
        let systems = vec![
            preset_pure(3, unit()).unwrap(),
            preset_fourth_order(unit()).unwrap(),
            preset_four_coeff(&scalar("1"), &scalar("1"), &scalar("1"), &scalar("0"), unit()).unwrap(),
        ];
        for sys in systems {
            let m = sys.block_size();
            let order = sys.order();
            for x in sys.interval().chebyshev_points(9) {
                let s = companion_matrix(&sys, x, Complex64::new(0.0, 0.0)).unwrap();
                for j in 0..order {
                    for k in (j + 2)..order {
                        let blk = crate::linalg::block(&s, j * m, k * m, m, m);
                        assert!(blk.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
                    }
                }
            }
        }
    }

    #[test]
    fn structural_errors() {
        let z = vec![MatrixFn::zeros(1); 3];
        assert!(matches!(
            ShinZettlSystem::new(1, 1, unit(), MatrixFn::identity(1), z),
            Err(SystemError::Structure(_))
        ));
        let z = vec![MatrixFn::zeros(2); 4];
        assert!(matches!(
            ShinZettlSystem::new(1, 1, unit(), MatrixFn::identity(1), z),
            Err(SystemError::Structure(_))
        ));
    }

    #[test]
    fn evaluation_failure_is_reported() {
        let z = vec![
            MatrixFn::zeros(1),
            MatrixFn::scalar_identity(1, "1/x").unwrap(),
            MatrixFn::zeros(1),
            MatrixFn::zeros(1),
        ];
        let sys = ShinZettlSystem::new(1, 1, unit(), MatrixFn::identity(1), z).unwrap();
        let err = validate_hypothesis(&sys, 3).unwrap_err();
        match err {
            SystemError::Eval { name, x, .. } => {
                assert_eq!(name, "Z(0, 1)");
                assert_eq!(x, 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }
}
