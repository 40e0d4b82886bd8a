//! Lowest eigenvalue of the Friedrichs extension.
//!
//! A real `lambda` is a Friedrichs eigenvalue iff some solution of
//! `tau y = lambda y` has vanishing Dirichlet-type data at both ends, i.e.
//! iff `Lambda(lambda)` is singular. The scan samples `sigma_min(Lambda)`,
//! refines every local dip by golden-section search and accepts the dip as
//! an eigenvalue when the refined value is negligible against the median of
//! the scan.
//!
//! A scan that finds nothing certifies "no eigenvalue in the scanned range";
//! it is not a proof of strict positivity beyond `lambda_max`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::extension::lambda_matrix;
use crate::linalg::min_singular_value;
use crate::odeint::{fundamental_matrix, IntegrationError, Tolerances};
use crate::system::ShinZettlSystem;

/// Default positivity margin for the certificate.
pub const POSITIVITY_MARGIN: f64 = 1e-8;
/// A dip is a root when its refined value is below this fraction of the median.
pub const ROOT_RATIO: f64 = 1e-7;
pub const DEFAULT_COARSE_STEPS: usize = 200;
pub const MAX_REFINE_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("lambda_max must be positive and finite, got {0}")]
    Range(f64),
    #[error("at least 4 coarse steps are required, got {0}")]
    Steps(usize),
    #[error("refinement did not converge in {iterations} iterations near lambda = {lambda}")]
    Budget { lambda: f64, iterations: usize },
    #[error("sigma_min is not finite at lambda = {lambda}")]
    NonFinite { lambda: f64 },
    #[error("thread pool: {0}")]
    Threads(String),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub lambda_max: f64,
    pub coarse_steps: usize,
    /// Also scan `[-negative_fraction * lambda_max, 0)` so that negative eigenvalues are caught.
    pub negative_fraction: f64,
    /// Worker threads for the coarse scan; `None` uses the global pool.
    pub threads: Option<usize>,
    pub tolerances: Tolerances,
    pub margin: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            lambda_max: 1000.0,
            coarse_steps: DEFAULT_COARSE_STEPS,
            negative_fraction: 0.1,
            threads: None,
            tolerances: Tolerances::default(),
            margin: POSITIVITY_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSample {
    pub lambda: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralScanResult {
    /// `None` when no eigenvalue lies in the scanned range.
    pub lambda_min: Option<f64>,
    /// Interval known to contain the lowest eigenvalue; `(lambda_max, inf)` when none was found.
    pub bracket: (f64, f64),
    /// `sigma_min(Lambda)` at the refined root.
    pub residual: Option<f64>,
    /// Median of the coarse scan, the scale against which dips are judged.
    pub sigma_typical: f64,
    pub scan: Vec<ScanSample>,
    pub lambda_max: f64,
    pub margin: f64,
    pub certified_strictly_positive: bool,
}

/// `sigma_min(Lambda(lambda))`.
pub fn friedrichs_char_value(sys: &ShinZettlSystem, lambda: f64, tol: Tolerances) -> Result<f64, SpectralError> {
    let fm = fundamental_matrix(sys, Complex64::new(lambda, 0.0), tol.rel, tol.abs)?;
    let s = min_singular_value(&lambda_matrix(sys, &fm));
    if s.is_finite() {
        Ok(s)
    } else {
        Err(SpectralError::NonFinite { lambda })
    }
}

fn coarse_grid(opts: &ScanOptions) -> Vec<f64> {
    let n = opts.coarse_steps;
    let neg = (n / 2).max(1);
    let lo = -opts.negative_fraction * opts.lambda_max;
    let mut grid = Vec::with_capacity(n + neg + 1);
    if lo < 0.0 {
        for i in 0..neg {
            grid.push(lo * (1.0 - i as f64 / neg as f64));
        }
    }
    // Quadratic spacing puts more samples near 0, where the lowest eigenvalue is expected.
    for i in 0..=n {
        let t = i as f64 / n as f64;
        grid.push(opts.lambda_max * t * t);
    }
    grid
}

fn evaluate_all(sys: &ShinZettlSystem, grid: &[f64], opts: &ScanOptions) -> Result<Vec<f64>, SpectralError> {
    let eval = |&l: &f64| friedrichs_char_value(sys, l, opts.tolerances);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || grid.par_iter().map(eval).collect::<Result<Vec<_>, _>>();
        match opts.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| SpectralError::Threads(e.to_string()))?
                .install(run),
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        grid.iter().map(eval).collect()
    }
}

fn golden_section(
    sys: &ShinZettlSystem,
    mut lo: f64,
    mut hi: f64,
    tol: Tolerances,
) -> Result<(f64, f64), SpectralError> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |l: f64| friedrichs_char_value(sys, l, tol);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..MAX_REFINE_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-9 * mid.abs().max(1.0) {
            let (x, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            return Ok((x, v));
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Err(SpectralError::Budget {
        lambda: 0.5 * (lo + hi),
        iterations: MAX_REFINE_ITERATIONS,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Scans upward and returns up to `max_roots` confirmed eigenvalues, with
/// their brackets and residuals, plus the coarse scan and its median.
#[allow(clippy::type_complexity)]
pub fn friedrichs_eigenvalues(
    sys: &ShinZettlSystem,
    opts: &ScanOptions,
    max_roots: usize,
) -> Result<(Vec<(f64, (f64, f64), f64)>, Vec<ScanSample>, f64), SpectralError> {
    if !(opts.lambda_max.is_finite() && opts.lambda_max > 0.0) {
        return Err(SpectralError::Range(opts.lambda_max));
    }
    if opts.coarse_steps < 4 {
        return Err(SpectralError::Steps(opts.coarse_steps));
    }
    let grid = coarse_grid(opts);
    let sigma = evaluate_all(sys, &grid, opts)?;
    let typical = median(&sigma);
    let scan: Vec<ScanSample> = grid
        .iter()
        .zip(&sigma)
        .map(|(&lambda, &sigma_min)| ScanSample { lambda, sigma_min })
        .collect();

    let mut roots = Vec::new();
    let last = grid.len() - 1;
    for i in 0..=last {
        if roots.len() >= max_roots {
            break;
        }
        let left_ok = i == 0 || sigma[i] <= sigma[i - 1];
        let right_ok = i == last || sigma[i] < sigma[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(last)];
        let (lambda, value) = golden_section(sys, lo, hi, opts.tolerances)?;
        if value <= ROOT_RATIO * typical {
            roots.push((lambda, (lo, hi), value));
        }
    }
    Ok((roots, scan, typical))
}

/// Locates the lowest Friedrichs eigenvalue in `[-negative_fraction * lambda_max, lambda_max]`.
pub fn lowest_friedrichs_eigenvalue(sys: &ShinZettlSystem, opts: &ScanOptions) -> Result<SpectralScanResult, SpectralError> {
    let (roots, scan, sigma_typical) = friedrichs_eigenvalues(sys, opts, 1)?;
    let result = match roots.first() {
        Some(&(lambda, bracket, residual)) => SpectralScanResult {
            lambda_min: Some(lambda),
            bracket,
            residual: Some(residual),
            sigma_typical,
            scan,
            lambda_max: opts.lambda_max,
            margin: opts.margin,
            certified_strictly_positive: lambda > opts.margin,
        },
        None => SpectralScanResult {
            lambda_min: None,
            bracket: (opts.lambda_max, f64::INFINITY),
            residual: None,
            sigma_typical,
            scan,
            lambda_max: opts.lambda_max,
            margin: opts.margin,
            certified_strictly_positive: true,
        },
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{preset_pure, Interval};
    use std::f64::consts::PI;

    fn pure(n: usize, b: f64) -> ShinZettlSystem {
        preset_pure(n, Interval::new(0.0, b).unwrap()).unwrap()
    }

    #[test]
    fn characteristic_value_vanishes_at_dirichlet_eigenvalue() {
        let sys = pure(1, PI);
        let tol = Tolerances::default();
        assert!(friedrichs_char_value(&sys, 1.0, tol).unwrap() < 1e-9);
        assert!(friedrichs_char_value(&sys, 0.5, tol).unwrap() > 1e-2);
    }

    #[test]
    fn lowest_dirichlet_eigenvalue() {
        let opts = ScanOptions {
            lambda_max: 50.0,
            ..ScanOptions::default()
        };
        let r = lowest_friedrichs_eigenvalue(&pure(1, PI), &opts).unwrap();
        let l = r.lambda_min.unwrap();
        assert!((l - 1.0).abs() < 1e-6, "{l}");
        assert!(r.bracket.0 < l && l < r.bracket.1);
        assert!(r.certified_strictly_positive);
        assert!(r.scan.iter().all(|s| s.sigma_min.is_finite()));
    }

    #[test]
    fn reports_absence_below_bound() {
        let opts = ScanOptions {
            lambda_max: 5.0,
            coarse_steps: 40,
            ..ScanOptions::default()
        };
        let r = lowest_friedrichs_eigenvalue(&pure(1, 1.0), &opts).unwrap();
        assert_eq!(r.lambda_min, None);
        assert_eq!(r.bracket.0, 5.0);
        assert!(r.certified_strictly_positive);
    }

    #[test]
    fn rejects_bad_options() {
        let sys = pure(1, 1.0);
        let bad = ScanOptions {
            lambda_max: -1.0,
            ..ScanOptions::default()
        };
        assert!(matches!(lowest_friedrichs_eigenvalue(&sys, &bad), Err(SpectralError::Range(_))));
        let bad = ScanOptions {
            coarse_steps: 2,
            ..ScanOptions::default()
        };
        assert!(matches!(lowest_friedrichs_eigenvalue(&sys, &bad), Err(SpectralError::Steps(2))));
    }
}
