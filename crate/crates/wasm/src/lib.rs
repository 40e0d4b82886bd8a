//! Three operations for the browser page, each returning a JSON string.
//!
//! The `*_json` functions are plain Rust so they can be tested natively;
//! the exported wrappers only convert errors.

use krein_core::extension::{build_krein_pair, invert_b, kernel_basis, transfer_matrix};
use krein_core::matfn::MatrixFn;
use krein_core::odeint::{fundamental_matrix, Tolerances};
use krein_core::spectral::{friedrichs_eigenvalues, ScanOptions};
use krein_core::system::{
    preset_by_name, preset_four_coeff, preset_fourth_order, preset_pure, Interval, ShinZettlSystem, TraceVector,
};
use krein_core::{expr::parse, CMat};
use num_complex::Complex64;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const REL_TOL: f64 = 1e-10;
const ABS_TOL: f64 = 1e-12;
const MAX_SAMPLES: usize = 2000;
const MAX_SCAN_STEPS: usize = 2000;

fn endpoint(text: &str) -> Result<f64, String> {
    let e = parse(text).map_err(|e| format!("{text:?}: {e}"))?;
    if !e.is_constant() {
        return Err(format!("{text:?} depends on x"));
    }
    let v = e.eval(0.0).map_err(|e| format!("{text:?}: {e}"))?;
    if v.im != 0.0 || !v.re.is_finite() {
        return Err(format!("{text:?} is not a finite real number"));
    }
    Ok(v.re)
}

/// `pure` (with `order`), `fourth-order`, `four-coeff` with `q` as the only
/// free coefficient, or any catalog name (which ignores the other arguments).
pub fn system(preset: &str, order: u32, q: &str, a: &str, b: &str) -> Result<ShinZettlSystem, String> {
    let interval = || -> Result<Interval, String> { Interval::new(endpoint(a)?, endpoint(b)?).map_err(|e| e.to_string()) };
    let sys = match preset {
        "pure" => {
            if order == 0 || !order.is_multiple_of(2) || order > 16 {
                return Err(format!("order must be even, between 2 and 16; got {order}"));
            }
            preset_pure(order as usize / 2, interval()?)
        }
        "fourth-order" => preset_fourth_order(interval()?),
        "four-coeff" => {
            let one = MatrixFn::identity(1);
            let q = MatrixFn::scalar_identity(1, q).map_err(|e| e.to_string())?;
            preset_four_coeff(&one, &q, &one, &MatrixFn::zeros(1), interval()?)
        }
        other => return preset_by_name(other).ok_or_else(|| format!("unknown preset {other:?}")),
    };
    sys.map_err(|e| e.to_string())
}

fn rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct Transfer {
    block_size: usize,
    half_order: usize,
    interval: [f64; 2],
    A_K: Vec<Vec<[f64; 2]>>,
    B_K: Vec<Vec<[f64; 2]>>,
    B_K_inv: Vec<Vec<[f64; 2]>>,
    T_K: Vec<Vec<[f64; 2]>>,
    gamma_residual: f64,
    symplectic_defect: f64,
}

pub fn transfer_matrices_json(preset: &str, order: u32, q: &str, a: &str, b: &str) -> Result<String, String> {
    let sys = system(preset, order, q, a, b)?;
    let fm = fundamental_matrix(&sys, Complex64::new(0.0, 0.0), REL_TOL, ABS_TOL).map_err(|e| e.to_string())?;
    let basis = kernel_basis(&sys, &fm).map_err(|e| e.to_string())?;
    let pair = build_krein_pair(&basis);
    let b_inv = invert_b(&pair, &basis).map_err(|e| e.to_string())?;
    let t = transfer_matrix(&pair, &b_inv);
    let iv = sys.interval();
    to_json(&Transfer {
        block_size: sys.block_size(),
        half_order: sys.half_order(),
        interval: [iv.a, iv.b],
        A_K: rows(&pair.a),
        B_K: rows(&pair.b),
        B_K_inv: rows(&b_inv),
        T_K: rows(&t),
        gamma_residual: basis.gamma_residual(),
        symplectic_defect: basis.symplectic_relation_defect(),
    })
}

#[derive(Serialize)]
struct Curves {
    x: Vec<f64>,
    /// `curves[k][i]` is the first component of basis function `k + 1` at `x[i]`, as `[re, im]`.
    curves: Vec<Vec<[f64; 2]>>,
}

pub fn kernel_curves_json(preset: &str, order: u32, q: &str, a: &str, b: &str, samples: usize) -> Result<String, String> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(format!("samples must be between 2 and {MAX_SAMPLES}"));
    }
    let sys = system(preset, order, q, a, b)?;
    let fm = fundamental_matrix(&sys, Complex64::new(0.0, 0.0), REL_TOL, ABS_TOL).map_err(|e| e.to_string())?;
    let basis = kernel_basis(&sys, &fm).map_err(|e| e.to_string())?;
    let iv = sys.interval();
    let x: Vec<f64> = (0..samples)
        .map(|i| iv.a + (iv.b - iv.a) * i as f64 / (samples - 1) as f64)
        .collect();
    let mut curves = Vec::with_capacity(sys.dim());
    for col in 0..sys.dim() {
        let start = TraceVector::new(basis.c().column(col).into_owned());
        let mut values = Vec::with_capacity(samples);
        for &xi in &x {
            let y = fm.trace_at(xi, &start).map_err(|e| e.to_string())?;
            let v = y.as_vector()[0];
            values.push([v.re, v.im]);
        }
        curves.push(values);
    }
    to_json(&Curves { x, curves })
}

#[derive(Serialize)]
struct Scan {
    lambda: Vec<f64>,
    sigma_min: Vec<f64>,
    sigma_typical: f64,
    eigenvalues: Vec<f64>,
}

pub fn spectral_scan_json(
    preset: &str,
    order: u32,
    q: &str,
    a: &str,
    b: &str,
    lambda_max: f64,
    steps: usize,
) -> Result<String, String> {
    if !(4..=MAX_SCAN_STEPS).contains(&steps) {
        return Err(format!("steps must be between 4 and {MAX_SCAN_STEPS}"));
    }
    let sys = system(preset, order, q, a, b)?;
    let opts = ScanOptions {
        lambda_max,
        coarse_steps: steps,
        tolerances: Tolerances {
            rel: REL_TOL,
            abs: ABS_TOL,
        },
        ..ScanOptions::default()
    };
    let (roots, scan, typical) = friedrichs_eigenvalues(&sys, &opts, 8).map_err(|e| e.to_string())?;
    to_json(&Scan {
        lambda: scan.iter().map(|s| s.lambda).collect(),
        sigma_min: scan.iter().map(|s| s.sigma_min).collect(),
        sigma_typical: typical,
        eigenvalues: roots.iter().map(|r| r.0).collect(),
    })
}

#[wasm_bindgen(js_name = transferMatrices)]
pub fn transfer_matrices(preset: &str, order: u32, q: &str, a: &str, b: &str) -> Result<String, JsError> {
    transfer_matrices_json(preset, order, q, a, b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = kernelCurves)]
pub fn kernel_curves(preset: &str, order: u32, q: &str, a: &str, b: &str, samples: usize) -> Result<String, JsError> {
    kernel_curves_json(preset, order, q, a, b, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = spectralScan)]
pub fn spectral_scan(
    preset: &str,
    order: u32,
    q: &str,
    a: &str,
    b: &str,
    lambda_max: f64,
    steps: usize,
) -> Result<String, JsError> {
    spectral_scan_json(preset, order, q, a, b, lambda_max, steps).map_err(|e| JsError::new(&e))
}
