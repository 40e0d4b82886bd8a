//! The JSON report. Complex numbers are `[re, im]`, matrices row-major.

use krein_core::closedform::Field;
use krein_core::spectral::SpectralScanResult;
use krein_core::system::ValidationReport;
use krein_core::CMat;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::Task;
use crate::operator::OperatorInfo;

/// `-0.0` prints as `0.0` so that sign noise does not leak into the bytes.
fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

pub fn complex_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [clean(m[(i, j)].re), clean(m[(i, j)].im)]).collect())
        .collect()
}

/// Exact entries as `"p/q"` strings, floating ones as numbers.
pub fn field_rows<T: Field + std::fmt::Display>(m: &DMatrix<T>) -> serde_json::Value {
    let rows = (0..m.nrows()).map(|i| {
        (0..m.ncols())
            .map(|j| {
                if T::EXACT {
                    serde_json::Value::String(m[(i, j)].to_string())
                } else {
                    serde_json::json!(clean(m[(i, j)].to_f64()))
                }
            })
            .collect::<Vec<_>>()
    });
    serde_json::json!(rows.collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancesUsed {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PositivityStatus {
    Certified,
    NotCertified,
    NotChecked,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaggedMatrix {
    /// `krein`, `candidate` or `friedrichs`.
    pub role: &'static str,
    pub label: &'static str,
    pub positivity: PositivityStatus,
    pub tolerances: TolerancesUsed,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl TaggedMatrix {
    pub fn new(m: &CMat, role: &'static str, label: &'static str, positivity: PositivityStatus, tol: TolerancesUsed) -> Self {
        TaggedMatrix {
            role,
            label,
            positivity,
            tolerances: tol,
            rows: m.nrows(),
            cols: m.ncols(),
            data: complex_rows(m),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FriedrichsMatrices {
    pub a: TaggedMatrix,
    pub b: TaggedMatrix,
}

#[derive(Debug, Clone, Default, Serialize)]
#[allow(non_snake_case)]
pub struct Matrices {
    pub A_K: Option<TaggedMatrix>,
    pub B_K: Option<TaggedMatrix>,
    pub B_K_inv: Option<TaggedMatrix>,
    pub T_K: Option<TaggedMatrix>,
    pub friedrichs: Option<FriedrichsMatrices>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Positivity {
    pub status: PositivityStatus,
    pub lambda_min: Option<f64>,
    /// `[lo, hi]`; `hi` is `null` when no eigenvalue was found below `lambda_max`.
    pub bracket: [Option<f64>; 2],
    pub residual: Option<f64>,
    pub sigma_typical: f64,
    pub lambda_max: f64,
    pub margin: f64,
    pub samples: usize,
}

impl From<&SpectralScanResult> for Positivity {
    fn from(r: &SpectralScanResult) -> Self {
        let finite = |v: f64| v.is_finite().then_some(clean(v));
        Positivity {
            status: if r.certified_strictly_positive {
                PositivityStatus::Certified
            } else {
                PositivityStatus::NotCertified
            },
            lambda_min: r.lambda_min,
            bracket: [finite(r.bracket.0), finite(r.bracket.1)],
            residual: r.residual,
            sigma_typical: r.sigma_typical,
            lambda_max: r.lambda_max,
            margin: r.margin,
            samples: r.scan.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Check {
            name,
            value: clean(value),
            requirement: format!("<= {bound:e}"),
            pass: value <= bound,
        }
    }

    pub fn equals(name: &'static str, value: usize, want: usize) -> Self {
        Check {
            name,
            value: value as f64,
            requirement: format!("== {want}"),
            pass: value == want,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub operator: OperatorInfo,
    pub tasks: Vec<Task>,
    pub tolerances: TolerancesUsed,
    pub validation: Option<ValidationReport>,
    pub positivity: Option<Positivity>,
    pub matrices: Matrices,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<serde_json::Value>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
