//! Runs the requested tasks in order: validate, spectrum, krein,
//! friedrichs, closed-form, verify-all.

use krein_core::closedform::{
    basis_polynomials, krein_matrices, lambda_inverse, phi_blocks, toeplitz_tk, verify_factorization, Field,
    Rational,
};
use krein_core::extension::{
    build_krein_pair, friedrichs_pair, invert_b, kernel_basis, membership, relative_primeness, transfer_matrix,
    verify_self_adjoint, BoundaryPair, KernelBasis,
};
use krein_core::linalg::max_abs_diff;
use krein_core::odeint::{fundamental_matrix, FundamentalMatrix};
use krein_core::spectral::{lowest_friedrichs_eigenvalue, ScanOptions};
use krein_core::system::{validate_hypothesis, ShinZettlSystem, TraceVector, DEFAULT_SAMPLES};
use krein_core::CMat;
use num_bigint::BigInt;
use num_complex::Complex64;
use serde_json::json;

use crate::config::{JobConfig, Task};
use crate::operator::{build, BuildError, Built};
use crate::report::{
    field_rows, Check, ErrorInfo, FriedrichsMatrices, Matrices, Positivity, PositivityStatus, Report, TaggedMatrix,
    TolerancesUsed,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

const GAMMA_TOL: f64 = 1e-9;
const SYMPLECTIC_TOL: f64 = 1e-8;
const BRACKET_TOL: f64 = 1e-8;
const INVERSE_TOL: f64 = 1e-9;
const MEMBERSHIP_TOL: f64 = 1e-9;
const TRANSFER_TOL: f64 = 1e-8;

pub struct Outcome {
    pub report: Option<Report>,
    pub code: u8,
    pub message: Option<String>,
}

/// Rational value of a decimal or fraction literal such as `-3/2` or `0.125`.
pub fn rational_literal(text: &str) -> Option<Rational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        let (n, d) = (n.trim(), d.trim());
        if !digits(n) || !digits(d) {
            return None;
        }
        let d: BigInt = d.parse().ok()?;
        if d == BigInt::from(0) {
            return None;
        }
        Rational::new(n.parse().ok()?, d)
    } else {
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        let int_ok = digits(int) || (int.is_empty() && digits(frac));
        if !int_ok || !(frac.is_empty() || digits(frac)) {
            return None;
        }
        let whole: BigInt = format!("0{int}{frac}").parse().ok()?;
        Rational::new(whole, BigInt::from(10u32).pow(frac.len() as u32))
    };
    Some(if neg { -value } else { value })
}

struct KreinData {
    fm: FundamentalMatrix,
    basis: KernelBasis,
    pair: BoundaryPair,
    b_inv: CMat,
    t: CMat,
}

fn krein_data(sys: &ShinZettlSystem, job: &JobConfig) -> Result<KreinData, String> {
    let tol = job.tolerances;
    let fm = fundamental_matrix(sys, Complex64::new(0.0, 0.0), tol.rel, tol.abs).map_err(|e| e.to_string())?;
    let basis = kernel_basis(sys, &fm).map_err(|e| e.to_string())?;
    let pair = build_krein_pair(&basis);
    let b_inv = invert_b(&pair, &basis).map_err(|e| e.to_string())?;
    let t = transfer_matrix(&pair, &b_inv);
    Ok(KreinData {
        fm,
        basis,
        pair,
        b_inv,
        t,
    })
}

fn closed_form_section<T: Field + std::fmt::Display>(n: usize, h: &T, length_text: String) -> serde_json::Value {
    let blocks = phi_blocks(n, h);
    let (a, b) = krein_matrices(&blocks);
    let fact = verify_factorization(n, h);
    let unit = basis_polynomials::<T>(n);
    json!({
        "exact": T::EXACT,
        "half_order": n,
        "length": length_text,
        "T_K": field_rows(&toeplitz_tk(n, h)),
        "A_K": field_rows(&a),
        "B_K": field_rows(&b),
        "phi": {
            "phi0_a": field_rows(&blocks.phi0_a),
            "phi0_b": field_rows(&blocks.phi0_b),
            "phiN_a": field_rows(&blocks.phin_a),
            "phiN_b": field_rows(&blocks.phin_b),
        },
        "unit_interval": {
            "lambda_inverse": field_rows(&lambda_inverse::<T>(n)),
            "basis_coefficients": field_rows(&unit.coeffs),
        },
        "factorization": fact,
    })
}

fn verify_checks(built: &Built, k: &KreinData, fried: &BoundaryPair, checks: &mut Vec<Check>) -> Result<(), String> {
    let sys = &built.system;
    let dim = sys.dim();
    checks.push(Check::at_most("gamma_reconstruction", k.basis.gamma_residual(), GAMMA_TOL));
    checks.push(Check::at_most(
        "symplectic_relations",
        k.basis.symplectic_relation_defect(),
        SYMPLECTIC_TOL,
    ));
    let drift = k.basis.bracket_constancy(&k.fm).map_err(|e| e.to_string())?;
    checks.push(Check::at_most("bracket_constancy", drift, BRACKET_TOL));
    let scale = (k.b_inv.norm() * k.pair.b.norm()).max(1.0);
    let inv = max_abs_diff(&(&k.b_inv * &k.pair.b), &CMat::identity(dim, dim)) / scale;
    checks.push(Check::at_most("structured_inverse", inv, INVERSE_TOL));
    let tscale = k.t.norm().max(1.0);
    let carried = max_abs_diff(&(&k.t * k.basis.c()), k.basis.eb()) / tscale;
    checks.push(Check::at_most("transfer_maps_kernel_traces", carried, TRANSFER_TOL));

    let mut worst: f64 = 0.0;
    for col in 0..dim {
        let ya = TraceVector::new(k.basis.c().column(col).into_owned());
        let yb = TraceVector::new(k.basis.eb().column(col).into_owned());
        let m = membership(&k.pair, &ya, &yb, MEMBERSHIP_TOL).map_err(|e| e.to_string())?;
        worst = worst.max(m.residual);
    }
    checks.push(Check::at_most("kernel_in_krein_domain", worst, MEMBERSHIP_TOL));

    for (name, pair) in [("krein_self_adjoint", &k.pair), ("friedrichs_self_adjoint", fried)] {
        let r = verify_self_adjoint(pair);
        checks.push(Check::at_most(name, r.symplectic_defect, r.tolerance));
        checks.push(Check::equals(
            if name.starts_with("krein") {
                "krein_rank"
            } else {
                "friedrichs_rank"
            },
            r.rank_ab,
            dim,
        ));
    }
    let kf = relative_primeness(&k.pair, fried).map_err(|e| e.to_string())?;
    checks.push(Check::equals("krein_friedrichs_common_nullity", kf.common_nullity, 0));
    let kk = relative_primeness(&k.pair, &k.pair).map_err(|e| e.to_string())?;
    checks.push(Check::equals("krein_krein_common_nullity", kk.common_nullity, dim));

    if built.pure {
        let n = sys.half_order();
        let h = sys.interval().length();
        let exact = toeplitz_tk::<f64>(n, &h).map(|v| Complex64::new(v, 0.0));
        let dev = max_abs_diff(&k.t, &exact) / exact.norm().max(1.0);
        checks.push(Check::at_most("closed_form_transfer_matrix", dev, TRANSFER_TOL));
    }
    Ok(())
}

pub fn run(job: &JobConfig) -> Outcome {
    let built = match build(&job.operator) {
        Ok(b) => Some(b),
        Err(BuildError::Config(msg)) => {
            return Outcome {
                report: None,
                code: EXIT_CONFIG,
                message: Some(msg),
            }
        }
        Err(BuildError::Hypothesis(report)) => {
            return Outcome {
                report: None,
                code: EXIT_VALIDATION,
                message: Some(format!("hypothesis check failed: {report}")),
            }
        }
    };
    let built = built.expect("built above");
    let wants = |t: Task| job.tasks.contains(&t);
    if wants(Task::ClosedForm) && !built.pure {
        return Outcome {
            report: None,
            code: EXIT_CONFIG,
            message: Some("closed-form needs a pure preset (pure or pure-2N)".into()),
        };
    }

    let sys = &built.system;
    let tol = TolerancesUsed {
        rel: job.tolerances.rel,
        abs: job.tolerances.abs,
    };
    let mut report = Report {
        operator: built.info.clone(),
        tasks: job.tasks.clone(),
        tolerances: tol,
        validation: None,
        positivity: None,
        matrices: Matrices::default(),
        checks: Vec::new(),
        closed_form: None,
        warnings: Vec::new(),
        error: None,
    };
    let finish = |mut report: Report, code: u8, kind: &'static str, message: String| {
        report.error = Some(ErrorInfo {
            kind,
            message: message.clone(),
        });
        Outcome {
            report: Some(report),
            code,
            message: Some(message),
        }
    };

    let validation = match validate_hypothesis(sys, DEFAULT_SAMPLES) {
        Ok(v) => v,
        Err(e) => return finish(report, EXIT_VALIDATION, "validation", e.to_string()),
    };
    let valid = validation.pass;
    let summary = validation.to_string();
    report.validation = Some(validation);
    if !valid {
        return finish(report, EXIT_VALIDATION, "validation", format!("hypothesis check failed: {summary}"));
    }

    let mut status = PositivityStatus::NotChecked;
    if wants(Task::Spectrum) || wants(Task::Krein) || wants(Task::VerifyAll) {
        let opts = ScanOptions {
            lambda_max: job.lambda_max,
            threads: job.threads,
            tolerances: job.tolerances,
            ..ScanOptions::default()
        };
        match lowest_friedrichs_eigenvalue(sys, &opts) {
            Ok(r) => {
                let p = Positivity::from(&r);
                status = p.status;
                report.positivity = Some(p);
            }
            Err(e) => return finish(report, EXIT_NUMERICAL, "numerical", e.to_string()),
        }
    }

    let mut krein = None;
    if wants(Task::Krein) || wants(Task::VerifyAll) {
        let k = match krein_data(sys, job) {
            Ok(k) => k,
            Err(e) => return finish(report, EXIT_NUMERICAL, "numerical", e),
        };
        let (role, label) = if status == PositivityStatus::Certified {
            ("krein", "Krein-von Neumann")
        } else {
            report.warnings.push(
                "strict positivity of the minimal operator is not certified, so these boundary matrices are \
                 labeled candidate rather than Krein-von Neumann"
                    .into(),
            );
            ("candidate", "candidate")
        };
        let tag = |m: &CMat| TaggedMatrix::new(m, role, label, status, tol);
        report.matrices.A_K = Some(tag(&k.pair.a));
        report.matrices.B_K = Some(tag(&k.pair.b));
        report.matrices.B_K_inv = Some(tag(&k.b_inv));
        report.matrices.T_K = Some(tag(&k.t));
        krein = Some(k);
    }

    let fried = friedrichs_pair(sys.block_size(), sys.half_order());
    if wants(Task::Friedrichs) || wants(Task::VerifyAll) {
        let tag = |m: &CMat| TaggedMatrix::new(m, "friedrichs", "Friedrichs", status, tol);
        report.matrices.friedrichs = Some(FriedrichsMatrices {
            a: tag(&fried.a),
            b: tag(&fried.b),
        });
    }

    if wants(Task::ClosedForm) {
        let n = sys.half_order();
        let text = &built.info.interval_text;
        report.closed_form = Some(match (rational_literal(&text[0]), rational_literal(&text[1])) {
            (Some(a), Some(b)) => {
                let h = b - a;
                closed_form_section(n, &h, h.to_string())
            }
            _ => {
                let h = sys.interval().length();
                closed_form_section(n, &h, format!("{h:?}"))
            }
        });
    }

    if wants(Task::VerifyAll) {
        let k = krein.as_ref().expect("computed for verify-all");
        if let Err(e) = verify_checks(&built, k, &fried, &mut report.checks) {
            return finish(report, EXIT_NUMERICAL, "numerical", e);
        }
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        if !failed.is_empty() {
            let msg = format!("checks failed: {}", failed.join(", "));
            return finish(report, EXIT_VALIDATION, "verification", msg);
        }
    }

    Outcome {
        report: Some(report),
        code: EXIT_OK,
        message: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use krein_core::closedform::rational;

    #[test]
    fn rational_literals() {
        assert_eq!(rational_literal("3/2"), Some(rational(3, 2)));
        assert_eq!(rational_literal(" -0.125 "), Some(rational(-1, 8)));
        assert_eq!(rational_literal("2"), Some(rational(2, 1)));
        assert_eq!(rational_literal(".5"), Some(rational(1, 2)));
        assert_eq!(rational_literal("0.0"), Some(rational(0, 1)));
        assert_eq!(rational_literal("1/0"), None);
        assert_eq!(rational_literal("pi"), None);
        assert_eq!(rational_literal("1e3"), None);
        assert_eq!(rational_literal("."), None);
        assert_eq!(rational_literal("-"), None);
    }
}
