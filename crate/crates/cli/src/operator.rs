//! Turning an [`OperatorSpec`] into a Shin-Zettl system.

use std::collections::BTreeMap;

use krein_core::expr::parse;
use krein_core::matfn::MatrixFn;
use krein_core::system::{
    preset_by_name, preset_catalog, preset_four_coeff, preset_fourth_order, preset_pure, Interval, ShinZettlSystem,
    SystemError, ValidationReport,
};
use serde::Serialize;

use crate::config::{Coefficient, OperatorSpec};

#[derive(Debug)]
pub enum BuildError {
    Config(String),
    Hypothesis(Box<ValidationReport>),
}

fn config<T>(msg: impl Into<String>) -> Result<T, BuildError> {
    Err(BuildError::Config(msg.into()))
}

impl From<SystemError> for BuildError {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Hypothesis(report) => BuildError::Hypothesis(report),
            other => BuildError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorInfo {
    pub source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub block_size: usize,
    pub half_order: usize,
    pub order: usize,
    pub interval: [f64; 2],
    pub interval_text: [String; 2],
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
    pub constant_coefficients: bool,
}

pub struct Built {
    pub system: ShinZettlSystem,
    pub info: OperatorInfo,
    /// `(-1)^N y^(2N)`, for which closed forms exist.
    pub pure: bool,
}

/// Evaluates a constant real expression such as `sqrt(2)*pi`.
pub fn eval_endpoint(text: &str) -> Result<f64, BuildError> {
    let expr = parse(text).map_err(|e| BuildError::Config(format!("endpoint {text:?}: {e}")))?;
    if !expr.is_constant() {
        return config(format!("endpoint {text:?} depends on x"));
    }
    let v = expr
        .eval(0.0)
        .map_err(|e| BuildError::Config(format!("endpoint {text:?}: {e}")))?;
    if v.im != 0.0 || !v.re.is_finite() {
        return config(format!("endpoint {text:?} is not a finite real number"));
    }
    Ok(v.re)
}

fn coefficient(name: &str, c: &Coefficient, m: usize) -> Result<MatrixFn, BuildError> {
    let built = match c {
        Coefficient::Number(v) => MatrixFn::scalar_identity(m, &format!("{v:?}")),
        Coefficient::Text(t) => MatrixFn::scalar_identity(m, t),
        Coefficient::Grid(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return config(format!("{name} must be a {m}x{m} grid"));
            }
            MatrixFn::parse_grid(m, m, &rows.concat())
        }
    };
    built.map_err(|e| BuildError::Config(format!("{name}: {e}")))
}

fn describe(c: &Coefficient) -> String {
    match c {
        Coefficient::Number(v) => format!("{v:?}"),
        Coefficient::Text(t) => t.clone(),
        Coefficient::Grid(rows) => format!(
            "[{}]",
            rows.iter().map(|r| r.join(", ")).collect::<Vec<_>>().join("; ")
        ),
    }
}

fn interval_of(text: &(String, String)) -> Result<Interval, BuildError> {
    let (a, b) = (eval_endpoint(&text.0)?, eval_endpoint(&text.1)?);
    Ok(Interval::new(a, b)?)
}

fn fixed_order(name: &str, given: Option<usize>, order: usize) -> Result<(), BuildError> {
    match given {
        Some(o) if o != order => config(format!("preset {name} has order {order}, got --order {o}")),
        _ => Ok(()),
    }
}

fn scalar_only(name: &str, block_size: Option<usize>) -> Result<(), BuildError> {
    match block_size {
        Some(m) if m != 1 => config(format!("preset {name} is scalar, got block size {m}")),
        _ => Ok(()),
    }
}

fn no_params(name: &str, params: &BTreeMap<String, Coefficient>) -> Result<(), BuildError> {
    match params.keys().next() {
        Some(k) => config(format!("preset {name} takes no parameter {k:?}")),
        None => Ok(()),
    }
}

pub fn build(op: &OperatorSpec) -> Result<Built, BuildError> {
    let (system, source, preset, interval_text, params, pure) = match op {
        OperatorSpec::Preset {
            name,
            order,
            block_size,
            interval,
            params,
        } => {
            let unit = ("0".to_string(), "1".to_string());
            match name.as_str() {
                "pure" => {
                    scalar_only(name, *block_size)?;
                    no_params(name, params)?;
                    let order = order.unwrap_or(2);
                    if order == 0 || order % 2 != 0 {
                        return config(format!("order must be a positive even number, got {order}"));
                    }
                    let text = interval.clone().unwrap_or(unit);
                    let sys = preset_pure(order / 2, interval_of(&text)?)?;
                    (sys, "preset", name.clone(), text, BTreeMap::new(), true)
                }
                "fourth-order" => {
                    scalar_only(name, *block_size)?;
                    no_params(name, params)?;
                    fixed_order(name, *order, 4)?;
                    let text = interval
                        .clone()
                        .unwrap_or(("0".to_string(), "sqrt(2)*pi".to_string()));
                    let sys = preset_fourth_order(interval_of(&text)?)?;
                    (sys, "preset", name.clone(), text, BTreeMap::new(), false)
                }
                "four-coeff" => {
                    fixed_order(name, *order, 2)?;
                    let m = block_size.unwrap_or(1);
                    if m == 0 {
                        return config("block size must be positive");
                    }
                    let mut coeffs = BTreeMap::new();
                    for (key, default) in [("p", "1"), ("q", "1"), ("r", "1"), ("s", "0")] {
                        coeffs.insert(key.to_string(), Coefficient::text(default));
                    }
                    for (k, v) in params {
                        if !coeffs.contains_key(k) {
                            return config(format!("four-coeff parameters are p, q, r, s; got {k:?}"));
                        }
                        coeffs.insert(k.clone(), v.clone());
                    }
                    let f = |k: &str| coefficient(k, &coeffs[k], m);
                    let text = interval.clone().unwrap_or(unit);
                    let sys = preset_four_coeff(&f("p")?, &f("q")?, &f("r")?, &f("s")?, interval_of(&text)?)?;
                    let shown = coeffs.iter().map(|(k, v)| (k.clone(), describe(v))).collect();
                    (sys, "preset", name.clone(), text, shown, false)
                }
                other => {
                    let Some(sys) = preset_by_name(other) else {
                        let mut names: Vec<String> = ["pure", "fourth-order", "four-coeff"].map(String::from).to_vec();
                        for (n, _) in preset_catalog() {
                            if !names.contains(&n) {
                                names.push(n);
                            }
                        }
                        return config(format!("unknown preset {other:?}; known: {}", names.join(", ")));
                    };
                    if order.is_some() || block_size.is_some() || interval.is_some() || !params.is_empty() {
                        return config(format!("preset {other} is fixed; drop order, block size, interval and params"));
                    }
                    let iv = sys.interval();
                    let text = (format!("{:?}", iv.a), format!("{:?}", iv.b));
                    let pure = other.starts_with("pure-");
                    (sys, "preset", other.to_string(), text, BTreeMap::new(), pure)
                }
            }
        }
        OperatorSpec::Explicit {
            block_size,
            order,
            interval,
            w,
            z,
        } => {
            let (m, order) = (*block_size, *order);
            if m == 0 {
                return config("block size must be positive");
            }
            let mut grid = vec![MatrixFn::zeros(m); order * order];
            for (&(j, k), c) in z {
                grid[(j - 1) * order + (k - 1)] = coefficient(&format!("Z.{j}.{k}"), c, m)?;
            }
            let sys = ShinZettlSystem::new(m, order / 2, interval_of(interval)?, coefficient("W", w, m)?, grid)?;
            (sys, "explicit", String::new(), interval.clone(), BTreeMap::new(), false)
        }
    };
    let iv = system.interval();
    let info = OperatorInfo {
        source,
        preset: (!preset.is_empty()).then_some(preset),
        block_size: system.block_size(),
        half_order: system.half_order(),
        order: 2 * system.half_order(),
        interval: [iv.a, iv.b],
        interval_text: [interval_text.0, interval_text.1],
        params,
        constant_coefficients: system.is_constant(),
    };
    Ok(Built { system, info, pure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(name: &str) -> OperatorSpec {
        OperatorSpec::Preset {
            name: name.into(),
            order: None,
            block_size: None,
            interval: None,
            params: BTreeMap::new(),
        }
    }

    #[test]
    fn endpoints_accept_expressions() {
        let v = eval_endpoint("sqrt(2)*pi").unwrap();
        assert!((v - std::f64::consts::SQRT_2 * std::f64::consts::PI).abs() < 1e-15);
        assert!(eval_endpoint("x").is_err());
        assert!(eval_endpoint("i").is_err());
        assert!(eval_endpoint("1/0").is_err());
    }

    #[test]
    fn presets_resolve() {
        let b = build(&preset("fourth-order")).unwrap();
        assert_eq!((b.info.order, b.pure), (4, false));
        assert_eq!(b.info.interval_text[1], "sqrt(2)*pi");
        let b = build(&preset("pure-6")).unwrap();
        assert!(b.pure && b.info.half_order == 3);
        assert!(matches!(build(&preset("nope")), Err(BuildError::Config(_))));
    }

    #[test]
    fn negative_leading_coefficient_fails_hypothesis() {
        let mut params = BTreeMap::new();
        params.insert("p".to_string(), Coefficient::text("-1"));
        let op = OperatorSpec::Preset {
            name: "four-coeff".into(),
            order: None,
            block_size: None,
            interval: None,
            params,
        };
        assert!(matches!(build(&op), Err(BuildError::Hypothesis(_))));
    }
}
