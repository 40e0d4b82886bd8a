mod support;

use krein_core::expr::parse;
use proptest::prelude::*;
use support::{arb_expr, token_soup};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn printed_expressions_reparse_identically(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e);
    }

    #[test]
    fn token_sequences_never_panic(s in token_soup()) {
        if let Ok(e) = parse(&s) {
            let _ = e.eval(0.5);
            prop_assert_eq!(parse(&e.to_string()).ok(), Some(e));
        }
    }

    #[test]
    fn arbitrary_text_never_panics(s in "\\PC{0,80}") {
        let _ = parse(&s);
    }
}

#[test]
fn documented_values() {
    let at = |t: &str, x: f64| parse(t).unwrap().eval(x).unwrap();
    assert!((at("sinh(1-x)/sinh(1)", 0.0).re - 1.0).abs() < 1e-15);
    assert_eq!(at("x^2", 3.0).re, 9.0);
    let z = at("2*i + 1", 0.7);
    assert_eq!((z.re, z.im), (1.0, 2.0));
    assert!((at("exp(pi)", 0.0).re - 23.140_692_632_779_27).abs() < 1e-12);
    let c = at("conj(i)", 0.0);
    assert_eq!((c.re, c.im), (0.0, -1.0));
    assert!(parse("1/x").unwrap().eval(0.0).is_err());
}
