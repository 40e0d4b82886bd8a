//! The three binomial identities behind the closed forms, checked
//! exhaustively over finite index ranges.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use super::{binomial, binomial_rational, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: usize,
    pub holds: bool,
    /// First failing index combination, if any.
    pub counterexample: Option<String>,
}

impl IdentityCheck {
    fn new(name: &'static str) -> Self {
        IdentityCheck {
            name,
            cases: 0,
            holds: true,
            counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok && self.holds {
            self.holds = false;
            self.counterexample = Some(describe());
        }
    }
}

/// `C(-p, q) = (-1)^q C(p + q - 1, q)` for all `p, q` in `range`.
pub fn check_negation(range: std::ops::RangeInclusive<i64>) -> IdentityCheck {
    let mut out = IdentityCheck::new("negation");
    for p in range.clone() {
        for q in range.clone() {
            let lhs = binomial(-p, q);
            let rhs = binomial(p + q - 1, q);
            let rhs = if q.rem_euclid(2) == 0 { rhs } else { -rhs };
            out.record(lhs == rhs, || format!("p = {p}, q = {q}"));
        }
    }
    out
}

/// `sum_k C(r, m + k) C(s, n + k) = C(r + s, r - m + n)` for integer
/// `0 <= r <= r_max`, integer `m, n` in `shifts` and every `s` in `uppers`.
///
/// The sum runs over the finite support `0 <= m + k <= r` of the first factor.
pub fn check_vandermonde(r_max: i64, shifts: std::ops::RangeInclusive<i64>, uppers: &[Rational]) -> IdentityCheck {
    let mut out = IdentityCheck::new("vandermonde");
    let (lo, hi) = (*shifts.start(), *shifts.end());
    // Lower indices reached: n + k = n + i - m ranges over [lo - hi, r_max + hi - lo].
    let span = (lo - hi)..=(r_max + hi - lo);
    let table = |upper: &Rational| -> Vec<Rational> { span.clone().map(|k| binomial_rational(upper, k)).collect() };
    let at = |t: &[Rational], k: i64| t[(k - span.start()) as usize].clone();
    for s in uppers {
        let lower_s = table(s);
        for r in 0..=r_max {
            let r_q = Rational::from_integer(BigInt::from(r));
            let upper_rs = table(&(&r_q + s));
            let row: Vec<Rational> = (0..=r).map(|i| Rational::from_integer(binomial(r, i))).collect();
            for m in shifts.clone() {
                for n in shifts.clone() {
                    let mut lhs = Rational::zero();
                    for (i, first) in row.iter().enumerate() {
                        lhs += first * at(&lower_s, n + i as i64 - m);
                    }
                    let rhs = at(&upper_rs, r - m + n);
                    out.record(lhs == rhs, || format!("r = {r}, m = {m}, n = {n}, s = {s}"));
                }
            }
        }
    }
    out
}

/// `sum_{l=1}^{N} (-1)^(l+k) C(j-1, l-1) C(l-1, k-1) = delta_{jk}` for `1 <= j, k <= N`.
pub fn check_involution(n: i64) -> IdentityCheck {
    let mut out = IdentityCheck::new("involution");
    for j in 1..=n {
        for k in 1..=n {
            let mut sum = BigInt::zero();
            for l in 1..=n {
                let term = binomial(j - 1, l - 1) * binomial(l - 1, k - 1);
                if (l + k) % 2 == 0 {
                    sum += term;
                } else {
                    sum -= term;
                }
            }
            let want = BigInt::from(i64::from(j == k));
            out.record(sum == want, || format!("N = {n}, j = {j}, k = {k}"));
        }
    }
    out
}

/// All three identities over the index ranges relevant to order `2N`:
/// `p, q` in `[-3N, 3N]`; `r <= N`, `m, n` in `[-N, N]` with `s` ranging over
/// the integers and half-integers in `[-N, N]`; the involution for every size up to `N`.
pub fn lemma_identities_exhaustive(n: i64) -> Vec<IdentityCheck> {
    let negation = check_negation(-3 * n..=3 * n);
    let uppers: Vec<Rational> = (-2 * n..=2 * n)
        .map(|t| Rational::new(BigInt::from(t), BigInt::from(2)))
        .collect();
    let vandermonde = check_vandermonde(n, -n..=n, &uppers);
    let mut involution = IdentityCheck::new("involution");
    for size in 0..=n {
        let c = check_involution(size);
        involution.cases += c.cases;
        if !c.holds && involution.holds {
            involution.holds = false;
            involution.counterexample = c.counterexample;
        }
    }
    vec![negation, vandermonde, involution]
}
