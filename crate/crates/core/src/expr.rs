//! Complex-valued expressions in one real variable `x`.
//!
//! Coefficient entries (`p`, `q`, `W`, `Z.j.k`, ...) are written as small
//! expressions and evaluated pointwise while integrating. The grammar is
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds tighter than `^`, so `-2^2` is `(-2)^2`. There is no
//! implicit multiplication, and the complex unit is the reserved identifier `i`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("non-finite value {value} from `{subexpr}` at x = {x}")]
pub struct EvalError {
    pub x: f64,
    pub subexpr: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
    I,
}

impl Constant {
    fn value(self) -> Complex64 {
        match self {
            Constant::Pi => Complex64::new(std::f64::consts::PI, 0.0),
            Constant::E => Complex64::new(std::f64::consts::E, 0.0),
            Constant::I => Complex64::new(0.0, 1.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
            Constant::I => "i",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
    Conj,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
        Func::Conj,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Conj => "conj",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, z: Complex64) -> Complex64 {
        match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => z.tan(),
            Func::Exp => z.exp(),
            Func::Log => z.ln(),
            Func::Sqrt => z.sqrt(),
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Tanh => z.tanh(),
            Func::Abs => Complex64::new(z.norm(), 0.0),
            Func::Conj => z.conj(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse(text)
    }

    /// Evaluates at `x`, rejecting any non-finite intermediate value.
    pub fn eval(&self, x: f64) -> Result<Complex64, EvalError> {
        let value = match self {
            Expr::Num(v) => Complex64::new(*v, 0.0),
            Expr::Const(c) => c.value(),
            Expr::X => Complex64::new(x, 0.0),
            // Adding zero clears the sign of zero parts, so `sqrt(-4)` stays on the principal branch.
            Expr::Neg(inner) => {
                let v = inner.eval(x)?;
                Complex64::new(-v.re + 0.0, -v.im + 0.0)
            }
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval(x)?;
                let r = rhs.eval(x)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == Complex64::new(0.0, 0.0) {
                            return Err(self.eval_error(x, Complex64::new(f64::INFINITY, 0.0)));
                        }
                        l / r
                    }
                    BinOp::Pow => power(l, r),
                }
            }
            Expr::Call(f, arg) => f.apply(arg.eval(x)?),
        };
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(self.eval_error(x, value))
        }
    }

    fn eval_error(&self, x: f64, value: Complex64) -> EvalError {
        EvalError {
            x,
            subexpr: self.to_string(),
            value,
        }
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::X => false,
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

// Integer exponents go through repeated multiplication so that `x^2` at a
// real point stays real; everything else uses the principal branch.
fn power(base: Complex64, exponent: Complex64) -> Complex64 {
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= 64.0 {
        let n = exponent.re as i32;
        return base.powi(n);
    }
    if base == Complex64::new(0.0, 0.0) {
        return if exponent.re > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        };
    }
    base.powc(exponent)
}

/// Fully parenthesized; `parse(e.to_string())` rebuilds `e` exactly.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::X => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

// Deeply nested input would otherwise overflow the stack.
const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax("expression nested too deeply"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let base = self.unary()?;
        let out = if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.factor()?;
            Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent))
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.enter()?;
            self.pos += 1;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        // Exponent only when digits follow, so `2e` stays a syntax error
        // about implicit multiplication rather than a bad literal.
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("number `{text}` is out of range"),
            });
        }
        Ok(Expr::Num(value))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        let unknown = || ParseError::UnknownIdentifier {
            offset: start,
            name: name.to_string(),
        };
        if let Some(func) = Func::from_name(name) {
            if self.peek() != Some(b'(') {
                return Err(self.syntax(&format!("function `{name}` requires an argument")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.syntax("expected `)` after function argument"));
            }
            self.pos += 1;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        let atom = match name {
            "x" => Expr::X,
            "pi" => Expr::Const(Constant::Pi),
            "e" => Expr::Const(Constant::E),
            "i" => Expr::Const(Constant::I),
            _ => return Err(unknown()),
        };
        if self.peek() == Some(b'(') {
            return Err(unknown());
        }
        Ok(atom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn eval(text: &str, x: f64) -> Complex64 {
        parse(text).unwrap().eval(x).unwrap()
    }

    #[test]
    fn sinh_ratio_is_one_at_zero() {
        let v = eval("sinh(1-x)/sinh(1)", 0.0);
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn square_of_three() {
        assert_eq!(eval("x^2", 3.0), Complex64::new(9.0, 0.0));
    }

    #[test]
    fn complex_literal_arithmetic() {
        assert_eq!(eval("2*i + 1", 0.7), Complex64::new(1.0, 2.0));
    }

    #[test]
    fn exp_pi() {
        let v = eval("exp(pi)", 0.0);
        assert_relative_eq!(v.re, 23.140_692_632_779_27, max_relative = 1e-15);
    }

    #[test]
    fn conj_of_unit() {
        assert_eq!(eval("conj(i)", 0.0), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn reciprocal_at_zero_is_an_error() {
        let err = parse("1/x").unwrap().eval(0.0).unwrap_err();
        assert_eq!(err.x, 0.0);
        assert_eq!(err.subexpr, "(1 / x)");
    }

    #[test]
    fn log_of_zero_is_an_error() {
        let err = parse("2 + log(x)").unwrap().eval(0.0).unwrap_err();
        assert_eq!(err.subexpr, "log(x)");
    }

    #[test]
    fn principal_branch_sqrt() {
        assert_eq!(eval("sqrt(-4)", 0.0), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2", 0.0).re, 512.0);
        assert_eq!(eval("-2^2", 0.0).re, 4.0);
        assert_eq!(eval("-x^2", 3.0).re, 9.0);
        assert_eq!(eval("0-x^2", 3.0).re, -9.0);
    }

    #[test]
    fn precedence_and_whitespace() {
        assert_eq!(eval(" 1 + 2 * 3 - 4 / 2 ", 0.0).re, 5.0);
        assert_eq!(eval("(1+2)*3", 0.0).re, 9.0);
        assert_eq!(eval("1.5e1 + .5", 0.0).re, 15.5);
    }

    #[test]
    fn rejects_implicit_multiplication() {
        assert!(matches!(parse("2x"), Err(ParseError::Syntax { offset: 1, .. })));
        assert!(matches!(parse("2 e"), Err(ParseError::Syntax { .. })));
        assert!(parse("2e").is_err());
    }

    #[test]
    fn unknown_identifiers() {
        assert_eq!(
            parse("1 + y"),
            Err(ParseError::UnknownIdentifier {
                offset: 4,
                name: "y".into()
            })
        );
        assert!(matches!(parse("foo(x)"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("i(2)"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("ii"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("(1+2"), Err(ParseError::Syntax { offset: 4, .. })));
        assert!(matches!(parse("1+"), Err(ParseError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("sin x"), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1e999"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn deep_nesting_is_rejected_not_overflowed() {
        let text = "(".repeat(10_000) + "x" + &")".repeat(10_000);
        assert!(parse(&text).is_err());
        let text = "-".repeat(10_000) + "x";
        assert!(parse(&text).is_err());
    }

    #[test]
    fn constant_detection() {
        assert!(parse("exp(pi) * i").unwrap().is_constant());
        assert!(!parse("1 + sin(x)").unwrap().is_constant());
    }

    proptest! {
        #[test]
        fn variable_evaluates_exactly(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let v = parse("x").unwrap().eval(x).unwrap();
            prop_assert_eq!(v.re.to_bits(), x.to_bits());
            prop_assert_eq!(v.im, 0.0);
        }

        #[test]
        fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse(&text);
        }
    }
}
