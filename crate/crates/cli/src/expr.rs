//! Arithmetic expressions for spec files: parser, canonical printer,
//! evaluator, and symbolic differentiation.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?            // right-associative
//! atom    := number | var | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! Variables: t, x, y, z, pi. Functions: sin cos tan exp log sqrt sinh cosh
//! tanh abs. `^` binds tighter than unary minus, so `-t^2` is `-(t^2)`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X,
    Y,
    Z,
    Pi,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::Pi => "pi",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "t" => Var::T,
            "x" => Var::X,
            "y" => Var::Y,
            "z" => Var::Z,
            "pi" => Var::Pi,
            _ => return None,
        })
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
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
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

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Variable(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parse failure with byte offset and the token classes that were legal.
#[derive(Debug, Clone)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    pub expected: Vec<&'static str>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.offset, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone)]
pub struct EvalError {
    pub message: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for EvalError {}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Env {
    pub fn time(t: f64) -> Self {
        Env {
            t,
            ..Default::default()
        }
    }

    pub fn at(t: f64, p: &[f64; 3]) -> Self {
        Env {
            t,
            x: p[0],
            y: p[1],
            z: p[2],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let slice = &text[start..i];
                let value: f64 = slice.parse().map_err(|_| ParseError {
                    offset: start,
                    message: format!("malformed number '{slice}'"),
                    expected: vec!["number"],
                })?;
                out.push((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(ParseError {
                    offset: i,
                    message: format!("unexpected character '{}'", text[i..].chars().next().unwrap()),
                    expected: vec!["number", "identifier", "operator", "parenthesis"],
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = Expr::Binary(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.product()?;
                    lhs = Expr::Binary(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Binary(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Number(v)),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        offset,
                        message: format!("unknown function '{name}'"),
                        expected: vec![
                            "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh",
                            "abs",
                        ],
                    })?;
                    self.bump(); // '('
                    let arg = self.sum()?;
                    match self.bump() {
                        Some(Tok::RParen) => Ok(Expr::Call(func, Box::new(arg))),
                        _ => Err(ParseError {
                            offset: self.offset().min(self.end),
                            message: "unclosed function argument".to_string(),
                            expected: vec![")"],
                        }),
                    }
                } else {
                    Var::from_name(&name)
                        .map(Expr::Variable)
                        .ok_or_else(|| ParseError {
                            offset,
                            message: format!("unknown identifier '{name}'"),
                            expected: vec!["t", "x", "y", "z", "pi"],
                        })
                }
            }
            Some(Tok::LParen) => {
                let inner = self.sum()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(ParseError {
                        offset: self.offset().min(self.end),
                        message: "unclosed parenthesis".to_string(),
                        expected: vec![")"],
                    }),
                }
            }
            other => Err(ParseError {
                offset,
                message: match other {
                    Some(_) => "expected a value".to_string(),
                    None => "unexpected end of expression".to_string(),
                },
                expected: vec!["number", "identifier", "'('", "'-'"],
            }),
        }
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError {
            offset: 0,
            message: "empty expression".to_string(),
            expected: vec!["number", "identifier", "'('", "'-'"],
        });
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let expr = p.sum()?;
    if p.pos != p.toks.len() {
        return Err(ParseError {
            offset: p.offset(),
            message: "trailing input after expression".to_string(),
            expected: vec!["'+'", "'-'", "'*'", "'/'", "'^'", "end"],
        });
    }
    Ok(expr)
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Neg(_) => 3,
        Expr::Binary(BinOp::Pow, _, _) => 4,
        Expr::Number(_) | Expr::Variable(_) | Expr::Call(_, _) => 5,
    }
}

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        let v = self.eval_inner(env)?;
        if !v.is_finite() {
            return Err(EvalError {
                message: format!("non-finite result {v}"),
            });
        }
        Ok(v)
    }

    fn eval_inner(&self, env: &Env) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Number(v) => *v,
            Expr::Variable(Var::T) => env.t,
            Expr::Variable(Var::X) => env.x,
            Expr::Variable(Var::Y) => env.y,
            Expr::Variable(Var::Z) => env.z,
            Expr::Variable(Var::Pi) => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval_inner(env)?,
            Expr::Binary(op, a, b) => {
                let lhs = a.eval_inner(env)?;
                let rhs = b.eval_inner(env)?;
                match op {
                    BinOp::Add => lhs + rhs,
                    BinOp::Sub => lhs - rhs,
                    BinOp::Mul => lhs * rhs,
                    BinOp::Div => {
                        if rhs == 0.0 {
                            return Err(EvalError {
                                message: "division by zero".to_string(),
                            });
                        }
                        lhs / rhs
                    }
                    BinOp::Pow => {
                        let v = lhs.powf(rhs);
                        if v.is_nan() {
                            return Err(EvalError {
                                message: format!("{lhs}^{rhs} is not a real number"),
                            });
                        }
                        v
                    }
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval_inner(env)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError {
                                message: format!("log of nonpositive value {a}"),
                            });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError {
                                message: format!("sqrt of negative value {a}"),
                            });
                        }
                        a.sqrt()
                    }
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                    Func::Tanh => a.tanh(),
                    Func::Abs => a.abs(),
                }
            }
        })
    }

    /// Canonical text form; parse(print(e)) == e structurally.
    pub fn print(&self) -> String {
        match self {
            Expr::Number(v) => format!("{v}"),
            Expr::Variable(v) => v.name().to_string(),
            Expr::Neg(e) => {
                if prec(e) < 3 {
                    format!("-({})", e.print())
                } else {
                    format!("-{}", e.print())
                }
            }
            Expr::Binary(op, a, b) => {
                let my = prec(self);
                // left-associative operators parenthesize an equal-precedence
                // right child so the reparse rebuilds the same tree
                let (sym, left_min, right_min) = match op {
                    BinOp::Add => ("+", my, my + 1),
                    BinOp::Sub => ("-", my, my + 1),
                    BinOp::Mul => ("*", my, my + 1),
                    BinOp::Div => ("/", my, my + 1),
                    // right-associative: the left child takes the parens
                    BinOp::Pow => ("^", my + 1, my),
                };
                let lhs = if prec(a) < left_min {
                    format!("({})", a.print())
                } else {
                    a.print()
                };
                let rhs = if prec(b) < right_min {
                    format!("({})", b.print())
                } else {
                    b.print()
                };
                format!("{lhs} {sym} {rhs}")
            }
            Expr::Call(f, a) => format!("{}({})", f.name(), a.print()),
        }
    }

    /// True when the expression never reads the spatial variables.
    pub fn depends_only_on_time(&self) -> bool {
        match self {
            Expr::Number(_) => true,
            Expr::Variable(v) => !matches!(v, Var::X | Var::Y | Var::Z),
            Expr::Neg(e) => e.depends_only_on_time(),
            Expr::Binary(_, a, b) => a.depends_only_on_time() && b.depends_only_on_time(),
            Expr::Call(_, a) => a.depends_only_on_time(),
        }
    }

    /// Symbolic partial derivative. `abs` differentiates to u/abs(u) * u'
    /// (undefined at 0); a variable exponent uses the exp/log form and
    /// inherits its domain.
    pub fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Number(_) => Expr::Number(0.0),
            Expr::Variable(v) => Expr::Number(if *v == var && *v != Var::Pi {
                1.0
            } else {
                0.0
            }),
            Expr::Neg(e) => neg(e.derivative(var)),
            Expr::Binary(op, a, b) => {
                let da = a.derivative(var);
                let db = b.derivative(var);
                match op {
                    BinOp::Add => add(da, db),
                    BinOp::Sub => sub(da, db),
                    BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    BinOp::Div => div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        mul((**b).clone(), (**b).clone()),
                    ),
                    BinOp::Pow => match **b {
                        // constant exponent: power rule, no log domain
                        Expr::Number(n) => mul(
                            mul(
                                Expr::Number(n),
                                pow((**a).clone(), Expr::Number(n - 1.0)),
                            ),
                            da,
                        ),
                        _ => {
                            // a^b = exp(b log a)
                            let log_a = Expr::Call(Func::Log, Box::new((**a).clone()));
                            let inner = add(
                                mul(db, log_a),
                                div(mul((**b).clone(), da), (**a).clone()),
                            );
                            mul(self.clone(), inner)
                        }
                    },
                }
            }
            Expr::Call(f, a) => {
                let da = a.derivative(var);
                let u = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::Call(Func::Cos, Box::new(u)),
                    Func::Cos => neg(Expr::Call(Func::Sin, Box::new(u))),
                    Func::Tan => div(
                        Expr::Number(1.0),
                        pow(Expr::Call(Func::Cos, Box::new(u)), Expr::Number(2.0)),
                    ),
                    Func::Exp => Expr::Call(Func::Exp, Box::new(u)),
                    Func::Log => div(Expr::Number(1.0), u),
                    Func::Sqrt => div(
                        Expr::Number(1.0),
                        mul(Expr::Number(2.0), Expr::Call(Func::Sqrt, Box::new(u))),
                    ),
                    Func::Sinh => Expr::Call(Func::Cosh, Box::new(u)),
                    Func::Cosh => Expr::Call(Func::Sinh, Box::new(u)),
                    Func::Tanh => div(
                        Expr::Number(1.0),
                        pow(Expr::Call(Func::Cosh, Box::new(u)), Expr::Number(2.0)),
                    ),
                    Func::Abs => div(u.clone(), Expr::Call(Func::Abs, Box::new(u))),
                };
                mul(outer, da)
            }
        }
    }
}

// smart constructors folding the obvious identities, so derivatives stay
// evaluable (e.g. d(x^2) avoids 0 * log x)
fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Number(x), Expr::Number(y)) => Expr::Number(x + y),
        (Expr::Number(z), _) if *z == 0.0 => b,
        (_, Expr::Number(z)) if *z == 0.0 => a,
        _ => Expr::Binary(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Number(x), Expr::Number(y)) => Expr::Number(x - y),
        (_, Expr::Number(z)) if *z == 0.0 => a,
        _ => Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Number(x), Expr::Number(y)) => Expr::Number(x * y),
        (Expr::Number(z), _) | (_, Expr::Number(z)) if *z == 0.0 => Expr::Number(0.0),
        (Expr::Number(o), _) if *o == 1.0 => b,
        (_, Expr::Number(o)) if *o == 1.0 => a,
        _ => Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Number(z), _) if *z == 0.0 => Expr::Number(0.0),
        (_, Expr::Number(o)) if *o == 1.0 => a,
        _ => Expr::Binary(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Number(x) => Expr::Number(-x),
        _ => Expr::Neg(Box::new(a)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Number(z)) if *z == 0.0 => Expr::Number(1.0),
        (_, Expr::Number(o)) if *o == 1.0 => a,
        _ => Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_str(s: &str, env: &Env) -> f64 {
        parse_expression(s).unwrap().eval(env).unwrap()
    }

    #[test]
    fn precedence() {
        let env = Env::default();
        assert_eq!(eval_str("2+3*4", &env), 14.0);
        assert_eq!(eval_str("2*3^2", &env), 18.0);
        assert_eq!(eval_str("-2^2", &env), -4.0); // ^ binds above unary minus
        assert_eq!(eval_str("2^-1", &env), 0.5);
        assert_eq!(eval_str("2^3^2", &env), 512.0); // right-associative
        assert_eq!(eval_str("(2+3)*4", &env), 20.0);
        assert_eq!(eval_str("7-2-1", &env), 4.0); // left-associative
    }

    #[test]
    fn hyperbolic_identity() {
        for t in [-2.0, 0.0, 0.7, 3.1] {
            let v = eval_str("cosh(t)^2 - sinh(t)^2", &Env::time(t));
            assert!((v - 1.0).abs() < 1e-12, "t = {t}: {v}");
        }
    }

    #[test]
    fn pole_is_domain_error() {
        let e = parse_expression("1/(1 - t)").unwrap();
        assert!(e.eval(&Env::time(1.0)).is_err());
        assert!((e.eval(&Env::time(0.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(parse_expression("log(t)").unwrap().eval(&Env::time(-1.0)).is_err());
        assert!(parse_expression("sqrt(t)").unwrap().eval(&Env::time(-1.0)).is_err());
        assert!(parse_expression("t^0.5").unwrap().eval(&Env::time(-1.0)).is_err());
        assert!(parse_expression("exp(t)").unwrap().eval(&Env::time(1e9)).is_err());
    }

    #[test]
    fn syntax_error_offsets() {
        let err = parse_expression("2+*3").unwrap_err();
        assert_eq!(err.offset, 2);
        assert!(!err.expected.is_empty());

        let err = parse_expression("2 + foo").unwrap_err();
        assert_eq!(err.offset, 4);
        assert!(err.message.contains("unknown identifier 'foo'"));

        let err = parse_expression("sing(2)").unwrap_err();
        assert!(err.message.contains("unknown function 'sing'"));

        let err = parse_expression("(1 + 2").unwrap_err();
        assert!(err.message.contains("unclosed"));

        let err = parse_expression("1 2").unwrap_err();
        assert!(err.message.contains("trailing"));
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn print_parse_roundtrip_structural() {
        for s in [
            "2+3*4",
            "-t^2",
            "(-t)^2",
            "1/(1 - t)",
            "cosh(t)^2 - sinh(t)^2",
            "x*y*z + pi",
            "2^3^2",
            "7-2-1",
            "1 - (2 - 3)",
            "t/(x/y)",
            "-(t + 1)",
            "sqrt(1 + 2*t)",
        ] {
            let e = parse_expression(s).unwrap();
            let printed = e.print();
            let reparsed = parse_expression(&printed).unwrap();
            assert_eq!(e, reparsed, "{s} -> {printed}");
            assert_eq!(printed, reparsed.print());
        }
    }

    #[test]
    fn print_parse_roundtrip_generated() {
        // 500 deterministically generated expressions
        fn gen(seed: &mut u64, depth: u32) -> Expr {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let pick = (*seed >> 33) % if depth == 0 { 3 } else { 7 };
            match pick {
                0 => Expr::Number(((*seed >> 40) % 1000) as f64 / 10.0),
                1 => Expr::Variable([Var::T, Var::X, Var::Y, Var::Z, Var::Pi][(*seed >> 20) as usize % 5]),
                2 => Expr::Variable(Var::T),
                3 => Expr::Neg(Box::new(gen(seed, depth - 1))),
                4 | 5 => {
                    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]
                        [(*seed >> 17) as usize % 5];
                    Expr::Binary(
                        op,
                        Box::new(gen(seed, depth - 1)),
                        Box::new(gen(seed, depth - 1)),
                    )
                }
                _ => {
                    let f = [
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
                    ][(*seed >> 11) as usize % 10];
                    Expr::Call(f, Box::new(gen(seed, depth - 1)))
                }
            }
        }
        let mut seed = 0xC0FFEE;
        for i in 0..500 {
            let e = gen(&mut seed, 4);
            let printed = e.print();
            let reparsed =
                parse_expression(&printed).unwrap_or_else(|err| panic!("case {i}: {printed}: {err}"));
            assert_eq!(e, reparsed, "case {i}: {printed}");
        }
    }

    #[test]
    fn symbolic_derivative_matches_finite_difference() {
        let cases = [
            "sqrt(1 + 2*t)",
            "cosh(t)",
            "t^3 - 2*t + 1",
            "sin(t)*exp(t/2)",
            "1/(2 + t)",
            "tanh(t)^2",
            "t^t",
            "log(2 + t)",
            "abs(t - 3)",
        ];
        for s in cases {
            let e = parse_expression(s).unwrap();
            let d = e.derivative(Var::T);
            for t in [0.1, 0.9, 2.0] {
                let h = 1e-6;
                let fd = (e.eval(&Env::time(t + h)).unwrap() - e.eval(&Env::time(t - h)).unwrap())
                    / (2.0 * h);
                let sym = d.eval(&Env::time(t)).unwrap();
                assert!(
                    (fd - sym).abs() < 1e-6 * (1.0 + sym.abs()),
                    "{s} at {t}: fd {fd} vs sym {sym}"
                );
            }
        }
    }

    #[test]
    fn second_derivative_of_dust_scale_factor_is_exact() {
        let e = parse_expression("sqrt(1 + 2*t)").unwrap();
        let d1 = e.derivative(Var::T);
        let d2 = d1.derivative(Var::T);
        let env = Env::time(0.0);
        assert_eq!(e.eval(&env).unwrap(), 1.0);
        assert!((d1.eval(&env).unwrap() - 1.0).abs() < 1e-15);
        assert!((d2.eval(&env).unwrap() + 1.0).abs() < 1e-15);
    }
}
