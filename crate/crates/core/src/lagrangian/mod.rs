//! Lagrangians `L(t, u, v)` as small expression trees.
//!
//! Inside a delta integrand `u = y^σ(t)` and `v = y^Δ(t)`; inside a nabla
//! integrand `u = y^ρ(t)` and `v = y^∇(t)`.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'? atom ('^' int)?
//! atom   := number | 't' | 'u' | 'v' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt'
//! ```

mod diff;
mod parser;

use std::fmt;

use thiserror::Error;

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    U,
    V,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at position {pos}: {kind}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected {0}")]
    Unexpected(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("exponent must be an integer, got `{0}`")]
    NonIntegerExponent(String),
    #[error("invalid number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    LogDomain,
    SqrtDomain,
    DivisionByZero,
    NonFinite,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalErrorKind::LogDomain => "log of a non-positive value",
            EvalErrorKind::SqrtDomain => "sqrt of a negative value",
            EvalErrorKind::DivisionByZero => "division by zero",
            EvalErrorKind::NonFinite => "non-finite result",
        })
    }
}

/// Evaluation failure, naming the offending subexpression.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{expr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub expr: String,
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn evaluate(&self, t: f64, u: f64, v: f64) -> Result<f64, EvalError> {
        let fail = |kind| EvalError {
            kind,
            expr: self.to_string(),
        };
        let out = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::U) => u,
            Expr::Var(Var::V) => v,
            Expr::Neg(a) => -a.evaluate(t, u, v)?,
            Expr::Add(a, b) => a.evaluate(t, u, v)? + b.evaluate(t, u, v)?,
            Expr::Sub(a, b) => a.evaluate(t, u, v)? - b.evaluate(t, u, v)?,
            Expr::Mul(a, b) => a.evaluate(t, u, v)? * b.evaluate(t, u, v)?,
            Expr::Div(a, b) => {
                let num = a.evaluate(t, u, v)?;
                let den = b.evaluate(t, u, v)?;
                if den == 0.0 {
                    return Err(fail(EvalErrorKind::DivisionByZero));
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.evaluate(t, u, v)?;
                if base == 0.0 && *n < 0 {
                    return Err(fail(EvalErrorKind::DivisionByZero));
                }
                base.powi(*n)
            }
            Expr::Call(func, a) => {
                let x = a.evaluate(t, u, v)?;
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log if x <= 0.0 => return Err(fail(EvalErrorKind::LogDomain)),
                    Func::Log => x.ln(),
                    Func::Sqrt if x < 0.0 => return Err(fail(EvalErrorKind::SqrtDomain)),
                    Func::Sqrt => x.sqrt(),
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }

    /// Symbolic partial derivative with light constant folding.
    pub fn differentiate(&self, var: Var) -> Expr {
        diff::derivative(self, var)
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// The value of a variable-free tree.
    pub fn as_constant(&self) -> Option<f64> {
        if [Var::T, Var::U, Var::V].iter().any(|&v| self.depends_on(v)) {
            return None;
        }
        self.evaluate(0.0, 0.0, 0.0).ok()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints in the grammar accepted by [`parse`], so printing and re-parsing
/// yields an evaluation-equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 4)
            }
            Expr::Add(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str("+")?;
                write_operand(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str("-")?;
                write_operand(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("*")?;
                write_operand(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("/")?;
                write_operand(f, b, 4)
            }
            Expr::Pow(a, n) => {
                write_operand(f, a, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A Lagrangian together with its partials `∂₂ = ∂/∂u` and `∂₃ = ∂/∂v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    pub value: Expr,
    pub d_u: Expr,
    pub d_v: Expr,
}

impl Lagrangian {
    pub fn new(value: Expr) -> Self {
        let d_u = value.differentiate(Var::U);
        let d_v = value.differentiate(Var::V);
        Self { value, d_u, d_v }
    }

    /// Parses `text` and differentiates it in `u` and `v`.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(Self::new(parse(text)?))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(Expr::Const(c))
    }

    pub fn is_constant(&self) -> bool {
        self.value.as_constant().is_some()
    }
}
