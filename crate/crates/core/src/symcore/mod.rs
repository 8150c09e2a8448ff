//! Exact symbolic expressions over jet, group and invariant coordinates.

mod calculus;
mod eval;
mod expr;
mod linsolve;
mod multiindex;
mod poly;
mod syntax;
mod variable;

use thiserror::Error;

pub use calculus::{diff, simplify, subst, subst_with};
pub use poly::together;
pub use eval::{eval, eval_scaled, ZeroTest};
pub use expr::{Atom, Exponent, Expr, Monomial, Term};
pub use linsolve::{invert, rank, solve_linear, solve_linear_particular};
pub use multiindex::MultiIndex;
pub use syntax::{apply_named, func_from, is_reserved, parse_expr, tokenize, variable_from, Parser, Semantics, Subscript, Tok};
pub use variable::Variable;

/// Whitelisted elementary functions. `sqrt` is stored as a half power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Atan,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Atan => "atan",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymError {
    #[error("division by an identically zero expression")]
    DivisionByZero,
    #[error("pole hit during evaluation")]
    Pole,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value not exactly representable")]
    Inexact,
    #[error("no value supplied for {0}")]
    Unbound(Variable),
    #[error("every sample point hit a pole or domain error")]
    IndeterminateAtAllSamples,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("linear system is rank deficient; free unknowns {free:?}")]
    RankDeficient { free: Vec<usize> },
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
}

impl SymError {
    pub fn parse(offset: usize, message: &str) -> Self {
        SymError::Parse { offset, message: message.to_string() }
    }
}

/// Shorthand used throughout the crate and its tests.
pub fn var(v: Variable) -> Expr {
    Expr::var(v)
}
