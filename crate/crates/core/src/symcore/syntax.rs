//! Text grammar shared by expressions and forms.
//!
//! `u[1,1]` is a jet coordinate, `v[a=2; I=1,1]` an invariant jet, `^(p/q)`
//! a rational power. The printer emits exactly what the parser reads.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::expr::{Atom, Exponent, Expr, Term};
use super::{Func, MultiIndex, SymError, Variable};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(BigRational),
    Sym(char),
}

pub fn tokenize(s: &str) -> Result<Vec<(Tok, usize)>, SymError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut frac_part = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fs = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                frac_part = chars[fs..i].iter().collect();
            }
            let mut exp10: i64 = 0;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                let neg = chars.get(j) == Some(&'-');
                if matches!(chars.get(j), Some('-' | '+')) {
                    j += 1;
                }
                let es = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j > es {
                    let digits: String = chars[es..j].iter().collect();
                    exp10 = digits.parse::<i64>().map_err(|_| SymError::parse(start, "bad exponent"))?;
                    if neg {
                        exp10 = -exp10;
                    }
                    i = j;
                }
            }
            let mantissa: BigInt = format!("{}{}", if int_part.is_empty() { "0" } else { &int_part }, frac_part)
                .parse()
                .map_err(|_| SymError::parse(start, "bad number"))?;
            let shift = exp10 - frac_part.len() as i64;
            let ten = BigRational::from_integer(BigInt::from(10));
            let mut q = BigRational::from_integer(mantissa);
            let p = num_traits::pow(ten, shift.unsigned_abs() as usize);
            if shift >= 0 {
                q *= p;
            } else {
                q /= p;
            }
            out.push((Tok::Num(q), start));
        } else if "+-*/^()[],;=".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(SymError::parse(i, &format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

/// Contents of a bracket suffix such as `[1,2]`, `[a=2; I=1]` or `[name]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Subscript {
    pub comp: Option<usize>,
    pub index: Vec<usize>,
    pub name: Option<String>,
}

/// Meaning of parsed syntax; lets forms and scalars share one grammar.
pub trait Semantics {
    type Value;
    fn number(&mut self, q: BigRational) -> Result<Self::Value, String>;
    fn ident(&mut self, name: &str, sub: Option<&Subscript>) -> Result<Self::Value, String>;
    fn call(&mut self, name: &str, arg: Self::Value) -> Result<Self::Value, String>;
    fn add(&mut self, a: Self::Value, b: Self::Value) -> Result<Self::Value, String>;
    fn neg(&mut self, a: Self::Value) -> Result<Self::Value, String>;
    fn mul(&mut self, a: Self::Value, b: Self::Value) -> Result<Self::Value, String>;
    fn div(&mut self, a: Self::Value, b: Self::Value) -> Result<Self::Value, String>;
    fn pow(&mut self, a: Self::Value, e: Exponent) -> Result<Self::Value, String>;
    /// `a ^ b` where `b` is not a rational literal.
    fn wedge(&mut self, _a: Self::Value, _b: Self::Value) -> Result<Self::Value, String> {
        Err("exponent must be a rational constant".into())
    }
}

fn lift<T>(r: Result<T, String>, at: usize) -> Result<T, SymError> {
    r.map_err(|m| SymError::parse(at, &m))
}

pub struct Parser<'s, S: Semantics> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    sem: &'s mut S,
}

impl<'s, S: Semantics> Parser<'s, S> {
    pub fn new(src: &str, sem: &'s mut S) -> Result<Self, SymError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, end: src.len(), sem })
    }

    pub fn parse_all(mut self) -> Result<S::Value, SymError> {
        let v = self.sum()?;
        if self.pos < self.toks.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(v)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn err(&self, msg: &str) -> SymError {
        SymError::parse(self.offset(), msg)
    }


    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SymError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn sum(&mut self) -> Result<S::Value, SymError> {
        let mut acc = self.product()?;
        loop {
            let at = self.offset();
            if self.eat('+') {
                let rhs = self.product()?;
                acc = lift(self.sem.add(acc, rhs), at)?;
            } else if self.eat('-') {
                let rhs = self.product()?;
                let n = lift(self.sem.neg(rhs), at)?;
                acc = lift(self.sem.add(acc, n), at)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<S::Value, SymError> {
        let mut acc = self.unary()?;
        loop {
            let at = self.offset();
            if self.eat('*') {
                let rhs = self.unary()?;
                acc = lift(self.sem.mul(acc, rhs), at)?;
            } else if self.eat('/') {
                let rhs = self.unary()?;
                acc = lift(self.sem.div(acc, rhs), at)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<S::Value, SymError> {
        let at = self.offset();
        if self.eat('-') {
            let v = self.unary()?;
            return lift(self.sem.neg(v), at);
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    /// A rational literal exponent: `n`, `(n)`, `(-n)`, `(p/q)`, `(-p/q)`.
    fn literal_exponent(&mut self) -> Option<Exponent> {
        let save = self.pos;
        let lit = |t: Option<&Tok>| match t {
            Some(Tok::Num(q)) if q.is_integer() => q.to_integer().try_into().ok(),
            _ => None,
        };
        if let Some(n) = lit(self.peek()) {
            self.pos += 1;
            return Some(Exponent::from_integer(n));
        }
        if !self.eat('(') {
            return None;
        }
        let neg = self.eat('-');
        let Some(n) = lit(self.peek()) else {
            self.pos = save;
            return None;
        };
        self.pos += 1;
        let mut d: i64 = 1;
        if self.peek() == Some(&Tok::Sym('/')) {
            match lit(self.peek_at(1)) {
                Some(x) if x != 0 => {
                    d = x;
                    self.pos += 2;
                }
                _ => {
                    self.pos = save;
                    return None;
                }
            }
        }
        if !self.eat(')') {
            self.pos = save;
            return None;
        }
        let n: i64 = if neg { -n } else { n };
        Some(Exponent::new(n, d))
    }

    fn power(&mut self) -> Result<S::Value, SymError> {
        let mut acc = self.primary()?;
        loop {
            let at = self.offset();
            if !self.eat('^') {
                return Ok(acc);
            }
            if let Some(e) = self.literal_exponent() {
                acc = lift(self.sem.pow(acc, e), at)?;
            } else {
                let rhs = self.primary()?;
                acc = lift(self.sem.wedge(acc, rhs), at)?;
            }
        }
    }

    fn subscript(&mut self) -> Result<Subscript, SymError> {
        let mut sub = Subscript::default();
        if let (Some(Tok::Ident(name)), Some(Tok::Sym(c))) = (self.peek().cloned(), self.peek_at(1).cloned()) {
            if c != '=' {
                self.pos += 1;
                sub.name = Some(name);
                self.expect(']')?;
                return Ok(sub);
            }
        }
        loop {
            match self.peek().cloned() {
                Some(Tok::Ident(key)) => {
                    self.pos += 1;
                    self.expect('=')?;
                    match key.as_str() {
                        "a" => sub.comp = Some(self.small_int()?),
                        "I" => sub.index = self.int_list()?,
                        _ => return Err(self.err(&format!("unknown subscript key '{key}'"))),
                    }
                    if !self.eat(';') {
                        break;
                    }
                }
                Some(Tok::Num(_)) => {
                    sub.index = self.int_list()?;
                    break;
                }
                _ => return Err(self.err("malformed subscript")),
            }
        }
        self.expect(']')?;
        Ok(sub)
    }

    fn small_int(&mut self) -> Result<usize, SymError> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) if q.is_integer() && !q.is_negative() => {
                self.pos += 1;
                q.to_integer().try_into().map_err(|_| self.err("index too large"))
            }
            _ => Err(self.err("expected a non-negative integer")),
        }
    }

    fn int_list(&mut self) -> Result<Vec<usize>, SymError> {
        let mut v = vec![self.small_int()?];
        while self.eat(',') {
            v.push(self.small_int()?);
        }
        Ok(v)
    }

    fn primary(&mut self) -> Result<S::Value, SymError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.pos += 1;
                lift(self.sem.number(q), at)
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let v = self.sum()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat('(') {
                    let arg = self.sum()?;
                    self.expect(')')?;
                    return lift(self.sem.call(&name, arg), at);
                }
                let sub = if self.eat('[') { Some(self.subscript()?) } else { None };
                lift(self.sem.ident(&name, sub.as_ref()), at)
            }
            _ => Err(self.err("expected an expression")),
        }
    }
}

const RESERVED: &[&str] = &["x", "u", "y", "v", "aux", "sqrt", "atan", "sin", "cos", "exp", "log", "d", "zeta", "eta", "theta", "thetabar", "mu"];

pub fn is_reserved(name: &str) -> bool {
    RESERVED.contains(&name)
}

/// Interpret an identifier with optional subscript as a coordinate.
pub fn variable_from(name: &str, sub: Option<&Subscript>) -> Result<Variable, String> {
    let one_based = |i: &usize| *i >= 1;
    let jet = |sub: Option<&Subscript>| -> Result<(usize, MultiIndex), String> {
        let s = sub.cloned().unwrap_or_default();
        if s.name.is_some() {
            return Err(format!("'{name}' takes numeric indices"));
        }
        if !s.index.iter().all(one_based) || s.comp == Some(0) {
            return Err("indices are 1-based".into());
        }
        Ok((s.comp.unwrap_or(1), MultiIndex::new(s.index)))
    };
    let single = |sub: Option<&Subscript>| -> Result<usize, String> {
        match sub {
            None => Ok(1),
            Some(Subscript { comp: None, index, name: None }) if index.len() == 1 && index[0] >= 1 => Ok(index[0]),
            _ => Err(format!("'{name}' takes a single 1-based index")),
        }
    };
    match name {
        "x" => Ok(Variable::Indep(single(sub)?)),
        "y" => Ok(Variable::InvBase(single(sub)?)),
        "u" => jet(sub).map(|(comp, index)| Variable::Jet { comp, index }),
        "v" => jet(sub).map(|(comp, index)| Variable::InvJet { comp, index }),
        "aux" => match sub.and_then(|s| s.name.clone()) {
            Some(n) => Ok(Variable::aux(&n)),
            None => Err("aux needs a name, e.g. aux[p1]".into()),
        },
        _ if is_reserved(name) => Err(format!("'{name}' is reserved")),
        _ if sub.is_some() => Err(format!("parameter '{name}' takes no subscript")),
        _ => Ok(Variable::param(name)),
    }
}

pub fn func_from(name: &str) -> Option<Func> {
    Some(match name {
        "atan" => Func::Atan,
        "sin" => Func::Sin,
        "cos" => Func::Cos,
        "exp" => Func::Exp,
        "log" => Func::Log,
        _ => return None,
    })
}

pub fn apply_named(name: &str, arg: &Expr) -> Result<Expr, String> {
    if name == "sqrt" {
        return arg.sqrt().map_err(|e| e.to_string());
    }
    let f = func_from(name).ok_or_else(|| format!("unknown function '{name}'"))?;
    Expr::apply(f, arg).map_err(|e| e.to_string())
}

struct ExprSemantics;

impl Semantics for ExprSemantics {
    type Value = Expr;
    fn number(&mut self, q: BigRational) -> Result<Expr, String> {
        Ok(Expr::rational(q))
    }
    fn ident(&mut self, name: &str, sub: Option<&Subscript>) -> Result<Expr, String> {
        variable_from(name, sub).map(Expr::var)
    }
    fn call(&mut self, name: &str, arg: Expr) -> Result<Expr, String> {
        apply_named(name, &arg)
    }
    fn add(&mut self, a: Expr, b: Expr) -> Result<Expr, String> {
        Ok(a + b)
    }
    fn neg(&mut self, a: Expr) -> Result<Expr, String> {
        Ok(-a)
    }
    fn mul(&mut self, a: Expr, b: Expr) -> Result<Expr, String> {
        Ok(a * b)
    }
    fn div(&mut self, a: Expr, b: Expr) -> Result<Expr, String> {
        a.div(&b).map_err(|e| e.to_string())
    }
    fn pow(&mut self, a: Expr, e: Exponent) -> Result<Expr, String> {
        a.pow(e).map_err(|e| e.to_string())
    }
}

pub fn parse_expr(s: &str) -> Result<Expr, SymError> {
    Parser::new(s, &mut ExprSemantics)?.parse_all()
}

fn fmt_exponent(f: &mut fmt::Formatter<'_>, e: &Exponent) -> fmt::Result {
    if e.is_one() {
        Ok(())
    } else if e.is_integer() && *e > Exponent::zero() {
        write!(f, "^{}", e.numer())
    } else if e.is_integer() {
        write!(f, "^({})", e.numer())
    } else {
        write!(f, "^({}/{})", e.numer(), e.denom())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Func(func, arg) => write!(f, "{}({arg})", func.name()),
            Atom::Base(b) => match b.as_constant() {
                Some(c) if c.is_integer() && c.is_positive() => write!(f, "{c}"),
                _ => write!(f, "({b})"),
            },
        }
    }
}

fn fmt_factors(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    for (i, (a, e)) in t.mono.factors().iter().enumerate() {
        if i > 0 {
            write!(f, "*")?;
        }
        write!(f, "{a}")?;
        fmt_exponent(f, e)?;
    }
    Ok(())
}

/// Write a term with a coefficient of the given absolute value.
fn fmt_term_abs(f: &mut fmt::Formatter<'_>, c: &BigRational, t: &Term) -> fmt::Result {
    if t.mono.is_one() {
        return write!(f, "{c}");
    }
    if !c.is_one() {
        write!(f, "{c}*")?;
    }
    fmt_factors(f, t)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, t) in self.terms().iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            fmt_term_abs(f, &t.coeff.abs(), t)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_round_trip() {
        for s in [
            "u[1,1]*(1 + u[1]^2)^(-3/2)",
            "v[a=2; I=1,1] - 3/2*v[a=3]",
            "x[1]^(-1) + sin(phi)*c1",
            "2^(1/2)*y",
            "aux[p1]^3 - atan(u[1])",
            "(-u[1])^(1/2)",
        ] {
            let e = parse_expr(s).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{s} -> {printed}");
        }
    }

    #[test]
    fn short_names() {
        assert_eq!(parse_expr("x").unwrap(), Expr::var(Variable::x(1)));
        assert_eq!(parse_expr("v[a=1; I=2]").unwrap(), Expr::var(Variable::v(1, &[2])));
        assert_eq!(parse_expr("u[a=1]").unwrap().to_string(), "u");
        assert_eq!(parse_expr("0.25 + 1e-3").unwrap(), Expr::frac(251, 1000));
    }

    #[test]
    fn sqrt_is_half_power() {
        assert_eq!(parse_expr("sqrt(1+u[1]^2)").unwrap(), parse_expr("(1+u[1]^2)^(1/2)").unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_expr("foo(x)"), Err(SymError::Parse { .. })));
        assert!(matches!(parse_expr("x^y"), Err(SymError::Parse { .. })));
        assert!(matches!(parse_expr("x +"), Err(SymError::Parse { .. })));
        assert!(matches!(parse_expr("u[0]"), Err(SymError::Parse { .. })));
        assert!(matches!(parse_expr("1/(x-x)"), Err(SymError::Parse { .. })));
    }
}
