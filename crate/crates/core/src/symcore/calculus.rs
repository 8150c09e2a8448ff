use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::One;

use super::expr::{Atom, Exponent, Expr};
use super::{Func, SymError, Variable};

/// Partial derivative with respect to `v`.
pub fn diff(e: &Expr, v: &Variable) -> Expr {
    Differ { v, cache: HashMap::new() }.expr(e)
}

struct Differ<'a> {
    v: &'a Variable,
    cache: HashMap<usize, Expr>,
}

impl Differ<'_> {
    fn expr(&mut self, e: &Expr) -> Expr {
        if !e.contains(self.v) {
            return Expr::zero();
        }
        if let Some(hit) = self.cache.get(&e.ptr_id()) {
            return hit.clone();
        }
        let mut parts = Vec::new();
        for t in e.terms() {
            let f = t.mono.factors();
            for (i, (atom, x)) in f.iter().enumerate() {
                let da = self.atom(atom);
                if da.is_zero() {
                    continue;
                }
                let mut raw = f.to_vec();
                raw[i].1 = *x - Exponent::one();
                let coeff = &t.coeff * BigRational::new((*x.numer()).into(), (*x.denom()).into());
                parts.push(&Expr::from_factors(coeff, raw) * &da);
            }
        }
        let out = Expr::sum(parts);
        self.cache.insert(e.ptr_id(), out.clone());
        out
    }

    fn atom(&mut self, a: &Atom) -> Expr {
        match a {
            Atom::Var(w) => {
                if w == self.v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Atom::Base(b) => self.expr(b),
            Atom::Func(f, arg) => {
                let inner = self.expr(arg);
                if inner.is_zero() {
                    return inner;
                }
                let outer = match f {
                    Func::Atan => (Expr::one() + arg * arg).recip().expect("1 + t^2 is nonzero"),
                    Func::Sin => Expr::apply(Func::Cos, arg).expect("cos is total"),
                    Func::Cos => -Expr::apply(Func::Sin, arg).expect("sin is total"),
                    Func::Exp => Expr::apply(Func::Exp, arg).expect("exp is total"),
                    Func::Log => arg.recip().expect("log argument is nonzero"),
                };
                &outer * &inner
            }
        }
    }
}

/// Simultaneous substitution of variables by expressions.
pub fn subst(e: &Expr, map: &HashMap<Variable, Expr>) -> Result<Expr, SymError> {
    subst_with(e, &|v| map.get(v).cloned())
}

/// Substitution driven by a lookup; variables mapped to `None` stay.
pub fn subst_with(e: &Expr, lookup: &dyn Fn(&Variable) -> Option<Expr>) -> Result<Expr, SymError> {
    Subst { lookup, cache: HashMap::new(), rebuild: false }.expr(e)
}

/// Rebuild every factor through the canonicalizing constructors.
pub fn simplify(e: &Expr) -> Expr {
    Subst { lookup: &|_| None, cache: HashMap::new(), rebuild: true }
        .expr(e)
        .expect("rebuilding a well-formed expression cannot fail")
}

struct Subst<'a> {
    lookup: &'a dyn Fn(&Variable) -> Option<Expr>,
    cache: HashMap<usize, Expr>,
    rebuild: bool,
}

impl Subst<'_> {
    fn touches(&self, e: &Expr) -> bool {
        self.rebuild || e.variables().iter().any(|v| (self.lookup)(v).is_some())
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr, SymError> {
        if !self.touches(e) {
            return Ok(e.clone());
        }
        if let Some(hit) = self.cache.get(&e.ptr_id()) {
            return Ok(hit.clone());
        }
        let mut untouched = Vec::new();
        let mut parts = Vec::new();
        for t in e.terms() {
            if !self.rebuild && !t.mono.factors().iter().any(|(a, _)| self.atom_touched(a)) {
                untouched.push(Expr::from_term(t));
                continue;
            }
            let mut acc = Expr::rational(t.coeff.clone());
            for (a, x) in t.mono.factors() {
                let s = self.atom(a)?;
                acc = &acc * &s.pow(*x)?;
            }
            parts.push(acc);
        }
        untouched.extend(parts);
        let out = Expr::sum(untouched);
        self.cache.insert(e.ptr_id(), out.clone());
        Ok(out)
    }

    fn atom_touched(&self, a: &Atom) -> bool {
        match a {
            Atom::Var(v) => (self.lookup)(v).is_some(),
            Atom::Func(_, e) | Atom::Base(e) => self.touches(e),
        }
    }

    fn atom(&mut self, a: &Atom) -> Result<Expr, SymError> {
        match a {
            Atom::Var(v) => Ok((self.lookup)(v).unwrap_or_else(|| Expr::var(v.clone()))),
            Atom::Func(f, arg) => {
                let s = self.expr(arg)?;
                Expr::apply(*f, &s)
            }
            Atom::Base(b) => self.expr(b),
        }
    }
}
