use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};

use super::{Func, SymError, Variable};

/// Rational exponent of a factor.
pub type Exponent = Ratio<i64>;

/// A factor base. `Base` holds either a primitive sum of at least two terms
/// or a positive integer constant (for surds such as `2^(1/2)`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Variable),
    Func(Func, Expr),
    Base(Expr),
}

/// Sorted product of atoms with nonzero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub(crate) Vec<(Atom, Exponent)>);

impl Monomial {
    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigRational,
    pub mono: Monomial,
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mono.cmp(&other.mono).then_with(|| self.coeff.cmp(&other.coeff))
    }
}

struct Inner {
    terms: Vec<Term>,
    vars: OnceLock<Arc<BTreeSet<Variable>>>,
}

/// Immutable canonical sum of terms. Cheap to clone.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.terms == other.0.terms
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.terms.cmp(&other.0.terms)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.terms.hash(state);
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn exp_floor(e: Exponent) -> i64 {
    e.floor().to_integer()
}

fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    let r = num_integer::Roots::nth_root(n, k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

fn rat_powi(c: &BigRational, n: i64) -> BigRational {
    let p = num_traits::pow(c.clone(), n.unsigned_abs() as usize);
    if n < 0 {
        p.recip()
    } else {
        p
    }
}

/// Merge two sorted factor lists, adding exponents of equal atoms.
fn merge_factors(a: &[(Atom, Exponent)], b: &[(Atom, Exponent)]) -> Vec<(Atom, Exponent)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Bring a sorted, merged factor list to canonical form. Returns the
/// rational factor split off, the remaining monomial and factors that must
/// be expanded into the result by multiplication.
fn normalize_factors(raw: Vec<(Atom, Exponent)>) -> (BigRational, Monomial, Vec<Expr>) {
    let mut coeff = BigRational::one();
    let mut kept = Vec::with_capacity(raw.len());
    let mut expand = Vec::new();
    for (atom, e) in raw {
        if e.is_zero() {
            continue;
        }
        match &atom {
            Atom::Base(b) => {
                if let Some(c) = b.as_constant() {
                    let n = c.numer().clone();
                    let whole = exp_floor(e);
                    let frac = e - Exponent::from_integer(whole);
                    coeff *= rat_powi(&c, whole);
                    if frac.is_zero() {
                        continue;
                    }
                    if let Some(r) = int_root(&n, *frac.denom() as u32) {
                        coeff *= rat_powi(&BigRational::from_integer(r), *frac.numer());
                        continue;
                    }
                    kept.push((atom, frac));
                } else if e.is_integer() && e > Exponent::zero() {
                    expand.push(b.powi_expand(e.to_integer() as u32));
                } else {
                    kept.push((atom, e));
                }
            }
            Atom::Func(Func::Cos, arg) if e.is_integer() && e >= Exponent::from_integer(2) => {
                let n = e.to_integer();
                let sin = Expr::from_atom(Atom::Func(Func::Sin, arg.clone()));
                let one_minus = Expr::one() - &sin * &sin;
                expand.push(one_minus.powi_expand((n / 2) as u32));
                if n % 2 == 1 {
                    kept.push((atom, Exponent::one()));
                }
            }
            _ => kept.push((atom, e)),
        }
    }
    (coeff, Monomial(kept), expand)
}

impl Expr {
    fn from_terms_unchecked(terms: Vec<Term>) -> Expr {
        Expr(Arc::new(Inner { terms, vars: OnceLock::new() }))
    }

    /// Sort, merge equal monomials and drop zero coefficients.
    fn collect(mut terms: Vec<Term>) -> Expr {
        terms.sort_by(|a, b| a.mono.cmp(&b.mono));
        let mut out: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            if let Some(last) = out.last_mut() {
                if last.mono == t.mono {
                    last.coeff += t.coeff;
                    continue;
                }
            }
            out.push(t);
        }
        out.retain(|t| !t.coeff.is_zero());
        Expr::from_terms_unchecked(out)
    }

    pub fn zero() -> Expr {
        Expr::from_terms_unchecked(Vec::new())
    }

    pub fn one() -> Expr {
        Expr::rational(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::rational(rat(n))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        Expr::rational(BigRational::new(n.into(), d.into()))
    }

    pub fn rational(q: BigRational) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr::from_terms_unchecked(vec![Term { coeff: q, mono: Monomial::default() }])
    }

    pub fn var(v: Variable) -> Expr {
        Expr::from_atom(Atom::Var(v))
    }

    pub fn from_atom(atom: Atom) -> Expr {
        Expr::from_factors(BigRational::one(), vec![(atom, Exponent::one())])
    }

    /// `coeff * Π atom^e` for a sorted, merged factor list.
    pub(crate) fn from_factors(coeff: BigRational, raw: Vec<(Atom, Exponent)>) -> Expr {
        if coeff.is_zero() {
            return Expr::zero();
        }
        let (c, mono, expand) = normalize_factors(raw);
        let mut e = Expr::from_terms_unchecked(vec![Term { coeff: coeff * c, mono }]);
        for f in expand {
            e = &e * &f;
        }
        e
    }

    pub fn from_term(t: &Term) -> Expr {
        Expr::from_terms_unchecked(vec![t.clone()])
    }

    pub fn terms(&self) -> &[Term] {
        &self.0.terms
    }

    pub fn len(&self) -> usize {
        self.0.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.terms.is_empty()
    }

    /// Structural zero. Use `ZeroTest` for semantic zero.
    pub fn is_zero(&self) -> bool {
        self.0.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms() {
            [] => Some(BigRational::zero()),
            [t] if t.mono.is_one() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self.terms() {
            [t] if t.coeff.is_one() => match t.mono.0.as_slice() {
                [(Atom::Var(v), e)] if e.is_one() => Some(v),
                _ => None,
            },
            _ => None,
        }
    }

    /// Identity of the shared allocation; valid while `self` is alive.
    pub(crate) fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn variables(&self) -> Arc<BTreeSet<Variable>> {
        self.0
            .vars
            .get_or_init(|| {
                let mut set = BTreeSet::new();
                for t in self.terms() {
                    for (a, _) in &t.mono.0 {
                        match a {
                            Atom::Var(v) => {
                                set.insert(v.clone());
                            }
                            Atom::Func(_, e) | Atom::Base(e) => set.extend(e.variables().iter().cloned()),
                        }
                    }
                }
                Arc::new(set)
            })
            .clone()
    }

    pub fn contains(&self, v: &Variable) -> bool {
        self.variables().contains(v)
    }

    pub fn depends_on_any<'a>(&self, mut vs: impl Iterator<Item = &'a Variable>) -> bool {
        let set = self.variables();
        vs.any(|v| set.contains(v))
    }

    pub fn scale(&self, q: &BigRational) -> Expr {
        if q.is_zero() {
            return Expr::zero();
        }
        Expr::from_terms_unchecked(
            self.terms().iter().map(|t| Term { coeff: &t.coeff * q, mono: t.mono.clone() }).collect(),
        )
    }

    fn add_impl(&self, other: &Expr) -> Expr {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b) = (self.terms(), other.terms());
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].mono.cmp(&b[j].mono) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &a[i].coeff + &b[j].coeff;
                    if !c.is_zero() {
                        out.push(Term { coeff: c, mono: a[i].mono.clone() });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr::from_terms_unchecked(out)
    }

    fn mul_impl(&self, other: &Expr) -> Expr {
        if self.is_zero() || other.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        if let Some(r) = self.mul_matching_base(other).or_else(|| other.mul_matching_base(self)) {
            return r;
        }
        let mut plain = Vec::with_capacity(self.len() * other.len());
        let mut extra = Vec::new();
        for a in self.terms() {
            for b in other.terms() {
                let raw = merge_factors(&a.mono.0, &b.mono.0);
                let (c, mono, expand) = normalize_factors(raw);
                let coeff = &a.coeff * &b.coeff * c;
                if expand.is_empty() {
                    plain.push(Term { coeff, mono });
                } else {
                    let mut e = Expr::from_terms_unchecked(vec![Term { coeff, mono }]);
                    for f in expand {
                        e = e.mul_impl(&f);
                    }
                    extra.push(e);
                }
            }
        }
        let mut out = Expr::collect(plain);
        for e in extra {
            out = out.add_impl(&e);
        }
        out
    }

    fn has_base_atoms(&self) -> bool {
        self.terms().iter().any(|t| t.mono.0.iter().any(|(a, _)| matches!(a, Atom::Base(_))))
    }

    /// When `sum` is a multiple of a base already present in `self` as a
    /// factor, multiply by that factor instead of expanding, so that
    /// `(1+t^2)^(-1) * (1+t^2)` collapses to 1.
    fn mul_matching_base(&self, sum: &Expr) -> Option<Expr> {
        if sum.len() < 2 || !self.has_base_atoms() || sum.has_base_atoms() {
            return None;
        }
        let (head, prim) = sum.split_content();
        if prim.len() < 2 {
            return None;
        }
        let flipped = -&prim;
        let present = |b: &Expr| {
            self.terms().iter().any(|t| t.mono.0.iter().any(|(a, _)| matches!(a, Atom::Base(x) if x == b)))
        };
        let (head, base) = if present(&prim) {
            (head, prim)
        } else if present(&flipped) {
            (-&head, flipped)
        } else {
            return None;
        };
        let factor = Expr::from_terms_unchecked(vec![Term {
            coeff: BigRational::one(),
            mono: Monomial(vec![(Atom::Base(base), Exponent::one())]),
        }]);
        Some(self.mul_impl(&head).mul_impl(&factor))
    }

    /// Positive integer power by repeated squaring (always expands).
    pub(crate) fn powi_expand(&self, mut n: u32) -> Expr {
        let mut base = self.clone();
        let mut acc = Expr::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn powi(&self, n: i64) -> Result<Expr, SymError> {
        self.pow(Exponent::from_integer(n))
    }

    pub fn pow(&self, p: Exponent) -> Result<Expr, SymError> {
        if p.is_zero() {
            return Ok(Expr::one());
        }
        if self.is_zero() {
            return if p > Exponent::zero() { Ok(Expr::zero()) } else { Err(SymError::DivisionByZero) };
        }
        if p.is_integer() && p > Exponent::zero() {
            return Ok(self.powi_expand(p.to_integer() as u32));
        }
        if self.len() == 1 {
            return Ok(pow_term(&self.terms()[0], p));
        }
        let (head, rest) = self.split_content();
        if rest.len() <= 1 {
            return Ok(pow_term(&(&head * &rest).terms()[0], p));
        }
        let h = &head.terms()[0];
        let (head, rest) = if h.coeff.is_negative() && !p.is_integer() {
            (-&head, -&rest)
        } else {
            (head, rest)
        };
        let base = Expr::from_terms_unchecked(vec![Term {
            coeff: BigRational::one(),
            mono: Monomial(vec![(Atom::Base(rest), p)]),
        }]);
        Ok(&pow_term(&head.terms()[0], p) * &base)
    }

    /// Split a sum into `c * m` times a primitive sum whose first coefficient
    /// is positive, `m` holding the least exponent of each atom.
    pub fn split_content(&self) -> (Expr, Expr) {
        let mut mins: Vec<(Atom, Exponent)> = Vec::new();
        for (idx, t) in self.terms().iter().enumerate() {
            mins = if idx == 0 { t.mono.0.clone() } else { merge_min(&mins, &t.mono.0) };
        }
        mins.retain(|(_, e)| !e.is_zero());
        let inv: Vec<(Atom, Exponent)> = mins.iter().map(|(a, e)| (a.clone(), -*e)).collect();
        let mut rest = if inv.is_empty() { self.clone() } else { self * &Expr::from_factors(BigRational::one(), inv) };
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for t in rest.terms() {
            num_gcd = num_gcd.gcd(t.coeff.numer());
            den_lcm = den_lcm.lcm(t.coeff.denom());
        }
        let mut content = if num_gcd.is_zero() { BigRational::one() } else { BigRational::new(num_gcd, den_lcm) };
        if rest.terms().first().is_some_and(|t| t.coeff.is_negative()) {
            content = -content;
        }
        rest = rest.scale(&content.recip());
        let head = Expr::from_terms_unchecked(vec![Term { coeff: content, mono: Monomial(mins) }]);
        (head, rest)
    }

    pub fn recip(&self) -> Result<Expr, SymError> {
        self.powi(-1)
    }

    pub fn sqrt(&self) -> Result<Expr, SymError> {
        self.pow(Exponent::new(1, 2))
    }

    /// Exact quotient. Tries polynomial division before falling back to a
    /// reciprocal factor.
    pub fn div(&self, other: &Expr) -> Result<Expr, SymError> {
        if other.is_zero() {
            return Err(SymError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Expr::zero());
        }
        if other.len() == 1 {
            return Ok(self * &other.recip()?);
        }
        if let Some(q) = super::poly::exact_quotient(self, other) {
            return Ok(q);
        }
        Ok(self * &other.recip()?)
    }

    pub fn apply(f: Func, arg: &Expr) -> Result<Expr, SymError> {
        if let Some(c) = arg.as_constant() {
            match f {
                Func::Sin | Func::Atan if c.is_zero() => return Ok(Expr::zero()),
                Func::Cos | Func::Exp if c.is_zero() => return Ok(Expr::one()),
                Func::Log if c.is_one() => return Ok(Expr::zero()),
                Func::Log if !c.is_positive() => return Err(SymError::Domain(format!("log({c})"))),
                _ => {}
            }
        }
        if arg.terms().first().is_some_and(|t| t.coeff.is_negative()) {
            match f {
                Func::Sin | Func::Atan => return Ok(-Expr::apply(f, &-arg)?),
                Func::Cos => return Expr::apply(f, &-arg),
                _ => {}
            }
        }
        if let Some((g, inner)) = arg.as_single_func() {
            match (f, g) {
                (Func::Sin, Func::Atan) => {
                    return Ok(inner * &(Expr::one() + inner * inner).pow(Exponent::new(-1, 2))?);
                }
                (Func::Cos, Func::Atan) => return (Expr::one() + inner * inner).pow(Exponent::new(-1, 2)),
                (Func::Exp, Func::Log) | (Func::Log, Func::Exp) => return Ok(inner.clone()),
                _ => {}
            }
        }
        Ok(Expr::from_atom(Atom::Func(f, arg.clone())))
    }

    /// `f(inner)` when `self` is exactly one unit-coefficient function atom.
    pub fn as_single_func(&self) -> Option<(Func, &Expr)> {
        match self.terms() {
            [t] if t.coeff.is_one() => match t.mono.0.as_slice() {
                [(Atom::Func(f, inner), e)] if e.is_one() => Some((*f, inner)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let mut terms = Vec::new();
        for e in items {
            terms.extend(e.terms().iter().cloned());
        }
        Expr::collect(terms)
    }

    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        items.into_iter().fold(Expr::one(), |acc, e| &acc * &e)
    }

    /// Largest total exponent of variable-like atoms; a rough size measure.
    pub fn node_count(&self) -> usize {
        self.terms()
            .iter()
            .map(|t| {
                1 + t
                    .mono
                    .0
                    .iter()
                    .map(|(a, _)| match a {
                        Atom::Var(_) => 1,
                        Atom::Func(_, e) | Atom::Base(e) => 1 + e.node_count(),
                    })
                    .sum::<usize>()
            })
            .sum()
    }
}

/// Pointwise minimum of exponents, absent atoms counting as zero.
fn merge_min(a: &[(Atom, Exponent)], b: &[(Atom, Exponent)]) -> Vec<(Atom, Exponent)> {
    let zero = Exponent::zero();
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ord = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.0.cmp(&y.0),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push((a[i].0.clone(), a[i].1.min(zero)));
                i += 1;
            }
            Ordering::Greater => {
                out.push((b[j].0.clone(), b[j].1.min(zero)));
                j += 1;
            }
            Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1.min(b[j].1)));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn known_positive(a: &Atom) -> bool {
    match a {
        Atom::Func(Func::Exp, _) => true,
        Atom::Base(b) => b.as_constant().is_some(),
        _ => false,
    }
}

/// `(a^e)^p`. Folding to `a^(ep)` would drop an absolute value when an even
/// power is followed by an even root, so that case keeps `a^e` as a base.
fn power_of_factor(a: &Atom, e: Exponent, p: Exponent) -> (Atom, Exponent) {
    let ep = e * p;
    if e.numer() % 2 == 0 && p.denom() % 2 == 0 && ep.numer() % 2 != 0 && !known_positive(a) {
        let inner = Expr::from_terms_unchecked(vec![Term { coeff: BigRational::one(), mono: Monomial(vec![(a.clone(), e)]) }]);
        return (Atom::Base(inner), p);
    }
    (a.clone(), ep)
}

fn pow_term(t: &Term, p: Exponent) -> Expr {
    let mut c = t.coeff.clone();
    let mut sign = BigRational::one();
    let mut raw: Vec<(Atom, Exponent)> = t.mono.0.iter().map(|(a, e)| power_of_factor(a, *e, p)).collect();
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    if p.is_integer() {
        return Expr::from_factors(rat_powi(&c, p.to_integer()), raw);
    }
    if c.is_negative() {
        if p.denom() % 2 == 1 {
            if p.numer() % 2 != 0 {
                sign = -sign;
            }
            c = -c;
        } else {
            // Even root of a negative single term: keep it as an opaque base.
            return Expr::from_factors(
                BigRational::one(),
                vec![(Atom::Base(Expr::from_terms_unchecked(vec![t.clone()])), p)],
            );
        }
    }
    let mut consts = Vec::new();
    if !c.numer().is_one() {
        consts.push((Atom::Base(Expr::rational(BigRational::from_integer(c.numer().clone()))), p));
    }
    if !c.denom().is_one() {
        consts.push((Atom::Base(Expr::rational(BigRational::from_integer(c.denom().clone()))), -p));
    }
    consts.sort_by(|a, b| a.0.cmp(&b.0));
    raw = merge_factors(&consts, &raw);
    Expr::from_factors(sign, raw)
}

macro_rules! binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                self.$imp(rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$imp(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$imp(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$imp(&rhs)
            }
        }
    };
}

impl Expr {
    fn sub_impl(&self, other: &Expr) -> Expr {
        self.add_impl(&-other)
    }
}

binop!(Add, add, add_impl);
binop!(Sub, sub, sub_impl);
binop!(Mul, mul, mul_impl);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_terms_unchecked(
            self.terms().iter().map(|t| Term { coeff: -t.coeff.clone(), mono: t.mono.clone() }).collect(),
        )
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<Variable> for Expr {
    fn from(v: Variable) -> Expr {
        Expr::var(v)
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}
