//! Exact multivariate polynomial division, treating every atom as an
//! indeterminate. Only used when both operands are genuine polynomials.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::expr::{Atom, Exponent, Expr};

type Poly = BTreeMap<Vec<u32>, BigRational>;

const STEP_CAP: usize = 20_000;

fn to_poly(e: &Expr, atoms: &[Atom]) -> Option<Poly> {
    let mut p = Poly::new();
    for t in e.terms() {
        let mut exps = vec![0u32; atoms.len()];
        for (a, x) in t.mono.factors() {
            if !x.is_integer() || *x < Exponent::zero() {
                return None;
            }
            let idx = atoms.binary_search(a).ok()?;
            exps[idx] = x.to_integer() as u32;
        }
        p.insert(exps, t.coeff.clone());
    }
    Some(p)
}

fn from_poly(p: &Poly, atoms: &[Atom]) -> Expr {
    Expr::sum(p.iter().map(|(exps, c)| {
        let raw: Vec<(Atom, Exponent)> = exps
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (atoms[i].clone(), Exponent::from_integer(n as i64)))
            .collect();
        Expr::from_factors(c.clone(), raw)
    }))
}

/// `num / den` when the division is exact in the polynomial ring.
pub fn exact_quotient(num: &Expr, den: &Expr) -> Option<Expr> {
    let mut atoms: Vec<Atom> = Vec::new();
    for e in [num, den] {
        for t in e.terms() {
            for (a, _) in t.mono.factors() {
                atoms.push(a.clone());
            }
        }
    }
    atoms.sort();
    atoms.dedup();
    let mut r = to_poly(num, &atoms)?;
    let d = to_poly(den, &atoms)?;
    let (ld_exp, ld_c) = d.iter().next_back().map(|(k, v)| (k.clone(), v.clone()))?;
    let mut q = Poly::new();
    let mut steps = 0;
    while let Some((lr_exp, lr_c)) = r.iter().next_back().map(|(k, v)| (k.clone(), v.clone())) {
        steps += 1;
        if steps > STEP_CAP {
            return None;
        }
        if lr_exp.iter().zip(&ld_exp).any(|(a, b)| a < b) {
            return None;
        }
        let shift: Vec<u32> = lr_exp.iter().zip(&ld_exp).map(|(a, b)| a - b).collect();
        let c = &lr_c / &ld_c;
        for (k, v) in &d {
            let key: Vec<u32> = k.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let entry = r.entry(key).or_insert_with(BigRational::zero);
            *entry -= &c * v;
            if entry.is_zero() {
                let key: Vec<u32> = k.iter().zip(&shift).map(|(a, b)| a + b).collect();
                r.remove(&key);
            }
        }
        *q.entry(shift).or_insert_with(BigRational::zero) += c;
    }
    q.retain(|_, c| !c.is_zero());
    if q.is_empty() && !num.is_zero() {
        return None;
    }
    Some(from_poly(&q, &atoms))
}

/// Bring a sum over the common denominator of its integer-power bases and
/// cancel whatever factors divide the numerator exactly.
pub fn together(e: &Expr) -> Expr {
    if e.len() < 2 {
        return e.clone();
    }
    let mut worst: BTreeMap<Atom, i64> = BTreeMap::new();
    for t in e.terms() {
        for (a, x) in t.mono.factors() {
            if matches!(a, Atom::Base(b) if b.len() > 1) && x.is_integer() && *x < Exponent::zero() {
                let slot = worst.entry(a.clone()).or_insert(0);
                *slot = (*slot).max(-x.to_integer());
            }
        }
    }
    if worst.is_empty() {
        return e.clone();
    }
    let numer = Expr::sum(e.terms().iter().map(|t| {
        let mut kept = Vec::new();
        let mut lift = Expr::one();
        for (a, x) in t.mono.factors() {
            match worst.get(a) {
                Some(&k) if x.is_integer() => {
                    let n = x.to_integer() + k;
                    if n > 0 {
                        lift = &lift * &Expr::from_atom(a.clone()).powi(n).expect("positive power");
                    }
                }
                _ => kept.push((a.clone(), *x)),
            }
        }
        for (a, &k) in &worst {
            if !t.mono.factors().iter().any(|(b, _)| b == a) {
                lift = &lift * &Expr::from_atom(a.clone()).powi(k).expect("positive power");
            }
        }
        &Expr::from_factors(t.coeff.clone(), kept) * &lift
    }));
    let mut numer = numer;
    let mut denom = Expr::one();
    for (a, k) in worst {
        let base = Expr::from_atom(a.clone());
        let mut left = k;
        while left > 0 && !numer.is_zero() {
            match exact_quotient(&numer, &base) {
                Some(q) => {
                    numer = q;
                    left -= 1;
                }
                None => break,
            }
        }
        if left > 0 && !numer.is_zero() {
            denom = &denom * &Expr::from_atom(a).powi(-left).expect("nonzero base");
        }
    }
    &numer * &denom
}
