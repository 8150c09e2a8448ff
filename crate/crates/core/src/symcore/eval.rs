use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::expr::{Atom, Expr};
use super::{SymError, Variable};
use crate::scalar::{Number, Scalar, ScalarError};

impl From<ScalarError> for SymError {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::Pole => SymError::Pole,
            ScalarError::Domain(m) => SymError::Domain(m),
            ScalarError::Inexact => SymError::Inexact,
        }
    }
}

/// Evaluate with every variable supplied by `lookup`.
pub fn eval<S: Scalar>(e: &Expr, lookup: &dyn Fn(&Variable) -> Option<S>) -> Result<S, SymError> {
    eval_scaled(e, lookup).map(|(v, _)| v)
}

/// Evaluate and also return a magnitude bound used to judge float
/// cancellation: rounding noise is roughly `eps * scale`.
pub fn eval_scaled<S: Scalar>(e: &Expr, lookup: &dyn Fn(&Variable) -> Option<S>) -> Result<(S, f64), SymError> {
    Evaluator { lookup, cache: HashMap::new() }.expr(e)
}

struct Evaluator<'a, S> {
    lookup: &'a dyn Fn(&Variable) -> Option<S>,
    cache: HashMap<usize, (S, f64)>,
}

impl<S: Scalar> Evaluator<'_, S> {
    fn expr(&mut self, e: &Expr) -> Result<(S, f64), SymError> {
        if let Some(hit) = self.cache.get(&e.ptr_id()) {
            return Ok(hit.clone());
        }
        let mut total = S::zero();
        let mut scale = 0.0;
        for t in e.terms() {
            let c = S::from_rational(&t.coeff);
            let mut val = c.clone();
            let mut sc = c.magnitude();
            for (atom, x) in t.mono.factors() {
                let (a, asc) = self.atom(atom)?;
                let p = a.pow_ratio(*x.numer(), *x.denom())?;
                let pm = p.magnitude();
                let xs = x.numer().abs() as f64 / *x.denom() as f64;
                let am = a.magnitude();
                let psc = if *x.numer() > 0 {
                    asc.powf(xs).max(pm)
                } else {
                    pm * (asc / am.max(f64::MIN_POSITIVE)).max(1.0) * xs.max(1.0)
                };
                val = val * p;
                sc *= psc;
            }
            total = total + val;
            scale += sc;
        }
        let out = (total, scale);
        self.cache.insert(e.ptr_id(), out.clone());
        Ok(out)
    }

    fn atom(&mut self, a: &Atom) -> Result<(S, f64), SymError> {
        match a {
            Atom::Var(v) => {
                let x = (self.lookup)(v).ok_or_else(|| SymError::Unbound(v.clone()))?;
                let m = x.magnitude();
                Ok((x, m))
            }
            Atom::Base(b) => self.expr(b),
            Atom::Func(f, arg) => {
                let (x, xs) = self.expr(arg)?;
                let y = x.elementary(*f)?;
                let ym = y.magnitude();
                let sc = match f {
                    super::Func::Exp => ym * (1.0 + xs),
                    super::Func::Log => ym + xs / x.magnitude().max(f64::MIN_POSITIVE),
                    _ => ym + xs,
                };
                Ok((y, sc))
            }
        }
    }
}

/// Randomized identity testing at seeded rational points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroTest {
    pub seed: u64,
    pub samples: usize,
    /// Relative tolerance for float-valued samples.
    pub tolerance: f64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { seed: 42, samples: 8, tolerance: 1e-8 }
    }
}

/// A random rational in (0, 2] with denominator in [1000, 10^4].
fn sample_value(rng: &mut ChaCha8Rng) -> BigRational {
    let d: i64 = rng.gen_range(1000..=10_000);
    let n: i64 = rng.gen_range(1..=2 * d).min(10_000);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl ZeroTest {
    pub fn new(seed: u64, samples: usize) -> Self {
        ZeroTest { seed, samples, ..Default::default() }
    }

    /// The `attempt`-th sample point for a variable set.
    pub fn point(&self, vars: &BTreeSet<Variable>, attempt: usize) -> HashMap<Variable, BigRational> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        vars.iter().map(|v| (v.clone(), sample_value(&mut rng))).collect()
    }

    /// Whether a sampled value counts as zero.
    pub fn negligible(&self, value: &Number, scale: f64) -> bool {
        match value {
            Number::Exact(q) => q.is_zero(),
            Number::Float(x) => x.is_finite() && x.abs() <= self.tolerance * scale.max(1e-300),
        }
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, SymError> {
        if e.is_zero() {
            return Ok(true);
        }
        if let Some(c) = e.as_constant() {
            return Ok(c.is_zero());
        }
        let vars = e.variables();
        let mut good = 0;
        for attempt in 0..4 * self.samples.max(1) {
            let pt = self.point(&vars, attempt);
            let lookup = |v: &Variable| pt.get(v).map(|q| Number::Exact(q.clone()));
            match eval_scaled(e, &lookup) {
                Ok((val, scale)) => {
                    if !self.negligible(&val, scale) {
                        return Ok(false);
                    }
                    good += 1;
                    if good >= self.samples {
                        return Ok(true);
                    }
                }
                Err(SymError::Pole | SymError::Domain(_)) => continue,
                Err(other) => return Err(other),
            }
        }
        if good == 0 {
            Err(SymError::IndeterminateAtAllSamples)
        } else {
            Ok(true)
        }
    }

    pub fn equal(&self, a: &Expr, b: &Expr) -> Result<bool, SymError> {
        if a == b {
            return Ok(true);
        }
        self.is_zero(&(a - b))
    }

    /// Float evaluation at the `attempt`-th sample point.
    pub fn eval_f64(&self, e: &Expr, vars: &BTreeSet<Variable>, attempt: usize) -> Result<f64, SymError> {
        let pt = self.point(vars, attempt);
        let lookup = |v: &Variable| pt.get(v).map(|q| Number::Exact(q.clone()));
        eval(e, &lookup).map(|n| n.to_f64())
    }
}
