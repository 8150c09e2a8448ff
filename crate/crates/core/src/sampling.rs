//! Seeded random points for numeric certificates.

use std::collections::HashMap;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::symcore::{eval, Expr, SymError, Variable, ZeroTest};

pub(crate) fn rng_for(zt: &ZeroTest, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(zt.seed ^ stream.wrapping_mul(0xD134_2543_DE82_EF95))
}

/// Rational in `[-bound, bound]` with denominator 1000.
pub(crate) fn small_rational(rng: &mut ChaCha8Rng, bound: f64) -> BigRational {
    let n = (bound * 1000.0) as i64;
    BigRational::new(rng.gen_range(-n..=n).into(), 1000.into())
}

pub(crate) type Point = HashMap<Variable, f64>;

pub(crate) fn eval_at(e: &Expr, pt: &Point) -> Result<f64, SymError> {
    eval::<f64>(e, &|v| pt.get(v).copied())
}

/// Float point for the given variables; parameters are kept small so that
/// angles do not wrap.
pub(crate) fn local_point(vars: impl Iterator<Item = Variable>, rng: &mut ChaCha8Rng) -> Point {
    let mut pt = Point::new();
    for v in vars {
        let bound = match v {
            Variable::Param(_) => 0.5,
            _ => 1.0,
        };
        let x = small_rational(rng, bound);
        pt.insert(v, crate::scalar::rational_to_f64(&x));
    }
    pt
}
