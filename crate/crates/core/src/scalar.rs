//! Scalar abstraction shared by expression evaluation, dense linear algebra
//! and the numerical integrator.
//!
//! `BigRational` gives exact answers, `f64`/`f32` give fast approximate ones,
//! and [`Number`] mixes the two: it stays exact until an irrational operation
//! (fractional power, elementary function) forces a float.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::symcore::Func;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("pole: division by zero")]
    Pole,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("value is not exactly representable")]
    Inexact,
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(q: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    /// Absolute size, used for pivot choice and tolerance scales.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }
    fn is_exact(&self) -> bool;
    /// Zero up to the rounding noise expected at `scale`.
    fn negligible(&self, scale: f64) -> bool;
    fn pow_ratio(&self, num: i64, den: i64) -> Result<Self, ScalarError>;
    fn elementary(&self, f: Func) -> Result<Self, ScalarError>;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
}

fn float_pow(x: f64, num: i64, den: i64) -> Result<f64, ScalarError> {
    if x == 0.0 {
        return if num < 0 { Err(ScalarError::Pole) } else if num == 0 { Ok(1.0) } else { Ok(0.0) };
    }
    if den == 1 {
        return Ok(x.powi(num as i32));
    }
    if x < 0.0 {
        if den % 2 == 0 {
            return Err(ScalarError::Domain(format!("negative base {x} under even root")));
        }
        return Ok(-((-x).powf(num as f64 / den as f64)));
    }
    Ok(x.powf(num as f64 / den as f64))
}

fn float_elementary(x: f64, f: Func) -> Result<f64, ScalarError> {
    Ok(match f {
        Func::Atan => x.atan(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err(ScalarError::Domain(format!("log of non-positive {x}")));
            }
            x.ln()
        }
    })
}

const F64_TOL: f64 = 1e-9;
const F32_TOL: f32 = 1e-4;

impl Scalar for f64 {
    fn from_rational(q: &BigRational) -> Self {
        rational_to_f64(q)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= F64_TOL * scale.max(f64::MIN_POSITIVE)
    }
    fn pow_ratio(&self, num: i64, den: i64) -> Result<Self, ScalarError> {
        float_pow(*self, num, den)
    }
    fn elementary(&self, f: Func) -> Result<Self, ScalarError> {
        float_elementary(*self, f)
    }
}

impl Scalar for f32 {
    fn from_rational(q: &BigRational) -> Self {
        rational_to_f64(q) as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn is_exact(&self) -> bool {
        false
    }
    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= F32_TOL * (scale as f32).max(f32::MIN_POSITIVE)
    }
    fn pow_ratio(&self, num: i64, den: i64) -> Result<Self, ScalarError> {
        float_pow(*self as f64, num, den).map(|x| x as f32)
    }
    fn elementary(&self, f: Func) -> Result<Self, ScalarError> {
        float_elementary(*self as f64, f).map(|x| x as f32)
    }
}

/// Exact `n`-th root of a non-negative integer, if it exists.
fn exact_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        if k % 2 == 0 {
            return None;
        }
        return exact_root(&-n, k).map(|r| -r);
    }
    let r = num_integer::Roots::nth_root(n, k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

fn rational_pow_exact(q: &BigRational, num: i64, den: i64) -> Result<BigRational, ScalarError> {
    if q.is_zero() {
        return if num < 0 { Err(ScalarError::Pole) } else if num == 0 { Ok(BigRational::one()) } else { Ok(BigRational::zero()) };
    }
    let base = if den == 1 {
        q.clone()
    } else {
        if q.is_negative() && den % 2 == 0 {
            return Err(ScalarError::Domain("negative base under even root".into()));
        }
        let n = exact_root(q.numer(), den as u32).ok_or(ScalarError::Inexact)?;
        let d = exact_root(q.denom(), den as u32).ok_or(ScalarError::Inexact)?;
        BigRational::new(n, d)
    };
    let p = num_traits::pow(base, num.unsigned_abs() as usize);
    Ok(if num < 0 { p.recip() } else { p })
}

impl Scalar for BigRational {
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn is_exact(&self) -> bool {
        true
    }
    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn pow_ratio(&self, num: i64, den: i64) -> Result<Self, ScalarError> {
        rational_pow_exact(self, num, den)
    }
    fn elementary(&self, f: Func) -> Result<Self, ScalarError> {
        exact_elementary(self, f).ok_or(ScalarError::Inexact)
    }
}

fn exact_elementary(q: &BigRational, f: Func) -> Option<BigRational> {
    match f {
        Func::Atan | Func::Sin if q.is_zero() => Some(BigRational::zero()),
        Func::Cos | Func::Exp if q.is_zero() => Some(BigRational::one()),
        Func::Log if q.is_one() => Some(BigRational::zero()),
        _ => None,
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Huge numerator or denominator: shift both down first.
            let nb = q.numer().bits() as i64;
            let db = q.denom().bits() as i64;
            let shift = (nb.max(db) - 900).max(0) as usize;
            let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (q.denom() >> shift).to_f64().unwrap_or(1.0);
            if d == 0.0 {
                if q.numer().sign() == Sign::Minus { f64::NEG_INFINITY } else { f64::INFINITY }
            } else {
                n / d
            }
        }
    }
}

/// Mixed exact/float number produced by expression evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Number::Exact(q) => Some(q),
            Number::Float(_) => None,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(q) => write!(f, "{q}"),
            Number::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<BigRational> for Number {
    fn from(q: BigRational) -> Self {
        Number::Exact(q)
    }
}

impl From<f64> for Number {
    fn from(x: f64) -> Self {
        Number::Float(x)
    }
}

macro_rules! number_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for Number {
            type Output = Number;
            fn $method(self, rhs: Number) -> Number {
                match (self, rhs) {
                    (Number::Exact(a), Number::Exact(b)) => Number::Exact(a $op b),
                    (a, b) => Number::Float(a.to_f64() $op b.to_f64()),
                }
            }
        }
    };
}

number_binop!(Add, add, +);
number_binop!(Sub, sub, -);
number_binop!(Mul, mul, *);

impl Div for Number {
    type Output = Number;
    fn div(self, rhs: Number) -> Number {
        match (self, rhs) {
            (Number::Exact(a), Number::Exact(b)) if !b.is_zero() => Number::Exact(a / b),
            (a, b) => Number::Float(a.to_f64() / b.to_f64()),
        }
    }
}

impl Neg for Number {
    type Output = Number;
    fn neg(self) -> Number {
        match self {
            Number::Exact(a) => Number::Exact(-a),
            Number::Float(x) => Number::Float(-x),
        }
    }
}

impl Zero for Number {
    fn zero() -> Self {
        Number::Exact(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        match self {
            Number::Exact(q) => q.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }
}

impl One for Number {
    fn one() -> Self {
        Number::Exact(BigRational::one())
    }
}

impl Scalar for Number {
    fn from_rational(q: &BigRational) -> Self {
        Number::Exact(q.clone())
    }
    fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(q) => rational_to_f64(q),
            Number::Float(x) => *x,
        }
    }
    fn is_exact(&self) -> bool {
        matches!(self, Number::Exact(_))
    }
    fn negligible(&self, scale: f64) -> bool {
        match self {
            Number::Exact(q) => q.is_zero(),
            Number::Float(x) => x.negligible(scale),
        }
    }
    fn pow_ratio(&self, num: i64, den: i64) -> Result<Self, ScalarError> {
        match self {
            Number::Exact(q) => match rational_pow_exact(q, num, den) {
                Ok(r) => Ok(Number::Exact(r)),
                Err(ScalarError::Inexact) => float_pow(rational_to_f64(q), num, den).map(Number::Float),
                Err(e) => Err(e),
            },
            Number::Float(x) => float_pow(*x, num, den).map(Number::Float),
        }
    }
    fn elementary(&self, f: Func) -> Result<Self, ScalarError> {
        match self {
            Number::Exact(q) => match exact_elementary(q, f) {
                Some(r) => Ok(Number::Exact(r)),
                None => float_elementary(rational_to_f64(q), f).map(Number::Float),
            },
            Number::Float(x) => float_elementary(*x, f).map(Number::Float),
        }
    }
}

/// Dense row-major matrix over any [`Scalar`].
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    fn scale(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    /// Reduced row echelon form and pivot columns. Entries that are
    /// negligible relative to the largest input entry are treated as zero.
    pub fn rref(&self) -> (Matrix<S>, Vec<usize>) {
        let scale = self.scale();
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let mut best = None;
            let mut best_mag = -1.0;
            for i in r..m.rows {
                let v = &m[(i, c)];
                if v.negligible(scale) {
                    continue;
                }
                let mag = v.magnitude();
                // Exact scalars: any nonzero pivot is fine, keep the first.
                if v.is_exact() {
                    best = Some(i);
                    break;
                }
                if mag > best_mag {
                    best_mag = mag;
                    best = Some(i);
                }
            }
            let Some(p) = best else {
                for i in r..m.rows {
                    m[(i, c)] = S::zero();
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = S::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                let v = m[(r, j)].clone() * inv.clone();
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in 0..m.cols {
                    let v = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    m[(i, j)] = if v.negligible(scale) { S::zero() } else { v };
                }
                m[(i, c)] = S::zero();
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space.
    pub fn kernel(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    /// Some solution of `self * x = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix<S>> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = S::one();
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = r[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_rank_and_kernel() {
        let m = Matrix::from_rows(vec![
            vec![q(1, 1), q(2, 1), q(3, 1)],
            vec![q(2, 1), q(4, 1), q(6, 1)],
            vec![q(1, 1), q(0, 1), q(1, 1)],
        ]);
        assert_eq!(m.rank(), 2);
        let ker = m.kernel();
        assert_eq!(ker.len(), 1);
        let prod = m.mul(&Matrix::from_rows(ker.iter().map(|v| v.clone()).collect()).transpose());
        assert!((0..3).all(|i| prod[(i, 0)].is_zero()));
    }

    #[test]
    fn float_inverse() {
        let m = Matrix::from_rows(vec![vec![4.0, 7.0], vec![2.0, 6.0]]);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        assert!((id[(0, 0)] - 1.0).abs() < 1e-12 && id[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = Matrix::from_rows(vec![vec![1.0f32, 2.0], vec![2.0, 4.0]]);
        assert!(m.inverse().is_none());
    }

    #[test]
    fn mixed_number_stays_exact_until_root() {
        let two = Number::Exact(q(2, 1));
        assert_eq!(two.pow_ratio(3, 1).unwrap(), Number::Exact(q(8, 1)));
        assert_eq!(Number::Exact(q(9, 4)).pow_ratio(1, 2).unwrap(), Number::Exact(q(3, 2)));
        assert!(matches!(two.pow_ratio(1, 2).unwrap(), Number::Float(_)));
        assert_eq!(Number::Exact(q(0, 1)).pow_ratio(-1, 1), Err(ScalarError::Pole));
        assert!(matches!(Number::Exact(q(-1, 1)).pow_ratio(1, 2), Err(ScalarError::Domain(_))));
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(BigInt::from(10).pow(400), BigInt::from(10).pow(399));
        assert!((rational_to_f64(&big) - 10.0).abs() < 1e-9);
    }
}
