//! Lie groups in coordinates, their actions on jets, and moving frames.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exterior::{Coframe, DifferentialForm, FormError, Label};
use crate::jetspace::{contact_form, total_derivative, JetContext};
use crate::sampling::{eval_at, local_point, rng_for, Point};
use crate::scalar::Matrix;
use crate::symcore::{diff, eval, invert, subst_with, Expr, MultiIndex, SymError, Variable, ZeroTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("invalid group chart: {0}")]
    InvalidChart(String),
    #[error("Jacobian of right translation is singular at the identity")]
    SingularJacobian,
    #[error("structure coefficient for d(mu[{0}]) on mu[{1}]^mu[{2}] is not constant")]
    NonConstantStructure(usize, usize, usize),
    #[error("structure constants violate the Jacobi identity")]
    JacobiViolation,
    #[error("action is not transversal: horizontal Jacobian is singular")]
    NonTransversal,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("moving frame is not equivariant at {witness} (residual {residual:.3e})")]
    EquivarianceFailure { witness: String, residual: f64 },
    #[error("frame construction degenerates: {0}")]
    FreeActionFailure(String),
    #[error("{0} is not invariant (residual {1:.3e})")]
    NotInvariant(String, f64),
    #[error("{0} is not a contact form")]
    NotContact(String),
    #[error("contact basis is not filtered: {0}")]
    NotFiltered(String),
}

/// A local chart of a Lie group: coordinate names, identity, multiplication
/// and inversion. The multiplication law is written in the variables
/// `a_<name>` and `b_<name>`; the inverse in `<name>`.
#[derive(Clone, Debug)]
pub struct LieGroupChart {
    names: Vec<Arc<str>>,
    identity: Vec<BigRational>,
    mult: Vec<Expr>,
    inverse: Vec<Expr>,
}

fn tagged(prefix: &str, name: &str) -> Variable {
    Variable::param(&format!("{prefix}{name}"))
}

/// Rational with small denominator matching `x`, if any.
pub(crate) fn nearby_rational(x: f64) -> Option<BigRational> {
    for den in 1..=720i64 {
        let num = (x * den as f64).round();
        if (num / den as f64 - x).abs() < 1e-9 * (1.0 + x.abs()) {
            return Some(BigRational::new((num as i64).into(), den.into()));
        }
    }
    None
}

impl LieGroupChart {
    pub fn new(names: Vec<String>, identity: Vec<BigRational>, mult: Vec<Expr>, inverse: Vec<Expr>) -> Result<Self, GroupError> {
        let n = names.len();
        if identity.len() != n || mult.len() != n || inverse.len() != n {
            return Err(GroupError::InvalidChart(format!("expected {n} identity, multiplication and inverse entries")));
        }
        Ok(LieGroupChart { names: names.into_iter().map(Arc::from).collect(), identity, mult, inverse })
    }

    /// Translations of `R^n` with coordinates `names`.
    pub fn abelian(names: &[&str]) -> Self {
        let mult = names.iter().map(|s| Expr::var(tagged("a_", s)) + Expr::var(tagged("b_", s))).collect();
        let inverse = names.iter().map(|s| -Expr::var(Variable::param(s))).collect();
        LieGroupChart {
            names: names.iter().map(|s| Arc::from(*s)).collect(),
            identity: vec![BigRational::zero(); names.len()],
            mult,
            inverse,
        }
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[Arc<str>] {
        &self.names
    }

    pub fn coord(&self, i: usize) -> Variable {
        Variable::param(&self.names[i])
    }

    pub fn coords(&self) -> Vec<Variable> {
        (0..self.dim()).map(|i| self.coord(i)).collect()
    }

    pub fn identity(&self) -> Vec<Expr> {
        self.identity.iter().cloned().map(Expr::rational).collect()
    }

    pub fn mult_law(&self) -> &[Expr] {
        &self.mult
    }

    pub fn inverse_law(&self) -> &[Expr] {
        &self.inverse
    }

    fn slot(&self, v: &Variable) -> Option<(char, usize)> {
        let Variable::Param(p) = v else { return None };
        for (prefix, tag) in [("a_", 'a'), ("b_", 'b')] {
            if let Some(rest) = p.strip_prefix(prefix) {
                if let Some(i) = self.names.iter().position(|n| &**n == rest) {
                    return Some((tag, i));
                }
            }
        }
        self.names.iter().position(|n| **n == **p).map(|i| ('g', i))
    }

    pub fn multiply(&self, a: &[Expr], b: &[Expr]) -> Result<Vec<Expr>, SymError> {
        let look = |v: &Variable| match self.slot(v) {
            Some(('a', i)) => Some(a[i].clone()),
            Some(('b', i)) => Some(b[i].clone()),
            _ => None,
        };
        self.mult.iter().map(|m| subst_with(m, &look)).collect()
    }

    pub fn invert(&self, g: &[Expr]) -> Result<Vec<Expr>, SymError> {
        let look = |v: &Variable| match self.slot(v) {
            Some(('g', i)) => Some(g[i].clone()),
            _ => None,
        };
        self.inverse.iter().map(|m| subst_with(m, &look)).collect()
    }

    pub fn multiply_f64(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>, SymError> {
        let look = |v: &Variable| match self.slot(v) {
            Some(('a', i)) => Some(a[i]),
            Some(('b', i)) => Some(b[i]),
            _ => None,
        };
        self.mult.iter().map(|m| eval::<f64>(m, &look)).collect()
    }

    pub fn invert_f64(&self, g: &[f64]) -> Result<Vec<f64>, SymError> {
        let look = |v: &Variable| match self.slot(v) {
            Some(('g', i)) => Some(g[i]),
            _ => None,
        };
        self.inverse.iter().map(|m| eval::<f64>(m, &look)).collect()
    }

    fn vars(&self) -> Vec<Expr> {
        self.coords().into_iter().map(Expr::var).collect()
    }

    /// Identity, inverse and associativity laws.
    pub fn verify(&self, zt: &ZeroTest) -> Result<(), GroupError> {
        let g = self.vars();
        let e = self.identity();
        for (side, prod) in [("e*g", self.multiply(&e, &g)?), ("g*e", self.multiply(&g, &e)?)] {
            for (p, gi) in prod.iter().zip(&g) {
                if !zt.equal(p, gi)? {
                    return Err(GroupError::InvalidChart(format!("{side} != g")));
                }
            }
        }
        let prod = self.multiply(&g, &self.invert(&g)?)?;
        for (p, ei) in prod.iter().zip(&e) {
            if !zt.equal(p, ei)? {
                return Err(GroupError::InvalidChart("g*inv(g) != e".into()));
            }
        }
        let mut rng = rng_for(zt, 11);
        let n = self.dim();
        for _ in 0..zt.samples {
            let pts: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| crate::scalar::rational_to_f64(&crate::sampling::small_rational(&mut rng, 0.5))).collect())
                .collect();
            let left = self.multiply_f64(&self.multiply_f64(&pts[0], &pts[1])?, &pts[2])?;
            let right = self.multiply_f64(&pts[0], &self.multiply_f64(&pts[1], &pts[2])?)?;
            let err = left.iter().zip(&right).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            if err > 1e-9 {
                return Err(GroupError::InvalidChart(format!("associativity fails (residual {err:.3e})")));
            }
        }
        Ok(())
    }

    /// `∂m(a, g)/∂a` at `a = e`.
    fn right_jacobian(&self) -> Result<Vec<Vec<Expr>>, SymError> {
        let e = self.identity();
        let g = self.vars();
        let look = |v: &Variable| match self.slot(v) {
            Some(('a', i)) => Some(e[i].clone()),
            Some(('b', i)) => Some(g[i].clone()),
            _ => None,
        };
        let mut out = Vec::new();
        for m in &self.mult {
            let mut row = Vec::new();
            for j in 0..self.dim() {
                let dm = diff(m, &tagged("a_", &self.names[j]));
                row.push(subst_with(&dm, &look)?);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Right-invariant Maurer-Cartan forms `μ = (∂m(a,g)/∂a|_{a=e})^{-1} dg`.
    pub fn maurer_cartan_right(&self, zt: &ZeroTest) -> Result<Vec<DifferentialForm>, GroupError> {
        let r = self.right_jacobian()?;
        let rinv = match invert(&r, zt) {
            Ok(m) => m,
            Err(SymError::RankDeficient { .. }) => return Err(GroupError::SingularJacobian),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for row in rinv {
            let mut f = DifferentialForm::zero(1);
            for (j, c) in row.into_iter().enumerate() {
                f = f.add(&DifferentialForm::dvar(self.coord(j)).scale(&c));
            }
            out.push(f);
        }
        Ok(out)
    }

    /// Whether `μ` is invariant under right translation by a symbolic `h`.
    pub fn check_right_invariance(&self, mu: &[DifferentialForm], zt: &ZeroTest) -> Result<bool, GroupError> {
        let a = self.vars();
        let h: Vec<Expr> = self.names.iter().map(|n| Expr::var(tagged("h_", n))).collect();
        let moved = self.multiply(&a, &h)?;
        let map: HashMap<Variable, Expr> = self.coords().into_iter().zip(moved).collect();
        let hvars: BTreeSet<Label> = self.names.iter().map(|n| Label::D(tagged("h_", n))).collect();
        for m in mu {
            let pulled = m.pullback(&|v| map.get(v).cloned())?.drop_labels(&hvars);
            if !pulled.equal_with(m, zt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `c^i_{jk}` with `dμ^i = −½ c^i_{jk} μ^j∧μ^k`.
    pub fn structure_constants(&self, zt: &ZeroTest) -> Result<StructureConstants, GroupError> {
        let mu = self.maurer_cartan_right(zt)?;
        let n = self.dim();
        let labels: Vec<Label> = (1..=n).map(|i| Label::named("mu", i)).collect();
        let coords: Vec<Label> = self.coords().into_iter().map(Label::D).collect();
        let frame = Coframe::new(labels.clone(), mu.clone(), coords, zt)?;
        let mut c = StructureConstants::zero(n);
        for (i, m) in mu.iter().enumerate() {
            let dm = frame.decompose(&m.d()?);
            for j in 0..n {
                for k in j + 1..n {
                    let coef = dm.coeff(&[labels[j].clone(), labels[k].clone()]);
                    let q = match coef.as_constant() {
                        Some(q) => q,
                        None => {
                            let probe = zt.eval_f64(&coef, &coef.variables(), 0)?;
                            let q = nearby_rational(probe).ok_or(GroupError::NonConstantStructure(i + 1, j + 1, k + 1))?;
                            if !zt.is_zero(&(&coef - &Expr::rational(q.clone())))? {
                                return Err(GroupError::NonConstantStructure(i + 1, j + 1, k + 1));
                            }
                            q
                        }
                    };
                    c.set(i, j, k, -q);
                }
            }
        }
        if !c.satisfies_jacobi() {
            return Err(GroupError::JacobiViolation);
        }
        Ok(c)
    }
}

/// Structure constants `c^i_{jk}`, antisymmetric in `j, k` (0-based storage).
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    n: usize,
    data: Vec<BigRational>,
}

impl StructureConstants {
    pub fn zero(n: usize) -> Self {
        StructureConstants { n, data: vec![BigRational::zero(); n * n * n] }
    }

    /// Build from `(i, j, k, value)` triples with `j < k`; the rest follows by
    /// antisymmetry. Rejects data failing the Jacobi identity.
    pub fn from_entries(n: usize, entries: &[(usize, usize, usize, BigRational)]) -> Result<Self, GroupError> {
        let mut c = Self::zero(n);
        for (i, j, k, v) in entries {
            c.set(*i, *j, *k, v.clone());
        }
        if c.satisfies_jacobi() {
            Ok(c)
        } else {
            Err(GroupError::JacobiViolation)
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &BigRational {
        &self.data[(i * self.n + j) * self.n + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: BigRational) {
        let n = self.n;
        self.data[(i * n + k) * n + j] = -v.clone();
        self.data[(i * n + j) * n + k] = v;
    }

    pub fn satisfies_jacobi(&self) -> bool {
        let d1 = ce_differential(self, 1);
        let d2 = ce_differential(self, 2);
        d2.mul(&d1).rows_iter().all(|r| r.iter().all(Zero::is_zero))
    }
}

impl Matrix<BigRational> {
    fn rows_iter(&self) -> impl Iterator<Item = &[BigRational]> {
        (0..self.rows()).map(move |i| self.row(i))
    }
}

/// Sorted `t`-subsets of `0..n`.
pub fn wedge_basis(n: usize, t: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, t, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, t, &mut Vec::new(), &mut out);
    out
}

/// Sort with sign; `None` when an index repeats.
fn sort_signed(mut idx: Vec<usize>) -> Option<(Vec<usize>, bool)> {
    let mut negative = false;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((idx, negative))
    }
}

/// Matrix of `d: Λ^t g* → Λ^{t+1} g*` in the sorted-subset bases, with
/// `dε^i = −Σ_{j<k} c^i_{jk} ε^j∧ε^k` extended as a graded derivation.
pub fn ce_differential(c: &StructureConstants, t: usize) -> Matrix<BigRational> {
    let n = c.dim();
    let src = wedge_basis(n, t);
    let dst = wedge_basis(n, t + 1);
    let pos: HashMap<&Vec<usize>, usize> = dst.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut m: Matrix<BigRational> = Matrix::zeros(dst.len(), src.len());
    for (col, s) in src.iter().enumerate() {
        for (p, &i) in s.iter().enumerate() {
            let outer = if p % 2 == 0 { BigRational::one() } else { -BigRational::one() };
            for j in 0..n {
                for k in j + 1..n {
                    let cijk = c.get(i, j, k);
                    if cijk.is_zero() {
                        continue;
                    }
                    let mut idx = s[..p].to_vec();
                    idx.push(j);
                    idx.push(k);
                    idx.extend_from_slice(&s[p + 1..]);
                    if let Some((sorted, neg)) = sort_signed(idx) {
                        let mut v = -cijk.clone() * &outer;
                        if neg {
                            v = -v;
                        }
                        let row = pos[&sorted];
                        m[(row, col)] = m[(row, col)].clone() + v;
                    }
                }
            }
        }
    }
    m
}

/// A Chevalley-Eilenberg cochain `Σ c_I ε^{i1}∧…∧ε^{it}` (0-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct Cochain {
    pub degree: usize,
    pub coeffs: BTreeMap<Vec<usize>, BigRational>,
}

impl Cochain {
    /// Substitute 1-forms for the dual basis.
    pub fn to_form(&self, one_forms: &[DifferentialForm]) -> DifferentialForm {
        let mut out = DifferentialForm::zero(self.degree);
        for (idx, c) in &self.coeffs {
            let mut f = DifferentialForm::scalar(Expr::one());
            for &i in idx {
                f = f.wedge(&one_forms[i]);
            }
            out = out.add(&f.scale_rational(c));
        }
        out
    }

    fn to_vec(&self, basis: &[Vec<usize>]) -> Vec<BigRational> {
        basis.iter().map(|b| self.coeffs.get(b).cloned().unwrap_or_else(BigRational::zero)).collect()
    }
}

impl std::fmt::Display for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(idx, c)| {
                let w: Vec<String> = idx.iter().map(|i| format!("e{}", i + 1)).collect();
                let w = if w.is_empty() { "1".to_string() } else { w.join("^") };
                if c.is_one() {
                    w
                } else {
                    format!("({c})*{w}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Representative cocycles of a basis of `H^t(g)`.
pub fn ce_cohomology(c: &StructureConstants, t: usize) -> Vec<Cochain> {
    let n = c.dim();
    if t > n {
        return Vec::new();
    }
    let basis = wedge_basis(n, t);
    let kernel = ce_differential(c, t).kernel();
    let mut spanning: Vec<Vec<BigRational>> = Vec::new();
    if t > 0 {
        let prev = ce_differential(c, t - 1);
        for j in 0..prev.cols() {
            spanning.push((0..prev.rows()).map(|i| prev[(i, j)].clone()).collect());
        }
    }
    let rank_of = |rows: &[Vec<BigRational>]| if rows.is_empty() { 0 } else { Matrix::from_rows(rows.to_vec()).rank() };
    let mut base_rank = rank_of(&spanning);
    let mut out = Vec::new();
    for z in kernel {
        spanning.push(z.clone());
        let r = rank_of(&spanning);
        if r > base_rank {
            base_rank = r;
            let coeffs = basis.iter().cloned().zip(z).filter(|(_, q)| !q.is_zero()).collect();
            out.push(Cochain { degree: t, coeffs });
        } else {
            spanning.pop();
        }
    }
    out
}

/// Whether `d_CE z = 0`.
pub fn is_cocycle(c: &StructureConstants, z: &Cochain) -> bool {
    let d = ce_differential(c, z.degree);
    let v = z.to_vec(&wedge_basis(c.dim(), z.degree));
    (0..d.rows()).all(|i| (0..d.cols()).fold(BigRational::zero(), |acc, j| acc + &d[(i, j)] * &v[j]).is_zero())
}

#[derive(Default, Debug)]
struct ProlongCache {
    images: HashMap<Variable, Expr>,
    winv: Option<Vec<Vec<Expr>>>,
}

/// Action of a group chart on `J^0` and its prolongations.
#[derive(Debug)]
pub struct GroupAction {
    group: LieGroupChart,
    base: JetContext,
    x_maps: Vec<Expr>,
    u_maps: Vec<Expr>,
    cache: Mutex<ProlongCache>,
}

impl Clone for GroupAction {
    fn clone(&self) -> Self {
        GroupAction::new(self.group.clone(), self.base.k, self.base.q, self.x_maps.clone(), self.u_maps.clone())
            .expect("validated on construction")
    }
}

impl GroupAction {
    /// `x_maps[i] = X^{i+1}(g; x, u)`, `u_maps[a] = U^{a+1}(g; x, u)`.
    pub fn new(group: LieGroupChart, k: usize, q: usize, x_maps: Vec<Expr>, u_maps: Vec<Expr>) -> Result<Self, GroupError> {
        if x_maps.len() != k || u_maps.len() != q {
            return Err(GroupError::InvalidAction(format!("expected {k} base and {q} fiber maps")));
        }
        for m in x_maps.iter().chain(&u_maps) {
            if m.variables().iter().any(|v| v.jet_order() > 0 && v.is_upstairs()) {
                return Err(GroupError::InvalidAction("action maps may only involve x and u".into()));
            }
        }
        Ok(GroupAction { group, base: JetContext::new(k, q, 0), x_maps, u_maps, cache: Mutex::new(ProlongCache::default()) })
    }

    pub fn group(&self) -> &LieGroupChart {
        &self.group
    }

    pub fn k(&self) -> usize {
        self.base.k
    }

    pub fn q(&self) -> usize {
        self.base.q
    }

    fn horizontal_inverse(&self, zt: &ZeroTest) -> Result<Vec<Vec<Expr>>, GroupError> {
        if let Some(w) = &self.cache.lock().unwrap().winv {
            return Ok(w.clone());
        }
        let k = self.k();
        let w: Vec<Vec<Expr>> = self.x_maps.iter().map(|x| (1..=k).map(|j| total_derivative(x, j)).collect()).collect();
        let winv = match invert(&w, zt) {
            Ok(m) => m,
            Err(SymError::RankDeficient { .. }) => return Err(GroupError::NonTransversal),
            Err(e) => return Err(e.into()),
        };
        self.cache.lock().unwrap().winv = Some(winv.clone());
        Ok(winv)
    }

    /// Image of a coordinate under the prolonged action, with symbolic group
    /// parameters: `Ũ_{J,i} = Σ_j (W^{-1})^j_i D_j Ũ_J`.
    pub fn image(&self, v: &Variable, zt: &ZeroTest) -> Result<Expr, GroupError> {
        if let Some(e) = self.cache.lock().unwrap().images.get(v) {
            return Ok(e.clone());
        }
        let out = match v {
            Variable::Indep(i) if *i <= self.k() => self.x_maps[i - 1].clone(),
            Variable::Jet { comp, index } if *comp <= self.q() => {
                if index.is_empty() {
                    self.u_maps[comp - 1].clone()
                } else {
                    let i = index.max_entry();
                    let lower = Variable::Jet { comp: *comp, index: index.without(i).expect("entry present") };
                    let prev = self.image(&lower, zt)?;
                    let winv = self.horizontal_inverse(zt)?;
                    Expr::sum((1..=self.k()).map(|j| &winv[j - 1][i - 1] * &total_derivative(&prev, j)))
                }
            }
            other => Expr::var(other.clone()),
        };
        self.cache.lock().unwrap().images.insert(v.clone(), out.clone());
        Ok(out)
    }

    /// Prolonged action on all coordinates of `J^r`.
    pub fn prolong(&self, r: usize, zt: &ZeroTest) -> Result<Vec<(Variable, Expr)>, GroupError> {
        self.base.with_order(r).coordinates().into_iter().map(|v| Ok((v.clone(), self.image(&v, zt)?))).collect()
    }

    /// `g·z` on the given coordinates, numerically.
    pub fn act_f64(&self, g: &[f64], z: &Point, coords: &[Variable], zt: &ZeroTest) -> Result<Point, GroupError> {
        let mut pt = z.clone();
        for (i, c) in self.group.coords().into_iter().enumerate() {
            pt.insert(c, g[i]);
        }
        let mut out = Point::new();
        for v in coords {
            out.insert(v.clone(), eval_at(&self.image(v, zt)?, &pt)?);
        }
        Ok(out)
    }

    fn random_group_element(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        (0..self.group.dim())
            .map(|_| crate::scalar::rational_to_f64(&crate::sampling::small_rational(rng, 0.5)))
            .collect()
    }

    /// Identity acts trivially and `g·(h·z) = m(g,h)·z` up to order `r`.
    pub fn verify_axioms(&self, r: usize, zt: &ZeroTest) -> Result<(), GroupError> {
        let coords = self.base.with_order(r).coordinates();
        let e = self.group.identity();
        let look = |v: &Variable| self.group.coords().iter().position(|c| c == v).map(|i| e[i].clone());
        for v in &coords {
            let img = subst_with(&self.image(v, zt)?, &look)?;
            if !zt.equal(&img, &Expr::var(v.clone()))? {
                return Err(GroupError::InvalidAction(format!("identity moves {v}")));
            }
        }
        let mut rng = rng_for(zt, 23);
        for _ in 0..zt.samples {
            let z = local_point(coords.iter().cloned(), &mut rng);
            let g = self.random_group_element(&mut rng);
            let h = self.random_group_element(&mut rng);
            let gh = self.group.multiply_f64(&g, &h)?;
            let (Ok(hz), Ok(ghz)) = (self.act_f64(&h, &z, &coords, zt), self.act_f64(&gh, &z, &coords, zt)) else { continue };
            let Ok(g_hz) = self.act_f64(&g, &hz, &coords, zt) else { continue };
            for v in &coords {
                let (a, b) = (g_hz[v], ghz[v]);
                if (a - b).abs() > 1e-7 * (1.0 + a.abs()) {
                    return Err(GroupError::InvalidAction(format!("composition law fails on {v}")));
                }
            }
        }
        Ok(())
    }

    /// Pullback of a form by `z ↦ g·z` with `g` held fixed.
    pub fn pullback_frozen(&self, a: &DifferentialForm, zt: &ZeroTest) -> Result<DifferentialForm, GroupError> {
        let mut vars: BTreeSet<Variable> = BTreeSet::new();
        for (labels, c) in a.terms() {
            vars.extend(c.variables().iter().cloned());
            for l in labels {
                if let Label::D(v) = l {
                    vars.insert(v.clone());
                }
            }
        }
        let mut map = HashMap::new();
        for v in vars.into_iter().filter(|v| v.is_upstairs()) {
            let img = self.image(&v, zt)?;
            map.insert(v, img);
        }
        let pulled = a.pullback(&|v| map.get(v).cloned())?;
        let params: BTreeSet<Label> = self.group.coords().into_iter().map(Label::D).collect();
        Ok(pulled.drop_labels(&params))
    }

    /// Largest relative discrepancy `|e(g·z) − e(z)|` over random samples.
    pub fn invariance_residual(&self, e: &Expr, zt: &ZeroTest) -> Result<f64, GroupError> {
        let coords: Vec<Variable> = e.variables().iter().filter(|v| v.is_upstairs()).cloned().collect();
        let mut rng = rng_for(zt, 29);
        let mut worst: f64 = 0.0;
        let mut good = 0;
        for _ in 0..4 * zt.samples {
            let z = local_point(coords.iter().cloned(), &mut rng);
            let g = self.random_group_element(&mut rng);
            let Ok(gz) = self.act_f64(&g, &z, &coords, zt) else { continue };
            let (Ok(a), Ok(b)) = (eval_at(e, &gz), eval_at(e, &z)) else { continue };
            if !a.is_finite() || !b.is_finite() {
                continue;
            }
            worst = worst.max((a - b).abs() / (1.0 + b.abs()));
            good += 1;
            if good >= zt.samples {
                break;
            }
        }
        if good == 0 {
            return Err(SymError::IndeterminateAtAllSamples.into());
        }
        Ok(worst)
    }

    /// Largest discrepancy between `(g·)^* a` and `a` over random samples.
    pub fn form_invariance_residual(&self, a: &DifferentialForm, zt: &ZeroTest) -> Result<f64, GroupError> {
        let pulled = self.pullback_frozen(a, zt)?;
        let mut vars: BTreeSet<Variable> = BTreeSet::new();
        for (_, c) in pulled.terms().chain(a.terms()) {
            vars.extend(c.variables().iter().cloned());
        }
        for l in pulled.labels().into_iter().chain(a.labels()) {
            if let Label::D(v) = l {
                vars.insert(v);
            }
        }
        let params: BTreeSet<Variable> = self.group.coords().into_iter().collect();
        let mut rng = rng_for(zt, 31);
        let mut worst: f64 = 0.0;
        let mut good = 0;
        let keys: BTreeSet<&Vec<Label>> = pulled.terms().chain(a.terms()).map(|(l, _)| l).collect();
        'sample: for _ in 0..4 * zt.samples {
            let mut pt = local_point(vars.iter().filter(|v| !params.contains(v)).cloned(), &mut rng);
            for (c, g) in self.group.coords().into_iter().zip(self.random_group_element(&mut rng)) {
                pt.insert(c, g);
            }
            for key in &keys {
                let (Ok(p), Ok(q)) = (eval_at(&pulled.coeff(key), &pt), eval_at(&a.coeff(key), &pt)) else { continue 'sample };
                if !p.is_finite() || !q.is_finite() {
                    continue 'sample;
                }
                worst = worst.max((p - q).abs() / (1.0 + q.abs()));
            }
            good += 1;
            if good >= zt.samples {
                break;
            }
        }
        if good == 0 {
            return Err(SymError::IndeterminateAtAllSamples.into());
        }
        Ok(worst)
    }
}

/// Equivariance report from [`verify_frame`].
#[derive(Clone, Debug, PartialEq)]
pub struct FrameReport {
    pub samples: usize,
    pub max_residual: f64,
}

/// A right moving frame `ρ: J^r → G` given by expressions in jet variables.
#[derive(Clone, Debug)]
pub struct MovingFrame {
    order: usize,
    rho: Vec<Expr>,
    normalized: Arc<Mutex<HashMap<Variable, Expr>>>,
}

impl MovingFrame {
    pub fn new(order: usize, rho: Vec<Expr>) -> Self {
        MovingFrame { order, rho, normalized: Arc::default() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[Expr] {
        &self.rho
    }
}

/// Checks `m(ρ(g·z), g) = ρ(z)` at random samples.
pub fn verify_frame(action: &GroupAction, frame: &MovingFrame, zt: &ZeroTest) -> Result<FrameReport, GroupError> {
    let coords = action.base.with_order(frame.order).coordinates();
    if frame.rho.len() != action.group.dim() {
        return Err(GroupError::FreeActionFailure("frame has the wrong number of components".into()));
    }
    let mut rng = rng_for(zt, 37);
    let mut worst: f64 = 0.0;
    let mut good = 0;
    for _ in 0..4 * zt.samples {
        let z = local_point(coords.iter().cloned(), &mut rng);
        let g = action.random_group_element(&mut rng);
        let Ok(gz) = action.act_f64(&g, &z, &coords, zt) else { continue };
        let rho_z: Result<Vec<f64>, _> = frame.rho.iter().map(|r| eval_at(r, &z)).collect();
        let rho_gz: Result<Vec<f64>, _> = frame.rho.iter().map(|r| eval_at(r, &gz)).collect();
        let (Ok(rho_z), Ok(rho_gz)) = (rho_z, rho_gz) else { continue };
        let back = action.group.multiply_f64(&rho_gz, &g)?;
        let residual = back.iter().zip(&rho_z).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())).fold(0.0, f64::max);
        if !residual.is_finite() {
            continue;
        }
        good += 1;
        if residual > 1e-7 {
            let witness: Vec<String> = coords.iter().map(|v| format!("{v}={:.4}", z[v])).collect();
            return Err(GroupError::EquivarianceFailure { witness: witness.join(", "), residual });
        }
        worst = worst.max(residual);
        if good >= zt.samples {
            break;
        }
    }
    if good == 0 {
        return Err(GroupError::FreeActionFailure("frame undefined at every sample".into()));
    }
    Ok(FrameReport { samples: good, max_residual: worst })
}

fn frame_lookup<'a>(action: &'a GroupAction, frame: &'a MovingFrame) -> impl Fn(&Variable) -> Option<Expr> + 'a {
    move |v| action.group.coords().iter().position(|c| c == v).map(|i| frame.rho[i].clone())
}

/// `ι(e)(z) = e(ρ(z)·z)`.
pub fn invariantize(action: &GroupAction, frame: &MovingFrame, e: &Expr, zt: &ZeroTest) -> Result<Expr, GroupError> {
    let mut map = HashMap::new();
    for v in e.variables().iter().filter(|v| v.is_upstairs()) {
        map.insert(v.clone(), invariantize_coordinate(action, frame, v, zt)?);
    }
    Ok(subst_with(e, &|v| map.get(v).cloned())?)
}

fn invariantize_coordinate(action: &GroupAction, frame: &MovingFrame, v: &Variable, zt: &ZeroTest) -> Result<Expr, GroupError> {
    if let Some(e) = frame.normalized.lock().unwrap().get(v) {
        return Ok(e.clone());
    }
    let img = action.image(v, zt)?;
    let out = subst_with(&img, &frame_lookup(action, frame))?;
    frame.normalized.lock().unwrap().insert(v.clone(), out.clone());
    Ok(out)
}

/// `ρ*μ^i`.
pub fn frame_pullback_of_mc(action: &GroupAction, frame: &MovingFrame, zt: &ZeroTest) -> Result<Vec<DifferentialForm>, GroupError> {
    let mu = action.group.maurer_cartan_right(zt)?;
    let look = frame_lookup(action, frame);
    mu.iter().map(|m| Ok(m.pullback(&look)?)).collect()
}

/// One element `η̃^α_I` of a filtered invariant contact basis.
#[derive(Clone, Debug)]
pub struct InvariantContactForm {
    pub comp: usize,
    pub index: MultiIndex,
    pub label: Label,
    pub form: DifferentialForm,
}

/// Label used for `η̃^α_I`: `eta[n]` for curves, `eta[a=α; I=…]` otherwise.
pub fn eta_label(k: usize, q: usize, comp: usize, index: &MultiIndex) -> Label {
    if k == 1 && q == 1 {
        Label::named("eta", index.order())
    } else {
        Label::named_jet("eta", comp, index.clone())
    }
}

/// `η̃^α_I = ι(θ^α_I)` for `|I| < r`, invariantized with the frame held fixed.
pub fn invariant_contact_basis(action: &GroupAction, frame: &MovingFrame, r: usize, zt: &ZeroTest) -> Result<Vec<InvariantContactForm>, GroupError> {
    let (k, q) = (action.k(), action.q());
    let mut out = Vec::new();
    for n in 0..r {
        for comp in 1..=q {
            for index in MultiIndex::of_order(k, n) {
                let pulled = action.pullback_frozen(&contact_form(comp, &index, k), zt)?;
                let form = pulled.subst_coeffs(&frame_lookup(action, frame))?;
                out.push(InvariantContactForm { comp, label: eta_label(k, q, comp, &index), index, form });
            }
        }
    }
    Ok(out)
}

/// Checks a user-supplied basis: each element is contact, invariant, and the
/// elements of order `≤ n` span the contact forms of order `≤ n`.
pub fn verify_contact_basis(action: &GroupAction, basis: &[InvariantContactForm], zt: &ZeroTest) -> Result<(), GroupError> {
    let k = action.k();
    for b in basis {
        let h = b.form.horizontal_class(k);
        if !h.is_zero_with(zt)? {
            return Err(GroupError::NotContact(b.label.to_string()));
        }
        let res = action.form_invariance_residual(&b.form, zt)?;
        if res > 1e-7 {
            return Err(GroupError::NotInvariant(b.label.to_string(), res));
        }
    }
    let top = basis.iter().map(|b| b.index.order()).max().unwrap_or(0);
    let ctx = JetContext::new(k, action.q(), top + 1);
    for b in basis {
        for l in b.form.labels() {
            if let Label::D(v @ Variable::Jet { .. }) = &l {
                if v.jet_order() > b.index.order() && !zt.is_zero(&b.form.coeff_of(&l))? {
                    return Err(GroupError::NotFiltered(format!("{} involves {l}", b.label)));
                }
            }
        }
    }
    for n in 0..=top {
        let level: Vec<&InvariantContactForm> = basis.iter().filter(|b| b.index.order() == n).collect();
        let jets = ctx.jets_of_order(n);
        if level.len() != jets.len() {
            return Err(GroupError::NotFiltered(format!("order {n} has {} forms, expected {}", level.len(), jets.len())));
        }
        let block: Vec<Vec<Expr>> = level.iter().map(|b| jets.iter().map(|j| b.form.coeff_of(&Label::D(j.clone()))).collect()).collect();
        if crate::symcore::rank(&block, zt)? < jets.len() {
            return Err(GroupError::NotFiltered(format!("order {n} forms are dependent modulo lower order")));
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    pub(crate) fn se2() -> LieGroupChart {
        LieGroupChart::new(
            vec!["phi".into(), "c1".into(), "c2".into()],
            vec![q(0), q(0), q(0)],
            vec![
                p("a_phi + b_phi"),
                p("cos(a_phi)*b_c1 - sin(a_phi)*b_c2 + a_c1"),
                p("sin(a_phi)*b_c1 + cos(a_phi)*b_c2 + a_c2"),
            ],
            vec![p("-phi"), p("-cos(phi)*c1 - sin(phi)*c2"), p("sin(phi)*c1 - cos(phi)*c2")],
        )
        .unwrap()
    }

    pub(crate) fn se2_action() -> GroupAction {
        GroupAction::new(se2(), 1, 1, vec![p("cos(phi)*x - sin(phi)*u + c1")], vec![p("sin(phi)*x + cos(phi)*u + c2")]).unwrap()
    }

    pub(crate) fn se2_frame() -> MovingFrame {
        MovingFrame::new(
            1,
            vec![p("-atan(u[1])"), p("-(x + u*u[1])*(1+u[1]^2)^(-1/2)"), p("(x*u[1] - u)*(1+u[1]^2)^(-1/2)")],
        )
    }

    #[test]
    fn se2_chart_is_a_group() {
        se2().verify(&ZeroTest::default()).unwrap();
    }

    #[test]
    fn se2_maurer_cartan() {
        let zt = ZeroTest::default();
        let g = se2();
        let mu = g.maurer_cartan_right(&zt).unwrap();
        let d = |s: &str| DifferentialForm::dvar(Variable::param(s));
        let expect = [
            d("phi"),
            d("c1").add(&d("phi").scale(&p("c2"))),
            d("c2").add(&d("phi").scale(&p("-c1"))),
        ];
        for (m, e) in mu.iter().zip(&expect) {
            assert!(m.equal_with(e, &zt).unwrap(), "{m} vs {e}");
        }
        assert!(g.check_right_invariance(&mu, &zt).unwrap());
    }

    #[test]
    fn se2_cohomology() {
        let zt = ZeroTest::default();
        let c = se2().structure_constants(&zt).unwrap();
        assert_eq!(c.get(1, 0, 2), &q(1));
        assert_eq!(c.get(2, 0, 1), &q(-1));
        let h1 = ce_cohomology(&c, 1);
        assert_eq!(h1.len(), 1);
        assert_eq!(h1[0].coeffs.keys().collect::<Vec<_>>(), vec![&vec![0]]);
        assert_eq!(ce_cohomology(&c, 0).len(), 1);
    }

    #[test]
    fn abelian_cohomology_is_binomial() {
        let c = StructureConstants::zero(4);
        let dims: Vec<usize> = (0..=4).map(|t| ce_cohomology(&c, t).len()).collect();
        assert_eq!(dims, vec![1, 4, 6, 4, 1]);
    }

    #[test]
    fn jacobi_violation_detected() {
        let entries = [(0, 0, 1, q(1)), (1, 1, 2, q(1)), (2, 0, 2, q(1))];
        assert_eq!(StructureConstants::from_entries(3, &entries), Err(GroupError::JacobiViolation));
    }

    #[test]
    fn se2_prolongation() {
        let zt = ZeroTest::default();
        let a = se2_action();
        let u1 = a.image(&Variable::u(1, &[1]), &zt).unwrap();
        let oracle = p("(sin(phi) + u[1]*cos(phi))/(cos(phi) - u[1]*sin(phi))");
        assert!(zt.equal(&u1, &oracle).unwrap());
        a.verify_axioms(3, &zt).unwrap();
    }

    #[test]
    fn se2_frame_and_curvature() {
        let zt = ZeroTest::default();
        let a = se2_action();
        let f = se2_frame();
        let rep = verify_frame(&a, &f, &zt).unwrap();
        assert!(rep.max_residual < 1e-9);
        let kappa = invariantize(&a, &f, &p("u[1,1]"), &zt).unwrap();
        assert!(zt.equal(&kappa, &p("u[1,1]*(1+u[1]^2)^(-3/2)")).unwrap(), "{kappa}");
        assert!(a.invariance_residual(&kappa, &zt).unwrap() < 1e-9);

        let mut bad = se2_frame();
        bad.rho[1] = -bad.rho[1].clone();
        assert!(matches!(verify_frame(&a, &bad, &zt), Err(GroupError::EquivarianceFailure { .. })));
    }

    #[test]
    fn zeta_three_is_invariant_contact() {
        let zt = ZeroTest::default();
        let a = se2_action();
        let f = se2_frame();
        let zeta = frame_pullback_of_mc(&a, &f, &zt).unwrap();
        assert!(zeta[2].horizontal_class(1).is_zero_with(&zt).unwrap());
        let res = a.form_invariance_residual(&zeta[2], &zt).unwrap();
        assert!(res < 1e-8, "{res} {}", zeta[2]);
        let basis = invariant_contact_basis(&a, &f, 2, &zt).unwrap();
        verify_contact_basis(&a, &basis, &zt).unwrap();
    }
}
