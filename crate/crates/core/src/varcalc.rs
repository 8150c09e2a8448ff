//! Invariant variational calculus on a reduced chart: total differential
//! operators, the reduced Euler operator, integration by parts against an
//! invariant contact coframe, and the operators carrying reduced
//! Euler-Lagrange expressions to the invariant Euler-Lagrange system.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::binomial;
use thiserror::Error;

use crate::exterior::{DifferentialForm, FormError, Label};
use crate::jetspace::{total_derivative, total_derivative_multi};
use crate::liegroup::InvariantContactForm;
use crate::reduction::{ReducedChart, ReductionError};
use crate::symcore::{diff, invert, together, Expr, MultiIndex, SymError, Variable, ZeroTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("inconsistent integration by parts at level {0}")]
    Inconsistent(usize),
    #[error("contact coframe is not filtered: {0}")]
    NotFiltered(String),
    #[error("{0} is not a function of reduced coordinates")]
    NotReduced(String),
}

type Result<T> = std::result::Result<T, VarError>;

/// `Σ_I A_I d^{|I|}/dy^I` with coefficients in reduced coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TotalDiffOperator {
    coeffs: BTreeMap<MultiIndex, Expr>,
}

fn leibniz_weight(outer: &MultiIndex, part: &MultiIndex, k: usize) -> i64 {
    (1..=k).map(|i| binomial(outer.count(i) as i64, part.count(i) as i64)).product()
}

fn sub_indices(index: &MultiIndex, k: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::empty()];
    for i in 1..=k {
        let n = index.count(i);
        let mut next = Vec::new();
        for base in &out {
            let mut cur = base.clone();
            next.push(cur.clone());
            for _ in 0..n {
                cur = cur.with(i);
                next.push(cur.clone());
            }
        }
        out = next;
    }
    out
}

fn complement(index: &MultiIndex, part: &MultiIndex) -> MultiIndex {
    let mut rest = index.clone();
    for &i in part.entries() {
        rest = rest.without(i).expect("sub-index");
    }
    rest
}

fn union(a: &MultiIndex, b: &MultiIndex) -> MultiIndex {
    b.entries().iter().fold(a.clone(), |acc, &i| acc.with(i))
}

impl TotalDiffOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn multiplication(f: Expr) -> Self {
        Self::term(MultiIndex::empty(), f)
    }

    pub fn identity() -> Self {
        Self::multiplication(Expr::one())
    }

    /// `d/dy^i`.
    pub fn derivative(i: usize) -> Self {
        Self::term(MultiIndex::new(vec![i]), Expr::one())
    }

    pub fn term(index: MultiIndex, coeff: Expr) -> Self {
        let mut coeffs = BTreeMap::new();
        if !coeff.is_zero() {
            coeffs.insert(index, coeff);
        }
        TotalDiffOperator { coeffs }
    }

    pub fn coeffs(&self) -> &BTreeMap<MultiIndex, Expr> {
        &self.coeffs
    }

    pub fn coeff(&self, index: &MultiIndex) -> Expr {
        self.coeffs.get(index).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn order(&self) -> usize {
        self.coeffs.keys().map(|i| i.order()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (i, c) in &other.coeffs {
            let sum = coeffs.get(i).map_or_else(|| c.clone(), |a| a + c);
            if sum.is_zero() {
                coeffs.remove(i);
            } else {
                coeffs.insert(i.clone(), sum);
            }
        }
        TotalDiffOperator { coeffs }
    }

    pub fn neg(&self) -> Self {
        self.scale(&Expr::int(-1))
    }

    /// Left multiplication `f ∘ self`.
    pub fn scale(&self, f: &Expr) -> Self {
        let coeffs = self.coeffs.iter().map(|(i, c)| (i.clone(), c * f)).filter(|(_, c)| !c.is_zero()).collect();
        TotalDiffOperator { coeffs }
    }

    pub fn apply(&self, f: &Expr) -> Expr {
        Expr::sum(self.coeffs.iter().map(|(i, c)| c * &total_derivative_multi(f, i)))
    }

    /// `self ∘ other`, expanded with the Leibniz rule; `k` is the number of
    /// independent variables.
    pub fn compose(&self, other: &Self, k: usize) -> Self {
        let mut out = TotalDiffOperator::zero();
        for (outer, a) in &self.coeffs {
            for part in sub_indices(outer, k) {
                let w = leibniz_weight(outer, &part, k);
                let rest = complement(outer, &part);
                for (inner, b) in &other.coeffs {
                    let c = a * &total_derivative_multi(b, &part).scale(&num_rational::BigRational::from_integer(w.into()));
                    out = out.add(&TotalDiffOperator::term(union(&rest, inner), c));
                }
            }
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let coeffs = self.coeffs.iter().map(|(i, c)| (i.clone(), f(c))).filter(|(_, c)| !c.is_zero()).collect();
        TotalDiffOperator { coeffs }
    }

    /// Coefficient-wise identity test.
    pub fn equal_with(&self, other: &Self, zt: &ZeroTest) -> Result<bool> {
        let mut keys: Vec<&MultiIndex> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.sort();
        keys.dedup();
        for i in keys {
            if !zt.equal(&self.coeff(i), &other.coeff(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl fmt::Display for TotalDiffOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (i, c)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            if i.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*D[{i}]")?;
            }
        }
        Ok(())
    }
}

/// `Ē_a(L) = Σ_I (−d/dy)^I ∂L/∂v^a_I`, with the expression taken as its own
/// extension off the syzygy locus.
pub fn euler_operator(lagrangian: &Expr, comp: usize) -> Expr {
    let mut parts = Vec::new();
    for v in lagrangian.variables().iter() {
        if let Variable::InvJet { comp: c, index } = v {
            if *c != comp {
                continue;
            }
            let mut term = diff(lagrangian, v);
            for &i in index.entries() {
                term = -total_derivative(&term, i);
            }
            parts.push(term);
        }
    }
    Expr::sum(parts)
}

/// `d_H η = Σ_j dy^j ∧ Σ_η' c[η][j][η'] η'` for every member of an invariant
/// contact coframe, with coefficients on the reduced chart.
#[derive(Clone, Debug)]
pub struct HorizontalTable {
    pub labels: Vec<Label>,
    pub levels: Vec<usize>,
    pub coeffs: Vec<Vec<Vec<Expr>>>,
    /// Coframe components of each contact form, `θ = Σ inverse[θ][η] η`.
    inverse: Vec<Vec<Expr>>,
    jets: Vec<Variable>,
    k: usize,
}

impl HorizontalTable {
    pub fn top_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `c[η][j][η']` by label, `j` 1-based.
    pub fn coefficient(&self, source: &Label, j: usize, target: &Label) -> Option<&Expr> {
        Some(&self.coeffs[self.position(source)?][j - 1][self.position(target)?])
    }

    /// Coefficients of an upstairs contact form over the coframe, restricted
    /// to the reduced chart.
    pub fn decompose(&self, rc: &ReducedChart, form: &DifferentialForm) -> Result<Vec<Expr>> {
        let row: Vec<Expr> =
            self.jets.iter().map(|j| rc.to_reduced(&form.coeff_of(&Label::D(j.clone())))).collect::<std::result::Result<_, _>>()?;
        let n = self.labels.len();
        Ok((0..n).map(|a| together(&Expr::sum(row.iter().zip(&self.inverse).map(|(r, inv)| r * &inv[a])))).collect())
    }
}

fn contact_jets(k: usize, q: usize, top: usize) -> Vec<Variable> {
    let mut out = Vec::new();
    for n in 0..=top {
        for comp in 1..=q {
            for index in MultiIndex::of_order(k, n) {
                out.push(Variable::Jet { comp, index });
            }
        }
    }
    out
}

pub fn horizontal_table(rc: &ReducedChart, basis: &[InvariantContactForm]) -> Result<HorizontalTable> {
    let (k, q) = (rc.k(), rc.q());
    let top = basis.iter().map(|b| b.index.order()).max().unwrap_or(0);
    let jets = contact_jets(k, q, top);
    if jets.len() != basis.len() {
        return Err(VarError::NotFiltered(format!("{} forms for {} contact directions", basis.len(), jets.len())));
    }
    let pos: BTreeMap<Variable, usize> = jets.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let raw: Vec<Vec<Expr>> = basis.iter().map(|b| jets.iter().map(|j| b.form.coeff_of(&Label::D(j.clone()))).collect()).collect();
    let restrict = |e: &Expr| -> Result<Expr> { Ok(rc.to_reduced(e)?) };
    let restricted: Vec<Vec<Expr>> = raw.iter().map(|r| r.iter().map(restrict).collect()).collect::<Result<_>>()?;
    let inverse = invert(&restricted, rc.zero_test()).map_err(|e| match e {
        SymError::RankDeficient { .. } => VarError::NotFiltered("coframe is degenerate on the cross-section".into()),
        other => other.into(),
    })?;
    let inverse: Vec<Vec<Expr>> = inverse.iter().map(|r| r.iter().map(together).collect()).collect();
    let g: Vec<Vec<Expr>> = (1..=k)
        .map(|m| (1..=k).map(move |j| restrict(&rc.invariant_total_derivative(&Expr::var(Variable::Indep(m)), j))))
        .map(|r| r.collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let n = basis.len();
    let mut coeffs = vec![vec![vec![Expr::zero(); n]; k]; n];
    for (e, b) in basis.iter().enumerate() {
        if b.index.order() == top {
            continue;
        }
        for m in 1..=k {
            // Σ_J D_m M[η][J] X[J][·] + M[η][J] X[J+m][·]
            let mut acc = vec![Expr::zero(); n];
            for (col, jet) in jets.iter().enumerate() {
                if raw[e][col].is_zero() {
                    continue;
                }
                let dm = restrict(&total_derivative(&raw[e][col], m))?;
                let Variable::Jet { comp, index } = jet else { unreachable!() };
                let shifted = pos[&Variable::Jet { comp: *comp, index: index.with(m) }];
                for (t, slot) in acc.iter_mut().enumerate() {
                    *slot = &*slot + &(&dm * &inverse[col][t] + &restricted[e][col] * &inverse[shifted][t]);
                }
            }
            for j in 1..=k {
                for t in 0..n {
                    let add = &g[m - 1][j - 1] * &acc[t];
                    coeffs[e][j - 1][t] = &coeffs[e][j - 1][t] + &add;
                }
            }
        }
        for row in coeffs[e].iter_mut() {
            for c in row.iter_mut() {
                *c = together(c);
            }
        }
    }
    Ok(HorizontalTable {
        labels: basis.iter().map(|b| b.label.clone()).collect(),
        levels: basis.iter().map(|b| b.index.order()).collect(),
        coeffs,
        inverse,
        jets,
        k,
    })
}

/// Integration-by-parts rules: for each coframe member above level 0,
/// `f[η∧dy]₁ = Σ_γ T_{η→γ}(f)[γ∧dy]₁` with every γ of lower level.
#[derive(Clone, Debug)]
pub struct IbpTable {
    pub labels: Vec<Label>,
    pub levels: Vec<usize>,
    pub rules: BTreeMap<usize, Vec<(usize, TotalDiffOperator)>>,
}

impl IbpTable {
    pub fn rule(&self, source: &Label) -> Option<&[(usize, TotalDiffOperator)]> {
        let s = self.labels.iter().position(|l| l == source)?;
        self.rules.get(&s).map(|v| v.as_slice())
    }

    pub fn target(&self, source: &Label, target: &Label) -> TotalDiffOperator {
        let Some(t) = self.labels.iter().position(|l| l == target) else { return TotalDiffOperator::zero() };
        self.rule(source)
            .and_then(|r| r.iter().find(|(g, _)| *g == t))
            .map(|(_, op)| op.clone())
            .unwrap_or_default()
    }
}

pub fn ibp_table(rc: &ReducedChart, table: &HorizontalTable) -> Result<IbpTable> {
    let zt = rc.zero_test();
    let k = table.k;
    let mut rules = BTreeMap::new();
    for r in 0..table.top_level() {
        let lower: Vec<usize> = (0..table.labels.len()).filter(|&i| table.levels[i] == r).collect();
        let upper: Vec<usize> = (0..table.labels.len()).filter(|&i| table.levels[i] == r + 1).collect();
        let rows: Vec<(usize, usize)> = lower.iter().flat_map(|&e| (1..=k).map(move |j| (e, j))).collect();
        let matrix: Vec<Vec<Expr>> = rows.iter().map(|&(e, j)| upper.iter().map(|&b| table.coeffs[e][j - 1][b].clone()).collect()).collect();
        let chosen = pick_rows(&matrix, upper.len(), zt).map_err(|_| VarError::Inconsistent(r + 1))?;
        let square: Vec<Vec<Expr>> = chosen.iter().map(|&i| matrix[i].clone()).collect();
        let inv = invert(&square, zt).map_err(|_| VarError::Inconsistent(r + 1))?;
        for (bi, &beta) in upper.iter().enumerate() {
            let mut acc: BTreeMap<usize, TotalDiffOperator> = BTreeMap::new();
            for (ci, &row) in chosen.iter().enumerate() {
                let w = together(&inv[bi][ci]);
                if w.is_zero() {
                    continue;
                }
                let (e, j) = rows[row];
                let op = TotalDiffOperator::term(MultiIndex::new(vec![j]), -w.clone())
                    .add(&TotalDiffOperator::multiplication(-together(&total_derivative(&w, j))));
                let slot = acc.entry(e).or_default();
                *slot = slot.add(&op);
                for (g, level) in table.levels.iter().enumerate() {
                    if *level > r {
                        continue;
                    }
                    let c = &table.coeffs[e][j - 1][g];
                    if c.is_zero() {
                        continue;
                    }
                    let slot = acc.entry(g).or_default();
                    *slot = slot.add(&TotalDiffOperator::multiplication(-(&w * c)));
                }
            }
            let cleaned: Vec<(usize, TotalDiffOperator)> =
                acc.into_iter().map(|(g, op)| (g, op.map_coeffs(together))).filter(|(_, op)| !op.is_zero()).collect();
            rules.insert(beta, cleaned);
        }
    }
    Ok(IbpTable { labels: table.labels.clone(), levels: table.levels.clone(), rules })
}

/// Rows of `matrix` forming an invertible square block, chosen at a random
/// point.
fn pick_rows(matrix: &[Vec<Expr>], cols: usize, zt: &ZeroTest) -> Result<Vec<usize>> {
    use crate::scalar::Matrix;
    let mut vars = std::collections::BTreeSet::new();
    for e in matrix.iter().flatten() {
        vars.extend(e.variables().iter().cloned());
    }
    for attempt in 0..zt.samples.max(1) {
        let Ok(vals) = matrix
            .iter()
            .map(|r| r.iter().map(|e| zt.eval_f64(e, &vars, attempt)).collect::<std::result::Result<Vec<f64>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()
        else {
            continue;
        };
        let mut kept = Vec::new();
        let mut acc: Vec<Vec<f64>> = Vec::new();
        for (i, row) in vals.iter().enumerate() {
            acc.push(row.clone());
            if Matrix::from_rows(acc.clone()).rank() > kept.len() {
                kept.push(i);
            } else {
                acc.pop();
            }
        }
        if kept.len() == cols {
            return Ok(kept);
        }
        return Err(VarError::Inconsistent(0));
    }
    Err(SymError::IndeterminateAtAllSamples.into())
}

/// `Â^a_α`: row `a` over reduced contact forms, column over level-0 members
/// of the coframe.
#[derive(Clone, Debug)]
pub struct AOperators {
    pub columns: Vec<Label>,
    pub rows: Vec<Vec<TotalDiffOperator>>,
}

pub fn a_operators(rc: &ReducedChart, table: &HorizontalTable, ibp: &IbpTable) -> Result<AOperators> {
    let k = rc.k();
    let base: Vec<usize> = (0..table.labels.len()).filter(|&i| table.levels[i] == 0).collect();
    let mut rows = Vec::new();
    for a in 1..=rc.qbar() {
        let lifted = rc.lift_form(&rc.reduced_contact_form(a, &MultiIndex::empty()))?;
        let coeffs = table.decompose(rc, &lifted)?;
        let mut ops: BTreeMap<usize, TotalDiffOperator> = BTreeMap::new();
        for (i, c) in coeffs.into_iter().enumerate() {
            if !c.is_zero() {
                ops.insert(i, TotalDiffOperator::multiplication(c));
            }
        }
        for level in (1..=table.top_level()).rev() {
            let here: Vec<usize> = ops.keys().copied().filter(|&i| table.levels[i] == level).collect();
            for beta in here {
                let op = ops.remove(&beta).expect("listed");
                for (g, t) in ibp.rules.get(&beta).map(|v| v.as_slice()).unwrap_or(&[]) {
                    let composed = t.compose(&op, k);
                    let slot = ops.entry(*g).or_default();
                    *slot = slot.add(&composed);
                }
            }
        }
        rows.push(base.iter().map(|i| ops.get(i).cloned().unwrap_or_default().map_coeffs(together)).collect());
    }
    Ok(AOperators { columns: base.iter().map(|&i| table.labels[i].clone()).collect(), rows })
}

/// `Σ_a Â^a_α Ē_a(L)` for every level-0 column α.
pub fn invariant_el_system(lagrangian: &Expr, ops: &AOperators) -> Result<Vec<Expr>> {
    if let Some(v) = lagrangian.variables().iter().find(|v| v.is_upstairs()) {
        return Err(VarError::NotReduced(v.to_string()));
    }
    let euler: Vec<Expr> = (1..=ops.rows.len()).map(|a| euler_operator(lagrangian, a)).collect();
    Ok((0..ops.columns.len())
        .map(|col| Expr::sum(ops.rows.iter().zip(&euler).map(|(row, e)| row[col].apply(e))))
        .collect())
}

/// Whether two extensions of a Lagrangian give the same invariant
/// Euler-Lagrange system once lifted.
pub fn extension_independent(rc: &ReducedChart, ops: &AOperators, first: &Expr, second: &Expr) -> Result<bool> {
    let a = invariant_el_system(first, ops)?;
    let b = invariant_el_system(second, ops)?;
    for (x, y) in a.iter().zip(&b) {
        if !rc.vanishes(&(x - y))? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn euler_of_simple_lagrangians() {
        let zt = ZeroTest::default();
        assert!(zt.equal(&euler_operator(&p("v"), 1), &Expr::one()).unwrap());
        assert!(zt.equal(&euler_operator(&p("v[1]^2/2"), 1), &p("-v[1,1]")).unwrap());
        assert!(euler_operator(&p("y"), 1).is_zero());
        let f = p("y*v^2 + v*v[1]^3");
        assert!(zt.is_zero(&euler_operator(&total_derivative(&f, 1), 1)).unwrap());
    }

    #[test]
    fn composition_matches_double_application() {
        let zt = ZeroTest::default();
        let a = TotalDiffOperator::multiplication(p("v[1]")).add(&TotalDiffOperator::term(MultiIndex::new(vec![1]), p("v")));
        let sq = a.compose(&a, 1);
        let f = p("y^2*v + v[1]");
        assert!(zt.equal(&sq.apply(&f), &a.apply(&a.apply(&f))).unwrap());
        let b = TotalDiffOperator::derivative(1).add(&TotalDiffOperator::multiplication(p("y")));
        let left = a.compose(&b, 1).compose(&a, 1);
        let right = a.compose(&b.compose(&a, 1), 1);
        assert!(left.equal_with(&right, &zt).unwrap());
    }

    #[test]
    fn two_variable_leibniz() {
        let zt = ZeroTest::default();
        let d12 = TotalDiffOperator::term(MultiIndex::new(vec![1, 2]), Expr::one());
        let g = TotalDiffOperator::multiplication(p("y[1]*v[a=2]"));
        let f = p("v[a=1]*y[2]");
        assert!(zt.equal(&d12.compose(&g, 2).apply(&f), &d12.apply(&g.apply(&f))).unwrap());
    }

    pub(crate) fn se2_coframe(rc: &ReducedChart) -> Vec<InvariantContactForm> {
        use crate::liegroup::frame_pullback_of_mc;
        use crate::liegroup::tests::{se2_action, se2_frame};
        let zt = ZeroTest::default();
        let zeta = frame_pullback_of_mc(&se2_action(), &se2_frame(), &zt).unwrap();
        let y = rc.lift(&Variable::y(1)).unwrap();
        let v = rc.lift(&Variable::v(1, &[])).unwrap();
        let dy = DifferentialForm::scalar(y.clone()).d().unwrap();
        let forms = [
            zeta[2].clone(),
            zeta[1].scale(&y).sub(&zeta[0]),
            dy.add(&zeta[1].scale(&v)),
            rc.lift_form(&rc.reduced_contact_form(1, &MultiIndex::empty())).unwrap(),
        ];
        forms
            .into_iter()
            .enumerate()
            .map(|(n, form)| InvariantContactForm {
                comp: 1,
                index: MultiIndex::new(vec![1; n]),
                label: Label::named("eta", n),
                form,
            })
            .collect()
    }

    #[test]
    fn se2_table_and_operator() {
        let zt = ZeroTest::default();
        let rc = crate::reduction::tests::se2_chart();
        let basis = se2_coframe(&rc);
        let table = horizontal_table(&rc, &basis).unwrap();
        let eta = |n| Label::named("eta", n);
        let expect = [
            (0, 0, "0"), (0, 1, "-1/v"), (0, 2, "0"), (0, 3, "0"),
            (1, 0, "y^2/v"), (1, 1, "0"), (1, 2, "1/v"), (1, 3, "0"),
            (2, 0, "y"), (2, 1, "0"), (2, 2, "v[1]/v"), (2, 3, "1/v"),
        ];
        for (s, t, e) in expect {
            let c = table.coefficient(&eta(s), 1, &eta(t)).unwrap();
            assert!(zt.equal(c, &p(e)).unwrap(), "eta{s} -> eta{t}: {c}");
        }
        let ibp = ibp_table(&rc, &table).unwrap();
        let d = TotalDiffOperator::derivative(1);
        let mul = |s: &str| TotalDiffOperator::multiplication(p(s));
        let rule = ibp.target(&eta(3), &eta(2));
        assert!(rule.equal_with(&mul("-2*v[1]").add(&d.scale(&p("-v"))), &zt).unwrap(), "{rule}");
        let ops = a_operators(&rc, &table, &ibp).unwrap();
        let inner = mul("v[1]").add(&d.scale(&p("v")));
        let expect = inner
            .compose(&inner, 1)
            .add(&mul("y^2"))
            .compose(&mul("2*v[1]").add(&d.scale(&p("v"))), 1)
            .add(&mul("-v*y"));
        assert!(ops.rows[0][0].equal_with(&expect, &zt).unwrap(), "{}", ops.rows[0][0]);
    }

    #[test]
    fn r3_extension_freedom() {
        use crate::liegroup::invariant_contact_basis;
        use crate::reduction::tests::{r3_action, r3_chart, r3_frame};
        let zt = ZeroTest::default();
        let rc = r3_chart();
        let basis = invariant_contact_basis(&r3_action(), &r3_frame(), 3, &zt).unwrap();
        let table = horizontal_table(&rc, &basis).unwrap();
        let ibp = ibp_table(&rc, &table).unwrap();
        let ops = a_operators(&rc, &table, &ibp).unwrap();
        assert_eq!(ops.columns.len(), 1);
        let syz = rc.syzygies().unwrap();
        let lagrangian = p("v*v[a=2] - v[a=3]^2 + y[1]*v[a=3]");
        let perturbed = &lagrangian + &(p("y[2] + v") * &syz.relations()[0]);
        assert!(extension_independent(&rc, &ops, &lagrangian, &perturbed).unwrap());
        let changed = &lagrangian + &p("v^3");
        assert!(!extension_independent(&rc, &ops, &lagrangian, &changed).unwrap());
    }
}
