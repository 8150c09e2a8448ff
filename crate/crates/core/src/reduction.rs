//! Orbit reduction: invariant coordinates, invariant derivatives, reduced
//! contact forms, syzygies and generators of the reduced ideal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::exterior::{Coframe, DifferentialForm, FormError, Label};
use crate::jetspace::{total_derivative, JetContext, PDESystem};
use crate::liegroup::{invariantize, GroupAction, GroupError, MovingFrame};
use crate::sampling::{eval_at, local_point, rng_for, Point};
use crate::scalar::Matrix;
use crate::symcore::{diff, invert, solve_linear, subst_with, together, Expr, MultiIndex, SymError, Variable, ZeroTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("horizontal Jacobian of the base invariants is singular")]
    SingularHorizontalFrame,
    #[error("action is not yet free: {0}")]
    NotYetFree(String),
    #[error("numeric rank estimates disagree across sample points")]
    RankEstimateUnstable,
    #[error("reduction does not commute with prolongation: {0}")]
    CommutationFailure(String),
    #[error("no cross-section: {0}")]
    CrossSection(String),
    #[error("{0} is not an invariant function")]
    NotInvariant(String),
}

type Result<T> = std::result::Result<T, ReductionError>;

/// Label of `θ̄^a_I`: `thetabar[n]` for curves, `thetabar[a=α; I=…]` otherwise.
pub fn thetabar_label(k: usize, qbar: usize, comp: usize, index: &MultiIndex) -> Label {
    if k == 1 && qbar == 1 {
        Label::named("thetabar", index.order())
    } else {
        Label::named_jet("thetabar", comp, index.clone())
    }
}

#[derive(Debug, Default)]
struct SectionState {
    through: Option<usize>,
    solved: HashMap<Variable, Expr>,
    relations: Vec<(usize, Expr)>,
}

/// The cross-section `ρ(z) = e` of a moving frame: the coordinates it pins
/// to constants, plus the remaining coordinates solved for in terms of
/// reduced variables, order by order.
#[derive(Debug)]
struct Section {
    fixed: BTreeMap<Variable, Expr>,
    state: Mutex<SectionState>,
}

/// Invariant coordinates `y^i`, `v^a` on `J^r/G` and their invariant jets.
#[derive(Debug)]
pub struct ReducedChart {
    k: usize,
    q: usize,
    y: Vec<Expr>,
    v: Vec<Expr>,
    /// `G[m][i] = (P^{-1})[m][i]` with `P[j][m] = D_m y^j`.
    horizontal_inverse: Vec<Vec<Expr>>,
    lifts: Mutex<HashMap<Variable, Expr>>,
    section: Option<Section>,
    zt: ZeroTest,
}

/// Syzygies `Δ̄_ν = 0` among reduced jet variables.
#[derive(Clone, Debug)]
pub struct SyzygySystem {
    pub system: PDESystem,
    /// Lift order at which each relation was found.
    pub orders: Vec<usize>,
}

impl SyzygySystem {
    pub fn relations(&self) -> &[Expr] {
        &self.system.equations
    }

    pub fn is_empty(&self) -> bool {
        self.system.equations.is_empty()
    }

    /// Whether `target` is a combination of the relations with coefficients
    /// free of the first-order reduced jets.
    pub fn contains(&self, target: &Expr, zt: &ZeroTest) -> Result<bool> {
        let rels = self.relations();
        let mut jets = BTreeSet::new();
        for e in rels.iter().chain([target]) {
            jets.extend(e.variables().iter().filter(|v| matches!(v, Variable::InvJet { index, .. } if index.order() == 1)).cloned());
        }
        let a: Vec<Vec<Expr>> = jets.iter().map(|j| rels.iter().map(|r| diff(r, j)).collect()).collect();
        let b: Vec<Expr> = jets.iter().map(|j| diff(target, j)).collect();
        let coeffs = match crate::symcore::solve_linear_particular(&a, &b, zt) {
            Ok(c) => c,
            Err(SymError::Inconsistent) => return Ok(false),
            Err(e) => return Err(e.into()),
        };
        let combo = Expr::sum(coeffs.iter().zip(rels).map(|(c, r)| c * r));
        Ok(zt.equal(&combo, target)?)
    }
}

/// Generators of the reduced ideal at one order.
#[derive(Clone, Debug)]
pub struct ReducedGenerators {
    pub order: usize,
    pub one_forms: Vec<(Label, DifferentialForm)>,
    pub two_forms: Vec<DifferentialForm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutationReport {
    pub order: usize,
    pub generators: usize,
    pub prolonged: usize,
    pub rank: usize,
}

fn jet_order_of(e: &Expr) -> usize {
    e.variables().iter().filter(|v| v.is_upstairs()).map(|v| v.jet_order()).max().unwrap_or(0)
}

fn numeric_rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    Matrix::from_rows(rows.to_vec()).rank()
}

fn pair_index(n: usize) -> HashMap<(usize, usize), usize> {
    let mut out = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let next = out.len();
            out.insert((i, j), next);
        }
    }
    out
}

fn wedge_rows(a: &[f64], b: &[f64], pairs: &HashMap<(usize, usize), usize>) -> Vec<f64> {
    let mut out = vec![0.0; pairs.len()];
    for (&(i, j), &p) in pairs {
        out[p] = a[i] * b[j] - a[j] * b[i];
    }
    out
}

/// Numeric values of the partial derivatives of `e` at `pt`.
fn gradient(e: &Expr, coords: &[Variable], pt: &Point) -> Result<Vec<f64>> {
    let vars = e.variables();
    coords
        .iter()
        .map(|c| if vars.contains(c) { Ok(eval_at(&diff(e, c), pt)?) } else { Ok(0.0) })
        .collect()
}

fn one_form_row(f: &DifferentialForm, coords: &[Variable], pt: &Point) -> Result<Vec<f64>> {
    coords.iter().map(|c| Ok(eval_at(&f.coeff_of(&Label::D(c.clone())), pt)?)).collect()
}

fn two_form_row(f: &DifferentialForm, coords: &[Variable], pairs: &HashMap<(usize, usize), usize>, pt: &Point) -> Result<Vec<f64>> {
    let pos: HashMap<Label, usize> = coords.iter().enumerate().map(|(i, c)| (Label::D(c.clone()), i)).collect();
    let mut out = vec![0.0; pairs.len()];
    for (labels, c) in f.terms() {
        let (Some(&i), Some(&j)) = (pos.get(&labels[0]), pos.get(&labels[1])) else {
            return Err(ReductionError::NotYetFree(format!("form involves {} outside the jet space", labels[0])));
        };
        let val = eval_at(c, pt)?;
        if i < j {
            out[pairs[&(i, j)]] += val;
        } else {
            out[pairs[&(j, i)]] -= val;
        }
    }
    Ok(out)
}

impl ReducedChart {
    pub fn new(k: usize, q: usize, y: Vec<Expr>, v: Vec<Expr>, zt: &ZeroTest) -> Result<Self> {
        if y.len() != k {
            return Err(ReductionError::NotYetFree(format!("need {k} base invariants, got {}", y.len())));
        }
        let p: Vec<Vec<Expr>> = y.iter().map(|yj| (1..=k).map(|m| total_derivative(yj, m)).collect()).collect();
        let horizontal_inverse = match invert(&p, zt) {
            Ok(g) => g,
            Err(SymError::RankDeficient { .. }) => return Err(ReductionError::SingularHorizontalFrame),
            Err(e) => return Err(e.into()),
        };
        Ok(ReducedChart { k, q, y, v, horizontal_inverse, lifts: Mutex::default(), section: None, zt: *zt })
    }

    /// Attach the cross-section of a moving frame, used to rewrite invariant
    /// functions of jets in reduced variables.
    pub fn with_frame(mut self, action: &GroupAction, frame: &MovingFrame) -> Result<Self> {
        let dim = action.group().dim();
        let ctx = JetContext::new(self.k, self.q, frame.order());
        let mut fixed = BTreeMap::new();
        for c in ctx.coordinates() {
            if fixed.len() == dim {
                break;
            }
            let inv = invariantize(action, frame, &Expr::var(c.clone()), &self.zt)?;
            let vars: Vec<Variable> = inv.variables().iter().cloned().collect();
            let mut constant = true;
            for w in &vars {
                if !self.zt.is_zero(&diff(&inv, w))? {
                    constant = false;
                    break;
                }
            }
            if constant {
                let value = match inv.as_constant() {
                    Some(q) => Expr::rational(q),
                    None => {
                        let x = self.zt.eval_f64(&inv, &inv.variables(), 0)?;
                        Expr::rational(
                            crate::liegroup::nearby_rational(x)
                                .ok_or_else(|| ReductionError::CrossSection(format!("{c} normalizes to {x}")))?,
                        )
                    }
                };
                fixed.insert(c, value);
            }
        }
        if fixed.len() != dim {
            return Err(ReductionError::CrossSection(format!("frame pins {} coordinates, group has dimension {dim}", fixed.len())));
        }
        self.section = Some(Section { fixed, state: Mutex::default() });
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn qbar(&self) -> usize {
        self.v.len()
    }

    pub fn zero_test(&self) -> &ZeroTest {
        &self.zt
    }

    pub fn base_invariants(&self) -> &[Expr] {
        &self.y
    }

    pub fn fiber_invariants(&self) -> &[Expr] {
        &self.v
    }

    /// Coordinates pinned by the cross-section, if a frame is attached.
    pub fn normalized_coordinates(&self) -> Option<&BTreeMap<Variable, Expr>> {
        self.section.as_ref().map(|s| &s.fixed)
    }

    /// `dy^j/dy^i`-dual derivative: `dF/dy^i = Σ_m D_m F · (P^{-1})[m][i]`.
    pub fn invariant_total_derivative(&self, f: &Expr, i: usize) -> Expr {
        Expr::sum((1..=self.k).map(|m| total_derivative(f, m) * &self.horizontal_inverse[m - 1][i - 1]))
    }

    /// Defining jet expression of a reduced coordinate.
    pub fn lift(&self, var: &Variable) -> Result<Expr> {
        if let Some(e) = self.lifts.lock().unwrap().get(var) {
            return Ok(e.clone());
        }
        let out = match var {
            Variable::InvBase(i) if *i >= 1 && *i <= self.k => self.y[i - 1].clone(),
            Variable::InvJet { comp, index } if *comp >= 1 && *comp <= self.qbar() => {
                if index.is_empty() {
                    self.v[comp - 1].clone()
                } else {
                    let i = index.max_entry();
                    let lower = self.lift(&Variable::InvJet { comp: *comp, index: index.without(i).expect("entry present") })?;
                    self.invariant_total_derivative(&lower, i)
                }
            }
            other if other.is_reduced() => return Err(ReductionError::NotInvariant(format!("{other} is outside the reduced chart"))),
            other => Expr::var(other.clone()),
        };
        self.lifts.lock().unwrap().insert(var.clone(), out.clone());
        Ok(out)
    }

    /// Substitute defining expressions for all reduced variables.
    pub fn lift_expr(&self, e: &Expr) -> Result<Expr> {
        let mut map = HashMap::new();
        for v in e.variables().iter().filter(|v| v.is_reduced()) {
            map.insert(v.clone(), self.lift(v)?);
        }
        Ok(subst_with(e, &|v| map.get(v).cloned())?)
    }

    /// `p*ω` for a form on the reduced chart.
    pub fn lift_form(&self, f: &DifferentialForm) -> Result<DifferentialForm> {
        let mut vars = BTreeSet::new();
        for (labels, c) in f.terms() {
            vars.extend(c.variables().iter().filter(|v| v.is_reduced()).cloned());
            for l in labels {
                if let Label::D(v) = l {
                    if v.is_reduced() {
                        vars.insert(v.clone());
                    }
                }
            }
        }
        let mut map = HashMap::new();
        for v in vars {
            let l = self.lift(&v)?;
            map.insert(v, l);
        }
        Ok(f.pullback(&|v| map.get(v).cloned())?)
    }

    pub fn lift_order(&self, var: &Variable) -> Result<usize> {
        Ok(jet_order_of(&self.lift(var)?))
    }

    /// Reduced coordinates whose lifts live on `J^r`, by increasing lift order.
    pub fn reduced_variables(&self, r: usize) -> Result<Vec<(Variable, usize)>> {
        let mut out = Vec::new();
        for i in 1..=self.k {
            let v = Variable::InvBase(i);
            let o = self.lift_order(&v)?;
            if o <= r {
                out.push((v, o));
            }
        }
        for a in 1..=self.qbar() {
            let base = jet_order_of(&self.v[a - 1]);
            if base > r {
                continue;
            }
            for index in MultiIndex::up_to(self.k, r - base) {
                let v = Variable::InvJet { comp: a, index };
                let o = self.lift_order(&v)?;
                if o <= r {
                    out.push((v, o));
                }
            }
        }
        out.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// `θ̄^a_I = dv^a_I − v^a_{I+i} dy^i` for `|I| < order`.
    pub fn reduced_contact_forms(&self, order: usize) -> Vec<(Label, DifferentialForm)> {
        let mut out = Vec::new();
        for n in 0..order {
            for a in 1..=self.qbar() {
                for index in MultiIndex::of_order(self.k, n) {
                    out.push((thetabar_label(self.k, self.qbar(), a, &index), self.reduced_contact_form(a, &index)));
                }
            }
        }
        out
    }

    pub fn reduced_contact_form(&self, comp: usize, index: &MultiIndex) -> DifferentialForm {
        let mut f = DifferentialForm::dvar(Variable::InvJet { comp, index: index.clone() });
        for i in 1..=self.k {
            let c = -Expr::var(Variable::InvJet { comp, index: index.with(i) });
            f = f.add(&DifferentialForm::dvar(Variable::InvBase(i)).scale(&c));
        }
        f
    }

    /// Random points of `J^r` where the horizontal frame is well conditioned.
    fn sample_points(&self, r: usize, count: usize, stream: u64) -> Result<Vec<Point>> {
        let coords = JetContext::new(self.k, self.q, r).coordinates();
        let mut rng = rng_for(&self.zt, stream);
        let mut out = Vec::new();
        for _ in 0..50 * count {
            let pt = local_point(coords.iter().cloned(), &mut rng);
            let ok = self.horizontal_inverse.iter().flatten().all(|g| eval_at(g, &pt).is_ok_and(|x| x.is_finite() && x.abs() < 50.0));
            if ok {
                out.push(pt);
                if out.len() == count {
                    return Ok(out);
                }
            }
        }
        Err(SymError::IndeterminateAtAllSamples.into())
    }

    fn section(&self) -> Result<&Section> {
        self.section.as_ref().ok_or_else(|| ReductionError::CrossSection("no moving frame attached".into()))
    }

    /// Solve the cross-section for every free coordinate up to order `r`.
    fn extend_section(&self, r: usize) -> Result<()> {
        let sec = self.section()?;
        let start = match sec.state.lock().unwrap().through {
            Some(t) if t >= r => return Ok(()),
            Some(t) => t + 1,
            None => 0,
        };
        let ctx = JetContext::new(self.k, self.q, r);
        let vars = self.reduced_variables(r)?;
        for n in start..=r {
            let mut unknowns: Vec<Variable> = if n == 0 { ctx.independent() } else { Vec::new() };
            unknowns.extend(ctx.jets_of_order(n));
            unknowns.retain(|u| !sec.fixed.contains_key(u));
            let equations: Vec<&Variable> = vars.iter().filter(|(_, o)| *o == n).map(|(v, _)| v).collect();
            let solved = sec.state.lock().unwrap().solved.clone();
            let restrict = |e: &Expr| -> Result<Expr> {
                Ok(subst_with(e, &|v| sec.fixed.get(v).cloned().or_else(|| solved.get(v).cloned()))?)
            };
            let mut rows = Vec::new();
            let mut rhs = Vec::new();
            for w in &equations {
                let restricted = restrict(&self.lift(w)?)?;
                let coeffs: Vec<Expr> = unknowns.iter().map(|u| diff(&restricted, u)).collect();
                let zero: HashMap<Variable, Expr> = unknowns.iter().map(|u| (u.clone(), Expr::zero())).collect();
                let constant = subst_with(&restricted, &|v| zero.get(v).cloned())?;
                rows.push(coeffs);
                rhs.push(Expr::var((*w).clone()) - constant);
            }
            let chosen = self.independent_rows(&rows, unknowns.len(), n)?;
            if chosen.len() < unknowns.len() {
                return Err(ReductionError::NotYetFree(format!(
                    "order {n}: reduced coordinates determine {} of {} free jets",
                    chosen.len(),
                    unknowns.len()
                )));
            }
            let a: Vec<Vec<Expr>> = chosen.iter().map(|&i| rows[i].clone()).collect();
            let b: Vec<Expr> = chosen.iter().map(|&i| rhs[i].clone()).collect();
            let sol = if unknowns.is_empty() { Vec::new() } else { solve_linear(&a, &b, &self.zt)? };
            let mut st = sec.state.lock().unwrap();
            for (u, s) in unknowns.iter().zip(&sol) {
                st.solved.insert(u.clone(), s.clone());
            }
            let map: HashMap<Variable, Expr> = unknowns.iter().cloned().zip(sol).collect();
            for i in (0..rows.len()).filter(|i| !chosen.contains(i)) {
                let lhs = Expr::sum(rows[i].iter().zip(&unknowns).map(|(c, u)| c * &map[u]));
                st.relations.push((n, &rhs[i] - &lhs));
            }
            st.through = Some(n);
        }
        Ok(())
    }

    /// Rows of a symbolic matrix that are independent at random points.
    fn independent_rows(&self, rows: &[Vec<Expr>], cols: usize, stream: usize) -> Result<Vec<usize>> {
        if cols == 0 {
            return Ok(Vec::new());
        }
        let mut vars = BTreeSet::new();
        for e in rows.iter().flatten() {
            vars.extend(e.variables().iter().cloned());
        }
        let mut picks: Option<Vec<usize>> = None;
        for attempt in 0..3 {
            let mut rng = rng_for(&self.zt, 1000 + 7 * stream as u64 + attempt);
            let mut numeric = None;
            for _ in 0..20 {
                let pt = local_point(vars.iter().cloned(), &mut rng);
                let vals: std::result::Result<Vec<Vec<f64>>, SymError> =
                    rows.iter().map(|r| r.iter().map(|e| eval_at(e, &pt)).collect()).collect();
                if let Ok(v) = vals {
                    if v.iter().flatten().all(|x| x.is_finite()) {
                        numeric = Some(v);
                        break;
                    }
                }
            }
            let numeric = numeric.ok_or(SymError::IndeterminateAtAllSamples)?;
            let mut kept: Vec<usize> = Vec::new();
            let mut acc: Vec<Vec<f64>> = Vec::new();
            for (i, row) in numeric.iter().enumerate() {
                acc.push(row.clone());
                if numeric_rank(&acc) > kept.len() {
                    kept.push(i);
                } else {
                    acc.pop();
                }
            }
            match &picks {
                None => picks = Some(kept),
                Some(p) if p.len() != kept.len() => return Err(ReductionError::RankEstimateUnstable),
                _ => {}
            }
        }
        Ok(picks.unwrap_or_default())
    }

    /// Rewrite an invariant function of jets in reduced variables by
    /// restricting it to the cross-section.
    pub fn to_reduced(&self, e: &Expr) -> Result<Expr> {
        let sec = self.section()?;
        let r = jet_order_of(e);
        self.extend_section(r)?;
        let st = sec.state.lock().unwrap();
        Ok(subst_with(e, &|v| sec.fixed.get(v).cloned().or_else(|| st.solved.get(v).cloned()))?)
    }

    /// Like [`to_reduced`](Self::to_reduced) but certifies the result lifts
    /// back to `e`.
    pub fn to_reduced_checked(&self, e: &Expr) -> Result<Expr> {
        let out = self.to_reduced(e)?;
        if !self.zt.equal(&self.lift_expr(&out)?, e)? {
            return Err(ReductionError::NotInvariant(e.to_string()));
        }
        Ok(out)
    }

    /// Relations among `y, v^a, v^a_i`, found as the rows left over when the
    /// cross-section is solved for the free jets.
    pub fn syzygies(&self) -> Result<SyzygySystem> {
        let top = (1..=self.qbar())
            .map(|a| self.lift_order(&Variable::InvJet { comp: a, index: MultiIndex::new(vec![1]) }))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        self.extend_section(top)?;
        let st = self.section()?.state.lock().unwrap();
        let mut eqs = Vec::new();
        let mut orders = Vec::new();
        for (n, rel) in st.relations.iter().filter(|(n, _)| *n <= top) {
            let rel = together(rel);
            let (_, prim) = if rel.len() > 1 { rel.split_content() } else { (Expr::one(), rel.clone()) };
            eqs.push(prim);
            orders.push(*n);
        }
        let ctx = JetContext::new(self.k, self.qbar(), 1);
        Ok(SyzygySystem { system: PDESystem::new(ctx, eqs), orders })
    }

    /// Whether an expression in reduced variables vanishes once lifted.
    pub fn vanishes(&self, e: &Expr) -> Result<bool> {
        Ok(self.zt.is_zero(&self.lift_expr(e)?)?)
    }

    /// Generators of the reduced ideal on `J^r/G`. `contact` optionally gives
    /// an invariant basis of the contact forms of order `< r`; otherwise the
    /// standard contact forms are used and any 2-form generator is certified
    /// invariant before it is pushed down.
    pub fn reduced_ideal_generators(&self, r: usize, contact: Option<&[DifferentialForm]>) -> Result<ReducedGenerators> {
        let ctx = JetContext::new(self.k, self.q, r);
        let coords = ctx.coordinates();
        let n = coords.len();
        let vars = self.reduced_variables(r)?;
        let lifts: Vec<Expr> = vars.iter().map(|(v, _)| self.lift(v)).collect::<Result<_>>()?;
        let contact: Vec<DifferentialForm> = match contact {
            Some(c) => c.to_vec(),
            None => ctx.contact_forms().into_iter().map(|(_, f)| f).collect(),
        };
        let candidates: Vec<(Label, DifferentialForm, Variable, MultiIndex, usize)> = {
            let mut out = Vec::new();
            for (var, _) in &vars {
                let Variable::InvJet { comp, index } = var else { continue };
                let mut fits = true;
                for i in 1..=self.k {
                    if self.lift_order(&Variable::InvJet { comp: *comp, index: index.with(i) })? > r {
                        fits = false;
                    }
                }
                if fits {
                    out.push((
                        thetabar_label(self.k, self.qbar(), *comp, index),
                        self.reduced_contact_form(*comp, index),
                        var.clone(),
                        index.clone(),
                        *comp,
                    ));
                }
            }
            out
        };
        let points = self.sample_points(r, 3, 41 + r as u64)?;
        let pairs = pair_index(n);

        // basic forms, contact forms and the reduced 1-forms, numerically
        let mut basic_pick: Option<Vec<usize>> = None;
        let mut one_pick: Option<Vec<usize>> = None;
        let mut complement_pick: Option<Vec<usize>> = None;
        let mut meet_dim: Option<usize> = None;
        for pt in &points {
            let grads: Vec<Vec<f64>> = lifts.iter().map(|l| gradient(l, &coords, pt)).collect::<Result<_>>()?;
            let mut basic = Vec::new();
            let mut acc: Vec<Vec<f64>> = Vec::new();
            for (i, g) in grads.iter().enumerate() {
                acc.push(g.clone());
                if numeric_rank(&acc) > basic.len() {
                    basic.push(i);
                } else {
                    acc.pop();
                }
            }
            let cont: Vec<Vec<f64>> = contact.iter().map(|c| one_form_row(c, &coords, pt)).collect::<Result<_>>()?;
            let rank_c = numeric_rank(&cont);
            let mut both = acc.clone();
            both.extend(cont.iter().cloned());
            let meet = rank_c + basic.len() - numeric_rank(&both);
            let mut thetas = Vec::new();
            let mut tacc: Vec<Vec<f64>> = Vec::new();
            for (i, (_, _, var, index, comp)) in candidates.iter().enumerate() {
                let pos = |w: &Variable| vars.iter().position(|(x, _)| x == w).expect("listed");
                let mut row = grads[pos(var)].clone();
                for j in 1..=self.k {
                    let c = eval_at(&self.lift(&Variable::InvJet { comp: *comp, index: index.with(j) })?, pt)?;
                    let gy = &grads[pos(&Variable::InvBase(j))];
                    for (x, g) in row.iter_mut().zip(gy) {
                        *x -= c * g;
                    }
                }
                tacc.push(row);
                if numeric_rank(&tacc) > thetas.len() {
                    thetas.push(i);
                } else {
                    tacc.pop();
                }
            }
            let mut comp_idx = Vec::new();
            let mut cacc = acc.clone();
            for (i, c) in cont.iter().enumerate() {
                cacc.push(c.clone());
                if numeric_rank(&cacc) > basic.len() + comp_idx.len() {
                    comp_idx.push(i);
                } else {
                    cacc.pop();
                }
            }
            let stable = |slot: &mut Option<Vec<usize>>, now: Vec<usize>| -> Result<()> {
                match slot {
                    None => *slot = Some(now),
                    Some(p) if p.len() != now.len() => return Err(ReductionError::RankEstimateUnstable),
                    _ => {}
                }
                Ok(())
            };
            stable(&mut basic_pick, basic)?;
            stable(&mut one_pick, thetas)?;
            stable(&mut complement_pick, comp_idx)?;
            match meet_dim {
                None => meet_dim = Some(meet),
                Some(m) if m != meet => return Err(ReductionError::RankEstimateUnstable),
                _ => {}
            }
        }
        let basic = basic_pick.unwrap_or_default();
        let thetas = one_pick.unwrap_or_default();
        let complement = complement_pick.unwrap_or_default();
        let meet = meet_dim.unwrap_or(0);
        let group_dim = n - basic.len();
        if basic.len() + complement.len() != n {
            return Err(ReductionError::NotYetFree(format!(
                "order {r}: contact forms do not complement the {} basic forms",
                basic.len()
            )));
        }
        if thetas.len() != meet {
            return Err(ReductionError::NotYetFree(format!(
                "order {r}: {meet} invariant contact directions but {} reduced contact forms",
                thetas.len()
            )));
        }
        let _ = group_dim;
        let one_forms: Vec<(Label, DifferentialForm)> =
            thetas.iter().map(|&i| (candidates[i].0.clone(), candidates[i].1.clone())).collect();

        // 2-forms: p₂(dc) for c in the contact complement, kept when not
        // already generated by the 1-forms
        let mut accepted: Vec<usize> = Vec::new();
        for (ci, &c) in complement.iter().enumerate() {
            let dc = contact[c].d()?;
            let mut redundant_everywhere = true;
            for pt in &points {
                let grads: Vec<Vec<f64>> = lifts.iter().map(|l| gradient(l, &coords, pt)).collect::<Result<_>>()?;
                let mut frame_rows: Vec<Vec<f64>> = basic.iter().map(|&i| grads[i].clone()).collect();
                for &j in &complement {
                    frame_rows.push(one_form_row(&contact[j], &coords, pt)?);
                }
                let a = Matrix::from_rows(frame_rows);
                let ainv = a.inverse().ok_or(ReductionError::RankEstimateUnstable)?;
                let project = |w: &[f64]| -> Vec<f64> {
                    let mut full: Matrix<f64> = Matrix::zeros(n, n);
                    for (&(i, j), &p) in &pairs {
                        full[(i, j)] = w[p];
                        full[(j, i)] = -w[p];
                    }
                    let mut inner = ainv.transpose().mul(&full).mul(&ainv);
                    for i in basic.len()..n {
                        for j in 0..n {
                            inner[(i, j)] = 0.0;
                            inner[(j, i)] = 0.0;
                        }
                    }
                    let back = a.transpose().mul(&inner).mul(&a);
                    let mut out = vec![0.0; pairs.len()];
                    for (&(i, j), &p) in &pairs {
                        out[p] = back[(i, j)];
                    }
                    out
                };
                let raw = two_form_row(&dc, &coords, &pairs, pt)?;
                let target = project(&raw);
                let scale = raw.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                if target.iter().all(|x| x.abs() <= 1e-9 * scale) {
                    continue;
                }
                let mut span: Vec<Vec<f64>> = Vec::new();
                for &t in &thetas {
                    let (_, _, var, index, comp) = &candidates[t];
                    let pos = |w: &Variable| vars.iter().position(|(x, _)| x == w).expect("listed");
                    let mut th = grads[pos(var)].clone();
                    for j in 1..=self.k {
                        let cj = eval_at(&self.lift(&Variable::InvJet { comp: *comp, index: index.with(j) })?, pt)?;
                        for (x, g) in th.iter_mut().zip(&grads[pos(&Variable::InvBase(j))]) {
                            *x -= cj * g;
                        }
                    }
                    for &b in &basic {
                        span.push(wedge_rows(&th, &grads[b], &pairs));
                    }
                    for j in 1..=self.k {
                        let higher = Variable::InvJet { comp: *comp, index: index.with(j) };
                        let gh = gradient(&self.lift(&higher)?, &coords, pt)?;
                        let row = wedge_rows(&grads[pos(&Variable::InvBase(j))], &gh, &pairs);
                        span.push(row);
                    }
                }
                for &prev in &accepted {
                    let dprev = contact[complement[prev]].d()?;
                    span.push(project(&two_form_row(&dprev, &coords, &pairs, pt)?));
                }
                let base_rank = numeric_rank(&span);
                span.push(target);
                if numeric_rank(&span) > base_rank {
                    redundant_everywhere = false;
                }
            }
            if !redundant_everywhere {
                accepted.push(ci);
            }
        }

        let mut two_forms = Vec::new();
        if !accepted.is_empty() {
            let basic_vars: Vec<Variable> = basic.iter().map(|&i| vars[i].0.clone()).collect();
            let mut labels: Vec<Label> = basic_vars.iter().map(|v| Label::D(v.clone())).collect();
            let mut forms: Vec<DifferentialForm> = basic
                .iter()
                .map(|&i| Ok(DifferentialForm::scalar(lifts[i].clone()).d()?))
                .collect::<Result<_>>()?;
            for (j, &c) in complement.iter().enumerate() {
                labels.push(Label::named("complement", j));
                forms.push(contact[c].clone());
            }
            let coord_labels: Vec<Label> = coords.iter().cloned().map(Label::D).collect();
            let frame = Coframe::new(labels.clone(), forms, coord_labels, &self.zt)?;
            let drop: BTreeSet<Label> = labels[basic.len()..].iter().cloned().collect();
            for &ci in &accepted {
                let p2 = frame.decompose(&contact[complement[ci]].d()?).drop_labels(&drop);
                let pushed = p2.map_coeffs(|c| Ok::<_, ReductionError>(together(&self.to_reduced_checked(c)?)))?;
                two_forms.push(clear_denominators(&pushed));
            }
        }
        Ok(ReducedGenerators { order: r, one_forms, two_forms })
    }

    /// Checks that the generators at order `r + 1` and the prolongation of the
    /// generators at order `r` span the same forms at random points.
    pub fn check_commutation(&self, r: usize, contact_r: Option<&[DifferentialForm]>, contact_next: Option<&[DifferentialForm]>) -> Result<CommutationReport> {
        let here = self.reduced_ideal_generators(r, contact_r)?;
        if let Some(w) = here.two_forms.first() {
            return Err(ReductionError::CommutationFailure(format!("order {r} has the 2-form generator {w}")));
        }
        let next = self.reduced_ideal_generators(r + 1, contact_next)?;
        if let Some(w) = next.two_forms.first() {
            return Err(ReductionError::CommutationFailure(format!("order {} has the 2-form generator {w}", r + 1)));
        }
        let mut prolonged: Vec<DifferentialForm> = here.one_forms.iter().map(|(_, f)| f.clone()).collect();
        for (_, f) in &here.one_forms {
            for l in f.labels() {
                if let Label::D(Variable::InvJet { comp, index }) = l {
                    if f.coeff_of(&Label::D(Variable::InvJet { comp, index: index.clone() })) == Expr::one() {
                        for i in 1..=self.k {
                            prolonged.push(self.reduced_contact_form(comp, &index.with(i)));
                        }
                    }
                }
            }
        }
        let coords = JetContext::new(self.k, self.q, r + 2).coordinates();
        let lifted_p: Vec<DifferentialForm> = prolonged.iter().map(|f| self.lift_form(f)).collect::<Result<_>>()?;
        let lifted_n: Vec<DifferentialForm> = next.one_forms.iter().map(|(_, f)| self.lift_form(f)).collect::<Result<_>>()?;
        let mut ranks = None;
        for pt in self.sample_points(r + 2, 3, 59 + r as u64)? {
            let rows_p: Vec<Vec<f64>> = lifted_p.iter().map(|f| one_form_row(f, &coords, &pt)).collect::<Result<_>>()?;
            let rows_n: Vec<Vec<f64>> = lifted_n.iter().map(|f| one_form_row(f, &coords, &pt)).collect::<Result<_>>()?;
            let mut union = rows_p.clone();
            union.extend(rows_n.iter().cloned());
            let (a, b, c) = (numeric_rank(&rows_p), numeric_rank(&rows_n), numeric_rank(&union));
            if a != c || b != c {
                return Err(ReductionError::CommutationFailure(format!(
                    "prolonged generators span {a}, order {} generators span {b}, together {c}",
                    r + 1
                )));
            }
            match ranks {
                None => ranks = Some(c),
                Some(x) if x != c => return Err(ReductionError::RankEstimateUnstable),
                _ => {}
            }
        }
        Ok(CommutationReport { order: r, generators: next.one_forms.len(), prolonged: prolonged.len(), rank: ranks.unwrap_or(0) })
    }
}

/// Multiply a form by the common denominator of its coefficients and strip
/// numeric content.
pub fn clear_denominators(f: &DifferentialForm) -> DifferentialForm {
    use crate::symcore::{Atom, Exponent};
    use num_traits::{Signed, Zero};
    let mut worst: BTreeMap<Atom, Exponent> = BTreeMap::new();
    for (_, c) in f.terms() {
        for t in c.terms() {
            for (a, e) in t.mono.factors() {
                if e.is_negative() {
                    let slot = worst.entry(a.clone()).or_insert_with(Exponent::zero);
                    if *e < *slot {
                        *slot = *e;
                    }
                }
            }
        }
    }
    let factor = Expr::product(worst.into_iter().map(|(a, e)| Expr::from_atom(a).pow(-e).expect("nonzero base")));
    let scaled = f.scale(&factor);
    let all: Vec<Expr> = scaled.terms().map(|(_, c)| c.clone()).collect();
    let sum = Expr::sum(all.iter().map(|c| c.clone()));
    if sum.len() > 1 {
        let (head, _) = sum.split_content();
        if let Some(q) = head.as_constant() {
            return scaled.scale_rational(&q.recip());
        }
    }
    scaled
}

/// Shared handle used by downstream modules.
pub type SharedChart = Arc<ReducedChart>;

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    fn r3() -> ReducedChart {
        ReducedChart::new(2, 1, vec![p("u[1]"), p("u[2]")], vec![p("u[1,1]"), p("u[2,2]"), p("u[1,2]")], &ZeroTest::default())
            .unwrap()
    }

    #[test]
    fn invariant_derivative_matches_solve() {
        let rc = r3();
        let zt = ZeroTest::default();
        let d = rc.lift(&Variable::v(1, &[1])).unwrap();
        let oracle = p("(u[1,1,1]*u[2,2] - u[1,1,2]*u[1,2])/(u[1,1]*u[2,2] - u[1,2]^2)");
        assert!(zt.equal(&d, &oracle).unwrap());
        let y = rc.invariant_total_derivative(&p("u[2]"), 1);
        assert!(zt.is_zero(&y).unwrap());
    }

    #[test]
    fn derivatives_commute() {
        let rc = r3();
        let zt = ZeroTest::default();
        let f = p("u[1,2]");
        let a = rc.invariant_total_derivative(&rc.invariant_total_derivative(&f, 1), 2);
        let b = rc.invariant_total_derivative(&rc.invariant_total_derivative(&f, 2), 1);
        assert!(zt.equal(&a, &b).unwrap());
    }

    #[test]
    fn reduced_contact_forms_are_contact() {
        let rc = r3();
        let zt = ZeroTest::default();
        assert!(rc.reduced_contact_forms(0).is_empty());
        for (_, f) in rc.reduced_contact_forms(1) {
            let up = rc.lift_form(&f).unwrap();
            assert!(up.horizontal_class(2).is_zero_with(&zt).unwrap());
        }
    }

    pub(crate) fn r3_action() -> GroupAction {
        let g = crate::liegroup::LieGroupChart::abelian(&["t1", "t2", "s"]);
        GroupAction::new(g, 2, 1, vec![p("x[1] + t1"), p("x[2] + t2")], vec![p("u + s")]).unwrap()
    }

    pub(crate) fn r3_frame() -> MovingFrame {
        MovingFrame::new(0, vec![p("-x[1]"), p("-x[2]"), p("-u")])
    }

    pub(crate) fn r3_chart() -> ReducedChart {
        r3().with_frame(&r3_action(), &r3_frame()).unwrap()
    }

    pub(crate) fn se2_chart() -> ReducedChart {
        use crate::liegroup::tests::{se2_action, se2_frame};
        ReducedChart::new(
            1,
            1,
            vec![p("u[1,1]*(1+u[1]^2)^(-3/2)")],
            vec![p("u[1,1,1]*(1+u[1]^2)^(-2) - 3*u[1]*u[1,1]^2*(1+u[1]^2)^(-3)")],
            &ZeroTest::default(),
        )
        .unwrap()
        .with_frame(&se2_action(), &se2_frame())
        .unwrap()
    }

    #[test]
    fn r3_syzygies() {
        let rc = r3_chart();
        let syz = rc.syzygies().unwrap();
        assert_eq!(syz.relations().len(), 2);
        for d in syz.relations() {
            assert!(rc.vanishes(d).unwrap(), "{d}");
        }
        let zt = ZeroTest::default();
        let first = p("v[a=3]*(v[a=2; I=2] - v[a=3; I=1]) + v*v[a=2; I=1] - v[a=2]*v[a=3; I=2]");
        let second = p("v[a=3]*(v[1] - v[a=3; I=2]) + v[a=2]*v[a=1; I=2] - v*v[a=3; I=1]");
        assert!(syz.contains(&first, &zt).unwrap());
        assert!(syz.contains(&second, &zt).unwrap());
        assert!(!syz.contains(&p("v[1]"), &zt).unwrap());
    }

    #[test]
    fn r3_two_forms_at_order_two() {
        let rc = r3_chart();
        let gens = rc.reduced_ideal_generators(2, None).unwrap();
        assert!(gens.one_forms.is_empty());
        assert_eq!(gens.two_forms.len(), 2, "{:?}", gens.two_forms.iter().map(|f| f.to_string()).collect::<Vec<_>>());
        let d = |c: usize| DifferentialForm::dvar(Variable::v(c, &[]));
        let dy = |i: usize| DifferentialForm::dvar(Variable::y(i));
        let v = |c: usize| Expr::var(Variable::v(c, &[]));
        let a = dy(1).scale(&v(2)).sub(&dy(2).scale(&v(3)));
        let b = dy(2).scale(&v(1)).sub(&dy(1).scale(&v(3)));
        let expect = [a.wedge(&d(1)).add(&b.wedge(&d(3))), a.wedge(&d(3)).add(&b.wedge(&d(2)))];
        let zt = ZeroTest::default();
        for (w, e) in gens.two_forms.iter().zip(&expect) {
            assert!(w.equal_with(e, &zt).unwrap(), "{w}");
        }
        assert!(matches!(rc.check_commutation(2, None, None), Err(ReductionError::CommutationFailure(_))));
    }

    #[test]
    fn r3_commutes_at_order_three() {
        let rc = r3_chart();
        let gens = rc.reduced_ideal_generators(3, None).unwrap();
        assert_eq!(gens.one_forms.len(), 3);
        assert!(gens.two_forms.is_empty());
        rc.check_commutation(3, None, None).unwrap();
    }

    #[test]
    fn se2_section_and_commutation() {
        let rc = se2_chart();
        let zt = ZeroTest::default();
        assert_eq!(rc.normalized_coordinates().unwrap().len(), 3);
        assert!(rc.syzygies().unwrap().is_empty());
        let v1 = rc.lift(&Variable::v(1, &[1])).unwrap();
        let back = rc.to_reduced_checked(&v1).unwrap();
        assert!(zt.equal(&back, &Expr::var(Variable::v(1, &[1]))).unwrap(), "{back}");
        let gens = rc.reduced_ideal_generators(4, None).unwrap();
        assert_eq!(gens.one_forms.len(), 1);
        assert_eq!(gens.one_forms[0].0, Label::named("thetabar", 0));
        rc.check_commutation(4, None, None).unwrap();
    }
}
