//! Jet coordinates, total derivatives, contact forms and PDE prolongation.

use std::collections::HashMap;

use crate::exterior::{DifferentialForm, FormError, Label};
use crate::symcore::{diff, subst_with, Expr, MultiIndex, SymError, Variable, ZeroTest};

/// `J^r` of maps from `k` independent to `q` dependent variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JetContext {
    pub k: usize,
    pub q: usize,
    pub order: usize,
}

impl JetContext {
    pub fn new(k: usize, q: usize, order: usize) -> Self {
        assert!(k >= 1 && q >= 1, "need at least one independent and one dependent variable");
        JetContext { k, q, order }
    }

    pub fn with_order(&self, order: usize) -> Self {
        JetContext { order, ..*self }
    }

    pub fn independent(&self) -> Vec<Variable> {
        (1..=self.k).map(Variable::Indep).collect()
    }

    /// Jet variables of exactly order `r`.
    pub fn jets_of_order(&self, r: usize) -> Vec<Variable> {
        let mut out = Vec::new();
        for comp in 1..=self.q {
            for index in MultiIndex::of_order(self.k, r) {
                out.push(Variable::Jet { comp, index });
            }
        }
        out
    }

    /// `x^i` followed by jets of increasing order up to `self.order`.
    pub fn coordinates(&self) -> Vec<Variable> {
        let mut out = self.independent();
        for r in 0..=self.order {
            out.extend(self.jets_of_order(r));
        }
        out
    }

    pub fn total_derivative(&self, e: &Expr, i: usize) -> Expr {
        total_derivative(e, i)
    }

    /// `θ^α_J = du^α_J − u^α_{J+i} dx^i` for `|J| < order`.
    pub fn contact_forms(&self) -> Vec<(Label, DifferentialForm)> {
        let mut out = Vec::new();
        for r in 0..self.order {
            for comp in 1..=self.q {
                for index in MultiIndex::of_order(self.k, r) {
                    let form = contact_form(comp, &index, self.k);
                    out.push((Label::named_jet("theta", comp, index), form));
                }
            }
        }
        out
    }
}

pub fn contact_form(comp: usize, index: &MultiIndex, k: usize) -> DifferentialForm {
    let mut f = DifferentialForm::dvar(Variable::Jet { comp, index: index.clone() });
    for i in 1..=k {
        let c = Expr::var(Variable::Jet { comp, index: index.with(i) });
        f = f.sub(&DifferentialForm::dvar(Variable::Indep(i)).scale(&c));
    }
    f
}

/// `D_i e = ∂e/∂x^i + Σ u^α_{J+i} ∂e/∂u^α_J`, also acting on reduced
/// coordinates as `∂/∂y^i + Σ v^a_{I+i} ∂/∂v^a_I`.
pub fn total_derivative(e: &Expr, i: usize) -> Expr {
    let mut parts = Vec::new();
    for v in e.variables().iter() {
        let factor = match v {
            Variable::Indep(j) | Variable::InvBase(j) if *j == i => Expr::one(),
            Variable::Jet { comp, index } => Expr::var(Variable::Jet { comp: *comp, index: index.with(i) }),
            Variable::InvJet { comp, index } => Expr::var(Variable::InvJet { comp: *comp, index: index.with(i) }),
            _ => continue,
        };
        let d = diff(e, v);
        if !d.is_zero() {
            parts.push(&factor * &d);
        }
    }
    Expr::sum(parts)
}

/// Iterated total derivative `D_J e`.
pub fn total_derivative_multi(e: &Expr, index: &MultiIndex) -> Expr {
    index.entries().iter().fold(e.clone(), |acc, &i| total_derivative(&acc, i))
}

#[derive(Clone, Debug)]
pub struct PDESystem {
    pub ctx: JetContext,
    pub equations: Vec<Expr>,
}

impl PDESystem {
    pub fn new(ctx: JetContext, equations: Vec<Expr>) -> Self {
        PDESystem { ctx, equations }
    }
}

/// Adjoin total derivatives of all equations, `steps` times, dropping
/// members equal to an existing one.
pub fn prolong_pde(sys: &PDESystem, steps: usize, zt: &ZeroTest) -> Result<PDESystem, SymError> {
    let mut eqs = sys.equations.clone();
    let mut frontier = eqs.clone();
    for _ in 0..steps {
        let mut next = Vec::new();
        for e in &frontier {
            for i in 1..=sys.ctx.k {
                let d = total_derivative(e, i);
                if zt.is_zero(&d)? {
                    continue;
                }
                let mut dup = false;
                for old in eqs.iter().chain(next.iter()) {
                    if *old == d || zt.equal(old, &d)? {
                        dup = true;
                        break;
                    }
                }
                if !dup {
                    next.push(d);
                }
            }
        }
        eqs.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(PDESystem { ctx: sys.ctx.with_order(sys.ctx.order + steps), equations: eqs })
}

/// Images `u^α_J ↦ ∂_J f^α` for every jet variable occurring in `vars`.
fn holonomic_map(f: &[Expr], vars: impl Iterator<Item = Variable>) -> HashMap<Variable, Expr> {
    let mut map = HashMap::new();
    for v in vars {
        if let Variable::Jet { comp, index } = &v {
            let mut g = f[comp - 1].clone();
            for &i in index.entries() {
                g = diff(&g, &Variable::Indep(i));
            }
            map.insert(v.clone(), g);
        }
    }
    map
}

/// Evaluate on the jet lift of the section `u^α = f^α(x)`.
pub fn holonomic_substitute(e: &Expr, f: &[Expr]) -> Result<Expr, SymError> {
    let map = holonomic_map(f, e.variables().iter().cloned());
    subst_with(e, &|v| map.get(v).cloned())
}

pub fn holonomic_substitute_form(a: &DifferentialForm, f: &[Expr]) -> Result<DifferentialForm, FormError> {
    let mut vars: Vec<Variable> = Vec::new();
    for (ls, c) in a.terms() {
        vars.extend(c.variables().iter().cloned());
        for l in ls {
            if let Label::D(v) = l {
                vars.push(v.clone());
            }
        }
    }
    let map = holonomic_map(f, vars.into_iter());
    a.pullback(&|v| map.get(v).cloned())
}
