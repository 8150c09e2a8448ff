//! Conservation laws of the syzygy equations from Lie algebra cohomology and
//! a moving frame.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::exterior::{DifferentialForm, FormError, Label};
use crate::liegroup::{ce_cohomology, frame_pullback_of_mc, Cochain, GroupAction, GroupError, MovingFrame};
use crate::reduction::{ReducedChart, ReductionError};
use crate::sampling::{eval_at, local_point, rng_for};
use crate::scalar::Matrix;
use crate::symcore::{together, Expr, SymError, Variable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsLawError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("coefficient of {0} is not invariant")]
    NotInvariantCoefficient(String),
    #[error("form is not closed on the syzygy equations; horizontal residue {0}")]
    NotClosed(String),
}

type Result<T> = std::result::Result<T, ConsLawError>;

#[derive(Clone, Debug)]
pub struct ConservationLaw {
    pub degree: usize,
    pub cocycle: Cochain,
    pub form: DifferentialForm,
}

/// `ω̄` for each Chevalley-Eilenberg class of degree `1 ≤ t < k`.
pub fn conservation_laws(action: &GroupAction, frame: &MovingFrame, rc: &ReducedChart) -> Result<Vec<ConservationLaw>> {
    let zt = rc.zero_test();
    let k = rc.k();
    if k < 2 {
        return Ok(Vec::new());
    }
    let constants = action.group().structure_constants(zt)?;
    let zeta = frame_pullback_of_mc(action, frame, zt)?;
    let mut out = Vec::new();
    for t in 1..k {
        for cocycle in ce_cohomology(&constants, t) {
            let upstairs = cocycle.to_form(&zeta);
            let form = push_horizontal(rc, &upstairs, &cocycle)?;
            out.push(ConservationLaw { degree: t, cocycle, form });
        }
    }
    Ok(out)
}

/// Horizontal part of an invariant form rewritten over `dy` and pushed to the
/// reduced chart.
fn push_horizontal(rc: &ReducedChart, form: &DifferentialForm, cocycle: &Cochain) -> Result<DifferentialForm> {
    let k = rc.k();
    let horizontal = form.horizontal_class(k);
    let dx: HashMap<Label, DifferentialForm> = (1..=k)
        .map(|m| {
            let x = Expr::var(Variable::Indep(m));
            let mut f = DifferentialForm::zero(1);
            for j in 1..=k {
                f = f.add(&DifferentialForm::dvar(Variable::InvBase(j)).scale(&rc.invariant_total_derivative(&x, j)));
            }
            (Label::D(Variable::Indep(m)), f)
        })
        .collect();
    let over_dy = horizontal.substitute_labels(&|l| dx.get(l).cloned());
    over_dy.map_coeffs(|c| match rc.to_reduced_checked(c) {
        Ok(r) => Ok(together(&r)),
        Err(ReductionError::NotInvariant(_)) => Err(ConsLawError::NotInvariantCoefficient(cocycle.to_string())),
        Err(e) => Err(e.into()),
    })
}

#[derive(Clone, Debug)]
pub struct ClosednessReport {
    /// Horizontal part of `dω̄` before the syzygies are imposed.
    pub horizontal_residue: DifferentialForm,
}

/// Certifies that the horizontal part of `dω̄` vanishes once the defining
/// expressions of the reduced coordinates are substituted.
pub fn verify_closedness(form: &DifferentialForm, rc: &ReducedChart) -> Result<ClosednessReport> {
    let residue = form.d()?.horizontal_class(rc.k());
    for (_, c) in residue.terms() {
        if !rc.vanishes(c)? {
            return Err(ConsLawError::NotClosed(residue.to_string()));
        }
    }
    Ok(ClosednessReport { horizontal_residue: residue })
}

/// Dimension over the constants of the span of forms on the reduced chart,
/// estimated from their lifts at random jet points.
pub fn constant_span_rank(forms: &[DifferentialForm], rc: &ReducedChart) -> Result<usize> {
    if forms.is_empty() {
        return Ok(0);
    }
    let lifted: Vec<DifferentialForm> = forms.iter().map(|f| rc.lift_form(f)).collect::<std::result::Result<_, _>>()?;
    let mut labels: BTreeSet<Vec<Label>> = BTreeSet::new();
    let mut vars: BTreeSet<Variable> = BTreeSet::new();
    for f in &lifted {
        for (ls, c) in f.terms() {
            labels.insert(ls.clone());
            vars.extend(c.variables().iter().cloned());
        }
    }
    let mut rng = rng_for(rc.zero_test(), 77);
    let mut rows = vec![Vec::new(); lifted.len()];
    let mut taken = 0;
    for _ in 0..200 {
        if taken == 2 * forms.len() + 2 {
            break;
        }
        let pt = local_point(vars.iter().cloned(), &mut rng);
        let vals: std::result::Result<Vec<Vec<f64>>, SymError> =
            lifted.iter().map(|f| labels.iter().map(|l| eval_at(&f.coeff(l), &pt)).collect()).collect();
        let Ok(vals) = vals else { continue };
        if vals.iter().flatten().any(|x| !x.is_finite()) {
            continue;
        }
        for (row, v) in rows.iter_mut().zip(vals) {
            row.extend(v);
        }
        taken += 1;
    }
    if taken == 0 {
        return Err(SymError::IndeterminateAtAllSamples.into());
    }
    Ok(Matrix::from_rows(rows).rank())
}

/// Whether two lists of forms span the same space over the constants.
pub fn same_constant_span(a: &[DifferentialForm], b: &[DifferentialForm], rc: &ReducedChart) -> Result<bool> {
    let ra = constant_span_rank(a, rc)?;
    let rb = constant_span_rank(b, rc)?;
    let both: Vec<DifferentialForm> = a.iter().chain(b).cloned().collect();
    Ok(ra == rb && constant_span_rank(&both, rc)? == ra)
}
