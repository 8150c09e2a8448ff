use std::fmt;
use std::sync::Arc;

use super::MultiIndex;

/// A coordinate symbol. Indices for components and independent variables
/// are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    /// `x^i`
    Indep(usize),
    /// `u^α_J`; order zero is the dependent variable itself.
    Jet { comp: usize, index: MultiIndex },
    /// `y^i`
    InvBase(usize),
    /// `v^a_I`
    InvJet { comp: usize, index: MultiIndex },
    /// Group coordinate.
    Param(Arc<str>),
    /// Auxiliary coordinate, e.g. a fiber coordinate of the reduction map.
    Aux(Arc<str>),
}

impl Variable {
    pub fn x(i: usize) -> Self {
        Variable::Indep(i)
    }

    pub fn u(comp: usize, index: &[usize]) -> Self {
        Variable::Jet { comp, index: MultiIndex::new(index.to_vec()) }
    }

    pub fn y(i: usize) -> Self {
        Variable::InvBase(i)
    }

    pub fn v(comp: usize, index: &[usize]) -> Self {
        Variable::InvJet { comp, index: MultiIndex::new(index.to_vec()) }
    }

    pub fn param(name: &str) -> Self {
        Variable::Param(Arc::from(name))
    }

    pub fn aux(name: &str) -> Self {
        Variable::Aux(Arc::from(name))
    }

    /// Jet order for `u` and `v` variables, zero otherwise.
    pub fn jet_order(&self) -> usize {
        match self {
            Variable::Jet { index, .. } | Variable::InvJet { index, .. } => index.order(),
            _ => 0,
        }
    }

    pub fn is_upstairs(&self) -> bool {
        matches!(self, Variable::Indep(_) | Variable::Jet { .. })
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self, Variable::InvBase(_) | Variable::InvJet { .. })
    }
}

fn fmt_jet(f: &mut fmt::Formatter<'_>, sym: &str, comp: usize, index: &MultiIndex) -> fmt::Result {
    match (comp, index.is_empty()) {
        (1, true) => write!(f, "{sym}"),
        (1, false) => write!(f, "{sym}[{index}]"),
        (_, true) => write!(f, "{sym}[a={comp}]"),
        (_, false) => write!(f, "{sym}[a={comp}; I={index}]"),
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Indep(i) => write!(f, "x[{i}]"),
            Variable::InvBase(i) => write!(f, "y[{i}]"),
            Variable::Jet { comp, index } => fmt_jet(f, "u", *comp, index),
            Variable::InvJet { comp, index } => fmt_jet(f, "v", *comp, index),
            Variable::Param(name) => write!(f, "{name}"),
            Variable::Aux(name) => write!(f, "aux[{name}]"),
        }
    }
}
