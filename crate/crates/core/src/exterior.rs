//! Differential forms with expression coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use thiserror::Error;

use crate::symcore::{
    apply_named, diff, invert, subst_with, variable_from, Exponent, Expr, MultiIndex, Parser, Semantics, Subscript,
    SymError, Variable, ZeroTest,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("exterior derivative of a named coframe label {0}")]
    NamedLabel(Label),
    #[error("coframe is singular")]
    SingularCoframe,
    #[error("expected a {expected}-form, got degree {got}")]
    Degree { expected: usize, got: usize },
}

/// Index attached to a named label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelIndex {
    Num(usize),
    Jet { comp: usize, index: MultiIndex },
}

/// A basis 1-form: either the differential of a coordinate or a named
/// coframe element such as `eta[2]` or `thetabar[a=1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    D(Variable),
    Named { family: Arc<str>, index: LabelIndex },
}

impl Label {
    pub fn named(family: &str, i: usize) -> Label {
        Label::Named { family: Arc::from(family), index: LabelIndex::Num(i) }
    }

    pub fn named_jet(family: &str, comp: usize, index: MultiIndex) -> Label {
        Label::Named { family: Arc::from(family), index: LabelIndex::Jet { comp, index } }
    }

    pub fn is_coordinate(&self) -> bool {
        matches!(self, Label::D(_))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::D(v) => write!(f, "d({v})"),
            Label::Named { family, index: LabelIndex::Num(i) } => write!(f, "{family}[{i}]"),
            Label::Named { family, index: LabelIndex::Jet { comp, index } } => {
                if index.is_empty() {
                    write!(f, "{family}[a={comp}]")
                } else {
                    write!(f, "{family}[a={comp}; I={index}]")
                }
            }
        }
    }
}

/// Homogeneous form `Σ c_I l^{i1} ∧ … ∧ l^{ip}` with strictly increasing
/// label tuples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DifferentialForm {
    degree: usize,
    terms: BTreeMap<Vec<Label>, Expr>,
}

/// Sort a label tuple, returning the permutation sign, or `None` on a repeat.
fn sort_labels(mut ls: Vec<Label>) -> Option<(Vec<Label>, bool)> {
    let mut odd = false;
    for i in 1..ls.len() {
        let mut j = i;
        while j > 0 && ls[j - 1] > ls[j] {
            ls.swap(j - 1, j);
            odd = !odd;
            j -= 1;
        }
    }
    if ls.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((ls, odd))
}

impl DifferentialForm {
    pub fn zero(degree: usize) -> Self {
        DifferentialForm { degree, terms: BTreeMap::new() }
    }

    pub fn scalar(e: Expr) -> Self {
        let mut f = Self::zero(0);
        f.push(Vec::new(), e);
        f
    }

    pub fn label(l: Label) -> Self {
        let mut f = Self::zero(1);
        f.push(vec![l], Expr::one());
        f
    }

    pub fn dvar(v: Variable) -> Self {
        Self::label(Label::D(v))
    }

    /// `c * l1 ∧ … ∧ lp` for labels in any order.
    pub fn monomial(c: Expr, labels: Vec<Label>) -> Self {
        let mut f = Self::zero(labels.len());
        if let Some((ls, odd)) = sort_labels(labels) {
            f.push(ls, if odd { -c } else { c });
        }
        f
    }

    fn push(&mut self, key: Vec<Label>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(old) => {
                let s = &*old + &c;
                if s.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Label>, &Expr)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, labels: &[Label]) -> Expr {
        self.terms.get(labels).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient of a single label in a 1-form.
    pub fn coeff_of(&self, l: &Label) -> Expr {
        self.coeff(std::slice::from_ref(l))
    }

    pub fn as_scalar(&self) -> Option<Expr> {
        (self.degree == 0).then(|| self.coeff(&[]))
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        self.terms.keys().flatten().cloned().collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.push(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs_infallible(|c| -c)
    }

    pub fn scale(&self, e: &Expr) -> Self {
        self.map_coeffs_infallible(|c| c * e)
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        self.map_coeffs_infallible(|c| c.scale(q))
    }

    pub fn map_coeffs_infallible(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            out.push(k.clone(), f(c));
        }
        out
    }

    pub fn map_coeffs<E>(&self, f: impl Fn(&Expr) -> Result<Expr, E>) -> Result<Self, E> {
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            out.push(k.clone(), f(c)?);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.degree + other.degree);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut ls = ka.clone();
                ls.extend(kb.iter().cloned());
                if let Some((ls, odd)) = sort_labels(ls) {
                    let c = ca * cb;
                    out.push(ls, if odd { -c } else { c });
                }
            }
        }
        out
    }

    /// Exterior derivative; all labels must be coordinate differentials.
    pub fn d(&self) -> Result<Self, FormError> {
        let mut out = Self::zero(self.degree + 1);
        for (k, c) in &self.terms {
            if let Some(l) = k.iter().find(|l| !l.is_coordinate()) {
                return Err(FormError::NamedLabel(l.clone()));
            }
            for v in c.variables().iter() {
                let dc = diff(c, v);
                if dc.is_zero() {
                    continue;
                }
                let mut ls = vec![Label::D(v.clone())];
                ls.extend(k.iter().cloned());
                if let Some((ls, odd)) = sort_labels(ls) {
                    out.push(ls, if odd { -dc } else { dc });
                }
            }
        }
        Ok(out)
    }

    /// Replace labels by 1-forms; labels mapped to `None` stay.
    pub fn substitute_labels(&self, map: &dyn Fn(&Label) -> Option<DifferentialForm>) -> Self {
        let mut cache: BTreeMap<Label, Option<DifferentialForm>> = BTreeMap::new();
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            let mut acc = Self::scalar(c.clone());
            for l in k {
                let img = cache.entry(l.clone()).or_insert_with(|| map(l)).clone();
                let img = img.unwrap_or_else(|| Self::label(l.clone()));
                acc = acc.wedge(&img);
            }
            out = out.add(&acc);
        }
        out
    }

    /// Pull back along a coordinate map given as a lookup of images.
    pub fn pullback(&self, phi: &dyn Fn(&Variable) -> Option<Expr>) -> Result<Self, FormError> {
        let mut cache: BTreeMap<Variable, Option<DifferentialForm>> = BTreeMap::new();
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            let mut acc = Self::scalar(subst_with(c, phi)?);
            for l in k {
                let img = match l {
                    Label::D(v) => {
                        if !cache.contains_key(v) {
                            let d = match phi(v) {
                                Some(e) => Some(Self::scalar(e).d()?),
                                None => None,
                            };
                            cache.insert(v.clone(), d);
                        }
                        cache[v].clone().unwrap_or_else(|| Self::label(l.clone()))
                    }
                    _ => Self::label(l.clone()),
                };
                acc = acc.wedge(&img);
            }
            out = out.add(&acc);
        }
        Ok(out)
    }

    /// Substitute into coefficients only.
    pub fn subst_coeffs(&self, lookup: &dyn Fn(&Variable) -> Option<Expr>) -> Result<Self, SymError> {
        self.map_coeffs(|c| subst_with(c, lookup))
    }

    /// Drop every term containing one of `labels`.
    pub fn drop_labels(&self, labels: &BTreeSet<Label>) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            if !k.iter().any(|l| labels.contains(l)) {
                out.push(k.clone(), c.clone());
            }
        }
        out
    }

    /// Keep only terms built entirely from `labels`.
    pub fn keep_only(&self, labels: &BTreeSet<Label>) -> Self {
        let mut out = Self::zero(self.degree);
        for (k, c) in &self.terms {
            if k.iter().all(|l| labels.contains(l)) {
                out.push(k.clone(), c.clone());
            }
        }
        out
    }

    pub fn is_zero_with(&self, zt: &ZeroTest) -> Result<bool, SymError> {
        for c in self.terms.values() {
            if !zt.is_zero(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn equal_with(&self, other: &Self, zt: &ZeroTest) -> Result<bool, SymError> {
        self.sub(other).is_zero_with(zt)
    }

    /// Replace every `d(u^α_J)` by `u^α_{J+i} d(x^i)` and every `d(v^a_I)`
    /// by `v^a_{I+i} d(y^i)`, `k` being the number of independent variables.
    pub fn horizontal_class(&self, k: usize) -> Self {
        self.substitute_labels(&|l| horizontal_image(l, k))
    }
}

fn horizontal_image(l: &Label, k: usize) -> Option<DifferentialForm> {
    let Label::D(v) = l else { return None };
    let (make_jet, make_base): (fn(usize, MultiIndex) -> Variable, fn(usize) -> Variable) = match v {
        Variable::Jet { .. } => (|comp, index| Variable::Jet { comp, index }, Variable::Indep),
        Variable::InvJet { .. } => (|comp, index| Variable::InvJet { comp, index }, Variable::InvBase),
        _ => return None,
    };
    let (Variable::Jet { comp, index } | Variable::InvJet { comp, index }) = v else { unreachable!() };
    let mut out = DifferentialForm::zero(1);
    for i in 1..=k {
        out.push(vec![Label::D(make_base(i))], Expr::var(make_jet(*comp, index.with(i))));
    }
    Some(out)
}

impl fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            let negative = c.len() == 1 && c.terms()[0].coeff < BigRational::from_integer(0.into());
            let shown = if negative { -c } else { c.clone() };
            match (n, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let labels: Vec<String> = k.iter().map(|l| l.to_string()).collect();
            if k.is_empty() {
                write!(f, "({shown})")?;
            } else if shown == Expr::one() {
                write!(f, "{}", labels.join("^"))?;
            } else {
                write!(f, "({shown})*{}", labels.join("^"))?;
            }
        }
        Ok(())
    }
}

/// Change of basis between coordinate differentials and named 1-forms.
#[derive(Clone, Debug)]
pub struct Coframe {
    labels: Vec<Label>,
    forms: Vec<DifferentialForm>,
    coords: Vec<Label>,
    /// `coords[j] = Σ_i inverse[j][i] labels[i]`
    inverse: Vec<Vec<Expr>>,
}

impl Coframe {
    /// `forms[i]` becomes `labels[i]`; the forms must span `coords`.
    pub fn new(labels: Vec<Label>, forms: Vec<DifferentialForm>, coords: Vec<Label>, zt: &ZeroTest) -> Result<Self, FormError> {
        assert_eq!(labels.len(), forms.len());
        if labels.len() != coords.len() {
            return Err(FormError::SingularCoframe);
        }
        let a: Vec<Vec<Expr>> = forms.iter().map(|f| coords.iter().map(|c| f.coeff_of(c)).collect()).collect();
        for f in &forms {
            if f.degree() != 1 {
                return Err(FormError::Degree { expected: 1, got: f.degree() });
            }
            if f.labels().iter().any(|l| !coords.contains(l)) {
                return Err(FormError::SingularCoframe);
            }
        }
        // a is forms x coords; coords = a^{-1} forms
        let inv = match invert(&a, zt) {
            Ok(m) => m,
            Err(SymError::RankDeficient { .. }) => return Err(FormError::SingularCoframe),
            Err(e) => return Err(e.into()),
        };
        Ok(Coframe { labels, forms, coords, inverse: inv })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn forms(&self) -> &[DifferentialForm] {
        &self.forms
    }

    /// Rewrite `a` over the coframe labels.
    pub fn decompose(&self, a: &DifferentialForm) -> DifferentialForm {
        a.substitute_labels(&|l| {
            let j = self.coords.iter().position(|c| c == l)?;
            let mut img = DifferentialForm::zero(1);
            for (i, lab) in self.labels.iter().enumerate() {
                img.push(vec![lab.clone()], self.inverse[j][i].clone());
            }
            Some(img)
        })
    }

    /// Rewrite coframe labels back over coordinate differentials.
    pub fn recompose(&self, a: &DifferentialForm) -> DifferentialForm {
        a.substitute_labels(&|l| self.labels.iter().position(|x| x == l).map(|i| self.forms[i].clone()))
    }
}

/// Parsed value in the form grammar.
#[derive(Clone, Debug)]
pub enum FormValue {
    Scalar(Expr),
    Form(DifferentialForm),
}

impl FormValue {
    fn into_form(self) -> DifferentialForm {
        match self {
            FormValue::Scalar(e) => DifferentialForm::scalar(e),
            FormValue::Form(f) => f,
        }
    }
}

/// Resolves identifiers that denote forms (e.g. `zeta[1]`), returning
/// `None` for ordinary coordinates.
pub type LabelResolver<'a> = dyn Fn(&str, Option<&Subscript>) -> Option<Result<DifferentialForm, String>> + 'a;

struct FormSemantics<'a> {
    resolve: &'a LabelResolver<'a>,
}

impl Semantics for FormSemantics<'_> {
    type Value = FormValue;

    fn number(&mut self, q: BigRational) -> Result<FormValue, String> {
        Ok(FormValue::Scalar(Expr::rational(q)))
    }

    fn ident(&mut self, name: &str, sub: Option<&Subscript>) -> Result<FormValue, String> {
        if let Some(r) = (self.resolve)(name, sub) {
            return r.map(FormValue::Form);
        }
        variable_from(name, sub).map(|v| FormValue::Scalar(Expr::var(v)))
    }

    fn call(&mut self, name: &str, arg: FormValue) -> Result<FormValue, String> {
        match (name, arg) {
            ("d", FormValue::Scalar(e)) => {
                DifferentialForm::scalar(e).d().map(FormValue::Form).map_err(|e| e.to_string())
            }
            ("d", FormValue::Form(f)) => f.d().map(FormValue::Form).map_err(|e| e.to_string()),
            (_, FormValue::Scalar(e)) => apply_named(name, &e).map(FormValue::Scalar),
            _ => Err(format!("'{name}' cannot be applied to a form")),
        }
    }

    fn add(&mut self, a: FormValue, b: FormValue) -> Result<FormValue, String> {
        match (a, b) {
            (FormValue::Scalar(x), FormValue::Scalar(y)) => Ok(FormValue::Scalar(x + y)),
            (a, b) => {
                let (a, b) = (a.into_form(), b.into_form());
                if a.degree() != b.degree() {
                    return Err("cannot add forms of different degree".into());
                }
                Ok(FormValue::Form(a.add(&b)))
            }
        }
    }

    fn neg(&mut self, a: FormValue) -> Result<FormValue, String> {
        Ok(match a {
            FormValue::Scalar(x) => FormValue::Scalar(-x),
            FormValue::Form(f) => FormValue::Form(f.neg()),
        })
    }

    fn mul(&mut self, a: FormValue, b: FormValue) -> Result<FormValue, String> {
        match (a, b) {
            (FormValue::Scalar(x), FormValue::Scalar(y)) => Ok(FormValue::Scalar(x * y)),
            (FormValue::Scalar(x), FormValue::Form(f)) | (FormValue::Form(f), FormValue::Scalar(x)) => {
                Ok(FormValue::Form(f.scale(&x)))
            }
            _ => Err("use '^' for the wedge product of forms".into()),
        }
    }

    fn div(&mut self, a: FormValue, b: FormValue) -> Result<FormValue, String> {
        let FormValue::Scalar(den) = b else { return Err("cannot divide by a form".into()) };
        let inv = den.recip().map_err(|e| e.to_string())?;
        match a {
            FormValue::Scalar(x) => x.div(&den).map(FormValue::Scalar).map_err(|e| e.to_string()),
            FormValue::Form(f) => Ok(FormValue::Form(f.scale(&inv))),
        }
    }

    fn pow(&mut self, a: FormValue, e: Exponent) -> Result<FormValue, String> {
        match a {
            FormValue::Scalar(x) => x.pow(e).map(FormValue::Scalar).map_err(|e| e.to_string()),
            FormValue::Form(_) => Err("forms cannot be raised to powers".into()),
        }
    }

    fn wedge(&mut self, a: FormValue, b: FormValue) -> Result<FormValue, String> {
        match (a, b) {
            (FormValue::Form(x), FormValue::Form(y)) => Ok(FormValue::Form(x.wedge(&y))),
            _ => Err("exponent must be a rational constant".into()),
        }
    }
}

/// Parse a form; `resolve` supplies named forms.
pub fn parse_form(src: &str, resolve: &LabelResolver<'_>) -> Result<DifferentialForm, SymError> {
    let mut sem = FormSemantics { resolve };
    Ok(Parser::new(src, &mut sem)?.parse_all()?.into_form())
}

/// Resolver that maps `name[...]` to bare named labels for the given families.
pub fn label_resolver(families: &[&str]) -> impl Fn(&str, Option<&Subscript>) -> Option<Result<DifferentialForm, String>> {
    let families: Vec<String> = families.iter().map(|s| s.to_string()).collect();
    move |name, sub| {
        if !families.iter().any(|f| f == name) {
            return None;
        }
        Some(match sub {
            Some(Subscript { comp: Some(c), index, name: None }) => {
                Ok(DifferentialForm::label(Label::named_jet(name, *c, MultiIndex::new(index.clone()))))
            }
            Some(Subscript { comp: None, index, name: None }) if index.len() == 1 => {
                Ok(DifferentialForm::label(Label::named(name, index[0])))
            }
            _ => Err(format!("malformed label '{name}'")),
        })
    }
}
