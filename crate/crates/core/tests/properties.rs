use std::collections::HashMap;

use orbita_core::exterior::{label_resolver, parse_form, Coframe, DifferentialForm, Label};
use orbita_core::jetspace::total_derivative;
use orbita_core::symcore::{parse_expr, subst_with, Expr, Variable, ZeroTest};
use proptest::prelude::*;

const COORDS: [&str; 5] = ["x[1]", "x[2]", "u", "u[1]", "u[2]"];
const JETS: [&str; 6] = ["x[1]", "u", "u[1]", "u[2]", "u[1,1]", "u[1,2]"];

fn monomial(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    (-4i32..=4, prop::collection::vec(0u32..3, vars.len())).prop_map(move |(c, exps)| {
        let mut s = c.to_string();
        for (v, e) in vars.iter().zip(exps) {
            if e > 0 {
                s.push_str(&format!("*{v}^{e}"));
            }
        }
        s
    })
}

fn polynomial(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    prop::collection::vec(monomial(vars), 1..4).prop_map(|ms| parse_expr(&ms.join(" + ")).unwrap())
}

/// A coordinate plus at most one product of two coordinates, small enough to
/// substitute into each other.
fn affine(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let pick = || prop::sample::select(vars.to_vec());
    (pick(), prop::option::of((-3i32..=3, pick(), pick()))).prop_map(|(v, extra)| match extra {
        None => parse_expr(v).unwrap(),
        Some((c, a, b)) => parse_expr(&format!("{v} + {c}*{a}*{b}")).unwrap(),
    })
}

/// Sum of up to three products of at most two coordinates.
fn quadratic(vars: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let pick = || prop::sample::select(vars.to_vec());
    prop::collection::vec((-4i32..=4, pick(), prop::option::of(pick())), 1..4).prop_map(|ts| {
        let terms: Vec<String> = ts
            .into_iter()
            .map(|(c, a, b)| match b {
                Some(b) => format!("{c}*{a}*{b}"),
                None => format!("{c}*{a}"),
            })
            .collect();
        parse_expr(&terms.join(" + ")).unwrap()
    })
}

fn form(degree: usize) -> impl Strategy<Value = DifferentialForm> {
    let term = (quadratic(&COORDS), prop::sample::subsequence(COORDS.to_vec(), degree));
    prop::collection::vec(term, 1..4).prop_map(move |terms| {
        let mut f = DifferentialForm::zero(degree);
        for (c, labels) in terms {
            let mut t = DifferentialForm::scalar(c);
            for l in labels {
                t = t.wedge(&DifferentialForm::dvar(parse_expr(l).unwrap().as_var().unwrap().clone()));
            }
            f = f.add(&t);
        }
        f
    })
}

fn map_of(vars: &'static [&'static str]) -> impl Strategy<Value = HashMap<Variable, Expr>> {
    prop::collection::vec(affine(vars), vars.len()).prop_map(move |images| {
        vars.iter().map(|v| parse_expr(v).unwrap().as_var().unwrap().clone()).zip(images).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn d_squared_vanishes(f in (0usize..3).prop_flat_map(form)) {
        prop_assert!(f.d().unwrap().d().unwrap().is_empty());
    }

    #[test]
    fn pullback_composes(f in form(1), phi in map_of(&COORDS), psi in map_of(&COORDS)) {
        let zt = ZeroTest::default();
        let composed: HashMap<Variable, Expr> = psi
            .iter()
            .map(|(v, e)| (v.clone(), subst_with(e, &|w| phi.get(w).cloned()).unwrap()))
            .collect();
        let stepwise = f.pullback(&|v| psi.get(v).cloned()).unwrap().pullback(&|v| phi.get(v).cloned()).unwrap();
        let direct = f.pullback(&|v| composed.get(v).cloned()).unwrap();
        prop_assert!(stepwise.equal_with(&direct, &zt).unwrap());
    }

    #[test]
    fn decompose_round_trips(f in form(2), shear in prop::collection::vec(polynomial(&COORDS), 10)) {
        let zt = ZeroTest::default();
        let coords: Vec<Label> = COORDS.iter().map(|c| Label::D(parse_expr(c).unwrap().as_var().unwrap().clone())).collect();
        // unit upper-triangular, hence invertible
        let mut shear = shear.into_iter();
        let forms: Vec<DifferentialForm> = (0..coords.len())
            .map(|i| {
                let mut g = DifferentialForm::label(coords[i].clone());
                for c in &coords[i + 1..] {
                    g = g.add(&DifferentialForm::label(c.clone()).scale(&shear.next().unwrap()));
                }
                g
            })
            .collect();
        let labels: Vec<Label> = (0..coords.len()).map(|i| Label::named("eta", i)).collect();
        let frame = Coframe::new(labels, forms, coords, &zt).unwrap();
        let back = frame.recompose(&frame.decompose(&f));
        prop_assert!(back.equal_with(&f, &zt).unwrap());
    }

    #[test]
    fn total_derivatives_commute(f in polynomial(&JETS)) {
        let a = total_derivative(&total_derivative(&f, 1), 2);
        let b = total_derivative(&total_derivative(&f, 2), 1);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn parsed_forms_match_builders() {
    let f = parse_form("u[1]*d(x[1])^d(u)", &label_resolver(&[])).unwrap();
    let g = DifferentialForm::dvar(Variable::x(1)).wedge(&DifferentialForm::dvar(Variable::u(1, &[]))).scale(&parse_expr("u[1]").unwrap());
    assert_eq!(f, g);
}
