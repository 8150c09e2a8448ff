//! Numeric reconstruction of solutions upstairs from solutions of the reduced
//! system, by integrating the jet equations along coordinate directions.

use std::collections::HashMap;

use thiserror::Error;

use crate::liegroup::{GroupAction, GroupError, MovingFrame};
use crate::reduction::{ReducedChart, ReductionError};
use crate::sampling::eval_at;
use crate::scalar::{Matrix, Scalar};
use crate::symcore::{diff, Expr, MultiIndex, SymError, Variable, ZeroTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("integration step failed at x = {0:?}: {1}")]
    StepFailure(Vec<f64>, String),
    #[error("solution residual {0:e} exceeds tolerance")]
    ToleranceExceeded(f64),
    #[error("reduced solution does not determine the top-order jets: {0}")]
    Underdetermined(String),
    #[error("no group element relates the reconstructions; residual {0:e}")]
    NoMatch(f64),
    #[error("bad table: {0}")]
    Table(String),
}

type Result<T> = std::result::Result<T, ReconstructError>;

/// One classical RK4 step for `y' = f(y)`.
pub fn rk4_step<S: Scalar, E>(f: &mut impl FnMut(&[S]) -> std::result::Result<Vec<S>, E>, y: &[S], h: &S) -> std::result::Result<Vec<S>, E> {
    let two = S::from_i64(2);
    let half = h.clone() / two.clone();
    let shift = |base: &[S], k: &[S], by: &S| -> Vec<S> { base.iter().zip(k).map(|(a, b)| a.clone() + by.clone() * b.clone()).collect() };
    let k1 = f(y)?;
    let k2 = f(&shift(y, &k1, &half))?;
    let k3 = f(&shift(y, &k2, &half))?;
    let k4 = f(&shift(y, &k3, h))?;
    let sixth = h.clone() / S::from_i64(6);
    Ok((0..y.len())
        .map(|i| {
            let inc = k1[i].clone() + two.clone() * k2[i].clone() + two.clone() * k3[i].clone() + k4[i].clone();
            y[i].clone() + sixth.clone() * inc
        })
        .collect())
}

/// A solution of the reduced system.
#[derive(Clone, Debug)]
pub enum ReducedSolution {
    /// Implicit equations in reduced coordinates.
    Equations(Vec<Expr>),
    /// A curve sampled over `y` (first column), one further column per
    /// reduced coordinate, linearly interpolated.
    Table { columns: Vec<Variable>, rows: Vec<Vec<f64>> },
}

impl ReducedSolution {
    /// Reads a table whose header names reduced coordinates, `y` first.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| ReconstructError::Table(e.to_string()))?.clone();
        let columns: Vec<Variable> = header
            .iter()
            .map(|h| match crate::symcore::parse_expr(h).ok().and_then(|e| e.as_var().cloned()) {
                Some(v) if v.is_reduced() => Ok(v),
                _ => Err(ReconstructError::Table(format!("column {h} is not a reduced coordinate"))),
            })
            .collect::<Result<_>>()?;
        if columns.first() != Some(&Variable::InvBase(1)) {
            return Err(ReconstructError::Table("first column must be y".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| ReconstructError::Table(e.to_string()))?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| ReconstructError::Table(format!("{s}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(ReconstructError::Table(format!("row has {} fields, header {}", row.len(), columns.len())));
            }
            rows.push(row);
        }
        if rows.len() < 2 || rows.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(ReconstructError::Table("need at least two rows with increasing y".into()));
        }
        Ok(ReducedSolution::Table { columns, rows })
    }
}

fn interpolate(rows: &[Vec<f64>], col: usize, y: f64) -> (f64, f64) {
    let i = match rows.iter().position(|r| r[0] > y) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => rows.len() - 2,
    };
    let (a, b) = (&rows[i], &rows[i + 1]);
    let slope = (b[col] - a[col]) / (b[0] - a[0]);
    (a[col] + slope * (y - a[0]), slope)
}

enum Constraint {
    Exact { value: Expr, grads: Vec<Expr> },
    Sampled { target: Expr, target_grads: Vec<Expr>, base: Expr, base_grads: Vec<Expr>, col: usize },
}

/// Sampled submanifold upstairs: `coords` are `x` and every jet up to the top
/// order; `shape` gives samples per direction.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub coords: Vec<Variable>,
    pub samples: Vec<Vec<f64>>,
    pub shape: Vec<usize>,
    pub step: f64,
}

impl Reconstruction {
    pub fn column(&self, v: &Variable) -> Option<usize> {
        self.coords.iter().position(|c| c == v)
    }

    pub fn point(&self, i: usize) -> HashMap<Variable, f64> {
        self.coords.iter().cloned().zip(self.samples[i].iter().copied()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.coords.iter().map(|c| c.to_string())).expect("in-memory write");
        for s in &self.samples {
            w.write_record(s.iter().map(|x| format!("{x:.12}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory write")).expect("ascii")
    }
}

/// Integrates the jet equations of the lifted reduced solution.
pub struct Reconstructor<'a> {
    rc: &'a ReducedChart,
    solution: &'a ReducedSolution,
    constraints: Vec<Constraint>,
    top: Vec<Variable>,
    lower: Vec<Variable>,
    top_order: usize,
}

impl<'a> Reconstructor<'a> {
    pub fn new(rc: &'a ReducedChart, solution: &'a ReducedSolution) -> Result<Self> {
        let mut raw: Vec<(Expr, Option<usize>)> = Vec::new();
        match solution {
            ReducedSolution::Equations(eqs) => {
                for e in eqs {
                    raw.push((rc.lift_expr(e)?, None));
                }
            }
            ReducedSolution::Table { columns, .. } => {
                for (c, v) in columns.iter().enumerate().skip(1) {
                    raw.push((rc.lift(v)?, Some(c)));
                }
            }
        }
        let top_order = raw.iter().flat_map(|(e, _)| e.variables().iter().map(|v| v.jet_order()).collect::<Vec<_>>()).max().unwrap_or(0);
        let (k, q) = (rc.k(), rc.q());
        let top: Vec<Variable> = (1..=q)
            .flat_map(|comp| MultiIndex::of_order(k, top_order).into_iter().map(move |index| Variable::Jet { comp, index }))
            .collect();
        if top.len() != raw.len() {
            return Err(ReconstructError::Underdetermined(format!("{} equations for {} jets of order {top_order}", raw.len(), top.len())));
        }
        let mut lower: Vec<Variable> = (1..=k).map(Variable::Indep).collect();
        for n in 0..top_order {
            for comp in 1..=q {
                for index in MultiIndex::of_order(k, n) {
                    lower.push(Variable::Jet { comp, index });
                }
            }
        }
        let grads = |e: &Expr| top.iter().map(|t| diff(e, t)).collect::<Vec<_>>();
        let base = rc.lift(&Variable::InvBase(1))?;
        let constraints = raw
            .into_iter()
            .map(|(e, col)| match col {
                None => Constraint::Exact { grads: grads(&e), value: e },
                Some(col) => Constraint::Sampled {
                    target_grads: grads(&e),
                    target: e,
                    base_grads: grads(&base),
                    base: base.clone(),
                    col,
                },
            })
            .collect();
        Ok(Reconstructor { rc, solution, constraints, top, lower, top_order })
    }

    pub fn top_order(&self) -> usize {
        self.top_order
    }

    fn residual(&self, pt: &HashMap<Variable, f64>) -> std::result::Result<(Vec<f64>, Matrix<f64>), SymError> {
        let n = self.top.len();
        let mut f = Vec::with_capacity(n);
        let mut jac: Matrix<f64> = Matrix::zeros(n, n);
        for (r, c) in self.constraints.iter().enumerate() {
            match c {
                Constraint::Exact { value, grads } => {
                    f.push(eval_at(value, pt)?);
                    for (j, g) in grads.iter().enumerate() {
                        jac[(r, j)] = eval_at(g, pt)?;
                    }
                }
                Constraint::Sampled { target, target_grads, base, base_grads, col } => {
                    let ReducedSolution::Table { rows, .. } = self.solution else { unreachable!() };
                    let y = eval_at(base, pt)?;
                    let (val, slope) = interpolate(rows, *col, y);
                    f.push(eval_at(target, pt)? - val);
                    for j in 0..n {
                        jac[(r, j)] = eval_at(&target_grads[j], pt)? - slope * eval_at(&base_grads[j], pt)?;
                    }
                }
            }
        }
        Ok((f, jac))
    }

    /// Top-order jets at `pt` by Newton iteration from `guess`.
    fn solve_top(&self, pt: &mut HashMap<Variable, f64>, guess: &[f64]) -> std::result::Result<Vec<f64>, String> {
        let mut cur = guess.to_vec();
        for _ in 0..60 {
            for (t, v) in self.top.iter().zip(&cur) {
                pt.insert(t.clone(), *v);
            }
            let (f, jac) = self.residual(pt).map_err(|e| e.to_string())?;
            let size = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if size < 1e-13 {
                return Ok(cur);
            }
            let delta = jac.solve(&f).ok_or("singular Jacobian of the reduced solution")?;
            for (c, d) in cur.iter_mut().zip(&delta) {
                *c -= d;
            }
            if delta.iter().all(|d| d.abs() < 1e-15 * (1.0 + size)) {
                return Ok(cur);
            }
        }
        let (f, _) = self.residual(pt).map_err(|e| e.to_string())?;
        if f.iter().all(|x| x.abs() < 1e-10) {
            Ok(cur)
        } else {
            Err("Newton iteration did not converge".into())
        }
    }

    fn state_point(&self, state: &[f64]) -> HashMap<Variable, f64> {
        self.lower.iter().cloned().zip(state.iter().copied()).collect()
    }

    /// Full sample (lower jets plus solved top jets) at a state.
    fn complete(&self, state: &[f64], guess: &mut Vec<f64>) -> Result<Vec<f64>> {
        let mut pt = self.state_point(state);
        let top = self.solve_top(&mut pt, guess).map_err(|e| ReconstructError::StepFailure(state[..self.rc.k()].to_vec(), e))?;
        *guess = top.clone();
        let mut out = state.to_vec();
        out.extend(top);
        Ok(out)
    }

    fn integrate(&self, start: &[f64], dir: usize, h: f64, steps: usize, guess: &mut Vec<f64>) -> Result<Vec<Vec<f64>>> {
        let index: HashMap<&Variable, usize> = self.lower.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let top_index: HashMap<&Variable, usize> = self.top.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut rhs = |s: &[f64]| -> Result<Vec<f64>> {
            let full = self.complete(s, guess)?;
            let n = self.lower.len();
            Ok(self
                .lower
                .iter()
                .map(|v| match v {
                    Variable::Indep(m) => f64::from(u8::from(*m == dir)),
                    Variable::Jet { comp, index: idx } => {
                        let next = Variable::Jet { comp: *comp, index: idx.with(dir) };
                        match index.get(&next) {
                            Some(&i) => s[i],
                            None => full[n + top_index[&next]],
                        }
                    }
                    _ => 0.0,
                })
                .collect())
        };
        let mut out = Vec::with_capacity(steps + 1);
        let mut cur = start.to_vec();
        out.push(cur.clone());
        for _ in 0..steps {
            cur = rk4_step(&mut rhs, &cur, &h)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Integrates from `initial` (values of `x` and jets below the top order;
    /// missing entries are zero) with `counts[i]` steps of size `step` along
    /// the directions in `order`, the first one being the spine.
    pub fn run(&self, initial: &HashMap<Variable, f64>, step: f64, counts: &[usize], order: &[usize]) -> Result<Reconstruction> {
        let k = self.rc.k();
        if counts.len() != k || order.len() != k {
            return Err(ReconstructError::Underdetermined(format!("need step counts for {k} directions")));
        }
        let start: Vec<f64> = self.lower.iter().map(|v| initial.get(v).copied().unwrap_or(0.0)).collect();
        let mut guess = self.top.iter().map(|t| initial.get(t).copied().unwrap_or(0.0)).collect::<Vec<_>>();
        let mut layer = vec![start];
        let mut shape = Vec::new();
        for &dir in order {
            let n = counts[dir - 1];
            let mut next = Vec::new();
            for s in &layer {
                next.extend(self.integrate(s, dir, step, n, &mut guess)?);
            }
            layer = next;
            shape.push(n + 1);
        }
        let mut samples = Vec::with_capacity(layer.len());
        for s in &layer {
            samples.push(self.complete(s, &mut guess)?);
        }
        let mut coords = self.lower.clone();
        coords.extend(self.top.iter().cloned());
        Ok(Reconstruction { coords, samples, shape, step })
    }

    /// Largest residual of the reduced solution over the samples.
    pub fn max_residual(&self, rec: &Reconstruction) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..rec.samples.len() {
            let (f, _) = self.residual(&rec.point(i))?;
            worst = f.iter().fold(worst, |m, x| m.max(x.abs()));
        }
        Ok(worst)
    }
}

/// Convenience wrapper integrating along `x^1, …, x^k` in order.
pub fn reconstruct(rc: &ReducedChart, solution: &ReducedSolution, initial: &HashMap<Variable, f64>, step: f64, counts: &[usize]) -> Result<Reconstruction> {
    let r = Reconstructor::new(rc, solution)?;
    let order: Vec<usize> = (1..=rc.k()).collect();
    let rec = r.run(initial, step, counts, &order)?;
    let res = r.max_residual(&rec)?;
    if res > 1e-8 {
        return Err(ReconstructError::ToleranceExceeded(res));
    }
    Ok(rec)
}

fn hermite(t: f64, h: f64, p0: f64, m0: f64, p1: f64, m1: f64) -> f64 {
    let s = t / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * h * m1
}

/// `u` of a reconstruction at base point `x`, interpolated with cubic Hermite
/// polynomials; `None` outside the sampled range.
fn surface_value(rec: &Reconstruction, comp: usize, x: &[f64]) -> Option<f64> {
    let k = x.len();
    let col = |idx: &[usize]| rec.column(&Variable::Jet { comp, index: MultiIndex::new(idx.to_vec()) });
    let xs: Vec<usize> = (1..=k).map(|i| rec.column(&Variable::Indep(i)).expect("x column")).collect();
    let h = rec.step;
    let first = &rec.samples[0];
    let cell = |d: usize, n: usize| -> Option<(usize, f64)> {
        let rel = (x[d] - first[xs[d]]) / h;
        if rel < 0.0 || rel > (n - 1) as f64 {
            return None;
        }
        let i = (rel.floor() as usize).min(n - 2);
        Some((i, x[d] - first[xs[d]] - i as f64 * h))
    };
    let u = col(&[])?;
    match k {
        1 => {
            let du = col(&[1])?;
            let (i, t) = cell(0, rec.samples.len())?;
            let (a, b) = (&rec.samples[i], &rec.samples[i + 1]);
            Some(hermite(t, h, a[u], a[du], b[u], b[du]))
        }
        2 => {
            let (d1, d2, d12) = (col(&[1])?, col(&[2])?, col(&[1, 2])?);
            let (n1, n2) = (rec.shape[0], rec.shape[1]);
            let (i, t1) = cell(0, n1)?;
            let (j, t2) = cell(1, n2)?;
            let at = |a: usize, b: usize| &rec.samples[a * n2 + b];
            let along = |b: usize, val: usize, der: usize| hermite(t1, h, at(i, b)[val], at(i, b)[der], at(i + 1, b)[val], at(i + 1, b)[der]);
            let (p0, p1) = (along(j, u, d1), along(j + 1, u, d1));
            let (m0, m1) = (along(j, d2, d12), along(j + 1, d2, d12));
            Some(hermite(t2, h, p0, m0, p1, m1))
        }
        _ => None,
    }
}

/// Finds `g` with `g·a = b`. Samples whose frame-normalized jets agree lie on
/// the same orbit, which fixes `g = ρ(b_j)^{-1} ρ(a_i)`; the element is then
/// certified on every sample of `a` that lands inside `b`.
pub fn group_relate(action: &GroupAction, frame: &MovingFrame, a: &Reconstruction, b: &Reconstruction, zt: &ZeroTest) -> Result<(Vec<f64>, f64)> {
    let group = action.group();
    let jets: Vec<Variable> = a.coords.iter().filter(|c| b.column(c).is_some()).cloned().collect();
    let rho = |pt: &HashMap<Variable, f64>| -> Result<Vec<f64>> { frame.components().iter().map(|c| Ok(eval_at(c, pt)?)).collect() };
    let normalized = |rec: &Reconstruction, i: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let pt = rec.point(i);
        let r = rho(&pt)?;
        let img = action.act_f64(&r, &pt, &jets, zt)?;
        Ok((r, jets.iter().map(|v| img[v]).collect()))
    };
    let stride = |n: usize| (n / 24).max(1);
    let a_norm: Vec<(Vec<f64>, Vec<f64>)> = (0..a.samples.len()).step_by(stride(a.samples.len())).map(|i| normalized(a, i)).collect::<Result<_>>()?;
    let b_norm: Vec<(Vec<f64>, Vec<f64>)> = (0..b.samples.len()).map(|i| normalized(b, i)).collect::<Result<_>>()?;
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, (_, na)) in a_norm.iter().enumerate() {
        for (j, (_, nb)) in b_norm.iter().enumerate() {
            let d = na.iter().zip(nb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            if best.map_or(true, |(bd, _, _)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    let Some((_, i, j)) = best else { return Err(ReconstructError::NoMatch(f64::INFINITY)) };
    let g = group.multiply_f64(&group.invert_f64(&b_norm[j].0)?, &a_norm[i].0)?;
    let k = action.k();
    let base: Vec<Variable> = (1..=k).map(Variable::Indep).chain((1..=action.q()).map(|c| Variable::u(c, &[]))).collect();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for i in 0..a.samples.len() {
        let moved = action.act_f64(&g, &a.point(i), &base, zt)?;
        let x: Vec<f64> = (1..=k).map(|m| moved[&Variable::Indep(m)]).collect();
        for c in 1..=action.q() {
            if let Some(u) = surface_value(b, c, &x) {
                worst = worst.max((u - moved[&Variable::u(c, &[])]).abs());
                checked += 1;
            }
        }
    }
    if checked < 2 || worst > 1e-6 {
        return Err(ReconstructError::NoMatch(if checked == 0 { f64::INFINITY } else { worst }));
    }
    Ok((g, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::tests::{se2_action, se2_frame};
    use crate::reduction::tests::{r3_action, r3_chart, r3_frame, se2_chart};
    use crate::symcore::parse_expr;
    use num_rational::BigRational;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn rk4_is_generic() {
        let mut f = |y: &[f64]| Ok::<_, ()>(vec![y[0]]);
        let mut y = vec![1.0];
        for _ in 0..1000 {
            y = rk4_step(&mut f, &y, &1e-3).unwrap();
        }
        assert!((y[0] - 1f64.exp()).abs() < 1e-10);
        let mut g = |y: &[BigRational]| Ok::<_, ()>(vec![BigRational::from_integer(2.into()) * y[1].clone(), BigRational::from_integer(0.into())]);
        let one = BigRational::from_integer(1.into());
        let y = rk4_step(&mut g, &[one.clone(), one.clone()], &one).unwrap();
        assert_eq!(y[0], BigRational::from_integer(3.into()));
    }

    #[test]
    fn unit_circle() {
        let rc = se2_chart();
        let sol = ReducedSolution::Equations(vec![p("y - 1")]);
        let rec = reconstruct(&rc, &sol, &HashMap::new(), 1e-3, &[900]).unwrap();
        let (x, u) = (rec.column(&Variable::x(1)).unwrap(), rec.column(&Variable::u(1, &[])).unwrap());
        let dev = rec.samples.iter().map(|s| (s[x].powi(2) + (s[u] - 1.0).powi(2) - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-6, "{dev}");
    }

    #[test]
    fn circles_are_congruent() {
        let zt = ZeroTest::default();
        let rc = se2_chart();
        let sol = ReducedSolution::Equations(vec![p("y - 1")]);
        let a = reconstruct(&rc, &sol, &HashMap::new(), 1e-3, &[500]).unwrap();
        let start: HashMap<Variable, f64> = [(Variable::x(1), 0.3), (Variable::u(1, &[]), -0.2), (Variable::u(1, &[1]), 0.25)].into();
        let b = reconstruct(&rc, &sol, &start, 1e-3, &[500]).unwrap();
        let (_, res) = group_relate(&se2_action(), &se2_frame(), &a, &b, &zt).unwrap();
        assert!(res < 1e-6);
        let other = ReducedSolution::Equations(vec![p("y - 2")]);
        let c = reconstruct(&rc, &other, &start, 1e-3, &[200]).unwrap();
        assert!(matches!(group_relate(&se2_action(), &se2_frame(), &a, &c, &zt), Err(ReconstructError::NoMatch(_))));
        let (g, _) = group_relate(&se2_action(), &se2_frame(), &a, &a, &zt).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn paraboloid() {
        let zt = ZeroTest::default();
        let rc = r3_chart();
        let sol = ReducedSolution::Equations(vec![p("v - 1"), p("v[a=2] - 1"), p("v[a=3]")]);
        let start: HashMap<Variable, f64> = [(Variable::u(1, &[1]), 0.2)].into();
        let rec = reconstruct(&rc, &sol, &start, 1e-2, &[20, 20]).unwrap();
        let u = rec.column(&Variable::u(1, &[])).unwrap();
        let (n1, n2) = (rec.shape[0], rec.shape[1]);
        let h = rec.step;
        let at = |i: usize, j: usize| rec.samples[i * n2 + j][u];
        let mut worst: f64 = 0.0;
        for i in 1..n1 - 1 {
            for j in 1..n2 - 1 {
                let uxx = (at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)) / (h * h);
                let uyy = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (h * h);
                let uxy = (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * h * h);
                worst = worst.max((uxx - 1.0).abs()).max((uyy - 1.0).abs()).max(uxy.abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");

        let r = Reconstructor::new(&rc, &sol).unwrap();
        let swapped = r.run(&start, 1e-2, &[20, 20], &[2, 1]).unwrap();
        let last = |rec: &Reconstruction| rec.samples.last().unwrap()[u];
        assert!((last(&rec) - last(&swapped)).abs() < 1e-9);

        let shifted: HashMap<Variable, f64> = [(Variable::x(1), 0.1), (Variable::u(1, &[]), 0.4), (Variable::u(1, &[1]), 0.3)].into();
        let other = reconstruct(&rc, &sol, &shifted, 1e-2, &[20, 20]).unwrap();
        let (_, res) = group_relate(&r3_action(), &r3_frame(), &rec, &other, &zt).unwrap();
        assert!(res < 1e-6);
    }

    #[test]
    fn zero_length_path() {
        let rc = se2_chart();
        let sol = ReducedSolution::Equations(vec![p("y - 1")]);
        let rec = reconstruct(&rc, &sol, &HashMap::new(), 1e-3, &[0]).unwrap();
        assert_eq!(rec.samples.len(), 1);
        assert!(matches!(
            Reconstructor::new(&rc, &ReducedSolution::Equations(vec![])),
            Err(ReconstructError::Underdetermined(_))
        ));
    }

    #[test]
    fn tabulated_curve() {
        let rc = se2_chart();
        let sol = ReducedSolution::from_csv("y,v\n0,0\n5,0\n").unwrap();
        let rec = reconstruct(&rc, &sol, &HashMap::new(), 1e-2, &[50]).unwrap();
        assert!(rec.to_csv().lines().count() == 52);
        assert!(ReducedSolution::from_csv("v,y\n0,0\n").is_err());
    }
}
