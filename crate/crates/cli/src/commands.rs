use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};
use thiserror::Error;

use orbita_core::conslaw::{conservation_laws, verify_closedness};
use orbita_core::exterior::{Label, LabelIndex};
use orbita_core::jetspace::JetContext;
use orbita_core::liegroup::{
    frame_pullback_of_mc, invariant_contact_basis, invariantize, verify_contact_basis, verify_frame, GroupAction, InvariantContactForm, MovingFrame,
};
use orbita_core::reconstruct::Reconstructor;
use orbita_core::reduction::ReducedChart;
use orbita_core::symcore::{parse_expr, together, Expr, MultiIndex, Variable, ZeroTest};
use orbita_core::varcalc::{a_operators, horizontal_table, ibp_table, invariant_el_system, HorizontalTable};

use crate::problem::{ParseError, Problem};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

fn compute<E: std::fmt::Debug + std::fmt::Display>(what: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Compute(format!("{what}: {}: {e}", variant_name(&e)))
}

/// Name of the error variant, for diagnostics like `EquivarianceFailure`.
fn variant_name<E: std::fmt::Debug>(e: &E) -> String {
    let dbg = format!("{e:?}");
    let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
    // Wrapped errors print as `Group(EquivarianceFailure { .. })`; show the innermost.
    match dbg[name.len()..].strip_prefix('(') {
        Some(rest) if rest.starts_with(|c: char| c.is_ascii_uppercase()) => rest.chars().take_while(|c| c.is_alphanumeric()).collect(),
        _ => name,
    }
}

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    pub samples: usize,
    pub lagrangian: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        let zt = ZeroTest::default();
        Options { seed: zt.seed, samples: zt.samples, lagrangian: None, out: None }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub text: String,
    pub json: Value,
    /// False when a certificate failed; the process then exits with 1.
    pub ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Invariants,
    Coframe,
    Syzygies,
    Conslaws,
    El,
    Reconstruct,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Invariants => "invariants",
            Command::Coframe => "coframe",
            Command::Syzygies => "syzygies",
            Command::Conslaws => "conslaws",
            Command::El => "el",
            Command::Reconstruct => "reconstruct",
            Command::Verify => "verify",
        }
    }
}

/// A parsed problem plus the randomized-test settings, from which the
/// reduced chart and invariant coframe are built on demand.
pub struct Session<'a> {
    pub problem: &'a Problem,
    pub zt: ZeroTest,
}

impl<'a> Session<'a> {
    pub fn new(problem: &'a Problem, zt: ZeroTest) -> Self {
        Session { problem, zt }
    }

    fn missing(&self, what: &str) -> CliError {
        CliError::Parse(ParseError { file: self.problem.path.display().to_string(), line: 0, message: format!("this command needs the [{what}] section") })
    }

    pub fn action(&self) -> Result<&'a GroupAction, CliError> {
        self.problem.action.as_ref().ok_or_else(|| self.missing("action"))
    }

    pub fn frame(&self) -> Result<&'a MovingFrame, CliError> {
        self.problem.frame.as_ref().ok_or_else(|| self.missing("frame"))
    }

    pub fn chart(&self) -> Result<ReducedChart, CliError> {
        let p = self.problem;
        if p.base_invariants.is_empty() {
            return Err(self.missing("invariants"));
        }
        let rc = ReducedChart::new(p.k, p.q, p.base_invariants.clone(), p.fiber_invariants.clone(), &self.zt).map_err(compute("reduced chart"))?;
        rc.with_frame(self.action()?, self.frame()?).map_err(compute("cross-section"))
    }

    pub fn basis(&self, rc: &ReducedChart) -> Result<Vec<InvariantContactForm>, CliError> {
        let Some(entries) = &self.problem.coframe else {
            return invariant_contact_basis(self.action()?, self.frame()?, self.problem.orders.coframe, &self.zt).map_err(compute("invariant contact basis"));
        };
        let zeta = frame_pullback_of_mc(self.action()?, self.frame()?, &self.zt).map_err(compute("Maurer-Cartan pullback"))?;
        let mut lifts: HashMap<Variable, Expr> = HashMap::new();
        let mut out = Vec::new();
        for e in entries {
            for l in e.form.labels() {
                if let Label::Named { family, index: LabelIndex::Num(i) } = &l {
                    if &**family == "zeta" && !(1..=zeta.len()).contains(i) {
                        let message = format!("zeta[{i}] is out of range; the group has {} parameters", zeta.len());
                        return Err(ParseError { file: self.problem.path.display().to_string(), line: e.line, message }.into());
                    }
                }
            }
            let named = e.form.substitute_labels(&|l| match l {
                Label::Named { family, index: LabelIndex::Num(i) } if &**family == "zeta" => Some(zeta[i - 1].clone()),
                Label::Named { family, index } if &**family == "thetabar" => {
                    let (comp, idx) = match index {
                        LabelIndex::Num(n) => (1, MultiIndex::new(vec![1; *n])),
                        LabelIndex::Jet { comp, index } => (*comp, index.clone()),
                    };
                    Some(rc.reduced_contact_form(comp, &idx))
                }
                _ => None,
            });
            let mut vars: Vec<Variable> = named.labels().into_iter().filter_map(|l| if let Label::D(v) = l { Some(v) } else { None }).collect();
            for (_, c) in named.terms() {
                vars.extend(c.variables().iter().cloned());
            }
            for v in vars.into_iter().filter(Variable::is_reduced) {
                if !lifts.contains_key(&v) {
                    let l = rc.lift(&v).map_err(compute("lifting coframe coefficients"))?;
                    lifts.insert(v, l);
                }
            }
            let form = named.pullback(&|v| lifts.get(v).cloned()).map_err(compute("coframe"))?;
            out.push(InvariantContactForm { comp: e.comp, index: e.index.clone(), label: e.label.clone(), form });
        }
        Ok(out)
    }

    pub fn table(&self, rc: &ReducedChart) -> Result<(Vec<InvariantContactForm>, HorizontalTable), CliError> {
        let basis = self.basis(rc)?;
        let table = horizontal_table(rc, &basis).map_err(compute("horizontal table"))?;
        Ok((basis, table))
    }

    fn header(&self, command: Command) -> (String, Value) {
        let text = format!("# {} {} (seed {}, samples {})\n", command.name(), self.problem.path.display(), self.zt.seed, self.zt.samples);
        let json = json!({
            "command": command.name(),
            "problem": self.problem.path.display().to_string(),
            "seed": self.zt.seed,
            "samples": self.zt.samples,
        });
        (text, json)
    }
}

/// Runs one command on a parsed problem.
pub fn run(command: Command, problem: &Problem, opts: &Options) -> Result<Report, CliError> {
    let zt = ZeroTest { seed: opts.seed, samples: opts.samples, ..ZeroTest::default() };
    let s = Session { problem, zt };
    let (mut text, mut json) = s.header(command);
    let mut ok = true;
    let body = match command {
        Command::Invariants => invariants(&s, &mut text)?,
        Command::Coframe => coframe(&s, &mut text)?,
        Command::Syzygies => syzygies(&s, &mut text)?,
        Command::Conslaws => conslaws(&s, &mut text)?,
        Command::El => el(&s, opts, &mut text)?,
        Command::Reconstruct => reconstruct(&s, opts, &mut text)?,
        Command::Verify => {
            let (v, passed) = verify(&s, &mut text)?;
            ok = passed;
            v
        }
    };
    if let (Value::Object(head), Value::Object(rest)) = (&mut json, body) {
        head.extend(rest);
    }
    Ok(Report { text, json, ok })
}

fn invariants(s: &Session, text: &mut String) -> Result<Value, CliError> {
    let (action, frame) = (s.action()?, s.frame()?);
    let p = s.problem;
    let named: Vec<(Variable, &Expr)> = (1..=p.k)
        .map(Variable::InvBase)
        .zip(&p.base_invariants)
        .chain(p.fiber_invariants.iter().enumerate().map(|(a, e)| (Variable::InvJet { comp: a + 1, index: MultiIndex::empty() }, e)))
        .collect();
    let mut given = Vec::new();
    for (v, e) in &named {
        let res = action.invariance_residual(e, &s.zt).map_err(compute("invariance"))?;
        writeln!(text, "{v} = {e}    (invariance residual {res:.1e})").unwrap();
        given.push(json!({ "name": v.to_string(), "expr": e.to_string(), "residual": res }));
    }
    let order = named.iter().flat_map(|(_, e)| e.variables().iter().map(Variable::jet_order).collect::<Vec<_>>()).max().unwrap_or(0).max(frame.order());
    writeln!(text, "invariantization up to order {order}:").unwrap();
    let mut table = Vec::new();
    for c in JetContext::new(p.k, p.q, order).coordinates() {
        let inv = together(&invariantize(action, frame, &Expr::var(c.clone()), &s.zt).map_err(compute("invariantization"))?);
        writeln!(text, "  iota({c}) = {inv}").unwrap();
        table.push(json!({ "coordinate": c.to_string(), "expr": inv.to_string() }));
    }
    Ok(json!({ "invariants": given, "invariantization": table }))
}

fn coframe(s: &Session, text: &mut String) -> Result<Value, CliError> {
    let rc = s.chart()?;
    let (basis, table) = s.table(&rc)?;
    let mut forms = Vec::new();
    for b in &basis {
        writeln!(text, "{} = {}", b.label, b.form).unwrap();
        forms.push(json!({ "label": b.label.to_string(), "form": b.form.to_string() }));
    }
    writeln!(text, "horizontal differentials, d_H eta = sum_j d(y[j]) ^ (sum c eta'):").unwrap();
    let mut entries = Vec::new();
    for (si, src) in table.labels.iter().enumerate() {
        for j in 1..=rc.k() {
            for (ti, tgt) in table.labels.iter().enumerate() {
                let c = &table.coeffs[si][j - 1][ti];
                if !c.is_zero() {
                    writeln!(text, "  {src} -> {tgt} along y[{j}]: {c}").unwrap();
                    entries.push(json!({ "source": src.to_string(), "target": tgt.to_string(), "direction": j, "expr": c.to_string() }));
                }
            }
        }
    }
    Ok(json!({ "coframe": forms, "table": entries }))
}

fn syzygies(s: &Session, text: &mut String) -> Result<Value, CliError> {
    let rc = s.chart()?;
    let syz = rc.syzygies().map_err(compute("syzygies"))?;
    if syz.is_empty() {
        writeln!(text, "no syzygies").unwrap();
    }
    let mut out = Vec::new();
    for (e, order) in syz.relations().iter().zip(&syz.orders) {
        writeln!(text, "0 = {e}    (lift order {order})").unwrap();
        out.push(json!({ "expr": e.to_string(), "order": order }));
    }
    Ok(json!({ "syzygies": out }))
}

fn conslaws(s: &Session, text: &mut String) -> Result<Value, CliError> {
    let rc = s.chart()?;
    let laws = conservation_laws(s.action()?, s.frame()?, &rc).map_err(compute("conservation laws"))?;
    if laws.is_empty() {
        writeln!(text, "no conservation laws from Lie algebra cohomology").unwrap();
    }
    let mut out = Vec::new();
    for law in &laws {
        verify_closedness(&law.form, &rc).map_err(compute("closedness"))?;
        writeln!(text, "degree {} class {}: {}    (closed)", law.degree, law.cocycle, law.form).unwrap();
        out.push(json!({ "degree": law.degree, "cocycle": law.cocycle.to_string(), "form": law.form.to_string() }));
    }
    Ok(json!({ "conservation_laws": out }))
}

fn el(s: &Session, opts: &Options, text: &mut String) -> Result<Value, CliError> {
    let lagrangian = match &opts.lagrangian {
        Some(src) => Some(parse_expr(src).map_err(|e| ParseError { file: "--lagrangian".into(), line: 1, message: e.to_string() })?),
        None => s.problem.lagrangian.clone(),
    };
    let rc = s.chart()?;
    let (_, table) = s.table(&rc)?;
    let ibp = ibp_table(&rc, &table).map_err(compute("integration by parts"))?;
    let ops = a_operators(&rc, &table, &ibp).map_err(compute("A operators"))?;
    writeln!(text, "integration-by-parts rules:").unwrap();
    let mut rules = Vec::new();
    for (src, targets) in &ibp.rules {
        for (tgt, op) in targets {
            writeln!(text, "  {} -> {}: {op}", ibp.labels[*src], ibp.labels[*tgt]).unwrap();
            rules.push(json!({ "source": ibp.labels[*src].to_string(), "target": ibp.labels[*tgt].to_string(), "operator": op_json(op) }));
        }
    }
    writeln!(text, "A operators:").unwrap();
    let mut rows = Vec::new();
    for (a, row) in ops.rows.iter().enumerate() {
        for (col, op) in ops.columns.iter().zip(row) {
            writeln!(text, "  A[{}][{col}] = {op}", a + 1).unwrap();
            rows.push(json!({ "row": a + 1, "column": col.to_string(), "operator": op_json(op) }));
        }
    }
    let mut system = Vec::new();
    if let Some(l) = &lagrangian {
        writeln!(text, "invariant Euler-Lagrange system for L = {l}:").unwrap();
        let eqs = invariant_el_system(l, &ops).map_err(compute("Euler-Lagrange system"))?;
        for (i, e) in eqs.iter().enumerate() {
            writeln!(text, "  0 = {e}").unwrap();
            system.push(json!({ "component": i + 1, "expr": e.to_string() }));
        }
    }
    Ok(json!({
        "lagrangian": lagrangian.map(|l| l.to_string()),
        "ibp_rules": rules,
        "a_operators": rows,
        "euler_lagrange": system,
    }))
}

fn op_json(op: &orbita_core::varcalc::TotalDiffOperator) -> Value {
    Value::Array(op.coeffs().iter().map(|(i, c)| json!({ "index": i.entries().to_vec(), "expr": c.to_string() })).collect())
}

fn reconstruct(s: &Session, opts: &Options, text: &mut String) -> Result<Value, CliError> {
    let rc = s.chart()?;
    let spec = s.problem.solution.as_ref().ok_or_else(|| s.missing("reduced_solution"))?;
    let r = Reconstructor::new(&rc, &spec.solution).map_err(compute("reconstruction"))?;
    let order: Vec<usize> = (1..=rc.k()).collect();
    let rec = r.run(&spec.initial, spec.step, &spec.steps, &order).map_err(compute("reconstruction"))?;
    let residual = r.max_residual(&rec).map_err(compute("reconstruction"))?;
    let csv = rec.to_csv();
    match &opts.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| CliError::Compute(format!("{}: {e}", path.display())))?;
            writeln!(text, "wrote {} samples to {}", rec.samples.len(), path.display()).unwrap();
        }
        None => text.push_str(&csv),
    }
    writeln!(text, "max residual of the reduced solution: {residual:.3e}").unwrap();
    Ok(json!({
        "samples": rec.samples.len(),
        "shape": rec.shape,
        "step": rec.step,
        "columns": rec.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "residual": residual,
        "csv": opts.out.as_ref().map(|p| p.display().to_string()),
    }))
}

fn verify(s: &Session, text: &mut String) -> Result<(Value, bool), CliError> {
    let mut checks: Vec<(String, Result<String, String>)> = Vec::new();
    let fail = |e: &dyn std::fmt::Display, name: String| format!("{name}: {e}");
    let action = s.action()?;
    let frame = s.frame()?;
    let group = action.group();
    checks.push(("group".into(), group.verify(&s.zt).map(|_| "chart satisfies the group axioms".into()).map_err(|e| fail(&e, variant_name(&e)))));
    let r = frame.order().max(1);
    checks.push(("action".into(), action.verify_axioms(r, &s.zt).map(|_| format!("action axioms hold on J^{r}")).map_err(|e| fail(&e, variant_name(&e)))));
    let frame_ok = verify_frame(action, frame, &s.zt);
    checks.push((
        "frame".into(),
        frame_ok.as_ref().map(|rep| format!("equivariant at {} samples, residual {:.1e}", rep.samples, rep.max_residual)).map_err(|e| fail(e, variant_name(e))),
    ));
    if frame_ok.is_ok() && !s.problem.base_invariants.is_empty() {
        let p = s.problem;
        let mut worst: f64 = 0.0;
        let mut err = None;
        for e in p.base_invariants.iter().chain(&p.fiber_invariants) {
            match action.invariance_residual(e, &s.zt) {
                Ok(r) => worst = worst.max(r),
                Err(e) => err = Some(fail(&e, variant_name(&e))),
            }
        }
        let res = match err {
            Some(e) => Err(e),
            None if worst > 1e-7 => Err(format!("NotInvariant: residual {worst:.1e}")),
            None => Ok(format!("residual {worst:.1e}")),
        };
        checks.push(("invariants".into(), res));
        match s.chart() {
            Err(e) => checks.push(("chart".into(), Err(e.to_string()))),
            Ok(rc) => {
                let basis = s.basis(&rc);
                checks.push((
                    "coframe".into(),
                    match &basis {
                        Ok(b) => verify_contact_basis(action, b, &s.zt).map(|_| format!("{} invariant contact forms", b.len())).map_err(|e| fail(&e, variant_name(&e))),
                        Err(e) => Err(e.to_string()),
                    },
                ));
                let r = p.orders.commutation;
                checks.push((
                    "commutation".into(),
                    rc.check_commutation(r, None, None).map(|rep| format!("order {r}: {} generators, rank {}", rep.generators, rep.rank)).map_err(|e| fail(&e, variant_name(&e))),
                ));
                let laws = conservation_laws(action, frame, &rc);
                checks.push((
                    "conservation laws".into(),
                    match laws {
                        Ok(laws) => laws
                            .iter()
                            .try_for_each(|l| verify_closedness(&l.form, &rc).map(|_| ()))
                            .map(|_| format!("{} closed", laws.len()))
                            .map_err(|e| fail(&e, variant_name(&e))),
                        Err(e) => Err(fail(&e, variant_name(&e))),
                    },
                ));
            }
        }
    }
    let mut out = Vec::new();
    let mut ok = true;
    for (name, res) in &checks {
        let (status, detail) = match res {
            Ok(d) => ("ok", d),
            Err(d) => {
                ok = false;
                ("FAILED", d)
            }
        };
        writeln!(text, "{name}: {status}: {detail}").unwrap();
        out.push(json!({ "check": name, "ok": res.is_ok(), "detail": detail }));
    }
    Ok((json!({ "checks": out, "ok": ok }), ok))
}
