//! The `.orb` problem format: `[section]` headers followed by `key = value`
//! lines; `#` starts a comment. Expressions use the symcore grammar.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use orbita_core::exterior::{label_resolver, parse_form, DifferentialForm, Label, LabelIndex};
use orbita_core::liegroup::{GroupAction, LieGroupChart, MovingFrame};
use orbita_core::reconstruct::ReducedSolution;
use orbita_core::symcore::{parse_expr, Expr, MultiIndex, SymError, Variable};
use orbita_core::BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}:{}: {}", self.file, self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

const SECTIONS: &[&str] = &["base", "group", "action", "frame", "invariants", "coframe", "orders", "lagrangian", "reduced_solution"];

#[derive(Clone, Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Clone, Debug)]
struct Section {
    line: usize,
    entries: Vec<Entry>,
}

/// Orders used by the pipeline: syzygy search, invariant coframe, and the
/// order at which commutation is certified.
#[derive(Clone, Debug, PartialEq)]
pub struct Orders {
    pub syzygy: usize,
    pub coframe: usize,
    pub commutation: usize,
}

#[derive(Clone, Debug)]
pub struct CoframeEntry {
    pub label: Label,
    pub comp: usize,
    pub index: MultiIndex,
    /// Written over `zeta[i]` (frame pullbacks of the Maurer-Cartan forms),
    /// `thetabar[...]`, and differentials of coordinates.
    pub form: DifferentialForm,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub struct SolutionSpec {
    pub solution: ReducedSolution,
    pub initial: HashMap<Variable, f64>,
    pub step: f64,
    pub steps: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub path: PathBuf,
    pub k: usize,
    pub q: usize,
    pub action: Option<GroupAction>,
    pub frame: Option<MovingFrame>,
    pub base_invariants: Vec<Expr>,
    pub fiber_invariants: Vec<Expr>,
    pub coframe: Option<Vec<CoframeEntry>>,
    pub orders: Orders,
    pub lagrangian: Option<Expr>,
    pub solution: Option<SolutionSpec>,
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> ParseError {
        ParseError { file: self.file.to_string(), line, message: message.into() }
    }

    fn expr(&self, e: &Entry) -> Result<Expr, ParseError> {
        parse_expr(&e.value).map_err(|err| self.err(e.line, describe(&err, &e.value)))
    }

    fn key_var(&self, e: &Entry) -> Result<Variable, ParseError> {
        parse_expr(&e.key)
            .ok()
            .and_then(|x| x.as_var().cloned())
            .ok_or_else(|| self.err(e.line, format!("'{}' is not a coordinate", e.key)))
    }

    fn usize(&self, e: &Entry) -> Result<usize, ParseError> {
        e.value.parse().map_err(|_| self.err(e.line, format!("{} must be a non-negative integer", e.key)))
    }

    fn f64(&self, e: &Entry) -> Result<f64, ParseError> {
        e.value.parse().map_err(|_| self.err(e.line, format!("{} must be a number", e.key)))
    }
}

fn describe(err: &SymError, src: &str) -> String {
    match err {
        SymError::Parse { offset, message } => format!("{message} (column {} of '{src}')", offset + 1),
        other => format!("{other} in '{src}'"),
    }
}

/// Splits at the first `=` outside brackets, so keys like `v[a=2]` work.
fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in line.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            '=' if depth == 0 => return Some((line[..i].trim(), line[i + 1..].trim())),
            _ => {}
        }
    }
    None
}

fn sections(text: &str, ctx: &Ctx) -> Result<HashMap<String, Section>, ParseError> {
    let mut out: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(ctx.err(line, format!("unknown section [{name}]")));
            }
            if out.contains_key(&name) {
                return Err(ctx.err(line, format!("section [{name}] appears twice")));
            }
            out.insert(name.clone(), Section { line, entries: Vec::new() });
            current = Some(name);
            continue;
        }
        let Some(sec) = current.as_ref() else {
            return Err(ctx.err(line, "entry before any section header"));
        };
        let Some((key, value)) = split_assignment(body) else {
            return Err(ctx.err(line, "expected 'key = value'"));
        };
        if key.is_empty() || value.is_empty() {
            return Err(ctx.err(line, "empty key or value"));
        }
        out.get_mut(sec).expect("current section").entries.push(Entry { key: key.into(), value: value.into(), line });
    }
    Ok(out)
}

fn list(value: &str) -> Vec<String> {
    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

impl Problem {
    pub fn load(path: &Path) -> Result<Problem, ParseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ParseError { file: path.display().to_string(), line: 0, message: e.to_string() })?;
        Problem::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Problem, ParseError> {
        let file = path.display().to_string();
        let ctx = Ctx { file: &file };
        let secs = sections(text, &ctx)?;
        let entries = |name: &str| secs.get(name).map(|s| s.entries.as_slice()).unwrap_or(&[]);
        let find = |name: &str, key: &str| entries(name).iter().find(|e| e.key == key);

        let base = secs.get("base").ok_or_else(|| ctx.err(1, "missing [base] section"))?;
        let dim = |key: &str| -> Result<usize, ParseError> {
            let e = find("base", key).ok_or_else(|| ctx.err(base.line, format!("[base] needs '{key}'")))?;
            let n = ctx.usize(e)?;
            if n == 0 {
                return Err(ctx.err(e.line, format!("{key} must be positive")));
            }
            Ok(n)
        };
        let (k, q) = (dim("k")?, dim("q")?);

        let group = match secs.get("group") {
            None => None,
            Some(sec) => Some(parse_group(sec, &ctx)?),
        };
        let action = match (secs.get("action"), &group) {
            (None, _) => None,
            (Some(sec), None) => return Err(ctx.err(sec.line, "[action] needs a [group] section")),
            (Some(sec), Some(g)) => Some(parse_action(sec, g.clone(), k, q, &ctx)?),
        };
        let frame = match (secs.get("frame"), &group) {
            (None, _) => None,
            (Some(sec), None) => return Err(ctx.err(sec.line, "[frame] needs a [group] section")),
            (Some(sec), Some(g)) => Some(parse_frame(sec, g, &ctx)?),
        };

        let (mut base_invariants, mut fiber_invariants) = (vec![None; k], Vec::new());
        for e in entries("invariants") {
            match ctx.key_var(e)? {
                Variable::InvBase(i) if i <= k => base_invariants[i - 1] = Some(ctx.expr(e)?),
                Variable::InvJet { comp, index } if index.is_empty() => {
                    if fiber_invariants.len() < comp {
                        fiber_invariants.resize(comp, None);
                    }
                    fiber_invariants[comp - 1] = Some(ctx.expr(e)?);
                }
                _ => return Err(ctx.err(e.line, format!("'{}' is not y[i] (i ≤ {k}) or an order-zero v", e.key))),
            }
        }
        let (base_invariants, fiber_invariants) = match secs.get("invariants") {
            None => (Vec::new(), Vec::new()),
            Some(sec) => {
                let b: Option<Vec<Expr>> = base_invariants.into_iter().collect();
                let f: Option<Vec<Expr>> = fiber_invariants.into_iter().collect();
                match (b, f) {
                    (Some(b), Some(f)) if !f.is_empty() => (b, f),
                    _ => return Err(ctx.err(sec.line, format!("[invariants] needs y[1..{k}] and v[a=1..] without gaps"))),
                }
            }
        };

        let coframe = match secs.get("coframe") {
            None => None,
            Some(sec) => Some(parse_coframe(sec, k, q, &ctx)?),
        };

        let mut orders = Orders { syzygy: 3, coframe: 2, commutation: 2 };
        for e in entries("orders") {
            let slot = match e.key.as_str() {
                "r_s" | "syzygy" => &mut orders.syzygy,
                "r_cf" | "coframe" => &mut orders.coframe,
                "r_o" | "commutation" => &mut orders.commutation,
                other => return Err(ctx.err(e.line, format!("unknown order '{other}'"))),
            };
            *slot = ctx.usize(e)?;
        }

        let lagrangian = match entries("lagrangian") {
            [] => None,
            [e] if e.key == "L" => Some(ctx.expr(e)?),
            [e, ..] => return Err(ctx.err(e.line, "[lagrangian] takes exactly one entry 'L = ...'")),
        };

        let solution = match secs.get("reduced_solution") {
            None => None,
            Some(sec) => Some(parse_solution(sec, k, path, &ctx)?),
        };

        Ok(Problem {
            path: path.to_path_buf(),
            k,
            q,
            action,
            frame,
            base_invariants,
            fiber_invariants,
            coframe,
            orders,
            lagrangian,
            solution,
        })
    }
}

fn parse_group(sec: &Section, ctx: &Ctx) -> Result<LieGroupChart, ParseError> {
    if let Some(e) = sec.entries.iter().find(|e| e.key == "abelian") {
        let names = list(&e.value);
        if names.is_empty() {
            return Err(ctx.err(e.line, "abelian group needs parameter names"));
        }
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        return Ok(LieGroupChart::abelian(&names));
    }
    let get = |key: &str| sec.entries.iter().find(|e| e.key == key).ok_or_else(|| ctx.err(sec.line, format!("[group] needs '{key}' or 'abelian'")));
    let params = get("params")?;
    let names = list(&params.value);
    let ident = get("identity")?;
    let identity: Vec<BigRational> = list(&ident.value)
        .iter()
        .map(|s| parse_expr(s).ok().and_then(|e| e.as_constant()).ok_or_else(|| ctx.err(ident.line, format!("identity entry '{s}' is not a rational constant"))))
        .collect::<Result<_, _>>()?;
    if identity.len() != names.len() {
        return Err(ctx.err(ident.line, format!("identity has {} entries for {} parameters", identity.len(), names.len())));
    }
    let law = |prefix: &str| -> Result<Vec<Expr>, ParseError> {
        names
            .iter()
            .map(|n| {
                let key = format!("{prefix}.{n}");
                let e = get(&key)?;
                ctx.expr(e)
            })
            .collect()
    };
    let (mult, inverse) = (law("mult")?, law("inverse")?);
    LieGroupChart::new(names, identity, mult, inverse).map_err(|e| ctx.err(sec.line, e.to_string()))
}

fn parse_action(sec: &Section, group: LieGroupChart, k: usize, q: usize, ctx: &Ctx) -> Result<GroupAction, ParseError> {
    let (mut xs, mut us) = (vec![None; k], vec![None; q]);
    for e in &sec.entries {
        let slot = match ctx.key_var(e)? {
            Variable::Indep(i) if i <= k => &mut xs[i - 1],
            Variable::Jet { comp, index } if comp <= q && index.is_empty() => &mut us[comp - 1],
            _ => return Err(ctx.err(e.line, format!("'{}' is not a base or fiber coordinate", e.key))),
        };
        *slot = Some(ctx.expr(e)?);
    }
    let xs: Option<Vec<Expr>> = xs.into_iter().collect();
    let us: Option<Vec<Expr>> = us.into_iter().collect();
    let (Some(xs), Some(us)) = (xs, us) else {
        return Err(ctx.err(sec.line, "[action] must give the image of every x and u"));
    };
    GroupAction::new(group, k, q, xs, us).map_err(|e| ctx.err(sec.line, e.to_string()))
}

fn parse_frame(sec: &Section, group: &LieGroupChart, ctx: &Ctx) -> Result<MovingFrame, ParseError> {
    let order = sec.entries.iter().find(|e| e.key == "order").ok_or_else(|| ctx.err(sec.line, "[frame] needs 'order'"))?;
    let order = ctx.usize(order)?;
    let rho = group
        .names()
        .iter()
        .map(|n| {
            let e = sec.entries.iter().find(|e| e.key == **n).ok_or_else(|| ctx.err(sec.line, format!("[frame] has no component for '{n}'")))?;
            ctx.expr(e)
        })
        .collect::<Result<_, _>>()?;
    Ok(MovingFrame::new(order, rho))
}

fn parse_coframe(sec: &Section, k: usize, q: usize, ctx: &Ctx) -> Result<Vec<CoframeEntry>, ParseError> {
    let eta = label_resolver(&["eta"]);
    let families = label_resolver(&["zeta", "thetabar"]);
    let mut out = Vec::new();
    for e in &sec.entries {
        let key = parse_form(&e.key, &eta).map_err(|err| ctx.err(e.line, describe(&err, &e.key)))?;
        let label = match key.terms().next() {
            Some((ls, c)) if key.len() == 1 && ls.len() == 1 && c.as_constant().is_some_and(|c| c == BigRational::from_integer(1.into())) => ls[0].clone(),
            _ => return Err(ctx.err(e.line, format!("'{}' is not an eta label", e.key))),
        };
        let (comp, index) = match &label {
            Label::Named { index: LabelIndex::Num(n), .. } if k == 1 && q == 1 => (1, MultiIndex::new(vec![1; *n])),
            Label::Named { index: LabelIndex::Jet { comp, index }, .. } if *comp <= q => (*comp, index.clone()),
            _ => return Err(ctx.err(e.line, format!("'{}' does not name a contact order", e.key))),
        };
        let form = parse_form(&e.value, &families).map_err(|err| ctx.err(e.line, describe(&err, &e.value)))?;
        if form.degree() != 1 {
            return Err(ctx.err(e.line, "coframe entries must be 1-forms"));
        }
        out.push(CoframeEntry { label, comp, index, form, line: e.line });
    }
    out.sort_by_key(|c| (c.index.order(), c.comp, c.index.clone()));
    Ok(out)
}

fn parse_solution(sec: &Section, k: usize, path: &Path, ctx: &Ctx) -> Result<SolutionSpec, ParseError> {
    let mut equations = Vec::new();
    let mut table = None;
    let mut initial = HashMap::new();
    let mut step = 1e-3;
    let mut steps = vec![100; k];
    for e in &sec.entries {
        match e.key.as_str() {
            "equation" => equations.push(ctx.expr(e)?),
            "table" => {
                let file = path.parent().unwrap_or(Path::new(".")).join(&e.value);
                let text = std::fs::read_to_string(&file).map_err(|err| ctx.err(e.line, format!("{}: {err}", file.display())))?;
                table = Some(ReducedSolution::from_csv(&text).map_err(|err| ctx.err(e.line, err.to_string()))?);
            }
            "step" => step = ctx.f64(e)?,
            "steps" => {
                steps = list(&e.value).iter().map(|s| s.parse().map_err(|_| ctx.err(e.line, format!("bad step count '{s}'")))).collect::<Result<_, _>>()?;
                if steps.len() != k {
                    return Err(ctx.err(e.line, format!("need {k} step counts")));
                }
            }
            key => match key.strip_prefix("at ").map(str::trim) {
                Some(coord) => {
                    let v = parse_expr(coord).ok().and_then(|x| x.as_var().cloned()).filter(Variable::is_upstairs);
                    let Some(v) = v else { return Err(ctx.err(e.line, format!("'{coord}' is not a jet coordinate"))) };
                    initial.insert(v, ctx.f64(e)?);
                }
                None => return Err(ctx.err(e.line, format!("unknown key '{key}' in [reduced_solution]"))),
            },
        }
    }
    if !(step > 0.0) {
        return Err(ctx.err(sec.line, "step must be positive"));
    }
    let solution = match (table, equations.is_empty()) {
        (Some(t), true) => t,
        (None, false) => ReducedSolution::Equations(equations),
        _ => return Err(ctx.err(sec.line, "[reduced_solution] needs either equations or one table")),
    };
    Ok(SolutionSpec { solution, initial, step, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Problem, ParseError> {
        Problem::parse(text, Path::new("t.orb"))
    }

    #[test]
    fn assignment_split_skips_brackets() {
        assert_eq!(split_assignment("v[a=2] = u[2,2]"), Some(("v[a=2]", "u[2,2]")));
        assert_eq!(split_assignment("no equals"), None);
    }

    #[test]
    fn diagnostics_carry_lines() {
        let err = parse("[base]\nk = 1\nq = 1\n[group]\nabelian = s\n[action]\nx = x +\n").unwrap_err();
        assert_eq!(err.line, 7);
        assert!(err.to_string().starts_with("t.orb:7:"), "{err}");
        assert_eq!(parse("[base]\nk = 1\n").unwrap_err().line, 1);
        assert_eq!(parse("[bogus]\n").unwrap_err().line, 1);
        assert_eq!(parse("k = 1\n").unwrap_err().line, 1);
    }

    #[test]
    fn minimal_problem() {
        let p = parse("# translations\n[base]\nk = 1\nq = 1\n[group]\nabelian = s\n[action]\nx = x\nu = u + s\n[frame]\norder = 0\ns = -u\n[invariants]\ny = x\nv = u[1]\n").unwrap();
        assert_eq!((p.k, p.q), (1, 1));
        assert_eq!(p.frame.unwrap().order(), 0);
        assert_eq!(p.fiber_invariants.len(), 1);
    }
}
