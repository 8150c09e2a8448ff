use super::{Expr, SymError, ZeroTest};

/// Reduced right-hand sides and pivot columns.
struct Eliminated {
    rhs: Vec<Vec<Expr>>,
    pivots: Vec<usize>,
}

fn pivot_score(e: &Expr) -> (u8, usize) {
    if e.as_constant().is_some() {
        (0, 0)
    } else if e.len() == 1 {
        (1, e.node_count())
    } else {
        (2, e.node_count())
    }
}

/// Gauss-Jordan elimination of `a` carrying several right-hand sides
/// (`rhs[i]` is row `i` of the right-hand block).
fn eliminate(a: &[Vec<Expr>], rhs: Vec<Vec<Expr>>, zt: &ZeroTest) -> Result<Eliminated, SymError> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    assert_eq!(rhs.len(), m, "rhs length must match row count");
    let mut rows: Vec<Vec<Expr>> = a.to_vec();
    let mut rhs = rhs;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let mut cands: Vec<usize> = (r..m).filter(|&i| !rows[i][c].is_zero()).collect();
        cands.sort_by_key(|&i| pivot_score(&rows[i][c]));
        let mut chosen = None;
        for i in cands {
            if !zt.is_zero(&rows[i][c])? {
                chosen = Some(i);
                break;
            }
            rows[i][c] = Expr::zero();
        }
        let Some(p) = chosen else { continue };
        rows.swap(r, p);
        rhs.swap(r, p);
        let piv = rows[r][c].clone();
        if piv != Expr::one() {
            for j in c + 1..n {
                rows[r][j] = rows[r][j].div(&piv)?;
            }
            rows[r][c] = Expr::one();
            for x in rhs[r].iter_mut() {
                *x = x.div(&piv)?;
            }
        }
        for i in 0..m {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for j in c + 1..n {
                if !rows[r][j].is_zero() {
                    rows[i][j] = &rows[i][j] - &(&f * &rows[r][j]);
                }
            }
            rows[i][c] = Expr::zero();
            for t in 0..rhs[r].len() {
                if !rhs[r][t].is_zero() {
                    rhs[i][t] = &rhs[i][t] - &(&f * &rhs[r][t]);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    for row in rhs.iter().skip(r) {
        for x in row {
            if !zt.is_zero(x)? {
                return Err(SymError::Inconsistent);
            }
        }
    }
    Ok(Eliminated { rhs, pivots })
}

fn assemble(el: &Eliminated, n: usize, col: usize) -> Vec<Expr> {
    let mut x = vec![Expr::zero(); n];
    for (row, &pc) in el.pivots.iter().enumerate() {
        x[pc] = el.rhs[row][col].clone();
    }
    x
}

fn column(b: &[Expr]) -> Vec<Vec<Expr>> {
    b.iter().map(|x| vec![x.clone()]).collect()
}

/// Solve `a x = b` over the field of expressions. Fails with
/// `RankDeficient` when the solution is not unique.
pub fn solve_linear(a: &[Vec<Expr>], b: &[Expr], zt: &ZeroTest) -> Result<Vec<Expr>, SymError> {
    let n = a.first().map_or(0, |r| r.len());
    let el = eliminate(a, column(b), zt)?;
    if el.pivots.len() < n {
        let free = (0..n).filter(|c| !el.pivots.contains(c)).collect();
        return Err(SymError::RankDeficient { free });
    }
    Ok(assemble(&el, n, 0))
}

/// Some solution of `a x = b`, free unknowns set to zero.
pub fn solve_linear_particular(a: &[Vec<Expr>], b: &[Expr], zt: &ZeroTest) -> Result<Vec<Expr>, SymError> {
    let n = a.first().map_or(0, |r| r.len());
    let el = eliminate(a, column(b), zt)?;
    Ok(assemble(&el, n, 0))
}

/// Rank over the expression field.
pub fn rank(a: &[Vec<Expr>], zt: &ZeroTest) -> Result<usize, SymError> {
    Ok(eliminate(a, vec![Vec::new(); a.len()], zt)?.pivots.len())
}

/// Inverse of a square matrix of expressions.
pub fn invert(a: &[Vec<Expr>], zt: &ZeroTest) -> Result<Vec<Vec<Expr>>, SymError> {
    let n = a.len();
    let id: Vec<Vec<Expr>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect()).collect();
    let el = eliminate(a, id, zt)?;
    if el.pivots.len() < n {
        let free = (0..n).filter(|c| !el.pivots.contains(c)).collect();
        return Err(SymError::RankDeficient { free });
    }
    let cols: Vec<Vec<Expr>> = (0..n).map(|j| assemble(&el, n, j)).collect();
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn identity_system() {
        let zt = ZeroTest::default();
        let a = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]];
        let x = solve_linear(&a, &[p("a"), p("b")], &zt).unwrap();
        assert_eq!(x, vec![p("a"), p("b")]);
    }

    #[test]
    fn triangular_system() {
        let zt = ZeroTest::default();
        let a = vec![vec![p("v"), Expr::zero()], vec![p("v[1]"), p("v")]];
        let x = solve_linear(&a, &[Expr::one(), Expr::zero()], &zt).unwrap();
        assert!(zt.equal(&x[0], &p("1/v")).unwrap());
        assert!(zt.equal(&x[1], &p("-v[1]/v^2")).unwrap());
    }

    #[test]
    fn deficiency_and_inconsistency() {
        let zt = ZeroTest::default();
        let a = vec![vec![p("x"), p("x*y")], vec![p("2*x"), p("2*x*y")]];
        assert_eq!(solve_linear(&a, &[Expr::one(), Expr::int(2)], &zt), Err(SymError::RankDeficient { free: vec![1] }));
        assert_eq!(solve_linear(&a, &[Expr::one(), Expr::int(3)], &zt), Err(SymError::Inconsistent));
        let part = solve_linear_particular(&a, &[Expr::one(), Expr::int(2)], &zt).unwrap();
        assert!(zt.equal(&part[0], &p("1/x")).unwrap());
        assert_eq!(rank(&a, &zt).unwrap(), 1);
    }

    #[test]
    fn inverse_round_trip() {
        let zt = ZeroTest::default();
        let a = vec![vec![p("1+x^2"), p("x")], vec![p("y"), Expr::one()]];
        let inv = invert(&a, &zt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let s = &(&a[i][0] * &inv[0][j]) + &(&a[i][1] * &inv[1][j]);
                let want = if i == j { Expr::one() } else { Expr::zero() };
                assert!(zt.equal(&s, &want).unwrap());
            }
        }
    }

    #[test]
    fn hidden_zero_pivot_is_skipped() {
        let zt = ZeroTest::default();
        // first entry is zero only after simplification by evaluation
        let a = vec![vec![p("sin(x)^2 + cos(x)^2 - 1"), Expr::one()], vec![Expr::one(), Expr::zero()]];
        let x = solve_linear(&a, &[Expr::int(3), Expr::int(5)], &zt).unwrap();
        assert_eq!(x, vec![Expr::int(5), Expr::int(3)]);
    }
}
