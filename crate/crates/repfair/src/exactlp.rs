//! Exact-rational linear programming.
//!
//! A dense two-phase primal simplex over `BigRational`s with Bland's rule,
//! so every pivot is exact and the method terminates without cycling.  On
//! top of it sit the two fractional checkers: Pareto optimality (via an
//! aggregate-improvement LP whose optimum is zero exactly on the Pareto
//! frontier) and envy-freeness (direct comparisons).

use num_traits::{One, Signed, Zero};

use crate::axioms::{AxiomVerdict, Witness};
use crate::error::Error;
use crate::instance::Instance;
use crate::rational::Rational;
use crate::variable_k::FractionalAllocation;

/// Direction of one linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One row `coeffs . x  (<= | = | >=)  rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// A linear program over rational data.  `bounds[j]` gives optional lower
/// and upper bounds for variable `j`; `None` means unbounded on that side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub maximize: bool,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(Option<Rational>, Option<Rational>)>,
}

/// Result of an exact solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        solution: Vec<Rational>,
        objective: Rational,
    },
    Infeasible,
    Unbounded,
}

// How one user variable maps onto the non-negative simplex variables.
#[derive(Debug, Clone)]
enum VarMap {
    // x = lower + s
    Shift { col: usize, lower: Rational },
    // x = upper - s
    Mirror { col: usize, upper: Rational },
    // x = s_pos - s_neg
    Free { pos: usize, neg: usize },
}

/// Solves the program exactly.  Deterministic: Bland's smallest-index rule
/// picks both the entering and the leaving variable.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, Error> {
    let nvars = lp.bounds.len();
    if lp.objective.len() != nvars {
        return Err(Error::MalformedProgram(format!(
            "objective has {} coefficients for {} variables",
            lp.objective.len(),
            nvars
        )));
    }
    for (idx, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != nvars {
            return Err(Error::MalformedProgram(format!(
                "constraint {idx} has {} coefficients for {} variables",
                c.coeffs.len(),
                nvars
            )));
        }
    }

    // Substitute the variables so every simplex variable is >= 0.
    let mut maps = Vec::with_capacity(nvars);
    let mut ncols = 0usize;
    // Upper-bound rows added by the substitution: (column, bound).
    let mut upper_rows: Vec<(usize, Rational)> = Vec::new();
    for (lo, hi) in &lp.bounds {
        match (lo, hi) {
            (Some(l), Some(u)) => {
                if u < l {
                    return Ok(LpOutcome::Infeasible);
                }
                maps.push(VarMap::Shift {
                    col: ncols,
                    lower: l.clone(),
                });
                upper_rows.push((ncols, u - l));
                ncols += 1;
            }
            (Some(l), None) => {
                maps.push(VarMap::Shift {
                    col: ncols,
                    lower: l.clone(),
                });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Mirror {
                    col: ncols,
                    upper: u.clone(),
                });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Free {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
    }

    // Rewrite every constraint over the simplex variables.
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![Rational::zero(); ncols];
        let mut rhs = c.rhs.clone();
        for (j, a) in c.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            match &maps[j] {
                VarMap::Shift { col, lower } => {
                    coeffs[*col] += a;
                    rhs -= a * lower;
                }
                VarMap::Mirror { col, upper } => {
                    coeffs[*col] -= a;
                    rhs -= a * upper;
                }
                VarMap::Free { pos, neg } => {
                    coeffs[*pos] += a;
                    coeffs[*neg] -= a;
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for (col, bound) in upper_rows {
        let mut coeffs = vec![Rational::zero(); ncols];
        coeffs[col] = Rational::one();
        rows.push((coeffs, Relation::Le, bound));
    }

    // The transformed objective, always as a maximisation.
    let mut costs = vec![Rational::zero(); ncols];
    for (j, c) in lp.objective.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let c = if lp.maximize { c.clone() } else { -c.clone() };
        match &maps[j] {
            VarMap::Shift { col, .. } => costs[*col] += &c,
            VarMap::Mirror { col, .. } => costs[*col] -= &c,
            VarMap::Free { pos, neg } => {
                costs[*pos] += &c;
                costs[*neg] -= &c;
            }
        }
    }

    let solution_s = match simplex(ncols, rows, &costs)? {
        SimplexOutcome::Optimal(s) => s,
        SimplexOutcome::Infeasible => return Ok(LpOutcome::Infeasible),
        SimplexOutcome::Unbounded => return Ok(LpOutcome::Unbounded),
    };

    // Map back to the user's variables and price the original objective.
    let mut solution = Vec::with_capacity(nvars);
    for map in &maps {
        let x = match map {
            VarMap::Shift { col, lower } => lower + &solution_s[*col],
            VarMap::Mirror { col, upper } => upper - &solution_s[*col],
            VarMap::Free { pos, neg } => &solution_s[*pos] - &solution_s[*neg],
        };
        solution.push(x);
    }
    let objective = lp.objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
    Ok(LpOutcome::Optimal {
        solution,
        objective,
    })
}

enum SimplexOutcome {
    Optimal(Vec<Rational>),
    Infeasible,
    Unbounded,
}

// Two-phase simplex over `s >= 0` variables and explicit relation rows.
fn simplex(
    ncols: usize,
    mut rows: Vec<(Vec<Rational>, Relation, Rational)>,
    costs: &[Rational],
) -> Result<SimplexOutcome, Error> {
    // Normalise to non-negative right-hand sides.
    for (coeffs, relation, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for a in coeffs.iter_mut() {
                *a = -a.clone();
            }
            *rhs = -rhs.clone();
            *relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Column layout: structural | slack/surplus | artificial.
    let n_slack = rows
        .iter()
        .filter(|(_, rel, _)| !matches!(rel, Relation::Eq))
        .count();
    let n_art = rows
        .iter()
        .filter(|(_, rel, _)| !matches!(rel, Relation::Le))
        .count();
    let art_start = ncols + n_slack;
    let total = art_start + n_art;

    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(rows.len());
    let mut basis: Vec<usize> = Vec::with_capacity(rows.len());
    let mut next_slack = ncols;
    let mut next_art = art_start;
    for (coeffs, relation, rhs) in &rows {
        let mut row = vec![Rational::zero(); total + 1];
        row[..ncols].clone_from_slice(coeffs);
        row[total] = rhs.clone();
        match relation {
            Relation::Le => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        tab.push(row);
    }

    // Phase 1: maximise -(sum of artificials); feasible iff the optimum is 0.
    if n_art > 0 {
        let mut phase1 = vec![Rational::zero(); total];
        for c in phase1.iter_mut().take(total).skip(art_start) {
            *c = -Rational::one();
        }
        let obj = price_out(&tab, &basis, &phase1, total);
        let mut obj = obj;
        if !pivot_until_optimal(&mut tab, &mut basis, &mut obj, total)? {
            return Err(Error::Invariant(
                "phase-1 objective cannot be unbounded".into(),
            ));
        }
        // obj[total] holds -z; feasible iff z == 0.
        if !obj[total].is_zero() {
            return Ok(SimplexOutcome::Infeasible);
        }
        // Pivot leftover artificials out of the basis (their value is 0), or
        // drop rows that became redundant.
        let mut r = 0;
        while r < tab.len() {
            if basis[r] >= art_start {
                let pivot_col = (0..art_start).find(|&j| !tab[r][j].is_zero());
                match pivot_col {
                    Some(j) => pivot(&mut tab, &mut basis, None, r, j, total),
                    None => {
                        tab.remove(r);
                        basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        // Drop the artificial columns.
        for row in tab.iter_mut() {
            let rhs = row[total].clone();
            row.truncate(art_start);
            row.push(rhs);
        }
    }

    let total = art_start;
    let mut phase2 = vec![Rational::zero(); total];
    phase2[..ncols].clone_from_slice(costs);
    let mut obj = price_out(&tab, &basis, &phase2, total);
    if !pivot_until_optimal(&mut tab, &mut basis, &mut obj, total)? {
        return Ok(SimplexOutcome::Unbounded);
    }

    let mut solution = vec![Rational::zero(); ncols];
    for (r, &b) in basis.iter().enumerate() {
        if b < ncols {
            solution[b] = tab[r][total].clone();
        }
    }
    Ok(SimplexOutcome::Optimal(solution))
}

// Reduced-cost row for the given basis: [c_bar | -z].
fn price_out(
    tab: &[Vec<Rational>],
    basis: &[usize],
    costs: &[Rational],
    total: usize,
) -> Vec<Rational> {
    let mut obj = vec![Rational::zero(); total + 1];
    obj[..total].clone_from_slice(costs);
    for (r, &b) in basis.iter().enumerate() {
        if !costs[b].is_zero() {
            let scale = costs[b].clone();
            for (o, t) in obj.iter_mut().zip(&tab[r]) {
                *o -= &scale * t;
            }
        }
    }
    obj
}

// Bland pivoting until no reduced cost is positive.  Returns false on an
// unbounded ray.
fn pivot_until_optimal(
    tab: &mut [Vec<Rational>],
    basis: &mut [usize],
    obj: &mut [Rational],
    total: usize,
) -> Result<bool, Error> {
    loop {
        // Entering: smallest index with positive reduced cost.
        let entering = (0..total).find(|&j| obj[j].is_positive());
        let Some(e) = entering else {
            return Ok(true);
        };
        // Leaving: minimum ratio; ties broken by smallest basic index.
        let mut best: Option<(Rational, usize, usize)> = None; // (ratio, basis var, row)
        for (r, row) in tab.iter().enumerate() {
            if row[e].is_positive() {
                let ratio = &row[total] / &row[e];
                let candidate = (ratio, basis[r], r);
                best = match best {
                    None => Some(candidate),
                    Some(cur) => {
                        if candidate.0 < cur.0 || (candidate.0 == cur.0 && candidate.1 < cur.1) {
                            Some(candidate)
                        } else {
                            Some(cur)
                        }
                    }
                };
            }
        }
        let Some((_, _, r)) = best else {
            return Ok(false);
        };
        pivot(tab, basis, Some(obj), r, e, total);
    }
}

// Gauss pivot on (row, col); updates the objective row when given.
fn pivot(
    tab: &mut [Vec<Rational>],
    basis: &mut [usize],
    obj: Option<&mut [Rational]>,
    r: usize,
    e: usize,
    total: usize,
) {
    let scale = tab[r][e].clone();
    for v in tab[r].iter_mut() {
        *v /= &scale;
    }
    let pivot_row = tab[r].clone();
    for (idx, row) in tab.iter_mut().enumerate() {
        if idx != r && !row[e].is_zero() {
            let factor = row[e].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
        }
    }
    if let Some(obj) = obj {
        if !obj[e].is_zero() {
            let factor = obj[e].clone();
            for (v, p) in obj.iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
        }
    }
    let _ = total;
    basis[r] = e;
}

/// Checks fractional Pareto optimality of `x` exactly.
///
/// Maximises the total utility slack `sum_i d_i` over fractional allocations
/// `y` with `u_i(y_i) >= u_i(x_i) + d_i`, `d_i >= 0`.  The optimum is zero
/// iff no fractional allocation dominates `x`; a positive optimum yields a
/// dominating allocation as witness.
pub fn check_po_fractional(
    inst: &Instance,
    x: &FractionalAllocation,
) -> Result<AxiomVerdict, Error> {
    x.check_shape(inst)?;
    let (n, m) = (inst.n(), inst.m());
    let nvars = n * m + n; // y variables then one slack per agent
    let mut constraints = Vec::new();
    // Every item fully assigned.
    for o in 0..m {
        let mut coeffs = vec![Rational::zero(); nvars];
        for i in 0..n {
            coeffs[i * m + o] = Rational::one();
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Eq,
            rhs: Rational::one(),
        });
    }
    // u_i(y_i) - d_i >= u_i(x_i)
    for i in 0..n {
        let mut coeffs = vec![Rational::zero(); nvars];
        for o in 0..m {
            coeffs[i * m + o] = inst.utility(i, o).clone();
        }
        coeffs[n * m + i] = -Rational::one();
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: x.agent_value(inst, i, i),
        });
    }
    let mut objective = vec![Rational::zero(); nvars];
    for c in objective.iter_mut().skip(n * m) {
        *c = Rational::one();
    }
    let mut bounds = Vec::with_capacity(nvars);
    for _ in 0..n * m {
        bounds.push((Some(Rational::zero()), Some(Rational::one())));
    }
    for _ in 0..n {
        bounds.push((Some(Rational::zero()), None));
    }
    let lp = LinearProgram {
        maximize: true,
        objective,
        constraints,
        bounds,
    };
    match solve_lp(&lp)? {
        LpOutcome::Optimal {
            solution,
            objective,
        } => {
            if objective.is_zero() {
                Ok(AxiomVerdict::passes())
            } else {
                let mut shares = vec![vec![Rational::zero(); m]; n];
                for i in 0..n {
                    for o in 0..m {
                        shares[i][o] = solution[i * m + o].clone();
                    }
                }
                let witness = FractionalAllocation::new(shares)?;
                Ok(AxiomVerdict::fails(Witness::DominatedFractional(witness)))
            }
        }
        // x itself is feasible with zero slack, and the slack sum is bounded
        // by the total utility spread, so neither branch can be reached.
        LpOutcome::Infeasible | LpOutcome::Unbounded => Err(Error::Invariant(
            "the fractional dominance program is always feasible and bounded".into(),
        )),
    }
}

/// Checks fractional envy-freeness of `x` by direct comparison.
pub fn check_ef_fractional(
    inst: &Instance,
    x: &FractionalAllocation,
) -> Result<AxiomVerdict, Error> {
    x.check_shape(inst)?;
    let n = inst.n();
    for i in 0..n {
        let own = x.agent_value(inst, i, i);
        for j in 0..n {
            if i != j && own < x.agent_value(inst, i, j) {
                return Ok(AxiomVerdict::fails(Witness::Envy {
                    envious: i,
                    envied: j,
                }));
            }
        }
    }
    Ok(AxiomVerdict::passes())
}
