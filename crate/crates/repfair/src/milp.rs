//! Exact maximization of utilitarian welfare over count matrices.
//!
//! Given per-agent utility floors, the search looks for the count matrix
//! (non-negative integer owner counts per item, each column summing to the
//! number of rounds) of maximum welfare among those meeting every floor.
//! This is the engine behind the overall Pareto check — a matrix is
//! dominated exactly when some matrix meets its utility vector as floors
//! with strictly higher welfare — and behind welfare-maximizing solvers.
//!
//! The search branches on items, most valuable first, enumerating for each
//! item the ways to split its copies among the agents.  Nodes are pruned
//! with cheap per-agent and welfare bounds and, on large spaces, an exact
//! LP relaxation bound.  All arithmetic is rational, so every bound is
//! exact and pruning is lossless.

use num_traits::Zero;

use crate::allocation::CountMatrix;
use crate::budget::BudgetMeter;
use crate::error::Error;
use crate::exactlp::{solve_lp, Constraint, LinearProgram, LpOutcome, Relation};
use crate::instance::{Instance, ItemClass};
use crate::rational::{rat_u, Rational};

/// Spaces at most this large are enumerated without LP bounds.
const ENUM_LIMIT: u128 = 50_000;
/// Within the LP regime, subtrees at most this large skip further LP calls.
const LP_TAIL_LIMIT: u128 = 1_000;

/// How the search treats the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SearchMode {
    /// Find a welfare maximum; among optima keep the matrix whose
    /// row-major count vector is lexicographically smallest.
    Optimum,
    /// Stop at the first strict welfare improvement over the seed.
    Improve,
}

/// Maximizes welfare over count matrices with `k` copies per item, subject
/// to `u_i >= floors[i]` for every agent.
///
/// In [`SearchMode::Improve`] the `seed` matrix provides the starting
/// incumbent and the search stops at the first strict improvement; the
/// seed itself is returned when nothing beats it.  Returns `None` when no
/// matrix meets the floors (impossible in `Improve` mode, where the seed
/// is feasible by construction).
///
/// Items on which every agent has zero utility are pinned to agent 0; the
/// lexicographic tie-break therefore applies to the remaining columns.
pub(crate) fn maximize_welfare(
    inst: &Instance,
    k: u64,
    floors: &[Rational],
    seed: Option<&CountMatrix>,
    mode: SearchMode,
    meter: &mut BudgetMeter,
) -> Result<Option<(CountMatrix, Rational)>, Error> {
    let n = inst.n();
    let m = inst.m();
    if floors.len() != n {
        return Err(Error::DimensionMismatch {
            kind: "floors",
            expected: n,
            got: floors.len(),
        });
    }

    // Search order: non-null items by descending best absolute utility,
    // ties by declared order.
    let mut order: Vec<usize> = (0..m)
        .filter(|&o| inst.class_of(o) != ItemClass::ObjectiveNull)
        .collect();
    let spread: Vec<Rational> = (0..m)
        .map(|o| {
            (0..n)
                .map(|i| {
                    let u = inst.utility(i, o);
                    if u < &Rational::zero() {
                        -u.clone()
                    } else {
                        u.clone()
                    }
                })
                .max()
                .unwrap_or_else(Rational::zero)
        })
        .collect();
    order.sort_by(|&a, &b| spread[b].cmp(&spread[a]).then_with(|| a.cmp(&b)));

    // Suffix bounds along the search order.  For the welfare bound each
    // remaining item contributes at most k times its best single-agent
    // utility; for an agent's own bound at most k times the positive part.
    let len = order.len();
    let k_rat = rat_u(k);
    let mut suffix_welfare = vec![Rational::zero(); len + 1];
    let mut suffix_agent = vec![vec![Rational::zero(); len + 1]; n];
    for p in (0..len).rev() {
        let o = order[p];
        let best = (0..n)
            .map(|i| inst.utility(i, o))
            .max()
            .expect("at least one agent");
        suffix_welfare[p] = suffix_welfare[p + 1].clone() + best * &k_rat;
        for (i, suffix) in suffix_agent.iter_mut().enumerate() {
            let u = inst.utility(i, o);
            let gain = if u > &Rational::zero() {
                u * &k_rat
            } else {
                Rational::zero()
            };
            suffix[p] = suffix[p + 1].clone() + gain;
        }
    }

    // Size estimates decide whether LP bounds pay off.
    let comps = compositions(k, n);
    let mut suffix_space = vec![1u128; len + 1];
    for p in (0..len).rev() {
        suffix_space[p] = suffix_space[p + 1].saturating_mul(comps);
    }
    let use_lp = suffix_space[0] > ENUM_LIMIT;

    let mut counts = vec![vec![0u64; m]; n];
    for (o, slot) in counts[0].iter_mut().enumerate() {
        if inst.class_of(o) == ItemClass::ObjectiveNull {
            *slot = k;
        }
    }

    let incumbent = match mode {
        SearchMode::Improve => {
            let seed = seed.ok_or_else(|| {
                Error::Invariant("improvement search requires a seed matrix".into())
            })?;
            let mut pinned: Vec<Vec<u64>> = (0..n).map(|i| seed.row(i).to_vec()).collect();
            for o in 0..m {
                if inst.class_of(o) == ItemClass::ObjectiveNull {
                    for (i, row) in pinned.iter_mut().enumerate() {
                        row[o] = if i == 0 { k } else { 0 };
                    }
                }
            }
            Some((pinned, seed.welfare(inst)))
        }
        SearchMode::Optimum => None,
    };

    let mut search = Search {
        inst,
        k,
        k_rat,
        floors,
        order,
        suffix_welfare,
        suffix_agent,
        suffix_space,
        use_lp,
        mode,
        counts,
        acc: vec![Rational::zero(); n],
        acc_sum: Rational::zero(),
        incumbent,
    };
    search.dfs(0, meter)?;

    match search.incumbent {
        Some((rows, welfare)) => Ok(Some((CountMatrix::new(k, rows)?, welfare))),
        None => Ok(None),
    }
}

// Number of ways to split k copies among n agents: C(k + n - 1, n - 1),
// saturating well before u128 overflow.
fn compositions(k: u64, n: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 1..n {
        r = r.saturating_mul(k as u128 + i as u128) / i as u128;
        if r > 1 << 100 {
            return u128::MAX;
        }
    }
    r
}

struct Search<'a> {
    inst: &'a Instance,
    k: u64,
    k_rat: Rational,
    floors: &'a [Rational],
    order: Vec<usize>,
    suffix_welfare: Vec<Rational>,
    suffix_agent: Vec<Vec<Rational>>,
    suffix_space: Vec<u128>,
    use_lp: bool,
    mode: SearchMode,
    counts: Vec<Vec<u64>>,
    acc: Vec<Rational>,
    acc_sum: Rational,
    incumbent: Option<(Vec<Vec<u64>>, Rational)>,
}

impl Search<'_> {
    // Returns true when the search should stop (Improve mode found a
    // strict improvement).
    fn dfs(&mut self, pos: usize, meter: &mut BudgetMeter) -> Result<bool, Error> {
        meter.tick()?;
        let n = self.inst.n();

        // An agent that cannot reach its floor even receiving every
        // remaining positive item kills the subtree.
        for i in 0..n {
            if self.acc[i].clone() + &self.suffix_agent[i][pos] < self.floors[i] {
                return Ok(false);
            }
        }
        if self.prune_by_bound(self.acc_sum.clone() + &self.suffix_welfare[pos]) {
            return Ok(false);
        }

        if pos == self.order.len() {
            return Ok(self.visit_leaf());
        }

        if self.use_lp && self.suffix_space[pos] > LP_TAIL_LIMIT {
            match self.lp_bound(pos)? {
                None => return Ok(false),
                Some(bound) => {
                    if self.prune_by_bound(bound) {
                        return Ok(false);
                    }
                }
            }
        }

        self.branch(pos, 0, self.k, meter)
    }

    // Enumerates the splits of item order[pos] in ascending lexicographic
    // order of per-agent counts.
    fn branch(
        &mut self,
        pos: usize,
        agent: usize,
        remaining: u64,
        meter: &mut BudgetMeter,
    ) -> Result<bool, Error> {
        let o = self.order[pos];
        let n = self.inst.n();
        if agent == n - 1 {
            let delta = self.inst.utility(agent, o) * rat_u(remaining);
            self.counts[agent][o] = remaining;
            self.acc[agent] += &delta;
            self.acc_sum += &delta;
            let stop = self.dfs(pos + 1, meter)?;
            self.acc[agent] -= &delta;
            self.acc_sum -= &delta;
            self.counts[agent][o] = 0;
            return Ok(stop);
        }
        for c in 0..=remaining {
            let delta = self.inst.utility(agent, o) * rat_u(c);
            self.counts[agent][o] = c;
            self.acc[agent] += &delta;
            self.acc_sum += &delta;
            let stop = self.branch(pos, agent + 1, remaining - c, meter)?;
            self.acc[agent] -= &delta;
            self.acc_sum -= &delta;
            self.counts[agent][o] = 0;
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    // True when the subtree bound rules out everything we still care
    // about: strictly worse than the incumbent when looking for optima
    // (ties must survive for the lexicographic rule), at most the
    // incumbent when looking for a strict improvement.
    fn prune_by_bound(&self, bound: Rational) -> bool {
        match (&self.incumbent, self.mode) {
            (Some((_, best)), SearchMode::Optimum) => bound < *best,
            (Some((_, best)), SearchMode::Improve) => bound <= *best,
            (None, _) => false,
        }
    }

    fn visit_leaf(&mut self) -> bool {
        for i in 0..self.inst.n() {
            if self.acc[i] < self.floors[i] {
                return false;
            }
        }
        let welfare = self.acc_sum.clone();
        match (&mut self.incumbent, self.mode) {
            (slot @ None, _) => {
                *slot = Some((self.counts.clone(), welfare));
                false
            }
            (Some((rows, best)), SearchMode::Optimum) => {
                if welfare > *best || (welfare == *best && self.counts < *rows) {
                    *rows = self.counts.clone();
                    *best = welfare;
                }
                false
            }
            (Some((rows, best)), SearchMode::Improve) => {
                if welfare > *best {
                    *rows = self.counts.clone();
                    *best = welfare;
                    true
                } else {
                    false
                }
            }
        }
    }

    // Exact LP relaxation over the remaining columns: fractional copy
    // counts in [0, k] with exact column sums and the residual floors.
    // Returns the total welfare bound, or None when even the relaxation is
    // infeasible.
    fn lp_bound(&self, pos: usize) -> Result<Option<Rational>, Error> {
        let n = self.inst.n();
        let rem: &[usize] = &self.order[pos..];
        let r = rem.len();
        let vars = n * r;
        let objective: Vec<Rational> = (0..n)
            .flat_map(|i| rem.iter().map(move |&o| self.inst.utility(i, o).clone()))
            .collect();
        let mut constraints = Vec::with_capacity(r + n);
        for (j, _) in rem.iter().enumerate() {
            let mut coeffs = vec![Rational::zero(); vars];
            for i in 0..n {
                coeffs[i * r + j] = Rational::from_integer(1.into());
            }
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Eq,
                rhs: self.k_rat.clone(),
            });
        }
        for i in 0..n {
            let mut coeffs = vec![Rational::zero(); vars];
            for (j, &o) in rem.iter().enumerate() {
                coeffs[i * r + j] = self.inst.utility(i, o).clone();
            }
            constraints.push(Constraint {
                coeffs,
                relation: Relation::Ge,
                rhs: self.floors[i].clone() - &self.acc[i],
            });
        }
        let lp = LinearProgram {
            maximize: true,
            objective,
            constraints,
            bounds: vec![(Some(Rational::zero()), Some(self.k_rat.clone())); vars],
        };
        match solve_lp(&lp)? {
            LpOutcome::Optimal { objective, .. } => Ok(Some(self.acc_sum.clone() + objective)),
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::Invariant(
                "a box-bounded relaxation cannot be unbounded".into(),
            )),
        }
    }
}
