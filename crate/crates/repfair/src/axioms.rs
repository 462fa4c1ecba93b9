//! Axiom checkers: envy, proportionality, and Pareto optimality.
//!
//! Envy-freeness and proportionality are judged either per round (on a
//! single [`Allocation`]) or overall (on the [`CountMatrix`] accumulated
//! across rounds).  The one-item relaxations EF1, weak EF1, PROP1 and
//! PROP[1,1] compare hypothetical bundles that differ in at most one item
//! and are defined for single rounds only.  Pareto checks are exact
//! searches for a dominating allocation and carry a node budget.

use std::fmt;

use num_traits::Zero;

use crate::allocation::{Allocation, CountMatrix, Sequence};
use crate::budget::{BudgetMeter, SearchBudget};
use crate::error::Error;
use crate::instance::{Instance, ItemClass};
use crate::milp::{maximize_welfare, SearchMode};
use crate::rational::Rational;
use crate::variable_k::FractionalAllocation;

/// The axioms this crate can check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Ef,
    Ef1,
    WeakEf1,
    Prop,
    Prop1,
    Prop11,
    Po,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::Ef => "EF",
            Axiom::Ef1 => "EF1",
            Axiom::WeakEf1 => "weak EF1",
            Axiom::Prop => "PROP",
            Axiom::Prop1 => "PROP1",
            Axiom::Prop11 => "PROP[1,1]",
            Axiom::Po => "PO",
        };
        f.write_str(name)
    }
}

/// Whether an axiom is judged round by round or on overall bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    PerRound,
    Overall,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::PerRound => "per-round",
            Scope::Overall => "overall",
        })
    }
}

/// Evidence for a failed check; always independently re-checkable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// `envious` strictly prefers the bundle of `envied` (beyond any
    /// admissible one-item adjustment, for the relaxed envy axioms).
    Envy { envious: usize, envied: usize },
    /// The agent misses its proportional share by `shortfall`, after the
    /// best admissible adjustment for the relaxed variants.
    Shortfall { agent: usize, shortfall: Rational },
    /// A round allocation that makes everyone weakly and someone strictly
    /// better off.
    DominatedRound(Allocation),
    /// An overall count matrix that Pareto-dominates the checked one.
    Dominated(CountMatrix),
    /// A fractional allocation that Pareto-dominates the checked one.
    DominatedFractional(FractionalAllocation),
}

/// Outcome of a single axiom check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
}

impl AxiomVerdict {
    pub fn passes() -> Self {
        AxiomVerdict {
            holds: true,
            witness: None,
        }
    }

    pub fn fails(witness: Witness) -> Self {
        AxiomVerdict {
            holds: false,
            witness: Some(witness),
        }
    }
}

fn check_dims_counts(inst: &Instance, counts: &CountMatrix) -> Result<(), Error> {
    if counts.n() != inst.n() {
        return Err(Error::DimensionMismatch {
            kind: "agents",
            expected: inst.n(),
            got: counts.n(),
        });
    }
    if counts.m() != inst.m() {
        return Err(Error::DimensionMismatch {
            kind: "items",
            expected: inst.m(),
            got: counts.m(),
        });
    }
    Ok(())
}

fn check_dims_alloc(inst: &Instance, alloc: &Allocation) -> Result<(), Error> {
    if alloc.n() != inst.n() {
        return Err(Error::DimensionMismatch {
            kind: "agents",
            expected: inst.n(),
            got: alloc.n(),
        });
    }
    if alloc.m() != inst.m() {
        return Err(Error::DimensionMismatch {
            kind: "items",
            expected: inst.m(),
            got: alloc.m(),
        });
    }
    Ok(())
}

/// Envy-freeness on accumulated bundles: `u_i(row_i) >= u_i(row_j)` for all
/// ordered pairs.  With `k = 1` this is per-round envy-freeness.
pub fn check_ef(inst: &Instance, counts: &CountMatrix) -> Result<AxiomVerdict, Error> {
    check_dims_counts(inst, counts)?;
    for i in 0..inst.n() {
        let own = counts.row_value(inst, i, i);
        for j in 0..inst.n() {
            if i != j && own < counts.row_value(inst, i, j) {
                return Ok(AxiomVerdict::fails(Witness::Envy {
                    envious: i,
                    envied: j,
                }));
            }
        }
    }
    Ok(AxiomVerdict::passes())
}

// Does i tolerate j's bundle after removing one item from either side?
pub(crate) fn ef1_pair(inst: &Instance, alloc: &Allocation, i: usize, j: usize) -> bool {
    let own = alloc.bundle_value(inst, i, i);
    let other = alloc.bundle_value(inst, i, j);
    if own >= other {
        return true;
    }
    for o in 0..alloc.m() {
        if alloc.holds(i, o) {
            // Drop o from i's own bundle.
            if own.clone() - inst.utility(i, o) >= other {
                return true;
            }
        } else if alloc.holds(j, o) {
            // Drop o from j's bundle.
            if own >= other.clone() - inst.utility(i, o) {
                return true;
            }
        }
    }
    false
}

// The weak variant additionally allows copying one item across: i may
// imagine gaining an item while j loses it.
pub(crate) fn weak_ef1_pair(inst: &Instance, alloc: &Allocation, i: usize, j: usize) -> bool {
    let own = alloc.bundle_value(inst, i, i);
    let other = alloc.bundle_value(inst, i, j);
    if own >= other {
        return true;
    }
    for o in 0..alloc.m() {
        let in_i = alloc.holds(i, o);
        let in_j = alloc.holds(j, o);
        if !in_i && !in_j {
            continue;
        }
        let u = inst.utility(i, o);
        // u_i(pi_i + o) >= u_i(pi_j - o), with set semantics on both sides.
        let gain = if in_i { Rational::zero() } else { u.clone() };
        let loss = if in_j { u.clone() } else { Rational::zero() };
        if own.clone() + gain >= other.clone() - loss {
            return true;
        }
        // u_i(pi_i - o) >= u_i(pi_j + o).
        let drop = if in_i { u.clone() } else { Rational::zero() };
        let add = if in_j { Rational::zero() } else { u.clone() };
        if own.clone() - drop >= other.clone() + add {
            return true;
        }
    }
    false
}

/// Envy-freeness up to one item, per round.
pub fn check_ef1(inst: &Instance, alloc: &Allocation) -> Result<AxiomVerdict, Error> {
    check_dims_alloc(inst, alloc)?;
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i != j && !ef1_pair(inst, alloc, i, j) {
                return Ok(AxiomVerdict::fails(Witness::Envy {
                    envious: i,
                    envied: j,
                }));
            }
        }
    }
    Ok(AxiomVerdict::passes())
}

/// Weak envy-freeness up to one item, per round: one item may be removed
/// from either bundle or transferred between them.
pub fn check_weak_ef1(inst: &Instance, alloc: &Allocation) -> Result<AxiomVerdict, Error> {
    check_dims_alloc(inst, alloc)?;
    for i in 0..inst.n() {
        for j in 0..inst.n() {
            if i != j && !weak_ef1_pair(inst, alloc, i, j) {
                return Ok(AxiomVerdict::fails(Witness::Envy {
                    envious: i,
                    envied: j,
                }));
            }
        }
    }
    Ok(AxiomVerdict::passes())
}

/// Proportionality on accumulated bundles: everyone reaches `(k/n) u_i(I)`.
pub fn check_prop(inst: &Instance, counts: &CountMatrix) -> Result<AxiomVerdict, Error> {
    check_dims_counts(inst, counts)?;
    for i in 0..inst.n() {
        let share = inst.share(i, counts.k());
        let got = counts.row_value(inst, i, i);
        if got < share {
            return Ok(AxiomVerdict::fails(Witness::Shortfall {
                agent: i,
                shortfall: share - got,
            }));
        }
    }
    Ok(AxiomVerdict::passes())
}

// Best bundle value reachable by removing a set X of own items and adding a
// set Y of outside items, with the given caps on |X|, |Y| and |X u Y|.
fn best_adjusted_value(
    inst: &Instance,
    alloc: &Allocation,
    agent: usize,
    combine: bool,
) -> Rational {
    let base = alloc.bundle_value(inst, agent, agent);
    let mut best = base.clone();
    let mut best_drop: Option<Rational> = None; // most negative owned utility
    let mut best_add: Option<Rational> = None; // most positive outside utility
    for o in 0..alloc.m() {
        let u = inst.utility(agent, o);
        if alloc.holds(agent, o) {
            if best_drop.as_ref().is_none_or(|d| u < d) {
                best_drop = Some(u.clone());
            }
        } else if best_add.as_ref().is_none_or(|a| u > a) {
            best_add = Some(u.clone());
        }
    }
    if let Some(d) = &best_drop {
        let v = base.clone() - d;
        if v > best {
            best = v;
        }
    }
    if let Some(a) = &best_add {
        let v = base.clone() + a;
        if v > best {
            best = v;
        }
    }
    if combine {
        if let (Some(d), Some(a)) = (&best_drop, &best_add) {
            let v = base - d + a;
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// Proportionality up to one item, per round: one adjustment in total, a
/// removal from the own bundle or an addition from outside it.
pub fn check_prop1(inst: &Instance, alloc: &Allocation) -> Result<AxiomVerdict, Error> {
    check_dims_alloc(inst, alloc)?;
    for i in 0..inst.n() {
        let share = inst.share(i, 1);
        let best = best_adjusted_value(inst, alloc, i, false);
        if best < share {
            return Ok(AxiomVerdict::fails(Witness::Shortfall {
                agent: i,
                shortfall: share - best,
            }));
        }
    }
    Ok(AxiomVerdict::passes())
}

/// Proportionality up to one removal and one addition simultaneously.
pub fn check_prop11(inst: &Instance, alloc: &Allocation) -> Result<AxiomVerdict, Error> {
    check_dims_alloc(inst, alloc)?;
    for i in 0..inst.n() {
        let share = inst.share(i, 1);
        let best = best_adjusted_value(inst, alloc, i, true);
        if best < share {
            return Ok(AxiomVerdict::fails(Witness::Shortfall {
                agent: i,
                shortfall: share - best,
            }));
        }
    }
    Ok(AxiomVerdict::passes())
}

/// Pareto optimality of a single round, by exhaustive search over all
/// reassignments.
pub fn check_po_round(
    inst: &Instance,
    alloc: &Allocation,
    budget: &SearchBudget,
) -> Result<AxiomVerdict, Error> {
    let mut meter = budget.meter();
    check_po_round_metered(inst, alloc, &mut meter)
}

pub(crate) fn check_po_round_metered(
    inst: &Instance,
    alloc: &Allocation,
    meter: &mut BudgetMeter,
) -> Result<AxiomVerdict, Error> {
    check_dims_alloc(inst, alloc)?;
    let (n, m) = (inst.n(), inst.m());
    let base: Vec<Rational> = (0..n).map(|i| alloc.bundle_value(inst, i, i)).collect();
    // Null items never change any utility, so dominators may be sought with
    // them pinned to agent 0 without loss of generality.
    let movable: Vec<usize> = (0..m)
        .filter(|&o| inst.class_of(o) != ItemClass::ObjectiveNull)
        .collect();
    let mut owners = vec![0usize; m];
    let mut candidate = vec![Rational::zero(); n];
    let verdict = po_round_dfs(inst, &base, &movable, 0, &mut owners, &mut candidate, meter)?;
    Ok(match verdict {
        Some(dominating) => AxiomVerdict::fails(Witness::DominatedRound(dominating)),
        None => AxiomVerdict::passes(),
    })
}

#[allow(clippy::too_many_arguments)]
fn po_round_dfs(
    inst: &Instance,
    base: &[Rational],
    movable: &[usize],
    depth: usize,
    owners: &mut Vec<usize>,
    candidate: &mut [Rational],
    meter: &mut BudgetMeter,
) -> Result<Option<Allocation>, Error> {
    if depth == movable.len() {
        meter.tick()?;
        let mut strict = false;
        for i in 0..inst.n() {
            if candidate[i] < base[i] {
                return Ok(None);
            }
            if candidate[i] > base[i] {
                strict = true;
            }
        }
        if strict {
            return Ok(Some(Allocation::new(inst.n(), owners.clone())?));
        }
        return Ok(None);
    }
    let o = movable[depth];
    for agent in 0..inst.n() {
        owners[o] = agent;
        candidate[agent] += inst.utility(agent, o);
        let found = po_round_dfs(inst, base, movable, depth + 1, owners, candidate, meter)?;
        candidate[agent] -= inst.utility(agent, o);
        if found.is_some() {
            return Ok(found);
        }
    }
    owners[o] = 0;
    Ok(None)
}

/// Pareto optimality of overall bundles: branch and bound over count
/// matrices with an exact LP relaxation bound, falling back to plain
/// enumeration on small spaces.
pub fn check_po_overall(
    inst: &Instance,
    counts: &CountMatrix,
    budget: &SearchBudget,
) -> Result<AxiomVerdict, Error> {
    let mut meter = budget.meter();
    check_po_overall_metered(inst, counts, &mut meter)
}

pub(crate) fn check_po_overall_metered(
    inst: &Instance,
    counts: &CountMatrix,
    meter: &mut BudgetMeter,
) -> Result<AxiomVerdict, Error> {
    check_dims_counts(inst, counts)?;
    let floors = counts.utility_vector(inst);
    let baseline = counts.welfare(inst);
    let best = maximize_welfare(
        inst,
        counts.k(),
        &floors,
        Some(counts),
        SearchMode::Improve,
        meter,
    )?
    .ok_or_else(|| Error::Invariant("the checked matrix is itself feasible".into()))?;
    if best.1 == baseline {
        Ok(AxiomVerdict::passes())
    } else {
        // Strictly higher welfare under per-agent floors is exactly a
        // Pareto improvement.
        Ok(AxiomVerdict::fails(Witness::Dominated(best.0)))
    }
}

/// One axiom/scope evaluation over a sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationEntry {
    pub axiom: Axiom,
    pub scope: Scope,
    pub result: ScopedVerdict,
}

/// Verdicts for an axiom at one scope: a single overall verdict, or one per
/// round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopedVerdict {
    Overall(AxiomVerdict),
    PerRound(Vec<AxiomVerdict>),
}

impl ScopedVerdict {
    pub fn holds(&self) -> bool {
        match self {
            ScopedVerdict::Overall(v) => v.holds,
            ScopedVerdict::PerRound(vs) => vs.iter().all(|v| v.holds),
        }
    }
}

/// Verdicts for a list of (axiom, scope) targets on one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationReport {
    pub entries: Vec<EvaluationEntry>,
}

impl EvaluationReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.result.holds())
    }
}

/// Checks each requested (axiom, scope) pair on the sequence.  The relaxed
/// one-item axioms are per-round notions; asking for them overall is an
/// error.
pub fn evaluate(
    inst: &Instance,
    seq: &Sequence,
    targets: &[(Axiom, Scope)],
    budget: &SearchBudget,
) -> Result<EvaluationReport, Error> {
    let mut meter = budget.meter();
    let mut entries = Vec::with_capacity(targets.len());
    for &(axiom, scope) in targets {
        let result = evaluate_one(inst, seq, axiom, scope, &mut meter)?;
        entries.push(EvaluationEntry {
            axiom,
            scope,
            result,
        });
    }
    Ok(EvaluationReport { entries })
}

pub(crate) fn evaluate_one(
    inst: &Instance,
    seq: &Sequence,
    axiom: Axiom,
    scope: Scope,
    meter: &mut BudgetMeter,
) -> Result<ScopedVerdict, Error> {
    let per_round =
        |f: &mut dyn FnMut(&Allocation) -> Result<AxiomVerdict, Error>| -> Result<ScopedVerdict, Error> {
            let mut verdicts = Vec::with_capacity(seq.rounds().len());
            for round in seq.rounds() {
                verdicts.push(f(round)?);
            }
            Ok(ScopedVerdict::PerRound(verdicts))
        };
    match (axiom, scope) {
        (Axiom::Ef, Scope::Overall) => Ok(ScopedVerdict::Overall(check_ef(inst, &seq.overall())?)),
        (Axiom::Ef, Scope::PerRound) => per_round(&mut |r| check_ef(inst, &r.counts())),
        (Axiom::Prop, Scope::Overall) => {
            Ok(ScopedVerdict::Overall(check_prop(inst, &seq.overall())?))
        }
        (Axiom::Prop, Scope::PerRound) => per_round(&mut |r| check_prop(inst, &r.counts())),
        (Axiom::Ef1, Scope::PerRound) => per_round(&mut |r| check_ef1(inst, r)),
        (Axiom::WeakEf1, Scope::PerRound) => per_round(&mut |r| check_weak_ef1(inst, r)),
        (Axiom::Prop1, Scope::PerRound) => per_round(&mut |r| check_prop1(inst, r)),
        (Axiom::Prop11, Scope::PerRound) => per_round(&mut |r| check_prop11(inst, r)),
        (Axiom::Po, Scope::PerRound) => {
            let mut verdicts = Vec::with_capacity(seq.rounds().len());
            for round in seq.rounds() {
                verdicts.push(check_po_round_metered(inst, round, meter)?);
            }
            Ok(ScopedVerdict::PerRound(verdicts))
        }
        (Axiom::Po, Scope::Overall) => Ok(ScopedVerdict::Overall(check_po_overall_metered(
            inst,
            &seq.overall(),
            meter,
        )?)),
        (Axiom::Ef1 | Axiom::WeakEf1 | Axiom::Prop1 | Axiom::Prop11, Scope::Overall) => {
            Err(Error::UnsupportedScope {
                axiom: axiom.to_string(),
                scope: scope.to_string(),
            })
        }
    }
}
