//! Solvers for any number of agents: rotation, welfare maximization under
//! proportional floors, and certified exhaustive search over sequences.

pub use crate::budget::SearchBudget;

use crate::allocation::{Allocation, CountMatrix, Sequence};
use crate::axioms::{
    check_ef, check_po_overall_metered, check_po_round_metered, check_prop, Axiom, Scope,
};
use crate::budget::BudgetMeter;
use crate::error::Error;
use crate::instance::{Instance, ItemClass};
use crate::milp::{maximize_welfare, SearchMode};

/// Outcome of an exhaustive sequence search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    /// A sequence meeting every requested axiom.
    Found(Sequence),
    /// No sequence of the given length meets them; the search space was
    /// covered completely.
    CertifiedNone,
}

/// Repeats an initial allocation for `k` rounds, rotating bundles one
/// agent per round: in round `r`, agent `i` holds the initial bundle of
/// agent `(i - r) mod n`.
///
/// Requires `k` to be a multiple of `n`, so that every agent holds every
/// bundle equally often; the overall outcome then gives each agent exactly
/// its proportional share.
pub fn rotation_sequence(inst: &Instance, initial: &Allocation, k: u64) -> Result<Sequence, Error> {
    if initial.n() != inst.n() || initial.m() != inst.m() {
        return Err(Error::DimensionMismatch {
            kind: "allocation",
            expected: inst.n(),
            got: initial.n(),
        });
    }
    let n = inst.n();
    if k == 0 || !k.is_multiple_of(n as u64) {
        return Err(Error::RoundsNotMultiple { k, n });
    }
    let mut rounds = Vec::with_capacity(k as usize);
    for r in 0..k {
        let shift = (r % n as u64) as usize;
        // The owner of each item moves forward by r positions.
        let owners = initial.owners().iter().map(|&i| (i + shift) % n).collect();
        rounds.push(Allocation::new(n, owners)?);
    }
    Sequence::new(rounds)
}

/// Finds a sequence that is proportional and Pareto optimal overall, for
/// any `k` that is a multiple of `n`.
///
/// Maximizes welfare subject to every agent reaching its proportional
/// share; the maximum is Pareto optimal (a dominator would meet the same
/// floors with strictly more welfare) and the rotation argument guarantees
/// the floors are feasible.
pub fn solve_prop_po(inst: &Instance, k: u64, budget: &SearchBudget) -> Result<Sequence, Error> {
    let n = inst.n();
    if k == 0 || !k.is_multiple_of(n as u64) {
        return Err(Error::RoundsNotMultiple { k, n });
    }
    let floors: Vec<_> = (0..n).map(|i| inst.share(i, k)).collect();
    let mut meter = budget.meter();
    let (counts, _) = maximize_welfare(inst, k, &floors, None, SearchMode::Optimum, &mut meter)?
        .ok_or_else(|| {
            Error::Invariant("proportional shares are always feasible when n divides k".into())
        })?;
    counts_to_sequence(inst, &counts)
}

/// Materializes a count matrix as a sequence: each item's copies go to its
/// owners in agent order, one copy per round.
pub(crate) fn counts_to_sequence(inst: &Instance, counts: &CountMatrix) -> Result<Sequence, Error> {
    let k = counts.k();
    let mut rounds_owners = vec![vec![0usize; inst.m()]; k as usize];
    #[allow(clippy::needless_range_loop)] // o walks a column across all round rows
    for o in 0..inst.m() {
        let mut round = 0usize;
        for agent in 0..inst.n() {
            for _ in 0..counts.count(agent, o) {
                rounds_owners[round][o] = agent;
                round += 1;
            }
        }
    }
    let rounds = rounds_owners
        .into_iter()
        .map(|owners| Allocation::new(inst.n(), owners))
        .collect::<Result<Vec<_>, _>>()?;
    Sequence::new(rounds)
}

/// Searches every sequence of `k` rounds for one meeting all requested
/// axioms, or certifies that none exists.
///
/// Rounds are drawn from the allocations passing every per-round axiom
/// (sequences are unordered for overall axioms and pointwise for per-round
/// ones, so multisets of rounds cover the space).  Item columns on which
/// every agent has zero utility are pinned to agent 0: they change no
/// verdict.  The budget counts candidate sequences plus the nodes of any
/// Pareto subsearches.
pub fn exhaustive_search(
    inst: &Instance,
    k: u64,
    targets: &[(Axiom, Scope)],
    budget: &SearchBudget,
) -> Result<SearchOutcome, Error> {
    if k == 0 {
        return Err(Error::EmptySequence);
    }
    for &(axiom, scope) in targets {
        if scope == Scope::Overall
            && matches!(
                axiom,
                Axiom::Ef1 | Axiom::WeakEf1 | Axiom::Prop1 | Axiom::Prop11
            )
        {
            return Err(Error::UnsupportedScope {
                axiom: axiom.to_string(),
                scope: scope.to_string(),
            });
        }
    }
    let mut meter = budget.meter();

    // Enumerate candidate rounds in ascending owner-vector order, keeping
    // those that satisfy every per-round axiom.
    let per_round: Vec<Axiom> = targets
        .iter()
        .filter(|(_, s)| *s == Scope::PerRound)
        .map(|&(a, _)| a)
        .collect();
    let movable: Vec<usize> = (0..inst.m())
        .filter(|&o| inst.class_of(o) != ItemClass::ObjectiveNull)
        .collect();
    let mut rounds: Vec<Allocation> = Vec::new();
    let mut owners = vec![0usize; inst.m()];
    'next: loop {
        let alloc = Allocation::new(inst.n(), owners.clone())?;
        let mut keep = true;
        for axiom in &per_round {
            let verdict = match axiom {
                Axiom::Ef => check_ef(inst, &alloc.counts())?,
                Axiom::Prop => check_prop(inst, &alloc.counts())?,
                Axiom::Ef1 => crate::axioms::check_ef1(inst, &alloc)?,
                Axiom::WeakEf1 => crate::axioms::check_weak_ef1(inst, &alloc)?,
                Axiom::Prop1 => crate::axioms::check_prop1(inst, &alloc)?,
                Axiom::Prop11 => crate::axioms::check_prop11(inst, &alloc)?,
                Axiom::Po => check_po_round_metered(inst, &alloc, &mut meter)?,
            };
            if !verdict.holds {
                keep = false;
                break;
            }
        }
        if keep {
            rounds.push(alloc);
        }
        // Advance the odometer over the movable items, last item fastest.
        for &o in movable.iter().rev() {
            owners[o] += 1;
            if owners[o] < inst.n() {
                continue 'next;
            }
            owners[o] = 0;
        }
        break;
    }
    if rounds.is_empty() {
        return Ok(SearchOutcome::CertifiedNone);
    }

    // Overall axioms, cheapest first so Pareto subsearches run last.
    let mut overall: Vec<Axiom> = targets
        .iter()
        .filter(|(_, s)| *s == Scope::Overall)
        .map(|&(a, _)| a)
        .collect();
    overall.sort_by_key(|a| matches!(a, Axiom::Po));

    let k_len = usize::try_from(k).map_err(|_| Error::BudgetExhausted { nodes: 0 })?;
    let mut counts = vec![vec![0u64; inst.m()]; inst.n()];
    let mut chosen = Vec::with_capacity(k_len);
    let found = multiset_dfs(
        inst,
        &rounds,
        &overall,
        k,
        k_len,
        0,
        &mut chosen,
        &mut counts,
        &mut meter,
    )?;
    Ok(match found {
        Some(seq) => SearchOutcome::Found(seq),
        None => SearchOutcome::CertifiedNone,
    })
}

// Enumerates multisets of round indices in ascending lexicographic order.
#[allow(clippy::too_many_arguments)]
fn multiset_dfs(
    inst: &Instance,
    rounds: &[Allocation],
    overall: &[Axiom],
    k: u64,
    k_len: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    counts: &mut Vec<Vec<u64>>,
    meter: &mut BudgetMeter,
) -> Result<Option<Sequence>, Error> {
    if chosen.len() == k_len {
        meter.tick()?;
        let cm = CountMatrix::new(k, counts.clone())?;
        for axiom in overall {
            let verdict = match axiom {
                Axiom::Ef => check_ef(inst, &cm)?,
                Axiom::Prop => check_prop(inst, &cm)?,
                Axiom::Po => check_po_overall_metered(inst, &cm, meter)?,
                _ => unreachable!("unsupported overall axioms are rejected up front"),
            };
            if !verdict.holds {
                return Ok(None);
            }
        }
        let seq = Sequence::new(chosen.iter().map(|&i| rounds[i].clone()).collect())?;
        return Ok(Some(seq));
    }
    for idx in start..rounds.len() {
        chosen.push(idx);
        for (o, &agent) in rounds[idx].owners().iter().enumerate() {
            counts[agent][o] += 1;
        }
        let found = multiset_dfs(inst, rounds, overall, k, k_len, idx, chosen, counts, meter)?;
        for (o, &agent) in rounds[idx].owners().iter().enumerate() {
            counts[agent][o] -= 1;
        }
        chosen.pop();
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::evaluate;
    use crate::rational::{rat, rat_int};

    fn inst(rows: Vec<Vec<i64>>) -> Instance {
        Instance::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(rat_int).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn rotation_gives_exact_shares() {
        let inst = inst(vec![vec![4, 5], vec![3, 9]]);
        let initial = Allocation::new(2, vec![0, 1]).unwrap();
        let seq = rotation_sequence(&inst, &initial, 4).unwrap();
        assert_eq!(seq.round(0).owners(), &[0, 1]);
        assert_eq!(seq.round(1).owners(), &[1, 0]);
        assert_eq!(seq.round(2).owners(), &[0, 1]);
        let overall = seq.overall();
        for i in 0..2 {
            assert_eq!(overall.row_value(&inst, i, i), inst.share(i, 4));
        }
        assert!(matches!(
            rotation_sequence(&inst, &initial, 3),
            Err(Error::RoundsNotMultiple { k: 3, n: 2 })
        ));
    }

    #[test]
    fn prop_po_solver_matches_the_three_agent_optimum() {
        // Two agents value (1, 2), the third (1, 1): the welfare optimum
        // under proportional floors has utilities (4, 3, 2).
        let inst = inst(vec![vec![1, 2], vec![1, 2], vec![1, 1]]);
        let seq = solve_prop_po(&inst, 3, &SearchBudget::default()).unwrap();
        let overall = seq.overall();
        assert_eq!(overall.row(0), &[0, 2]);
        assert_eq!(overall.row(1), &[1, 1]);
        assert_eq!(overall.row(2), &[2, 0]);
        let report = evaluate(
            &inst,
            &seq,
            &[(Axiom::Prop, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert!(report.all_hold());
    }

    #[test]
    fn prop_po_solver_requires_divisible_rounds() {
        let inst = inst(vec![vec![1, 4], vec![1, 4]]);
        assert!(matches!(
            solve_prop_po(&inst, 3, &SearchBudget::default()),
            Err(Error::RoundsNotMultiple { k: 3, n: 2 })
        ));
    }

    #[test]
    fn search_finds_the_envy_free_pareto_pair() {
        let inst = inst(vec![vec![4, 5], vec![3, 9]]);
        let outcome = exhaustive_search(
            &inst,
            2,
            &[(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        let SearchOutcome::Found(seq) = outcome else {
            panic!("a sequence exists");
        };
        let report = evaluate(
            &inst,
            &seq,
            &[(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert!(report.all_hold());
        // The enumeration is deterministic: the first qualifying multiset
        // pairs the all-to-one rounds, which average out to equal counts.
        assert_eq!(seq.round(0).owners(), &[0, 0]);
        assert_eq!(seq.round(1).owners(), &[1, 1]);
    }

    #[test]
    fn search_certifies_proportionality_gaps() {
        // Shares of 15/2 cannot be hit by integer bundles over three
        // rounds, so overall proportionality is impossible.
        let inst = inst(vec![vec![1, 4], vec![1, 4]]);
        let outcome = exhaustive_search(
            &inst,
            3,
            &[(Axiom::Prop, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(outcome, SearchOutcome::CertifiedNone);
    }

    #[test]
    fn search_certifies_chore_conflicts() {
        // Three agents, two chores: envy-freeness and Pareto optimality
        // cannot be combined over three rounds.
        let inst1 = inst(vec![vec![-1, -3], vec![-1, -3], vec![-1, -1]]);
        let outcome = exhaustive_search(
            &inst1,
            3,
            &[(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(outcome, SearchOutcome::CertifiedNone);

        // The same holds with two identical agents and a third indifferent
        // one over two goods.
        let inst2 = inst(vec![vec![1, 2], vec![1, 2], vec![1, 1]]);
        let outcome = exhaustive_search(
            &inst2,
            3,
            &[(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(outcome, SearchOutcome::CertifiedNone);
    }

    #[test]
    fn per_round_filters_prune_the_candidate_rounds() {
        // Per-round envy-freeness with two identical agents and one item
        // is impossible, whatever the horizon.
        let inst = inst(vec![vec![1], vec![1]]);
        let outcome = exhaustive_search(
            &inst,
            2,
            &[(Axiom::Ef, Scope::PerRound)],
            &SearchBudget::default(),
        )
        .unwrap();
        assert_eq!(outcome, SearchOutcome::CertifiedNone);
    }

    #[test]
    fn search_budget_exhaustion_is_an_error() {
        let inst = inst(vec![vec![1, 2, 3], vec![3, 2, 1]]);
        let result = exhaustive_search(
            &inst,
            4,
            &[(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            &SearchBudget::nodes(3),
        );
        assert!(matches!(result, Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn share_floor_example_has_fractional_share() {
        let inst = inst(vec![vec![1, 4], vec![1, 4]]);
        assert_eq!(inst.share(0, 3), rat(15, 2));
    }
}
