//! Bundled worked examples and the published outcomes they must hit.
//!
//! Each case rebuilds a small utility profile from scratch, runs the
//! relevant solver or exhaustive search, and compares the result against
//! the outcome stated for it: exact utility vectors, certified
//! nonexistence, or the shape of a rounding.  A mismatch in any case is a
//! regression, not a tolerance question — everything here is exact.

use repfair::axioms::{self, Axiom, Scope, Witness};
use repfair::solvers_general::{exhaustive_search, solve_prop_po, SearchOutcome};
use repfair::variable_k::{solve_variable_k, FractionalAllocation};
use repfair::{
    rat, rat_int, render_rational, Allocation, CountMatrix, Error, Instance, Rational,
    SearchBudget, Sequence,
};

/// One reproducible worked example.
pub struct ReproCase {
    pub label: &'static str,
    pub run: fn(&SearchBudget) -> Result<String, String>,
}

/// All bundled cases, in presentation order.
pub fn cases() -> Vec<ReproCase> {
    vec![
        ReproCase {
            label: "two agents, two goods: per-round efficiency is not overall efficiency",
            run: intro_two_agent,
        },
        ReproCase {
            label: "three agents, two goods: no overall envy-free and efficient triple",
            run: goods_trio,
        },
        ReproCase {
            label: "three agents, two chores: no overall envy-free and efficient triple",
            run: chores_trio,
        },
        ReproCase {
            label: "identical agents, odd horizon: no proportional split",
            run: proportionality_ceiling,
        },
        ReproCase {
            label: "two agents, four rounds: per-round EF1 clashes with efficiency",
            run: perround_relaxation,
        },
        ReproCase {
            label: "two agents, three goods: fractional target rounds into twelfths",
            run: fractional_rounding,
        },
    ]
}

fn err_text(e: Error) -> String {
    format!("unexpected error: {e}")
}

fn fmt_utilities(values: &[Rational]) -> String {
    let parts: Vec<String> = values.iter().map(render_rational).collect();
    format!("({})", parts.join(", "))
}

fn expect_utilities(
    inst: &Instance,
    counts: &CountMatrix,
    expected: &[Rational],
) -> Result<(), String> {
    let got = counts.utility_vector(inst);
    if got == expected {
        Ok(())
    } else {
        Err(format!(
            "expected overall utilities {}, got {}",
            fmt_utilities(expected),
            fmt_utilities(&got)
        ))
    }
}

fn intro_two_agent(budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat_int(4), rat_int(5)],
        vec![rat_int(3), rat_int(9)],
    ])
    .map_err(err_text)?;
    // Two rounds of everything to the first agent, then two to the second.
    let seq = Sequence::new(vec![
        Allocation::new(2, vec![0, 0]).map_err(err_text)?,
        Allocation::new(2, vec![0, 0]).map_err(err_text)?,
        Allocation::new(2, vec![1, 1]).map_err(err_text)?,
        Allocation::new(2, vec![1, 1]).map_err(err_text)?,
    ])
    .map_err(err_text)?;
    expect_utilities(&inst, &seq.overall(), &[rat_int(18), rat_int(24)])?;
    for (r, alloc) in seq.rounds().iter().enumerate() {
        let verdict = axioms::check_po_round(&inst, alloc, budget).map_err(err_text)?;
        if !verdict.holds {
            return Err(format!("round {} should be efficient on its own", r + 1));
        }
    }
    let overall = axioms::check_po_overall(&inst, &seq.overall(), budget).map_err(err_text)?;
    if overall.holds {
        return Err("the whole-bundle schedule should not be efficient overall".into());
    }
    let Some(Witness::Dominated(better)) = overall.witness else {
        return Err("the overall efficiency check should name a dominating schedule".into());
    };
    let stated = CountMatrix::new(4, vec![vec![4, 1], vec![0, 3]]).map_err(err_text)?;
    if better != stated {
        return Err(format!(
            "expected the dominating counts [[4, 1], [0, 3]], got {:?}",
            (0..better.n())
                .map(|i| better.row(i).to_vec())
                .collect::<Vec<_>>()
        ));
    }
    expect_utilities(&inst, &better, &[rat_int(21), rat_int(27)])?;
    Ok("utilities (18, 24) improve to (21, 27)".into())
}

fn goods_trio(budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat_int(1), rat_int(2)],
        vec![rat_int(1), rat_int(2)],
        vec![rat_int(1), rat_int(1)],
    ])
    .map_err(err_text)?;
    let targets = [(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)];
    match exhaustive_search(&inst, 3, &targets, budget).map_err(err_text)? {
        SearchOutcome::Found(_) => {
            return Err("no sequence should be envy-free and efficient overall".into())
        }
        SearchOutcome::CertifiedNone => {}
    }
    let seq = solve_prop_po(&inst, 3, budget).map_err(err_text)?;
    expect_utilities(&inst, &seq.overall(), &[rat_int(4), rat_int(3), rat_int(2)])?;
    Ok("nonexistence certified; proportional optimum reaches (4, 3, 2)".into())
}

fn chores_trio(budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat_int(-1), rat_int(-3)],
        vec![rat_int(-1), rat_int(-3)],
        vec![rat_int(-1), rat_int(-1)],
    ])
    .map_err(err_text)?;
    let targets = [(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)];
    match exhaustive_search(&inst, 3, &targets, budget).map_err(err_text)? {
        SearchOutcome::Found(_) => {
            Err("no sequence should be envy-free and efficient overall".into())
        }
        SearchOutcome::CertifiedNone => Ok("nonexistence certified".into()),
    }
}

fn proportionality_ceiling(budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat_int(1), rat_int(4)],
        vec![rat_int(1), rat_int(4)],
    ])
    .map_err(err_text)?;
    let targets = [(Axiom::Prop, Scope::Overall)];
    match exhaustive_search(&inst, 3, &targets, budget).map_err(err_text)? {
        SearchOutcome::Found(_) => Err("no three-round sequence should be proportional".into()),
        SearchOutcome::CertifiedNone => Ok("nonexistence certified".into()),
    }
}

fn perround_relaxation(budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat_int(1), rat_int(3)],
        vec![rat_int(1), rat_int(2)],
    ])
    .map_err(err_text)?;
    let all_three = [
        (Axiom::Ef, Scope::Overall),
        (Axiom::Po, Scope::Overall),
        (Axiom::Ef1, Scope::PerRound),
    ];
    match exhaustive_search(&inst, 4, &all_three, budget).map_err(err_text)? {
        SearchOutcome::Found(_) => {
            return Err(
                "no sequence should combine overall envy-freeness, overall efficiency \
                 and per-round one-item tolerance"
                    .into(),
            )
        }
        SearchOutcome::CertifiedNone => {}
    }
    let two_of_three = [(Axiom::Ef, Scope::Overall), (Axiom::Ef1, Scope::PerRound)];
    match exhaustive_search(&inst, 4, &two_of_three, budget).map_err(err_text)? {
        SearchOutcome::Found(_) => {}
        SearchOutcome::CertifiedNone => {
            return Err("dropping efficiency should make the search succeed".into())
        }
    }
    // The schedule that beats every envy-free candidate: the first agent
    // takes the second item three times and sits out once.
    let dominating = Sequence::new(vec![
        Allocation::new(2, vec![1, 0]).map_err(err_text)?,
        Allocation::new(2, vec![1, 0]).map_err(err_text)?,
        Allocation::new(2, vec![1, 0]).map_err(err_text)?,
        Allocation::new(2, vec![1, 1]).map_err(err_text)?,
    ])
    .map_err(err_text)?;
    expect_utilities(&inst, &dominating.overall(), &[rat_int(9), rat_int(6)])?;
    Ok("nonexistence certified; the blocking schedule reaches (9, 6)".into())
}

fn fractional_rounding(_budget: &SearchBudget) -> Result<String, String> {
    let inst = Instance::from_rows(vec![
        vec![rat(9, 2), rat_int(3), rat_int(7)],
        vec![rat_int(9), rat_int(5), rat_int(10)],
    ])
    .map_err(err_text)?;
    let x = FractionalAllocation::new(vec![
        vec![rat_int(0), rat(1, 12), rat_int(1)],
        vec![rat_int(1), rat(11, 12), rat_int(0)],
    ])
    .map_err(err_text)?;
    let sol = solve_variable_k(&inst, Some(&x)).map_err(err_text)?;
    if sol.sequence.k() != 12 {
        return Err(format!("expected 12 rounds, got {}", sol.sequence.k()));
    }
    expect_utilities(&inst, &sol.sequence.overall(), &[rat_int(87), rat_int(163)])?;
    let mut probabilities: Vec<Rational> = sol
        .lottery
        .outcomes()
        .iter()
        .map(|(_, p)| p.clone())
        .collect();
    probabilities.sort();
    if probabilities != vec![rat(1, 12), rat(11, 12)] {
        let parts: Vec<String> = probabilities.iter().map(render_rational).collect();
        return Err(format!(
            "expected lottery weights 1/12 and 11/12, got [{}]",
            parts.join(", ")
        ));
    }
    Ok("twelve rounds implement the target exactly, utilities (87, 163)".into())
}
