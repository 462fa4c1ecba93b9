//! Command-line surface for the repeated fair-division toolkit.
//!
//! Verbs: `check` verifies axioms on a given allocation sequence, `solve`
//! builds a sequence for a named goal and re-verifies it before reporting
//! success, `oracle` exhaustively searches all sequences for a predicate
//! and can certify nonexistence, `gen` produces pseudo-random utility
//! profiles, `decompose` rounds a fractional allocation into a lottery
//! and a repeated sequence, and `repro-paper` re-runs the bundled worked
//! examples against their published outcomes.
//!
//! Exit codes: 0 — the checked property holds or a solution was found and
//! verified; 1 — the property fails, or the search proved no solution
//! exists; 2 — malformed input or an unmet precondition; 3 — the search
//! budget ran out, which is explicitly *not* a nonexistence certificate.

mod files;
mod predicate;
mod repro;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use files::{DecompositionFile, FractionalFile, InstanceFile, SequenceFile};
use repfair::axioms::{self, Axiom, Scope, ScopedVerdict, Witness};
use repfair::exactlp::check_po_fractional;
use repfair::solvers_general::{exhaustive_search, solve_prop_po, SearchOutcome};
use repfair::solvers_two::{
    refine_ef1_k2, refine_weak_ef1, solve_ef_perround_ef1, solve_ef_po_two,
};
use repfair::variable_k::solve_variable_k;
use repfair::{rat_u, render_rational, Error, Instance, Rational, SearchBudget, Sequence};

/// Environment variable overriding the default node budget of searches.
const BUDGET_ENV: &str = "REPFAIR_BUDGET_NODES";

#[derive(Parser)]
#[command(
    name = "repfair",
    version,
    about = "Exact solvers and checkers for repeated allocation of indivisible items"
)]
struct Cli {
    /// Worker threads the solvers may use; results never depend on it.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check axioms against an instance and an allocation sequence.
    Check {
        /// Path to the instance file.
        #[arg(long)]
        instance: PathBuf,
        /// Path to the sequence file.
        #[arg(long)]
        sequence: PathBuf,
        /// Conjunction such as "ef & po & ef1:per-round".
        #[arg(long)]
        axioms: String,
        /// Default scope for conjuncts without an explicit one.
        #[arg(long, value_enum, default_value_t = ScopeArg::Overall)]
        scope: ScopeArg,
    },
    /// Build a sequence for a named goal and re-verify it.
    Solve {
        /// Path to the instance file.
        #[arg(long)]
        instance: PathBuf,
        /// What the sequence must satisfy.
        #[arg(long, value_enum)]
        goal: Goal,
        /// Number of rounds; fixed-horizon goals require it, the
        /// variable-horizon goal forbids it.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        rounds: Option<u64>,
        /// Write the sequence file here instead of standard output.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Exhaustively search all sequences of a given length for a
    /// predicate; exit 1 with CERTIFIED-NONE when none exists.
    Oracle {
        /// Path to the instance file.
        #[arg(long)]
        instance: PathBuf,
        /// Number of rounds to search over.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        rounds: u64,
        /// Conjunction such as "ef & po & ef1:per-round"; bare axiom
        /// names mean overall scope.
        #[arg(long)]
        predicate: String,
        /// Write the found sequence here instead of standard output.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Generate a pseudo-random utility profile, reproducible per seed.
    Gen {
        /// Number of agents.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        agents: u64,
        /// Number of items.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        items: u64,
        /// Seed for the generator; equal seeds give equal files.
        #[arg(long)]
        seed: u64,
        /// Whether utilities are all positive, all negative, or anything.
        #[arg(long, value_enum, default_value_t = Mode::Mixed)]
        mode: Mode,
        /// Largest absolute numerator drawn.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
        max_abs: u64,
        /// Largest denominator drawn; 1 keeps utilities integral.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        max_denominator: u64,
        /// Write the instance file here instead of standard output.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Round a fractional allocation into a lottery over whole
    /// allocations and a repeated sequence implementing it exactly.
    Decompose {
        /// Path to the instance file.
        #[arg(long)]
        instance: PathBuf,
        /// Fractional allocation to round; built internally for two
        /// agents when omitted.  Must be efficient and envy-free.
        #[arg(long)]
        allocation: Option<PathBuf>,
        /// Write the decomposition file here instead of standard output.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Re-run the bundled worked examples and check their published
    /// outcomes.
    ReproPaper,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    Overall,
    PerRound,
}

impl From<ScopeArg> for Scope {
    fn from(value: ScopeArg) -> Scope {
        match value {
            ScopeArg::Overall => Scope::Overall,
            ScopeArg::PerRound => Scope::PerRound,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Goal {
    /// Proportional and efficient overall; rounds must divide by the
    /// number of agents.
    #[value(name = "prop-po")]
    PropPo,
    /// Envy-free and efficient overall for two agents over an even
    /// horizon.
    #[value(name = "ef-po-2")]
    EfPo2,
    /// Envy-free and efficient overall, plus each of the two rounds
    /// envy-free up to one item; two agents, exactly two rounds.
    #[value(name = "ef-po-ef1-2x2")]
    EfPoEf12x2,
    /// Envy-free and efficient overall, plus every round envy-free up to
    /// one transfer; two agents, even horizon.
    #[value(name = "weak-ef1-2")]
    WeakEf12,
    /// Envy-free overall and every round envy-free up to one item,
    /// without the efficiency guarantee; two agents, even horizon.
    #[value(name = "ef-ef1-2")]
    EfEf12,
    /// Let the solver pick the horizon: overall outcome matches an
    /// efficient envy-free fractional allocation exactly, and every
    /// round is proportional up to one removal and one addition.
    #[value(name = "variable-k")]
    VariableK,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Goods,
    Chores,
    Mixed,
}

/// A command failure: what to print and which exit code it carries.
enum Failure {
    /// Malformed input or an unmet precondition (exit 2).
    Input(String),
    /// The search budget ran out (exit 3).
    Budget(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Failure {
        match &err {
            Error::BudgetExhausted { .. } => Failure::Budget(format!(
                "{err}; raise {BUDGET_ENV} to search further — exhaustion is not a \
                 nonexistence certificate"
            )),
            _ => Failure::Input(err.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(msg: String) -> Failure {
        Failure::Input(msg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Check {
            instance,
            sequence,
            axioms,
            scope,
        } => cmd_check(&instance, &sequence, &axioms, scope.into()),
        Command::Solve {
            instance,
            goal,
            rounds,
            output,
        } => cmd_solve(&instance, goal, rounds, output.as_deref()),
        Command::Oracle {
            instance,
            rounds,
            predicate,
            output,
        } => cmd_oracle(&instance, rounds, &predicate, output.as_deref()),
        Command::Gen {
            agents,
            items,
            seed,
            mode,
            max_abs,
            max_denominator,
            output,
        } => cmd_gen(
            agents,
            items,
            seed,
            mode,
            max_abs,
            max_denominator,
            output.as_deref(),
        ),
        Command::Decompose {
            instance,
            allocation,
            output,
        } => cmd_decompose(&instance, allocation.as_deref(), output.as_deref()),
        Command::ReproPaper => cmd_repro(),
    }
}

/// Reads the search budget, honoring the `REPFAIR_BUDGET_NODES` override.
fn budget_from_env() -> Result<SearchBudget, Failure> {
    match std::env::var(BUDGET_ENV) {
        Ok(raw) => {
            let nodes: u64 = raw.parse().map_err(|_| {
                Failure::Input(format!(
                    "{BUDGET_ENV} must be a positive integer, got {raw:?}"
                ))
            })?;
            if nodes == 0 {
                return Err(Failure::Input(format!(
                    "{BUDGET_ENV} must be a positive integer, got 0"
                )));
            }
            Ok(SearchBudget::nodes(nodes))
        }
        Err(std::env::VarError::NotPresent) => Ok(SearchBudget::default()),
        Err(e) => Err(Failure::Input(format!("cannot read {BUDGET_ENV}: {e}"))),
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let file: InstanceFile = files::read_json(path)?;
    Ok(file.to_instance()?)
}

/// Writes `text` to `path`, or to standard output when no path is given.
fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt_utilities(values: &[Rational]) -> String {
    let parts: Vec<String> = values.iter().map(render_rational).collect();
    format!("({})", parts.join(", "))
}

/// Renders a failing check's evidence for humans; every witness is
/// re-checkable from the data printed here.
fn witness_text(inst: &Instance, witness: Option<&Witness>) -> String {
    let Some(witness) = witness else {
        return "no witness recorded".into();
    };
    match witness {
        Witness::Envy { envious, envied } => format!(
            "agent {} envies agent {}",
            inst.agents()[*envious],
            inst.agents()[*envied]
        ),
        Witness::Shortfall { agent, shortfall } => format!(
            "agent {} misses its share by {}",
            inst.agents()[*agent],
            render_rational(shortfall)
        ),
        Witness::DominatedRound(alloc) => {
            let map = files::round_map(inst, alloc);
            let json = serde_json::to_string(&map).expect("round maps serialize");
            format!("dominated by the round {json}")
        }
        Witness::Dominated(counts) => {
            let rows: Vec<Vec<u64>> = (0..counts.n()).map(|i| counts.row(i).to_vec()).collect();
            format!(
                "dominated by counts {:?} with utilities {}",
                rows,
                fmt_utilities(&counts.utility_vector(inst))
            )
        }
        Witness::DominatedFractional(x) => {
            let rows: Vec<Vec<String>> = (0..x.n())
                .map(|i| x.share_row(i).iter().map(render_rational).collect())
                .collect();
            format!("dominated by the fractional shares {rows:?}")
        }
    }
}

fn cmd_check(
    instance: &Path,
    sequence: &Path,
    axioms_text: &str,
    default_scope: Scope,
) -> Result<u8, Failure> {
    let inst = load_instance(instance)?;
    let seq_file: SequenceFile = files::read_json(sequence)?;
    let seq = seq_file.to_sequence(&inst)?;
    let targets = predicate::parse_predicate(axioms_text, default_scope)?;
    let budget = budget_from_env()?;
    let report = axioms::evaluate(&inst, &seq, &targets, &budget)?;
    for entry in &report.entries {
        match &entry.result {
            ScopedVerdict::Overall(v) if v.holds => {
                println!("{} {}: holds", entry.axiom, entry.scope);
            }
            ScopedVerdict::Overall(v) => {
                println!(
                    "{} {}: fails — {}",
                    entry.axiom,
                    entry.scope,
                    witness_text(&inst, v.witness.as_ref())
                );
            }
            ScopedVerdict::PerRound(rounds) => match rounds.iter().position(|v| !v.holds) {
                None => println!(
                    "{} {}: holds in all {} rounds",
                    entry.axiom,
                    entry.scope,
                    rounds.len()
                ),
                Some(r) => println!(
                    "{} {}: fails in round {} — {}",
                    entry.axiom,
                    entry.scope,
                    r + 1,
                    witness_text(&inst, rounds[r].witness.as_ref())
                ),
            },
        }
    }
    Ok(if report.all_hold() { 0 } else { 1 })
}

fn need_rounds(rounds: Option<u64>) -> Result<u64, Failure> {
    rounds.ok_or_else(|| Failure::Input("--rounds is required for this goal".into()))
}

fn cmd_solve(
    instance: &Path,
    goal: Goal,
    rounds: Option<u64>,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let inst = load_instance(instance)?;
    let budget = budget_from_env()?;
    let (seq, targets): (Sequence, Vec<(Axiom, Scope)>) = match goal {
        Goal::PropPo => {
            let k = need_rounds(rounds)?;
            let seq = solve_prop_po(&inst, k, &budget)?;
            (
                seq,
                vec![(Axiom::Prop, Scope::Overall), (Axiom::Po, Scope::Overall)],
            )
        }
        Goal::EfPo2 => {
            let k = need_rounds(rounds)?;
            let seq = solve_ef_po_two(&inst, k, &budget)?;
            (
                seq,
                vec![(Axiom::Ef, Scope::Overall), (Axiom::Po, Scope::Overall)],
            )
        }
        Goal::EfPoEf12x2 => {
            let k = rounds.unwrap_or(2);
            if k != 2 {
                return Err(Failure::Input(format!(
                    "this goal is defined for exactly two rounds, got {k}"
                )));
            }
            let base = solve_ef_po_two(&inst, 2, &budget)?;
            let seq = refine_ef1_k2(&inst, &base, &budget)?;
            (
                seq,
                vec![
                    (Axiom::Ef, Scope::Overall),
                    (Axiom::Po, Scope::Overall),
                    (Axiom::Ef1, Scope::PerRound),
                ],
            )
        }
        Goal::WeakEf12 => {
            let k = need_rounds(rounds)?;
            let base = solve_ef_po_two(&inst, k, &budget)?;
            let seq = refine_weak_ef1(&inst, &base, &budget)?;
            (
                seq,
                vec![
                    (Axiom::Ef, Scope::Overall),
                    (Axiom::Po, Scope::Overall),
                    (Axiom::WeakEf1, Scope::PerRound),
                ],
            )
        }
        Goal::EfEf12 => {
            let k = need_rounds(rounds)?;
            let seq = solve_ef_perround_ef1(&inst, k)?;
            (
                seq,
                vec![(Axiom::Ef, Scope::Overall), (Axiom::Ef1, Scope::PerRound)],
            )
        }
        Goal::VariableK => {
            if rounds.is_some() {
                return Err(Failure::Input(
                    "the variable-horizon goal chooses its own round count; drop --rounds".into(),
                ));
            }
            let sol = solve_variable_k(&inst, None)?;
            // Overall efficiency follows from the certified fractional
            // target, so re-verify that certificate and the exact match
            // between the accumulated counts and the target.
            if !check_po_fractional(&inst, &sol.fractional)?.holds {
                return Err(Failure::Input(
                    "internal error: the fractional target failed re-verification".into(),
                ));
            }
            let counts = sol.sequence.overall();
            let k = rat_u(sol.sequence.k());
            for i in 0..inst.n() {
                for o in 0..inst.m() {
                    if rat_u(counts.count(i, o)) != sol.fractional.share(i, o) * &k {
                        return Err(Failure::Input(
                            "internal error: the sequence does not implement the fractional \
                             target exactly"
                                .into(),
                        ));
                    }
                }
            }
            (
                sol.sequence,
                vec![
                    (Axiom::Ef, Scope::Overall),
                    (Axiom::Prop11, Scope::PerRound),
                ],
            )
        }
    };
    let report = axioms::evaluate(&inst, &seq, &targets, &budget)?;
    if !report.all_hold() {
        return Err(Failure::Input(
            "internal error: the solution failed re-verification".into(),
        ));
    }
    let verified: Vec<String> = targets.iter().map(|(a, s)| format!("{a} {s}")).collect();
    eprintln!("rounds: {}; verified: {}", seq.k(), verified.join(", "));
    let file = SequenceFile::from_sequence(&inst, &seq);
    emit(output, &files::to_pretty_json(&file))?;
    Ok(0)
}

fn cmd_oracle(
    instance: &Path,
    rounds: u64,
    predicate_text: &str,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let inst = load_instance(instance)?;
    let targets = predicate::parse_predicate(predicate_text, Scope::Overall)?;
    let budget = budget_from_env()?;
    match exhaustive_search(&inst, rounds, &targets, &budget)? {
        SearchOutcome::Found(seq) => {
            let report = axioms::evaluate(&inst, &seq, &targets, &budget)?;
            if !report.all_hold() {
                return Err(Failure::Input(
                    "internal error: the found sequence failed re-verification".into(),
                ));
            }
            eprintln!("found a sequence satisfying {predicate_text}");
            let file = SequenceFile::from_sequence(&inst, &seq);
            emit(output, &files::to_pretty_json(&file))?;
            Ok(0)
        }
        SearchOutcome::CertifiedNone => {
            println!("CERTIFIED-NONE");
            Ok(1)
        }
    }
}

fn cmd_gen(
    agents: u64,
    items: u64,
    seed: u64,
    mode: Mode,
    max_abs: u64,
    max_denominator: u64,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let top = max_abs as i64;
    let mut utilities = Vec::with_capacity(agents as usize);
    for _ in 0..agents {
        let mut row = Vec::with_capacity(items as usize);
        for _ in 0..items {
            let numerator = match mode {
                Mode::Goods => rng.gen_range(1..=top),
                Mode::Chores => rng.gen_range(-top..=-1),
                Mode::Mixed => rng.gen_range(-top..=top),
            };
            let denominator = rng.gen_range(1..=max_denominator as i64);
            row.push(repfair::rat(numerator, denominator));
        }
        utilities.push(row);
    }
    let inst = Instance::new(
        (1..=agents).map(|i| format!("a{i}")).collect(),
        (1..=items).map(|o| format!("o{o}")).collect(),
        utilities,
    )?;
    let file = InstanceFile::from_instance(&inst);
    emit(output, &files::to_pretty_json(&file))?;
    Ok(0)
}

fn cmd_decompose(
    instance: &Path,
    allocation: Option<&Path>,
    output: Option<&Path>,
) -> Result<u8, Failure> {
    let inst = load_instance(instance)?;
    let supplied = match allocation {
        Some(path) => {
            let file: FractionalFile = files::read_json(path)?;
            Some(file.to_allocation()?)
        }
        None => None,
    };
    let sol = solve_variable_k(&inst, supplied.as_ref())?;
    eprintln!(
        "lottery of {} outcomes over {} rounds",
        sol.lottery.outcomes().len(),
        sol.sequence.k()
    );
    let file = DecompositionFile::from_solution(&inst, &sol);
    emit(output, &files::to_pretty_json(&file))?;
    Ok(0)
}

fn cmd_repro() -> Result<u8, Failure> {
    let budget = budget_from_env()?;
    let mut all_ok = true;
    for case in repro::cases() {
        match (case.run)(&budget) {
            Ok(detail) => println!("ok: {} — {detail}", case.label),
            Err(mismatch) => {
                all_ok = false;
                println!("MISMATCH: {} — {mismatch}", case.label);
            }
        }
    }
    Ok(if all_ok { 0 } else { 1 })
}
