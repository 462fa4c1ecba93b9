//! End-to-end tests of the `repfair` binary: exit codes, file formats,
//! verification output, and determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use repfair::axioms::{evaluate, Axiom, Scope};
use repfair::{parse_rational, SearchBudget};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_repfair"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("test file writes");
    path
}

const INTRO_INSTANCE: &str = r#"{"agents": ["a1", "a2"], "items": ["o1", "o2"],
 "utilities": [["4", "5"], ["3", "9"]]}"#;

const INTRO_SEQUENCE: &str = r#"{"rounds": [
  {"a1": ["o1", "o2"], "a2": []},
  {"a1": ["o1", "o2"], "a2": []},
  {"a1": [], "a2": ["o1", "o2"]},
  {"a1": [], "a2": ["o1", "o2"]}
]}"#;

const TRIO_INSTANCE: &str = r#"{"agents": ["a1", "a2", "a3"], "items": ["o1", "o2"],
 "utilities": [["1", "2"], ["1", "2"], ["1", "1"]]}"#;

const RELAX_INSTANCE: &str = r#"{"agents": ["a1", "a2"], "items": ["o1", "o2"],
 "utilities": [["1", "3"], ["1", "2"]]}"#;

#[test]
fn check_distinguishes_per_round_from_overall_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", INTRO_INSTANCE);
    let seq = write(dir.path(), "seq.json", INTRO_SEQUENCE);

    let per_round = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
        "--axioms",
        "po",
        "--scope",
        "per-round",
    ]);
    assert_eq!(code(&per_round), 0, "{}", stderr(&per_round));
    assert!(stdout(&per_round).contains("holds in all 4 rounds"));

    let overall = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
        "--axioms",
        "po",
        "--scope",
        "overall",
    ]);
    assert_eq!(code(&overall), 1);
    let text = stdout(&overall);
    assert!(text.contains("fails"), "missing verdict in {text}");
    assert!(
        text.contains("[[4, 1], [0, 3]]") && text.contains("(21, 27)"),
        "missing witness in {text}"
    );
}

#[test]
fn check_rejects_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", INTRO_INSTANCE);
    let seq = write(dir.path(), "seq.json", INTRO_SEQUENCE);
    let broken = write(dir.path(), "broken.json", "{\"agents\": [\"a1\",");

    let bad_instance = run(&[
        "check",
        "--instance",
        broken.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
        "--axioms",
        "po",
    ]);
    assert_eq!(code(&bad_instance), 2);
    assert!(stderr(&bad_instance).contains("error:"));

    // A round that does not hand out every item is not a partition.
    let partial = write(
        dir.path(),
        "partial.json",
        r#"{"rounds": [{"a1": ["o1"], "a2": []}]}"#,
    );
    let bad_round = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        partial.to_str().unwrap(),
        "--axioms",
        "po",
    ]);
    assert_eq!(code(&bad_round), 2);

    // The relaxed one-item axioms have no overall reading.
    let bad_scope = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
        "--axioms",
        "ef1",
        "--scope",
        "overall",
    ]);
    assert_eq!(code(&bad_scope), 2);

    let bad_predicate = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        seq.to_str().unwrap(),
        "--axioms",
        "fairness",
    ]);
    assert_eq!(code(&bad_predicate), 2);
}

#[test]
fn solve_finds_the_proportional_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = write(dir.path(), "inst.json", TRIO_INSTANCE);
    let out_path = dir.path().join("seq.json");

    let solved = run(&[
        "solve",
        "--instance",
        inst_path.to_str().unwrap(),
        "--goal",
        "prop-po",
        "--rounds",
        "3",
        "-o",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&solved), 0, "{}", stderr(&solved));
    assert!(stderr(&solved).contains("verified: PROP overall, PO overall"));

    // Reload the written sequence and recompute the utilities exactly.
    let inst: serde_json::Value = serde_json::from_str(TRIO_INSTANCE).unwrap();
    let seq: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let utilities: Vec<i64> = (0..3)
        .map(|agent| {
            let id = inst["agents"][agent].as_str().unwrap();
            seq["rounds"]
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|round| round[id].as_array().unwrap().iter())
                .map(|item| {
                    let o = match item.as_str().unwrap() {
                        "o1" => 0,
                        _ => 1,
                    };
                    inst["utilities"][agent][o]
                        .as_str()
                        .unwrap()
                        .parse::<i64>()
                        .unwrap()
                })
                .sum()
        })
        .collect();
    assert_eq!(utilities, vec![4, 3, 2]);

    // The checker agrees with the solver's own verification.
    let checked = run(&[
        "check",
        "--instance",
        inst_path.to_str().unwrap(),
        "--sequence",
        out_path.to_str().unwrap(),
        "--axioms",
        "prop & po",
    ]);
    assert_eq!(code(&checked), 0, "{}", stderr(&checked));
}

#[test]
fn solve_rejects_unmatched_horizons() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", INTRO_INSTANCE);

    let indivisible = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--goal",
        "prop-po",
        "--rounds",
        "3",
    ]);
    assert_eq!(code(&indivisible), 2);
    assert!(stderr(&indivisible).contains("multiple"));

    let odd = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--goal",
        "ef-po-2",
        "--rounds",
        "3",
    ]);
    assert_eq!(code(&odd), 2);

    let missing = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--goal",
        "ef-po-2",
    ]);
    assert_eq!(code(&missing), 2);

    let forbidden = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--goal",
        "variable-k",
        "--rounds",
        "2",
    ]);
    assert_eq!(code(&forbidden), 2);
}

#[test]
fn two_agent_goals_solve_and_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", INTRO_INSTANCE);
    for (goal, rounds, axioms) in [
        ("ef-po-2", Some("4"), "ef & po"),
        ("ef-po-ef1-2x2", None, "ef & po & ef1:per-round"),
        ("weak-ef1-2", Some("4"), "ef & po & weak-ef1:per-round"),
        ("ef-ef1-2", Some("6"), "ef & ef1:per-round"),
    ] {
        let out = dir.path().join(format!("{goal}.json"));
        let mut args = vec![
            "solve",
            "--instance",
            inst.to_str().unwrap(),
            "--goal",
            goal,
            "-o",
            out.to_str().unwrap(),
        ];
        if let Some(k) = rounds {
            args.extend(["--rounds", k]);
        }
        let solved = run(&args);
        assert_eq!(code(&solved), 0, "goal {goal}: {}", stderr(&solved));

        let checked = run(&[
            "check",
            "--instance",
            inst.to_str().unwrap(),
            "--sequence",
            out.to_str().unwrap(),
            "--axioms",
            axioms,
        ]);
        assert_eq!(code(&checked), 0, "goal {goal}: {}", stdout(&checked));
    }
}

#[test]
fn oracle_certifies_nonexistence_and_finds_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let trio = write(dir.path(), "trio.json", TRIO_INSTANCE);
    let relax = write(dir.path(), "relax.json", RELAX_INSTANCE);

    let none = run(&[
        "oracle",
        "--instance",
        trio.to_str().unwrap(),
        "--rounds",
        "3",
        "--predicate",
        "ef & po",
    ]);
    assert_eq!(code(&none), 1);
    assert_eq!(stdout(&none).trim(), "CERTIFIED-NONE");

    let blocked = run(&[
        "oracle",
        "--instance",
        relax.to_str().unwrap(),
        "--rounds",
        "4",
        "--predicate",
        "ef & po & ef1:per-round",
    ]);
    assert_eq!(code(&blocked), 1);
    assert_eq!(stdout(&blocked).trim(), "CERTIFIED-NONE");

    let found_path = dir.path().join("found.json");
    let found = run(&[
        "oracle",
        "--instance",
        relax.to_str().unwrap(),
        "--rounds",
        "4",
        "--predicate",
        "ef & ef1:per-round",
        "-o",
        found_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&found), 0, "{}", stderr(&found));

    // Verify the found sequence with the library directly.
    let inst = repfair::Instance::new(
        vec!["a1".into(), "a2".into()],
        vec!["o1".into(), "o2".into()],
        vec![
            vec![parse_rational("1").unwrap(), parse_rational("3").unwrap()],
            vec![parse_rational("1").unwrap(), parse_rational("2").unwrap()],
        ],
    )
    .unwrap();
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&found_path).unwrap()).unwrap();
    let mut rounds = Vec::new();
    for round in file["rounds"].as_array().unwrap() {
        let mut owners = vec![usize::MAX; 2];
        for (agent, items) in round.as_object().unwrap() {
            let a = if agent == "a1" { 0 } else { 1 };
            for item in items.as_array().unwrap() {
                let o = if item.as_str().unwrap() == "o1" { 0 } else { 1 };
                owners[o] = a;
            }
        }
        rounds.push(repfair::Allocation::new(2, owners).unwrap());
    }
    let seq = repfair::Sequence::new(rounds).unwrap();
    let report = evaluate(
        &inst,
        &seq,
        &[(Axiom::Ef, Scope::Overall), (Axiom::Ef1, Scope::PerRound)],
        &SearchBudget::default(),
    )
    .unwrap();
    assert!(report.all_hold());
}

#[test]
fn oracle_budget_exhaustion_is_not_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let relax = write(dir.path(), "relax.json", RELAX_INSTANCE);
    let out = bin()
        .args([
            "oracle",
            "--instance",
            relax.to_str().unwrap(),
            "--rounds",
            "4",
            "--predicate",
            "ef & po",
        ])
        .env("REPFAIR_BUDGET_NODES", "2")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let text = stderr(&out);
    assert!(
        text.contains("not a nonexistence certificate"),
        "missing caveat in {text}"
    );
    assert!(!stdout(&out).contains("CERTIFIED-NONE"));

    let garbage = bin()
        .args([
            "oracle",
            "--instance",
            relax.to_str().unwrap(),
            "--rounds",
            "4",
            "--predicate",
            "ef",
        ])
        .env("REPFAIR_BUDGET_NODES", "soon")
        .output()
        .unwrap();
    assert_eq!(code(&garbage), 2);
}

#[test]
fn gen_is_deterministic_and_respects_modes() {
    let seed_args = [
        "gen", "--agents", "2", "--items", "4", "--seed", "11", "--mode", "mixed",
    ];
    let first = run(&seed_args);
    let second = run(&seed_args);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), stdout(&second));

    let other_seed = run(&[
        "gen", "--agents", "2", "--items", "4", "--seed", "12", "--mode", "mixed",
    ]);
    assert_ne!(stdout(&first), stdout(&other_seed));

    for (mode, sign_ok) in [
        ("goods", &(|v: i64| v > 0) as &dyn Fn(i64) -> bool),
        ("chores", &|v: i64| v < 0),
    ] {
        let out = run(&[
            "gen",
            "--agents",
            "3",
            "--items",
            "5",
            "--seed",
            "3",
            "--mode",
            mode,
            "--max-abs",
            "7",
            "--max-denominator",
            "4",
        ]);
        assert_eq!(code(&out), 0);
        let file: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        for row in file["utilities"].as_array().unwrap() {
            for cell in row.as_array().unwrap() {
                let q = parse_rational(cell.as_str().unwrap()).unwrap();
                let numer: i64 = q.numer().try_into().unwrap();
                let denom: i64 = q.denom().try_into().unwrap();
                assert!(sign_ok(numer), "mode {mode} produced {q}");
                assert!(numer.abs() <= 7 && denom <= 4, "out of range: {q}");
            }
        }
    }
}

#[test]
fn sequence_files_round_trip_identically() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "inst.json", INTRO_INSTANCE);
    let out = dir.path().join("seq.json");
    let solved = run(&[
        "solve",
        "--instance",
        inst.to_str().unwrap(),
        "--goal",
        "ef-po-2",
        "--rounds",
        "2",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&solved), 0, "{}", stderr(&solved));

    // Reading a written file and evaluating it must succeed (exit 0), and
    // the file must survive a parse/serialize cycle byte for byte.
    let text = std::fs::read_to_string(&out).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut rewritten = serde_json::to_string_pretty(&value).unwrap();
    rewritten.push('\n');
    assert_eq!(text, rewritten);

    let checked = run(&[
        "check",
        "--instance",
        inst.to_str().unwrap(),
        "--sequence",
        out.to_str().unwrap(),
        "--axioms",
        "ef & po",
    ]);
    assert_eq!(code(&checked), 0);
}

#[test]
fn decompose_writes_the_full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"agents": ["a1", "a2"], "items": ["o1", "o2", "o3"],
            "utilities": [["9/2", "3", "7"], ["9", "5", "10"]]}"#,
    );
    let shares = write(
        dir.path(),
        "x.json",
        r#"{"shares": [["0", "1/12", "1"], ["1", "11/12", "0"]]}"#,
    );
    let out = dir.path().join("dec.json");
    let done = run(&[
        "decompose",
        "--instance",
        inst.to_str().unwrap(),
        "--allocation",
        shares.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&done), 0, "{}", stderr(&done));

    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file["fractional"]["shares"][1][1], "11/12");
    let lottery = file["lottery"].as_array().unwrap();
    assert_eq!(lottery.len(), 2);
    let total: repfair::Rational = lottery
        .iter()
        .map(|o| parse_rational(o["probability"].as_str().unwrap()).unwrap())
        .sum();
    assert_eq!(total, parse_rational("1").unwrap());
    assert_eq!(file["sequence"]["rounds"].as_array().unwrap().len(), 12);

    // A fractional allocation that is not envy-free is refused.
    let unfair = write(
        dir.path(),
        "unfair.json",
        r#"{"shares": [["1", "1", "1"], ["0", "0", "0"]]}"#,
    );
    let refused = run(&[
        "decompose",
        "--instance",
        inst.to_str().unwrap(),
        "--allocation",
        unfair.to_str().unwrap(),
    ]);
    assert_eq!(code(&refused), 2);
}

#[test]
fn bundled_examples_reproduce() {
    let out = run(&["repro-paper"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.matches("ok: ").count(), 6, "unexpected output: {text}");
    assert!(!text.contains("MISMATCH"));
}

#[test]
fn usage_errors_exit_two() {
    let unknown_goal = run(&["solve", "--instance", "x.json", "--goal", "world-peace"]);
    assert_eq!(code(&unknown_goal), 2);

    let missing_file = run(&[
        "check",
        "--instance",
        "/nonexistent.json",
        "--sequence",
        "/nonexistent.json",
        "--axioms",
        "po",
    ]);
    assert_eq!(code(&missing_file), 2);

    let zero_threads = run(&["repro-paper", "--threads", "0"]);
    assert_eq!(code(&zero_threads), 2);
}
