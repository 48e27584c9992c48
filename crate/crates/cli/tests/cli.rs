//! Golden-file tests for the `nl2ltl` binary: each subcommand is a thin
//! adapter, so identical inputs through the CLI and the library must
//! produce identical outputs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nl2ltl"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_line(output: &Output) -> String {
    assert!(
        output.status.success(),
        "exit {:?}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout.clone())
        .unwrap()
        .trim_end()
        .to_string()
}

#[test]
fn parse_prefix_echoes_infix() {
    let out = run(&["parse", "--prefix", "F & R F X"]);
    assert_eq!(stdout_line(&out), "F ( R & F ( X ) )");
}

#[test]
fn parse_infix_echoes_prefix() {
    let out = run(&["parse", "--infix", "F ( blue_room & F ( yellow_room ) )"]);
    assert_eq!(stdout_line(&out), "F & blue_room F yellow_room");
}

#[test]
fn parse_rejects_malformed_input_with_nonzero_exit() {
    let out = run(&["parse", "--prefix", "F &"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "{stderr}");
}

#[test]
fn check_reports_sat_and_unsat() {
    let out = run(&["check", "--formula", "F B", "--trace", "{} {B}"]);
    assert_eq!(stdout_line(&out), "SAT");
    let out = run(&["check", "--formula", "F B", "--trace", "{} {}"]);
    assert_eq!(stdout_line(&out), "UNSAT");
}

#[test]
fn canonicalize_matches_the_library() {
    let lexicon = fixtures().join("pick/lexicon.json");
    let out = run(&[
        "canonicalize",
        "--prefix",
        "G & U S ! C F C",
        "--lexicon",
        lexicon.to_str().unwrap(),
    ]);
    assert_eq!(
        stdout_line(&out),
        "globally ( and ( until ( scan , not ( any non green cubes ) ) , finally ( any non green cubes ) ) )"
    );

    // reverse direction
    let out = run(&[
        "canonicalize",
        "--canonical",
        "finally ( any non green cubes )",
        "--lexicon",
        lexicon.to_str().unwrap(),
    ]);
    assert_eq!(stdout_line(&out), "F ( C )");
}

#[test]
fn backtranslate_rule_and_template_paths() {
    let cleanup = fixtures().join("cleanup_mini");
    let out = run(&[
        "backtranslate",
        "--prefix",
        "F B",
        "--lexicon",
        cleanup.join("lexicon.json").to_str().unwrap(),
    ]);
    assert_eq!(stdout_line(&out), "eventually go to the blue room");

    let out = run(&[
        "backtranslate",
        "--prefix",
        "F & R F X",
        "--lexicon",
        cleanup.join("lexicon.json").to_str().unwrap(),
        "--structures",
        cleanup.join("structures.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(
        stdout_line(&out),
        "go to the red room and then go to the blue room with chair"
    );
}

#[test]
fn synth_train_translate_pipeline_on_pick() {
    let dir = tempfile::tempdir().unwrap();
    let pick = fixtures().join("pick");
    let corpus = dir.path().join("corpus.jsonl");
    let model = dir.path().join("model.json");

    let out = run(&[
        "synth",
        "--apset",
        pick.join("aps.jsonl").to_str().unwrap(),
        "--lexicon",
        pick.join("lexicon.json").to_str().unwrap(),
        "--structures",
        pick.join("structures.jsonl").to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert_eq!(
        stdout_line(&out),
        format!("wrote 55 examples to {}", corpus.display())
    );

    let out = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--lexicon",
        pick.join("lexicon.json").to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(stdout_line(&out).starts_with("trained on 55 examples"));

    let out = run(&[
        "translate",
        "--input",
        "scan the table and move any non red cubes to the basket",
        "--model",
        model.to_str().unwrap(),
        "--dataset",
        pick.join("manifest.json").to_str().unwrap(),
    ]);
    let cli_output = stdout_line(&out);
    assert_eq!(cli_output, "G & U S ! D F D");

    // CLI/library parity on the same model and valid set
    let aps = nl2ltl::ltl::ApSet::load(pick.join("aps.jsonl")).unwrap();
    let lex = nl2ltl::canonical::Lexicon::load(pick.join("lexicon.json")).unwrap();
    let loaded = nl2ltl::decoder::LexicalModel::load(&model).unwrap();
    let dataset = nl2ltl::eval::ingest(pick.join("manifest.json")).unwrap();
    let valid = dataset
        .valid_outputs(nl2ltl::synthesis::TargetRepr::RawPrefix, &lex)
        .unwrap();
    let trie = nl2ltl::decoder::build_trie(&valid).unwrap();
    let lib_output = nl2ltl::decoder::constrained_decode(
        "scan the table and move any non red cubes to the basket",
        &loaded,
        &trie,
        1,
    );
    assert_eq!(cli_output, lib_output);
    let _ = aps;
}

#[test]
fn translate_reproduces_the_drone_example() {
    let dir = tempfile::tempdir().unwrap();
    let drone = fixtures().join("drone_mini");
    let model = dir.path().join("model.json");

    let out = run(&[
        "train",
        "--dataset",
        drone.join("manifest.json").to_str().unwrap(),
        "--repr",
        "raw-infix",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&[
        "translate",
        "--input",
        "head to the yellow room , but make sure to go through the blue room first .",
        "--model",
        model.to_str().unwrap(),
        "--dataset",
        drone.join("manifest.json").to_str().unwrap(),
        "--repr",
        "raw-infix",
    ]);
    assert_eq!(stdout_line(&out), "F ( blue_room & F ( yellow_room ) )");
}

#[test]
fn eval_writes_a_report_and_prints_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let pick = fixtures().join("pick");
    let report = dir.path().join("report.json");
    let out = run(&[
        "eval",
        "--dataset",
        pick.join("manifest.json").to_str().unwrap(),
        "--scenario",
        "low-resource",
        "--structures",
        pick.join("structures.jsonl").to_str().unwrap(),
        "--lexicon",
        pick.join("lexicon.json").to_str().unwrap(),
        "--seed",
        "7",
        "--report-out",
        report.to_str().unwrap(),
    ]);
    let table = stdout_line(&out);
    assert!(table.contains("accuracy:"), "{table}");
    let loaded = nl2ltl::eval::EvalReport::load(&report).unwrap();
    assert!(loaded.verify());
    assert_eq!(loaded.config.seed, 7);
}

#[test]
fn eval_exits_nonzero_on_stat_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let pick = fixtures().join("pick");
    for file in [
        "aps.jsonl",
        "lexicon.json",
        "structures.jsonl",
        "data.jsonl",
    ] {
        std::fs::copy(pick.join(file), dir.path().join(file)).unwrap();
    }
    let manifest = std::fs::read_to_string(pick.join("manifest.json")).unwrap();
    let tampered = manifest.replace("\"n_formulas\": 5", "\"n_formulas\": 7");
    assert_ne!(manifest, tampered, "tamper target not found");
    std::fs::write(dir.path().join("manifest.json"), tampered).unwrap();

    let out = run(&[
        "eval",
        "--dataset",
        dir.path().join("manifest.json").to_str().unwrap(),
        "--seed",
        "0",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stat mismatch"), "{stderr}");
}

#[test]
fn synth_determinism_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let pick = fixtures().join("pick");
    let mut corpora = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let path = dir.path().join(name);
        let out = run(&[
            "synth",
            "--apset",
            pick.join("aps.jsonl").to_str().unwrap(),
            "--lexicon",
            pick.join("lexicon.json").to_str().unwrap(),
            "--structures",
            pick.join("structures.jsonl").to_str().unwrap(),
            "--seed",
            "21",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        corpora.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(corpora[0], corpora[1]);
}
