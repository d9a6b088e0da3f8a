//! End-to-end checks of the command-line front end: exit codes, report
//! schema, input rejection, and the promises the flags make.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_slq")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn slq")
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn strip_wall_time(json: &str) -> String {
    match json.split_once(",\"wall_time\"") {
        Some((head, _)) => head.to_string(),
        None => json.to_string(),
    }
}

#[test]
fn json_report_has_the_stable_schema() {
    let out = run(&["mean", "--bits", "1011", "--epsilon", "0.05", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let report: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    for key in [
        "task",
        "inputs_digest",
        "result",
        "eta",
        "delta",
        "backend",
        "ledger",
        "seed",
        "wall_time",
    ] {
        assert!(report.get(key).is_some(), "missing {key} in {text}");
    }
    assert_eq!(report["task"], "mean");
    assert_eq!(report["backend"], "classical");
    assert_eq!(report["result"]["count"], 3);
    for key in ["power_queries", "bit_queries", "qubits_peak", "classical_ops"] {
        assert!(report["ledger"].get(key).is_some(), "ledger lacks {key}");
    }
    assert!(
        text.trim().ends_with('}') && text.contains(",\"wall_time\":"),
        "wall_time is not the closing field: {text}"
    );
}

#[test]
fn text_report_is_the_default() {
    let out = run(&["min", "value", "--values", "4,-2,7,0", "--epsilon", "0.25"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("task: min-value"), "unexpected text: {text}");
    assert!(text.contains("queries:"), "no ledger line: {text}");
    assert!(!text.trim_start().starts_with('{'));
}

#[test]
fn rejects_bad_arguments_with_exit_2() {
    let cases: Vec<Vec<&str>> = vec![
        // Potential leaves [0,1].
        vec!["eigen", "--q", "const:2", "--eta", "0.1"],
        // Unparseable expression.
        vec!["eigen", "--q", "warp:1", "--eta", "0.1"],
        // Missing accuracy for a command that needs one.
        vec!["verify", "mean", "--bits", "1011"],
        vec!["verify", "integrate", "--f", "const:0.5"],
        // Epsilon out of range.
        vec!["mean", "--bits", "1011", "--epsilon", "0"],
        vec!["integrate", "--f", "sine:0.02,3", "--epsilon", "2"],
        // Truth table with characters outside 0/1.
        vec!["sat", "decide", "--bits", "01x1"],
        // Vector entry that is not a number.
        vec!["min", "value", "--values", "1,abc", "--epsilon", "0.25"],
        // Nonexistent file.
        vec!["tsp", "length", "--matrix", "/nonexistent/matrix.txt"],
        // delta outside (0, 1).
        vec!["mean", "--bits", "1011", "--epsilon", "0.05", "--delta", "1.5"],
        // Zero worker threads.
        vec!["mean", "--bits", "1011", "--epsilon", "0.05", "--threads", "0"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?} exited {:?}: {}",
            out.status.code(),
            stderr(&out)
        );
        assert!(!stderr(&out).is_empty(), "{args:?} gave no diagnostic");
    }
}

#[test]
fn clap_usage_errors_also_exit_2() {
    let out = run(&["eigen", "--q", "const:0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["mean", "--bits", "1011", "--backend", "quantum"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown backend"));
}

#[test]
fn impossible_accuracy_exits_3() {
    let out = run(&["eigen", "--q", "const:0", "--eta", "1e-40"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("capacity"));

    // The dense backend refuses register sizes past its qubit cap.
    let out = run(&[
        "eigen", "--q", "const:0", "--eta", "0.0001", "--backend", "dense",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn lenient_and_strict_dimacs_disagree_on_bad_headers() {
    let path = write_temp(
        "cli_header_mismatch.cnf",
        "p cnf 3 5\n1 -2 0\n2 3 0\n-1 -3 0\n",
    );
    let file = path.to_str().unwrap();
    let out = run(&["sat", "decide", "--cnf", file]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(&["sat", "decide", "--cnf", file, "--strict-dimacs"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("parse"));
}

#[test]
fn grover_reports_promise_violations_without_failing() {
    // Two accepted inputs break the unique-witness promise; the report
    // says so and the run still exits 0.
    let out = run(&["grover", "--bits", "0110", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["result"]["index"], serde_json::Value::Null);
    assert!(report["result"]["status"]
        .as_str()
        .unwrap()
        .contains("promise"));

    // A kept promise reports the witness index.
    let out = run(&["grover", "--bits", "0100", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["result"]["index"], 1);
}

#[test]
fn verify_commands_cross_check_and_exit_0_when_consistent() {
    let cnf = write_temp("cli_verify.cnf", "p cnf 4 3\n1 2 0\n-2 3 0\n-1 4 0\n");
    let matrix = write_temp("cli_verify_matrix.txt", "4\n0 3 9 2\n7 0 4 8\n5 6 0 1\n9 2 3 0\n");
    let checks: Vec<Vec<&str>> = vec![
        vec!["verify", "sat", "--cnf", cnf.to_str().unwrap()],
        vec!["verify", "tsp", "--matrix", matrix.to_str().unwrap()],
        vec!["verify", "mean", "--bits", "01100101", "--epsilon", "0.05"],
        vec!["verify", "integrate", "--f", "sine:0.02,3", "--epsilon", "1e-6"],
    ];
    for args in checks {
        let mut with_json = args.clone();
        with_json.push("--json");
        let out = run(&with_json);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", stderr(&out));
        let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
        assert_eq!(report["result"]["match"], true, "{args:?}");
    }
}

#[test]
fn verify_catches_a_degraded_pipeline_with_exit_4() {
    // Starving the discretization constant biases the spectral estimate
    // past its tolerance; verify must refuse to bless the answer.
    let config = write_temp("cli_degraded.toml", "c_disc = 0.05\n");
    let out = run(&[
        "verify",
        "mean",
        "--bits",
        "0100000000000001",
        "--epsilon",
        "0.03",
        "--backend",
        "spectral",
        "--seed",
        "3",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("verification mismatch"));
}

#[test]
fn config_file_sets_defaults_and_flags_override_it() {
    let config = write_temp("cli_backend.toml", "backend = \"dense\"\n");
    let base = vec![
        "eigen", "--q", "const:0", "--eta", "0.5", "--json", "--config",
    ];

    let mut args = base.clone();
    args.push(config.to_str().unwrap());
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["backend"], "dense");

    args.extend(["--backend", "spectral"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["backend"], "spectral");
}

#[test]
fn bad_config_files_are_rejected() {
    let unknown = write_temp("cli_unknown_key.toml", "mystery_knob = 1\n");
    let out = run(&[
        "mean", "--bits", "1011", "--epsilon", "0.05", "--config",
        unknown.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let invalid = write_temp("cli_invalid_value.toml", "bump_alpha = 1.5\n");
    let out = run(&[
        "mean", "--bits", "1011", "--epsilon", "0.05", "--config",
        invalid.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bump_alpha"));
}

#[test]
fn worker_threads_never_change_results() {
    let base = [
        "integrate", "--f", "sine:0.05,2", "--epsilon", "1e-7", "--backend",
        "spectral", "--seed", "11", "--json",
    ];
    let single = run(&base);
    assert_eq!(single.status.code(), Some(0), "{}", stderr(&single));
    let mut threaded = base.to_vec();
    threaded.extend(["--threads", "4"]);
    let multi = run(&threaded);
    assert_eq!(multi.status.code(), Some(0), "{}", stderr(&multi));
    assert_eq!(
        strip_wall_time(&stdout(&single)),
        strip_wall_time(&stdout(&multi))
    );
}

#[test]
fn digest_tracks_the_inputs() {
    let a = run(&["mean", "--bits", "1011", "--epsilon", "0.05", "--json"]);
    let b = run(&["mean", "--bits", "1010", "--epsilon", "0.05", "--json"]);
    let ja: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    let jb: serde_json::Value = serde_json::from_str(stdout(&b).trim()).unwrap();
    assert_ne!(ja["inputs_digest"], jb["inputs_digest"]);
    assert_eq!(ja["inputs_digest"].as_str().unwrap().len(), 64);

    // Same oracle, different accuracy: the digest must move too.
    let c = run(&["mean", "--bits", "1011", "--epsilon", "0.02", "--json"]);
    let jc: serde_json::Value = serde_json::from_str(stdout(&c).trim()).unwrap();
    assert_ne!(ja["inputs_digest"], jc["inputs_digest"]);
}

#[test]
fn matrix_files_accept_json_and_token_forms() {
    let tokens = write_temp("cli_matrix_tokens.txt", "3\n0 5 2\n5 0 3\n2 3 0\n");
    let json_form = write_temp(
        "cli_matrix.json",
        "{\"m\": 3, \"d\": [[0,5,2],[5,0,3],[2,3,0]]}",
    );
    let a = run(&["tsp", "length", "--matrix", tokens.to_str().unwrap(), "--json"]);
    let b = run(&["tsp", "length", "--matrix", json_form.to_str().unwrap(), "--json"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0), "{}", stderr(&b));
    let ja: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    let jb: serde_json::Value = serde_json::from_str(stdout(&b).trim()).unwrap();
    assert_eq!(ja["result"]["length"], 10);
    assert_eq!(ja["result"]["length"], jb["result"]["length"]);
}

#[test]
fn truth_tables_pad_to_the_next_power_of_two() {
    // Six bits pad to eight slots; the mean is over the padded domain.
    let out = run(&["mean", "--bits", "110101", "--epsilon", "0.05", "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["result"]["count"], 4);
    assert_eq!(report["result"]["domain"], 8);
}
