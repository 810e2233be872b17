//! End-to-end tests for the `portcheck` binary: exit codes, the JSON/text/dot
//! renderings, flag and config handling, and run-to-run determinism.

use std::path::Path;
use std::process::Command;

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_portcheck"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("no signal"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

fn json(r: &Run) -> serde_json::Value {
    serde_json::from_str(&r.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}):\n{}\n{}", r.stdout, r.stderr)
    })
}

// ===== parse / pretraces / enumerate =====

#[test]
fn parse_reports_threads_and_pretraces() {
    let r = run(&["parse", &corpus("litmus/fig9.litmus")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["threads"], 3);
    assert_eq!(v["pretraces"].as_array().unwrap().len(), 1);
    // three program events plus the two init writes
    assert_eq!(v["pretraces"][0]["events"], 7);
}

#[test]
fn parse_splits_conditional_programs() {
    let r = run(&["parse", &corpus("litmus/mp_cond.litmus")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["pretraces"].as_array().unwrap().len(), 2);
}

#[test]
fn pretraces_dot_renders_clusters_and_edges() {
    let r = run(&["pretraces", &corpus("litmus/mp.litmus"), "--format", "dot"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("digraph"));
    assert!(r.stdout.contains("cluster_t1"));
    assert!(r.stdout.contains("cluster_t0"), "init cluster present");
}

#[test]
fn enumerate_matches_the_counting_formula() {
    let r = run(&["enumerate", &corpus("litmus/fig9.litmus")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["total_candidates"], "16");

    let r = run(&["enumerate", &corpus("litmus/coherence3.litmus")]);
    let v = json(&r);
    assert_eq!(v["total_candidates"], "3000");
}

// ===== check =====

#[test]
fn check_separates_sc_from_tso_on_the_three_thread_race() {
    let fig9 = corpus("litmus/fig9.litmus");
    let r = run(&["check", &fig9, "--model", "sc", "--outcome", "a=0,b=1,c=0"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["reachable"], false);
    assert!(v["witness"].is_null());

    let r = run(&["check", &fig9, "--model", "tso", "--outcome", "a=0,b=1,c=0"]);
    let v = json(&r);
    assert_eq!(v["reachable"], true);
    assert_eq!(v["witness"]["pretrace"], "fig9");
    assert!(v["witness"]["execution"]["rf"].is_array());
}

#[test]
fn check_text_format_prints_the_verdict() {
    let r = run(&[
        "check",
        &corpus("litmus/sb.litmus"),
        "--model",
        "sc",
        "--outcome",
        "a=0,b=0",
        "--format",
        "text",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("unreachable under SC"), "{}", r.stdout);
}

#[test]
fn check_resolves_outcome_keys_per_branch() {
    // `a` exists in both branches of the conditional program; the outcome
    // must be evaluated wherever it resolves.
    let r = run(&["check", &corpus("litmus/mp_cond.litmus"), "--model", "sc", "--outcome", "a=1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["reachable"], true);
}

#[test]
fn check_rejects_unknown_outcome_keys() {
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--model", "sc", "--outcome", "zz=1"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("outcome"), "{}", r.stderr);
}

#[test]
fn check_requires_a_model() {
    let r = run(&["check", &corpus("litmus/sb.litmus")]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("--model"), "{}", r.stderr);
}

#[test]
fn check_rejects_dot_output() {
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--model", "sc", "--format", "dot"]);
    assert_eq!(r.code, 1);
}

// ===== classify-cycles / race =====

#[test]
fn classify_cycles_tags_an_inconsistent_execution() {
    let r = run(&["classify-cycles", &corpus("exec/fig5_E1.exec"), "--model", "sc"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["consistent"], false);
    assert!(!v["violated_rules"].as_object().unwrap().is_empty());
    assert!(!v["cycle_tags"].as_object().unwrap().is_empty());
    assert!(v["violated_rules"].get("SC.d").is_some(), "{v}");
}

#[test]
fn classify_cycles_is_quiet_on_a_consistent_execution() {
    let r = run(&["classify-cycles", &corpus("exec/fig5_E2.exec"), "--model", "sc"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["consistent"], true);
    assert!(v["cycle_tags"].as_object().unwrap().is_empty());
}

#[test]
fn classify_cycles_dot_renders_the_execution() {
    let r = run(&["classify-cycles", &corpus("exec/fig5_E2.exec"), "--model", "sc", "--format", "dot"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("digraph"));
    assert!(r.stdout.contains("rf"));
}

#[test]
fn race_detects_the_triangular_pattern() {
    let r = run(&["race", &corpus("exec/fig8_Eprime.exec")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["tso_consistent"], true);
    let w = &v["witnesses"][0];
    assert_eq!(w["w_x"], "wx");
    assert_eq!(w["r_x"], "d");
    assert_eq!(w["w_y"], "wy");
    assert_eq!(w["shape_holds"], true);
}

#[test]
fn race_reports_absence_on_a_quiet_execution() {
    let r = run(&["race", &corpus("exec/fig5_E2.exec"), "--format", "text"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("no triangular race"), "{}", r.stdout);
}

// ===== diff / classify-effect / safety / port =====

#[test]
fn diff_reports_the_reordering_effect() {
    let r = run(&["diff", &corpus("pretrace/fig2_P.pretrace"), &corpus("pretrace/fig2_Pprime.pretrace")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    // Moving the y-write in front of the reader thread adds order; nothing
    // is removed and no events change.
    assert!(v["effect"]["po_plus"].as_array().unwrap().iter().any(|p| p[0] == "wy" && p[1] == "c"));
    assert!(v["effect"]["po_minus"].as_array().unwrap().is_empty());
    assert!(v["effect"]["st_plus"].as_array().unwrap().is_empty());
    assert!(v["effect"]["st_minus"].as_array().unwrap().is_empty());
}

#[test]
fn classify_effect_flags_the_unshielded_write_read_inversion() {
    let r = run(&[
        "classify-effect",
        &corpus("pretrace/fig2_P.pretrace"),
        &corpus("pretrace/fig2_Pprime.pretrace"),
        "--format",
        "text",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("tuwri"), "{}", r.stdout);
    assert!(r.stdout.contains("w_y=wy r_y=c r_x=d w_x=wx"), "{}", r.stdout);
}

#[test]
fn safety_differs_between_the_models_on_the_reordered_pair() {
    let p = corpus("pretrace/fig2_P.pretrace");
    let p2 = corpus("pretrace/fig2_Pprime.pretrace");
    let r = run(&["safety", &p, &p2, "--model", "sc"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r)["safe"], true);

    let r = run(&["safety", &p, &p2, "--model", "tso"]);
    let v = json(&r);
    assert_eq!(v["safe"], false);
    assert!(v["counterexample"]["rf"].is_array(), "counterexample is a document");
}

#[test]
fn port_passes_the_guarded_pair_and_fails_the_inversion() {
    let r = run(&[
        "port",
        &corpus("pretrace/fig1_P.pretrace"),
        &corpus("pretrace/fig1_Pprime.pretrace"),
        "--target",
        "tso",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["guard_passes"], true);
    assert_eq!(v["portable"], true);
    assert_eq!(v["theorem_violation"], false);

    let r = run(&[
        "port",
        &corpus("pretrace/fig2_P.pretrace"),
        &corpus("pretrace/fig2_Pprime.pretrace"),
        "--target",
        "tso",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r);
    assert_eq!(v["guard_passes"], false);
    assert!(v["guard_failures"].as_array().unwrap().iter().any(|f| f == "tuwri"));
    assert_eq!(v["sc_safe"], true);
    assert_eq!(v["target_safe"], false);
    assert_eq!(v["portable"], false);
    assert_eq!(v["theorem_violation"], false);
}

#[test]
fn port_requires_a_pairwise_input() {
    let r = run(&[
        "port",
        &corpus("litmus/mp_cond.litmus"),
        &corpus("pretrace/fig2_Pprime.pretrace"),
        "--target",
        "tso",
    ]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("exactly one"), "{}", r.stderr);
}

// ===== search / audit =====

#[test]
fn search_small_bounds_is_clean_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let bounds = dir.path().join("bounds.json");
    std::fs::write(
        &bounds,
        r#"{
            "max_threads": 2,
            "max_events": 3,
            "locations": 2,
            "values": [0, 1],
            "max_updates": 1,
            "templates": ["AdjacentSwap", "EventElimination"],
            "pair_budget_ms": 10000
        }"#,
    )
    .unwrap();
    let b = bounds.to_string_lossy();
    let r1 = run(&["search", "--bounds", &b]);
    assert_eq!(r1.code, 0, "{}", r1.stderr);
    let v = json(&r1);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["complete"], true);
    assert!(v["violations"].as_array().unwrap().is_empty());
    assert!(v["programs"].as_u64().unwrap() > 0);

    let r2 = run(&["search", "--bounds", &b]);
    assert_eq!(r1.stdout, r2.stdout, "search report must be byte-identical");
}

#[test]
fn search_rejects_out_of_range_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let bounds = dir.path().join("bounds.json");
    std::fs::write(
        &bounds,
        r#"{ "max_threads": 2, "max_events": 64, "locations": 2, "values": [0, 1],
             "max_updates": 1, "templates": ["AdjacentSwap"], "pair_budget_ms": 10 }"#,
    )
    .unwrap();
    let r = run(&["search", "--bounds", &bounds.to_string_lossy()]);
    assert_eq!(r.code, 1);
}

#[test]
fn audit_accepts_files_and_directories() {
    let r = run(&[
        "audit",
        &corpus("litmus/sb.litmus"),
        &corpus("litmus/mp.litmus"),
        "--format",
        "text",
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("sb: 9 candidates"), "{}", r.stdout);
    assert!(r.stdout.contains("chain=ok"), "{}", r.stdout);
}

#[test]
fn audit_needs_at_least_one_input() {
    let r = run(&["audit"]);
    assert_eq!(r.code, 1);
}

// ===== flags, config, global behavior =====

#[test]
fn cap_bounds_the_enumeration() {
    let r = run(&["check", &corpus("litmus/coherence3.litmus"), "--model", "sc", "--cap", "4"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("cap"), "{}", r.stderr);
}

#[test]
fn jobs_must_be_positive() {
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--model", "sc", "--jobs", "0"]);
    assert_eq!(r.code, 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("portcheck.json");
    std::fs::write(&cfg, r#"{ "model": "sc", "outcome": "a=0,b=0", "format": "text" }"#).unwrap();
    let c = cfg.to_string_lossy();

    // Model, outcome and format all come from the config file.
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--config", &c]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("unreachable under sc"), "{}", r.stdout);

    // The command line overrides the config's model.
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--config", &c, "--model", "tso"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.contains("reachable under tso"), "{}", r.stdout);
    assert!(!r.stdout.contains("unreachable"), "{}", r.stdout);
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("portcheck.json");
    std::fs::write(&cfg, r#"{ "modle": "sc" }"#).unwrap();
    let r = run(&["check", &corpus("litmus/sb.litmus"), "--config", &cfg.to_string_lossy()]);
    assert_eq!(r.code, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["no-such-command"]).code, 1);
    assert_eq!(run(&[]).code, 1);
    assert_eq!(run(&["check"]).code, 1, "missing input path");
    assert_eq!(run(&["check", "/no/such/file.litmus", "--model", "sc"]).code, 1);
    assert_eq!(run(&["race", &corpus("litmus/sb.litmus")]).code, 1, "race wants .exec");
}

#[test]
fn help_and_version_exit_zero() {
    let r = run(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("portcheck"));
    assert_eq!(run(&["--version"]).code, 0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec!["audit", &*corpus("litmus/fig9.litmus"), &*corpus("litmus/sb.litmus")],
        vec!["check", &*corpus("litmus/fig9.litmus"), "--model", "tso", "--outcome", "a=0,b=1,c=0"],
        vec!["pretraces", &*corpus("pretrace/fig2_P.pretrace"), "--format", "dot"],
        vec!["port", &*corpus("pretrace/fig2_P.pretrace"), &*corpus("pretrace/fig2_Pprime.pretrace"), "--target", "sra"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.code, b.code);
        assert_eq!(a.stdout, b.stdout, "non-deterministic output for {args:?}");
    }
}
