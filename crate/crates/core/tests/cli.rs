use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn pondguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pondguard"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("spawn pondguard")
}

fn pondguard_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pondguard"))
        .args(args)
        .env("PONDGUARD_THREADS", threads)
        .output()
        .expect("spawn pondguard")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_clean_ruleset_prints_ok() {
    let o = pondguard(&["check", p(&fixture("baseline.rbr"))]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "OK");
}

#[test]
fn check_missing_catch_all_fails() {
    let o = pondguard(&["check", p(&fixture("missing_catch_all.rbr"))]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("MissingCatchAll"));
}

#[test]
fn check_nonexistent_path_is_usage_error() {
    let o = pondguard(&["check", "/definitely/not/here.rbr"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(code(&pondguard(&["frobnicate"])), 2);
    assert_eq!(code(&pondguard(&["--help"])), 0);
}

#[test]
fn verify_baseline_holds() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("v.json");
    let o = pondguard(&[
        "verify",
        p(&fixture("baseline.rbr")),
        p(&fixture("collision.prop")),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["all_hold"], true);
    assert_eq!(json["properties"].as_array().unwrap().len(), 2);
}

#[test]
fn verify_mutated_ruleset_reports_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("m.json");
    let o = pondguard(&[
        "verify",
        p(&fixture("no_avoid.rbr")),
        p(&fixture("collision.prop")),
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("VIOLATED respond"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let respond = &json["properties"][0];
    assert_eq!(respond["holds"], false);
    assert!(!respond["counterexample"].as_array().unwrap().is_empty());
}

#[test]
fn verify_malformed_property_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let props = dir.path().join("bad.prop");
    std::fs::write(&props, "ok : G(true)\n\nbad : G(action=)\n").unwrap();
    let o = pondguard(&["verify", p(&fixture("baseline.rbr")), p(&props)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn verify_state_limit_is_inconclusive() {
    let o = pondguard(&[
        "verify",
        p(&fixture("baseline.rbr")),
        p(&fixture("collision.prop")),
        "--max-states",
        "50",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("INCONCLUSIVE"));
}

#[test]
fn sim_outcomes() {
    let rules = fixture("baseline.rbr");
    let o = pondguard(&["sim", p(&fixture("scenarios/empty_pond.json")), p(&rules)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("outcome=timeout ticks=100 demands=0"));

    let o = pondguard(&["sim", p(&fixture("scenarios/wall_channels_disabled.json")), p(&rules)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("outcome=guard_stop"));
    assert!(stdout(&o).contains("demands=1"));

    let o = pondguard(&["sim", p(&fixture("scenarios/wall_unprotected.json")), p(&rules)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("outcome=collision"));
}

#[test]
fn sim_trace_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let scenario = fixture("scenarios/baseline.json");
    let rules = fixture("baseline.rbr");
    for out in [&a, &b] {
        let o = pondguard(&["sim", p(&scenario), p(&rules), "--seed", "42", "--trace", p(out)]);
        assert_eq!(code(&o), 0);
    }
    let a = std::fs::read(a).unwrap();
    assert!(a.starts_with(b"tick,x,y,heading,surge,"));
    assert_eq!(a, std::fs::read(b).unwrap());
}

#[test]
fn campaign_baseline_meets_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("c.json");
    let o = pondguard(&[
        "campaign",
        p(&fixture("scenarios/baseline.json")),
        p(&fixture("baseline.rbr")),
        "--episodes",
        "1000",
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("collisions=0"));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["episodes"], 1000);
    assert!(json["ci95"][1].as_f64().unwrap() <= 0.00383);
}

#[test]
fn campaign_breach_fails_and_zero_episodes_is_usage_error() {
    let scenario = fixture("scenarios/degraded_breach.json");
    let rules = fixture("baseline.rbr");
    let o = pondguard(&["campaign", p(&scenario), p(&rules), "--episodes", "40"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).trim_end().ends_with("FAIL"));
    let o = pondguard(&["campaign", p(&scenario), p(&rules), "--episodes", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn campaign_json_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("scenarios/baseline.json");
    let rules = fixture("baseline.rbr");
    let mut reports = Vec::new();
    for threads in ["1", "3", "8"] {
        let out = dir.path().join(format!("c{threads}.json"));
        let o = pondguard_threads(
            &[
                "campaign",
                p(&scenario),
                p(&rules),
                "--episodes",
                "120",
                "--seed",
                "5",
                "--report",
                p(&out),
            ],
            threads,
        );
        // 120 clean episodes cannot push the upper bound under 0.005
        assert_eq!(code(&o), 1);
        reports.push(std::fs::read(out).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0], reports[2]);
}

#[test]
fn report_pipeline_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cae = dir.path().join("cae.json");
    let o = pondguard(&["report", "--skeleton", "--out", p(&cae)]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).matches('✘').count(), 3);

    let files: Vec<PathBuf> = ["demand", "verify", "campaign"]
        .iter()
        .map(|name| {
            let f = dir.path().join(format!("{name}.json"));
            std::fs::write(&f, format!("{{\"artifact\": \"{name}\"}}\n")).unwrap();
            f
        })
        .collect();
    let attach = |node: &str, f: &Path| format!("{node}={}", f.display());

    let partial = dir.path().join("partial.json");
    let o = pondguard(&[
        "report",
        p(&cae),
        "--attach",
        &attach("E-demand-stats", &files[0]),
        "--attach",
        &attach("E-verify-collision", &files[1]),
        "--out",
        p(&partial),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).matches('✘').count(), 1);

    let full = dir.path().join("full.json");
    let o = pondguard(&[
        "report",
        p(&partial),
        "--attach",
        &attach("E-campaign", &files[2]),
        "--out",
        p(&full),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).matches('✔').count(), 3);
    assert_eq!(stdout(&o).matches('✘').count(), 0);

    let o = pondguard(&["report", p(&full), "--attach", &attach("E-unknown", &files[0])]);
    assert_eq!(code(&o), 2);

    std::fs::write(&files[2], "{\"artifact\": \"tampered\"}\n").unwrap();
    let o = pondguard(&["report", p(&full), "--attach", &attach("E-campaign", &files[2])]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("already holds evidence"));

    let forced = dir.path().join("forced.json");
    let o = pondguard(&[
        "report",
        p(&full),
        "--attach",
        &attach("E-campaign", &files[2]),
        "--force",
        "--out",
        p(&forced),
    ]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(forced).unwrap().contains("revisions"));
}
