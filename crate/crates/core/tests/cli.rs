use std::path::Path;
use std::process::{Command, Output};

fn oran(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oran")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn line<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines().find(|l| l.starts_with(prefix)).unwrap_or_else(|| panic!("no `{prefix}` in\n{text}"))
}

#[test]
fn run_capture_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = oran(&["run", "slicing-baseline", "--capture", "cap.bin", "--out", "arts"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(line(&text, "state_hash ").len() > 20);
    assert!(dir.path().join("arts/report.json").is_file());
    assert!(std::fs::read_dir(dir.path().join("arts")).unwrap().count() > 1);

    let shown = oran(&["inspect", "cap.bin"], dir.path());
    assert!(shown.status.success());
    let log = stdout(&shown);
    for code in ["procedureCode: 1", "procedureCode: 8", "procedureCode: 5"] {
        assert!(log.lines().any(|l| l.trim() == code), "{code} missing");
    }
}

#[test]
fn tcp_run_prints_the_same_hash() {
    let dir = tempfile::tempdir().unwrap();
    let a = oran(&["run", "mobility", "--seed", "3"], dir.path());
    let b = oran(&["run", "mobility", "--seed", "3", "--tcp"], dir.path());
    assert!(a.status.success() && b.status.success());
    assert_eq!(line(&stdout(&a), "state_hash "), line(&stdout(&b), "state_hash "));
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "name = \"bad\"\nduration_ms = \"long\"\n").unwrap();
    let out = oran(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml line 2"));
}

#[test]
fn policies_checks_requests() {
    let dir = tempfile::tempdir().unwrap();
    let ok = r#"{"op":"create","policy_id":"p","policy_type_id":20008,"scope":{"slice":0},
        "statements":[{"kind":"objective","name":"latency_proxy_ms","comparator":"le","value":5}]}"#;
    let out = oran(&["policies", ok], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("\"policy_id\":\"p\""));
    let bad = ok.replace("\"le\"", "\"ge\"");
    assert_eq!(oran(&["policies", &bad], dir.path()).status.code(), Some(2));
    assert_eq!(oran(&["policies", "not json"], dir.path()).status.code(), Some(2));
}

#[test]
fn scenarios_lists_bundled() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&oran(&["scenarios"], dir.path()));
    for name in ["slicing-overload", "mobility", "o1-faults", "a1-objectives", "chained"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
