//! End-to-end runs of the `hyperace` binary.

use std::path::Path;
use std::process::{Command, Output};

fn hyperace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperace")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SCENARIO: &str = r#"
format_version = 1
seed = 3
duration = 2.0

[track]
builtin = "porto-like"

[[agents]]
station = 0.0
controller = "mpc_hype"
planner = "pp"

[[agents]]
station = 3.0
controller = "pp"
"#;

#[test]
fn race_writes_csv_and_trace_then_plots() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let csv = dir.path().join("race.csv");
    let trace = dir.path().join("trace.csv");
    let out = hyperace(&[
        "race",
        "--scenario",
        &scenario,
        "--out",
        csv.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("format_version,seed,"));
    assert_eq!(text.lines().count(), 2);

    let svg = dir.path().join("trace.svg");
    let out = hyperace(&[
        "plot",
        "--input",
        trace.to_str().unwrap(),
        "--kind",
        "trace",
        "--track",
        "porto-like",
        "--at",
        "1.0",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(hyperace(&["race", "--scenario", missing.to_str().unwrap()]).status.code(), Some(1));

    let scenario = write(dir.path(), "s.toml", SCENARIO);
    let out = hyperace(&["race", "--scenario", &scenario, "--method", "foo"]);
    assert_eq!(out.status.code(), Some(2));

    let off = SCENARIO.replace("station = 3.0", "x = 500.0\ny = 500.0\nheading = 0.0");
    let off = write(dir.path(), "off.toml", &off);
    let out = hyperace(&["race", "--scenario", &off]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inside the track"));

    let empty = write(dir.path(), "empty.csv", "");
    let svg = dir.path().join("x.svg");
    let out = hyperace(&["plot", "--input", &empty, "--kind", "scaling", "--out", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
