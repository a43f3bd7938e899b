use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn dispatch_prints_closed_form_powers() {
    let c = config("table1.json");
    let o = cascade(&["dispatch", "--config", c.to_str().unwrap(), "--load", "620"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for p in ["120.0096774", "200.0161290", "299.9741935"] {
        assert!(text.contains(p), "{text}");
    }
}

#[test]
fn dispatch_map_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let c = config("table1.json");
    let o = cascade(&[
        "dispatch", "--config", c.to_str().unwrap(), "--map", "--domain", "current", "--from", "1", "--to", "20",
        "--samples", "20", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,g_1,g_2,g_3");
    assert_eq!(lines.len(), 21);
    // g_1(1 A) = 660/31 + 3/310 = 21.3
    let g1: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((g1 - 21.3).abs() < 1e-9);
}

#[test]
fn simulate_writes_trajectory_without_saturation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let c = config("table1.json");
    let o = cascade(&[
        "simulate", "--config", c.to_str().unwrap(), "--scheme", "economical", "--t-end", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("samples with a saturated frequency: 0"));
    let csv = std::fs::read_to_string(out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,f_1,f_2,f_3,V_1"));
    assert!(lines.all(|l| l.ends_with(",0")));
}

#[test]
fn compare_reports_both_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let c = config("table1.json");
    let s = config("schedule_resistive.json");
    let o = cascade(&[
        "compare", "--config", c.to_str().unwrap(), "--schedule", s.to_str().unwrap(), "--t-end", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("economical <= proportional at every steady sample: true"));
    assert!(dir.path().join("cmp_economical.csv").exists());
    assert!(dir.path().join("cmp_proportional.csv").exists());
}

#[test]
fn rootlocus_filter_sweep_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rl.csv");
    let c = config("table1.json");
    let o = cascade(&[
        "rootlocus", "--config", c.to_str().unwrap(), "--param", "w_c", "--from", "251.33", "--to", "376.99",
        "--steps", "20", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 21);
    assert!(lines[0].starts_with("param,re_1,im_1"));
    assert!(lines[0].ends_with("re_9,im_9,verdict"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",stable")));
}

#[test]
fn selftest_passes() {
    let o = cascade(&["selftest"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(config("table1.json")).unwrap().replace("\"f_min\"", "\"fmin\"");
    std::fs::write(&bad, text).unwrap();
    let o = cascade(&["dispatch", "--config", bad.to_str().unwrap(), "--load", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fmin"));

    let c = config("table1.json");
    let o = cascade(&["dispatch", "--config", c.to_str().unwrap(), "--load", "5000", "--bounds"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cascade(&["simulate", "--config", c.to_str().unwrap(), "--scheme", "economical", "--t-end", "0.5", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cascade(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_is_deterministic() {
    let c = config("table1.json");
    let args = ["rootlocus", "--config", c.to_str().unwrap(), "--param", "load_resistance", "--from", "18", "--to", "6", "--steps", "4"];
    assert_eq!(stdout(&cascade(&args)), stdout(&cascade(&args)));
}
