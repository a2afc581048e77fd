use std::path::Path;
use std::process::{Command, Output};

fn pgfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgfold")).args(args).output().expect("spawn pgfold")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn run_example(out: &Path) -> Output {
    pgfold(&["run", "--geometry", "3,2,1", "--q", "3", "--T", "12", "--out", out.to_str().unwrap()])
}

#[test]
fn run_then_verify_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run_example(&out);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("verdict: PASS"));
    for f in ["manifest.json", "schedule_h.csv", "addresses_p.txt", "hdl/top.vhd"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let v = pgfold(&["verify", out.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{}", text(&v));
    let s = pgfold(&["simulate", out.to_str().unwrap(), "--iterations", "3"]);
    assert_eq!(code(&s), 0, "{}", text(&s));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&run_example(&a)), 0);
    assert_eq!(code(&run_example(&b)), 0);
    let ma = std::fs::read(a.join("manifest.json")).unwrap();
    let mb = std::fs::read(b.join("manifest.json")).unwrap();
    assert_eq!(ma, mb);
}

#[test]
fn tampered_lut_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(code(&run_example(&out)), 0);
    let lut = out.join("lut_h_mux.csv");
    let body = std::fs::read_to_string(&lut).unwrap();
    let mut lines: Vec<String> = body.lines().map(String::from).collect();
    // swap the port selections of slots 0 and 3, which use different patterns
    let (r1, r2) = (lines[1].clone(), lines[4].clone());
    let (s1, s2) = (r1.split_once(',').unwrap(), r2.split_once(',').unwrap());
    lines[1] = format!("{},{}", s1.0, s2.1);
    lines[4] = format!("{},{}", s2.0, s1.1);
    std::fs::write(&lut, lines.join("\n") + "\n").unwrap();
    let v = pgfold(&["verify", out.to_str().unwrap()]);
    assert_eq!(code(&v), 1, "{}", text(&v));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = pgfold(&["run", "--geometry", "3,2,1", "--q", "4", "--alpha", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", text(&o));
    assert!(text(&o).contains("--alpha 1"), "{}", text(&o));
    let missing = pgfold(&["verify", dir.path().join("nothing").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);
    let bad = pgfold(&["run", "--geometry", "3,2,1", "--pipeline", "sideways", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&bad), 2);
    let bad_prime = pgfold(&["build-pg", "--geometry", "2,4,1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&bad_prime), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out = dir.path().join("run");
    std::fs::write(&cfg, r#"{"geometry": [3, 2, 1], "q": 3, "T": 4, "pipeline": "node", "emit": ["csv"]}"#).unwrap();
    let o = pgfold(&["run", "--config", cfg.to_str().unwrap(), "--T", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let timing: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("timing.json")).unwrap()).unwrap();
    assert_eq!(timing["T"], 2, "{timing}");
    assert!(!out.join("hdl").exists());
    std::fs::write(&cfg, r#"{"geometry": [3, 2, 1], "colour": "red"}"#).unwrap();
    let o = pgfold(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn unfolded_and_auto_runs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("q1");
    let o = pgfold(&["run", "--geometry", "3,2,1", "--q", "1", "--out", one.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let fano = dir.path().join("fano");
    let o = pgfold(&["run", "--geometry", "2,2,1", "--q", "auto", "--alpha", "auto", "--out", fano.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let graph: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fano.join("graph.json")).unwrap()).unwrap();
    assert_eq!(graph["J"], 8, "{graph}");
}
