use std::path::PathBuf;
use std::process::{Command, Output};

fn biwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biwave")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("biwave-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn check_passes() {
    let o = biwave(&["check"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn converge_prints_a_rate_table() {
    let o = biwave(&["converge", "--n", "2,4", "--scheme", "c0ip"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("h,k,l2_error,l2_rate,energy_error,energy_rate"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[3], "-");
    let second: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(second[3].parse::<f64>().unwrap() > 0.0);
    assert!(lines.next().is_none());
}

#[test]
fn stability_reports_blow_up_with_exit_code_2() {
    let o = biwave(&["stability", "--n", "4", "--steps", "300"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[3].starts_with("explicit,1.05") && rows[3].ends_with("true"));
    assert!(rows[4].starts_with("implicit") && rows[4].ends_with("false"));

    let o = biwave(&["stability", "--n", "4", "--steps", "100", "--ratio", "0.5", "--ratio", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn example2_writes_trace_and_snapshots() {
    let dir = scratch("ex2");
    let out = dir.join("trace.csv");
    let o =
        biwave(&["example2", "--n", "8", "--num-steps", "12", "--snapshot", "0.015", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = std::fs::read_to_string(&out).unwrap();
    assert_eq!(trace.lines().next(), Some("t,u_c"));
    assert_eq!(trace.lines().count(), 14);
    let snap = std::fs::read_to_string(dir.join("trace_n8_step6.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("dof,value"));

    let o = biwave(&["example2", "--n", "4,8", "--num-steps", "4"]);
    assert_eq!(o.status.code(), Some(1), "several grids need --out");
}

#[test]
fn run_emits_one_row_per_level() {
    let o = biwave(&["run", "--n", "4", "--num-steps", "5", "--T", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("n,t,l2_error,energy_error,E_kinetic,E_potential"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn config_file_is_applied_before_flags() {
    let dir = scratch("cfg");
    let path = dir.join("run.cfg");
    std::fs::write(&path, "# small study\nscheme = c0ip\nn = 2, 4\n").unwrap();
    let from_file = biwave(&["converge", "--config", path.to_str().unwrap()]);
    let from_flags = biwave(&["converge", "--scheme", "c0ip", "--n", "2,4"]);
    assert!(from_file.status.success());
    assert_eq!(stdout(&from_file), stdout(&from_flags));

    let overridden = biwave(&["converge", "--config", path.to_str().unwrap(), "--scheme", "morley"]);
    assert_ne!(stdout(&overridden), stdout(&from_file));

    std::fs::write(&path, "scheme = morley\nwhat = 3\n").unwrap();
    let bad = biwave(&["converge", "--config", path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}

#[test]
fn usage_errors_exit_with_1() {
    for args in [
        &["bogus"][..],
        &["converge", "--scheme", "hermite"],
        &["converge", "--k", "0.1", "--equal-h"],
        &["converge", "--n", "4"],
        &["run", "--n", "4,8"],
        &["run", "--integrator", "explicit", "--k", "0.1", "--n", "4"],
    ] {
        let o = biwave(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(biwave(&["--help"]).status.code(), Some(0));
}
