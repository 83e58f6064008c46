use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
protocol = "entanglement"
lambda = 800e-9
d = 0.6
L0 = 120e3
total_distance = 2400e3
per_sat_loss = 0.02

[numerics]
grid_n = 128
oversize = 4
"#;

fn satlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_satlens")).args(args).output().expect("spawn satlens")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = satlens(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let budget = fs::read_to_string(out.join("budget.csv")).unwrap();
    assert!(budget.starts_with("component,transmission,loss_db\n"));
    assert!(budget.lines().last().unwrap().starts_with("total,"));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 10);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("total"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[errors]\nf_frac = 0.05\nz_frac = 0.05\nxy_frac = 0.05\nreps = 3\nseed = 9\n");
    let cfg = write_config(dir.path(), &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = satlens(&["errors", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(a.join("errors.csv")).unwrap(), fs::read(b.join("errors.csv")).unwrap());
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let o = satlens(&["run", &cfg, "--per-sat-loss", "0", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let budget = fs::read_to_string(out.join("budget.csv")).unwrap();
    let absorption = budget.lines().find(|l| l.starts_with("satellite_absorption")).unwrap();
    assert!(absorption.ends_with(",0.000000"), "{absorption}");
}

#[test]
fn sweep_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[sweep]\nd = [0.5, 0.6]\nL0 = [120e3]\n"));
    let out = dir.path().join("s");
    let o = satlens(&["sweep", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "d_m,L0_m,transmission,loss_db");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.5,120000,"));
}

#[test]
fn missing_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("lambda = 800e-9\n", ""));
    let o = satlens(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}

#[test]
fn out_of_range_value_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = satlens(&["run", &cfg, "--grid-n", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerics.grid_n"));
    let o = satlens(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_analytic_passes() {
    let o = satlens(&["verify", "analytic"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            satlens::scenario::Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
