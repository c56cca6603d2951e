use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopforge")).args(args).output().expect("spawn loopforge")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn verify_passes_and_reports_json() {
    let o = run(&["verify", "--algebra", "H", "--mode", "float", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(checks.iter().any(|c| c["name"] == "associator-vanishes"));
}

#[test]
fn corrupted_table_fails_with_named_identities() {
    let o = run(&["verify", "--algebra", "O", "--mode", "float", "--set", "verify.fixture=corrupted-table"]);
    assert_eq!(code(&o), 1);
    let e = stderr(&o);
    assert!(e.contains("failing identities") && e.contains("moufang-middle"), "{e}");
    // the report is still written
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "--algebra", "R"][..],
        &["verify", "--algebra", "X"],
        &["verify", "--mode", "symbolic"],
        &["verify", "--set", "verify.nope=1"],
        &["verify", "--set", "novalue"],
        &["verify", "--tol", "-1"],
        &["flow", "--mode", "exact"],
        &["flow", "--set", "flow.grid=2"],
        &["frobnicate"],
        &["verify", "--config", "/nonexistent/loopforge.conf"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_loopforge")).args(["cs"]).env("LOOPFORGE_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn tight_tolerance_turns_into_identity_failure() {
    let o = run(&["verify", "--algebra", "C", "--mode", "float", "--tol", "1e-300"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn config_file_and_out_path() {
    let cfg = tmp("cli.conf");
    let out = tmp("cli-report.json");
    std::fs::write(&cfg, "algebra = C\nmode = float\n[verify]\nsamples = 40\nfields = false\n").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let first = &v["checks"][0];
    assert_eq!(first["samples"], 40);
    // flags override the file
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--algebra", "H"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("associator-vanishes"));
}

#[test]
fn companions_print_the_nucleus() {
    let o = run(&["companions", "--algebra", "O"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("N^R(UO) = {±1} ≅ Z₂"));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["companion_dimension"], 1);
    for (map, mode) in [("adq", "exact"), ("group", "float")] {
        let o = run(&["companions", "--algebra", "O", "--mode", mode, "--set", &format!("companions.map={map}")]);
        assert_eq!(code(&o), 0, "{map}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["expected_in_span"], true);
    }
    let o = run(&["companions", "--algebra", "O", "--set", "companions.map=group"]);
    assert_eq!(code(&o), 2);
    let o = run(&["companions", "--algebra", "H"]);
    assert!(stderr(&o).contains("N^R(UH) = UH"));
}

#[test]
fn torsion_csv_shape_and_trivial_fields() {
    let o = run(&["torsion", "--algebra", "O", "--set", "torsion.points=2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("x0,") && header.ends_with("residual"));
    assert_eq!(lines.count(), 8);

    let o = run(&["torsion", "--algebra", "H", "--set", "torsion.start=constant", "--set", "torsion.connection=zero"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let ncols = text.lines().next().unwrap().split(',').count();
    for row in text.lines().skip(1) {
        // everything after the coordinates vanishes
        assert!(row.split(',').skip(3).all(|c| c.parse::<f64>().unwrap() == 0.0), "{row}");
        assert_eq!(row.split(',').count(), ncols);
    }

    let o = run(&["torsion", "--algebra", "C"]);
    assert_eq!(code(&o), 0);
    let worst = stdout(&o).lines().skip(1).map(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn constant_flow_is_already_critical() {
    let hist = tmp("flow-history.csv");
    let o = run(&["flow", "--algebra", "H", "--set", "flow.start=constant", "--set", "flow.grid=8", "--set", &format!("flow.history={}", hist.display())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["iterations"], 0);
    assert_eq!(v["converged"], true);
    assert!(std::fs::read_to_string(&hist).unwrap().lines().count() >= 1);
}

#[test]
fn short_flow_is_monotone() {
    let o = run(&["flow", "--algebra", "H", "--set", "flow.grid=12", "--set", "flow.max_iterations=40"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["monotone"], true);
    assert!(v["final_energy"].as_f64().unwrap() < v["initial_energy"].as_f64().unwrap());
    // unconverged within 40 steps means failing the divergence check
    if v["converged"] == false {
        assert_eq!(code(&o), 1);
    }
}

#[test]
fn reports_are_byte_identical() {
    let args = ["cs", "--algebra", "H", "--seed", "5"];
    let a = Command::new(env!("CARGO_BIN_EXE_loopforge")).args(args).env("LOOPFORGE_THREADS", "1").output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_loopforge")).args(args).env("LOOPFORGE_THREADS", "3").output().unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["cs", "--algebra", "H", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
}
