use std::path::Path;
use std::process::{Command, Output};

fn dispersive(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dispersive"))
        .args(args)
        .env("DISPERSIVE_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lake_at_rest_passes_its_checks() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(
        &[
            "run",
            "--scenario",
            "lake_at_rest",
            "--n",
            "64",
            "--t-end",
            "1",
            "--check",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
    assert!(!stdout(&o).contains("FAIL"));
    let inv = std::fs::read_to_string(dir.path().join("invariants.csv")).unwrap();
    assert!(inv.starts_with("t,mass,"));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(&["run", "--config", "/nonexistent/run.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenario = \"soliton\"\nmodel = \"bbm_bbm\"\nresolution = 3\n").unwrap();
    let o = dispersive(&["config", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(&["run", "--scenario", "soliton", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn soliton_convergence_study_writes_eoc_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(
        &[
            "run",
            "--scenario",
            "soliton",
            "--eoc",
            "--orders",
            "2,4",
            "--eoc-n",
            "64,128",
            "--t-end",
            "0.5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let table = std::fs::read_to_string(dir.path().join("eoc.csv")).unwrap();
    let lines: Vec<_> = table.lines().collect();
    assert_eq!(lines.len(), 1 + 4, "{table}");
}

#[test]
fn malformed_experimental_data_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("gauges.csv");
    std::fs::write(&data, "gauge_id,t,eta\n0,0.0,0.01\n0,abc,0.02\n").unwrap();
    let o = dispersive(
        &[
            "run",
            "--scenario",
            "dingemans",
            "--n",
            "128",
            "--t-end",
            "1",
            "--gauges",
            "3.04",
            "--experimental-data",
            data.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn failing_threshold_exits_with_check_code() {
    // Split forms removed: the modified entropy drifts well beyond the central-scheme bound.
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(
        &[
            "run",
            "--scenario",
            "dingemans",
            "--model",
            "svaerd_kalisch",
            "--naive",
            "--check",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL modified entropy drift"));
}

#[test]
fn gauges_are_written_per_position() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(
        &[
            "run",
            "--scenario",
            "dingemans",
            "--n",
            "128",
            "--t-end",
            "2",
            "--gauges",
            "3.04,9.44",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for i in 0..2 {
        let g = std::fs::read_to_string(dir.path().join(format!("gauge_{i}.csv"))).unwrap();
        assert!(g.starts_with("t,eta"));
        assert!(g.lines().count() > 2);
    }
}

#[test]
fn config_command_prints_resolved_toml() {
    let dir = tempfile::tempdir().unwrap();
    let o = dispersive(&["config", "--scenario", "soliton", "--order", "6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("scenario = \"soliton\""), "{text}");
    assert!(text.contains("order = 6"), "{text}");
}
