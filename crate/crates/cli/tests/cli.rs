use std::process::{Command, Output};

fn ymlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ymlab"))
        .args(args)
        .env_remove("YMLAB_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn plumb_prints_the_epsilon_row() {
    let o = ymlab(&["plumb", "--kappa", "1.0", "--ell", "0.75"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());
    let k = header.iter().position(|&c| c == "epsilon").unwrap();
    assert_eq!(format!("{:.6}", row[k].parse::<f64>().unwrap()), "0.111111");
}

#[test]
fn audit_reports_are_byte_identical() {
    let base = std::env::temp_dir().join(format!("ymlab-cli-{}", std::process::id()));
    let report = |sub: &str| {
        let dir = base.join(sub);
        let o = ymlab(&["audit", "--suite", "kato", "--seed", "7", "--out", dir.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.join("report.json")).unwrap()
    };
    assert_eq!(report("a"), report("b"));
    std::fs::remove_dir_all(&base).unwrap();
}

#[test]
fn failing_checks_set_the_exit_code() {
    let o = ymlab(&["audit", "--suite", "reducibility", "--n", "16", "--nx", "8", "--ell", "0.4,0.2"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL reducible_ratio"), "{err}");
    assert!(err.contains("PASS lambda1_floor"), "{err}");
}

#[test]
fn config_round_trips_through_print_manifest() {
    let dir = std::env::temp_dir().join(format!("ymlab-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let o = ymlab(&["plumb", "--kappa", "0.5", "--ell", "0.1,0.2", "--print-manifest"]);
    assert!(o.status.success());
    let path = dir.join("m.toml");
    std::fs::write(&path, &o.stdout).unwrap();
    let again = ymlab(&["plumb", "--config", path.to_str().unwrap(), "--print-manifest"]);
    assert_eq!(again.stdout, o.stdout);
    let run = ymlab(&["plumb", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&run).lines().count(), 3);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn plot_data_lands_in_the_output_directory() {
    let dir = std::env::temp_dir().join(format!("ymlab-plot-{}", std::process::id()));
    let o = ymlab(&[
        "spectrum", "--n", "16", "--nx", "8", "--ell", "0.4,0.2", "--out", dir.to_str().unwrap(), "--plot", "lambda1",
    ]);
    assert!(o.status.code().is_some());
    let text = std::fs::read_to_string(dir.join("plots/lambda1_rep0.csv")).unwrap();
    assert!(text.starts_with("ell,lambda1,reducible_flag\n"));
    assert!(dir.join("manifest.toml").exists());
    let missing = ymlab(&["plumb", "--ell", "0.5", "--out", dir.to_str().unwrap(), "--plot", "decay"]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_is_an_error() {
    assert_eq!(ymlab(&["audit", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(ymlab(&["plumb", "--alpha", "0.2"]).status.code(), Some(2));
    assert_eq!(ymlab(&["plumb", "--kappa", "1.5", "--ell", "0.5"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_ymlab"))
        .args(["plumb", "--ell", "0.5"])
        .env("YMLAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("YMLAB_WORKERS"));
}

#[test]
fn worker_count_does_not_change_results() {
    let run = |w: &str| {
        Command::new(env!("CARGO_BIN_EXE_ymlab"))
            .args(["spectrum", "--n", "16", "--nx", "8", "--ell", "0.4,0.2"])
            .env("YMLAB_WORKERS", w)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn degenerate_example_runs() {
    let o = ymlab(&[
        "degenerate", "--topology", "genus2_separating_pinch", "--alpha", "0.3", "--beta", "0.25", "--ell",
        "0.4,0.2,0.1,0.05",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("ell,distance,transverse"));
    assert_eq!(text.lines().count(), 5);
}
