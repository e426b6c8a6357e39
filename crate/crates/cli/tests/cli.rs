use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-lps"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    text.trim_end().to_string()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn study_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "study",
        "--levels",
        "4,8",
        "--postprocess",
        "two-space",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&out_dir.join("study.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "n");
    assert_eq!(rows[2][0], "8");
    assert!(rows[2][7].parse::<f64>().unwrap().is_finite());
    let svg = std::fs::read_to_string(out_dir.join("errors.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let vtk = std::fs::read_to_string(out_dir.join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    let out_dir = dir.path().join("from_file");
    std::fs::write(
        &cfg,
        format!(
            "# coarse run\nlevels = 2, 4, 8\nvtk = false\noutput_dir = {}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = run(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--levels",
        "2,4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(csv_rows(&out_dir.join("study.csv")).len(), 3);
    assert!(!out_dir.join("solution.vtk").exists());

    let out = run(&[
        "study",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "levels=2",
    ]);
    assert!(out.status.success());
    assert_eq!(csv_rows(&out_dir.join("study.csv")).len(), 2);
}

#[test]
fn matrix_market_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "study",
        "--levels",
        "2",
        "--matrix-market",
        "true",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mtx = std::fs::read_to_string(dir.path().join("augmented_n2.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real general"));
    assert!(dir.path().join("mass_n2.mtx").exists());
}

#[test]
fn eig_prints_requested_pairs() {
    let out = run(&["eig", "--n", "4", "--eigen-count", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lambdas: Vec<f64> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(lambdas.len(), 3);
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn postprocess_improves_coarse_eigenvalue() {
    let out = run(&["postprocess", "--n", "4", "--mode", "two-space"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap()
            .parse()
            .unwrap()
    };
    let exact = 52.3446911;
    assert!((value("lambda_tilde") - exact).abs() < (value("lambda_h") - exact).abs());
}

#[test]
fn infsup_lists_each_level() {
    let out = run(&["infsup", "--levels", "2,4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn failures_are_one_categorized_line() {
    for (args, category, code) in [
        (vec!["eig", "--tol", "-1"], "invalid-argument", 1),
        (vec!["eig", "--element", "q7"], "invalid-argument", 1),
        (vec!["study", "--config", "/nonexistent/x.cfg"], "io", 1),
        (vec!["study", "--levels", "8,4"], "invalid-argument", 1),
        (vec!["frobnicate"], "usage", 2),
        (vec!["infsup", "--levels", "64"], "invalid-argument", 1),
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let line = stderr_line(&out);
        assert!(
            line.starts_with(&format!("error[{category}]: ")),
            "{args:?}: {line}"
        );
    }
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "levels = 4\nlevels = 8\n").unwrap();
    let out = run(&["study", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(
        line.starts_with("error[config]: ") && line.contains('2'),
        "{line}"
    );
}

#[test]
fn failed_study_keeps_partial_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "study",
        "--levels",
        "2,8",
        "--tol",
        "1e-10",
        "--max-iterations",
        "1",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error[convergence-failure]: "));
    let rows = csv_rows(&dir.path().join("study.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "2");
}
