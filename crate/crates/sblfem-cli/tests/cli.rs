//! End-to-end checks of the installed binary.

use std::process::{Command, Output};

fn sblfem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sblfem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn mu_prints_the_golden_ratio_roots() {
    // b = c = 1 with eps1 = eps2 = 1 makes the characteristic roots the
    // golden ratio and its conjugate.
    let out = sblfem(&["mu", "--example", "1", "--eps1", "1", "--eps2", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mu0 = 0.618"), "{text}");
    assert!(text.contains("mu1 = 1.618"), "{text}");
    assert!(text.contains("regime = transition"), "{text}");
}

#[test]
fn mu_flags_degenerate_reaction_data() {
    let out = sblfem(&["mu", "--example", "2", "--eps1", "1e-9", "--eps2", "1e-4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mu0 = 0 "), "{text}");
    assert!(text.contains("no left layer element"), "{text}");
}

#[test]
fn mesh_prints_breakpoints_widths_and_dof() {
    let out = sblfem(&[
        "mesh",
        "--example",
        "1",
        "--eps1",
        "1e-9",
        "--eps2",
        "1e-4",
        "--p",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(
        text.contains("breakpoints: 0 | 3.27482e-4 | 9.99973e-1 | 1"),
        "{text}"
    );
    assert!(
        text.trim_end().lines().next().unwrap().ends_with("| 1"),
        "{text}"
    );
    assert!(text.contains("elements = 3, dof = 8"), "{text}");
}

#[test]
fn solve_reports_error_and_dumps_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = sblfem(&[
        "solve",
        "--example",
        "1",
        "--eps1",
        "1e-2",
        "--eps2",
        "1e-1",
        "--p",
        "2",
        "--dump-matrix",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("dof = 5"), "{text}");
    assert!(text.contains("relative energy error = 5.44726"), "{text}");
    let matrix = std::fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 5);
    assert_eq!(matrix.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn solve_without_a_closed_form_suggests_reference_mode() {
    let out = sblfem(&[
        "solve",
        "--example",
        "2",
        "--eps1",
        "1e-9",
        "--eps2",
        "1e-4",
        "--p",
        "2",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("--error-mode reference"));
    let out = sblfem(&[
        "solve",
        "--example",
        "2",
        "--eps1",
        "1e-9",
        "--eps2",
        "1e-4",
        "--p",
        "2",
        "--error-mode",
        "reference",
    ]);
    assert!(out.status.success());
    assert!(
        stdout(&out).contains("reference truth: degree 4"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn sweep_rejects_an_inverted_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = sblfem(&[
        "sweep",
        "--eps1",
        "1e-4",
        "--eps2",
        "1e-9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("eps1"), "{err}");
}

#[test]
fn sweep_writes_artifacts_and_fit_lines() {
    let dir = tempfile::tempdir().unwrap();
    let out = sblfem(&[
        "sweep",
        "--eps1",
        "1e-2",
        "--eps2",
        "1e-1",
        "--p-min",
        "1",
        "--p-max",
        "5",
        "--deterministic-timing",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("sigma_hat"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(dir.path().join("sweep.svg").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# sweep defaults\nexample = 1\neps1 = 1e-2\neps2 = 1e-1\np-min = 1\np-max = 3\ndeterministic-timing = true\n",
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = sblfem(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--p-max",
        "5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    // Header plus p = 1..5: the flag overrode p-max from the file.
    assert_eq!(csv.lines().count(), 6);
    assert!(csv.contains("1.0000000000000000e-2"), "{csv}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "p-mx = 3\n").unwrap();
    let out = sblfem(&["sweep", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn paper_writes_the_full_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = sblfem(&["paper", "--out", dir.path().to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "example1.csv",
        "example2.csv",
        "example1.svg",
        "example2.svg",
        "regime_convection_reaction_diffusion.svg",
        "regime_transition.svg",
        "regime_reaction_diffusion.svg",
        "metadata.txt",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    assert_eq!(stdout(&out).matches("wrote ").count(), 8);
}

#[test]
fn unknown_problem_number_fails_cleanly() {
    let out = sblfem(&["mu", "--example", "7", "--eps1", "1e-3", "--eps2", "1e-2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown registry problem"));
}
