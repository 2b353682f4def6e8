use std::path::Path;
use std::process::Command;

use rfconv_cli::config::{Preset, RunConfig};
use rfconv_cli::output::read_csv;

fn rfconv(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rfconv"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn single_point_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfconv(dir.path(), &["theory", "--lambda-grid", "0.5:2:1"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
}

#[test]
fn unknown_activation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfconv(
        dir.path(),
        &[
            "theory",
            "--lambda-grid",
            "0.5:2:4",
            "--activation",
            "softsign",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theory_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfconv(
        dir.path(),
        &[
            "theory",
            "--activation",
            "relu",
            "--figure",
            "t",
            "--lambda-grid",
            "0.3:2:5",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("t_lagrangian.csv")).unwrap();
    assert_eq!(
        header,
        [
            "lambda",
            "lambda_bar",
            "ubar",
            "a_u",
            "tbar",
            "a_t",
            "risk",
            "norm"
        ]
    );
    assert_eq!(rows.len(), 5);
    // lambda = 0.3 lies below the uniform boundary but above the interpolator one.
    assert_eq!(rows[0][2], "NaN");
    assert_eq!(rows[0][3], "NaN");
    assert_ne!(rows[0][4], "NaN");
    for row in &rows[1..] {
        assert!(row.iter().all(|c| c != "NaN"), "{row:?}");
    }
    let risk: f64 = rows[2][6].parse().unwrap();
    assert!((risk - 0.60524).abs() < 1e-4);
}

#[test]
fn simulation_output_is_reproducible() {
    let args = [
        "simulate",
        "--activation",
        "relu",
        "--figure",
        "s",
        "--d",
        "20",
        "--n-features",
        "50",
        "--n-samples",
        "30",
        "--replicates",
        "4",
        "--seed",
        "11",
        "--lambda-grid",
        "0.8:1.6:3",
        "--lambda-t-grid",
        "0.5:1.5:3",
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(rfconv(a.path(), &args).status.success());
    assert!(rfconv(b.path(), &args).status.success());
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n == "s_replicates.csv"));
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn config_round_trip() {
    for preset in [Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4] {
        let c = preset.config();
        let text = c.to_toml();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml(), text);
    }
}

#[test]
fn printed_config_feeds_back_in() {
    let dir = tempfile::tempdir().unwrap();
    let out = rfconv(
        dir.path(),
        &[
            "theory",
            "--paper-defaults",
            "fig4",
            "--psi2",
            "2.0",
            "--print-config",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, &text).unwrap();
    let again = rfconv(
        dir.path(),
        &[
            "theory",
            "--config",
            path.to_str().unwrap(),
            "--print-config",
        ],
    );
    let cfg = RunConfig::parse(&String::from_utf8(again.stdout).unwrap()).unwrap();
    assert_eq!(cfg.params.psi2, 2.0);
    assert_eq!(cfg.figure, "fig4");
}

#[test]
fn overlay_keeps_unrelated_fields() {
    let base = Preset::Fig2.config();
    let c = RunConfig::overlay(base.clone(), "alpha = 2.0\n[params]\ntau_sq = 0.3\n").unwrap();
    assert_eq!(c.alpha, 2.0);
    assert_eq!(c.params.tau_sq, 0.3);
    assert_eq!(c.params.activation, base.params.activation);
    assert_eq!(c.grids, base.grids);
    assert!(RunConfig::overlay(base, "bogus = 1\n").is_err());
}

#[test]
fn powerlaw_reads_a_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.csv");
    let mut text = String::from("x,y\n");
    for k in 1..=20 {
        let x = 10f64.powf(k as f64 / 10.0);
        text.push_str(&format!("{x},{}\n", 4.0 * x.powf(-1.5)));
    }
    std::fs::write(&input, text).unwrap();
    let out = rfconv(
        dir.path(),
        &[
            "powerlaw",
            "--figure",
            "p",
            "--input",
            input.to_str().unwrap(),
            "--x",
            "x",
            "--y",
            "y",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("p_powerlaw.csv")).unwrap();
    let col = header.iter().position(|h| h == "slope").unwrap();
    let slope: f64 = rows[0][col].parse().unwrap();
    assert!((slope + 1.5).abs() < 1e-10, "{slope}");
}
