use std::path::Path;
use std::process::{Command, Output};

use mdfold::config::ExperimentConfig;
use mdfold::report::{sweep_from_csv, sweep_to_csv};
use mdfold::sweep::{run_sweep, SweepOptions, METHODS};
use mdfold_core::io::field_from_csv;
use mdfold_core::{reconstruct, DetectionConfig, LevelEstimator};

const SMALL: &str = "\
# small grid for quick runs
t2_list = 0.04, 0.08
sigma_list = 0.01, 0.08
trials = 3
domain_min = -1.5
domain_max = 1.5
";

fn mdfold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdfold"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.cfg");
    std::fs::write(&p, SMALL).unwrap();
    p
}

#[test]
fn encode_then_recover_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let out = dir.path().join("run");
    let o = mdfold(&["encode", "--config", path(&cfg_path), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("folds="));
    for f in [
        "signal.csv",
        "samples.csv",
        "clean.csv",
        "ledger_events.csv",
        "ledger_levels.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }

    // Re-encoding from the written signal reproduces the samples byte for byte.
    let again = dir.path().join("again");
    let o = mdfold(&[
        "encode",
        "--config",
        path(&cfg_path),
        "--signal",
        path(&out.join("signal.csv")),
        "--out",
        path(&again),
    ]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read(out.join("samples.csv")).unwrap(),
        std::fs::read(again.join("samples.csv")).unwrap()
    );

    let rec_dir = dir.path().join("rec");
    let o = mdfold(&[
        "recover",
        "--config",
        path(&cfg_path),
        "--samples",
        path(&out.join("samples.csv")),
        "--out",
        path(&rec_dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("all="));
    for f in [
        "reconstruction.csv",
        "recovery_folds.csv",
        "recovery_levels.csv",
        "conditions.txt",
    ] {
        assert!(rec_dir.join(f).exists(), "{f} missing");
    }

    // The binary's reconstruction matches the library on the same samples.
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let y = field_from_csv::<f64>(
        &std::fs::read_to_string(out.join("samples.csv")).unwrap(),
        2,
    )
    .unwrap();
    let lat = mdfold::sweep::lattice_for(&cfg, 0.04).unwrap();
    let det = DetectionConfig::new(&mdfold::sweep::params(&cfg).unwrap(), &lat, 1)
        .unwrap()
        .with_levels(LevelEstimator::AllSlices);
    let want = reconstruct(&y, &det).unwrap().estimate;
    let got = field_from_csv::<f64>(
        &std::fs::read_to_string(rec_dir.join("reconstruction.csv")).unwrap(),
        2,
    )
    .unwrap();
    assert_eq!(got, want);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "lambda = 0.3\nwobble = 1\n").unwrap();
    let o = mdfold(&["bounds", "--config", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wobble"));

    let o = mdfold(&["bounds", "--config", path(&dir.path().join("missing.cfg"))]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&bad, "h = 0.25\n").unwrap();
    let o = mdfold(&["bounds", "--config", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let o = mdfold(&[
        "recover",
        "--config",
        path(&cfg_path),
        "--samples",
        path(&dir.path().join("nothing.csv")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));

    // A field without the x₁ origin cannot be recovered.
    let samples = dir.path().join("shifted.csv");
    let mut text = String::from("k1,k2,value\n");
    for k1 in 1..5 {
        for k2 in 0..8 {
            text += &format!("{k1},{k2},0.0\n");
        }
    }
    std::fs::write(&samples, text).unwrap();
    let o = mdfold(&[
        "recover",
        "--config",
        path(&cfg_path),
        "--samples",
        path(&samples),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bounds_prints_one_line_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let o = mdfold(&["bounds", "--config", path(&cfg_path)]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines
        .iter()
        .all(|l| l.contains(" C=") && l.contains("p_acc=")));
    assert!(lines[0].starts_with("t2=0.04 sigma=0.01"));
}

#[test]
fn bench_writes_sweep_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = small_config(dir.path());
    let out = dir.path().join("bench");
    let o = mdfold(&[
        "bench",
        "--config",
        path(&cfg_path),
        "--out",
        path(&out),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows = sweep_from_csv(&text).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.trials == 3 && r.wall_ms == 0));
    for m in METHODS {
        let svg = std::fs::read_to_string(out.join(format!("accuracy_{m}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    // Same cells in process, and the CSV survives a parse/print cycle.
    let cfg = ExperimentConfig::parse(SMALL).unwrap();
    let result = run_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert_eq!(sweep_to_csv(&result), text);
    assert_eq!(rows, result.rows);
}
