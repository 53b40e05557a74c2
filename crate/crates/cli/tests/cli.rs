use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ramsey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramsey")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_in(dir: &Path, command: &str, config: &Path) -> Output {
    let out = ramsey(&[command, "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{command} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn visibility_header_and_first_row() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), "visibility", &configs().join("zigzag_to_linear.toml"));
    let csv = read(dir.path(), "visibility.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t_us,visibility,overlap_re,overlap_im"));
    assert_eq!(lines.next(), Some("0.0,1.0,1.0,0.0"));
    assert_eq!(csv.lines().count(), 2002);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[0] - 10.0).abs() < 1e-9);

    let manifest = read(dir.path(), "manifest.toml");
    assert!(manifest.contains("command = \"visibility\""));
    assert!(manifest.contains("hbar_tilde"));
    assert!(manifest.contains("time_unit_us"));
    assert!(!manifest.contains("unix_time"));
    assert!(read(dir.path(), "run_info.toml").contains("unix_time_s"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("phase_diagram.toml");
    run_in(a.path(), "phase-diagram", &cfg);
    let out = ramsey(&[
        "phase-diagram",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
        "--threads",
        "0",
    ]);
    assert!(out.status.success());
    for name in ["phase_diagram.csv", "phase_boundary.csv", "manifest.toml"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn phase_diagram_boundary() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), "phase-diagram", &configs().join("phase_diagram.toml"));
    let pd = read(dir.path(), "phase_diagram.csv");
    assert!(pd.starts_with("g,delta,structure_g,structure_e\n"));
    assert_eq!(pd.lines().count(), 1 + 21 * 11);
    let boundary = read(dir.path(), "phase_boundary.csv");
    assert!(boundary.starts_with("delta,g_c\n"));
    let row = rows(&boundary)
        .into_iter()
        .find(|r| (r[0].parse::<f64>().unwrap() - 0.025).abs() < 1e-12)
        .unwrap();
    let gc: f64 = row[1].parse().unwrap();
    assert!((gc + 0.0165).abs() < 5e-4, "{gc}");
    // At delta = 0.025 the e-state is linear just above g_c and zigzag below.
    for r in rows(&pd) {
        let (g, delta): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        if (delta - 0.025).abs() < 1e-12 && (g - gc).abs() > 1e-3 {
            let expect = if g < gc { "zigzag" } else { "linear" };
            assert_eq!(r[3], expect, "g = {g}");
        }
    }
}

#[test]
fn revivals_collapse_in_scaled_units() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("revivals.toml");
    fs::write(
        &cfg,
        "[trap]\nion_count = 3\nnu_x_mhz = 1.0\ng = -0.05\ndelta = 0.025\n\n\
         [sweep]\ng = { start = -0.05, stop = -0.03, steps = 3 }\n\n\
         [revivals]\nion_counts = [3, 5]\nsamples = 20001\n",
    )
    .unwrap();
    run_in(dir.path(), "revivals", &cfg);
    let csv = read(dir.path(), "revivals.csv");
    assert!(csv.starts_with("N,g,t_first_peak_us\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 6);
    assert!(r.iter().all(|row| !row[2].is_empty()));
    let manifest = read(dir.path(), "manifest.toml");
    assert!(manifest.contains("revival_threshold = 0.05"));

    let scaled = rows(&read(dir.path(), "revivals_scaled.csv"));
    let value = |row: &Vec<String>| -> (f64, f64) { (row[1].parse().unwrap(), row[2].parse().unwrap()) };
    let three: Vec<(f64, f64)> = scaled.iter().filter(|r| r[0] == "3").map(value).collect();
    let five: Vec<(f64, f64)> = scaled.iter().filter(|r| r[0] == "5").map(value).collect();
    // Compare at matching g - g_c by linear interpolation of the N = 5 curve.
    for &(x, t3) in &three {
        let pair = five.windows(2).find(|w| (w[0].0 - x) * (w[1].0 - x) <= 0.0);
        if let Some(w) = pair {
            let t5 = w[0].1 + (w[1].1 - w[0].1) * (x - w[0].0) / (w[1].0 - w[0].0);
            assert!((t3 - t5).abs() / t5 < 0.1, "{x}: {t3} vs {t5}");
        }
    }
}

#[test]
fn sweep_records_failed_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // g = 0, delta = 0 is the bare critical point: both chains have a zero mode.
    fs::write(
        &cfg,
        "[trap]\nion_count = 3\nnu_x_mhz = 1.0\n\n[sweep]\ng = { start = 0.0, stop = 0.05, steps = 2 }\ndelta = { start = 0.0, stop = 0.0, steps = 1 }\n",
    )
    .unwrap();
    run_in(dir.path(), "curvature", &cfg);
    let csv = read(dir.path(), "curvature.csv");
    assert_eq!(csv, format!("g,delta,eta,eta_per_us2\n0.0,0.0,,\n0.05,0.0,0.0,0.0\n"));
    let manifest = read(dir.path(), "manifest.toml");
    assert!(manifest.contains("points_failed = 1"));
    assert!(manifest.contains("[[errors]]"));
}

#[test]
fn modes_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("spectrum.toml");
    run_in(dir.path(), "modes", &cfg);
    let modes = rows(&read(dir.path(), "modes.csv"));
    assert_eq!(modes.len(), 12);
    assert_eq!(modes[0][0], "g");
    assert_eq!(modes[0][1], "zigzag");
    assert_eq!(modes[6][1], "linear");
    let w1: f64 = modes[6][3].parse().unwrap();

    run_in(dir.path(), "spectrum", &cfg);
    let peaks = rows(&read(dir.path(), "peaks.csv"));
    let top = peaks
        .iter()
        .max_by(|a, b| a[2].parse::<f64>().unwrap().total_cmp(&b[2].parse::<f64>().unwrap()))
        .unwrap();
    assert_eq!(top[3], "w1");
    assert!((top[0].parse::<f64>().unwrap() - w1).abs() < 0.01);
    assert!(read(dir.path(), "spectrum.csv").starts_with("omega,nu_mhz,f_re,f_im,f_abs,f_log_re,f_log_im,f_log_abs\n"));
}

#[test]
fn spectrum_map_ridge_follows_the_soft_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.toml");
    fs::write(
        &cfg,
        "[trap]\nion_count = 3\nnu_x_mhz = 1.0\ng = -0.1\ndelta = 0.025\n\n\
         [sweep]\ng = { start = -0.1, stop = -0.06, steps = 3 }\n",
    )
    .unwrap();
    run_in(dir.path(), "spectrum-map", &cfg);
    let ridge = rows(&read(dir.path(), "spectrum_map_ridge.csv"));
    assert_eq!(ridge.len(), 3);
    let w: Vec<f64> = ridge.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(ridge.iter().all(|r| r[4] == "w1"));
    // The zigzag mode of the e-state softens as g rises towards g_c.
    assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[trap]\nion_count = 3\nnu_x_mhz = 1.0\nnu_y_mhz = 1.5\ng = 0.1\ndelta = 0.0\n").unwrap();
    let out = ramsey(&["visibility", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`trap`"));

    fs::write(&cfg, "[trap]\nion_count = 3\nnu_x_mhz = 1.0\ng = 0.1\ndelta = 0.0\n[time]\nsampels = 3\n").unwrap();
    let out = ramsey(&["visibility", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time.sampels"));

    let out = ramsey(&["visibility", "--config", "/nonexistent.toml", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = ramsey(&["visibility", "--format", "json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("critical.toml");
    fs::write(&cfg, "[trap]\nion_count = 3\nnu_x_mhz = 1.0\ng = 0.0\ndelta = 0.0\n").unwrap();
    let out = ramsey(&["visibility", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
