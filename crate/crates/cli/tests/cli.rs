use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use sweepcal::config::Config;

fn sweepcal(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sweepcal"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn data_rows(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count() - 1
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn only_run_dir(root: &Path) -> std::path::PathBuf {
    let mut dirs: Vec<_> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.pop().unwrap()
}

/// Distinct `(method, cell)` pairs in a report.
fn cells(report: &Path) -> BTreeSet<(String, String)> {
    let mut r = csv::Reader::from_path(report).unwrap();
    r.records().map(|rec| rec.unwrap()).map(|rec| (rec[1].to_string(), rec[2].to_string())).collect()
}

#[test]
fn synth_writes_three_csvs_of_scan_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["synth"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let s = dir.path().join("synth");
    let n = Config::default().samples();
    assert_eq!(n, 4096);
    for f in ["mzi.csv", "interferogram.csv", "sweep.csv"] {
        assert_eq!(data_rows(&s.join(f)), n, "{f}");
    }
    let summary = json(&s.join("summary.json"));
    assert_eq!(summary["config"]["adc"]["bits"], 14);
    assert_eq!(summary["config"]["mzi"]["dl"], 2e-3);
}

#[test]
fn synth_is_deterministic_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(sweepcal(d.path(), &["--seed", "11", "synth"]).status.success());
    }
    for f in ["mzi.csv", "interferogram.csv", "sweep.csv"] {
        let x = std::fs::read(a.path().join("synth").join(f)).unwrap();
        let y = std::fs::read(b.path().join("synth").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    assert!(sweepcal(c.path(), &["--seed", "12", "synth"]).status.success());
    assert_ne!(std::fs::read(a.path().join("synth/mzi.csv")).unwrap(), std::fs::read(c.path().join("synth/mzi.csv")).unwrap());
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[source]\nlazer = 1310e-9\n").unwrap();
    let o = sweepcal(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("lazer"), "{}", text(&o.stderr));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 3\n[sweep]\nrate = 300e3\n").unwrap();
    let o = sweepcal(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let summary = json(&dir.path().join("synth/summary.json"));
    assert_eq!(summary["config"]["seed"], 3);
    assert_eq!(data_rows(&dir.path().join("synth/mzi.csv")), 2048);
}

#[test]
fn realtime_calibration_finds_configured_depth() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["calibrate", "--method", "realtime"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let run = dir.path().join("calibrate/realtime");
    let z = json(&run.join("summary.json"))["calibrated"]["peak_depth_m"].as_f64().unwrap();
    assert!((z - 998e-6).abs() < 3e-6, "{z}");
    assert!(run.join("scan.csv").exists() && run.join("ascan.csv").exists() && run.join("ascan.svg").exists());
}

#[test]
fn zero_crossing_takes_two_samples_per_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["calibrate", "--method", "zero-crossing"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let cfg = Config::default();
    let cycles = cfg.mzi.dl * cfg.profile().unwrap().span() / (2.0 * std::f64::consts::PI);
    let n = data_rows(&dir.path().join("calibrate/zero-crossing/scan.csv")) as f64;
    assert!((n - 2.0 * cycles).abs() <= 2.0, "{n} vs {}", 2.0 * cycles);
}

#[test]
fn no_calib_emits_both_ascans() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["calibrate", "--method", "ekf", "--no-calib"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let run = dir.path().join("calibrate/ekf");
    assert!(run.join("ascan.csv").exists());
    assert!(run.join("ascan_uncalibrated.csv").exists());
    let svg = std::fs::read_to_string(run.join("ascan.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn unknown_method_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["calibrate", "--method", "kalman"]);
    assert_eq!(o.status.code(), Some(1));
    let e = text(&o.stderr);
    assert!(e.contains("zero-crossing-quad") && e.contains("ipdft-rvci3"), "{e}");
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sweepcal(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let o = sweepcal(dir.path(), &["bench", "table32"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("noise-sweep"));
    assert_eq!(sweepcal(dir.path(), &["bench", "osr-surface", "--osr", "two"]).status.code(), Some(1));
    assert_eq!(sweepcal(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn table31_reports_eighteen_cells_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["bench", "table31", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", text(&o.stdout), text(&o.stderr));
    let run = only_run_dir(&dir.path().join("table31"));
    assert_eq!(cells(&run.join("report.csv")).len(), 18);
    assert!(run.join("plots/fwhm.svg").exists());
    let summary = json(&run.join("summary.json"));
    assert_eq!(summary["config"]["bench"]["trials"], 20);
    assert!(summary["assertions"].as_array().unwrap().iter().all(|a| a["passed"] == true));
    let first = std::fs::read(run.join("report.csv")).unwrap();

    let o = sweepcal(dir.path(), &["--threads", "1", "bench", "table31", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(only_run_dir(&dir.path().join("table31")), run);
    assert_eq!(std::fs::read(run.join("report.csv")).unwrap(), first);

    let o = sweepcal(dir.path(), &["report", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(text(&o.stdout).contains("PASS flatness"));
}

#[test]
fn too_few_trials_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sweepcal(dir.path(), &["bench", "table31", "--trials", "5"]).status.code(), Some(1));
}

#[test]
fn osr_surface_grid_size() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["bench", "osr-surface", "--osr", "2,4,8", "--trials", "10"]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", text(&o.stderr));
    let run = only_run_dir(&dir.path().join("osr-surface"));
    let cfg = Config::default();
    let kinds: Vec<&str> = cfg.bench.interp.iter().map(|k| k.name()).collect();
    let resampled = cells(&run.join("report.csv")).into_iter().filter(|(m, _)| kinds.contains(&m.as_str())).count();
    assert_eq!(resampled, 3 * cfg.bench.bits.len() * kinds.len());
    let summary = json(&run.join("summary.json"));
    let failed = summary["assertions"].as_array().unwrap().iter().any(|a| a["passed"] == false);
    assert_eq!(o.status.code(), Some(if failed { 2 } else { 0 }));
}

#[test]
fn timing_reports_medians() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweepcal(dir.path(), &["bench", "timing", "--lengths", "1024,4096", "--repeats", "5"]);
    assert!(matches!(o.status.code(), Some(0 | 2)), "{}", text(&o.stderr));
    let run = only_run_dir(&dir.path().join("timing"));
    let mut r = csv::Reader::from_path(run.join("report.csv")).unwrap();
    let medians: Vec<String> =
        r.records().map(|x| x.unwrap()).filter(|x| &x[3] == "median").map(|x| x[1].to_string()).collect();
    assert_eq!(medians.len(), 8);
    for m in ["ekf", "ukf", "hilbert", "ipdft"] {
        assert!(medians.iter().any(|x| x == m));
    }
    assert_eq!(json(&run.join("summary.json"))["reproducible"], false);
}

#[test]
fn report_exit_code_follows_stored_assertions() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    std::fs::create_dir_all(&run).unwrap();
    std::fs::write(
        run.join("summary.json"),
        r#"{"experiment":"skew","hash":"0","passed":false,"assertions":[{"name":"lms[x]","passed":false,"detail":"d"}]}"#,
    )
    .unwrap();
    let o = sweepcal(dir.path(), &["report", run.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stdout).contains("FAIL lms[x]"));
    assert_eq!(sweepcal(dir.path(), &["report", dir.path().join("missing").to_str().unwrap()]).status.code(), Some(1));
}
