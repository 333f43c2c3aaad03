//! The `ac-mask` binary end to end: exit codes, file formats, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const COLUMNS: &str = "source,detector,engine,M,N,K,omega,phase_noise,snr_db,ser,ci_low,ci_high,errors,trials,seed";

fn ac_mask(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ac-mask"))
        .args(args)
        .current_dir(dir)
        .env_remove("AC_MASK_WORKERS")
        .output()
        .expect("binary runs")
}

fn recipe(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const MINIMAL: &str = r#"
[sweep]
orders = [2]
antennas = [1]
k_factors = [4.0]
snr_db = { start = 20.0, stop = 20.0, step = 1.0 }
detectors = ["ac-heuristic"]
engines = ["approach-ii"]
"#;

const COHERENT_VS_HEURISTIC: &str = r#"
[sweep]
orders = [2]
antennas = [1, 2, 4]
k_factors = [4.0]
snr_db = { start = 0.0, stop = 10.0, step = 5.0 }
detectors = ["coherent", "ac-heuristic"]

[mc]
trials = 20000
seed = 17
"#;

#[test]
fn minimal_recipe_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = recipe(dir.path(), "minimal.toml", MINIMAL);
    let o = ac_mask(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "res", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], COLUMNS);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("analytic,ac-heuristic,approach-ii,2,1,4,1,0,20,"));
    assert!(lines[1].ends_with(",,,,,"));
    assert!(!dir.path().join("res.json").exists());
}

#[test]
fn misspelt_key_exits_2_and_names_it() {
    let dir = TempDir::new().unwrap();
    let cfg = recipe(dir.path(), "bad.toml", &MINIMAL.replace("detectors =", "detctors ="));
    let o = ac_mask(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("detctors"), "{}", stderr(&o));
}

#[test]
fn unreadable_recipe_exits_1() {
    let dir = TempDir::new().unwrap();
    let o = ac_mask(&["sweep", "--config", "does-not-exist.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn engine_failure_without_fallback_exits_3() {
    let dir = TempDir::new().unwrap();
    let text = MINIMAL
        .replace("engines = [\"approach-ii\"]", "engines = [\"approach-i\"]\nallow_fallback = false")
        .replace("start = 20.0, stop = 20.0", "start = 0.0, stop = 0.0");
    let cfg = recipe(dir.path(), "strict.toml", &text.replace("orders = [2]", "orders = [4]"));
    let o = ac_mask(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    // the same recipe with fallback permitted succeeds
    let cfg = recipe(dir.path(), "lenient.toml", &std::fs::read_to_string(&cfg).unwrap().replace("false", "true"));
    let o = ac_mask(&["sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn simulated_sweep_is_byte_identical_across_runs_and_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = recipe(dir.path(), "c.toml", COHERENT_VS_HEURISTIC);
    let cfg = cfg.to_str().unwrap();
    let a = ac_mask(&["sweep", "--config", cfg, "--out", "a", "--format", "csv", "--workers", "1"], dir.path());
    assert!(a.status.success(), "{}", stderr(&a));
    let b = Command::new(env!("CARGO_BIN_EXE_ac-mask"))
        .args(["sweep", "--config", cfg, "--out", "b", "--format", "csv"])
        .current_dir(dir.path())
        .env("AC_MASK_WORKERS", "3")
        .output()
        .unwrap();
    assert!(b.status.success(), "{}", stderr(&b));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    // three antenna counts, two detectors, three SNR points
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("mc,")));
}

#[test]
fn seed_flag_changes_the_draws() {
    let dir = TempDir::new().unwrap();
    let cfg = recipe(dir.path(), "c.toml", COHERENT_VS_HEURISTIC);
    let cfg = cfg.to_str().unwrap();
    for (out, seed) in [("x", "1"), ("y", "2")] {
        let o = ac_mask(&["sweep", "--config", cfg, "--out", out, "--format", "csv", "--seed", seed], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let x = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
    let y = std::fs::read_to_string(dir.path().join("y.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn json_rows_match_csv_values() {
    let dir = TempDir::new().unwrap();
    let mut text = COHERENT_VS_HEURISTIC.replace("detectors = [\"coherent\", \"ac-heuristic\"]", "detectors = [\"ac-heuristic\"]\nengines = [\"numeric\"]");
    text = text.replace("antennas = [1, 2, 4]", "antennas = [2]");
    let cfg = recipe(dir.path(), "j.toml", &text);
    let o = ac_mask(&["sweep", "--config", cfg.to_str().unwrap(), "--out", "j"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv_text = std::fs::read_to_string(dir.path().join("j.csv")).unwrap();
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("j.json")).unwrap()).unwrap();
    let meta = &json["metadata"];
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert!(meta["wall_clock_s"].as_f64().unwrap() >= 0.0);
    let rows = json["rows"].as_array().unwrap();
    let lines: Vec<&str> = csv_text.lines().skip(1).collect();
    assert_eq!(rows.len(), lines.len());
    for (row, line) in rows.iter().zip(lines) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(row["source"], fields[0]);
        assert_eq!(row["ser"].as_f64().unwrap(), fields[9].parse::<f64>().unwrap());
        match row["ci_low"].as_f64() {
            Some(v) => assert_eq!(v, fields[10].parse::<f64>().unwrap()),
            None => assert_eq!(fields[10], ""),
        }
        match row["seed"].as_u64() {
            Some(v) => assert_eq!(v.to_string(), fields[14]),
            None => assert_eq!(fields[14], ""),
        }
    }
}

#[test]
fn density_traces_integrate_to_one() {
    let dir = TempDir::new().unwrap();
    let cfg = recipe(
        dir.path(),
        "pdf.toml",
        r#"
[pdf]
order = 4
antennas = 1
k_factor = 10.0
snr_db = 27.0
zeta = { start = 0.0, stop = 3.5, step = 0.0001 }
samples = 20000
"#,
    );
    let o = ac_mask(&["pdf", "--config", cfg.to_str().unwrap(), "--out", "d", "--format", "csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,zeta,pdf_analytic,pdf_mc_histogram");
    let mut traces: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 4];
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        traces[f[0].parse::<usize>().unwrap()].push((f[1].parse().unwrap(), f[2].parse().unwrap()));
    }
    for (m, t) in traces.iter().enumerate() {
        let mass: f64 = t.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[1].1 + w[0].1)).sum();
        assert!((mass - 1.0).abs() < 1e-3, "m={m}: {mass}");
    }
    // the central symbol's density peaks at the origin
    let peak = traces[0].iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert_eq!(peak.0, 0.0);
}

#[test]
fn validate_filter_runs_one_module() {
    let dir = TempDir::new().unwrap();
    let o = ac_mask(&["validate", "--filter", "specfun"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    let checks: Vec<&str> = out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|l| l.contains(" specfun/")), "{out}");
}

#[test]
fn perturbed_threshold_fails_validation_with_exit_4() {
    let dir = TempDir::new().unwrap();
    let o = ac_mask(&["validate", "--filter", "detectors", "--perturb-threshold", "1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("threshold-equivalence"), "{}", stderr(&o));
}

#[test]
fn unknown_filter_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = ac_mask(&["validate", "--filter", "plotting"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
