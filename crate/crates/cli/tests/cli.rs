use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_facilitrans"));
    c.env("RUST_LOG", "warn");
    c
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = bin()
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .status()
        .expect("binary runs");
    status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    assert_eq!(run("simulate", &preset("transport_7site.json"), &out, &[]), 0);
    let doc = json(&out.join("result.json"));
    let report = &doc["report"];
    assert!((report["truth_table"].as_f64().unwrap() - 0.950).abs() < 0.01);
    assert!((report["transfer_population"].as_f64().unwrap() - 0.956).abs() < 0.01);
    assert_eq!(doc["tool"], "facilitrans-cli");
    assert!(doc["config"].is_object());
    assert!(doc["physical"]["pulse_period_us"].as_f64().unwrap() > 0.0);

    let (header, rows) = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(header[0], "time");
    assert_eq!(header[1], "time_us");
    assert_eq!(header[2], "pulse_index");
    assert_eq!(header.last().unwrap(), "pop_site_7");
    assert_eq!(rows.len(), 1 + 5 * 51);
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(text.contains("\r\n"));
    let first_pop = text.lines().nth(1).unwrap().split(',').nth(3).unwrap();
    assert_eq!(first_pop, "1.0000000000000000e0");

    let svg = fs::read_to_string(out.join("heatmap.svg")).unwrap();
    let hash = doc["config_sha256"].as_str().unwrap();
    assert!(svg.contains(hash));
    assert_eq!(svg.matches("<line").count(), 4);
}

#[test]
fn no_svg_flag() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("simulate", &preset("two_atom.json"), dir.path(), &["--no-svg"]), 0);
    assert!(!dir.path().join("heatmap.svg").exists());
    assert!(dir.path().join("trajectory.csv").exists());
}

#[test]
fn two_atom_single_hop() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("simulate", &preset("two_atom.json"), dir.path(), &["--no-svg"]), 0);
    let (_, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    let last = rows.last().unwrap();
    // columns: time, pulse_index, P1, P2
    assert!(last[2] < 0.01, "{last:?}");
    assert!(last[3] > 0.99, "{last:?}");
    // the hop passes through |11>, which carries half the weight mid-pulse
    let peak = rows.iter().map(|r| r[2] + r[3] - 1.0).fold(0.0, f64::max);
    assert!((peak - 0.5).abs() < 0.02, "{peak}");
}

#[test]
fn bell_transport_sequence_length() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fs::read_to_string(preset("bell_transport_8site.json")).unwrap();
    // closed system keeps this quick; the populations stay near one half
    let cfg = cfg.replace("\"gamma_decay\": 0.002", "\"gamma_decay\": 0.0").replace("\"gamma_deph\": 0.004", "\"gamma_deph\": 0.0");
    let path = write_config(dir.path(), "bell.json", &cfg);
    assert_eq!(run("simulate", &path, &dir.path().join("o"), &["--no-svg"]), 0);
    let doc = json(&dir.path().join("o/result.json"));
    let bell = doc["report"]["bell_fidelities"].as_array().unwrap();
    assert_eq!(bell.len(), 3);
    assert_eq!(bell[2]["sites"], serde_json::json!([1, 8]));
    let pops = doc["report"]["final_populations"].as_array().unwrap();
    let p1 = pops[0].as_f64().unwrap();
    let p8 = pops[7].as_f64().unwrap();
    assert!((p1 - p8).abs() < 1e-9);
    assert!((p1 - 0.5).abs() < 0.02, "{p1}");
    assert!(doc["report"]["truth_table"].is_null());
}

#[test]
fn plan_examples() {
    let dir = tempfile::tempdir().unwrap();
    let tokens = |name: &str| {
        let out = dir.path().join(name);
        assert_eq!(run("plan", &preset(name), &out, &[]), 0);
        json(&out.join("schedule.json"))["tokens"].clone()
    };
    assert_eq!(tokens("route_reversal.json"), serde_json::json!([1, 2, 2, 1]));
    assert_eq!(tokens("route_leftward.json"), serde_json::json!([1, 2, 1]));
    let seven = write_config(
        dir.path(),
        "r.json",
        r#"{"n_sites": 7, "model": {"v1": 20, "v2": 10}, "route": {"start": 1, "waypoints": [6]}}"#,
    );
    assert_eq!(run("plan", &seven, &dir.path().join("r"), &[]), 0);
    let doc = json(&dir.path().join("r/schedule.json"));
    assert_eq!(doc["tokens"], serde_json::json!([1, 2, 1, 2, 1]));
    assert_eq!(doc["diagnostics"]["warning"], false);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let unknown = write_config(
        dir.path(),
        "u.json",
        r#"{"n_sites": 3, "model": {"v1": 20, "v2": 10, "typo": 1}, "schedule": [1]}"#,
    );
    let output = bin().args(["simulate", "--config"]).arg(&unknown).arg("--out").arg(&out).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("typo"));

    let unreachable = write_config(
        dir.path(),
        "w.json",
        r#"{"n_sites": 3, "model": {"v1": 20, "v2": 10}, "route": {"start": 1, "waypoints": [5]}}"#,
    );
    assert_eq!(run("plan", &unreachable, &out, &[]), 2);

    let hierarchy = write_config(dir.path(), "h.json", r#"{"n_sites": 3, "model": {"v1": 5, "v2": 10}, "schedule": [1]}"#);
    assert_eq!(run("simulate", &hierarchy, &out, &[]), 2);
    assert_eq!(run("simulate", &dir.path().join("missing.json"), &out, &[]), 2);
    assert_eq!(run("scan", &preset("transport_7site.json"), &out, &[]), 2);
    assert!(!out.exists());

    // an unreachable integrator tolerance is a dynamics failure
    let bad_tol = write_config(
        dir.path(),
        "t.json",
        r#"{"n_sites": 2, "model": {"v1": 20, "v2": 10, "gamma_decay": 0.1},
            "schedule": [1], "run": {"lindblad_tol": 1e-300}}"#,
    );
    assert_eq!(run("simulate", &bad_tol, &out, &["--no-svg"]), 3);

    let status = bin().args(["simulate", "--config", "x.json", "--workers", "many"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn degenerate_scan_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        r#"{"n_sites": 7, "model": {"v1": 20, "v2": 10, "d_delta1": -0.133, "d_delta2": -0.033},
            "schedule": [1, 2, 1, 2, 1], "observables": {"transfer_site": 6},
            "scan": {"axes": [{"parameter": "dDelta1", "min": -0.133, "max": -0.133, "count": 1}]}}"#,
    );
    assert_eq!(run("scan", &cfg, &dir.path().join("o"), &[]), 0);
    let (header, rows) = csv_rows(&dir.path().join("o/surface.csv"));
    assert_eq!(header, vec!["dDelta1", "objective"]);
    assert_eq!(rows.len(), 1);
    assert!((rows[0][1] - 0.952).abs() < 0.005);
    assert_eq!(run("optimize", &cfg, &dir.path().join("p"), &[]), 0);
    let doc = json(&dir.path().join("p/result.json"));
    assert_eq!(doc["optimum"]["iterations"], 0);
}

#[test]
fn small_optimize_improves_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.json",
        r#"{"n_sites": 7, "model": {"v1": 20, "v2": 10},
            "schedule": [1, 2, 1, 2, 1], "observables": {"transfer_site": 6},
            "scan": {"axes": [{"parameter": "dDelta1", "min": -0.3, "max": 0.1, "count": 3},
                              {"parameter": "dDelta2", "min": -0.3, "max": 0.1, "count": 3}]},
            "optimize": {"max_iterations": 60}}"#,
    );
    assert_eq!(run("optimize", &cfg, &dir.path().join("o"), &[]), 0);
    let doc = json(&dir.path().join("o/result.json"));
    let grid_best = doc["scan"]["best_value"].as_f64().unwrap();
    let best = doc["optimum"]["best_objective"].as_f64().unwrap();
    assert!(best >= grid_best);
    assert!(best >= 0.9495, "{best}");
    let (_, rows) = csv_rows(&dir.path().join("o/surface.csv"));
    assert_eq!(rows.len(), 9);
    assert!(dir.path().join("o/surface.svg").exists());
}

fn small_disorder(dir: &Path, sigma: &str) -> PathBuf {
    write_config(
        dir,
        "d.json",
        &format!(
            r#"{{"n_sites": 5, "model": {{"v1": 8.4, "v2": 4.2, "d_delta1": -0.293, "d_delta2": -0.267}},
                "schedule": [1, 2, 1, 2], "observables": {{"transfer_site": 5}},
                "run": {{"samples_per_pulse": 4}},
                "disorder": {{"sigma": {sigma}, "n_realizations": 6, "deviation_draws": 2000}},
                "seed": 11}}"#
        ),
    )
}

#[test]
fn zero_sigma_matches_clean_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_disorder(dir.path(), "[0, 0, 0]");
    assert_eq!(run("disorder", &cfg, &dir.path().join("d"), &[]), 0);
    assert_eq!(run("simulate", &cfg, &dir.path().join("s"), &["--no-svg"]), 0);
    let (header, mean) = csv_rows(&dir.path().join("d/disorder_mean.csv"));
    let (_, clean) = csv_rows(&dir.path().join("s/trajectory.csv"));
    assert_eq!(mean.len(), clean.len());
    let n = 5;
    assert_eq!(header[2 + n], "stderr_site_1");
    for (m, c) in mean.iter().zip(&clean) {
        for site in 0..n {
            assert!((m[2 + site] - c[2 + site]).abs() < 1e-12);
            assert_eq!(m[2 + n + site], 0.0);
        }
    }
    let (rh, reals) = csv_rows(&dir.path().join("d/realizations.csv"));
    assert_eq!(rh[..4], ["realization", "base_seed", "stream", "resamples"]);
    assert_eq!(reals.len(), 6);
    assert!(reals.iter().all(|r| r[1] == 11.0));
}

#[test]
fn disorder_outputs_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_disorder(dir.path(), "[0.01, 0.01, 0.09]");
    assert_eq!(run("disorder", &cfg, &dir.path().join("a"), &["--no-svg"]), 0);
    assert_eq!(run("disorder", &cfg, &dir.path().join("b"), &["--no-svg", "--seed", "12"]), 0);
    let a = json(&dir.path().join("a/result.json"));
    let b = json(&dir.path().join("b/result.json"));
    assert_eq!(a["seed"], 11);
    assert_eq!(b["seed"], 12);
    assert_eq!(b["config"]["seed"], 12);
    assert_ne!(a["disorder"]["final_mean"], b["disorder"]["final_mean"]);
    assert!(a["disorder"]["stderr_transfer"].as_f64().unwrap() > 0.0);
    let (h, dev) = csv_rows(&dir.path().join("a/deviation.csv"));
    assert_eq!(h, vec!["bond", "v", "sigma_x", "estimate", "mc_mean_abs", "mc_rms", "draws"]);
    assert_eq!(dev.len(), 2);
    // linearized estimate tracks the sampled RMS closely at small spread
    for row in &dev {
        assert!((row[3] - row[5]).abs() / row[5] < 0.1, "{row:?}");
    }
}

#[test]
fn echoed_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    assert_eq!(run("simulate", &preset("transport_7site.json"), &first, &[]), 0);
    let doc = json(&first.join("result.json"));
    let echo = write_config(dir.path(), "echo.json", &serde_json::to_string(&doc["config"]).unwrap());
    let second = dir.path().join("second");
    assert_eq!(run("simulate", &echo, &second, &[]), 0);
    for f in ["result.json", "trajectory.csv", "heatmap.svg"] {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn workers_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_disorder(dir.path(), "[0.01, 0.01, 0.09]");
    let status = bin()
        .env("FACILITRANS_WORKERS", "2")
        .args(["disorder", "--no-svg", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("e"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(run("disorder", &cfg, &dir.path().join("f"), &["--no-svg", "--workers", "1"]), 0);
    assert_eq!(
        fs::read(dir.path().join("e/result.json")).unwrap(),
        fs::read(dir.path().join("f/result.json")).unwrap()
    );
}

#[test]
fn all_presets_parse() {
    for entry in fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = facilitrans_cli::config::RunConfig::load(&path).unwrap();
        cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
