use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use orlicz_lab::criteria::log_log_fit;

struct Run {
    code: i32,
    dir: PathBuf,
    stderr: String,
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("orlicz-lab-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(name: &str, command: &str, config: &str, extra: &[&str]) -> Run {
    let dir = scratch(name);
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_orlicz-lab"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: output.status.code().unwrap(),
        dir: out,
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn criteria(dir: &Path) -> Vec<(String, String, f64)> {
    rows(&dir.join("criteria.csv"))
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string(), r[2].parse().unwrap()))
        .collect()
}

fn verdict_of(dir: &Path, name: &str) -> String {
    criteria(dir).into_iter().find(|c| c.0 == name).unwrap().1
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const POWER2: &str = r#"{"family": "power", "params": {"p": 2}}"#;
const EXP: &str = r#"{"family": "exp_power", "params": {"a": 1, "b": 1}}"#;

#[test]
fn certify_memberships() {
    let r = run("cert-power", "certify", &format!(r#"{{"seed": 1, "orlicz": {POWER2}}}"#), &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let certs: Vec<(String, String)> = rows(&r.dir.join("certificates.csv"))
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string()))
        .collect();
    for (cond, verdict) in [("delta2", "pass"), ("uniform_nabla0", "pass"), ("delta_sharp2", "fail")] {
        assert!(certs.contains(&(cond.into(), verdict.into())), "{certs:?}");
    }
    let r = run("cert-exp", "certify", &format!(r#"{{"seed": 1, "orlicz": {EXP}}}"#), &[]);
    assert_eq!(r.code, 0);
    let certs = rows(&r.dir.join("certificates.csv"));
    assert!(certs.iter().any(|c| &c[0] == "delta_sharp2" && &c[1] == "pass"));
}

#[test]
fn config_errors_exit_64() {
    let bad_family = r#"{"seed": 1, "orlicz": {"family": "powr", "params": {"p": 2}}}"#;
    assert_eq!(run("bad-family", "certify", bad_family, &[]).code, 64);
    let no_seed = format!(r#"{{"orlicz": {POWER2}}}"#);
    assert_eq!(run("no-seed", "certify", &no_seed, &[]).code, 64);
    let unknown = format!(r#"{{"seed": 1, "orlicz": {POWER2}, "colour": 3}}"#);
    assert_eq!(run("unknown-field", "certify", &unknown, &[]).code, 64);
    let bad_grid = r#"{"seed": 1, "symbol": {"family": "lens", "params": {"beta": 0.5}},
        "grids": {"h_grid": [0.5, 1.5]}}"#;
    assert_eq!(run("bad-grid", "profile", bad_grid, &[]).code, 64);
    let n_max = r#"{"seed": 1, "lemma": {"f": {"kind": {"kind": "power", "q": 1}},
        "g": {"kind": {"kind": "power", "q": 2}}, "n_max": 2}}"#;
    let r = run("n-max", "lemma32", n_max, &[]);
    assert_eq!(r.code, 64);
    assert!(r.stderr.contains("n_max"));
}

#[test]
fn self_map_violation_exit_65() {
    let cfg = r#"{"seed": 1, "symbol": {"family": "dilation", "params": {"r": 1.5, "dim": 2}}}"#;
    let r = run("self-map", "profile", cfg, &[]);
    assert_eq!(r.code, 65);
    assert!(r.stderr.contains("self-map violation"), "{}", r.stderr);
}

fn profile_slope(dir: &Path, min_hits: u64) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = rows(&dir.join("profile.csv"))
        .iter()
        .filter(|r| r[4].parse::<u64>().unwrap() >= min_hits)
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .unzip();
    log_log_fit(&x, &y).unwrap().slope
}

#[test]
fn profiles() {
    let identity = r#"{"seed": 4, "symbol": {"family": "dilation", "params": {"r": 1, "dim": 1}}}"#;
    let r = run("profile-identity", "profile", identity, &[]);
    assert_eq!(r.code, 0);
    let s = profile_slope(&r.dir, 100);
    assert!((s - 2.0).abs() < 0.15, "{s}");

    let constant = r#"{"seed": 4, "symbol": {"family": "constant", "params": {"w0": [[0.3, 0]]}},
        "samples": {"n_per_cell": 4000}}"#;
    let r = run("profile-constant", "profile", constant, &[]);
    for row in rows(&r.dir.join("profile.csv")) {
        let h: f64 = row[0].parse().unwrap();
        if h < 0.7 {
            assert_eq!(&row[1], "0");
        }
    }

    let lens = r#"{"seed": 4, "symbol": {"family": "lens", "params": {"beta": 0.5}},
        "grids": {"h_grid": [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125]}}"#;
    let r = run("profile-lens", "profile", lens, &[]);
    assert_eq!(r.code, 0);
    let s = profile_slope(&r.dir, 1);
    assert!((s - 4.0).abs() < 0.15, "{s}");
}

#[test]
fn analyze_constant_passes() {
    let cfg = format!(
        r#"{{"seed": 2, "symbol": {{"family": "constant", "params": {{"w0": [[0.3, 0]]}}}}, "orlicz": {EXP}}}"#
    );
    let r = run("analyze-constant", "analyze", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    for (name, verdict, _) in criteria(&r.dir) {
        if name != "lens_lower_bound_exponent" {
            assert_eq!(verdict, "pass", "{name}");
        }
    }
    assert_eq!(manifest(&r.dir)["consistency"]["inconsistent"], 0);
}

#[test]
fn analyze_identity() {
    let cfg = format!(
        r#"{{"seed": 2, "symbol": {{"family": "dilation", "params": {{"r": 1, "dim": 1}}}}, "orlicz": {POWER2}}}"#
    );
    let r = run("analyze-identity", "analyze", &cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(verdict_of(&r.dir, "psi_carleson_big_oh"), "pass");
    for name in ["psi_carleson_little_oh", "boundary_ratio_alpha", "classical_angular_ratio", "h_infty_compact"] {
        assert_eq!(verdict_of(&r.dir, name), "fail", "{name}");
    }
}

#[test]
fn analyze_lens_every_weight() {
    for alpha in [0, 1, 2] {
        let cfg = format!(
            r#"{{"seed": 5, "symbol": {{"family": "lens", "params": {{"beta": 0.5}}}}, "orlicz": {EXP},
                "space": {{"kind": "bergman", "alpha": {alpha}}}}}"#
        );
        let r = run(&format!("analyze-lens-{alpha}"), "analyze", &cfg, &[]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let (_, verdict, margin) = criteria(&r.dir)
            .into_iter()
            .find(|c| c.0 == "boundary_ratio_alpha")
            .unwrap();
        assert_eq!(verdict, "fail");
        assert!((margin - 0.5).abs() < 0.02, "{margin}");
    }
}

#[test]
fn manifest_lists_exactly_the_written_files() {
    let cfg = format!(
        r#"{{"seed": 3, "symbol": {{"family": "lens", "params": {{"beta": 0.5}}}}, "orlicz": {POWER2}}}"#
    );
    let r = run("manifest", "analyze", &cfg, &[]);
    let m = manifest(&r.dir);
    let listed: BTreeSet<String> = m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect();
    let mut written = BTreeSet::new();
    for entry in std::fs::read_dir(&r.dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            for inner in std::fs::read_dir(&p).unwrap() {
                let q = inner.unwrap().path();
                written.insert(q.strip_prefix(&r.dir).unwrap().to_string_lossy().into_owned());
            }
        } else {
            written.insert(p.strip_prefix(&r.dir).unwrap().to_string_lossy().into_owned());
        }
    }
    assert_eq!(listed, written);
    assert_eq!(m["config"]["seed"], 3);
    assert_eq!(m["command"], "analyze");
    assert!(m["timings"].as_array().unwrap().len() >= 2);
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = r#"{"seed": 1, "symbol": {"family": "dilation", "params": {"r": 1, "dim": 1}},
        "samples": {"n_per_cell": 2000}}"#;
    let a = run("seed-a", "profile", cfg, &[]);
    let b = run("seed-b", "profile", cfg, &["--seed", "2"]);
    assert_eq!(manifest(&b.dir)["config"]["seed"], 2);
    assert_ne!(
        std::fs::read(a.dir.join("profile.csv")).unwrap(),
        std::fs::read(b.dir.join("profile.csv")).unwrap()
    );
}

fn breakpoints(dir: &Path) -> Vec<f64> {
    rows(&dir.join("breakpoints.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect()
}

#[test]
fn lemma_sequences() {
    let cfg = r#"{"seed": 1, "lemma": {"f": {"kind": {"kind": "power", "q": 1}},
        "g": {"kind": {"kind": "power", "q": 2}}, "n_max": 8}}"#;
    let r = run("lemma-square", "lemma32", cfg, &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(breakpoints(&r.dir)[..6], [0.0, 1.0, 2.0, 4.0, 16.0, 256.0]);
    let art: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(r.dir.join("lemma32.json")).unwrap()).unwrap();
    assert!(art["ratio"]["delta_hat"].as_f64().unwrap() > 0.0);

    let cfg = r#"{"seed": 1, "lemma": {"f": {"kind": {"kind": "power", "q": 1}},
        "g": {"kind": {"kind": "power", "q": 1}}, "n_max": 10}}"#;
    let r = run("lemma-identity", "lemma32", cfg, &[]);
    assert_eq!(breakpoints(&r.dir), (0..=10).map(f64::from).collect::<Vec<_>>());
    let art: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(r.dir.join("lemma32.json")).unwrap()).unwrap();
    assert_eq!(art["ratio"]["delta_hat"].as_f64(), Some(1.0));
}

#[test]
fn exhausted_domain_exit_66() {
    let cfg = r#"{"seed": 1, "lemma": {"f": {"kind": {"kind": "power", "q": 1}},
        "g": {"kind": {"kind": "exp", "a": 1}, "x_max": 50}, "n_max": 30}}"#;
    let r = run("lemma-exhausted", "lemma32", cfg, &[]);
    assert_eq!(r.code, 66);
    assert!(r.stderr.contains("domain exhausted after a_4"), "{}", r.stderr);
    assert!(r.dir.join("breakpoints.csv").exists());
}
