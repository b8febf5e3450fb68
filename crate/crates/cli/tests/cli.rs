use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbm"))
        .args(args)
        .env_remove("QBM_OUT_DIR")
        .output()
        .expect("qbm binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = qbm(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "qbm {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Header and numeric rows of a CSV table; `#` lines are metadata.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.trim().parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i]).collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn printed_config_round_trips() {
    let tmp = TempDir::new().unwrap();
    let first = run_ok(&["noise", "--print-config", "--set", "params.hbar=0.25", "--seed", "9"]);
    let text = String::from_utf8(first.stdout).unwrap();
    assert!(text.contains("hbar = 0.25"));
    let path = tmp.path().join("run.toml");
    std::fs::write(&path, &text).unwrap();
    let second = run_ok(&["noise", "--print-config", "--config", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8(second.stdout).unwrap(), text);
}

#[test]
fn classical_noise_spectrum_is_flat() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("noise");
    run_ok(&[
        "noise",
        "--out",
        &out_arg(&dir),
        "--set",
        "params.mass=2.0",
        "--set",
        "params.gamma=0.5",
        "--set",
        "params.temperature=3.0",
        "--set",
        "time.steps=4096",
        "--set",
        "noise.realizations=64",
        "--set",
        "noise.bands=16",
    ]);
    let flat = 2.0 * 2.0 * 0.5 * 3.0;
    let (h, rows) = read_csv(&dir.join("spectrum.csv"));
    for s in column(&h, &rows, "s_ff") {
        assert!((s / flat - 1.0).abs() < 1e-12, "{s} vs {flat}");
    }
    let (h, rows) = read_csv(&dir.join("periodogram.csv"));
    let target = column(&h, &rows, "target");
    let power = column(&h, &rows, "power");
    let se = column(&h, &rows, "standard_error");
    for i in 0..rows.len() {
        assert!((target[i] / flat - 1.0).abs() < 1e-9);
        assert!((power[i] - flat).abs() < 5.0 * se[i] + 0.02 * flat, "band {i}: {} vs {flat}", power[i]);
    }
    let m = manifest(&dir);
    assert_eq!(m["command"], "noise");
    assert_eq!(m["files"].as_array().unwrap().len(), 3);
}

#[test]
fn reruns_are_byte_identical_and_seed_sensitive() {
    let tmp = TempDir::new().unwrap();
    let args = |dir: &Path, seed: &str| {
        let mut a: Vec<String> = ["noise", "--set", "time.steps=1024", "--seed", seed, "--out"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        a.push(out_arg(dir));
        a
    };
    let digests = |dir: &Path| -> Vec<(String, String)> {
        manifest(dir)["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| (f["path"].as_str().unwrap().into(), f["sha256"].as_str().unwrap().into()))
            .collect()
    };
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let v = args(dir, seed);
        run_ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    assert_eq!(digests(&a), digests(&b));
    for (path, _) in digests(&a) {
        assert_eq!(std::fs::read(a.join(&path)).unwrap(), std::fs::read(b.join(&path)).unwrap());
    }
    let traj = |d: &Path| std::fs::read(d.join("noise_trajectory.csv")).unwrap();
    assert_ne!(traj(&a), traj(&c));
}

#[test]
fn manifest_digests_match_files() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("d");
    run_ok(&["dispersion", "--out", &out_arg(&dir)]);
    for f in manifest(&dir)["files"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        let hex: String = sha256_hex(&bytes);
        assert_eq!(f["sha256"].as_str().unwrap(), hex);
    }
}

/// Digest via the system `sha256sum`, independent of the crate under test.
fn sha256_hex(bytes: &[u8]) -> String {
    use std::io::Write;
    let mut child = Command::new("sha256sum")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .expect("sha256sum available");
    child.stdin.take().unwrap().write_all(bytes).unwrap();
    let out = child.wait_with_output().unwrap();
    String::from_utf8(out.stdout).unwrap().split_whitespace().next().unwrap().to_string()
}

#[test]
fn cutoff_sweep_is_monotone_and_matches_reference_ratios() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("cut");
    run_ok(&[
        "cutoff",
        "--out",
        &out_arg(&dir),
        "--set",
        "cutoff.theta_min=0.01",
        "--set",
        "cutoff.theta_max=3.0",
        "--set",
        "cutoff.points=2",
    ]);
    let (h, rows) = read_csv(&dir.join("cutoff.csv"));
    let ratio = column(&h, &rows, "ratio");
    assert!((ratio[0] / 14.292_060_169_247_501 - 1.0).abs() < 1e-9);
    assert!((ratio[1] / 1.298_271_973_737_000_8 - 1.0).abs() < 1e-9);

    let dense = tmp.path().join("dense");
    run_ok(&["cutoff", "--out", &out_arg(&dense)]);
    let (h, rows) = read_csv(&dense.join("cutoff.csv"));
    let omega = column(&h, &rows, "omega");
    assert_eq!(omega.len(), 31);
    assert!(omega.windows(2).all(|w| w[1] < w[0]));
    // Each row satisfies the cutoff equation with the default m = gamma = T = 1.
    let theta = column(&h, &rows, "theta");
    let estimate = column(&h, &rows, "estimate");
    for i in 0..rows.len() {
        let hbar = theta[i];
        let expected = (2.0 * std::f64::consts::PI / hbar).sqrt();
        assert!((estimate[i] / expected - 1.0).abs() < 1e-12, "estimate at theta {}", theta[i]);
    }
    assert_eq!(manifest(&dense)["checks"][0]["passed"], true);
}

#[test]
fn dispersion_high_frequency_limit() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("disp");
    run_ok(&[
        "dispersion",
        "--out",
        &out_arg(&dir),
        "--set",
        "params.hbar=0.5",
        "--set",
        "params.gamma=2.0",
        "--set",
        "dispersion.omega_max=1e6",
    ]);
    let (h, rows) = read_csv(&dir.join("dispersion.csv"));
    let im = column(&h, &rows, "im_q2");
    let limit = 2.0 * 1.0 * 2.0 / 0.5;
    assert!((im.last().unwrap() / limit - 1.0).abs() < 0.01, "{} vs {limit}", im.last().unwrap());
}

#[test]
fn smoluchowski_relaxes_to_boltzmann() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("smol");
    run_ok(&[
        "smoluchowski",
        "--out",
        &out_arg(&dir),
        "--set",
        "initial.kind=\"equilibrium\"",
        "--set",
        "smoluchowski.equilibrium_tolerance=1e-6",
    ]);
    let m = manifest(&dir);
    assert!(m["diagnostics"]["boltzmann_deviation"].as_f64().unwrap() < 1e-6);
    assert!(m["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn kramers_conserves_mass() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("kr");
    run_ok(&["kramers", "--out", &out_arg(&dir), "--set", "kramers.t_end=1.0"]);
    let m = manifest(&dir);
    let drift = m["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "relative_mass_drift")
        .unwrap();
    assert!(drift["value"].as_f64().unwrap() < 1e-10);
    assert!(dir.join("phase_space_final.csv").exists());
}

#[test]
fn langevin_writes_observables() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("lv");
    run_ok(&[
        "langevin",
        "--out",
        &out_arg(&dir),
        "--threads",
        "2",
        "--set",
        "time.steps=4096",
        "--set",
        "langevin.realizations=8",
    ]);
    let (h, rows) = read_csv(&dir.join("observables.csv"));
    assert!(!rows.is_empty());
    assert!(h.len() >= 2);
}

#[test]
fn constants_product_is_universal() {
    let tmp = TempDir::new().unwrap();
    // T* D = hbar c^2 / (8 k_B alpha), whatever the mass and friction.
    let hbar = 6.626_070_15e-34 / (2.0 * std::f64::consts::PI);
    let c = 299_792_458.0_f64;
    let expected = hbar * c * c / (8.0 * 1.380_649e-23 * 7.297_352_569_3e-3);
    for (i, (mass, gamma)) in [("9.1093837015e-31", "1e10"), ("1.67e-27", "3e8")].iter().enumerate() {
        let dir = tmp.path().join(format!("k{i}"));
        run_ok(&[
            "constants",
            "--out",
            &out_arg(&dir),
            "--set",
            &format!("params.mass={mass}"),
            "--set",
            &format!("params.gamma={gamma}"),
        ]);
        let (h, rows) = read_csv(&dir.join("constants.csv"));
        let product = column(&h, &rows, "product")[0];
        assert!((product / expected - 1.0).abs() < 1e-8, "{product} vs {expected}");
    }
}

#[test]
fn invalid_configuration_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let bad = qbm(&["noise", "--out", &out_arg(tmp.path()), "--set", "params.gamma=-1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("params.gamma"));

    let path = tmp.path().join("typo.toml");
    std::fs::write(&path, "[params]\ngama = 1.0\n").unwrap();
    let typo = qbm(&["noise", "--config", path.to_str().unwrap()]);
    assert_eq!(typo.status.code(), Some(1));

    let sweep = qbm(&["cutoff", "--out", &out_arg(tmp.path()), "--sweep", "params.hbar=1:0"]);
    assert_eq!(sweep.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_run_per_point() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("sw");
    run_ok(&[
        "dispersion",
        "--out",
        &out_arg(&root),
        "--sweep",
        "params.hbar=0.1:1:3:log",
    ]);
    let (h, rows) = read_csv(&root.join("sweep.csv"));
    let values = column(&h, &rows, "value");
    let expected = [0.1, 0.1f64.sqrt(), 1.0];
    for (v, e) in values.iter().zip(expected) {
        assert!((v / e - 1.0).abs() < 1e-12);
    }
    for (i, e) in expected.iter().enumerate() {
        let m = manifest(&root.join(format!("point_{i:03}")));
        assert!((m["config"]["params"]["hbar"].as_f64().unwrap() / e - 1.0).abs() < 1e-12);
        assert_eq!(m["sweep"]["index"], i);
    }
}

#[test]
fn integer_sweep_keys_stay_integral() {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path().join("seeds");
    run_ok(&["noise", "--out", &out_arg(&root), "--set", "time.steps=512", "--sweep", "seed=1:2:2"]);
    assert_eq!(manifest(&root.join("point_001"))["seed"], 2);
}

#[test]
fn env_var_sets_default_output_root() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qbm"))
        .args(["dispersion"])
        .env("QBM_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("dispersion/manifest.json").exists());
}
