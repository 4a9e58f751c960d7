use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn triwell(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triwell"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = triwell(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = table(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[k].clone()).collect()
}

fn floats(path: &Path, name: &str) -> Vec<f64> {
    column(path, name).iter().map(|s| s.parse().unwrap()).collect()
}

fn sidecar(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn spectrum_of_free_bosons() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["spectrum", "--n", "30", "--omega", "-1", "--chi", "0", "--mu", "0", "--k", "4"]);
    let e = floats(&d.join("spectrum.csv"), "energy");
    assert_eq!(e.len(), 4);
    assert!((e[0] + 60.0).abs() < 1e-9, "{e:?}");
    let meta = sidecar(&d.join("spectrum.json"));
    assert_eq!(meta["config"]["model"]["n"], 30);
    assert_eq!(meta["config"]["model"]["omega"], -1.0);

    ok(d, &["spectrum", "--n", "1", "--omega", "-1", "--chi", "0", "--mu", "0", "--k", "3"]);
    let e = floats(&d.join("spectrum.csv"), "energy");
    for (got, want) in e.iter().zip([-2.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-12, "{e:?}");
    }
    assert_eq!(column(&d.join("spectrum.csv"), "index"), ["0", "1", "2"]);
}

#[test]
fn raw_and_reduced_parameters_agree() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    // chi = kappa (N - 1) / Omega with N = 6, Omega = -1.
    ok(&a, &["spectrum", "--n", "6", "--chi", "2.5", "--k", "3"]);
    ok(&b, &["spectrum", "--n", "6", "--kappa", "-0.5", "--k", "3"]);
    let ea = floats(&a.join("spectrum.csv"), "energy");
    let eb = floats(&b.join("spectrum.csv"), "energy");
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x - y).abs() < 1e-10);
    }
    assert_eq!(sidecar(&b.join("spectrum.json"))["config"]["model"]["input"], "raw");
}

#[test]
fn usage_errors_exit_2_without_files() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().join("out");
    for args in [
        &["spectrum", "--n", "3", "--bogus"][..],
        &["spectrum", "--n", "3", "--chi", "1", "--kappa", "1"],
        &["spectrum", "--n", "three"],
        &["spectrum", "--n", "3", "--k", "0"],
        &["spectrum", "--n", "1", "--chi", "1"],
        &["purity-scan", "--n", "4", "--chi-min", "2", "--chi-max", "1"],
        &["scaling", "--n", "10"],
        &["trajectory", "--chi", "1"],
        &["trajectory", "--init", "1,2,3"],
        &["spectrum", "--workers", "0"],
    ] {
        let out = triwell(&d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
        assert!(!d.exists(), "{args:?} left files behind");
    }
}

#[test]
fn numerical_failure_exits_3() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path().join("out");
    // chi_c above every chi_q: the power law has no positive offset to fit.
    let out = triwell(
        &d,
        &["scaling", "--n", "4,5,6", "--chi-step", "0.05", "--tolerance", "0.01", "--chi-c", "10"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.exists());
}

#[test]
fn purity_scan_fans_out_per_n() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["purity-scan", "--n", "4,6", "--chi-max", "3", "--chi-step", "0.5"]);
    for n in [4, 6] {
        let path = d.join(format!("purity_n{n}.csv"));
        let (header, rows) = table(&path);
        assert_eq!(header, ["chi", "purity", "dP_dchi"]);
        assert_eq!(rows.len(), 7);
        let chi = floats(&path, "chi");
        assert!(chi.windows(2).all(|w| w[1] > w[0]));
        let p = floats(&path, "purity");
        assert!((p[0] - 1.0).abs() < 1e-10);
        let dp = column(&path, "dP_dchi");
        assert!(dp[0].is_empty() && dp[6].is_empty() && !dp[3].is_empty());
        assert_eq!(sidecar(&d.join(format!("purity_n{n}.json")))["results"]["n"], n);
    }
}

#[test]
fn reruns_and_worker_counts_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|s| tmp.path().join(s)).collect();
    let scan = ["purity-scan", "--n", "8", "--chi-max", "3", "--chi-step", "0.25"];
    let theta = ["theta-min", "--chi-max", "3", "--chi-step", "0.05"];
    for (dir, workers) in dirs.iter().zip(["1", "1", "3"]) {
        for cmd in [&scan[..], &theta[..]] {
            let mut args = cmd.to_vec();
            args.extend(["--workers", workers]);
            ok(dir, &args);
        }
    }
    for name in ["purity_n8.csv", "theta_min.csv"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        assert_eq!(a, fs::read(dirs[1].join(name)).unwrap(), "{name} rerun");
        assert_eq!(a, fs::read(dirs[2].join(name)).unwrap(), "{name} workers");
    }
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "n = 5\nchi = 1.5\nk = 2\n").unwrap();
    let d = tmp.path().join("out");
    ok(&d, &["spectrum", "--config", cfg.to_str().unwrap()]);
    let meta = sidecar(&d.join("spectrum.json"));
    assert_eq!(meta["config"]["model"]["n"], 5);
    assert_eq!(meta["config"]["model"]["chi"], 1.5);
    assert_eq!(meta["config"]["k"], 2);

    // Flags override the file; a raw flag displaces reduced file values.
    ok(&d, &["spectrum", "--config", cfg.to_str().unwrap(), "--k", "3", "--kappa", "0.1"]);
    let meta = sidecar(&d.join("spectrum.json"));
    assert_eq!(meta["config"]["k"], 3);
    assert_eq!(meta["config"]["model"]["input"], "raw");
    assert_eq!(meta["config"]["model"]["kappa"], 0.1);

    fs::write(&cfg, "n = 5\nchi = 1.5\nlambda = 0.1\n").unwrap();
    let out = triwell(&tmp.path().join("bad"), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&cfg, "particles = 5\n").unwrap();
    let out = triwell(&tmp.path().join("bad"), &["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fields_count_maxima_and_echo_grids() {
    let tmp = TempDir::new().unwrap();
    for (chi, peaks) in [("0", 1), ("3", 3)] {
        let d = tmp.path().join(chi);
        ok(&d, &["fields", "--n", "30", "--chi", chi]);
        let meta = sidecar(&d.join("husimi.json"));
        assert_eq!(meta["results"]["local_maxima"], peaks, "chi = {chi}");
    }
    let d = tmp.path().join("small");
    ok(&d, &["fields", "--n", "6", "--grid", "21", "--phase-grid", "32"]);
    let (h, rows) = table(&d.join("husimi.csv"));
    assert_eq!(h, ["I1", "I2", "Q"]);
    assert_eq!(rows.len(), 21 * 21);
    assert_eq!(table(&d.join("phase.csv")).1.len(), 32 * 32);
    assert_eq!(sidecar(&d.join("phase.json"))["results"]["shape"], serde_json::json!([32, 32]));
}

#[test]
fn fixed_points_and_branch_crossing() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["fixed-points", "--chi", "3"]);
    let path = d.join("fixed_points.csv");
    let labels = column(&path, "label");
    let stability = column(&path, "stability");
    assert!(labels.iter().zip(&stability).any(|(l, s)| l == "4+" && s == "stable-center"));
    for r in floats(&path, "residual") {
        assert!(r < 1e-10);
    }
    for chi in ["0", "1", "1.97", "2.5", "5"] {
        ok(d, &["fixed-points", "--chi", chi]);
        assert_eq!(column(&path, "label").iter().filter(|l| *l == "1+").count(), 1, "chi = {chi}");
    }

    ok(d, &["fixed-points", "--scan-min", "1.99", "--scan-max", "2.01", "--scan-step", "0.0005"]);
    let scan = d.join("branch_energies.csv");
    let chi = floats(&scan, "chi");
    let gap = column(&scan, "one_plus_minus_four_plus");
    let mut changes = Vec::new();
    for i in 1..chi.len() {
        if let (Ok(a), Ok(b)) = (gap[i - 1].parse::<f64>(), gap[i].parse::<f64>()) {
            if (a > 0.0) != (b > 0.0) {
                changes.push(0.5 * (chi[i - 1] + chi[i]));
            }
        }
    }
    assert_eq!(changes.len(), 1, "{changes:?}");
    assert!((changes[0] - 2.0).abs() < 1e-3);
}

#[test]
fn trajectories_conserve_energy_and_show_both_regimes() {
    let tmp = TempDir::new().unwrap();
    let ro = tmp.path().join("ro");
    ok(&ro, &["trajectory", "--chi", "1.5", "--init", "1.8,0", "--init", "2.0,0.1", "--t-max", "50"]);
    for k in 0..2 {
        let path = ro.join(format!("trajectory_{k:03}.csv"));
        let e = floats(&path, "E");
        let scale = e[0].abs().max(1.0);
        assert!(e.iter().all(|x| (x - e[0]).abs() / scale < 1e-8));
        let iz = floats(&path, "I_z");
        let mean = iz.iter().sum::<f64>() / iz.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.1, "mean I_z {mean}");
        let t = floats(&path, "t");
        assert_eq!(t.len(), 5001);
        assert!((t[5000] - 50.0).abs() < 1e-9);
    }

    let mst = tmp.path().join("mst");
    ok(&mst, &["fixed-points", "--chi", "3"]);
    let fp = mst.join("fixed_points.csv");
    let theta4 = column(&fp, "label")
        .iter()
        .zip(floats(&fp, "theta"))
        .find(|(l, _)| *l == "4+")
        .map(|(_, t)| t)
        .unwrap();
    let init = format!("{},0", theta4 + 0.05);
    ok(&mst, &["trajectory", "--chi", "3", "--init", &init]);
    let iz = floats(&mst.join("trajectory_000.csv"), "I_z");
    assert!(iz.iter().all(|&z| z < 0.0));
}

#[test]
fn theta_min_table() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["theta-min"]);
    let path = d.join("theta_min.csv");
    let chi = floats(&path, "chi");
    assert_eq!(chi.len(), 401);
    assert!(chi.windows(2).all(|w| w[1] > w[0]));
    let residual = floats(&path, "identity_residual");
    for (c, r) in chi.iter().zip(&residual) {
        if (c - 2.0).abs() > 0.05 {
            assert!(*r < 1e-6, "chi = {c}: {r}");
        }
    }
    let theta = floats(&path, "theta_min");
    let jumps: Vec<usize> = column(&path, "jump")
        .iter()
        .enumerate()
        .filter(|(_, j)| *j == "true")
        .map(|(i, _)| i)
        .collect();
    assert_eq!(jumps.len(), 1);
    let i = jumps[0];
    assert!(chi[i - 1] <= 2.0 && chi[i] >= 2.0);
    assert!((theta[i] - theta[i - 1]).abs() >= 0.1);
}

#[test]
fn scaling_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["scaling", "--n", "6,8,10", "--chi-step", "0.02", "--tolerance", "1e-3"];
    ok(&a, &args);
    ok(&b, &args);
    assert_eq!(fs::read(a.join("scaling.csv")).unwrap(), fs::read(b.join("scaling.csv")).unwrap());
    let meta = sidecar(&a.join("scaling.json"));
    for key in ["exponent", "exponent_stderr", "ln_prefactor", "ln_prefactor_stderr"] {
        assert!(meta["results"][key].is_f64(), "{key}");
    }
    assert_eq!(meta["results"]["chi_c_source"], "level crossing");
}
