use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mesomem_core::{Configuration, Grid, PeriodicCurve, PhaseMap, Shape};
use serde_json::Value;
use tempfile::TempDir;

fn mesomem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mesomem"))
        .args(args)
        .env_remove("MESOMEM_THREADS")
        .output()
        .expect("spawn mesomem")
}

fn ok(args: &[&str]) -> Output {
    let out = mesomem(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

fn assert_svg(path: &Path) {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, z: &Configuration) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    z.write_to(&mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn circle_config(center: [f64; 2], n: usize) -> Configuration {
    let c = PeriodicCurve::from_shape(&Shape::Circle { r: 1.0 }, n)
        .unwrap()
        .translated(center);
    let chi = (0..n).map(|i| u8::from(2 * i >= n)).collect();
    Configuration::normal_rays(c, chi, vec![1.0; n]).unwrap()
}

#[test]
fn profile_table_and_figure() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "profile",
        "--c",
        "1",
        "--eps",
        "0.04",
        "--rmin",
        "-0.5",
        "--rmax",
        "0.5",
        "--n",
        "1000",
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = csv_rows(&dir.path().join("profile.csv"));
    assert_eq!(h, ["r", "q", "q_slope", "equipartition_residual"]);
    assert_eq!(rows.len(), 1001);
    let zero = rows.iter().find(|r| r[0] == 0.0).expect("r = 0 row");
    assert!((zero[1] - 0.888_889).abs() < 1e-6);
    assert!(rows.iter().all(|r| r[3].abs() < 1e-10));
    assert_svg(&dir.path().join("profile.svg"));

    let out = ok(&["profile", "--c", "0", "--eps", "0.04"]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    for rec in r.records() {
        assert_eq!(rec.unwrap()[1].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let out = mesomem(&["profile", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    for args in [
        &["profile", "--c", "1", "--eps", "-0.1"][..],
        &["profile", "--c", "1", "--eps", "0.1", "--threads", "0"],
        &["grid-sweep", "--c", "1", "--eps-list", "0.01,0.04"],
        &[
            "grid-sweep",
            "--c",
            "1",
            "--eps-list",
            "0.04",
            "--phase",
            "file:/nonexistent/chi",
        ],
        &["recovery", "--curve", "square:1", "--c", "1"],
        &["recovery", "--curve", "circle:1", "--arcs", "0-1", "--c", "1"],
        &["no-such-command"],
    ] {
        assert_eq!(mesomem(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn failed_construction_exits_with_one() {
    // The phase-1 arc is too short to hold a bump away from its jumps.
    let out = mesomem(&[
        "recovery",
        "--curve",
        "circle:1",
        "--arcs",
        "0:0.3",
        "--c",
        "1",
        "--eps-list",
        "0.05",
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn half_interval_sweep_approaches_the_line_tension() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "grid-sweep",
        "--dim",
        "1",
        "--c",
        "1",
        "--eps-list",
        "0.04,0.01,0.0025",
        "--phase",
        "half",
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(
        h,
        [
            "eps",
            "min_energy",
            "profile_energy",
            "limit_energy",
            "gap",
            "iters",
            "seconds"
        ]
    );
    let gaps = column(&h, &rows, "gap");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(*gaps.last().unwrap() <= 0.03);
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    for rec in json.as_array().unwrap() {
        for key in &h {
            assert!(rec.get(key).is_some(), "missing {key}");
        }
    }
    assert_svg(&dir.path().join("sweep.svg"));
}

fn disk_sweep(eps_list: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let dir = TempDir::new().unwrap();
    ok(&[
        "grid-sweep",
        "--dim",
        "2",
        "--c",
        "1",
        "--eps-list",
        eps_list,
        "--phase",
        "disk:0.25",
        "--out",
        s(dir.path()),
    ]);
    csv_rows(&dir.path().join("sweep.csv"))
}

#[test]
fn disk_sweep_approaches_the_euclidean_perimeter() {
    let (h, rows) = disk_sweep("0.05,0.025,0.0125");
    let limit = std::f64::consts::PI * 0.5 / 8f64.sqrt();
    let gaps: Vec<f64> = column(&h, &rows, "min_energy")
        .iter()
        .map(|e| (e - limit).abs() / limit)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(*gaps.last().unwrap() < 0.03, "{gaps:?}");
}

/// The reported gap is taken against the face count of the digitized disk,
/// which tends to the L1 perimeter 8r rather than 2πr. The gap therefore
/// grows as ε shrinks; kept as a record of the expected behavior.
#[test]
#[ignore = "face-counting reference is not the limit of the energy"]
fn disk_sweep_gaps_to_face_count_decrease() {
    let (h, rows) = disk_sweep("0.1,0.05,0.025");
    let gaps = column(&h, &rows, "gap");
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn constant_phase_file_has_zero_energy() {
    let dir = TempDir::new().unwrap();
    let chi = PhaseMap::constant(Grid::rect(1.0, 1.0, 32, 32).unwrap(), 1);
    let path = dir.path().join("chi.txt");
    let mut buf = Vec::new();
    chi.write_to(&mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    let phase = format!("file:{}", path.display());
    let out = ok(&[
        "grid-sweep",
        "--c",
        "1",
        "--eps-list",
        "0.1,0.05",
        "--phase",
        &phase,
    ]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let h = r.headers().unwrap().clone();
    let k = h.iter().position(|c| c == "min_energy").unwrap();
    for rec in r.records() {
        assert_eq!(rec.unwrap()[k].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn curve_energy_reports_identity_and_embedding() {
    let dir = TempDir::new().unwrap();
    let one = write_config(dir.path(), "circle.txt", &circle_config([0.0, 0.0], 512));
    let out = ok(&["curve-energy", "--config", s(&one), "--c", "1", "--eps", "0.01"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let z = &v["configurations"][0];
    for key in [
        "E_eps",
        "G_eps",
        "F_eps",
        "F_tilde_eps",
        "masses",
        "identity_residual",
        "embedding",
    ] {
        assert!(z.get(key).is_some(), "missing {key}");
    }
    assert!(z["identity_residual"].as_f64().unwrap().abs() <= 1e-8);
    assert_eq!(z["embedding"]["status"], "pass");
    assert!(v["family"].is_null());

    let two = write_config(dir.path(), "far.txt", &circle_config([5.0, 0.0], 512));
    ok(&[
        "curve-energy",
        "--config",
        s(&one),
        "--config",
        s(&two),
        "--c",
        "1",
        "--eps",
        "0.01",
        "--out",
        s(dir.path()),
    ]);
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("energy.json")).unwrap()).unwrap();
    let fam = &v["family"];
    assert_eq!(fam["disjoint_sampled"], true);
    let sum: f64 = v["configurations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["F_eps"].as_f64().unwrap())
        .sum();
    assert!((fam["value"].as_f64().unwrap() - sum).abs() < 1e-12 * sum.abs());
}

#[test]
fn transversality_violation_names_the_node() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "bad.txt", &circle_config([0.0, 0.0], 64));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // Data line 8 is node 7; point its ray inward.
    let cols: Vec<f64> = lines[8].split_whitespace().map(|v| v.parse().unwrap()).collect();
    lines[8] = format!(
        "{:e} {:e} {:e} {:e} {} {:e}",
        cols[0], cols[1], -cols[2], -cols[3], cols[4], cols[5]
    );
    fs::write(&path, lines.join("\n")).unwrap();
    let out = mesomem(&["curve-energy", "--config", s(&path), "--c", "1", "--eps", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("node 7"));
}

#[test]
fn recovery_on_the_half_circle() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "recovery",
        "--curve",
        "circle:1",
        "--arcs",
        "0:3.14159265",
        "--c",
        "1",
        "--eps-list",
        "0.1,0.01,0.001",
        "--out",
        s(dir.path()),
    ]);
    let (h, rows) = csv_rows(&dir.path().join("recovery.csv"));
    assert_eq!(
        h,
        [
            "eps",
            "r",
            "t",
            "res1",
            "res2",
            "E_part",
            "G_part",
            "total",
            "limit_quarter",
            "limit_half",
            "gap"
        ]
    );
    let last = rows.last().unwrap();
    assert!((last[8] - 2.277_903_1).abs() < 1e-6);
    assert!(last[10] < 0.02);
    for f in ["recovery_curve.svg", "recovery_energy.svg"] {
        assert_svg(&dir.path().join(f));
    }
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("recovery.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 3);
}

#[test]
fn recovery_without_line_tension_is_pure_bending() {
    let out = ok(&[
        "recovery",
        "--curve",
        "circle:1",
        "--c",
        "0",
        "--eps-list",
        "0.1,0.01,0.001",
    ]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    for rec in r.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[5], "0.0");
        assert_eq!(rec[6], rec[7]);
    }
}

#[test]
fn recovery_on_an_ellipse_keeps_masses() {
    let out = ok(&[
        "recovery",
        "--curve",
        "ellipse:1:0.6",
        "--arcs",
        "0:2.0",
        "--c",
        "1",
        "--eps-list",
        "0.1,0.01",
    ]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let recs: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(recs.len(), 2);
    for rec in recs {
        for k in [3, 4] {
            assert!(rec[k].parse::<f64>().unwrap().abs() <= 1e-10);
        }
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        ok(&[
            "--deterministic",
            "grid-sweep",
            "--dim",
            "2",
            "--c",
            "1",
            "--eps-list",
            "0.1,0.05",
            "--phase",
            "disk:0.25",
            "--out",
            s(dir.path()),
        ]);
        ok(&[
            "recovery",
            "--deterministic",
            "--curve",
            "ellipse:1:0.6",
            "--arcs",
            "0:2.0",
            "--c",
            "1",
            "--eps-list",
            "0.1,0.02",
            "--out",
            s(dir.path()),
        ]);
    }
    for f in [
        "sweep.csv",
        "sweep.json",
        "recovery.csv",
        "recovery.json",
        "recovery_curve.svg",
    ] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let (h, rows) = csv_rows(&a.path().join("sweep.csv"));
    assert!(column(&h, &rows, "seconds").iter().all(|&t| t == 0.0));
}

#[test]
fn settings_file_supplies_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# profile defaults\nc = 1\neps = 0.04\nrmin = -0.5\nrmax = 0.5\nn = 10\n",
    )
    .unwrap();
    let out = ok(&["profile", "--settings", s(&cfg), "--n", "4"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);

    fs::write(&cfg, "c = 1\neps = 0.04\nwidth = 3\n").unwrap();
    let out = mesomem(&["profile", "--settings", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_mesomem"))
        .args(["grid-sweep", "--dim", "2", "--c", "1", "--eps-list", "0.1"])
        .env("MESOMEM_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_mesomem"))
        .args(["profile", "--c", "1", "--eps", "0.1"])
        .env("MESOMEM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
