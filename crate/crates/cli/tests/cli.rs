use polyellipse::weber::{weber_solve, WeberConfig};
use polyellipse::{Instance, NormSpec, PointSet};
use polyellipse_cli::bench::HEADER;
use polyellipse_cli::plot::level_set;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyellipse"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str], code: i32) -> String {
    let out = run(dir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn generated(dir: &Path) {
    ok(dir, &["generate", "--n", "30", "--k", "3", "--seed", "2", "--candidates", "5", "--lambda", "1,0.5,0", "-o", "i.json"]);
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["generate", "--n", "20", "--k", "4", "--seed", "7", "--weighted"];
    let a = ok(d, &args);
    assert_eq!(a, ok(d, &args));
    assert_ne!(a, ok(d, &["generate", "--n", "20", "--k", "4", "--seed", "8", "--weighted"]));
    let v = json(&a);
    assert_eq!(v["v"], 1);
    assert_eq!(v["demand"].as_array().unwrap().len(), 20);
    let w: f64 = v["foci_weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((w - 1.0).abs() < 1e-12);
}

#[test]
fn solve_methods_agree_and_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    let mut radii = Vec::new();
    for (method, trace, header) in [
        ("decomp", "t1.csv", "it,size,r,rho,enter,leave"),
        ("lagrangean", "t2.csv", "it,dual,primal,best,step"),
    ] {
        let v = json(&ok(d, &["solve", "i.json", "--method", method, "--trace", trace]));
        assert_eq!(v["method"], method);
        assert_eq!(v["converged"], true);
        radii.push(v["r"].as_f64().unwrap());
        let csv = std::fs::read_to_string(d.join(trace)).unwrap();
        assert_eq!(csv.lines().next().unwrap(), header);
        assert!(csv.lines().count() >= 2);
    }
    let direct = json(&ok(d, &["solve", "i.json"]));
    let r = direct["r"].as_f64().unwrap();
    assert!(direct["lower_bound"].as_f64().unwrap() <= r);
    for other in radii {
        assert!((other - r).abs() <= 1e-5 * r, "{other} vs {r}");
    }
}

#[test]
fn norm_override_changes_the_radius() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    let l2 = json(&ok(d, &["solve", "i.json"]))["r"].as_f64().unwrap();
    let l1 = json(&ok(d, &["solve", "i.json", "--norm", "l1"]))["r"].as_f64().unwrap();
    // ‖·‖₂ ≤ ‖·‖₁ pointwise, so the optimal radii are ordered.
    assert!(l1 > l2);
}

#[test]
fn demand_may_come_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "pts.csv", "x,y\n0,0\n4,0\n0,3\n");
    write(d, "i.json", r#"{"v": 1, "dim": 2, "norm": {"lp": 2}, "foci": [[0, 0]], "demand": "pts.csv"}"#);
    let v = json(&ok(d, &["solve", "i.json"]));
    assert!((v["r"].as_f64().unwrap() - 2.5).abs() < 1e-6);
}

#[test]
fn one_dimensional_instances() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "line.json", r#"{"v": 1, "dim": 1, "norm": {"lp": 2}, "foci": [[0], [1]], "demand": [[0], [10]]}"#);
    let v = json(&ok(d, &["solve1d", "line.json"]));
    // Both foci lie between the extremes: r = D/2 with D = 10.
    assert_eq!(v["branch"], "explicit");
    assert!((v["r"].as_f64().unwrap() - 5.0).abs() < 1e-12);
    generated(d);
    let err = fails(d, &["solve1d", "i.json"], 2);
    assert!(err.contains("dim"), "{err}");
}

#[test]
fn select_foci_reports_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    let v = json(&ok(d, &["select-foci", "i.json", "--k", "2"]));
    assert_eq!(v["foci"].as_array().unwrap().len(), 2);
    let (r, lo, hi) = (v["r"].as_f64().unwrap(), v["lower"].as_f64().unwrap(), v["upper"].as_f64().unwrap());
    assert!(lo <= r * (1.0 + 1e-9) && r <= hi * (1.0 + 1e-9));
    write(d, "cands.csv", "1,1\n50,50\n");
    let v = json(&ok(d, &["select-foci", "i.json", "--k", "1", "--candidates", "cands.csv"]));
    assert_eq!(v["points"].as_array().unwrap().len(), 1);
}

#[test]
fn ordered_median_uses_file_or_flag_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    let from_file = json(&ok(d, &["om", "i.json"]));
    assert_eq!(from_file["lambda"], serde_json::json!([1.0, 0.5, 0.0]));
    let ones = json(&ok(d, &["om", "i.json", "--lambda", "1,1,1"]))["r"].as_f64().unwrap();
    let direct = json(&ok(d, &["solve", "i.json"]))["r"].as_f64().unwrap();
    assert!((ones - direct).abs() <= 1e-5 * direct, "{ones} vs {direct}");
    assert!(fails(d, &["om", "i.json", "--lambda", "0,1,1"], 2).contains("lambda"));
    assert!(fails(d, &["om", "i.json", "--lambda", "1,1"], 2).contains("lambda"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    assert!(fails(d, &["solve", "missing.json"], 2).contains("missing.json"));
    write(d, "bad.json", r#"{"v": 1, "dim": 2, "norm": {"lp": 2}, "foci": [[0, 0]], "demand": [[0, 0], [1]]}"#);
    assert!(fails(d, &["solve", "bad.json"], 2).contains("demand[1]"));
    write(d, "extra.json", r#"{"v": 1, "dim": 2, "norm": {"lp": 2}, "foci": [[0, 0]], "demand": [[0, 0]], "colour": 1}"#);
    assert!(fails(d, &["solve", "extra.json"], 2).contains("colour"));
    assert!(fails(d, &["solve", "i.json", "--trace", "t.csv"], 2).contains("--trace"));
    assert!(fails(d, &["solve", "i.json", "--norm", "l0.5"], 2).contains("norm"));
    let out = run(d, &["solve", "i.json", "--method", "lagrangean", "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    // The partial result is still printed.
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["converged"], false);
    assert!(fails(d, &["select-foci", "i.json", "--k", "9"], 4).contains("infeasible"));
}

#[test]
fn bench_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = ["bench", "--n", "30", "--k", "1,3", "--norm", "l2,hex", "--runs", "2", "--method", "direct,decomp"];
    let csv = ok(d, &args);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], HEADER.join(","));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2 * 2);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), HEADER.len());
        assert_eq!(cols[8], "", "time_ms is opt-in");
        assert_eq!(cols[11], "true", "{line}");
        assert_eq!(cols[10].is_empty(), cols[5] == "direct");
    }
    let timed = ok(d, &[&args[..], &["--timing", "--jobs", "2"]].concat());
    for line in timed.lines().skip(1) {
        assert!(line.split(',').nth(8).unwrap().parse::<f64>().unwrap() >= 0.0);
    }
}

fn circle_instance() -> Instance {
    Instance::unweighted(
        PointSet::from_rows(&[[1.0, 0.0]]).unwrap(),
        PointSet::from_rows(&[[0.0, 0.0]]).unwrap(),
        NormSpec::l2(),
    )
    .unwrap()
}

#[test]
fn single_focus_contour_is_the_circle() {
    let inst = circle_instance();
    let c = level_set(&inst, &[0.0, 0.0], 1.0, 200).unwrap();
    assert_eq!(c.lines.len(), 1);
    let line = &c.lines[0];
    assert_eq!(line.first(), line.last(), "contour is closed");
    for p in line {
        let rad = (p[0] * p[0] + p[1] * p[1]).sqrt();
        assert!((rad - 1.0).abs() <= 2.0 * c.cell, "{p:?}");
    }
}

#[test]
fn contour_vertices_lie_on_the_level() {
    let inst = Instance::new(
        PointSet::from_rows(&[[0.0, 0.0], [9.0, 4.0]]).unwrap(),
        PointSet::from_rows(&[[0.0, 0.0], [3.0, 1.0], [-2.0, 4.0]]).unwrap(),
        vec![0.5, 0.3, 0.2],
        NormSpec::hex(),
    )
    .unwrap();
    let x = [1.0, -1.0];
    let r = 7.0;
    let c = level_set(&inst, &x, r, 150).unwrap();
    assert!(!c.lines.is_empty());
    let lipschitz: f64 = inst.weights().iter().sum::<f64>() * inst.norm().euclid_lipschitz(2);
    let slack = c.cell * 2f64.sqrt() * lipschitz;
    for p in c.lines.iter().flatten() {
        let f = inst.phi_at(p, &x);
        assert!((f - r).abs() <= slack, "φ = {f} at {p:?}");
    }
}

#[test]
fn contour_surrounds_the_weber_point() {
    let foci = PointSet::from_rows(&[[0.0, 0.0], [10.0, 0.0], [3.0, 8.0], [-4.0, 5.0], [6.0, -6.0]]).unwrap();
    let w = vec![0.2; 5];
    let weber = weber_solve(&foci, &w, &NormSpec::l2(), &WeberConfig::default()).unwrap();
    let inst = Instance::new(PointSet::from_rows(&[[0.0, 0.0]]).unwrap(), foci, w, NormSpec::l2()).unwrap();
    let r = weber.value * 1.05;
    let c = level_set(&inst, &[0.0, 0.0], r, 200).unwrap();
    let pts: Vec<[f64; 2]> = c.lines.iter().flatten().copied().collect();
    let n = pts.len() as f64;
    let centroid = [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n];
    // The level set bounds a convex region containing the Weber point.
    let (lo, hi) = pts.iter().fold(([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]), |(lo, hi), p| {
        ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
    });
    for j in 0..2 {
        assert!(lo[j] < weber.x[j] && weber.x[j] < hi[j]);
    }
    assert!(inst.phi_at(&centroid, &[0.0, 0.0]) <= r);
    let dist = ((centroid[0] - weber.x[0]).powi(2) + (centroid[1] - weber.x[1]).powi(2)).sqrt();
    assert!(dist <= 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]), "{dist}");
}

#[test]
fn plot_writes_parseable_svg() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d);
    ok(d, &["plot", "i.json", "--out", "p.svg", "--resolution", "80"]);
    ok(d, &["solve", "i.json", "--plot", "q.svg"]);
    let text = std::fs::read_to_string(d.join("p.svg")).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
    assert_eq!(count("circle"), 30);
    assert_eq!(count("rect"), 1 + 3);
    assert!(count("polyline") >= 1);
    roxmltree::Document::parse(&std::fs::read_to_string(d.join("q.svg")).unwrap()).unwrap();
    ok(d, &["plot", "i.json", "--out", "fixed.svg", "--x", "0,0", "--r", "60"]);
    ok(d, &["generate", "--n", "10", "--k", "2", "--d", "3", "-o", "cube.json"]);
    assert!(fails(d, &["plot", "cube.json", "--out", "c.svg"], 2).contains("d = 2"));
}
