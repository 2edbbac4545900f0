use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_latdeconv");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn desk() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn small() -> Value {
    let mut v = desk();
    v["regions"] = json!([{"kind": "rect", "dimension": 2, "sides": [12, 12]},
                          {"kind": "rect", "dimension": 2, "sides": [16, 16]}]);
    v["replicates"] = json!(100);
    v["checks"] = json!({"ks_alpha": null, "check_diagonality": false});
    v
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_estimate(p: &Path) -> Vec<f64> {
    fs::read_to_string(p)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn simulate_writes_one_row_per_site_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = run(&["simulate", "--config", s(&cfg), "--out", s(out), "--seed", "7"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("s1,s2,value"));
    assert_eq!(text.lines().count(), 1 + 256);
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&a), "--seed", "8"]);
    assert_eq!(code(&o), 0);
    assert_ne!(text, fs::read_to_string(&a).unwrap());
}

#[test]
fn simulate_latent_parts_add_up() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let y = dir.path().join("y.csv");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&y), "--latent"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let col = |name: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (yv, xv, tv) = (col("y.csv"), col("y_x.csv"), col("y_theta.csv"));
    assert_eq!(yv.len(), 256);
    for i in 0..yv.len() {
        assert!((yv[i] - xv[i] - tv[i]).abs() < 1e-12);
    }
}

#[test]
fn gaussian_noise_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["noise"] = json!({"tag": "gaussian", "scale": 1.0});
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&dir.path().join("y.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("noise violates A3"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["bandwith"] = json!(0.3);
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = run(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bandwith"));
}

#[test]
fn estimate_round_trip_and_forms_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let y = dir.path().join("y.csv");
    assert_eq!(code(&run(&["simulate", "--config", s(&cfg), "--out", s(&y)])), 0);
    let d = dir.path().join("direct.csv");
    let c = dir.path().join("cf.csv");
    for (out, form) in [(&d, "direct"), (&c, "cf")] {
        let o = run(&[
            "estimate", "--config", s(&cfg), "--data", s(&y), "--out", s(out), "--grid=-10:10:81", "--form", form,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let (fd, fc) = (read_estimate(&d), read_estimate(&c));
    assert_eq!(fd.len(), 81);
    for (a, b) in fd.iter().zip(&fc) {
        assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("direct.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn estimate_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let y = dir.path().join("y.csv");
    let out = dir.path().join("f.csv");
    assert_eq!(code(&run(&["simulate", "--config", s(&cfg), "--out", s(&y)])), 0);

    let o = run(&["estimate", "--config", s(&cfg), "--data", s(&y), "--out", s(&out), "--grid=0:1:0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("grid is empty"));

    // the smaller region has fewer sites than the file
    let o = run(&["estimate", "--config", s(&cfg), "--data", s(&y), "--out", s(&out), "--grid=0:1:3", "--region", "0"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let text = fs::read_to_string(&y).unwrap();
    let short: String = text.lines().take(50).map(|l| format!("{l}\n")).collect();
    let p = dir.path().join("short.csv");
    fs::write(&p, short).unwrap();
    let o = run(&["estimate", "--config", s(&cfg), "--data", s(&p), "--out", s(&out), "--grid=0:1:3"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("49 sites"), "{}", stderr(&o));
}

#[test]
fn config_digest_ignores_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let v = small();
    let a = write_config(dir.path(), "a.json", &v);
    // same content, keys in reverse order and compact layout
    let obj = v.as_object().unwrap();
    let body: Vec<String> = obj.iter().rev().map(|(k, x)| format!("{k:?}:{x}")).collect();
    let b = dir.path().join("b.json");
    fs::write(&b, format!("{{{}}}", body.join(","))).unwrap();
    let mut digests = Vec::new();
    for (cfg, out) in [(&a, "ya.csv"), (&b, "yb.csv")] {
        let out = dir.path().join(out);
        assert_eq!(code(&run(&["simulate", "--config", s(cfg), "--out", s(&out)])), 0);
        let m: Value = serde_json::from_str(&fs::read_to_string(format!("{}.manifest.json", out.display())).unwrap()).unwrap();
        digests.push(m["config_digest"].clone());
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn check_reports_without_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &desk());
    let o = run(&["check", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["beta"], 2.0);
    assert_eq!(v["admissibility"]["theorem"], "mixing");
    assert_eq!(v["lemma"]["tail_vanishing"], true);
}

#[test]
fn clt_rejects_boundary_schedule_and_divergent_dependence() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["schedule"] = json!({"constant": 1.0, "exponent": 0.2});
    let cfg = write_config(dir.path(), "a5.json", &v);
    let o = run(&["clt", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("does not satisfy |Λ_n| b_n^{2β+1} → ∞"), "{}", stderr(&o));

    let mut v = small();
    v["theorem"] = json!("dependence");
    v["field"] = json!({"model": "linear", "dimension": 2, "innovations": {"tag": "standard_normal"},
                        "decay": {"constant": 1.0, "exponent": 4.0, "radius": 6}});
    let cfg = write_config(dir.path(), "dep.json", &v);
    let o = run(&["clt", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("condition (8)"), "{}", stderr(&o));
}

#[test]
fn clt_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small());
    let outs = [dir.path().join("one"), dir.path().join("two")];
    for out in &outs {
        let o = run(&["clt", "--config", s(&cfg), "--out", s(out), "--threads", "3"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let names = ["replicates_region0.csv", "replicates_region1.csv", "summary.json", "check.json", "variance_curve.csv", "bias_curve.csv"];
    for name in names {
        let a = fs::read(outs[0].join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, fs::read(outs[1].join(name)).unwrap(), "{name}");
    }
    let rows = fs::read_to_string(outs[0].join("replicates_region1.csv")).unwrap();
    assert_eq!(rows.lines().next(), Some("replicate,x,fhat,standardized"));
    assert_eq!(rows.lines().count(), 1 + 100 * 2);
}

#[test]
fn clt_verdict_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = small();
    v["checks"] = json!({"ks_alpha": null, "check_diagonality": false, "variance_band": [0.999, 1.001]});
    let cfg = write_config(dir.path(), "c.json", &v);
    let o = run(&["clt", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    assert!(dir.path().join("o/summary.json").exists());
}

#[test]
fn clt_desk_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &desk());
    let out = dir.path().join("o");
    let o = run(&["clt", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}\n{}", stderr(&o), String::from_utf8_lossy(&o.stdout));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for p in summary["regions"][0]["points"].as_array().unwrap() {
        let pv = p["ks"]["p_value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&pv));
    }
}
