use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, name: &str, value: &Value) -> PathBuf {
        let path = self.path(name);
        std::fs::write(&path, value.to_string()).unwrap();
        path
    }

    fn mopuc(&self, cmd: &str, config: &Path, out: &str, env: &[(&str, &str)]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_mopuc"))
            .arg(cmd)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(self.path(out))
            .envs(env.iter().copied())
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn c(re: f64) -> Value {
    json!([re, 0.0])
}

fn lebesgue(p: usize) -> Value {
    json!({"p": p, "weight": {"type": "IdentityLebesgue", "p": p}})
}

fn fejer() -> Value {
    json!({"p": 1, "weight": {"type": "TrigPoly", "coeffs": [[[c(1.0)]], [[c(0.5)]]]}})
}

fn atom_plus_lebesgue() -> Value {
    json!({"p": 2, "weight": {"type": "IdentityLebesgue", "p": 2},
           "atoms": [{"theta": 1.0, "mass": [[c(0.5), c(0.0)], [c(0.0), c(0.5)]]}]})
}

fn half_arc() -> Value {
    json!({"p": 1, "weight": {"type": "ArcIndicator", "start": 0.0, "end": std::f64::consts::PI, "eps": 0.0,
                              "inside": [[c(1.0)]], "outside": [[c(0.0)]]}})
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn entry(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn moments_of_simple_measures() {
    let run = Run::new();
    let cfg = run.config("leb.json", &json!({"schema": 1, "measure": lebesgue(2), "M": 3}));
    assert_eq!(code(&run.mopuc("moments", &cfg, "leb.out", &[])), 0);
    let t = run.json("leb.out");
    let moments = t["moments"].as_array().unwrap();
    assert_eq!(moments.len(), 7);
    for (i, m) in moments.iter().enumerate() {
        let expect = if i == 3 { 1.0 } else { 0.0 };
        assert_eq!(entry(&m[0][0]), (expect, 0.0));
        assert_eq!(entry(&m[0][1]), (0.0, 0.0));
    }

    let atom = json!({"p": 1, "atoms": [{"theta": 0.0, "mass": [[c(2.0)]]}]});
    let cfg = run.config("atom.json", &json!({"schema": 1, "measure": atom, "M": 2}));
    assert_eq!(code(&run.mopuc("moments", &cfg, "atom.out", &[])), 0);
    for m in run.json("atom.out")["moments"].as_array().unwrap() {
        assert_eq!(entry(&m[0][0]), (2.0, 0.0));
    }

    let cfg = run.config("fej.json", &json!({"schema": 1, "measure": fejer(), "N": 2}));
    assert_eq!(code(&run.mopuc("moments", &cfg, "fej.out", &[])), 0);
    let got: Vec<f64> = run.json("fej.out")["moments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| entry(&m[0][0]).0)
        .collect();
    assert_eq!(got, vec![0.0, 0.5, 1.0, 0.5, 0.0]);
}

#[test]
fn opuc_dumps_and_degenerate_measures() {
    let run = Run::new();
    let cfg = run.config("leb.json", &json!({"schema": 1, "measure": lebesgue(1), "N": 3}));
    assert_eq!(code(&run.mopuc("opuc", &cfg, "leb.out", &[])), 0);
    let sys = run.json("leb.out");
    let phi3 = sys["phiL"][3]["coeffs"].as_array().unwrap();
    for (k, coeff) in phi3.iter().enumerate() {
        let (re, im) = entry(&coeff[0][0]);
        assert!((re - if k == 3 { 1.0 } else { 0.0 }).abs() < 1e-14 && im.abs() < 1e-14);
    }

    let cfg = run.config("fej.json", &json!({"schema": 1, "measure": fejer(), "N": 4}));
    assert_eq!(code(&run.mopuc("opuc", &cfg, "fej.out", &[])), 0);
    let (re, im) = entry(&run.json("fej.out")["H"][0][0][0]);
    assert!((re.hypot(im) - 0.5).abs() < 1e-12);

    let single = json!({"p": 1, "atoms": [{"theta": 0.5, "mass": [[c(1.0)]]}]});
    let cfg = run.config("deg.json", &json!({"schema": 1, "measure": single, "N": 3}));
    let out = run.mopuc("opuc", &cfg, "deg.out", &[]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate measure"));
}

#[test]
fn favard_roundtrip_and_validation() {
    let run = Run::new();
    let zero = json!([[c(0.0), c(0.0)], [c(0.0), c(0.0)]]);
    let zeros = json!({"p": 2, "H": [zero, zero, zero]});
    let cfg = run.config("zero.json", &json!({"schema": 1, "reflections": zeros}));
    assert_eq!(code(&run.mopuc("favard", &cfg, "zero.out", &[])), 0);
    assert!(run.json("zero.out")["roundtrip_discrepancy"].as_f64().unwrap() < 1e-14);

    let h = json!({"p": 1, "H": [[[c(0.5)]], [[c(-1.0 / 3.0)]]]});
    let cfg = run.config("pair.json", &json!({"schema": 1, "reflections": h}));
    assert_eq!(code(&run.mopuc("favard", &cfg, "pair.out", &[])), 0);
    let rec = &run.json("pair.out")["recovered_singular_values"];
    assert!((rec[0][0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((rec[1][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-9);

    let bad = json!({"p": 1, "H": [[[c(1.0)]]]});
    let cfg = run.config("bad.json", &json!({"schema": 1, "reflections": bad}));
    assert_eq!(code(&run.mopuc("favard", &cfg, "bad.out", &[])), 2);
}

#[test]
fn scan_verdicts_and_determinism() {
    let run = Run::new();
    let cfg = run.config(
        "atom.json",
        &json!({"schema": 1, "measure": atom_plus_lebesgue(), "N": 16, "Lmax": 4, "resolution": 512}),
    );
    let first = run.mopuc("scan", &cfg, "a.csv", &[("MOPUC_THREADS", "1")]);
    assert_eq!(code(&first), 0);
    assert_eq!(code(&run.mopuc("scan", &cfg, "b.csv", &[("MOPUC_THREADS", "4")])), 0);
    let read = |n: &str| std::fs::read(run.path(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(run.json("a.json")["verdict"], "decaying");
    let csv = String::from_utf8(read("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert_eq!(csv.lines().next().unwrap(), "n,hn_norm,nevai_inf,nevai_sup,ratio_dev,ortho_residual");

    let cfg = run.config("arc.json", &json!({"schema": 1, "measure": half_arc(), "N": 12, "Lmax": 2, "resolution": 512}));
    assert_eq!(code(&run.mopuc("scan", &cfg, "arc.csv", &[])), 0);
    assert_eq!(run.json("arc.json")["verdict"], "non-decaying");

    let cfg = run.config("one.json", &json!({"schema": 1, "measure": lebesgue(2), "N": 1, "resolution": 512}));
    assert_eq!(code(&run.mopuc("scan", &cfg, "one.csv", &[])), 0);
    assert_eq!(run.json("one.json")["verdict"], "inconclusive");
    assert_eq!(run.json("one.json")["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_passes_and_detects_corruption() {
    let run = Run::new();
    let cfg = run.config("leb.json", &json!({"schema": 1, "measure": lebesgue(2), "N": 6, "Lmax": 3, "resolution": 512}));
    assert_eq!(code(&run.mopuc("verify", &cfg, "leb.out", &[])), 0);
    for check in run.json("leb.out")["checks"].as_array().unwrap() {
        assert!(check["worst_value"].as_f64().unwrap() < 1e-13, "{check}");
    }

    let cfg = run.config("rand.json", &json!({"schema": 1, "random": {"p": 2, "n": 6}, "seed": 0, "resolution": 512}));
    assert_eq!(code(&run.mopuc("favard", &cfg, "rand.out", &[])), 0);
    assert_eq!(code(&run.mopuc("verify", &cfg, "rand.verify", &[])), 0);
    let report = run.json("rand.verify");
    assert_eq!(report["pass"], true);
    for check in report["checks"].as_array().unwrap() {
        if check["name"] != "hn_bound" && check["name"] != "ratio_deviation" {
            assert!(check["worst_value"].as_f64().unwrap() < 1e-9, "{check}");
        }
    }

    let mut system = run.json("rand.out")["system"].clone();
    std::fs::write(run.path("good.json"), system.to_string()).unwrap();
    let cfg = run.config("good_cfg.json", &json!({"schema": 1, "system": "good.json", "resolution": 512}));
    assert_eq!(code(&run.mopuc("verify", &cfg, "good.out", &[])), 0);

    let entry = &mut system["phiL"][3]["coeffs"][1][0][1][0];
    *entry = json!(entry.as_f64().unwrap() + 1e-6);
    std::fs::write(run.path("bad.json"), system.to_string()).unwrap();
    let cfg = run.config("bad_cfg.json", &json!({"schema": 1, "system": "bad.json", "resolution": 512}));
    let out = run.mopuc("verify", &cfg, "bad.out", &[]);
    assert_eq!(code(&out), 3);
    assert_eq!(run.json("bad.out")["pass"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("christoffel_darboux"));
}

#[test]
fn invalid_configs_exit_2() {
    let run = Run::new();
    let cases = [
        json!({"schema": 2, "measure": lebesgue(1), "N": 2}),
        json!({"schema": 1, "measure": lebesgue(1), "N": 0}),
        json!({"schema": 1, "measure": lebesgue(1), "N": 2, "resolution": 513}),
        json!({"schema": 1, "measure": lebesgue(1), "N": 2, "unknown": true}),
        json!({"schema": 1, "N": 2}),
        json!({"schema": 1, "measure": {"p": 1, "weight": {"type": "TrigPoly", "coeffs": [[[c(-1.0)]]]}}, "N": 2}),
    ];
    for (i, case) in cases.iter().enumerate() {
        let cfg = run.config(&format!("c{i}.json"), case);
        assert_eq!(code(&run.mopuc("opuc", &cfg, "x.out", &[])), 2, "case {i}: {case}");
    }
    assert_eq!(code(&run.mopuc("opuc", &run.path("missing.json"), "x.out", &[])), 2);
    let cfg = run.config("ok.json", &json!({"schema": 1, "measure": lebesgue(1), "N": 2}));
    assert_eq!(code(&run.mopuc("opuc", &cfg, "x.out", &[("MOPUC_THREADS", "many")])), 2);
}
