use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Case {
    dir: TempDir,
}

impl Case {
    fn new() -> Self {
        Case {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_isoprofile"))
            .arg(command)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(out)
            .args(extra)
            .output()
            .unwrap()
    }
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file, skipping `#` comments and the header.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn stderr_error(out: &Output) -> Value {
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    err["error"].clone()
}

#[test]
fn profile_table_and_dominance_flag() {
    let c = Case::new();
    let cfg = c.config(
        "p.json",
        r#"{"schema":1,
            "curves":[{"kind":"ulc","delta":{"kind":"power","alpha":0.125,"p":2}},{"kind":"bakry_ledoux"}],
            "grid":{"lo":1e-6,"hi":0.5,"n":6}}"#,
    );
    let out = c.out("o");
    let r = c.run("profile", &cfg, &out, &[]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = csv_rows(&out.join("profile.csv"));
    assert_eq!(header, ["a_tilde", "ulc", "bakry_ledoux"]);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.len() == 3 && num(&r[1]) <= num(&r[2])));
    let side = json(&out.join("profile.json"));
    let flag = side["dominance"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["lower"] == "ulc" && d["upper"] == "bakry_ledoux")
        .unwrap();
    assert_eq!(flag["flag"], "OK");
    assert_eq!(side["meta"]["version"], env!("CARGO_PKG_VERSION"));
    let text = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(text.starts_with("# isoprofile "));
}

#[test]
fn invalid_configs_fail_without_writing() {
    let c = Case::new();
    let out = c.out("o");
    let empty = c.config("e.json", r#"{"schema":1,"curves":[{"kind":"bakry_ledoux"}],"grid":[]}"#);
    let r = c.run("profile", &empty, &out, &[]);
    assert_eq!(r.status.code(), Some(1));
    let err = stderr_error(&r);
    assert_eq!(err["kind"], "invalid_config");
    assert!(err["message"].as_str().unwrap().contains("grid is empty"));
    assert!(!out.exists());

    let unknown = c.config("u.json", r#"{"schema":1,"curves":[],"grid":[0.1],"extra":1}"#);
    let r = c.run("profile", &unknown, &out, &[]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr_error(&r)["message"].as_str().unwrap().contains("extra"));

    let no_schema = c.config("s.json", r#"{"curves":[{"kind":"bakry_ledoux"}],"grid":[0.1]}"#);
    assert_eq!(c.run("profile", &no_schema, &out, &[]).status.code(), Some(1));

    let bad_value = c.config(
        "b.json",
        r#"{"schema":1,"curves":[{"kind":"bobkov","r":-1,"ball_mass":0.5}],"grid":[0.1]}"#,
    );
    let r = c.run("profile", &bad_value, &out, &[]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stderr_error(&r)["kind"], "invalid_parameter");
    assert!(!out.exists());
}

#[test]
fn verify1d_outcomes() {
    let c = Case::new();
    let gaussian = r#"{"kind":"quadratic","kappa":0.5}"#;
    let pass = c.config(
        "pass.json",
        &format!(r#"{{"schema":1,"density":{gaussian},"tail":{{"kind":"power","alpha":0.5,"p":2}}}}"#),
    );
    let r = c.run("verify1d", &pass, &c.out("pass"), &[]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(json(&c.out("pass").join("verify1d.json"))["status"], "pass");

    let uncertified = c.config(
        "cert.json",
        &format!(r#"{{"schema":1,"density":{gaussian},"tail":{{"kind":"power","alpha":1,"p":2}}}}"#),
    );
    let r = c.run("verify1d", &uncertified, &c.out("cert"), &[]);
    assert_eq!(r.status.code(), Some(3));
    let rep = json(&c.out("cert").join("verify1d.json"));
    assert_eq!(rep["status"], "certification_failure");
    assert_eq!(rep["certification"]["tail"]["holds"], false);

    let laplace = c.config(
        "lap.json",
        r#"{"schema":1,"density":{"kind":"piecewise_linear","knots":[[-1,1],[0,0],[1,1]]},"tail":{"kind":"zero"}}"#,
    );
    let r = c.run("verify1d", &laplace, &c.out("lap"), &[]);
    assert_eq!(r.status.code(), Some(0));
    let (header, rows) = csv_rows(&c.out("lap").join("verify1d.csv"));
    let tail = header.iter().position(|h| h == "tail").unwrap();
    assert!(rows.iter().all(|r| num(&r[tail]) == 0.0));
}

#[test]
fn negative_tolerance_is_rejected() {
    let c = Case::new();
    let cfg = c.config(
        "v.json",
        r#"{"schema":1,"density":{"kind":"quadratic","kappa":0.5},"tail":{"kind":"power","alpha":0.5,"p":2}}"#,
    );
    let r = c.run("verify1d", &cfg, &c.out("o"), &["--tol", "-1"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn transport_indicator_quotient_is_one() {
    let c = Case::new();
    let cfg = c.config(
        "t.json",
        r#"{"schema":1,"norm":{"kind":"euclidean","n":3},"profile":{"kind":"indicator"},"count":2000,"pairs":500}"#,
    );
    let r = c.run("transport", &cfg, &c.out("nosseed"), &[]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stderr_error(&r)["message"].as_str().unwrap().contains("seed"));

    let r = c.run("transport", &cfg, &c.out("o"), &["--seed", "17"]);
    assert_eq!(r.status.code(), Some(0));
    let rep = json(&c.out("o").join("transport.json"));
    assert_eq!(rep["seed"], 17);
    assert!(rep["streams"]["pushforward"].as_u64().unwrap() >= 1);
    let t = rep["lipschitz"]["t_normalized"].as_f64().unwrap();
    assert!((t - 1.0).abs() < 1e-9, "{t}");
}

#[test]
fn concentrate_is_below_the_gm_column_and_deterministic() {
    let c = Case::new();
    let cfg = c.config(
        "c.json",
        r#"{"schema":1,"norm":{"kind":"euclidean","n":16},"eps":[0.05,0.1,0.2,0.3,0.4,0.5],
            "count":20000,"seed":9,"delta":{"kind":"power","alpha":0.125,"p":2}}"#,
    );
    let r = c.run("concentrate", &cfg, &c.out("a"), &["--threads", "1"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = csv_rows(&c.out("a").join("concentrate.csv"));
    let (emp, gm) = (
        header.iter().position(|h| h == "empirical").unwrap(),
        header.iter().position(|h| h == "gm").unwrap(),
    );
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| num(&r[emp]) <= num(&r[gm])));
    let side = json(&c.out("a").join("concentrate.json"));
    assert_eq!(side["seed"], 9);
    assert!(side["streams"].as_u64().unwrap() >= 1);

    let r = c.run("concentrate", &cfg, &c.out("b"), &["--threads", "3"]);
    assert_eq!(r.status.code(), Some(0));
    for f in ["concentrate.csv", "concentrate.json"] {
        assert_eq!(
            fs::read(c.out("a").join(f)).unwrap(),
            fs::read(c.out("b").join(f)).unwrap()
        );
    }
}

#[test]
fn modulus_matches_euclidean_closed_form() {
    let c = Case::new();
    let cfg = c.config(
        "m.json",
        r#"{"schema":1,"norm":{"kind":"euclidean","n":2},"eps":[0.25,0.5,1,1.5,2],"seed":1}"#,
    );
    let r = c.run("modulus", &cfg, &c.out("o"), &[]);
    assert_eq!(r.status.code(), Some(0));
    let (_, rows) = csv_rows(&c.out("o").join("modulus.csv"));
    assert_eq!(rows.len(), 5);
    for r in rows {
        let (eps, raw) = (num(&r[0]), num(&r[1]));
        assert!((raw - (1.0 - (1.0 - eps * eps / 4.0).sqrt())).abs() < 1e-4);
    }
    let rep = json(&c.out("o").join("modulus.json"));
    assert_eq!(rep["modulus"]["kind"], "table");
    assert_eq!(rep["seed"], 1);
}

#[test]
fn functional_report_and_member_table() {
    let c = Case::new();
    let cfg = c.config(
        "f.json",
        r#"{"schema":1,"density":{"kind":"power","alpha":1,"p":3},"tail":{"kind":"power","alpha":1,"p":3}}"#,
    );
    let r = c.run("functional", &cfg, &c.out("o"), &[]);
    assert_eq!(r.status.code(), Some(0));
    let (header, rows) = csv_rows(&c.out("o").join("functional.csv"));
    assert_eq!(header, ["index", "t", "lhs", "rhs", "ratio"]);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| num(&r[4]) >= 1.0));
    let rep = json(&c.out("o").join("functional.json"));
    assert_eq!(rep["status"], "pass");
    assert!((rep["q"].as_f64().unwrap() - 1.5).abs() < 1e-12);

    let uncertified = c.config(
        "u.json",
        r#"{"schema":1,"density":{"kind":"quadratic","kappa":0.5},"tail":{"kind":"power","alpha":1,"p":2}}"#,
    );
    let r = c.run("functional", &uncertified, &c.out("u"), &[]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!c.out("u").join("functional.csv").exists());
}

#[test]
fn missing_config_flag_is_a_usage_error() {
    let r = Command::new(env!("CARGO_BIN_EXE_isoprofile"))
        .arg("profile")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stderr_error(&r)["kind"], "usage");
}
