use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_santalo-lab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report_without_timestamp(out: &Path) -> Value {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("generated_at");
    v
}

#[test]
fn classical_builtin_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"builtin": "classical-bs-1d"}"#);
    let out = run(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report_without_timestamp(&dir.path().join("out"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["builtin"], "classical-bs-1d");
    assert!(r["checks"].as_array().unwrap().len() > 200);
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.starts_with("name,relation,lhs,rhs,residual,pass,detail,witness"));
    assert_eq!(csv.lines().count(), r["checks"].as_array().unwrap().len() + 1);
}

#[test]
fn inadmissible_tuple_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("inadmissible-gaussian.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let r = report_without_timestamp(dir.path());
    assert_eq!(r["pass"], false);
    let check = &r["checks"][0];
    assert_eq!(check["pass"], false);
    let w = check["witness"].as_array().unwrap();
    assert_eq!(w.len(), 2);
    let (x, y) = (w[0][0].as_f64().unwrap(), w[1][0].as_f64().unwrap());
    assert!(0.25 * x * x + 0.25 * y * y < x * y);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("malformed.json", r#"{"experiment": "transport", "#, "line"),
        ("unknown.json", r#"{"experiment": "transport", "colour": 1}"#, "colour"),
        ("noseed.json", r#"{"experiment": "transport", "mode": "monotonicity", "trials": 3,
            "costs": [{"family": "product", "N": 2, "n": 1}]}"#, "seed"),
        ("nofile.json", r#"{"experiment": "verify-functional", "mode": "bound",
            "cost": {"family": "inner-product", "N": 2, "n": 1},
            "tuple": {"source": "file", "path": "missing.json"}}"#, "missing.json"),
        ("badbuiltin.json", r#"{"builtin": "no-such-experiment"}"#, "no-such-experiment"),
        ("badkind.json", r#"{"experiment": "plot"}"#, "plot"),
    ];
    for (name, text, needle) in cases {
        let cfg = write_config(dir.path(), name, text);
        let out = run(&cfg, &dir.path().join("out"), &[]);
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{name}: {err}");
        assert!(err.contains(needle), "{name}: {err}");
    }
    let out = run(&dir.path().join("absent.json"), &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("run").arg("--config").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_supplies_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t.json",
        r#"{"experiment": "transport", "mode": "monotonicity", "trials": 3, "max_points": 4,
            "costs": [{"family": "product", "N": 2, "n": 1}]}"#,
    );
    let out = run(&cfg, &dir.path().join("out"), &["--seed-override", "4"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report_without_timestamp(&dir.path().join("out"))["environment"]["seed"], 4);
}

#[test]
fn list_contains_the_required_builtins() {
    let out = bin().arg("list").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(names.contains(&"thm-1.1-product-cost"));
    assert!(names.contains(&"thm-2.4-transport-entropy"));
    assert!(names.len() >= 10);
    assert!(text.lines().all(|l| l.split_whitespace().count() > 1), "every entry has a description");
}

#[test]
fn reports_are_reproducible_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    for builtin in ["classical-bs-1d", "transport-monotonicity", "sphere-reduction"] {
        let cfg = write_config(dir.path(), "r.json", &format!(r#"{{"builtin": "{builtin}"}}"#));
        let bytes: Vec<String> = [&["--jobs", "1"][..], &["--jobs", "3"], &[]]
            .iter()
            .enumerate()
            .map(|(k, extra)| {
                let out_dir = dir.path().join(format!("{builtin}-{k}"));
                let out = run(&cfg, &out_dir, extra);
                assert_eq!(out.status.code(), Some(0), "{builtin}");
                let text = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
                text.lines().filter(|l| !l.trim_start().starts_with("\"generated_at\"")).collect::<Vec<_>>().join("\n")
            })
            .collect();
        assert_eq!(bytes[0], bytes[1], "{builtin}");
        assert_eq!(bytes[0], bytes[2], "{builtin}");
    }
}

#[test]
fn zero_jobs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"builtin": "exponent-system"}"#);
    let out = run(&cfg, &dir.path().join("out"), &["--jobs", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn example_configs_load() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            santalo_lab::ExperimentConfig::load(&p, None).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn published_schema_lists_exactly_the_config_fields() {
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/config.schema.json")).unwrap())
            .unwrap();
    let mut published: Vec<String> = schema["properties"].as_object().unwrap().keys().cloned().collect();
    published.sort();
    // serde lists every accepted field when it meets an unknown one
    let err = serde_json::from_str::<santalo_lab::ExperimentConfig>(r#"{"not_a_field": 0}"#).unwrap_err().to_string();
    let list = &err[err.find("expected one of").unwrap()..];
    let mut accepted: Vec<String> = list.split('`').skip(1).step_by(2).map(str::to_owned).collect();
    accepted.sort();
    assert_eq!(published, accepted);
}
