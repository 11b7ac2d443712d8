use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halfline-nls"))
}

fn run_config(dir: &Path, name: &str, text: &str) -> (Output, Value) {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).env_remove("HALFLINE_NLS_THREADS").output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (out, v)
}

const ZERO: &str = r#"
schema_version = 1
experiment = "solve"
nonlinearity = "power(1,3)"
[grid]
length = 10.0
interior = 63
[solver]
final_time = 0.3
window = 0.1
output_dt = 0.1
quad_nodes = 9
[output]
directory = "out"
prefix = "zero"
"#;

#[test]
fn zero_problem_has_zero_residual_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (out, v) = run_config(dir.path(), "zero.toml", ZERO);
    assert_eq!(out.status.code(), Some(0), "{v}");
    let csv = std::fs::read_to_string(dir.path().join("out/zero_identities.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for (k, name) in header.iter().enumerate() {
        if name.starts_with("residual") || name.starts_with("integrated") {
            for r in &rows {
                assert_eq!(r[k].parse::<f64>().unwrap(), 0.0, "{name}");
            }
        }
    }
    assert_eq!(v["summary"]["trajectory"]["status"]["status"], "completed");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let forced = ZERO
        .replace("experiment = \"solve\"", "experiment = \"solve\"\nforce = \"ramped_sinusoid(0.2,1,2)\"\ninitial = \"gaussian(3,0.7,0,0.8)\"")
        + "[potential]\npreset = \"harmonic(0.5)\"\n";
    let read_all = |d: &Path| -> Vec<(String, Vec<u8>)> {
        let mut v: Vec<_> = std::fs::read_dir(d.join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        v.sort();
        v
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_config(a.path(), "c.toml", &forced).0.status.code(), Some(0));
    assert_eq!(run_config(b.path(), "c.toml", &forced).0.status.code(), Some(0));
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), 3);
    assert_eq!(fa, fb);
}

#[test]
fn invalid_config_gives_error_object() {
    let dir = tempfile::tempdir().unwrap();
    let bad = ZERO.replace("power(1,3)", "power(1)");
    let (out, v) = run_config(dir.path(), "bad.toml", &bad);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(v["error"]["kind"], "parse");
    let missing = ZERO.replace("schema_version = 1", "");
    let (out, v) = run_config(dir.path(), "missing.toml", &missing);
    assert_ne!(out.status.code(), Some(0));
    assert!(v["error"]["message"].as_str().unwrap().contains("schema_version"));
}

#[test]
fn missing_regularity_names_the_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let text = ZERO.replace("experiment = \"solve\"", "experiment = \"solve\"\nforce = \"sinusoid(0.1,1)\"")
        + "[potential]\nfile = \"v.csv\"\n";
    let mut v = String::from("v1,v2\n");
    for _ in 0..65 {
        v += "1,0\n";
    }
    std::fs::write(dir.path().join("v.csv"), v).unwrap();
    let (out, v) = run_config(dir.path(), "c.toml", &text);
    assert_eq!(out.status.code(), Some(2));
    assert!(v["error"]["message"].as_str().unwrap().contains("W₁,₂"), "{v}");
}

#[test]
fn unexpected_blow_up_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = ZERO
        .replace("power(1,3)", "power(5i,2)")
        .replace("experiment = \"solve\"", "experiment = \"solve\"\ninitial = \"gaussian(5,1,0,1)\"")
        .replace("final_time = 0.3", "final_time = 1.0")
        .replace("[solver]", "[solver]\nblowup_threshold = 100.0");
    let (out, v) = run_config(dir.path(), "c.toml", &text);
    assert_eq!(out.status.code(), Some(3), "{v}");
    assert_eq!(v["error"]["kind"], "blow_up");
    let expected = text.replace("experiment = \"solve\"", "experiment = \"solve\"\nexpect_blowup = true");
    let (out, _) = run_config(dir.path(), "d.toml", &expected);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn hypotheses_report_sign_condition() {
    let dir = tempfile::tempdir().unwrap();
    let base = r#"
schema_version = 1
experiment = "hypotheses"
nonlinearity = "NL"
[grid]
length = 8.0
interior = 63
[hypotheses]
samples = 10
[output]
directory = "out"
"#;
    let (out, v) = run_config(dir.path(), "a.toml", &base.replace("NL", "power(1,3)"));
    assert_eq!(out.status.code(), Some(0));
    let nl = &v["summary"]["nonlinearity"];
    assert_eq!(nl["sign_condition"]["passed"], true);
    assert_eq!(nl["hamiltonian_structure"]["passed"], true);
    let (_, v) = run_config(dir.path(), "b.toml", &base.replace("NL", "power(i,3)"));
    assert_eq!(v["summary"]["nonlinearity"]["sign_condition"]["passed"], false);
}

#[test]
fn validate_and_presets_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.toml");
    std::fs::write(&path, ZERO).unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert!(!dir.path().join("out").exists());

    let out = bin().arg("presets").output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["force"].as_array().unwrap().len() >= 3);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.toml");
    std::fs::write(&path, ZERO).unwrap();
    let out = bin().arg("run").arg(&path).env("HALFLINE_NLS_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("run").arg(&path).env("HALFLINE_NLS_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn free_convergence_orders() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
experiment = "convergence"
nonlinearity = "power(1,3)"
initial = "gaussian(10,1,0,1)"
[grid]
length = 20.0
interior = 127
[solver]
final_time = 1.0
window = 0.1
quad_nodes = 9
output_dt = 0.1
[convergence]
levels = 3
oracle = false
[output]
directory = "out"
"#;
    let (out, v) = run_config(dir.path(), "c.toml", text);
    assert_eq!(out.status.code(), Some(0), "{v}");
    let orders = &v["summary"]["orders"];
    for key in ["residual_mass", "residual_energy"] {
        for o in orders[key].as_array().unwrap() {
            assert!(o.as_f64().unwrap() >= 1.9, "{key}: {orders}");
        }
    }
}
