use std::fs;
use std::path::Path;
use std::process::Command;

use homogenizer::{validate, Operator};
use homogenizer_cli::{Context, RunError};
use num_complex::Complex64;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_homogenizer"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    bin().arg(sub).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

/// Parses the four state columns that close every trajectory and regime row.
fn row_state(line: &str) -> Operator {
    let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
    let n = cols.len();
    let (r00, r01re, r01im, r11) = (cols[n - 4], cols[n - 3], cols[n - 2], cols[n - 1]);
    let off = Complex64::new(r01re, r01im);
    Operator::from_vec(2, vec![Complex64::new(r00, 0.0), off, off.conj(), Complex64::new(r11, 0.0)]).unwrap()
}

#[test]
fn converge_writes_both_machines_and_a_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "converge", "init": {"kind": "product", "n_qubits": 4}, "n_steps": 20, "seed": 42, "n_trajectories": 3}"#,
    );
    let out = tmp.path().join("out");
    let res = run("converge", &cfg, &out, &["--jobs", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for i in 0..3 {
        for machine in ["markovian", "composite"] {
            let text = fs::read_to_string(out.join(format!("{machine}_{i:03}.csv"))).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next().unwrap(), "step,eta,dist_l2,rho00_re,rho01_re,rho01_im,rho11_re");
            let rows: Vec<&str> = lines.collect();
            assert_eq!(rows.len(), 20);
            for row in rows {
                assert!(validate(&row_state(row)).passed(), "{row}");
            }
        }
        // Both machines see the same couplings.
        let eta_col = |m: &str| -> Vec<String> {
            fs::read_to_string(out.join(format!("{m}_{i:03}.csv")))
                .unwrap()
                .lines()
                .skip(1)
                .map(|l| l.split(',').nth(1).unwrap().to_string())
                .collect()
        };
        assert_eq!(eta_col("markovian"), eta_col("composite"));
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["median_dist_composite"].as_array().unwrap().len(), 20);
    assert_eq!(summary["init"], "product");
}

#[test]
fn witness_and_regime_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(tmp.path(), "g.json", r#"{"experiment": "gap-curve", "init": {"kind": "ghz"}, "grid": [0.0, 0.5, 1.0]}"#);
    assert!(run("gap-curve", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("gap_curve_ghz.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "eta,c_assist_step1,c_form_step2,gap");
    assert_eq!(csv.lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("gap_curve_ghz.json")).unwrap()).unwrap();
    assert_eq!(summary["init"], "ghz");
    assert!(summary["eta_star"].is_null());

    let cfg = write_config(tmp.path(), "x.json", r#"{"experiment": "crossing", "init": {"kind": "bell"}}"#);
    let res = run("crossing", &cfg, &out, &[]);
    assert!(res.status.success());
    let written: Vec<String> = String::from_utf8(res.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(written.len(), 1);
    assert!(written[0].ends_with("crossing_bell.json"));

    let cfg = write_config(tmp.path(), "r.json", r#"{"experiment": "regimes", "n_steps": 10}"#);
    assert!(run("regimes", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("regimes.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 5 * 10);
    for row in rows {
        assert!(validate(&row_state(row)).passed(), "{row}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        r#"{"experiment": "gap-curve", "init": {"kind": "perturbed-ghz", "alpha": 1.5}}"#,
        r#"{"experiment": "gap-curve", "colour": "blue"}"#,
        r#"{"experiment": "gap-curve""#,
        r#"{"experiment": "converge"}"#,
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("bad{i}.json"), text);
        let res = run("gap-curve", &cfg, &out, &[]);
        assert_eq!(res.status.code(), Some(2), "{text}");
        assert!(!res.stderr.is_empty());
    }
    let alpha = String::from_utf8(run("gap-curve", &tmp.path().join("bad0.json"), &out, &[]).stderr).unwrap();
    assert!(alpha.contains("init.alpha"));
    let res = run("gap-curve", &tmp.path().join("missing.json"), &out, &[]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numerical_errors_map_to_three_with_context() {
    let err = RunError::Numerical {
        context: Context { init: "bell".into(), eta: Some(0.5), step: Some(4) },
        source: homogenizer::Error::NotPsd { min_eigenvalue: -1e-3 },
    };
    assert_eq!(err.exit_code(), 3);
    let msg = err.to_string();
    assert!(msg.contains("init bell") && msg.contains("eta 0.5") && msg.contains("step 4"), "{msg}");
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"experiment": "converge", "n_steps": 5, "seed": 1}"#);
    let read = |dir: &str| fs::read_to_string(tmp.path().join(dir).join("markovian_000.csv")).unwrap();
    assert!(run("converge", &cfg, &tmp.path().join("a"), &[]).status.success());
    assert!(run("converge", &cfg, &tmp.path().join("b"), &["--seed", "1"]).status.success());
    assert!(run("converge", &cfg, &tmp.path().join("c"), &["--seed", "2"]).status.success());
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
