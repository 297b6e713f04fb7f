use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mspl::{generate_data, sample_moments, LoadingSetting};
use serde_json::Value;
use tempfile::TempDir;

fn mspl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mspl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn identity_csv(dir: &TempDir, p: usize) -> PathBuf {
    let text: String = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if i == j { "1" } else { "0" })
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    write(dir, "identity.csv", &text)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn matrix_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn soft_sample_variance_on_identity_has_tiny_communalities() {
    let dir = TempDir::new().unwrap();
    let id = identity_csv(&dir, 9);
    let o = mspl(&[
        "fit",
        "--cov",
        s(&id),
        "--n",
        "100",
        "--q",
        "1",
        "--penalty",
        "sample-variance",
        "--scaling",
        "soft",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let comm = v["result"]["communalities"].as_array().unwrap();
    assert_eq!(comm.len(), 9);
    assert!(comm.iter().all(|c| c.as_f64().unwrap() < 1e-3));
    assert_eq!(v["metadata"]["config"]["q"], 1);
    assert_eq!(v["metadata"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn too_many_factors_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let data = generate_data(&LoadingSetting::A3, 40, 1, 0).unwrap();
    let text: String = data
        .row_iter()
        .take(40)
        .map(|r| {
            r.iter()
                .take(5)
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    let raw = write(&dir, "raw.csv", &format!("a,b,c,d,e\n{text}"));
    let o = mspl(&["fit", "--data", s(&raw), "--q", "6"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    assert!(o.stdout.is_empty());
}

#[test]
fn heywood_fit_still_writes_output_and_exits_three() {
    let dir = TempDir::new().unwrap();
    // one-factor exact fit needs a loading of sqrt(0.8 * 0.7 / 0.5) > 1
    let r = write(&dir, "r.csv", "1,0.8,0.7\n0.8,1,0.5\n0.7,0.5,1\n");
    let out = dir.path().join("fit.json");
    let o = mspl(&[
        "fit",
        "--cov",
        s(&r),
        "--n",
        "200",
        "--q",
        "1",
        "-o",
        s(&out),
    ]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["heywood"]["flagged"], true);

    let o = mspl(&[
        "fit",
        "--cov",
        s(&r),
        "--n",
        "200",
        "--q",
        "1",
        "--penalty",
        "hirose",
        "--scaling",
        "soft",
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("notice"));
    let v = json(&o);
    assert!(v["result"]["uniquenesses"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap() > 1e-4));
}

#[test]
fn input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let id = identity_csv(&dir, 4);
    assert_eq!(code(&mspl(&["fit", "--cov", s(&id), "--q", "1"])), 2);
    let ragged = write(&dir, "ragged.csv", "1,0\n0\n");
    assert_eq!(
        code(&mspl(&["fit", "--cov", s(&ragged), "--n", "9", "--q", "1"])),
        2
    );
    let not_pd = write(&dir, "npd.csv", "1,2\n2,1\n");
    assert_eq!(
        code(&mspl(&["fit", "--cov", s(&not_pd), "--n", "9", "--q", "1"])),
        2
    );
    assert_eq!(
        code(&mspl(&[
            "fit",
            "--cov",
            "/nonexistent.csv",
            "--n",
            "9",
            "--q",
            "1"
        ])),
        2
    );
    assert_eq!(
        code(&mspl(&[
            "fit",
            "--cov",
            s(&id),
            "--n",
            "9",
            "--q",
            "1",
            "--penalty",
            "ridge"
        ])),
        2
    );
    assert_eq!(
        code(&mspl(&[
            "fit",
            "--cov",
            s(&id),
            "--n",
            "9",
            "--q",
            "1",
            "--penalty",
            "akaike",
            "--scaling",
            "vanilla:0"
        ])),
        2
    );
}

#[test]
fn select_on_identity_picks_one_factor() {
    let dir = TempDir::new().unwrap();
    let id = identity_csv(&dir, 9);
    let o = mspl(&["select", "--cov", s(&id), "--n", "100", "--q-grid", "1..3"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"]["best_aic"], 1);
    assert_eq!(v["result"]["best_bic"], 1);
    assert_eq!(v["result"]["per_q"].as_array().unwrap().len(), 3);

    let o = mspl(&[
        "select",
        "--cov",
        s(&id),
        "--n",
        "100",
        "--q-grid",
        "1..3",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# best_bic=1"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);

    assert_eq!(
        code(&mspl(&[
            "select",
            "--cov",
            s(&id),
            "--n",
            "100",
            "--q-grid",
            ""
        ])),
        2
    );
    assert_eq!(
        code(&mspl(&[
            "select",
            "--cov",
            s(&id),
            "--n",
            "100",
            "--q-grid",
            "1..9"
        ])),
        2
    );
}

#[test]
fn simulate_is_deterministic_and_writes_replicate_table() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--setting".into(),
            "B3".into(),
            "--n".into(),
            "60".into(),
            "--replicates".into(),
            "3".into(),
            "--seed".into(),
            "7".into(),
            "--estimators".into(),
            "none,loading-trace:vanilla:1".into(),
            "--q-grid".into(),
            "1..3".into(),
            "-o".into(),
            s(out).into(),
        ]
    };
    let run = |out: &Path| {
        let args = args(out);
        mspl(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(code(&run(&a)), 0);
    assert_eq!(code(&run(&b)), 0);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let table = std::fs::read_to_string(dir.path().join("a.replicates.csv")).unwrap();
    let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 3 * 2);
    // 9 items give 45 unique elements after the 11 fixed columns
    assert_eq!(rows[0].split(',').count(), 11 + 45);

    let v: Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["metadata"]["seed"], 7);
    assert_eq!(v["result"]["estimators"].as_array().unwrap().len(), 2);
}

#[test]
fn single_replicate_percentages_are_all_or_nothing() {
    let o = mspl(&[
        "simulate",
        "--setting",
        "A3",
        "--n",
        "80",
        "--replicates",
        "1",
        "--seed",
        "2",
        "--estimators",
        "none,sample-variance",
        "--q-grid",
        "1..4",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for e in v["result"]["estimators"].as_array().unwrap() {
        let h = e["heywood_percent"].as_f64().unwrap();
        assert!(h == 0.0 || h == 100.0);
        for p in e["selection"]["bic_percent"].as_array().unwrap() {
            let p = p.as_f64().unwrap();
            assert!(p == 0.0 || p == 100.0);
        }
    }
}

#[test]
fn simulate_rejects_unknown_setting() {
    let o = mspl(&[
        "simulate",
        "--setting",
        "C3",
        "--n",
        "50",
        "--replicates",
        "1",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_penalty_exit_codes() {
    for fam in ["sample-variance", "loading-trace"] {
        let o = mspl(&["check-penalty", "--penalty", fam]);
        assert_eq!(code(&o), 0, "{fam}");
        let text = String::from_utf8(o.stdout).unwrap();
        assert_eq!(text.matches(": pass").count(), 3);
    }
    let o = mspl(&["check-penalty", "--penalty", "none"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("divergence: fail"));
}

#[test]
fn covariance_round_trip_is_lossless() {
    let dir = TempDir::new().unwrap();
    let data = generate_data(&LoadingSetting::A3, 150, 11, 0).unwrap();
    let text: String = data
        .row_iter()
        .map(|r| {
            r.iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(",")
                + "\n"
        })
        .collect();
    let raw = write(&dir, "raw.csv", &text);
    let first = dir.path().join("cov1.csv");
    let o = mspl(&["cov", "--data", s(&raw), "--format", "csv", "-o", s(&first)]);
    assert_eq!(code(&o), 0);

    let expected = sample_moments(&data).unwrap();
    let written = matrix_rows(&std::fs::read_to_string(&first).unwrap());
    for (i, row) in written.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert_eq!(v.to_bits(), expected.cov()[(i, j)].to_bits());
        }
    }
    assert_eq!(written.len(), 9);

    let second = dir.path().join("cov2.csv");
    let o = mspl(&[
        "cov",
        "--cov",
        s(&first),
        "--n",
        "150",
        "--format",
        "csv",
        "-o",
        s(&second),
    ]);
    assert_eq!(code(&o), 0);
    let again = matrix_rows(&std::fs::read_to_string(&second).unwrap());
    assert_eq!(written, again);

    // fits from raw data and from the written covariance agree exactly
    let from_raw = json(&mspl(&[
        "fit",
        "--data",
        s(&raw),
        "--q",
        "3",
        "--penalty",
        "loading-trace",
    ]));
    let from_cov = json(&mspl(&[
        "fit",
        "--cov",
        s(&first),
        "--n",
        "150",
        "--q",
        "3",
        "--penalty",
        "loading-trace",
    ]));
    assert_eq!(from_raw["result"], from_cov["result"]);
}

#[test]
fn config_file_supplies_flags_and_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let id = identity_csv(&dir, 6);
    let cfg = write(
        &dir,
        "run.json",
        &format!(
            r#"{{"cov": "{}", "n": 50, "q_grid": [1, 2], "format": "csv"}}"#,
            s(&id)
        ),
    );
    let o = mspl(&["select", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("# {"));

    // command-line flags win over the file
    let o = mspl(&[
        "select",
        "--config",
        s(&cfg),
        "--format",
        "json",
        "--q-grid",
        "1",
    ]);
    assert_eq!(json(&o)["result"]["per_q"].as_array().unwrap().len(), 1);

    let bad = write(&dir, "bad.json", r#"{"n": 50, "qgrid": "1..2"}"#);
    let o = mspl(&["select", "--config", s(&bad), "--cov", s(&id)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field"));
}
