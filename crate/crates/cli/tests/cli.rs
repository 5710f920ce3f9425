use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lmar_cli::format::{read_experiment_dir, read_path_csv, AggregateFile};
use lmar_cli::manifest::RunManifest;
use lmar_core::experiments::{run_experiment, ExperimentConfig, TheoryReport};

fn lmar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmar"))
        .args(args)
        .env_remove("LMAR_THREADS")
        .output()
        .expect("binary runs")
}

fn lmar_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmar"))
        .args(args)
        .env("LMAR_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_string_lossy().into_owned()
}

fn check_manifest(dir: &Path, manifest: &Path) {
    let m = RunManifest::read(manifest).unwrap();
    assert_eq!(m.tool, "lmar");
    for out in &m.outputs {
        let p = dir.join(out);
        assert!(p.exists(), "{out} listed but missing");
        let text = fs::read_to_string(&p).unwrap();
        if out.ends_with(".json") {
            serde_json::from_str::<serde_json::Value>(&text).unwrap();
        } else if out.ends_with(".svg") {
            roxmltree::Document::parse(&text).unwrap();
            assert!(!text.contains("href") && !text.contains("url("), "{out} references external content");
        } else if out.ends_with(".csv") {
            assert!(csv::Reader::from_path(&p).unwrap().records().all(|r| r.is_ok()));
        }
    }
}

#[test]
fn simulate_is_deterministic_and_documented() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = lmar(&["simulate", "--model", "white", "--theta", "0.5", "--n", "4", "--seed", "1", "--kind", "x", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let values = read_path_csv(&a).unwrap();
    assert_eq!(values.len(), 4);
    assert!(fs::read_to_string(&a).unwrap().starts_with("t,value\n"));
    check_manifest(dir.path(), &dir.path().join("a.manifest.json"));
}

#[test]
fn simulate_kinds() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["noise", "x", "y"] {
        let out = dir.path().join(format!("{kind}.csv"));
        let o = lmar(&["simulate", "--model", "arfima:0.2", "--theta", "0.3", "--n", "100", "--kind", kind, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
        assert_eq!(read_path_csv(&out).unwrap().len(), 100);
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_eq!(lmar(&["simulate", "--model", "fgn:1.2", "--n", "4", "--out", out]).status.code(), Some(2));
    assert_eq!(lmar(&["simulate", "--model", "fgn:0.7", "--n", "4", "--kind", "x", "--out", out]).status.code(), Some(2));
    assert_eq!(lmar(&["simulate", "--model", "white", "--theta", "1.5", "--n", "4", "--out", out]).status.code(), Some(2));
    assert_eq!(lmar(&["simulate", "--model", "white", "--theta", "0.5", "--n", "0", "--out", out]).status.code(), Some(2));
    assert_eq!(lmar(&["bogus"]).status.code(), Some(2));
    assert_eq!(lmar(&["theory", "--model", "white", "--theta", "0.5", "--epsilon", "0.5"]).status.code(), Some(2));
    assert_eq!(lmar(&["--help"]).status.code(), Some(0));
}

#[test]
fn regime_errors_exit_3_with_name() {
    let o = lmar(&["theory", "--model", "fgn:0.8", "--theta", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("UnsupportedRegime"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "clt.json",
        r#"{"schema":1,"experiment":"clt","model":"fgn:0.8","theta":0.5,"n_values":[100],"replicates":5,"base_seed":1}"#,
    );
    let o = lmar(&["experiment", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("UnsupportedRegime"));
}

#[test]
fn theory_reports() {
    let o = lmar(&["theory", "--model", "white", "--theta", "0.5", "--n-grid", "1,2,4"]);
    assert!(o.status.success());
    let r: TheoryReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r.f - 4.0 / 3.0).abs() < 1e-7);
    assert!((r.f_prime - 16.0 / 9.0).abs() < 1e-7);
    assert!((r.sigma_h2.unwrap() - 5.925_925_9).abs() < 1e-7);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = lmar(&["theory", "--model", "fgn:0.7", "--theta", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    for key in ["\"f\"", "\"f_prime\"", "\"sigma_H2\"", "\"c_H\"", "\"v_n2\"", "\"dtv_bound\"", "\"be_rate\""] {
        assert!(text.contains(key), "{key}");
    }
    let r: TheoryReport = serde_json::from_str(&text).unwrap();
    assert!(r.rows.iter().all(|row| row.dtv_bound > 0.0));
    let tail: Vec<f64> = r.rows.iter().filter(|row| row.n >= 64).map(|row| row.dtv_bound).collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0]));
    check_manifest(dir.path(), &dir.path().join("t.manifest.json"));

    let o = lmar(&["theory", "--model", "arfima:0.2", "--theta", "0.9", "--n-grid", "16"]);
    assert!(o.status.success());
    let r: TheoryReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.f > 1.0 / (1.0 - 0.81));
}

#[test]
fn config_errors_list_offending_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema":2,"experiment":"clt","model":"fgn:0.6","theta":1.5,"n_values":[100,50],"replicates":0,"base_seed":1}"#,
    );
    let o = lmar(&["experiment", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for field in ["schema", "theta", "n_values", "replicates"] {
        assert!(err.contains(field), "{field} not reported: {err}");
    }
    let missing = lmar(&["experiment", "/nonexistent/config.json", "--out-dir", "/tmp/never"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"experiment":"consistency","model":"white","theta":0.5,"n_values":[10],"replicates":2,"base_seed":1}"#,
    );
    let o = lmar_env(&["experiment", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()], "0");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_outputs_round_trip_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"schema":1,"experiment":"clt","model":"fgn:0.6","theta":0.5,
        "n_values":[200,400],"replicates":60,"base_seed":7}"#;
    let cfg = write_config(dir.path(), "clt.json", json);
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for (out, threads) in [(&out1, "1"), (&out2, "3")] {
        let o = lmar_env(&["experiment", &cfg, "--out-dir", out.to_str().unwrap()], threads);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(out1.join("records.csv")).unwrap(), fs::read(out2.join("records.csv")).unwrap());
    check_manifest(&out1, &out1.join("manifest.json"));

    let agg: AggregateFile = lmar_cli::format::read_json(&out1.join("aggregates.json")).unwrap();
    assert!(agg.aggregates.per_n.iter().all(|a| a.ks_distance.is_some()));

    let from_files = read_experiment_dir(&out1).unwrap();
    let direct = run_experiment(&ExperimentConfig::from_json(json).unwrap()).unwrap();
    assert_eq!(from_files, direct);
    assert_eq!(from_files.recompute_aggregates().unwrap(), from_files.aggregates);
}

#[test]
fn asclt_and_berry_esseen_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "asclt.json",
        r#"{"schema":1,"experiment":"asclt","model":"fgn:0.7","theta":0.5,"n_values":[2000],
            "replicates":3,"base_seed":3,"z_grid":[-1,0,1]}"#,
    );
    let out = dir.path().join("asclt");
    let o = lmar(&["experiment", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let res = read_experiment_dir(&out).unwrap();
    assert_eq!(res.aggregates.asclt.len(), 3);
    assert!(out.join("asclt.svg").exists());
    check_manifest(&out, &out.join("manifest.json"));

    let cfg = write_config(
        dir.path(),
        "be.json",
        r#"{"schema":1,"experiment":"berry_esseen","model":"fgn:0.6","theta":0.5,"n_values":[128,256,512],
            "replicates":50,"base_seed":3}"#,
    );
    let out = dir.path().join("be");
    let o = lmar(&["experiment", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("rate.svg").exists() && out.join("ecdf.svg").exists());
    let res = read_experiment_dir(&out).unwrap();
    assert!(res.aggregates.rate_fit.is_some());
    check_manifest(&out, &out.join("manifest.json"));
}
