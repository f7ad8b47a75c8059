use std::fs;
use std::path::Path;
use std::process::Command;

use boltzprice_cli::{parse_config, preset, resolve, run_experiment, Scale};
use boltzprice_core::Example;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_boltzprice"))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn config(t_end: f64, observers: &str, k: f64, guard: &str) -> String {
    format!(
        r#"{{
  "runs": [ {{
    "label": "run",
    "model": "boltzmann",
    "grid": {{ "x_min": 0.0, "x_max": 1.0, "n_cells": 100 }},
    "params": {{ "k": {k}, "a_cells": 5, "dt": 0.001, "t_end": {t_end}, "guard": "{guard}" }},
    "initial_data": {{ "example": "example2" }},
    "observers": {observers}
  }} ]
}}"#
    )
}

fn run_text(text: &str, dir: &Path) -> boltzprice_cli::Report {
    let exp = resolve(&parse_config(text).unwrap()).unwrap();
    run_experiment(&exp, dir).unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn zero_step_run_writes_the_initial_state_only() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_text(&config(0.0, "[]", 10.0, "strict"), dir.path());
    assert!(report.succeeded());
    let names: Vec<String> = read_dir_sorted(dir.path())
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    assert_eq!(names, ["fields_run_0.csv", "series_run.csv"]);
    let series = lines(&dir.path().join("series_run.csv"));
    assert_eq!(
        series[0],
        "t,price,mass_f,mass_g,mean_bid,mean_ask,total_volume,leakage"
    );
    assert_eq!(series.len(), 2);
    assert!(series[1].starts_with("0.0000000000000000e0,"));
    let fields = lines(&dir.path().join("fields_run_0.csv"));
    assert_eq!(fields[0], "x,f,g,mu");
    assert_eq!(fields.len(), 102);
}

#[test]
fn empty_observers_give_the_final_state_only() {
    let dir = tempfile::tempdir().unwrap();
    run_text(&config(0.02, "[]", 10.0, "strict"), dir.path());
    let names: Vec<String> = read_dir_sorted(dir.path())
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    assert_eq!(names, ["fields_run_0.02.csv", "series_run.csv"]);
    assert_eq!(lines(&dir.path().join("series_run.csv")).len(), 2);
}

#[test]
fn observer_strides_select_rows_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let observers = r#"[ { "stride": 5, "quantities": ["series"] }, { "stride": 10, "quantities": ["fields"] } ]"#;
    run_text(&config(0.02, observers, 10.0, "strict"), dir.path());
    let series = lines(&dir.path().join("series_run.csv"));
    // t = 0, 0.005, 0.01, 0.015, 0.02
    assert_eq!(series.len(), 6);
    let names: Vec<String> = read_dir_sorted(dir.path())
        .into_iter()
        .map(|(n, _)| n)
        .collect();
    assert_eq!(
        names,
        [
            "fields_run_0.01.csv",
            "fields_run_0.02.csv",
            "fields_run_0.csv",
            "series_run.csv"
        ]
    );
}

#[test]
fn precision_controls_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(0.0, "[]", 10.0, "strict").replace(
        r#"  } ]
}"#,
        r#"  } ],
  "output": { "precision": 4 }
}"#,
    );
    run_text(&text, dir.path());
    let row = &lines(&dir.path().join("fields_run_0.csv"))[51];
    assert_eq!(row.split(',').next().unwrap(), "5.000e-1");
}

#[test]
fn solver_failure_leaves_partial_output_and_an_error_file() {
    let dir = tempfile::tempdir().unwrap();
    let observers = r#"[ { "stride": 1, "quantities": ["series"] } ]"#;
    // dt k max g = 10 * 0.234 > 1 on the first step.
    let report = run_text(&config(0.01, observers, 1e4, "strict"), dir.path());
    assert!(!report.succeeded());
    let error = fs::read_to_string(dir.path().join("error.txt")).unwrap();
    assert!(
        error.starts_with("run run failed at step 1: time step too large"),
        "{error}"
    );
    // Only the initial row made it.
    assert_eq!(lines(&dir.path().join("series_run.csv")).len(), 2);
}

#[test]
fn monitor_policy_runs_through() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_text(&config(0.01, "[]", 1e4, "monitor"), dir.path());
    assert!(report.succeeded());
    assert!(!dir.path().join("error.txt").exists());
}

#[test]
fn every_model_runs() {
    for (model, extra) in [
        ("boltzmann", r#""k": 100.0, "a_cells": 10"#),
        ("fbp", r#""a_cells": 10"#),
        ("layer", r#""k": 100.0, "a_cells": 10"#),
        ("limit", r#""c": 1.0"#),
        ("consecutive", r#""c": 1.0"#),
    ] {
        let text = format!(
            r#"{{ "runs": [ {{
                "label": "{model}", "model": "{model}",
                "grid": {{ "x_min": 0.0, "x_max": 1.0, "h": 0.005 }},
                "params": {{ {extra}, "dt": 0.001, "t_end": 0.05 }},
                "initial_data": {{ "example": "example2" }},
                "observers": [ {{ "stride": 10, "quantities": ["series", "fields"] }} ]
            }} ] }}"#
        );
        let dir = tempfile::tempdir().unwrap();
        let report = run_text(&text, dir.path());
        assert!(report.succeeded(), "{model}: {:?}", report.errors);
        let series = lines(&dir.path().join(format!("series_{model}.csv")));
        assert_eq!(series.len(), 7, "{model}");
        let last: Vec<f64> = series[6].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((last[0] - 0.05).abs() < 1e-12);
        assert!(last[1] > 0.3 && last[1] < 0.8, "{model}: price {}", last[1]);
    }
}

#[test]
fn cli_rejects_bad_configs_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        config(0.0, "[]", 10.0, "strict").replace("\"a_cells\"", "\"a_cell\""),
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("runs[0].params") && stderr.contains("a_cell"),
        "{stderr}"
    );
}

#[test]
fn cli_validate_lists_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ok.json");
    fs::write(&path, config(0.02, "[]", 10.0, "strict")).unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("run") && stdout.contains("steps=20"),
        "{stdout}"
    );
}

#[test]
fn cli_run_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let text = config(0.01, "[]", 1e4, "strict").replace(
        r#"  } ]
}"#,
        &format!(
            r#"  }} ],
  "output": {{ "dir": {:?} }}
}}"#,
            out_dir.to_str().unwrap()
        ),
    );
    let path = dir.path().join("fail.json");
    fs::write(&path, text).unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(out_dir.join("error.txt").exists());
}

#[test]
fn preset_output_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, threads) in [("one", "1"), ("four", "4")] {
        let out = dir.path().join(name);
        let status = bin()
            .args(["preset", "example2", "--out"])
            .arg(&out)
            .env("BOLTZPRICE_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        assert!(out.join("config.json").exists());
        outputs.push(read_dir_sorted(&out));
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn written_preset_config_reproduces_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["preset", "example3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(dir.path().join("config.json")).unwrap();
    let mut cfg = parse_config(&text).unwrap();
    cfg.output = preset(Example::Example3, Scale::Desk).output;
    assert_eq!(cfg, preset(Example::Example3, Scale::Desk));
}
