use boltzprice_cli::config::{parse_config, resolve, ModelKind};

fn with_run(run: &str) -> String {
    format!(r#"{{ "runs": [ {run} ] }}"#)
}

const BOLTZMANN: &str = r#"{
    "label": "b",
    "model": "boltzmann",
    "grid": { "x_min": 0.0, "x_max": 1.0, "h": 0.01 },
    "params": { "k": 10.0, "a": 0.05, "dt": 0.001, "t_end": 0.01 },
    "initial_data": { "example": "example2" }
}"#;

fn error_of(text: &str) -> String {
    format!("{:#}", parse_config(text).unwrap_err())
}

#[test]
fn minimal_config_resolves() {
    let cfg = parse_config(&with_run(BOLTZMANN)).unwrap();
    let exp = resolve(&cfg).unwrap();
    assert_eq!(exp.runs.len(), 1);
    let run = &exp.runs[0];
    assert_eq!(run.model, ModelKind::Boltzmann);
    assert_eq!(run.shift.steps(), 5);
    assert_eq!(run.grid.n_cells(), 100);
    assert!((run.params.sigma - std::f64::consts::SQRT_2).abs() < 1e-15);
    assert_eq!(exp.output.precision, 17);
    assert!(run.series_strides.is_empty() && run.field_strides.is_empty());
}

#[test]
fn unknown_field_is_named_with_its_path() {
    let text = with_run(&BOLTZMANN.replace(r#""k": 10.0"#, r#""kk": 10.0"#));
    let msg = error_of(&text);
    assert!(
        msg.contains("runs[0].params") && msg.contains("kk"),
        "{msg}"
    );
    assert!(msg.contains("line"), "{msg}");
}

#[test]
fn type_errors_carry_the_field_path() {
    let text = with_run(&BOLTZMANN.replace(r#""dt": 0.001"#, r#""dt": "small""#));
    let msg = error_of(&text);
    assert!(msg.contains("runs[0].params.dt"), "{msg}");
}

#[test]
fn cost_off_the_grid_is_rejected() {
    let text = with_run(&BOLTZMANN.replace(r#""a": 0.05"#, r#""a": 0.055"#));
    let msg = error_of(&text);
    assert!(
        msg.contains("runs[0].params") && msg.contains("not an integer multiple"),
        "{msg}"
    );
}

#[test]
fn grid_needs_exactly_one_resolution() {
    let both = BOLTZMANN.replace(r#""h": 0.01"#, r#""h": 0.01, "n_cells": 100"#);
    assert!(error_of(&with_run(&both)).contains("runs[0].grid"));
    let neither = BOLTZMANN.replace(r#", "h": 0.01"#, "");
    assert!(error_of(&with_run(&neither)).contains("exactly one"));
}

#[test]
fn model_requirements_are_checked() {
    let no_k = BOLTZMANN.replace(r#""k": 10.0, "#, "");
    assert!(error_of(&with_run(&no_k)).contains("'k' is required"));
    let fbp = BOLTZMANN
        .replace("boltzmann", "fbp")
        .replace(r#""a": 0.05"#, r#""a": 0.0"#);
    assert!(error_of(&with_run(&fbp)).contains("positive transaction cost"));
    let limit = BOLTZMANN
        .replace("boltzmann", "limit")
        .replace(r#""k": 10.0, "a": 0.05, "#, "");
    assert!(error_of(&with_run(&limit)).contains("'c'"));
}

#[test]
fn limit_drift_defaults_to_k_times_a() {
    let cfg = parse_config(&with_run(&BOLTZMANN.replace("boltzmann", "limit"))).unwrap();
    let exp = resolve(&cfg).unwrap();
    assert!((exp.runs[0].params.c - 0.5).abs() < 1e-12);
}

#[test]
fn layer_defaults_epsilon_to_one_over_k() {
    let cfg = parse_config(&with_run(&BOLTZMANN.replace("boltzmann", "layer"))).unwrap();
    let exp = resolve(&cfg).unwrap();
    assert!((exp.runs[0].params.epsilon - 0.1).abs() < 1e-15);
}

#[test]
fn initial_data_must_be_one_form() {
    let both = BOLTZMANN.replace(
        r#"{ "example": "example2" }"#,
        r#"{ "example": "example2", "f": { "pieces": [] } }"#,
    );
    assert!(error_of(&with_run(&both)).contains("runs[0].initial_data"));
}

#[test]
fn explicit_piecewise_data() {
    let run = BOLTZMANN.replace(
        r#"{ "example": "example2" }"#,
        r#"{
            "f": { "pieces": [ { "interval": [0.2, 0.4], "shape": { "poly": [1.0] } } ] },
            "g": { "pieces": [ { "interval": [0.5, 0.7], "shape": { "bump": { "scale": 10.0, "left": 0.5, "right": 0.7 } } } ] }
        }"#,
    );
    let exp = resolve(&parse_config(&with_run(&run)).unwrap()).unwrap();
    let r = &exp.runs[0];
    // The trapezoid rule smears each jump over half a cell.
    assert!((r.f_init.integrate() - 0.2).abs() <= r.grid.h() + 1e-12);
    // 10 * 0.2^3 / 6
    assert!((r.g_init.integrate() - 10.0 * 0.008 / 6.0).abs() < 1e-4);
}

#[test]
fn sweeps_expand_in_order() {
    let run = BOLTZMANN.replace(
        r#""initial_data""#,
        r#""sweep": { "k": [1.0, 2.0, 3.0], "dt": [0.004, 0.002, 0.001] }, "initial_data""#,
    );
    let exp = resolve(&parse_config(&with_run(&run)).unwrap()).unwrap();
    let labels: Vec<&str> = exp.runs.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["b-0", "b-1", "b-2"]);
    assert_eq!(exp.runs[2].params.k, 3.0);
    assert_eq!(exp.runs[2].params.dt, 0.001);

    let ragged = run.replace("[0.004, 0.002, 0.001]", "[0.004, 0.002]");
    assert!(error_of(&with_run(&ragged)).contains("has 2 values"));
    let bogus = run.replace(r#""dt": [0.004"#, r#""h": [0.004"#);
    assert!(error_of(&with_run(&bogus)).contains("not a sweepable"));
}

#[test]
fn comparisons_must_name_existing_runs() {
    let text = format!(
        r#"{{ "runs": [ {BOLTZMANN} ], "comparisons": [ {{ "a": "b", "b": "missing", "quantity": "price" }} ] }}"#
    );
    let msg = error_of(&text);
    assert!(
        msg.contains("comparisons[0]") && msg.contains("missing"),
        "{msg}"
    );
}

#[test]
fn duplicate_labels_are_rejected() {
    let text = format!(r#"{{ "runs": [ {BOLTZMANN}, {BOLTZMANN} ] }}"#);
    assert!(error_of(&text).contains("duplicate label"));
}

#[test]
fn zero_stride_is_rejected() {
    let run = BOLTZMANN.replace(
        r#""initial_data""#,
        r#""observers": [ { "stride": 0, "quantities": ["series"] } ], "initial_data""#,
    );
    assert!(error_of(&with_run(&run)).contains("observers[0].stride"));
}

#[test]
fn configs_round_trip_through_json() {
    let cfg = parse_config(&with_run(BOLTZMANN)).unwrap();
    let text = serde_json::to_string_pretty(&cfg).unwrap();
    assert_eq!(parse_config(&text).unwrap(), cfg);
}
