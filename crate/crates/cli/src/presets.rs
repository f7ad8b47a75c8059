//! Built-in experiments for the four reference data sets.
//!
//! `paper` uses the published resolutions and rates; `desk` shrinks them so
//! a run takes seconds. Every preset uses unit diffusion.

use std::collections::BTreeMap;
use std::fmt;

use boltzprice_core::{Example, GuardPolicy};

use crate::config::{
    CompareWhat, ComparisonConfig, ExperimentConfig, GridConfig, InitialDataConfig, ModelKind,
    ObserverConfig, OutputConfig, ParamsConfig, Quantity, RunConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Scale {
    #[default]
    Desk,
    Paper,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

/// Number of series rows a preset aims for.
const SERIES_ROWS: usize = 200;

fn observers(dt: f64, t_end: f64) -> Vec<ObserverConfig> {
    let steps = (t_end / dt).round().max(1.0) as usize;
    vec![
        ObserverConfig {
            stride: (steps / SERIES_ROWS).max(1),
            quantities: vec![Quantity::Series],
        },
        // Initial and final profiles.
        ObserverConfig {
            stride: steps,
            quantities: vec![Quantity::Fields],
        },
    ]
}

struct RunSpec {
    label: &'static str,
    model: ModelKind,
    params: ParamsConfig,
}

fn run(example: Example, grid: &GridConfig, spec: RunSpec) -> RunConfig {
    let dt = spec.params.dt.expect("presets set dt");
    let t_end = spec.params.t_end.expect("presets set t_end");
    RunConfig {
        label: spec.label.into(),
        model: spec.model,
        grid: grid.clone(),
        params: spec.params,
        initial_data: InitialDataConfig {
            example: Some(example),
            ..InitialDataConfig::default()
        },
        observers: observers(dt, t_end),
        estimator: None,
        sweep: BTreeMap::new(),
    }
}

fn compare(a: &str, b: &str, quantity: CompareWhat) -> ComparisonConfig {
    ComparisonConfig {
        a: a.into(),
        b: b.into(),
        quantity,
        window_start: None,
        window_end: None,
    }
}

fn unit_grid(h: f64) -> GridConfig {
    GridConfig {
        x_min: 0.0,
        x_max: 1.0,
        h: Some(h),
        n_cells: None,
    }
}

/// Boltzmann against the free-boundary model on touching data.
fn example1(scale: Scale) -> ExperimentConfig {
    let (k, dt, t_end) = match scale {
        Scale::Paper => (1e6, 1e-6, 1.0),
        Scale::Desk => (1e3, 1e-3, 0.5),
    };
    let grid = unit_grid(0.002);
    let cost = ParamsConfig {
        a_cells: Some(10),
        dt: Some(dt),
        t_end: Some(t_end),
        ..ParamsConfig::default()
    };
    let runs = vec![
        run(
            Example::Example1,
            &grid,
            RunSpec {
                label: "boltzmann",
                model: ModelKind::Boltzmann,
                // dt k = 1 while max g = 4: the collision guard cannot hold.
                params: ParamsConfig {
                    k: Some(k),
                    guard: Some(GuardPolicy::Monitor),
                    ..cost.clone()
                },
            },
        ),
        run(
            Example::Example1,
            &grid,
            RunSpec {
                label: "fbp",
                model: ModelKind::Fbp,
                params: cost,
            },
        ),
    ];
    ExperimentConfig {
        name: Some(format!("example1-{scale}")),
        runs,
        comparisons: vec![
            compare("boltzmann", "fbp", CompareWhat::Price),
            compare("boltzmann", "fbp", CompareWhat::Fields),
        ],
        output: OutputConfig::default(),
    }
}

/// Boltzmann model over a ladder of trading rates with `dt = 1/k`.
fn example2(scale: Scale) -> ExperimentConfig {
    let (h, ks): (f64, &[f64]) = match scale {
        Scale::Paper => (1e-3, &[1e5, 1e6]),
        Scale::Desk => (2e-3, &[1e2, 1e3, 1e4]),
    };
    let t_end = 0.5;
    let dts: Vec<f64> = ks.iter().map(|k| 1.0 / k).collect();
    let mut boltzmann = run(
        Example::Example2,
        &unit_grid(h),
        RunSpec {
            label: "boltzmann",
            model: ModelKind::Boltzmann,
            params: ParamsConfig {
                a_cells: Some(10),
                dt: Some(dts[0]),
                t_end: Some(t_end),
                ..ParamsConfig::default()
            },
        },
    );
    // Observer strides are in steps; size them for the finest run.
    boltzmann.observers = observers(*dts.last().unwrap(), t_end);
    boltzmann.sweep = BTreeMap::from([("k".into(), ks.to_vec()), ("dt".into(), dts.clone())]);
    let fbp = run(
        Example::Example2,
        &unit_grid(h),
        RunSpec {
            label: "fbp",
            model: ModelKind::Fbp,
            params: ParamsConfig {
                a_cells: Some(10),
                dt: Some(*dts.last().unwrap()),
                t_end: Some(t_end),
                ..ParamsConfig::default()
            },
        },
    );
    let comparisons = (0..ks.len())
        .map(|i| compare(&format!("boltzmann-{i}"), "fbp", CompareWhat::Price))
        .collect();
    ExperimentConfig {
        name: Some(format!("example2-{scale}")),
        runs: vec![boltzmann, fbp],
        comparisons,
        output: OutputConfig::default(),
    }
}

/// Switched supports on the fast time scale with `epsilon = 1/k`. The
/// published parameters are already desk sized, so both scales agree.
fn example3(scale: Scale) -> ExperimentConfig {
    let layer = run(
        Example::Example3,
        &unit_grid(2e-3),
        RunSpec {
            label: "layer",
            model: ModelKind::Layer,
            params: ParamsConfig {
                k: Some(5e2),
                a_cells: Some(10),
                dt: Some(2e-4),
                t_end: Some(1.0),
                ..ParamsConfig::default()
            },
        },
    );
    ExperimentConfig {
        name: Some(format!("example3-{scale}")),
        runs: vec![layer],
        comparisons: Vec::new(),
        output: OutputConfig::default(),
    }
}

/// Boltzmann with `k a = 1` against the drift-diffusion limit and the
/// consecutive-limit reference.
fn example4(scale: Scale) -> ExperimentConfig {
    let (h, k, dt) = match scale {
        Scale::Paper => (2e-5, 5e4, 2e-5),
        Scale::Desk => (2e-3, 5e2, 1e-3),
    };
    let t_end = 1.0;
    let grid = GridConfig {
        x_min: 0.0,
        x_max: 20.0,
        h: Some(h),
        n_cells: None,
    };
    let base = ParamsConfig {
        dt: Some(dt),
        t_end: Some(t_end),
        ..ParamsConfig::default()
    };
    let runs = vec![
        run(
            Example::Example4,
            &grid,
            RunSpec {
                label: "boltzmann",
                model: ModelKind::Boltzmann,
                // dt k max g = 2 at paper scale.
                params: ParamsConfig {
                    k: Some(k),
                    a_cells: Some(1),
                    guard: Some(GuardPolicy::Monitor),
                    ..base.clone()
                },
            },
        ),
        run(
            Example::Example4,
            &grid,
            RunSpec {
                label: "limit",
                model: ModelKind::Limit,
                params: ParamsConfig {
                    c: Some(1.0),
                    ..base.clone()
                },
            },
        ),
        run(
            Example::Example4,
            &grid,
            RunSpec {
                label: "consecutive",
                model: ModelKind::Consecutive,
                params: base,
            },
        ),
    ];
    let mut comparisons = Vec::new();
    for (a, b) in [
        ("boltzmann", "limit"),
        ("boltzmann", "consecutive"),
        ("limit", "consecutive"),
    ] {
        comparisons.push(compare(a, b, CompareWhat::Price));
        comparisons.push(compare(a, b, CompareWhat::Fields));
    }
    ExperimentConfig {
        name: Some(format!("example4-{scale}")),
        runs,
        comparisons,
        output: OutputConfig::default(),
    }
}

/// The preset experiment for `example` at `scale`.
pub fn preset(example: Example, scale: Scale) -> ExperimentConfig {
    match example {
        Example::Example1 => example1(scale),
        Example::Example2 => example2(scale),
        Example::Example3 => example3(scale),
        Example::Example4 => example4(scale),
    }
}
