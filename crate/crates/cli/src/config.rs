//! Experiment configuration: the JSON schema, sweep expansion and the
//! validation that turns a config into runnable, fully resolved runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use boltzprice_core::{
    Estimator, Example, Field, Grid, GuardPolicy, PiecewiseSpec, ShiftSteps, TimeWindow,
    UNIT_DIFFUSION_SIGMA,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_PRECISION: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub runs: Vec<RunConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<ComparisonConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Significant digits in CSV output.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            precision: DEFAULT_PRECISION,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_precision() -> usize {
    DEFAULT_PRECISION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Boltzmann,
    Fbp,
    Layer,
    Limit,
    Consecutive,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Boltzmann => "boltzmann",
            ModelKind::Fbp => "fbp",
            ModelKind::Layer => "layer",
            ModelKind::Limit => "limit",
            ModelKind::Consecutive => "consecutive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: String,
    pub model: ModelKind,
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub initial_data: InitialDataConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observers: Vec<ObserverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<Estimator>,
    /// Parameter lists of equal length; entry `i` of every list makes run
    /// `<label>-<i>`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<f64>>,
}

/// Exactly one of `h` and `n_cells`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
}

/// Model parameters. Which ones are required depends on the model; the cost
/// is given either as a price (`a`) or in cells (`a_cells`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<GuardPolicy>,
}

/// Either a named reference data set or explicit piecewise densities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<Example>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<PiecewiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<PiecewiseSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// A row of `series_<label>.csv`.
    Series,
    /// A `fields_<label>_<t>.csv` snapshot.
    Fields,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub stride: usize,
    pub quantities: Vec<Quantity>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareWhat {
    Price,
    Fields,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    pub a: String,
    pub b: String,
    pub quantity: CompareWhat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_end: Option<f64>,
}

/// Parameters of one run after defaults and sweeps are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub k: f64,
    pub a: f64,
    pub sigma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub c: f64,
    pub epsilon: f64,
    pub guard: GuardPolicy,
}

#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub label: String,
    pub model: ModelKind,
    pub grid: Grid,
    pub shift: ShiftSteps,
    pub params: ResolvedParams,
    pub f_init: Field,
    pub g_init: Field,
    pub estimator: Estimator,
    pub series_strides: Vec<usize>,
    pub field_strides: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ResolvedComparison {
    pub a: String,
    pub b: String,
    pub quantity: CompareWhat,
    pub window: TimeWindow,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub runs: Vec<ResolvedRun>,
    pub comparisons: Vec<ResolvedComparison>,
    pub output: OutputConfig,
}

/// Reads and validates a config file. Schema errors name the offending
/// field and its line.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn parse_config(text: &str) -> anyhow::Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        anyhow::anyhow!("{path}: {inner}")
    })?;
    resolve(&cfg)?;
    Ok(cfg)
}

const SWEEPABLE: [&str; 7] = ["k", "a", "sigma", "dt", "t_end", "c", "epsilon"];

/// Expands sweeps, samples initial data and checks every model requirement.
pub fn resolve(cfg: &ExperimentConfig) -> anyhow::Result<Experiment> {
    if cfg.runs.is_empty() {
        bail!("runs: at least one run is required");
    }
    if cfg.output.precision == 0 || cfg.output.precision > 17 {
        bail!(
            "output.precision: expected 1 to 17 significant digits, got {}",
            cfg.output.precision
        );
    }
    let mut runs = Vec::new();
    for (i, run) in cfg.runs.iter().enumerate() {
        let at = format!("runs[{i}]");
        runs.extend(expand_run(run, &at)?);
    }
    for (i, a) in runs.iter().enumerate() {
        if runs[..i].iter().any(|b| b.label == a.label) {
            bail!("runs: duplicate label '{}'", a.label);
        }
    }
    let mut comparisons = Vec::new();
    for (i, c) in cfg.comparisons.iter().enumerate() {
        let at = format!("comparisons[{i}]");
        for label in [&c.a, &c.b] {
            if !runs.iter().any(|r| &r.label == label) {
                bail!("{at}: no run labelled '{label}'");
            }
        }
        let window = TimeWindow {
            start: c.window_start.unwrap_or(TimeWindow::default().start),
            end: c.window_end.unwrap_or(f64::INFINITY),
        };
        if !(window.start <= window.end) {
            bail!("{at}: window_start must not exceed window_end");
        }
        comparisons.push(ResolvedComparison {
            a: c.a.clone(),
            b: c.b.clone(),
            quantity: c.quantity,
            window,
        });
    }
    Ok(Experiment {
        name: cfg.name.clone().unwrap_or_else(|| "experiment".into()),
        runs,
        comparisons,
        output: cfg.output.clone(),
    })
}

fn expand_run(run: &RunConfig, at: &str) -> anyhow::Result<Vec<ResolvedRun>> {
    if run.label.is_empty()
        || !run
            .label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
    {
        bail!(
            "{at}.label: use letters, digits, '-', '_' or '.', got '{}'",
            run.label
        );
    }
    let grid = resolve_grid(&run.grid).with_context(|| format!("{at}.grid"))?;
    let (f_init, g_init) =
        resolve_initial(&run.initial_data, &grid).with_context(|| format!("{at}.initial_data"))?;
    let mut series_strides = Vec::new();
    let mut field_strides = Vec::new();
    for (j, obs) in run.observers.iter().enumerate() {
        if obs.stride == 0 {
            bail!("{at}.observers[{j}].stride: must be at least 1");
        }
        for q in &obs.quantities {
            match q {
                Quantity::Series => series_strides.push(obs.stride),
                Quantity::Fields => field_strides.push(obs.stride),
            }
        }
    }

    let mut lengths = run.sweep.iter().map(|(key, values)| (key, values.len()));
    let count = match lengths.next() {
        None => None,
        Some((key, n)) => {
            if n == 0 {
                bail!("{at}.sweep.{key}: empty list");
            }
            if let Some((other, m)) = lengths.find(|&(_, m)| m != n) {
                bail!("{at}.sweep: '{key}' has {n} values but '{other}' has {m}");
            }
            Some(n)
        }
    };
    for key in run.sweep.keys() {
        if !SWEEPABLE.contains(&key.as_str()) {
            bail!("{at}.sweep.{key}: not a sweepable parameter (one of {SWEEPABLE:?})");
        }
    }

    let variants: Vec<(String, ParamsConfig)> = match count {
        None => vec![(run.label.clone(), run.params.clone())],
        Some(n) => (0..n)
            .map(|i| {
                let mut p = run.params.clone();
                for (key, values) in &run.sweep {
                    let v = Some(values[i]);
                    match key.as_str() {
                        "k" => p.k = v,
                        "a" => {
                            p.a = v;
                            p.a_cells = None;
                        }
                        "sigma" => p.sigma = v,
                        "dt" => p.dt = v,
                        "t_end" => p.t_end = v,
                        "c" => p.c = v,
                        "epsilon" => p.epsilon = v,
                        _ => unreachable!("checked above"),
                    }
                }
                (format!("{}-{i}", run.label), p)
            })
            .collect(),
    };

    variants
        .into_iter()
        .map(|(label, params)| {
            let (params, shift) = resolve_params(run.model, &params, &grid)
                .with_context(|| format!("{at}.params (run '{label}')"))?;
            Ok(ResolvedRun {
                label,
                model: run.model,
                grid,
                shift,
                params,
                f_init: f_init.clone(),
                g_init: g_init.clone(),
                estimator: run.estimator.unwrap_or_default(),
                series_strides: series_strides.clone(),
                field_strides: field_strides.clone(),
            })
        })
        .collect()
}

fn resolve_grid(cfg: &GridConfig) -> anyhow::Result<Grid> {
    let grid = match (cfg.h, cfg.n_cells) {
        (Some(h), None) => Grid::with_spacing(cfg.x_min, cfg.x_max, h)?,
        (None, Some(n)) => Grid::new(cfg.x_min, cfg.x_max, n)?,
        _ => bail!("exactly one of 'h' and 'n_cells' is required"),
    };
    Ok(grid)
}

fn resolve_initial(cfg: &InitialDataConfig, grid: &Grid) -> anyhow::Result<(Field, Field)> {
    let (f, g) = match (cfg.example, &cfg.f, &cfg.g) {
        (Some(ex), None, None) => ex.data(),
        (None, Some(f), Some(g)) => (f.clone(), g.clone()),
        _ => bail!("give either 'example' or both 'f' and 'g'"),
    };
    let f = f.sample(grid).context("f")?;
    let g = g.sample(grid).context("g")?;
    Ok((f, g))
}

fn require(value: Option<f64>, name: &str, model: ModelKind) -> anyhow::Result<f64> {
    value.with_context(|| format!("'{name}' is required for the {model} model"))
}

fn resolve_params(
    model: ModelKind,
    p: &ParamsConfig,
    grid: &Grid,
) -> anyhow::Result<(ResolvedParams, ShiftSteps)> {
    let a = match (p.a, p.a_cells) {
        (Some(_), Some(_)) => bail!("give 'a' or 'a_cells', not both"),
        (Some(a), None) => Some(a),
        (None, Some(cells)) => Some(ShiftSteps::new(cells).cost(grid)),
        (None, None) => None,
    };
    let needs_cost = !matches!(model, ModelKind::Limit | ModelKind::Consecutive);
    let a = if needs_cost {
        require(a, "a", model)?
    } else {
        a.unwrap_or(0.0)
    };
    let shift = ShiftSteps::from_cost(a, grid)?;
    let dt = require(p.dt, "dt", model)?;
    let t_end = require(p.t_end, "t_end", model)?;
    let sigma = p.sigma.unwrap_or(UNIT_DIFFUSION_SIGMA);
    let k = match model {
        ModelKind::Boltzmann | ModelKind::Layer => require(p.k, "k", model)?,
        _ => p.k.unwrap_or(0.0),
    };
    let c = match (model, p.c, p.k) {
        (ModelKind::Limit, Some(c), _) => c,
        (ModelKind::Limit, None, Some(k)) if a > 0.0 => k * a,
        (ModelKind::Limit, None, _) => {
            bail!("'c' (or 'k' and 'a') is required for the limit model")
        }
        (_, c, _) => c.unwrap_or(0.0),
    };
    let epsilon = match (model, p.epsilon) {
        (_, Some(eps)) => eps,
        (ModelKind::Layer, None) => 1.0 / k,
        _ => 0.0,
    };

    let positive = |v: f64, name: &str| -> anyhow::Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            bail!("'{name}' must be positive, got {v}");
        }
        Ok(())
    };
    let non_negative = |v: f64, name: &str| -> anyhow::Result<()> {
        if !(v >= 0.0) || !v.is_finite() {
            bail!("'{name}' must be non-negative, got {v}");
        }
        Ok(())
    };
    positive(dt, "dt")?;
    positive(sigma, "sigma")?;
    non_negative(t_end, "t_end")?;
    non_negative(k, "k")?;
    non_negative(c, "c")?;
    non_negative(epsilon, "epsilon")?;
    match model {
        ModelKind::Fbp if shift.steps() == 0 => {
            bail!("the fbp model needs a positive transaction cost 'a'")
        }
        ModelKind::Layer if k == 0.0 => bail!("the layer model needs k > 0"),
        _ => {}
    }
    Ok((
        ResolvedParams {
            k,
            a,
            sigma,
            dt,
            t_end,
            c,
            epsilon,
            guard: p.guard.unwrap_or_default(),
        },
        shift,
    ))
}
