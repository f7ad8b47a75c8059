//! Executes resolved runs and collects what the output writer needs.

use boltzprice_core::boltzmann::boltzmann_record;
use boltzprice_core::fbp::fbp_record;
use boltzprice_core::layer::LayerParams;
use boltzprice_core::limit::{consecutive_densities, consecutive_potential};
use boltzprice_core::{
    extract_price, price_estimate_boltzmann, reconstruct_densities, BoltzmannState,
    BoltzmannStepper, DiagnosticsRecord, Error, FbpSolver, FbpState, Field, ImplicitHeat,
    LayerState, LayerStepper, LimitParams, LimitStepper, ModelParams, PriceSource,
};
use rayon::prelude::*;

use crate::config::{ModelKind, ResolvedRun};

pub const THREADS_ENV: &str = "BOLTZPRICE_THREADS";

/// Buyer, vendor and transaction-volume profiles at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub f: Field,
    pub g: Field,
    pub mu: Field,
}

/// Where a run stopped early.
#[derive(Debug, Clone)]
pub struct RunFailure {
    /// Zero when setting up the initial state failed.
    pub step: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub failure: Option<RunFailure>,
}

impl RunOutcome {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }
}

/// One model advanced step by step by the runner.
trait Simulation {
    fn step(&mut self) -> boltzprice_core::Result<()>;
    /// Diagnostics at time `t`, the current state.
    fn record(&self, t: f64) -> DiagnosticsRecord;
    fn snapshot(&self, t: f64) -> Snapshot;
}

struct Boltzmann {
    stepper: BoltzmannStepper,
    state: BoltzmannState,
    params: ModelParams,
    leakage: (f64, f64),
    run: ResolvedRun,
}

impl Simulation for Boltzmann {
    fn step(&mut self) -> boltzprice_core::Result<()> {
        let tally = self.stepper.step(&mut self.state)?;
        self.leakage.0 += tally.leakage_f;
        self.leakage.1 += tally.leakage_g;
        Ok(())
    }

    fn record(&self, t: f64) -> DiagnosticsRecord {
        let mut state = self.state.clone();
        state.t = t;
        boltzmann_record(&state, &self.params, self.leakage, self.run.estimator)
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let k = self.params.k;
        Snapshot {
            t,
            f: self.state.f.clone(),
            g: self.state.g.clone(),
            mu: self.state.f.zip_map(&self.state.g, |f, g| k * f * g),
        }
    }
}

impl Drop for Boltzmann {
    fn drop(&mut self) {
        let report = self.stepper.guard_report();
        if report.violations > 0 {
            log::warn!(
                "run {}: collision guard exceeded on {} steps (largest dt*k*B = {:.3})",
                self.run.label,
                report.violations,
                report.max_value
            );
        }
    }
}

struct Fbp {
    solver: FbpSolver,
    state: FbpState,
    run: ResolvedRun,
}

impl Simulation for Fbp {
    fn step(&mut self) -> boltzprice_core::Result<()> {
        self.solver.step(&mut self.state)
    }

    fn record(&self, t: f64) -> DiagnosticsRecord {
        let mut rec = fbp_record(&self.state, self.run.shift);
        rec.t = t;
        rec
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let (f, g) = reconstruct_densities(&self.state.v, self.run.shift);
        Snapshot {
            t,
            mu: Field::zeros(*f.grid()),
            f,
            g,
        }
    }
}

/// Fast-time layer reported on the physical clock `t = tau / k`.
struct Layer {
    stepper: LayerStepper,
    state: LayerState,
    leakage: (f64, f64),
    run: ResolvedRun,
}

impl Simulation for Layer {
    fn step(&mut self) -> boltzprice_core::Result<()> {
        let tally = self.stepper.step(&mut self.state)?;
        self.leakage.0 += tally.leakage_f;
        self.leakage.1 += tally.leakage_g;
        Ok(())
    }

    fn record(&self, t: f64) -> DiagnosticsRecord {
        let (alpha, beta) = (&self.state.alpha, &self.state.beta);
        let source = PriceSource::Density(self.run.estimator);
        let mut rec = DiagnosticsRecord::new(t, alpha, beta, source);
        rec.total_volume = alpha.zip_map(beta, |a, b| a * b).integrate();
        rec.leakage_f = self.leakage.0;
        rec.leakage_g = self.leakage.1;
        rec.price = price_estimate_boltzmann(alpha, beta, self.run.estimator).ok();
        rec
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let (alpha, beta) = (&self.state.alpha, &self.state.beta);
        Snapshot {
            t,
            f: alpha.clone(),
            g: beta.clone(),
            mu: alpha.zip_map(beta, |a, b| a * b),
        }
    }
}

/// Drift-diffusion limit. Its leakage column is the mass each density has
/// gained or lost through the boundary drift.
struct Limit {
    stepper: LimitStepper,
    f: Field,
    g: Field,
    initial_mass: (f64, f64),
    run: ResolvedRun,
}

impl Simulation for Limit {
    fn step(&mut self) -> boltzprice_core::Result<()> {
        self.stepper.step(&mut self.f, &mut self.g)
    }

    fn record(&self, t: f64) -> DiagnosticsRecord {
        let source = PriceSource::Density(self.run.estimator);
        let mut rec = DiagnosticsRecord::new(t, &self.f, &self.g, source);
        rec.leakage_f = (self.initial_mass.0 - rec.mass_f).abs();
        rec.leakage_g = (self.initial_mass.1 - rec.mass_g).abs();
        rec.price = price_estimate_boltzmann(&self.f, &self.g, self.run.estimator).ok();
        rec
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        Snapshot {
            t,
            f: self.f.clone(),
            g: self.g.clone(),
            mu: Field::zeros(*self.f.grid()),
        }
    }
}

/// Consecutive-limit reference: a heat-stepped potential whose signed parts
/// give the densities.
struct Consecutive {
    heat: ImplicitHeat,
    potential: Field,
    trivial: bool,
}

impl Consecutive {
    fn price(&self) -> boltzprice_core::Result<Option<f64>> {
        if self.trivial {
            return Ok(None);
        }
        extract_price(&self.potential).map(|(p, _)| Some(p))
    }
}

impl Simulation for Consecutive {
    fn step(&mut self) -> boltzprice_core::Result<()> {
        self.heat.solve_in_place(self.potential.values_mut());
        self.price().map(|_| ())
    }

    fn record(&self, t: f64) -> DiagnosticsRecord {
        let (f, g) = consecutive_densities(&self.potential);
        let mut rec = DiagnosticsRecord::new(t, &f, &g, PriceSource::LevelSet);
        rec.price = self.price().ok().flatten();
        rec
    }

    fn snapshot(&self, t: f64) -> Snapshot {
        let (f, g) = consecutive_densities(&self.potential);
        Snapshot {
            t,
            mu: Field::zeros(*f.grid()),
            f,
            g,
        }
    }
}

fn build(run: &ResolvedRun) -> boltzprice_core::Result<(Box<dyn Simulation>, f64, usize)> {
    let p = run.params;
    let grid = run.grid;
    let f0 = run.f_init.clone();
    let g0 = run.g_init.clone();
    let n_steps = boltzprice_core::boltzmann::step_count(p.t_end, p.dt);
    let sim: Box<dyn Simulation> = match run.model {
        ModelKind::Boltzmann => {
            let params = ModelParams {
                k: p.k,
                a: p.a,
                sigma: p.sigma,
                dt: p.dt,
                t_end: p.t_end,
                guard: p.guard,
            };
            Box::new(Boltzmann {
                stepper: BoltzmannStepper::new(&grid, &params)?,
                state: BoltzmannState::new(f0, g0)?,
                params,
                leakage: (0.0, 0.0),
                run: run.clone(),
            })
        }
        ModelKind::Fbp => {
            let diffusion = 0.5 * p.sigma * p.sigma;
            Box::new(Fbp {
                solver: FbpSolver::new(&grid, diffusion, p.dt, run.shift)?,
                state: FbpState::from_densities(&f0, &g0, run.shift)?,
                run: run.clone(),
            })
        }
        ModelKind::Layer => {
            let params = LayerParams {
                a: p.a,
                dt_tau: p.k * p.dt,
                tau_end: p.k * p.t_end,
                epsilon: p.epsilon,
            };
            Box::new(Layer {
                stepper: LayerStepper::new(&grid, &params)?,
                state: LayerState::new(f0, g0, p.epsilon)?,
                leakage: (0.0, 0.0),
                run: run.clone(),
            })
        }
        ModelKind::Limit => {
            let params = LimitParams {
                c: p.c,
                sigma: p.sigma,
                dt: p.dt,
                t_end: p.t_end,
            };
            Box::new(Limit {
                stepper: LimitStepper::new(&grid, &params)?,
                initial_mass: (f0.integrate(), g0.integrate()),
                f: f0,
                g: g0,
                run: run.clone(),
            })
        }
        ModelKind::Consecutive => {
            let diffusion = 0.5 * p.sigma * p.sigma;
            let potential = consecutive_potential(&f0, &g0);
            let sim = Consecutive {
                heat: ImplicitHeat::new(grid.n_nodes(), p.dt * diffusion / (grid.h() * grid.h()))?,
                trivial: potential.max_abs() == 0.0,
                potential,
            };
            sim.price()?;
            Box::new(sim)
        }
    };
    Ok((sim, p.dt, n_steps))
}

fn due(step: usize, strides: &[usize]) -> bool {
    strides.iter().any(|&s| step.is_multiple_of(s))
}

/// Runs one configuration to completion or to its first solver error.
///
/// Series rows are taken at t = 0 and every series stride when a series
/// observer exists, and always at the final step. Field snapshots follow the
/// same rule with the fields strides.
pub fn execute_run(run: &ResolvedRun) -> RunOutcome {
    let mut outcome = RunOutcome {
        label: run.label.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
        failure: None,
    };
    let (mut sim, dt, n_steps) = match build(run) {
        Ok(built) => built,
        Err(e) => {
            outcome.failure = Some(failure(0, e));
            return outcome;
        }
    };
    let observe = |sim: &dyn Simulation, step: usize, outcome: &mut RunOutcome| {
        let t = step as f64 * dt;
        let last = step == n_steps;
        if last || (!run.series_strides.is_empty() && due(step, &run.series_strides)) {
            outcome.records.push(sim.record(t));
        }
        if last || (!run.field_strides.is_empty() && due(step, &run.field_strides)) {
            outcome.snapshots.push(sim.snapshot(t));
        }
    };
    observe(sim.as_ref(), 0, &mut outcome);
    for step in 1..=n_steps {
        if let Err(e) = sim.step() {
            outcome.failure = Some(failure(step, e));
            return outcome;
        }
        observe(sim.as_ref(), step, &mut outcome);
    }
    log::info!("run {} finished after {n_steps} steps", run.label);
    outcome
}

fn failure(step: usize, error: Error) -> RunFailure {
    let (step, message) = match error {
        Error::AtStep { step, source } => (step, source.to_string()),
        other => (step, other.to_string()),
    };
    RunFailure { step, message }
}

/// Thread count from `BOLTZPRICE_THREADS`; unset or invalid means rayon's
/// default.
pub fn thread_cap() -> Option<usize> {
    let raw = std::env::var(THREADS_ENV).ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            log::warn!("ignoring {THREADS_ENV}={raw:?}: expected a positive integer");
            None
        }
    }
}

/// Runs everything concurrently; outcomes come back in the order of `runs`.
pub fn execute_all(runs: &[ResolvedRun]) -> anyhow::Result<Vec<RunOutcome>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    Ok(pool.install(|| runs.par_iter().map(execute_run).collect()))
}
