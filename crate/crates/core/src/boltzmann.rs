//! Semi-implicit stepping of the kinetic buyer/vendor system
//!
//! ```text
//! f_t = D f_xx - k f g + k (f g)(x + a)
//! g_t = D g_xx - k f g + k (f g)(x - a)
//! ```
//!
//! with homogeneous Neumann boundaries. Collisions use the old state,
//! diffusion is backward Euler.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    price_estimate_boltzmann, DiagnosticsRecord, Estimator, PriceSeries, PriceSource,
};
use crate::error::{Error, Result};
use crate::grid::{clamp_density, Field, Grid, ShiftSteps};
use crate::tridiag::ImplicitHeat;

/// `sigma` giving unit diffusion `D = sigma^2 / 2 = 1`.
pub const UNIT_DIFFUSION_SIGMA: f64 = std::f64::consts::SQRT_2;

/// What to do when `dt * k * max(max f, max g)` exceeds one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuardPolicy {
    /// Refuse the step.
    #[default]
    Strict,
    /// Take the step and count the violation. Positivity is still enforced
    /// after the step.
    Monitor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Transaction rate.
    pub k: f64,
    /// Transaction cost.
    pub a: f64,
    pub sigma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub guard: GuardPolicy,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k: 0.0,
            a: 0.0,
            sigma: UNIT_DIFFUSION_SIGMA,
            dt: 1e-3,
            t_end: 0.0,
            guard: GuardPolicy::Strict,
        }
    }
}

impl ModelParams {
    pub fn diffusion(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return bad(format!("k must be non-negative, got {}", self.k));
        }
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return bad(format!("a must be non-negative, got {}", self.a));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        step_count(self.t_end, self.dt)
    }
}

/// Number of steps of size `dt` needed to reach `t_end`; a ratio within
/// round-off of an integer is rounded, otherwise the last step overshoots.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoltzmannState {
    /// Buyers.
    pub f: Field,
    /// Vendors.
    pub g: Field,
    pub t: f64,
}

impl BoltzmannState {
    pub fn new(f: Field, g: Field) -> Result<BoltzmannState> {
        if !f.grid().same_as(g.grid()) {
            return Err(Error::IncompatibleDomains(
                "buyer and vendor densities live on different grids".into(),
            ));
        }
        Ok(BoltzmannState { f, g, t: 0.0 })
    }

    pub fn grid(&self) -> &Grid {
        self.f.grid()
    }
}

/// Mass lost through the boundary fill during one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTally {
    pub leakage_f: f64,
    pub leakage_g: f64,
    /// `dt * k * max(max f, max g)` before the step.
    pub guard_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuardReport {
    pub max_value: f64,
    pub violations: usize,
}

/// Reusable stepper holding the factored heat matrix and scratch space.
#[derive(Debug, Clone)]
pub struct BoltzmannStepper {
    params: ModelParams,
    shift: ShiftSteps,
    heat: ImplicitHeat,
    product: Vec<f64>,
    guard: GuardReport,
}

impl BoltzmannStepper {
    pub fn new(grid: &Grid, params: &ModelParams) -> Result<BoltzmannStepper> {
        params.validate()?;
        let shift = ShiftSteps::from_cost(params.a, grid)?;
        BoltzmannStepper::with_diffusion(grid, params, shift, params.diffusion())
    }

    /// Like [`BoltzmannStepper::new`] but with an explicit diffusion
    /// coefficient, which may be zero (pure collision ODE).
    pub(crate) fn with_diffusion(
        grid: &Grid,
        params: &ModelParams,
        shift: ShiftSteps,
        diffusion: f64,
    ) -> Result<BoltzmannStepper> {
        let ratio = params.dt * diffusion / (grid.h() * grid.h());
        Ok(BoltzmannStepper {
            params: *params,
            shift,
            heat: ImplicitHeat::new(grid.n_nodes(), ratio)?,
            product: vec![0.0; grid.n_nodes()],
            guard: GuardReport::default(),
        })
    }

    pub fn shift(&self) -> ShiftSteps {
        self.shift
    }

    pub fn guard_report(&self) -> GuardReport {
        self.guard
    }

    /// Advances `state` by one time step in place.
    pub fn step(&mut self, state: &mut BoltzmannState) -> Result<StepTally> {
        let p = self.params;
        let n = state.f.len();
        if self.product.len() != n || state.g.len() != n {
            return Err(Error::LengthMismatch {
                expected: self.product.len(),
                found: n,
            });
        }
        let bound = state.f.max().max(state.g.max());
        let guard_value = p.dt * p.k * bound;
        self.guard.max_value = self.guard.max_value.max(guard_value);
        if guard_value > 1.0 + 1e-12 {
            match p.guard {
                GuardPolicy::Strict => {
                    return Err(Error::CollisionStepTooLarge { value: guard_value })
                }
                GuardPolicy::Monitor => {
                    if self.guard.violations == 0 {
                        log::warn!(
                            "collision guard exceeded (dt*k*B = {guard_value:.3}); continuing in monitor mode"
                        );
                    }
                    self.guard.violations += 1;
                }
            }
        }

        for (prod, (fv, gv)) in self
            .product
            .iter_mut()
            .zip(state.f.values().iter().zip(state.g.values()))
        {
            *prod = fv * gv;
        }

        let s = self.shift.steps();
        let rate = p.dt * p.k;
        for (j, f) in state.f.values_mut().iter_mut().enumerate() {
            let gain = if j + s < n { self.product[j + s] } else { 0.0 };
            *f += rate * (gain - self.product[j]);
        }
        for (j, g) in state.g.values_mut().iter_mut().enumerate() {
            let gain = if j >= s { self.product[j - s] } else { 0.0 };
            *g += rate * (gain - self.product[j]);
        }
        let h = state.grid().h();
        let (leak_f, leak_g) = leaked_products(&self.product, s);

        self.heat.solve_in_place(state.f.values_mut());
        self.heat.solve_in_place(state.g.values_mut());
        clamp_density(state.f.values_mut())?;
        clamp_density(state.g.values_mut())?;
        state.t += p.dt;

        Ok(StepTally {
            leakage_f: rate * h * leak_f,
            leakage_g: rate * h * leak_g,
            guard_value,
        })
    }
}

/// Trapezoid-weighted products that the collision removes from the total
/// mass of `f` and of `g`.
///
/// Summing the collision update over the grid, gain and loss cancel except
/// for coefficient `w_m - w_{m-s}` (buyers) or `w_m - w_{m+s}` (vendors) on
/// `P_m`, where `w` are the trapezoid weights and out-of-range weights are
/// zero. Only nodes within `s` of an edge, plus the node `s` away from it,
/// carry a non-zero coefficient, so interior data leak exactly nothing.
fn leaked_products(product: &[f64], s: usize) -> (f64, f64) {
    let n = product.len();
    let last = n - 1;
    let weight = |j: usize| if j == 0 || j == last { 0.5 } else { 1.0 };
    let mut leak_f = 0.0;
    let mut leak_g = 0.0;
    for (m, &pm) in product.iter().enumerate() {
        let cf = weight(m) - if m >= s { weight(m - s) } else { 0.0 };
        if cf != 0.0 {
            leak_f += cf * pm;
        }
        let cg = weight(m) - if m + s < n { weight(m + s) } else { 0.0 };
        if cg != 0.0 {
            leak_g += cg * pm;
        }
    }
    (leak_f, leak_g)
}

/// One step from `state`. Builds a fresh stepper; loops should hold a
/// [`BoltzmannStepper`] instead.
pub fn step_boltzmann(state: &BoltzmannState, params: &ModelParams) -> Result<BoltzmannState> {
    let mut stepper = BoltzmannStepper::new(state.grid(), params)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// `mu = k f g`, the transaction volume density.
pub fn transaction_volume(state: &BoltzmannState, params: &ModelParams) -> Field {
    let k = params.k;
    state.f.zip_map(&state.g, |f, g| k * f * g)
}

/// Diagnostics of a Boltzmann state with the given cumulative leakage.
pub fn boltzmann_record(
    state: &BoltzmannState,
    params: &ModelParams,
    leakage: (f64, f64),
    estimator: Estimator,
) -> DiagnosticsRecord {
    let mut rec =
        DiagnosticsRecord::new(state.t, &state.f, &state.g, PriceSource::Density(estimator));
    rec.total_volume = transaction_volume(state, params).integrate();
    rec.leakage_f = leakage.0;
    rec.leakage_g = leakage.1;
    rec.price = price_estimate_boltzmann(&state.f, &state.g, estimator).ok();
    rec
}

pub type Callback<'a> = Box<dyn FnMut(&BoltzmannState, &DiagnosticsRecord) + 'a>;

/// Observation schedule for [`run_boltzmann`].
pub struct Observers<'a> {
    /// Observe every `stride` steps; zero observes only the final step.
    pub stride: usize,
    pub estimator: Estimator,
    callbacks: Vec<Callback<'a>>,
}

impl<'a> Observers<'a> {
    pub fn new(stride: usize, estimator: Estimator) -> Observers<'a> {
        Observers {
            stride,
            estimator,
            callbacks: Vec::new(),
        }
    }

    pub fn with(mut self, callback: impl FnMut(&BoltzmannState, &DiagnosticsRecord) + 'a) -> Self {
        self.callbacks.push(Box::new(callback));
        self
    }

    pub(crate) fn due(&self, step: usize, last: usize) -> bool {
        step == last || (self.stride > 0 && step.is_multiple_of(self.stride))
    }
}

impl std::fmt::Debug for Observers<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observers")
            .field("stride", &self.stride)
            .field("estimator", &self.estimator)
            .field("callbacks", &self.callbacks.len())
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct BoltzmannRun {
    pub state: BoltzmannState,
    pub series: PriceSeries,
    pub records: Vec<DiagnosticsRecord>,
    /// Cumulative (f, g) leakage over the whole run.
    pub leakage: (f64, f64),
    pub guard: GuardReport,
}

/// Steps `initial` to `params.t_end`, recording diagnostics at the observer
/// stride. Step errors carry the index of the failing step.
pub fn run_boltzmann(
    initial: BoltzmannState,
    params: &ModelParams,
    observers: &mut Observers<'_>,
) -> Result<BoltzmannRun> {
    let mut stepper = BoltzmannStepper::new(initial.grid(), params)?;
    let mut state = initial;
    let t0 = state.t;
    let n_steps = params.n_steps();
    let mut series = PriceSeries::new(PriceSource::Density(observers.estimator));
    let mut records = Vec::new();
    let mut leakage = (0.0, 0.0);

    for step in 1..=n_steps {
        let tally = stepper.step(&mut state).map_err(|e| e.at_step(step))?;
        // Recompute from the step index so long runs do not accumulate drift.
        state.t = t0 + step as f64 * params.dt;
        leakage.0 += tally.leakage_f;
        leakage.1 += tally.leakage_g;
        if observers.due(step, n_steps) {
            let rec = boltzmann_record(&state, params, leakage, observers.estimator);
            series.push(rec.t, rec.price);
            for cb in observers.callbacks.iter_mut() {
                cb(&state, &rec);
            }
            records.push(rec);
        }
    }

    Ok(BoltzmannRun {
        state,
        series,
        records,
        leakage,
        guard: stepper.guard_report(),
    })
}
