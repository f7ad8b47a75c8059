//! Simultaneous limit `k -> inf`, `a -> 0` with `k a = c`:
//!
//! ```text
//! f_t =  c (f g)_x + D f_xx
//! g_t = -c (f g)_x + D g_xx
//! ```
//!
//! and the reference obtained by taking the two limits one after the other,
//! where `F0_t = D F0_xx` with `F0(x, 0) = ∫_x f_I - ∫^x g_I`.

use crate::boltzmann::{step_count, UNIT_DIFFUSION_SIGMA};
use crate::diagnostics::{
    price_estimate_boltzmann, DiagnosticsRecord, Estimator, PriceSeries, PriceSource,
};
use crate::error::{Error, Result};
use crate::fbp::extract_price;
use crate::grid::{clamp_density, Field, Grid};
use crate::tridiag::ImplicitHeat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitParams {
    /// Drift strength `k a`.
    pub c: f64,
    pub sigma: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl Default for LimitParams {
    fn default() -> Self {
        LimitParams {
            c: 0.0,
            sigma: UNIT_DIFFUSION_SIGMA,
            dt: 1e-3,
            t_end: 0.0,
        }
    }
}

impl LimitParams {
    pub fn diffusion(&self) -> f64 {
        0.5 * self.sigma * self.sigma
    }

    pub fn n_steps(&self) -> usize {
        step_count(self.t_end, self.dt)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "c must be non-negative, got {}",
                self.c
            )));
        }
        if !(self.sigma > 0.0) || !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need sigma > 0, dt > 0, t_end >= 0; got sigma = {}, dt = {}, t_end = {}",
                self.sigma, self.dt, self.t_end
            )));
        }
        Ok(())
    }
}

/// Explicit central-difference drift plus implicit Neumann diffusion.
#[derive(Debug, Clone)]
pub struct LimitStepper {
    params: LimitParams,
    heat: ImplicitHeat,
    h: f64,
    drift: Vec<f64>,
    peclet_warned: bool,
}

impl LimitStepper {
    pub fn new(grid: &Grid, params: &LimitParams) -> Result<LimitStepper> {
        params.validate()?;
        let ratio = params.dt * params.diffusion() / (grid.h() * grid.h());
        Ok(LimitStepper {
            params: *params,
            heat: ImplicitHeat::new(grid.n_nodes(), ratio)?,
            h: grid.h(),
            drift: vec![0.0; grid.n_nodes()],
            peclet_warned: false,
        })
    }

    pub fn step(&mut self, f: &mut Field, g: &mut Field) -> Result<()> {
        let p = self.params;
        let n = f.len();
        let fv = f.values();
        let gv = g.values();
        // The reflected ghost node makes the boundary derivative vanish.
        self.drift[0] = 0.0;
        self.drift[n - 1] = 0.0;
        let mut steepest: f64 = 0.0;
        for j in 1..n - 1 {
            let d = (fv[j + 1] * gv[j + 1] - fv[j - 1] * gv[j - 1]) / (2.0 * self.h);
            steepest = steepest.max(d.abs());
            self.drift[j] = d;
        }
        let scale = f.max().max(g.max());
        let value = p.dt * p.c * steepest;
        if value > scale {
            return Err(Error::DriftStepTooLarge {
                value,
                bound: scale,
            });
        }
        let peclet = p.c * scale * self.h / (2.0 * p.diffusion());
        if peclet > 1.0 && !self.peclet_warned {
            log::warn!("cell Peclet number {peclet:.2} exceeds 1; central drift may oscillate");
            self.peclet_warned = true;
        }

        let rate = p.dt * p.c;
        for (x, d) in f.values_mut().iter_mut().zip(&self.drift) {
            *x += rate * d;
        }
        for (x, d) in g.values_mut().iter_mut().zip(&self.drift) {
            *x -= rate * d;
        }
        self.heat.solve_in_place(f.values_mut());
        self.heat.solve_in_place(g.values_mut());
        clamp_density(f.values_mut())?;
        clamp_density(g.values_mut())?;
        Ok(())
    }
}

pub fn step_limit(f: &Field, g: &Field, params: &LimitParams) -> Result<(Field, Field)> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::IncompatibleDomains(
            "f and g live on different grids".into(),
        ));
    }
    let mut stepper = LimitStepper::new(f.grid(), params)?;
    let (mut f, mut g) = (f.clone(), g.clone());
    stepper.step(&mut f, &mut g)?;
    Ok((f, g))
}

#[derive(Debug, Clone)]
pub struct LimitRun {
    pub f: Field,
    pub g: Field,
    pub t: f64,
    pub series: PriceSeries,
    pub records: Vec<DiagnosticsRecord>,
}

/// Runs the limit system to `t_end`, recording at `stride` (zero: final step
/// only). Prices come from `estimator` applied to `f g`.
pub fn run_limit(
    f_init: &Field,
    g_init: &Field,
    params: &LimitParams,
    stride: usize,
    estimator: Estimator,
) -> Result<LimitRun> {
    let mut stepper = LimitStepper::new(f_init.grid(), params)?;
    let (mut f, mut g) = (f_init.clone(), g_init.clone());
    let n_steps = params.n_steps();
    let mut series = PriceSeries::new(PriceSource::Density(estimator));
    let mut records = Vec::new();
    for step in 1..=n_steps {
        stepper.step(&mut f, &mut g).map_err(|e| e.at_step(step))?;
        if step == n_steps || (stride > 0 && step.is_multiple_of(stride)) {
            let t = step as f64 * params.dt;
            let mut rec = DiagnosticsRecord::new(t, &f, &g, PriceSource::Density(estimator));
            rec.price = price_estimate_boltzmann(&f, &g, estimator).ok();
            series.push(t, rec.price);
            records.push(rec);
        }
    }
    Ok(LimitRun {
        f,
        g,
        t: n_steps as f64 * params.dt,
        series,
        records,
    })
}

/// `F0(x, 0) = ∫_x^{x_max} f_I - ∫_{x_min}^x g_I` by cumulative trapezoid.
pub fn consecutive_potential(f_init: &Field, g_init: &Field) -> Field {
    let grid = *f_init.grid();
    let h = grid.h();
    let n = f_init.len();
    let fv = f_init.values();
    let gv = g_init.values();
    let mut tail_f = vec![0.0; n];
    for j in (0..n - 1).rev() {
        tail_f[j] = tail_f[j + 1] + 0.5 * h * (fv[j] + fv[j + 1]);
    }
    let mut head_g = vec![0.0; n];
    for j in 1..n {
        head_g[j] = head_g[j - 1] + 0.5 * h * (gv[j - 1] + gv[j]);
    }
    Field::new(
        grid,
        tail_f.iter().zip(&head_g).map(|(a, b)| a - b).collect(),
    )
    .expect("length preserved")
}

/// `(-d/dx F⁺, d/dx F⁻)` by central differences, one-sided at the edges.
pub fn consecutive_densities(potential: &Field) -> (Field, Field) {
    let plus = potential.positive_part();
    let minus = potential.negative_part();
    (derivative(&plus).map(|d| -d), derivative(&minus))
}

fn derivative(u: &Field) -> Field {
    let h = u.grid().h();
    let v = u.values();
    let n = v.len();
    let mut out = vec![0.0; n];
    out[0] = (v[1] - v[0]) / h;
    out[n - 1] = (v[n - 1] - v[n - 2]) / h;
    for j in 1..n - 1 {
        out[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
    }
    Field::new(*u.grid(), out).expect("length preserved")
}

#[derive(Debug, Clone)]
pub struct ConsecutiveLimit {
    pub f: Field,
    pub g: Field,
    /// Evolved potential `F0(., t_end)`.
    pub potential: Field,
    /// Roots of the potential over time.
    pub series: PriceSeries,
}

/// Consecutive-limit reference: evolve `F0` by the heat equation and
/// differentiate its positive and negative parts.
///
/// Identically zero data give zero densities with undefined (NaN) prices; a
/// non-zero potential without a sign change is an error.
pub fn consecutive_limit_reference(
    f_init: &Field,
    g_init: &Field,
    params: &LimitParams,
    stride: usize,
) -> Result<ConsecutiveLimit> {
    if !f_init.grid().same_as(g_init.grid()) {
        return Err(Error::IncompatibleDomains(
            "f and g live on different grids".into(),
        ));
    }
    params.validate()?;
    let grid = *f_init.grid();
    let mut potential = consecutive_potential(f_init, g_init);
    let trivial = potential.max_abs() == 0.0;
    let root = |v: &Field| -> Result<Option<f64>> {
        if trivial {
            Ok(None)
        } else {
            extract_price(v).map(|(p, _)| Some(p))
        }
    };
    root(&potential)?;

    let ratio = params.dt * params.diffusion() / (grid.h() * grid.h());
    let heat = ImplicitHeat::new(grid.n_nodes(), ratio)?;
    let n_steps = params.n_steps();
    let mut series = PriceSeries::new(PriceSource::LevelSet);
    for step in 1..=n_steps {
        heat.solve_in_place(potential.values_mut());
        if step == n_steps || (stride > 0 && step.is_multiple_of(stride)) {
            let p = root(&potential).map_err(|e| e.at_step(step))?;
            series.push(step as f64 * params.dt, p);
        }
    }
    let (f, g) = consecutive_densities(&potential);
    Ok(ConsecutiveLimit {
        f,
        g,
        potential,
        series,
    })
}
