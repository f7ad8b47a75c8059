//! Fast-time initial layer.
//!
//! On the time scale `tau = k t` the trading terms dominate:
//!
//! ```text
//! alpha_tau = -alpha beta + (alpha beta)(x + a) + eps alpha_xx
//! beta_tau  = -alpha beta + (alpha beta)(x - a) + eps beta_xx
//! ```
//!
//! With `eps = 0` this is a family of decoupled ODE chains, one per residue
//! class of the grid modulo the cost step, and its long-time limit has a
//! closed form in terms of the lattice transform of the initial data.

use crate::boltzmann::{BoltzmannState, BoltzmannStepper, GuardPolicy, ModelParams, StepTally};
use crate::error::{Error, Result};
use crate::fbp::{backward_lattice_sum, forward_lattice_sum, transform_initial};
use crate::grid::{Field, Grid, ShiftSteps, EPS_POS};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub alpha: Field,
    pub beta: Field,
    pub tau: f64,
    /// Diffusion scale, `1/k`; zero for the pure ODE system.
    pub epsilon: f64,
}

impl LayerState {
    pub fn new(f_init: Field, g_init: Field, epsilon: f64) -> Result<LayerState> {
        if !f_init.grid().same_as(g_init.grid()) {
            return Err(Error::IncompatibleDomains(
                "initial densities live on different grids".into(),
            ));
        }
        Ok(LayerState {
            alpha: f_init,
            beta: g_init,
            tau: 0.0,
            epsilon,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.alpha.grid()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerParams {
    pub a: f64,
    /// Fast-time step.
    pub dt_tau: f64,
    pub tau_end: f64,
    pub epsilon: f64,
}

impl LayerParams {
    /// Default fast-time step, `0.5 / max(h_I)`.
    pub fn default_dt_tau(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<f64> {
        let h_max = initial_sum(f_init, g_init, s)?.max();
        Ok(if h_max > 0.0 { 0.5 / h_max } else { 1.0 })
    }
}

/// Explicit Euler in `tau` for the trading terms and, when `epsilon > 0`,
/// backward Euler for the diffusion. This is the Boltzmann stepper with
/// `k = 1` and `D = epsilon`.
#[derive(Debug, Clone)]
pub struct LayerStepper {
    inner: BoltzmannStepper,
    dt_tau: f64,
    scratch: Option<BoltzmannState>,
}

impl LayerStepper {
    pub fn new(grid: &Grid, params: &LayerParams) -> Result<LayerStepper> {
        if !(params.dt_tau > 0.0) || !params.dt_tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "fast-time step must be positive, got {}",
                params.dt_tau
            )));
        }
        if !(params.epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be non-negative, got {}",
                params.epsilon
            )));
        }
        let shift = ShiftSteps::from_cost(params.a, grid)?;
        let unit_rate = ModelParams {
            k: 1.0,
            a: params.a,
            sigma: (2.0 * params.epsilon).sqrt(),
            dt: params.dt_tau,
            t_end: params.tau_end,
            guard: GuardPolicy::Strict,
        };
        Ok(LayerStepper {
            inner: BoltzmannStepper::with_diffusion(grid, &unit_rate, shift, params.epsilon)?,
            dt_tau: params.dt_tau,
            scratch: None,
        })
    }

    /// Advances one fast-time step; the tally carries the mass pushed off the
    /// grid by trades near the edges.
    pub fn step(&mut self, state: &mut LayerState) -> Result<StepTally> {
        let peak = state
            .alpha
            .values()
            .iter()
            .zip(state.beta.values())
            .fold(0.0_f64, |m, (a, b)| m.max(a + b));
        let guard = self.dt_tau * peak;
        if guard > 1.0 + 1e-12 {
            return Err(Error::FastTimeStepTooLarge { value: guard });
        }
        // Move the fields into a Boltzmann state and back without copying.
        let mut tmp = self.scratch.take().unwrap_or_else(|| BoltzmannState {
            f: Field::zeros(*state.grid()),
            g: Field::zeros(*state.grid()),
            t: 0.0,
        });
        std::mem::swap(&mut tmp.f, &mut state.alpha);
        std::mem::swap(&mut tmp.g, &mut state.beta);
        let result = self.inner.step(&mut tmp);
        std::mem::swap(&mut tmp.f, &mut state.alpha);
        std::mem::swap(&mut tmp.g, &mut state.beta);
        self.scratch = Some(tmp);
        let tally = result?;
        state.tau += self.dt_tau;
        Ok(tally)
    }
}

pub fn step_layer(state: &LayerState, params: &LayerParams) -> Result<LayerState> {
    let mut stepper = LayerStepper::new(state.grid(), params)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// `alpha + beta(x + a)`; for `epsilon = 0` this stays equal to `h_I`.
pub fn layer_conserved_sum(state: &LayerState, s: ShiftSteps) -> Result<Field> {
    let shifted = state.beta.shift(s, crate::grid::Direction::Plus, 0.0)?;
    Ok(state.alpha.zip_map(&shifted, |a, b| a + b))
}

/// Lattice sums `A(x) = Σ alpha(x + a l)` and `B(x) = Σ beta(x - a l)`;
/// both are non-increasing in `tau` for the ODE system.
pub fn lattice_sums(state: &LayerState, s: ShiftSteps) -> (Field, Field) {
    (
        forward_lattice_sum(&state.alpha, s),
        backward_lattice_sum(&state.beta, s),
    )
}

/// `h_I = f_I + g_I(x + a)`.
pub fn initial_sum(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<Field> {
    let shifted = g_init.shift(s, crate::grid::Direction::Plus, 0.0)?;
    Ok(f_init.zip_map(&shifted, |a, b| a + b))
}

/// Where the lattice of `h_I` breaks the "once zero, stays zero" rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeViolation {
    pub positive_at: f64,
    pub vanishes_at: f64,
    pub reappears_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerHypothesis {
    /// Walking down the lattice from a point where `h_I > 0`, a zero is
    /// never followed by a positive value.
    pub condition_i: bool,
    /// The same walking up the lattice.
    pub condition_ii: bool,
    pub h_init: Field,
    pub violation: Option<LatticeViolation>,
}

impl LayerHypothesis {
    pub fn satisfied(&self) -> bool {
        self.condition_i && self.condition_ii
    }
}

/// Checks the support conditions under which the closed-form limit holds.
/// Nodes count as positive when `h_I > 1e-8 * max(h_I)`.
pub fn check_hypothesis(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<LayerHypothesis> {
    let h_init = initial_sum(f_init, g_init, s)?;
    let cut = h_init.support_threshold();
    let grid = *h_init.grid();
    let positive: Vec<bool> = h_init.values().iter().map(|&v| v > cut).collect();
    let n = positive.len();
    let step = s.steps().max(1);

    let mut down = None;
    let mut up = None;
    for residue in 0..step.min(n) {
        let class: Vec<usize> = (residue..n).step_by(step).collect();
        if down.is_none() {
            down = first_gap(&class, &positive, true).map(|(p, z, r)| LatticeViolation {
                positive_at: grid.x(p),
                vanishes_at: grid.x(z),
                reappears_at: grid.x(r),
            });
        }
        if up.is_none() {
            up = first_gap(&class, &positive, false).map(|(p, z, r)| LatticeViolation {
                positive_at: grid.x(p),
                vanishes_at: grid.x(z),
                reappears_at: grid.x(r),
            });
        }
    }
    Ok(LayerHypothesis {
        condition_i: down.is_none(),
        condition_ii: up.is_none(),
        violation: down.or(up),
        h_init,
    })
}

// Finds positive -> zero -> positive along `class`, walking downward (from
// the top of the class) or upward. Returns node indices of the witnesses.
fn first_gap(class: &[usize], positive: &[bool], downward: bool) -> Option<(usize, usize, usize)> {
    let order: Vec<usize> = if downward {
        class.iter().rev().copied().collect()
    } else {
        class.to_vec()
    };
    let mut seen_positive: Option<usize> = None;
    let mut gap: Option<usize> = None;
    for &j in &order {
        match (positive[j], seen_positive, gap) {
            (true, Some(p), Some(z)) => return Some((p, z, j)),
            (true, _, _) => {
                seen_positive = Some(j);
                gap = None;
            }
            (false, Some(_), None) => gap = Some(j),
            _ => {}
        }
    }
    None
}

/// Long-time limit of the ODE system:
/// `alpha = Φ⁺ - Φ⁺(x + a)`, `beta = Φ⁻ - Φ⁻(x - a)` with `Φ` the lattice
/// transform of the initial data.
pub fn closed_form_limit(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<(Field, Field)> {
    let hyp = check_hypothesis(f_init, g_init, s)?;
    if let Some(v) = hyp.violation {
        return Err(Error::LayerHypothesisViolated {
            positive_at: v.positive_at,
            vanishes_at: v.vanishes_at,
            reappears_at: v.reappears_at,
        });
    }
    if s.steps() == 0 {
        // Without a cost the ODE annihilates the overlap pointwise.
        let alpha = f_init.zip_map(g_init, |f, g| (f - g).max(0.0));
        let beta = f_init.zip_map(g_init, |f, g| (g - f).max(0.0));
        return Ok((alpha, beta));
    }
    let phi = transform_initial(f_init, g_init, s)?;
    let plus = phi.positive_part();
    let minus = phi.negative_part();
    let plus_ahead = plus.shift(s, crate::grid::Direction::Plus, 0.0)?;
    let minus_behind = minus.shift(s, crate::grid::Direction::Minus, 0.0)?;
    let mut alpha = plus.zip_map(&plus_ahead, |a, b| a - b);
    let mut beta = minus.zip_map(&minus_behind, |a, b| a - b);
    // Differences of equal lattice sums can leave round-off negatives.
    for v in alpha.values_mut().iter_mut().chain(beta.values_mut()) {
        if *v < 0.0 && *v > -EPS_POS {
            *v = 0.0;
        }
    }
    Ok((alpha, beta))
}
