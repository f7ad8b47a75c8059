//! Free-boundary price model solved through its lattice transform.
//!
//! With `F(x) = Σ_l f(x + a l)` and `G(x) = Σ_l g(x - a l)`, the difference
//! `V = F - G` solves a plain heat equation whose boundary conditions tie the
//! slope at each edge to the slope one cost-step inside. The densities come
//! back through `v = V - V⁺(x + a) + V⁻(x - a)`, `f = v⁺`, `g = v⁻`, and the
//! price is the zero of `V`.

use crate::boltzmann::ModelParams;
use crate::diagnostics::{DiagnosticsRecord, PriceSeries, PriceSource};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, ShiftSteps};
use crate::tridiag::ThomasFactor;

/// Builds `Φ_I = Σ_l f_I(x + a l) - Σ_l g_I(x - a l)`, truncated where the
/// lattice leaves the grid.
pub fn transform_initial(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<Field> {
    if s.steps() == 0 {
        return Err(Error::ZeroTransactionCost);
    }
    if !f_init.grid().same_as(g_init.grid()) {
        return Err(Error::IncompatibleDomains(
            "initial densities live on different grids".into(),
        ));
    }
    let n = f_init.len();
    let s = s.steps();
    if s >= n {
        return Err(Error::ShiftExceedsDomain {
            steps: s,
            n_cells: n - 1,
        });
    }
    let upper = forward_lattice_sum(f_init, ShiftSteps::new(s));
    let lower = backward_lattice_sum(g_init, ShiftSteps::new(s));
    Ok(upper.zip_map(&lower, |a, b| a - b))
}

/// `Σ_{l ≥ 0} u(x + a l)` over the lattice points inside the grid.
pub fn forward_lattice_sum(u: &Field, s: ShiftSteps) -> Field {
    let s = s.steps();
    let mut out = u.clone();
    let v = out.values_mut();
    if s > 0 && s < v.len() {
        for j in (0..v.len() - s).rev() {
            v[j] += v[j + s];
        }
    }
    out
}

/// `Σ_{l ≥ 0} u(x - a l)` over the lattice points inside the grid.
pub fn backward_lattice_sum(u: &Field, s: ShiftSteps) -> Field {
    let s = s.steps();
    let mut out = u.clone();
    let v = out.values_mut();
    if s > 0 {
        for j in s..v.len() {
            v[j] += v[j - s];
        }
    }
    out
}

/// Recovers `(f, g)` from the transformed variable.
pub fn reconstruct_densities(v: &Field, s: ShiftSteps) -> (Field, Field) {
    let n = v.len();
    let s = s.steps();
    let vals = v.values();
    let mut diff = vals.to_vec();
    for j in 0..n {
        if j + s < n {
            diff[j] -= vals[j + s].max(0.0);
        }
        if j >= s {
            diff[j] += (-vals[j - s]).max(0.0);
        }
    }
    let diff = Field::new(*v.grid(), diff).expect("length preserved");
    (diff.positive_part(), diff.negative_part())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    /// `V` goes from positive to negative, the regular price orientation.
    Falling,
    Rising,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub price: f64,
    /// `-dV/dx` at the crossing.
    pub lambda: f64,
    pub kind: CrossingKind,
}

/// Every sign change of `V`, left to right.
///
/// Inside a cell the root is linearly interpolated and the slope is the
/// cell difference. A root on a node uses the central difference there; a run
/// of exact zeros between opposite signs reports its midpoint.
pub fn find_crossings(v: &Field) -> Vec<Crossing> {
    let grid = v.grid();
    let h = grid.h();
    let vals = v.values();
    let n = vals.len();
    let mut out = Vec::new();
    let mut j = 0;
    while j + 1 < n {
        let (a, b) = (vals[j], vals[j + 1]);
        if a != 0.0 && b != 0.0 {
            if (a > 0.0) != (b > 0.0) {
                let slope = (b - a) / h;
                out.push(Crossing {
                    price: grid.x(j) + h * a / (a - b),
                    lambda: -slope,
                    kind: kind_of(a),
                });
            }
            j += 1;
            continue;
        }
        if a == 0.0 {
            // Leading zeros have no left neighbour and cannot be a crossing.
            j += 1;
            continue;
        }
        // a != 0, b == 0: scan the run of zeros starting at j + 1.
        let start = j + 1;
        let mut end = start;
        while end + 1 < n && vals[end + 1] == 0.0 {
            end += 1;
        }
        if end + 1 < n && (vals[end + 1] > 0.0) != (a > 0.0) {
            let after = vals[end + 1];
            let slope = (after - a) / (grid.x(end + 1) - grid.x(j));
            out.push(Crossing {
                price: 0.5 * (grid.x(start) + grid.x(end)),
                lambda: -slope,
                kind: kind_of(a),
            });
        }
        j = end;
    }
    out
}

fn kind_of(left_value: f64) -> CrossingKind {
    if left_value > 0.0 {
        CrossingKind::Falling
    } else {
        CrossingKind::Rising
    }
}

/// The price and flux of `V`: the leftmost falling crossing, or the leftmost
/// crossing of any kind if none falls. Multiple crossings are logged.
pub fn extract_price(v: &Field) -> Result<(f64, f64)> {
    let crossings = find_crossings(v);
    let chosen = crossings
        .iter()
        .find(|c| c.kind == CrossingKind::Falling)
        .or_else(|| crossings.first())
        .ok_or(Error::PriceUndefined)?;
    if crossings.len() > 1 {
        log::warn!(
            "V has {} sign changes; using the one at {:.6}",
            crossings.len(),
            chosen.price
        );
    }
    Ok((chosen.price, chosen.lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPreparedness {
    /// Rightmost node in the numerical support of `f`; `-inf` if empty.
    pub sup_support_f: f64,
    /// Leftmost node in the numerical support of `g`; `+inf` if empty.
    pub inf_support_g: f64,
    pub satisfied: bool,
}

/// Checks that all buyers sit to the left of all vendors.
pub fn well_preparedness(f: &Field, g: &Field) -> WellPreparedness {
    let f_cut = f.support_threshold();
    let g_cut = g.support_threshold();
    let sup_support_f = f
        .values()
        .iter()
        .rposition(|&x| x > f_cut)
        .map_or(f64::NEG_INFINITY, |j| f.grid().x(j));
    let inf_support_g = g
        .values()
        .iter()
        .position(|&x| x > g_cut)
        .map_or(f64::INFINITY, |j| g.grid().x(j));
    WellPreparedness {
        sup_support_f,
        inf_support_g,
        satisfied: sup_support_f <= inf_support_g,
    }
}

/// One-sided fluxes `-f'(p)` and `g'(p)` at the node nearest the price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility {
    pub buyer_flux: f64,
    pub vendor_flux: f64,
}

impl Compatibility {
    pub fn mismatch(&self) -> f64 {
        (self.buyer_flux - self.vendor_flux).abs()
    }
}

pub fn compatibility(f: &Field, g: &Field, price: f64) -> Compatibility {
    let grid = f.grid();
    let h = grid.h();
    let j = grid.nearest_node(price).clamp(1, grid.n_cells() - 1);
    Compatibility {
        buyer_flux: -(f.values()[j] - f.values()[j - 1]) / h,
        vendor_flux: (g.values()[j + 1] - g.values()[j]) / h,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbpState {
    pub v: Field,
    pub t: f64,
    pub price: f64,
    pub lambda: f64,
}

impl FbpState {
    pub fn new(v: Field, t: f64) -> Result<FbpState> {
        let (price, lambda) = extract_price(&v)?;
        Ok(FbpState {
            v,
            t,
            price,
            lambda,
        })
    }

    /// Transforms the initial densities and reads off the initial price.
    /// Data violating the compatibility condition run anyway; the mismatch
    /// is logged.
    pub fn from_densities(f_init: &Field, g_init: &Field, s: ShiftSteps) -> Result<FbpState> {
        let prep = well_preparedness(f_init, g_init);
        if !prep.satisfied {
            log::warn!(
                "initial data are not well prepared: sup supp f = {} > inf supp g = {}",
                prep.sup_support_f,
                prep.inf_support_g
            );
        }
        let state = FbpState::new(transform_initial(f_init, g_init, s)?, 0.0)?;
        let compat = compatibility(f_init, g_init, state.price);
        let scale = compat
            .buyer_flux
            .abs()
            .max(compat.vendor_flux.abs())
            .max(1.0);
        if compat.mismatch() > 1e-6 * scale {
            log::warn!(
                "initial fluxes disagree at p = {:.6}: -f' = {:.6}, g' = {:.6}",
                state.price,
                compat.buyer_flux,
                compat.vendor_flux
            );
        }
        Ok(state)
    }
}

/// Backward-Euler heat step with the shifted-slope boundary rows
///
/// ```text
/// (-3V_0 + 4V_1 - V_2) - (-3V_s + 4V_{s+1} - V_{s+2}) = 0
/// (3V_N - 4V_{N-1} + V_{N-2}) - (3V_{N-s} - 4V_{N-s-1} + V_{N-s-2}) = 0
/// ```
///
/// The two boundary rows are rank-one updates of a tridiagonal matrix with
/// identity boundary rows, so each step is one tridiagonal solve plus a 2x2
/// correction (Woodbury).
#[derive(Debug, Clone)]
pub struct FbpSolver {
    factor: ThomasFactor,
    shift: usize,
    n: usize,
    // T^{-1} e_0 and T^{-1} e_N.
    z_left: Vec<f64>,
    z_right: Vec<f64>,
    // Inverse of the 2x2 capacitance matrix I + W^T Z.
    cap_inv: [[f64; 2]; 2],
    dt: f64,
}

impl FbpSolver {
    pub fn new(grid: &Grid, diffusion: f64, dt: f64, s: ShiftSteps) -> Result<FbpSolver> {
        if s.steps() == 0 {
            return Err(Error::ZeroTransactionCost);
        }
        if !(dt > 0.0) || !(diffusion > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need dt > 0 and D > 0, got dt = {dt}, D = {diffusion}"
            )));
        }
        let n = grid.n_nodes();
        let shift = s.steps();
        if shift + 2 > n - 1 {
            return Err(Error::ShiftExceedsDomain {
                steps: shift,
                n_cells: grid.n_cells(),
            });
        }
        let r = dt * diffusion / (grid.h() * grid.h());
        let mut diag = vec![1.0 + 2.0 * r; n];
        let mut lower = vec![-r; n - 1];
        let mut upper = vec![-r; n - 1];
        diag[0] = 1.0;
        upper[0] = 0.0;
        diag[n - 1] = 1.0;
        lower[n - 2] = 0.0;
        let factor = ThomasFactor::new(&lower, &diag, &upper)?;

        let mut z_left = vec![0.0; n];
        z_left[0] = 1.0;
        factor.solve_in_place(&mut z_left);
        let mut z_right = vec![0.0; n];
        z_right[n - 1] = 1.0;
        factor.solve_in_place(&mut z_right);

        let mut solver = FbpSolver {
            factor,
            shift,
            n,
            z_left,
            z_right,
            cap_inv: [[0.0; 2]; 2],
            dt,
        };
        let c00 = 1.0 + solver.left_row(&solver.z_left);
        let c01 = solver.left_row(&solver.z_right);
        let c10 = solver.right_row(&solver.z_left);
        let c11 = 1.0 + solver.right_row(&solver.z_right);
        let det = c00 * c11 - c01 * c10;
        let scale = c00.abs().max(c01.abs()).max(c10.abs()).max(c11.abs());
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
            return Err(Error::SingularSystem { row: 0 });
        }
        solver.cap_inv = [[c11 / det, -c01 / det], [-c10 / det, c00 / det]];
        Ok(solver)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    // Boundary row minus its identity part, applied to y.
    fn left_row(&self, y: &[f64]) -> f64 {
        let s = self.shift;
        (-3.0 * y[0] + 4.0 * y[1] - y[2]) - (-3.0 * y[s] + 4.0 * y[s + 1] - y[s + 2]) - y[0]
    }

    fn right_row(&self, y: &[f64]) -> f64 {
        let s = self.shift;
        let m = self.n - 1;
        (3.0 * y[m] - 4.0 * y[m - 1] + y[m - 2])
            - (3.0 * y[m - s] - 4.0 * y[m - s - 1] + y[m - s - 2])
            - y[m]
    }

    /// One implicit heat step on raw nodal values, without price extraction.
    pub fn advance(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.n, "field length");
        v[0] = 0.0;
        v[self.n - 1] = 0.0;
        self.factor.solve_in_place(v);
        let w0 = self.left_row(v);
        let w1 = self.right_row(v);
        let c0 = self.cap_inv[0][0] * w0 + self.cap_inv[0][1] * w1;
        let c1 = self.cap_inv[1][0] * w0 + self.cap_inv[1][1] * w1;
        for ((x, zl), zr) in v.iter_mut().zip(&self.z_left).zip(&self.z_right) {
            *x -= zl * c0 + zr * c1;
        }
    }

    /// Advances the state and updates price and flux.
    pub fn step(&self, state: &mut FbpState) -> Result<()> {
        self.advance(state.v.values_mut());
        state.t += self.dt;
        let (price, lambda) = extract_price(&state.v)?;
        state.price = price;
        state.lambda = lambda;
        Ok(())
    }

    /// Residual of the bordered system for a solution `v` and the previous
    /// values `prev`.
    pub fn residual(&self, grid: &Grid, diffusion: f64, v: &[f64], prev: &[f64]) -> f64 {
        let r = self.dt * diffusion / (grid.h() * grid.h());
        let mut worst = (self.left_row(v) + v[0])
            .abs()
            .max((self.right_row(v) + v[self.n - 1]).abs());
        for j in 1..self.n - 1 {
            let row = (1.0 + 2.0 * r) * v[j] - r * (v[j - 1] + v[j + 1]) - prev[j];
            worst = worst.max(row.abs());
        }
        worst
    }
}

/// One step from `state`. Loops should build an [`FbpSolver`] once instead.
pub fn step_fbp(state: &FbpState, params: &ModelParams) -> Result<FbpState> {
    params.validate()?;
    let grid = state.v.grid();
    let s = ShiftSteps::from_cost(params.a, grid)?;
    let solver = FbpSolver::new(grid, params.diffusion(), params.dt, s)?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct FbpRun {
    pub state: FbpState,
    pub series: PriceSeries,
    pub records: Vec<DiagnosticsRecord>,
}

/// Diagnostics from the reconstructed densities; `total_volume` carries the
/// flux `lambda`, the trading intensity of this model.
pub fn fbp_record(state: &FbpState, s: ShiftSteps) -> DiagnosticsRecord {
    let (f, g) = reconstruct_densities(&state.v, s);
    let mut rec = DiagnosticsRecord::new(state.t, &f, &g, PriceSource::LevelSet);
    rec.total_volume = state.lambda;
    rec.price = Some(state.price);
    rec
}

/// Runs `steps` steps, recording at `stride` (zero: final step only).
pub fn run_fbp(
    initial: FbpState,
    solver: &FbpSolver,
    s: ShiftSteps,
    n_steps: usize,
    stride: usize,
) -> Result<FbpRun> {
    let mut state = initial;
    let t0 = state.t;
    let mut series = PriceSeries::new(PriceSource::LevelSet);
    let mut records = Vec::new();
    for step in 1..=n_steps {
        solver.step(&mut state).map_err(|e| e.at_step(step))?;
        state.t = t0 + step as f64 * solver.dt();
        if step == n_steps || (stride > 0 && step.is_multiple_of(stride)) {
            let rec = fbp_record(&state, s);
            series.push(rec.t, rec.price);
            records.push(rec);
        }
    }
    Ok(FbpRun {
        state,
        series,
        records,
    })
}
