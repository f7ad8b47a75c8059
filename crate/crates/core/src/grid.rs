//! Uniform node-centred grids and the fields that live on them.
//!
//! Every solver in this crate samples its unknowns at the `n_cells + 1`
//! vertices `x_j = x_min + j h` of a uniform mesh. Integrals use the
//! trapezoidal rule, which is exact on piecewise-linear nodal data.

use crate::error::{Error, Result};

/// Values in `(-EPS_POS, 0)` are treated as round-off and clamped to zero;
/// anything more negative is a loss of positivity.
pub const EPS_POS: f64 = 1e-12;

/// Relative threshold defining the numerical support of a field:
/// a node belongs to the support when `u_j > SUPPORT_FRACTION * max(u)`.
pub const SUPPORT_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    h: f64,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Grid> {
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if n_cells < 4 {
            return Err(Error::InvalidGrid(format!(
                "need at least 4 cells, got {n_cells}"
            )));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_cells,
            h: (x_max - x_min) / n_cells as f64,
        })
    }

    /// Builds the grid with mesh width `h`; `h` must divide the domain.
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Grid> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "mesh width {h} must be positive"
            )));
        }
        let cells = (x_max - x_min) / h;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "mesh width {h} does not divide [{x_min}, {x_max}]"
            )));
        }
        Grid::new(x_min, x_max, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Position of node `j`. Computed as a fraction of the domain so that
    /// nodes such as 0.6 on `[0, 1]` land exactly on their decimal value.
    pub fn x(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + self.length() * (j as f64 / self.n_cells as f64)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.x(j)).collect()
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest_node(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.h).round();
        j.clamp(0.0, self.n_cells as f64) as usize
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_cells == other.n_cells
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.length()
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.length()
    }
}

/// Shift direction: `Plus` reads `u(x + a)`, `Minus` reads `u(x - a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Plus,
    Minus,
}

/// A transaction cost expressed in whole grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShiftSteps(usize);

impl ShiftSteps {
    pub const ZERO: ShiftSteps = ShiftSteps(0);

    pub fn new(steps: usize) -> ShiftSteps {
        ShiftSteps(steps)
    }

    /// Converts a cost `a` into grid steps, rejecting costs that are not an
    /// integer multiple of the mesh width.
    pub fn from_cost(a: f64, grid: &Grid) -> Result<ShiftSteps> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "transaction cost must be non-negative, got {a}"
            )));
        }
        let ratio = a / grid.h();
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::NotGridMultiple { a, h: grid.h() });
        }
        let steps = steps as usize;
        if steps > grid.n_cells() {
            return Err(Error::ShiftExceedsDomain {
                steps,
                n_cells: grid.n_cells(),
            });
        }
        Ok(ShiftSteps(steps))
    }

    pub fn steps(self) -> usize {
        self.0
    }

    pub fn cost(self, grid: &Grid) -> f64 {
        self.0 as f64 * grid.h()
    }
}

/// Nodal samples of a scalar quantity on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: grid.n_nodes(),
                found: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Grid) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Field {
        Field {
            grid,
            values: vec![c; grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid,
            values: (0..grid.n_nodes()).map(|j| f(grid.x(j))).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integrate(&self) -> f64 {
        trapezoid(&self.values, self.grid.h())
    }

    /// `∫ x u(x) dx` by the trapezoidal rule.
    pub fn first_moment(&self) -> f64 {
        let h = self.grid.h();
        let n = self.grid.n_cells();
        let mut acc = 0.0;
        for (j, &u) in self.values.iter().enumerate() {
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * self.grid.x(j) * u;
        }
        acc * h
    }

    pub fn positive_part(&self) -> Field {
        self.map(|u| u.max(0.0))
    }

    pub fn negative_part(&self) -> Field {
        self.map(|u| (-u).max(0.0))
    }

    pub fn shift(&self, s: ShiftSteps, direction: Direction, fill: f64) -> Result<Field> {
        if s.steps() > self.grid.n_cells() {
            return Err(Error::ShiftExceedsDomain {
                steps: s.steps(),
                n_cells: self.grid.n_cells(),
            });
        }
        Ok(Field {
            grid: self.grid,
            values: shifted(&self.values, s.steps(), direction, fill),
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&u| f(u)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    ///
    /// Panics if the grids differ; mixing grids is a programming error.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert!(
            self.grid.same_as(&other.grid),
            "fields live on different grids"
        );
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, u| m.max(u.abs()))
    }

    /// Numerical-support threshold `SUPPORT_FRACTION * max(u)`.
    pub fn support_threshold(&self) -> f64 {
        SUPPORT_FRACTION * self.max().max(0.0)
    }

    /// Clamps round-off negatives in `(-EPS_POS, 0)` to zero and returns how
    /// many nodes were touched. Anything below `-EPS_POS` is an error.
    pub fn clamp_density(&mut self) -> Result<usize> {
        clamp_density(&mut self.values)
    }
}

pub fn shift_field(u: &Field, s: ShiftSteps, direction: Direction, fill: f64) -> Result<Field> {
    u.shift(s, direction, fill)
}

pub fn integrate(u: &Field) -> f64 {
    u.integrate()
}

pub fn positive_part(u: &Field) -> Field {
    u.positive_part()
}

pub fn negative_part(u: &Field) -> Field {
    u.negative_part()
}

pub(crate) fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (0.5 * values[0] + inner + 0.5 * values[n - 1])
        }
    }
}

/// `out[j] = u[j ± steps]`, with `fill` outside the index range.
pub(crate) fn shifted(values: &[f64], steps: usize, direction: Direction, fill: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![fill; n];
    if steps >= n {
        return out;
    }
    match direction {
        Direction::Plus => out[..n - steps].copy_from_slice(&values[steps..]),
        Direction::Minus => out[steps..].copy_from_slice(&values[..n - steps]),
    }
    out
}

pub(crate) fn clamp_density(values: &mut [f64]) -> Result<usize> {
    let mut clamped = 0;
    for (node, v) in values.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -EPS_POS || v.is_nan() {
                return Err(Error::PositivityLost { node, value: *v });
            }
            *v = 0.0;
            clamped += 1;
        } else if v.is_nan() {
            return Err(Error::PositivityLost { node, value: *v });
        }
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} round-off negative values to zero");
    }
    Ok(clamped)
}
