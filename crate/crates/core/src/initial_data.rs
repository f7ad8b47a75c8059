//! Piecewise-polynomial initial densities, including the four reference
//! data sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{clamp_density, Field, Grid};

/// Polynomial of degree at most two on one piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// `c0 + c1 x + c2 x^2`.
    Poly(Vec<f64>),
    /// `scale * (x - left) * (right - x)`.
    Bump { scale: f64, left: f64, right: f64 },
}

impl Shape {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Shape::Bump { scale, left, right } => scale * (x - left) * (right - x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Piece {
    /// Closed interval `[lo, hi]`.
    pub interval: [f64; 2],
    pub shape: Shape,
}

/// A density given piece by piece; zero outside every piece. Where two
/// closed pieces share an endpoint the earlier piece wins.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    pub pieces: Vec<Piece>,
}

impl PiecewiseSpec {
    pub fn new(pieces: Vec<Piece>) -> PiecewiseSpec {
        PiecewiseSpec { pieces }
    }

    pub fn zero() -> PiecewiseSpec {
        PiecewiseSpec::default()
    }

    /// Checks interval ordering, degree and pairwise disjoint interiors.
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.pieces.iter().enumerate() {
            let [lo, hi] = p.interval;
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidParameter(format!(
                    "piece {i}: interval [{lo}, {hi}] is not ordered"
                )));
            }
            match &p.shape {
                Shape::Poly(c) if c.is_empty() || c.len() > 3 => {
                    return Err(Error::InvalidParameter(format!(
                        "piece {i}: expected 1 to 3 coefficients, got {}",
                        c.len()
                    )))
                }
                Shape::Poly(c) if c.iter().any(|v| !v.is_finite()) => {
                    return Err(Error::InvalidParameter(format!(
                        "piece {i}: coefficients must be finite"
                    )))
                }
                _ => {}
            }
        }
        for (i, a) in self.pieces.iter().enumerate() {
            for (j, b) in self.pieces.iter().enumerate().skip(i + 1) {
                if a.interval[0] < b.interval[1] && b.interval[0] < a.interval[1] {
                    return Err(Error::InvalidParameter(format!(
                        "pieces {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| p.interval[0] <= x && x <= p.interval[1])
            .map_or(0.0, |p| p.shape.eval(x))
    }

    /// Samples the density at the grid nodes. Round-off negatives are
    /// clamped; genuinely negative data are rejected.
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.validate()?;
        let mut field = Field::from_fn(*grid, |x| self.eval(x));
        clamp_density(field.values_mut())?;
        Ok(field)
    }
}

fn poly(lo: f64, hi: f64, coeffs: &[f64]) -> Piece {
    Piece {
        interval: [lo, hi],
        shape: Shape::Poly(coeffs.to_vec()),
    }
}

fn bump(scale: f64, left: f64, right: f64) -> Piece {
    Piece {
        interval: [left, right],
        shape: Shape::Bump { scale, left, right },
    }
}

/// The four reference data sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Example1,
    Example2,
    Example3,
    Example4,
}

impl Example {
    pub const ALL: [Example; 4] = [
        Example::Example1,
        Example::Example2,
        Example::Example3,
        Example::Example4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Example::Example1 => "example1",
            Example::Example2 => "example2",
            Example::Example3 => "example3",
            Example::Example4 => "example4",
        }
    }

    /// Buyer and vendor initial densities.
    pub fn data(self) -> (PiecewiseSpec, PiecewiseSpec) {
        match self {
            // Touching supports with matching slopes at 0.6.
            Example::Example1 => (
                PiecewiseSpec::new(vec![poly(0.0, 0.5, &[1.0]), poly(0.5, 0.6, &[6.0, -10.0])]),
                PiecewiseSpec::new(vec![poly(0.6, 1.0, &[-6.0, 10.0])]),
            ),
            Example::Example2 => (
                PiecewiseSpec::new(vec![bump(15.0, 0.3, 0.5)]),
                PiecewiseSpec::new(vec![bump(15.0, 0.55, 0.8)]),
            ),
            // Buyers to the right of vendors.
            Example::Example3 => (
                PiecewiseSpec::new(vec![bump(15.0, 0.65, 0.95)]),
                PiecewiseSpec::new(vec![bump(12.0, 0.25, 0.5)]),
            ),
            Example::Example4 => (
                PiecewiseSpec::new(vec![poly(9.0, 9.5, &[1.0]), poly(9.5, 10.0, &[20.0, -2.0])]),
                PiecewiseSpec::new(vec![poly(10.0, 11.0, &[-20.0, 2.0])]),
            ),
        }
    }
}

impl std::str::FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Example> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown example '{s}'")))
    }
}
