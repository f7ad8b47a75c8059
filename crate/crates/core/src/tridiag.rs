//! Tridiagonal solves (Thomas algorithm) and the implicit Neumann heat step
//! built on top of them.
//!
//! Band layout: for an `n x n` system, `diag` has length `n` while `lower`
//! and `upper` have length `n - 1`. Row `i` reads
//! `lower[i-1] * w[i-1] + diag[i] * w[i] + upper[i] * w[i+1]`.

use crate::error::{Error, Result};

fn check_bands(lower: &[f64], diag: &[f64], upper: &[f64], rhs_len: usize) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty tridiagonal system".into()));
    }
    for len in [lower.len(), upper.len()] {
        if len != n - 1 {
            return Err(Error::LengthMismatch {
                expected: n - 1,
                found: len,
            });
        }
    }
    if rhs_len != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: rhs_len,
        });
    }
    Ok(())
}

/// Solves the tridiagonal system with the Thomas algorithm.
///
/// No pivoting is done, so the matrix should be diagonally dominant. A pivot
/// that is zero relative to its row is reported as [`Error::SingularSystem`].
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let factor = ThomasFactor::new(lower, diag, upper)?;
    check_bands(lower, diag, upper, rhs.len())?;
    let mut w = rhs.to_vec();
    factor.solve_in_place(&mut w);
    Ok(w)
}

/// Max-norm of `A w - rhs`.
pub fn tridiagonal_residual(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    w: &[f64],
    rhs: &[f64],
) -> f64 {
    let n = diag.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut row = diag[i] * w[i] - rhs[i];
        if i > 0 {
            row += lower[i - 1] * w[i - 1];
        }
        if i + 1 < n {
            row += upper[i] * w[i + 1];
        }
        worst = worst.max(row.abs());
    }
    worst
}

/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct ThomasFactor {
    lower: Vec<f64>,
    // Upper band after elimination, already divided by the pivot.
    upper_scaled: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl ThomasFactor {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<ThomasFactor> {
        check_bands(lower, diag, upper, diag.len())?;
        let n = diag.len();
        let mut upper_scaled = vec![0.0; n.saturating_sub(1)];
        let mut inv_pivot = vec![0.0; n];
        let mut prev_upper = 0.0;
        for i in 0..n {
            let sub = if i > 0 { lower[i - 1] } else { 0.0 };
            let pivot = diag[i] - sub * prev_upper;
            let scale = diag[i].abs() + sub.abs() + if i + 1 < n { upper[i].abs() } else { 0.0 };
            if !pivot.is_finite() || pivot.abs() <= f64::EPSILON * scale {
                return Err(Error::SingularSystem { row: i });
            }
            inv_pivot[i] = 1.0 / pivot;
            if i + 1 < n {
                prev_upper = upper[i] * inv_pivot[i];
                upper_scaled[i] = prev_upper;
            }
        }
        Ok(ThomasFactor {
            lower: lower.to_vec(),
            upper_scaled,
            inv_pivot,
        })
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution. Panics on a length mismatch.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length");
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

/// Backward-Euler step for `u_t = D u_xx` with homogeneous Neumann
/// boundaries imposed by ghost-node reflection (`u_{-1} = u_1`,
/// `u_{N+1} = u_{N-1}`).
///
/// The reflected matrix has column sums weighted by the trapezoid weights
/// equal to one, so the step conserves `integrate(u)` exactly (up to
/// round-off).
#[derive(Debug, Clone)]
pub struct ImplicitHeat {
    ratio: f64,
    factor: Option<ThomasFactor>,
    n_nodes: usize,
}

impl ImplicitHeat {
    /// `ratio` is `dt * D / h^2`. A zero ratio gives the identity step.
    pub fn new(n_nodes: usize, ratio: f64) -> Result<ImplicitHeat> {
        if n_nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "heat stepper needs at least 3 nodes, got {n_nodes}"
            )));
        }
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "diffusion ratio must be non-negative, got {ratio}"
            )));
        }
        let factor = if ratio == 0.0 {
            None
        } else {
            let (lower, diag, upper) = neumann_bands(n_nodes, ratio);
            Some(ThomasFactor::new(&lower, &diag, &upper)?)
        };
        Ok(ImplicitHeat {
            ratio,
            factor,
            n_nodes,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        if let Some(factor) = &self.factor {
            factor.solve_in_place(rhs);
        }
    }
}

/// Bands of `I - r * Laplacian` with reflected ghost nodes.
pub fn neumann_bands(n_nodes: usize, ratio: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = n_nodes;
    let diag = vec![1.0 + 2.0 * ratio; n];
    let mut lower = vec![-ratio; n - 1];
    let mut upper = vec![-ratio; n - 1];
    upper[0] = -2.0 * ratio;
    lower[n - 2] = -2.0 * ratio;
    (lower, diag, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system() {
        let rhs = [1.0, -2.0, 3.5, 0.25];
        let w = solve_tridiagonal(&[0.0; 3], &[1.0; 4], &[0.0; 3], &rhs).unwrap();
        assert_eq!(w, rhs);
    }

    #[test]
    fn three_node_laplacian_against_hand_solution() {
        // [2 -1 0; -1 2 -1; 0 -1 2] w = [1, 0, 1]  =>  w = [1, 1, 1]
        let w =
            solve_tridiagonal(&[-1.0, -1.0], &[2.0; 3], &[-1.0, -1.0], &[1.0, 0.0, 1.0]).unwrap();
        for v in w {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let err = solve_tridiagonal(&[1.0], &[0.0, 1.0], &[1.0], &[1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("singular system"));
    }

    #[test]
    fn band_lengths_are_checked() {
        assert!(solve_tridiagonal(&[1.0, 1.0], &[4.0, 4.0], &[1.0], &[1.0, 1.0]).is_err());
        assert!(solve_tridiagonal(&[1.0], &[4.0, 4.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn heat_step_preserves_constants_and_mass() {
        let heat = ImplicitHeat::new(11, 3.7).unwrap();
        let mut u = vec![2.5; 11];
        heat.solve_in_place(&mut u);
        for v in &u {
            assert!((v - 2.5).abs() < 1e-14);
        }

        let mut bump: Vec<f64> = (0..11).map(|j| if j < 3 { 1.0 } else { 0.0 }).collect();
        let before = crate::grid::trapezoid(&bump, 0.1);
        heat.solve_in_place(&mut bump);
        let after = crate::grid::trapezoid(&bump, 0.1);
        assert!((before - after).abs() < 1e-15);
    }
}
