#![allow(dead_code)]

use boltzprice_core::{Example, Field, Grid};

/// `height * (1 - ((x - mid) / half)^2)` on `[lo, hi]`, zero elsewhere.
pub fn bump(grid: Grid, lo: f64, hi: f64, height: f64) -> Field {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    Field::from_fn(grid, |x| {
        if x <= lo || x >= hi {
            0.0
        } else {
            height * (1.0 - ((x - mid) / half).powi(2))
        }
    })
}

pub fn example(ex: Example, grid: &Grid) -> (Field, Field) {
    let (f, g) = ex.data();
    (f.sample(grid).unwrap(), g.sample(grid).unwrap())
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
