//! Monitored quantities: masses, mean prices, traded-price estimators,
//! support widths and distances between runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{trapezoid, Field, SUPPORT_FRACTION};

/// Burn-in excluded from windowed price comparisons, in time units.
pub const DEFAULT_BURN_IN: f64 = 0.1;

/// Default relative threshold for [`support_width`].
pub const DEFAULT_WIDTH_THRESHOLD: f64 = 1e-3;

/// How a price is read off the traded-price density `f g / ∫ f g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mean,
    Median,
    #[default]
    Argmax,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Mean => "mean",
            Estimator::Median => "median",
            Estimator::Argmax => "argmax",
        })
    }
}

/// Where the prices in a [`PriceSeries`] come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceSource {
    /// An estimator applied to the traded-price density.
    Density(Estimator),
    /// The zero level set of a transformed variable.
    LevelSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    source: PriceSource,
    times: Vec<f64>,
    prices: Vec<f64>,
    carried: Vec<bool>,
}

impl PriceSeries {
    pub fn new(source: PriceSource) -> PriceSeries {
        PriceSeries {
            source,
            times: Vec::new(),
            prices: Vec::new(),
            carried: Vec::new(),
        }
    }

    /// Appends a sample. An undefined price carries the previous value
    /// forward and is flagged; with no previous value it is stored as NaN.
    ///
    /// Panics if `t` does not increase strictly.
    pub fn push(&mut self, t: f64, price: Option<f64>) {
        if let Some(&last) = self.times.last() {
            assert!(
                t > last,
                "price series times must increase: {t} after {last}"
            );
        }
        self.times.push(t);
        match price {
            Some(p) => {
                self.prices.push(p);
                self.carried.push(false);
            }
            None => {
                self.prices
                    .push(self.prices.last().copied().unwrap_or(f64::NAN));
                self.carried.push(true);
            }
        }
    }

    pub fn source(&self) -> PriceSource {
        self.source
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Flags samples whose price was carried forward.
    pub fn carried(&self) -> &[bool] {
        &self.carried
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation in time; `None` outside the sampled range.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if t < first || t > last {
            return None;
        }
        let i = self.times.partition_point(|&s| s < t);
        if self.times[i] == t {
            return Some(self.prices[i]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        Some(self.prices[i - 1] * (1.0 - w) + self.prices[i] * w)
    }
}

/// Quantities monitored at observer steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass_f: f64,
    pub mass_g: f64,
    pub mean_bid: Option<f64>,
    pub mean_ask: Option<f64>,
    /// `integrate(mu)`, trades per unit time.
    pub total_volume: f64,
    /// Cumulative mass of `f` pushed off the grid by the shifted gain term.
    pub leakage_f: f64,
    pub leakage_g: f64,
    pub price: Option<f64>,
    pub price_source: PriceSource,
}

impl DiagnosticsRecord {
    /// Masses and mean prices of `f` and `g`; the remaining fields start
    /// empty and are filled in by the caller.
    pub fn new(t: f64, f: &Field, g: &Field, price_source: PriceSource) -> DiagnosticsRecord {
        let mass_f = f.integrate();
        let mass_g = g.integrate();
        DiagnosticsRecord {
            t,
            mass_f,
            mass_g,
            mean_bid: mean_position(f, mass_f),
            mean_ask: mean_position(g, mass_g),
            total_volume: 0.0,
            leakage_f: 0.0,
            leakage_g: 0.0,
            price: None,
            price_source,
        }
    }

    pub fn boundary_leakage(&self) -> f64 {
        self.leakage_f + self.leakage_g
    }
}

fn mean_position(u: &Field, mass: f64) -> Option<f64> {
    let floor = u.support_threshold() * u.grid().h();
    (mass > 0.0 && mass > floor).then(|| u.first_moment() / mass)
}

/// Estimates the traded price from `rho = f g / integrate(f g)`.
///
/// Fails with [`Error::PriceEstimateUndefined`] when there is no trading
/// activity, meaning `integrate(f g)` is at most `SUPPORT_FRACTION` of
/// `max f * max g * length`.
pub fn price_estimate_boltzmann(f: &Field, g: &Field, estimator: Estimator) -> Result<f64> {
    if !f.grid().same_as(g.grid()) {
        return Err(Error::IncompatibleDomains(
            "f and g live on different grids".into(),
        ));
    }
    let weight = f.zip_map(g, |a, b| a * b);
    let total = weight.integrate();
    let scale = f.max().max(0.0) * g.max().max(0.0) * f.grid().length();
    if !(total > 0.0) || total <= SUPPORT_FRACTION * scale || !total.is_finite() {
        return Err(Error::PriceEstimateUndefined);
    }
    Ok(match estimator {
        Estimator::Mean => weight.first_moment() / total,
        Estimator::Median => median_position(&weight, total),
        Estimator::Argmax => argmax_position(&weight),
    })
}

/// 0.5-quantile of the cumulative trapezoid, interpolated inside the cell.
fn median_position(w: &Field, total: f64) -> f64 {
    let grid = w.grid();
    let h = grid.h();
    let v = w.values();
    let half = 0.5 * total;
    let mut acc = 0.0;
    for j in 0..grid.n_cells() {
        let cell = 0.5 * h * (v[j] + v[j + 1]);
        if acc + cell >= half && cell > 0.0 {
            let frac = ((half - acc) / cell).clamp(0.0, 1.0);
            return grid.x(j) + frac * h;
        }
        acc += cell;
    }
    grid.x_max()
}

/// Leftmost maximum, refined by the vertex of the parabola through it and
/// its two neighbours.
fn argmax_position(w: &Field) -> f64 {
    let grid = w.grid();
    let v = w.values();
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    let x = grid.x(best);
    if best == 0 || best == grid.n_cells() {
        return x;
    }
    let (l, c, r) = (v[best - 1], v[best], v[best + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature < 0.0 {
        let offset = 0.5 * (l - r) / curvature;
        x + offset.clamp(-0.5, 0.5) * grid.h()
    } else {
        x
    }
}

/// Endpoints of the outermost nodes with `u > threshold_fraction * max(u)`.
pub fn support_interval(u: &Field, threshold_fraction: f64) -> Option<(f64, f64)> {
    let max = u.max();
    if !(max > 0.0) {
        return None;
    }
    let cut = threshold_fraction * max;
    let v = u.values();
    let first = v.iter().position(|&x| x > cut)?;
    let last = v.iter().rposition(|&x| x > cut)?;
    Some((u.grid().x(first), u.grid().x(last)))
}

/// Length of the smallest interval containing every node where
/// `u > threshold_fraction * max(u)`; zero for a field without positive values.
pub fn support_width(u: &Field, threshold_fraction: f64) -> f64 {
    support_interval(u, threshold_fraction).map_or(0.0, |(lo, hi)| hi - lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorMetrics {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Distances between two fields on the same grid, with trapezoid quadrature.
pub fn compare_fields(a: &Field, b: &Field) -> Result<ErrorMetrics> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::IncompatibleDomains(format!(
            "grids differ: [{}, {}] with {} cells vs [{}, {}] with {} cells",
            a.grid().x_min(),
            a.grid().x_max(),
            a.grid().n_cells(),
            b.grid().x_min(),
            b.grid().x_max(),
            b.grid().n_cells()
        )));
    }
    let diff: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .collect();
    let squares: Vec<f64> = diff.iter().map(|d| d * d).collect();
    let h = a.grid().h();
    Ok(ErrorMetrics {
        l1: trapezoid(&diff, h),
        l2: trapezoid(&squares, h).sqrt(),
        linf: diff.iter().copied().fold(0.0, f64::max),
    })
}

/// Time interval over which [`compare_series`] reports its windowed maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow {
            start: DEFAULT_BURN_IN,
            end: f64::INFINITY,
        }
    }
}

impl TimeWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesComparison {
    /// Distances over all common sample times (trapezoid rule in time for
    /// L1 and L2).
    pub metrics: ErrorMetrics,
    /// Largest pointwise distance inside the window; NaN if the window
    /// holds no common sample.
    pub window_max: f64,
}

/// Compares two price series at the sample times of `a`, resampling `b` by
/// linear interpolation. Samples outside `b`'s time range are skipped, as are
/// samples where either price is NaN.
pub fn compare_series(
    a: &PriceSeries,
    b: &PriceSeries,
    window: TimeWindow,
) -> Result<SeriesComparison> {
    let mut times = Vec::new();
    let mut diffs = Vec::new();
    for (&t, &pa) in a.times().iter().zip(a.prices()) {
        let Some(pb) = b.value_at(t) else { continue };
        if pa.is_nan() || pb.is_nan() {
            continue;
        }
        times.push(t);
        diffs.push((pa - pb).abs());
    }
    if times.is_empty() {
        return Err(Error::IncompatibleDomains(
            "price series share no sample times".into(),
        ));
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        l1 += 0.5 * dt * (diffs[i] + diffs[i - 1]);
        l2 += 0.5 * dt * (diffs[i] * diffs[i] + diffs[i - 1] * diffs[i - 1]);
    }
    let linf = diffs.iter().copied().fold(0.0, f64::max);
    let window_max = times
        .iter()
        .zip(&diffs)
        .filter(|(t, _)| window.contains(**t))
        .map(|(_, d)| *d)
        .fold(f64::NAN, f64::max);
    Ok(SeriesComparison {
        metrics: ErrorMetrics {
            l1,
            l2: l2.sqrt(),
            linf,
        },
        window_max,
    })
}
