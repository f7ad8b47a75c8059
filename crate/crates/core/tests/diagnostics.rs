mod common;

use boltzprice_core::diagnostics::{
    compare_fields, compare_series, price_estimate_boltzmann, support_interval, support_width,
    Estimator, PriceSeries, PriceSource, TimeWindow,
};
use boltzprice_core::{Error, Field, Grid};
use common::bump;
use proptest::prelude::*;

const ALL: [Estimator; 3] = [Estimator::Mean, Estimator::Median, Estimator::Argmax];

#[test]
fn symmetric_traded_density_gives_its_centre() {
    let grid = Grid::new(0.0, 1.0, 1000).unwrap();
    let f = bump(grid, 0.35, 0.75, 1.0);
    let g = bump(grid, 0.35, 0.75, 2.0);
    for est in ALL {
        let p = price_estimate_boltzmann(&f, &g, est).unwrap();
        let tol = if est == Estimator::Argmax {
            grid.h()
        } else {
            1e-12
        };
        assert!((p - 0.55).abs() <= tol, "{est}: {p}");
    }
}

#[test]
fn one_node_spike_gives_that_node() {
    let grid = Grid::new(0.0, 1.0, 100).unwrap();
    let spike = Field::from_fn(grid, |x| if (x - 0.37).abs() < 1e-9 { 1.0 } else { 0.0 });
    for est in ALL {
        let p = price_estimate_boltzmann(&spike, &spike, est).unwrap();
        assert!((p - grid.x(37)).abs() < 1e-12, "{est}: {p}");
    }
    assert!((support_width(&spike, 1e-3) - 0.0).abs() < 1e-15);
}

#[test]
fn no_trading_means_no_estimate() {
    let grid = Grid::new(0.0, 1.0, 100).unwrap();
    let f = bump(grid, 0.1, 0.3, 1.0);
    let g = bump(grid, 0.6, 0.9, 1.0);
    for est in ALL {
        assert!(matches!(
            price_estimate_boltzmann(&f, &g, est),
            Err(Error::PriceEstimateUndefined)
        ));
    }
}

#[test]
fn indicator_support_width() {
    let grid = Grid::new(0.0, 1.0, 500).unwrap();
    let u = Field::from_fn(grid, |x| if (0.4..=0.6).contains(&x) { 1.0 } else { 0.0 });
    assert!((support_width(&u, 1e-3) - 0.2).abs() <= grid.h());
    assert_eq!(support_width(&Field::zeros(grid), 1e-3), 0.0);
}

#[test]
fn identical_and_shifted_series() {
    let times: Vec<f64> = (1..=50).map(|i| i as f64 * 0.02).collect();
    let mut a = PriceSeries::new(PriceSource::LevelSet);
    let mut b = PriceSeries::new(PriceSource::LevelSet);
    for &t in &times {
        a.push(t, Some(0.5 + 0.1 * t.sin()));
        b.push(t, Some(0.5 + 0.1 * t.sin() + 0.03));
    }
    let same = compare_series(&a, &a, TimeWindow::default()).unwrap();
    assert_eq!(
        (same.metrics.l1, same.metrics.l2, same.metrics.linf),
        (0.0, 0.0, 0.0)
    );
    let shifted = compare_series(&a, &b, TimeWindow::default()).unwrap();
    assert!((shifted.metrics.linf - 0.03).abs() < 1e-12);
    assert!((shifted.window_max - 0.03).abs() < 1e-12);
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = Field::zeros(Grid::new(0.0, 1.0, 10).unwrap());
    let b = Field::zeros(Grid::new(0.0, 1.0, 20).unwrap());
    assert!(matches!(
        compare_fields(&a, &b),
        Err(Error::IncompatibleDomains(_))
    ));
}

fn unimodal() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    // Two overlapping bumps; their product is a single bump.
    (0.05f64..0.45, 0.1f64..0.4, 0.0f64..0.35, 0.1f64..0.4)
}

fn series(values: &[f64]) -> PriceSeries {
    let mut s = PriceSeries::new(PriceSource::LevelSet);
    for (i, &v) in values.iter().enumerate() {
        s.push(0.05 * (i + 1) as f64, Some(v));
    }
    s
}

proptest! {
    #[test]
    fn mean_and_median_lie_inside_the_support((f_lo, f_len, shift, g_len) in unimodal()) {
        let grid = Grid::new(0.0, 1.0, 400).unwrap();
        let f = bump(grid, f_lo, f_lo + f_len, 1.0);
        let g_lo = f_lo + shift * f_len;
        let g = bump(grid, g_lo, (g_lo + g_len).min(1.0), 1.0);
        let product = f.zip_map(&g, |a, b| a * b);
        prop_assume!(product.integrate() > 1e-6);
        let (lo, hi) = support_interval(&product, 0.0).unwrap();
        for est in [Estimator::Mean, Estimator::Median] {
            let p = price_estimate_boltzmann(&f, &g, est).unwrap();
            prop_assert!(lo <= p && p <= hi, "{} outside [{}, {}]", p, lo, hi);
        }
    }

    #[test]
    fn field_metrics_obey_the_triangle_inequality(
        u in prop::collection::vec(-2.0f64..2.0, 41),
        v in prop::collection::vec(-2.0f64..2.0, 41),
        w in prop::collection::vec(-2.0f64..2.0, 41),
    ) {
        let grid = Grid::new(0.0, 1.0, 40).unwrap();
        let [u, v, w] = [u, v, w].map(|x| Field::new(grid, x).unwrap());
        let uv = compare_fields(&u, &v).unwrap();
        let vw = compare_fields(&v, &w).unwrap();
        let uw = compare_fields(&u, &w).unwrap();
        let slack = 1e-12;
        prop_assert!(uw.l1 <= uv.l1 + vw.l1 + slack);
        prop_assert!(uw.l2 <= uv.l2 + vw.l2 + slack);
        prop_assert!(uw.linf <= uv.linf + vw.linf + slack);
    }

    #[test]
    fn series_metrics_obey_the_triangle_inequality(
        u in prop::collection::vec(0.0f64..1.0, 30),
        v in prop::collection::vec(0.0f64..1.0, 30),
        w in prop::collection::vec(0.0f64..1.0, 30),
    ) {
        let [u, v, w] = [&u, &v, &w].map(|x| series(x));
        let window = TimeWindow::default();
        let uv = compare_series(&u, &v, window).unwrap();
        let vw = compare_series(&v, &w, window).unwrap();
        let uw = compare_series(&u, &w, window).unwrap();
        let slack = 1e-12;
        prop_assert!(uw.metrics.l1 <= uv.metrics.l1 + vw.metrics.l1 + slack);
        prop_assert!(uw.metrics.l2 <= uv.metrics.l2 + vw.metrics.l2 + slack);
        prop_assert!(uw.metrics.linf <= uv.metrics.linf + vw.metrics.linf + slack);
        prop_assert!(uw.window_max <= uv.window_max + vw.window_max + slack);
    }
}
