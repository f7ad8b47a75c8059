use boltzprice_cli::config::{CompareWhat, ModelKind, ResolvedRun};
use boltzprice_cli::{preset, resolve, Scale};
use boltzprice_core::{Example, GuardPolicy};

fn runs(example: Example, scale: Scale) -> Vec<ResolvedRun> {
    resolve(&preset(example, scale)).unwrap().runs
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

struct Expected {
    label: &'static str,
    model: ModelKind,
    domain: (f64, f64),
    h: f64,
    k: f64,
    a_cells: usize,
    dt: f64,
    t_end: f64,
}

fn check(run: &ResolvedRun, e: &Expected) {
    let p = run.params;
    assert_eq!(run.label, e.label);
    assert_eq!(run.model, e.model, "{}", e.label);
    assert!(close(run.grid.x_min(), e.domain.0) && close(run.grid.x_max(), e.domain.1));
    assert!(
        close(run.grid.h(), e.h),
        "{}: h = {}",
        e.label,
        run.grid.h()
    );
    assert!(close(p.k, e.k), "{}: k = {}", e.label, p.k);
    assert_eq!(run.shift.steps(), e.a_cells, "{}", e.label);
    assert!(close(p.a, e.a_cells as f64 * e.h));
    assert!(close(p.dt, e.dt), "{}: dt = {}", e.label, p.dt);
    assert!(close(p.t_end, e.t_end));
    assert!(close(p.sigma, std::f64::consts::SQRT_2));
}

#[test]
fn paper_scale_parameters() {
    let table = [
        (
            Example::Example1,
            vec![
                Expected {
                    label: "boltzmann",
                    model: ModelKind::Boltzmann,
                    domain: (0.0, 1.0),
                    h: 0.002,
                    k: 1e6,
                    a_cells: 10,
                    dt: 1e-6,
                    t_end: 1.0,
                },
                Expected {
                    label: "fbp",
                    model: ModelKind::Fbp,
                    domain: (0.0, 1.0),
                    h: 0.002,
                    k: 0.0,
                    a_cells: 10,
                    dt: 1e-6,
                    t_end: 1.0,
                },
            ],
        ),
        (
            Example::Example2,
            vec![
                Expected {
                    label: "boltzmann-0",
                    model: ModelKind::Boltzmann,
                    domain: (0.0, 1.0),
                    h: 1e-3,
                    k: 1e5,
                    a_cells: 10,
                    dt: 1e-5,
                    t_end: 0.5,
                },
                Expected {
                    label: "boltzmann-1",
                    model: ModelKind::Boltzmann,
                    domain: (0.0, 1.0),
                    h: 1e-3,
                    k: 1e6,
                    a_cells: 10,
                    dt: 1e-6,
                    t_end: 0.5,
                },
                Expected {
                    label: "fbp",
                    model: ModelKind::Fbp,
                    domain: (0.0, 1.0),
                    h: 1e-3,
                    k: 0.0,
                    a_cells: 10,
                    dt: 1e-6,
                    t_end: 0.5,
                },
            ],
        ),
        (
            Example::Example3,
            vec![Expected {
                label: "layer",
                model: ModelKind::Layer,
                domain: (0.0, 1.0),
                h: 2e-3,
                k: 5e2,
                a_cells: 10,
                dt: 2e-4,
                t_end: 1.0,
            }],
        ),
        (
            Example::Example4,
            vec![
                Expected {
                    label: "boltzmann",
                    model: ModelKind::Boltzmann,
                    domain: (0.0, 20.0),
                    h: 2e-5,
                    k: 5e4,
                    a_cells: 1,
                    dt: 2e-5,
                    t_end: 1.0,
                },
                Expected {
                    label: "limit",
                    model: ModelKind::Limit,
                    domain: (0.0, 20.0),
                    h: 2e-5,
                    k: 0.0,
                    a_cells: 0,
                    dt: 2e-5,
                    t_end: 1.0,
                },
                Expected {
                    label: "consecutive",
                    model: ModelKind::Consecutive,
                    domain: (0.0, 20.0),
                    h: 2e-5,
                    k: 0.0,
                    a_cells: 0,
                    dt: 2e-5,
                    t_end: 1.0,
                },
            ],
        ),
    ];
    for (example, expected) in table {
        let runs = runs(example, Scale::Paper);
        assert_eq!(runs.len(), expected.len(), "{}", example.name());
        for (run, e) in runs.iter().zip(&expected) {
            check(run, e);
        }
    }
    let ex3 = &runs(Example::Example3, Scale::Paper)[0];
    assert!(close(ex3.params.epsilon, 1.0 / 500.0));
    let ex4 = runs(Example::Example4, Scale::Paper);
    assert!(close(ex4[1].params.c, 1.0));
    // k a = 1 for the Boltzmann run.
    assert!(close(ex4[0].params.k * ex4[0].params.a, 1.0));
}

#[test]
fn reference_initial_data_coefficients() {
    // (example, x, f_I(x), g_I(x)) written out by hand.
    let f1 = |x: f64| {
        if x <= 0.5 {
            1.0
        } else if x < 0.6 {
            -10.0 * x + 6.0
        } else {
            0.0
        }
    };
    let g1 = |x: f64| if x > 0.6 { 10.0 * x - 6.0 } else { 0.0 };
    let f2 = |x: f64| {
        if (0.3..=0.5).contains(&x) {
            15.0 * (x - 0.3) * (0.5 - x)
        } else {
            0.0
        }
    };
    let g2 = |x: f64| {
        if (0.55..=0.8).contains(&x) {
            15.0 * (0.55 - x) * (x - 0.8)
        } else {
            0.0
        }
    };
    let f3 = |x: f64| {
        if (0.65..=0.95).contains(&x) {
            15.0 * (x - 0.65) * (0.95 - x)
        } else {
            0.0
        }
    };
    let g3 = |x: f64| {
        if (0.25..=0.5).contains(&x) {
            12.0 * (x - 0.25) * (0.5 - x)
        } else {
            0.0
        }
    };
    let f4 = |x: f64| {
        if (9.0..=9.5).contains(&x) {
            1.0
        } else if x > 9.5 && x < 10.0 {
            -2.0 * x + 20.0
        } else {
            0.0
        }
    };
    let g4 = |x: f64| {
        if (10.0..=11.0).contains(&x) {
            2.0 * x - 20.0
        } else {
            0.0
        }
    };
    type Density<'a> = &'a dyn Fn(f64) -> f64;
    let expected: [(Example, Density, Density); 4] = [
        (Example::Example1, &f1, &g1),
        (Example::Example2, &f2, &g2),
        (Example::Example3, &f3, &g3),
        (Example::Example4, &f4, &g4),
    ];
    for (example, f, g) in expected {
        for run in runs(example, Scale::Paper) {
            let grid = run.grid;
            // Sample every node on the unit domain, a band around the
            // supports on [0, 20].
            let nodes: Vec<usize> = if grid.x_max() > 1.0 {
                (grid.nearest_node(8.5)..=grid.nearest_node(11.5))
                    .step_by(7)
                    .collect()
            } else {
                (0..grid.n_nodes()).collect()
            };
            for j in nodes {
                let x = grid.x(j);
                let (fv, gv) = (run.f_init.values()[j], run.g_init.values()[j]);
                assert!(
                    (fv - f(x)).abs() <= 1e-12,
                    "{} f({x}) = {fv}, expected {}",
                    example.name(),
                    f(x)
                );
                assert!(
                    (gv - g(x)).abs() <= 1e-12,
                    "{} g({x}) = {gv}, expected {}",
                    example.name(),
                    g(x)
                );
            }
        }
    }
}

#[test]
fn guard_policies() {
    for scale in [Scale::Desk, Scale::Paper] {
        let ex1 = runs(Example::Example1, scale);
        assert_eq!(ex1[0].params.guard, GuardPolicy::Monitor);
        let ex2 = runs(Example::Example2, scale);
        assert!(ex2.iter().all(|r| r.params.guard == GuardPolicy::Strict));
    }
}

#[test]
fn desk_scale_parameters() {
    let ex1 = runs(Example::Example1, Scale::Desk);
    check(
        &ex1[0],
        &Expected {
            label: "boltzmann",
            model: ModelKind::Boltzmann,
            domain: (0.0, 1.0),
            h: 0.002,
            k: 1e3,
            a_cells: 10,
            dt: 1e-3,
            t_end: 0.5,
        },
    );
    let ex2 = runs(Example::Example2, Scale::Desk);
    let ks: Vec<f64> = ex2
        .iter()
        .filter(|r| r.model == ModelKind::Boltzmann)
        .map(|r| r.params.k)
        .collect();
    assert_eq!(ks, [1e2, 1e3, 1e4]);
    assert!(ex2
        .iter()
        .filter(|r| r.model == ModelKind::Boltzmann)
        .all(|r| close(r.params.dt * r.params.k, 1.0)));
    let ex4 = runs(Example::Example4, Scale::Desk);
    check(
        &ex4[0],
        &Expected {
            label: "boltzmann",
            model: ModelKind::Boltzmann,
            domain: (0.0, 20.0),
            h: 2e-3,
            k: 500.0,
            a_cells: 1,
            dt: 1e-3,
            t_end: 1.0,
        },
    );
    assert!(close(ex4[1].params.c, 1.0));
}

#[test]
fn comparison_layout() {
    let ex1 = resolve(&preset(Example::Example1, Scale::Desk)).unwrap();
    let kinds: Vec<_> = ex1
        .comparisons
        .iter()
        .map(|c| (c.a.as_str(), c.b.as_str(), c.quantity))
        .collect();
    assert_eq!(
        kinds,
        [
            ("boltzmann", "fbp", CompareWhat::Price),
            ("boltzmann", "fbp", CompareWhat::Fields)
        ]
    );
    let ex4 = resolve(&preset(Example::Example4, Scale::Desk)).unwrap();
    let pairs: Vec<_> = ex4
        .comparisons
        .iter()
        .map(|c| (c.a.as_str(), c.b.as_str()))
        .collect();
    for pair in [
        ("boltzmann", "limit"),
        ("boltzmann", "consecutive"),
        ("limit", "consecutive"),
    ] {
        assert_eq!(pairs.iter().filter(|p| **p == pair).count(), 2, "{pair:?}");
    }
}
