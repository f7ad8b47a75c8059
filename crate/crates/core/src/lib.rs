//! Solvers for a kinetic (Boltzmann-type) price formation model between
//! buyers and vendors, together with the free-boundary model it converges
//! to, its fast-time initial layer and its high-frequency scaling limit.
//!
//! All fields live on a uniform vertex grid ([`Grid`]); the transaction cost
//! must be a whole number of cells ([`ShiftSteps`]).

// Parameter checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boltzmann;
pub mod diagnostics;
pub mod error;
pub mod fbp;
pub mod grid;
pub mod initial_data;
pub mod layer;
pub mod limit;
pub mod tridiag;

pub use boltzmann::{
    run_boltzmann, step_boltzmann, transaction_volume, BoltzmannRun, BoltzmannState,
    BoltzmannStepper, GuardPolicy, ModelParams, Observers, UNIT_DIFFUSION_SIGMA,
};
pub use diagnostics::{
    compare_fields, compare_series, price_estimate_boltzmann, support_width, DiagnosticsRecord,
    ErrorMetrics, Estimator, PriceSeries, PriceSource, SeriesComparison, TimeWindow,
};
pub use error::{Error, Result};
pub use fbp::{
    extract_price, reconstruct_densities, step_fbp, transform_initial, well_preparedness,
    FbpSolver, FbpState, WellPreparedness,
};
pub use grid::{
    integrate, negative_part, positive_part, shift_field, Direction, Field, Grid, ShiftSteps,
    EPS_POS, SUPPORT_FRACTION,
};
pub use initial_data::{Example, PiecewiseSpec};
pub use layer::{
    check_hypothesis, closed_form_limit, layer_conserved_sum, step_layer, LayerHypothesis,
    LayerParams, LayerState, LayerStepper,
};
pub use limit::{consecutive_limit_reference, step_limit, LimitParams, LimitStepper};
pub use tridiag::{solve_tridiagonal, ImplicitHeat};
