//! Optimal dynamic information acquisition about a Gaussian AR(1) state
//! with linear precision costs.
//!
//! The agent picks a posterior variance `V_t` each period; the optimal rule is
//! `V_t = min(P_t, V*)` with `V*` the root of a scalar first-order condition.
//! Besides the closed form the crate ships three independent checks: a
//! discretized Bellman value iteration, a seeded Monte Carlo simulator, and
//! finite-difference comparative statics.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiation.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod error;
pub mod golden;
pub mod model;
pub mod root;
pub mod scalar;
pub mod simulate;
pub mod statics;
pub mod steady;

pub use error::{ModelError, Result};
pub use model::{posterior_variance, precision_for, validate_params, CostAssumption, ModelParams, PeriodCostBreakdown, RawParams};
pub use scalar::Scalar;
pub use steady::{
    f_derivative, f_objective, policy_step, rho_star, solve_v_star, steady_report, time_to_steady_state,
    trace_policy, PolicyRow, PolicyTrace, SteadyStateReport,
};

pub type Params = ModelParams<f64>;
pub type Report = SteadyStateReport<f64>;
pub type Trace = PolicyTrace<f64>;
pub type Grid = bellman::ValueFunctionGrid<f64>;
pub type GridSettings = bellman::GridConfig<f64>;
pub type Ensemble = simulate::EnsembleStats<f64>;
pub type Statics = statics::StaticsReport<f64>;
