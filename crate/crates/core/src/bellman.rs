//! Brute-force check of the closed-form policy: value iteration on a
//! discretized Bellman equation over the prediction variance,
//!
//! `Psi(P) = min_{0 < V <= P} { C(V, P) + delta Psi(rho^2 V + sigma^2) }`.
//!
//! Nothing here uses `V*`. The inner minimization is a golden-section search
//! over the whole feasible interval and continuation values come from cubic
//! Hermite interpolation on the previous sweep. A linear interpolant would put
//! a concave kink at every node of the (concave) value function, and the
//! inner search would then wander between near-equal local minima.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::golden::golden_section_min;
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// Lower end of the search interval, as a fraction of `P`.
const V_FLOOR: f64 = 1e-9;
/// Golden-section argument tolerance, as a fraction of `P`.
const SEARCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig<T> {
    pub n_points: usize,
    pub p_min: T,
    pub p_max: T,
    pub sweep_tol: T,
    pub max_iters: usize,
}

impl<T: Scalar> GridConfig<T> {
    /// Grid on `[sigma^2, 1.05 max(sigma^2/(1-rho^2), P_1)]`, which contains
    /// every prediction variance reachable under any policy.
    pub fn for_params(params: &ModelParams<T>, n_points: usize) -> Self {
        let top = params.no_learning_variance().max(params.first_prediction());
        Self {
            n_points,
            p_min: params.sigma_sq(),
            p_max: top * T::lit(1.05),
            sweep_tol: T::lit(1e-9),
            max_iters: 200_000,
        }
    }

    pub fn validate(&self, params: &ModelParams<T>) -> Result<()> {
        if self.n_points < 64 {
            return Err(ModelError::Domain(format!(
                "grid needs at least 64 points, got {}",
                self.n_points
            )));
        }
        if !(self.p_min >= params.sigma_sq() * (T::one() - T::lit(1e-12))) {
            return Err(ModelError::Domain(format!(
                "p_min {} below shock variance {}",
                self.p_min,
                params.sigma_sq()
            )));
        }
        if !(self.p_max > self.p_min) || !self.p_max.is_finite() {
            return Err(ModelError::Domain(format!(
                "p_max {} must exceed p_min {}",
                self.p_max, self.p_min
            )));
        }
        if !(self.sweep_tol > T::zero()) {
            return Err(ModelError::Domain("sweep_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> T {
        (self.p_max - self.p_min) / T::from_usize(self.n_points - 1).unwrap()
    }
}

/// Converged value function on the grid, with the minimizing posterior
/// variance at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunctionGrid<T> {
    pub config: GridConfig<T>,
    pub nodes: Vec<T>,
    pub psi: Vec<T>,
    pub greedy_v: Vec<T>,
    pub iterations_used: usize,
    pub final_sweep_delta: T,
    /// Sup-norm change of every sweep, in order.
    pub sweep_deltas: Vec<T>,
}

impl<T: Scalar> ValueFunctionGrid<T> {
    pub fn spacing(&self) -> T {
        self.config.spacing()
    }

    /// `Psi` at an arbitrary prediction variance, interpolated and extended
    /// past the grid as in the sweeps.
    pub fn psi_at(&self, params: &ModelParams<T>, p: T) -> T {
        ValueInterp::new(&self.config, &self.psi, params.c()).eval(p)
    }
}

/// Linear interpolation on a uniform grid. Below the grid the edge value is
/// held; above it the function continues with slope `c / p_max^2`.
struct Interp<'a, T> {
    p_min: T,
    p_max: T,
    inv_h: T,
    values: &'a [T],
    top_slope: T,
}

impl<'a, T: Scalar> Interp<'a, T> {
    fn new(cfg: &GridConfig<T>, values: &'a [T], c: T) -> Self {
        Self {
            p_min: cfg.p_min,
            p_max: cfg.p_max,
            inv_h: cfg.spacing().recip(),
            values,
            top_slope: c / (cfg.p_max * cfg.p_max),
        }
    }

    #[inline]
    fn eval(&self, q: T) -> T {
        let n = self.values.len();
        if q <= self.p_min {
            return self.values[0];
        }
        if q >= self.p_max {
            return self.values[n - 1] + (q - self.p_max) * self.top_slope;
        }
        let s = (q - self.p_min) * self.inv_h;
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let w = s - T::from_usize(i).unwrap();
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

/// C1 cubic Hermite interpolation with centred-difference node slopes
/// (one-sided at the ends). Outside the grid it behaves like [`Interp`].
struct ValueInterp<'a, T> {
    lin: Interp<'a, T>,
    h: T,
    slopes: Vec<T>,
}

impl<'a, T: Scalar> ValueInterp<'a, T> {
    fn new(cfg: &GridConfig<T>, values: &'a [T], c: T) -> Self {
        let n = values.len();
        let h = cfg.spacing();
        let two_h = h + h;
        let slopes = (0..n)
            .map(|i| match i {
                0 => (values[1] - values[0]) / h,
                i if i + 1 == n => (values[n - 1] - values[n - 2]) / h,
                i => (values[i + 1] - values[i - 1]) / two_h,
            })
            .collect();
        Self { lin: Interp::new(cfg, values, c), h, slopes }
    }

    #[inline]
    fn eval(&self, q: T) -> T {
        let lin = &self.lin;
        if q <= lin.p_min || q >= lin.p_max {
            return lin.eval(q);
        }
        let n = lin.values.len();
        let s = (q - lin.p_min) * lin.inv_h;
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let w = s - T::from_usize(i).unwrap();
        let (y0, y1) = (lin.values[i], lin.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let (one, two, three) = (T::one(), T::lit(2.0), T::lit(3.0));
        let w2 = w * w;
        let w3 = w2 * w;
        let h00 = two * w3 - three * w2 + one;
        let h10 = w3 - two * w2 + w;
        let h01 = three * w2 - two * w3;
        let h11 = w3 - w2;
        h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
    }
}

fn nodes_for<T: Scalar>(cfg: &GridConfig<T>) -> Vec<T> {
    let h = cfg.spacing();
    (0..cfg.n_points)
        .map(|i| {
            if i + 1 == cfg.n_points {
                cfg.p_max
            } else {
                cfg.p_min + h * T::from_usize(i).unwrap()
            }
        })
        .collect()
}

/// Minimizes the Bellman right-hand side at `p` against continuation `cont`.
#[inline]
fn bellman_rhs<T: Scalar>(params: &ModelParams<T>, cont: &ValueInterp<'_, T>, p: T) -> (T, T) {
    let delta = params.delta();
    let objective = |v: T| params.cost_unchecked(v, p) + delta * cont.eval(params.predict_unchecked(v));
    let (v, val) = golden_section_min(objective, p * T::lit(V_FLOOR), p, p * T::lit(SEARCH_TOL));
    (val, v)
}

/// Successive approximation of the Bellman operator until the sup-norm change
/// of a sweep drops to `cfg.sweep_tol`.
///
/// Each sweep reads only the previous sweep's values, so evaluating nodes in
/// parallel gives bit-identical results to a sequential run.
pub fn value_iteration<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &GridConfig<T>,
) -> Result<ValueFunctionGrid<T>> {
    cfg.validate(params)?;
    let nodes = nodes_for(cfg);
    let sqrt_c = params.c().sqrt();
    // Exact when delta = 0.
    let mut psi: Vec<T> = nodes
        .iter()
        .map(|&p| params.cost_unchecked(p.min(sqrt_c), p))
        .collect();
    let mut deltas = Vec::new();
    let mut last = T::infinity();

    for _ in 0..cfg.max_iters {
        let cont = ValueInterp::new(cfg, &psi, params.c());
        let next: Vec<(T, T)> = nodes.par_iter().map(|&p| bellman_rhs(params, &cont, p)).collect();
        last = next
            .iter()
            .zip(&psi)
            .map(|(&(new, _), &old)| (new - old).abs())
            .fold(T::zero(), T::max);
        deltas.push(last);
        psi = next.iter().map(|&(val, _)| val).collect();
        if last <= cfg.sweep_tol {
            let greedy_v = next.iter().map(|&(_, v)| v).collect();
            return Ok(ValueFunctionGrid {
                config: *cfg,
                nodes,
                psi,
                greedy_v,
                iterations_used: deltas.len(),
                final_sweep_delta: last,
                sweep_deltas: deltas,
            });
        }
    }
    Err(ModelError::NonConvergence {
        iterations: cfg.max_iters,
        last_delta: last.to_f64_lossy(),
        tolerance: cfg.sweep_tol.to_f64_lossy(),
    })
}

/// Minimizing posterior variance at `p`, interpolated between nodes.
pub fn greedy_policy<T: Scalar>(grid: &ValueFunctionGrid<T>, p: T) -> Result<T> {
    let cfg = &grid.config;
    if !(p >= cfg.p_min && p <= cfg.p_max) {
        return Err(ModelError::OutOfRange {
            value: p.to_f64_lossy(),
            lo: cfg.p_min.to_f64_lossy(),
            hi: cfg.p_max.to_f64_lossy(),
        });
    }
    // The top slope is irrelevant inside the grid.
    Ok(Interp::new(cfg, &grid.greedy_v, T::zero()).eval(p))
}

/// Largest relative error of the central-difference slope of `Psi` against
/// the envelope value `c / P^2`, over interior nodes with `P > 1.05 V*`.
/// `None` when no node qualifies.
pub fn envelope_check<T: Scalar>(params: &ModelParams<T>, grid: &ValueFunctionGrid<T>, v_star: T) -> Option<T> {
    let cut = v_star * T::lit(1.05);
    (1..grid.nodes.len() - 1)
        .filter(|&i| grid.nodes[i - 1] > cut)
        .map(|i| {
            let p = grid.nodes[i];
            let slope = (grid.psi[i + 1] - grid.psi[i - 1]) / (grid.nodes[i + 1] - grid.nodes[i - 1]);
            let exact = params.c() / (p * p);
            (slope - exact).abs() / exact
        })
        .fold(None, |acc: Option<T>, e| Some(acc.map_or(e, |a| a.max(e))))
}

/// Max absolute gap between stored `Psi` and one fresh application of the
/// Bellman operator to it.
pub fn bellman_residual<T: Scalar>(params: &ModelParams<T>, grid: &ValueFunctionGrid<T>) -> T {
    let cont = ValueInterp::new(&grid.config, &grid.psi, params.c());
    grid.nodes
        .par_iter()
        .zip(grid.psi.par_iter())
        .map(|(&p, &psi)| (bellman_rhs(params, &cont, p).0 - psi).abs())
        .reduce(T::zero, T::max)
}

/// Max over `probes` of `|greedy(P) - min(P, v_star)|`.
pub fn policy_gap<T: Scalar>(grid: &ValueFunctionGrid<T>, v_star: T, probes: &[T]) -> Result<T> {
    let mut worst = T::zero();
    for &p in probes {
        let gap = (greedy_policy(grid, p)? - p.min(v_star)).abs();
        worst = worst.max(gap);
    }
    Ok(worst)
}
