//! Seeded Monte Carlo of states, signals and posterior means under the
//! closed-form policy.
//!
//! Every path owns a ChaCha stream selected by its index, and every draw sits
//! at a fixed slot of that stream: slot 0 is `theta_0`, period `t` uses slot
//! `2t - 1` for the state shock and `2t` for the signal noise. The noise slot
//! is consumed even when no signal is bought, so results never depend on the
//! policy path, the number of paths, or the order paths run in.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{ModelError, Result};
use crate::model::ModelParams;
use crate::scalar::{CompensatedSum, Scalar};
use crate::steady::{solve_v_star, trace_with_target, PolicyRow, DEFAULT_TOL};

const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(ModelError::Domain("horizon must be >= 1".into()));
        }
        if self.n_paths == 0 {
            return Err(ModelError::Domain("n_paths must be >= 1".into()));
        }
        Ok(())
    }
}

/// Analytic and empirical moments for one period. Standard errors are `None`
/// for a single path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats<T> {
    pub t: usize,
    pub p_t: T,
    pub v_t: T,
    pub x_t: T,
    pub cost_t: T,
    /// Mean of `(a_t - theta_t)^2`.
    pub mse_emp: T,
    pub mse_se: Option<T>,
    /// Mean of `a_t - theta_t`.
    pub bias_emp: T,
    pub bias_se: Option<T>,
    /// Mean of `(a_t - theta_t)^2 + c x_t`.
    pub cost_emp: T,
    pub cost_se: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats<T> {
    pub n_paths: usize,
    pub seed: u64,
    pub v_star: T,
    pub per_period: Vec<PeriodStats<T>>,
}

/// States and actions of one simulated path, periods `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath<T> {
    pub theta: Vec<T>,
    pub action: Vec<T>,
}

struct NormalStream(ChaCha8Rng);

impl NormalStream {
    fn new(seed: u64, path: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path as u64);
        Self(rng)
    }

    /// Standard normal from exactly one 64-bit word.
    fn next(&mut self) -> f64 {
        let u = ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
    }
}

fn run_path<T: Scalar>(
    params: &ModelParams<T>,
    rows: &[PolicyRow<T>],
    seed: u64,
    path: usize,
    mut visit: impl FnMut(usize, T, T),
) {
    let mut z = NormalStream::new(seed, path);
    let sigma = params.sigma_sq().sqrt();
    let mut theta = params.sigma0_sq().sqrt() * T::lit(z.next());
    let mut mean = T::zero();
    for (i, row) in rows.iter().enumerate() {
        let shock = T::lit(z.next());
        let noise = T::lit(z.next());
        theta = params.rho() * theta + sigma * shock;
        let prior = params.rho() * mean;
        mean = if row.x_t > T::zero() {
            let signal = theta + noise / row.x_t.sqrt();
            row.v_t * (prior / row.p_t + row.x_t * signal)
        } else {
            prior
        };
        visit(i, theta, mean);
    }
}

/// Replays a single path.
pub fn sample_path<T: Scalar>(
    params: &ModelParams<T>,
    horizon: usize,
    seed: u64,
    path: usize,
) -> Result<SamplePath<T>> {
    let v_star = solve_v_star(params, T::lit(DEFAULT_TOL))?;
    let trace = trace_with_target(params, v_star, horizon)?;
    let mut out = SamplePath {
        theta: Vec::with_capacity(horizon),
        action: Vec::with_capacity(horizon),
    };
    run_path(params, &trace.rows, seed, path, |_, th, a| {
        out.theta.push(th);
        out.action.push(a);
    });
    Ok(out)
}

#[derive(Clone, Copy, Default)]
struct Moments<T> {
    s1: CompensatedSum<T>,
    s2: CompensatedSum<T>,
}

impl<T: Scalar> Moments<T> {
    fn push(&mut self, x: T) {
        self.s1.add(x);
        self.s2.add(x * x);
    }

    fn merge(&mut self, o: &Self) {
        self.s1.merge(&o.s1);
        self.s2.merge(&o.s2);
    }

    fn mean_se(&self, n: usize) -> (T, Option<T>) {
        let nf = T::from_usize(n).unwrap();
        let mean = self.s1.value() / nf;
        if n < 2 {
            return (mean, None);
        }
        let ss = (self.s2.value() - self.s1.value() * mean).max(T::zero());
        let var = ss / (nf - T::one());
        (mean, Some((var / nf).sqrt()))
    }
}

#[derive(Clone, Copy, Default)]
struct PeriodAcc<T> {
    err: Moments<T>,
    sq: Moments<T>,
    cost: Moments<T>,
}

/// Simulates `cfg.n_paths` independent paths and aggregates per period.
pub fn simulate_paths<T: Scalar>(params: &ModelParams<T>, cfg: &SimConfig) -> Result<EnsembleStats<T>> {
    cfg.validate()?;
    let v_star = solve_v_star(params, T::lit(DEFAULT_TOL))?;
    let trace = trace_with_target(params, v_star, cfg.horizon)?;
    let rows = &trace.rows;
    let c = params.c();

    let chunks: Vec<Vec<PeriodAcc<T>>> = (0..cfg.n_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![PeriodAcc::<T>::default(); rows.len()];
            for path in k * CHUNK..((k + 1) * CHUNK).min(cfg.n_paths) {
                run_path(params, rows, cfg.seed, path, |i, theta, a| {
                    let e = a - theta;
                    let sq = e * e;
                    acc[i].err.push(e);
                    acc[i].sq.push(sq);
                    acc[i].cost.push(sq + c * rows[i].x_t);
                });
            }
            acc
        })
        .collect();

    let mut total = vec![PeriodAcc::<T>::default(); rows.len()];
    for chunk in &chunks {
        for (t, a) in total.iter_mut().zip(chunk) {
            t.err.merge(&a.err);
            t.sq.merge(&a.sq);
            t.cost.merge(&a.cost);
        }
    }

    let per_period = rows
        .iter()
        .zip(&total)
        .map(|(row, acc)| {
            let (mse_emp, mse_se) = acc.sq.mean_se(cfg.n_paths);
            let (bias_emp, bias_se) = acc.err.mean_se(cfg.n_paths);
            let (cost_emp, cost_se) = acc.cost.mean_se(cfg.n_paths);
            PeriodStats {
                t: row.t,
                p_t: row.p_t,
                v_t: row.v_t,
                x_t: row.x_t,
                cost_t: row.cost_t,
                mse_emp,
                mse_se,
                bias_emp,
                bias_se,
                cost_emp,
                cost_se,
            }
        })
        .collect();

    Ok(EnsembleStats {
        n_paths: cfg.n_paths,
        seed: cfg.seed,
        v_star,
        per_period,
    })
}

/// Mean realized cost `(a_t - theta_t)^2 + c x_t` and its standard error,
/// per period.
pub fn realized_cost_stats<T: Scalar>(params: &ModelParams<T>, cfg: &SimConfig) -> Result<Vec<(T, Option<T>)>> {
    Ok(simulate_paths(params, cfg)?
        .per_period
        .iter()
        .map(|s| (s.cost_emp, s.cost_se))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(r: f64, s0: f64, s2: f64, c: f64, d: f64) -> ModelParams<f64> {
        ModelParams::new(r, s0, s2, c, d).unwrap()
    }

    fn cfg(horizon: usize, n_paths: usize, seed: u64) -> SimConfig {
        SimConfig { horizon, n_paths, seed }
    }

    #[test]
    fn rejects_empty_config() {
        let p = mp(0.5, 0.0, 1.0, 1.0, 0.0);
        assert!(simulate_paths(&p, &cfg(0, 10, 1)).is_err());
        assert!(simulate_paths(&p, &cfg(3, 0, 1)).is_err());
    }

    #[test]
    fn normal_draws_look_standard() {
        let mut z = NormalStream::new(7, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| z.next()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64 / (var * var);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.015);
        assert!((kurt - 3.0).abs() < 0.08);
    }

    #[test]
    fn deterministic_given_seed() {
        let p = mp(0.7, 1.0, 1.0, 0.5, 0.6);
        let a = simulate_paths(&p, &cfg(10, 5000, 42)).unwrap();
        let b = simulate_paths(&p, &cfg(10, 5000, 42)).unwrap();
        assert_eq!(a, b);
        let c = simulate_paths(&p, &cfg(10, 5000, 43)).unwrap();
        assert_ne!(a.per_period[3].mse_emp, c.per_period[3].mse_emp);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let p = mp(0.7, 1.0, 1.0, 0.5, 0.6);
        let a = simulate_paths(&p, &cfg(8, 10_000, 9)).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_paths(&p, &cfg(8, 10_000, 9)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn paths_do_not_depend_on_ensemble_size() {
        let p = mp(0.7, 1.0, 1.0, 0.5, 0.6);
        let first = sample_path(&p, 6, 11, 0).unwrap();
        for n in [1, 3, 5000] {
            let s = simulate_paths(&p, &cfg(6, n, 11)).unwrap();
            if n == 1 {
                for (i, st) in s.per_period.iter().enumerate() {
                    let e = first.action[i] - first.theta[i];
                    assert_eq!(st.mse_emp, e * e);
                    assert_eq!(st.bias_emp, e);
                }
            }
        }
        assert_eq!(sample_path(&p, 6, 11, 3).unwrap(), sample_path(&p, 6, 11, 3).unwrap());
        assert_ne!(sample_path(&p, 6, 11, 3).unwrap(), sample_path(&p, 6, 11, 4).unwrap());
    }

    #[test]
    fn single_path_has_no_standard_error() {
        let p = mp(0.5, 0.0, 1.0, 1.0, 0.0);
        let costs = realized_cost_stats(&p, &cfg(3, 1, 5)).unwrap();
        let path = sample_path(&p, 3, 5, 0).unwrap();
        for (t, (mean, se)) in costs.iter().enumerate() {
            assert!(se.is_none());
            let x = [0.0, 0.2, 0.2][t];
            let e = path.action[t] - path.theta[t];
            assert!((mean - (e * e + x)).abs() < 1e-15);
        }
    }

    #[test]
    fn worked_example_mse_and_cost() {
        let p = mp(0.5, 0.0, 1.0, 1.0, 0.0);
        let s = simulate_paths(&p, &cfg(3, 100_000, 2024)).unwrap();
        let t2 = &s.per_period[1];
        assert!((t2.mse_emp - 1.0).abs() <= 3.0 * t2.mse_se.unwrap());
        assert!((t2.cost_emp - 1.2).abs() <= 3.0 * t2.cost_se.unwrap());
        // Information cost is deterministic, so cost and MSE differ by exactly c x_t.
        for st in &s.per_period {
            assert!((st.cost_emp - st.mse_emp - st.x_t).abs() < 1e-12);
            assert!((st.cost_se.unwrap() - st.mse_se.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn no_acquisition_keeps_prior_mean() {
        // Cost bound fails and sigma0^2 = 0: no signal is ever bought.
        let p = mp(0.5, 0.0, 1.0, 4.0, 0.0);
        let path = sample_path(&p, 30, 3, 17).unwrap();
        assert!(path.action.iter().all(|&a| a == 0.0));
        let s = simulate_paths(&p, &cfg(30, 100_000, 3)).unwrap();
        let mut v = 0.0;
        for st in &s.per_period {
            v = 0.25 * v + 1.0;
            assert_eq!(st.x_t, 0.0);
            assert!((st.v_t - v).abs() < 1e-12);
            assert!((st.mse_emp - v).abs() <= 3.5 * st.mse_se.unwrap());
        }
    }

    #[test]
    fn posterior_mean_is_unbiased() {
        let p = mp(0.85, 2.0, 0.7, 0.4, 0.9);
        let s = simulate_paths(&p, &cfg(15, 50_000, 77)).unwrap();
        for st in &s.per_period {
            assert!(st.bias_emp.abs() <= 3.5 * st.bias_se.unwrap(), "t={} {}", st.t, st.bias_emp);
        }
    }

    #[test]
    fn steady_state_mse_has_no_trend() {
        let p = mp(0.8, 0.0, 1.0, 1.0, 0.7);
        let rep = crate::steady::steady_report(&p, 1e-12).unwrap();
        let ts = rep.t_star.unwrap() as usize;
        for seed in [1u64, 2, 3] {
            let s = simulate_paths(&p, &cfg(ts + 20, 40_000, seed)).unwrap();
            let tail: Vec<_> = s.per_period.iter().filter(|st| st.t >= ts).collect();
            assert!(tail.iter().all(|st| st.v_t == rep.v_star));
            // Weighted least-squares slope of MSE on t.
            let w: Vec<f64> = tail.iter().map(|st| st.mse_se.unwrap().powi(-2)).collect();
            let sw: f64 = w.iter().sum();
            let tbar = tail.iter().zip(&w).map(|(st, w)| w * st.t as f64).sum::<f64>() / sw;
            let ybar = tail.iter().zip(&w).map(|(st, w)| w * st.mse_emp).sum::<f64>() / sw;
            let sxx: f64 = tail.iter().zip(&w).map(|(st, w)| w * (st.t as f64 - tbar).powi(2)).sum();
            let sxy: f64 = tail
                .iter()
                .zip(&w)
                .map(|(st, w)| w * (st.t as f64 - tbar) * (st.mse_emp - ybar))
                .sum();
            let slope = sxy / sxx;
            let slope_se = sxx.recip().sqrt();
            assert!(slope.abs() <= 3.0 * slope_se, "seed {seed}: slope {slope} se {slope_se}");
        }
    }

    #[test]
    fn single_precision_runs() {
        let p = ModelParams::<f32>::new(0.5, 0.0, 1.0, 1.0, 0.0).unwrap();
        let s = simulate_paths(&p, &cfg(3, 20_000, 1)).unwrap();
        let t2 = &s.per_period[1];
        assert!((t2.mse_emp - 1.0).abs() <= 3.5 * t2.mse_se.unwrap());
    }
}
