//! Comparative statics of the steady state.
//!
//! The analytic table codes the implicit-differentiation results directly:
//!
//! | entry       | formula                                               |
//! |-------------|-------------------------------------------------------|
//! | dV*/d delta | `rho^2 / P*^2 / f'(V*)`                               |
//! | dV*/dc      | `-1 / c^2 / f'(V*)`                                   |
//! | dP*/d rho   | `-(2 rho / f'(V*)) (1/V*^2 + 1/c)`                    |
//! | dV*/d rho   | `(dP*/d rho - 2 rho V*) / rho^2`                      |
//! | dV*/d s2    | `-(2 delta rho^2 / P*^3) / f'(V*)`                    |
//! | dC*/d rho   | `c/P*^2 ((1 - delta) dP*/d rho + 2 rho delta V*)`     |
//! | dC*/d delta | `c (1 - delta) rho^2 / P*^2 dV*/d delta`              |
//! | dC*/dc      | `c (1 - delta) rho^2 / P*^2 dV*/dc + x*`              |
//! | dC*/d s2    | `c/P*^2 ((1 - delta) rho^2 dV*/d s2 + 1)`             |
//!
//! Remaining entries follow from `P* = rho^2 V* + sigma^2` and
//! `x* = 1/V* - 1/P*` by the chain rule. The cost rows are deliberately *not*
//! taken from the chain rule, so that the chain-rule identity
//! `dC* = dV* + c dx* (+ x* for c)` is a real check on the algebra above.

use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;
use crate::steady::{f_derivative_unchecked, report_from_target, rho_star, solve_v_star, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    VStar,
    XStar,
    PStar,
    CStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    Rho,
    Delta,
    C,
    SigmaSq,
}

impl Quantity {
    pub const ALL: [Quantity; 4] = [Quantity::VStar, Quantity::XStar, Quantity::PStar, Quantity::CStar];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::VStar => "v_star",
            Quantity::XStar => "x_star",
            Quantity::PStar => "p_star",
            Quantity::CStar => "c_star",
        }
    }
}

impl Primitive {
    pub const ALL: [Primitive; 4] = [Primitive::Rho, Primitive::Delta, Primitive::C, Primitive::SigmaSq];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Rho => "rho",
            Primitive::Delta => "delta",
            Primitive::C => "c",
            Primitive::SigmaSq => "sigma_sq",
        }
    }
}

/// `d quantity / d primitive`, indexed `[quantity][primitive]` in the order
/// of [`Quantity::ALL`] and [`Primitive::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeTable<T> {
    pub entries: [[T; 4]; 4],
}

impl<T: Scalar> DerivativeTable<T> {
    pub fn get(&self, q: Quantity, p: Primitive) -> T {
        self.entries[q as usize][p as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Quantity, Primitive, T)> + '_ {
        Quantity::ALL
            .into_iter()
            .flat_map(move |q| Primitive::ALL.into_iter().map(move |p| (q, p, self.get(q, p))))
    }
}

fn require_interior<T: Scalar>(params: &ModelParams<T>) -> Result<()> {
    if params.cost_assumption().holds {
        Ok(())
    } else {
        Err(ModelError::Domain(
            "comparative statics need the cost bound to hold (x* > 0)".into(),
        ))
    }
}

/// Closed-form derivative table at the solved steady state.
pub fn analytic_statics<T: Scalar>(params: &ModelParams<T>) -> Result<DerivativeTable<T>> {
    require_interior(params)?;
    let v = solve_v_star(params, T::lit(DEFAULT_TOL))?;
    Ok(analytic_at(params, v))
}

fn analytic_at<T: Scalar>(params: &ModelParams<T>, v: T) -> DerivativeTable<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let (rho, delta, c) = (params.rho(), params.delta(), params.c());
    let r2 = rho * rho;
    let p = params.predict_unchecked(v);
    let p2 = p * p;
    let x = v.recip() - p.recip();
    let fp = f_derivative_unchecked(params, v);

    let dv_ddelta = r2 / p2 / fp;
    let dv_dc = -(c * c).recip() / fp;
    let dp_drho = -(two * rho / fp) * ((v * v).recip() + c.recip());
    let dv_drho = (dp_drho - two * rho * v) / r2;
    let dv_ds2 = -(two * delta * r2 / (p2 * p)) / fp;

    let dp_ddelta = r2 * dv_ddelta;
    let dp_dc = r2 * dv_dc;
    let dp_ds2 = r2 * dv_ds2 + one;

    let dx = |dv: T, dp: T| -dv / (v * v) + dp / p2;

    let dc_drho = c / p2 * ((one - delta) * dp_drho + two * rho * delta * v);
    let dc_ddelta = c * (one - delta) * r2 / p2 * dv_ddelta;
    let dc_dc = c * (one - delta) * r2 / p2 * dv_dc + x;
    let dc_ds2 = c / p2 * ((one - delta) * r2 * dv_ds2 + one);

    DerivativeTable {
        entries: [
            [dv_drho, dv_ddelta, dv_dc, dv_ds2],
            [dx(dv_drho, dp_drho), dx(dv_ddelta, dp_ddelta), dx(dv_dc, dp_dc), dx(dv_ds2, dp_ds2)],
            [dp_drho, dp_ddelta, dp_dc, dp_ds2],
            [dc_drho, dc_ddelta, dc_dc, dc_ds2],
        ],
    }
}

/// `dV*/d rho` straight from implicit differentiation of the first-order
/// condition in `rho`, without going through `dP*/d rho`:
/// `(-f'/2) dV*/d rho = delta rho (rho^2 V* - sigma^2) / P*^3`.
pub fn dv_drho_direct<T: Scalar>(params: &ModelParams<T>, v: T) -> T {
    let (rho, s2) = (params.rho(), params.sigma_sq());
    let p = params.predict_unchecked(v);
    let fp = f_derivative_unchecked(params, v);
    params.delta() * rho * (rho * rho * v - s2) / (p * p * p) / (-fp / T::lit(2.0))
}

/// Steady state at one finite-difference point, kept in the form needed to
/// difference it against another point.
struct FdPoint<T> {
    rho: T,
    sigma_sq: T,
    c: T,
    v: T,
    p: T,
    x: T,
}

fn fd_point<T: Scalar>(params: &ModelParams<T>) -> Result<FdPoint<T>> {
    // Tightest tolerance the root finder can honour in this precision.
    let v = solve_v_star(params, T::epsilon())?;
    let rep = report_from_target(params, v)?;
    if !rep.assumption_holds {
        return Err(ModelError::Domain(format!(
            "finite-difference point {:?} crosses the cost bound",
            params.raw()
        )));
    }
    Ok(FdPoint {
        rho: params.rho(),
        sigma_sq: params.sigma_sq(),
        c: params.c(),
        v: rep.v_star,
        p: rep.p_star,
        x: rep.x_star,
    })
}

/// `[V*, x*, P*, C*]` at `a` minus the same at `b`.
///
/// Subtracting two rounded reports loses every digit of an output whose
/// derivative is small next to its level (`C*` in `delta` at low `rho`, for
/// one). Only `V*` is differenced directly; the rest follow from
/// `P = rho^2 V + sigma^2`, `x = 1/V - 1/P` and `C = V + c x` rearranged so
/// no two large terms cancel.
fn fd_diff<T: Scalar>(a: &FdPoint<T>, b: &FdPoint<T>) -> [T; 4] {
    let dv = a.v - b.v;
    let drho_sq = (a.rho - b.rho) * (a.rho + b.rho);
    let dp = a.rho * a.rho * dv + drho_sq * b.v + (a.sigma_sq - b.sigma_sq);
    let dx = dp / (a.p * b.p) - dv / (a.v * b.v);
    let dc = dv + a.c * dx + (a.c - b.c) * b.x;
    [dv, dx, dp, dc]
}

fn perturb<T: Scalar>(params: &ModelParams<T>, which: Primitive, value: T) -> Result<ModelParams<T>> {
    params
        .with(|raw| match which {
            Primitive::Rho => raw.rho = value,
            Primitive::Delta => raw.delta = value,
            Primitive::C => raw.c = value,
            Primitive::SigmaSq => raw.sigma_sq = value,
        })
        .map_err(|e| ModelError::Domain(format!("perturbing {} leaves the valid region: {e}", which.name())))
}

/// Central differences of the steady-state outputs with relative step
/// `step`. `rho`, `c` and `sigma^2` move by `theta (1 +- step)`; `delta`
/// moves additively by `step`, one-sided (second order) when `delta < step`.
pub fn finite_difference_statics<T: Scalar>(params: &ModelParams<T>, step: T) -> Result<DerivativeTable<T>> {
    require_interior(params)?;
    if !(step > T::zero() && step < T::lit(0.1)) {
        return Err(ModelError::Domain(format!("step must lie in (0, 0.1), got {step}")));
    }
    let two = T::lit(2.0);
    let mut entries = [[T::zero(); 4]; 4];
    for (j, which) in Primitive::ALL.into_iter().enumerate() {
        let base = match which {
            Primitive::Rho => params.rho(),
            Primitive::Delta => params.delta(),
            Primitive::C => params.c(),
            Primitive::SigmaSq => params.sigma_sq(),
        };
        let h = if which == Primitive::Delta { step } else { base * step };
        let col = if which == Primitive::Delta && base < h {
            let f0 = fd_point(&perturb(params, which, base)?)?;
            let d1 = fd_diff(&fd_point(&perturb(params, which, base + h)?)?, &f0);
            let d2 = fd_diff(&fd_point(&perturb(params, which, base + two * h)?)?, &f0);
            let mut col = [T::zero(); 4];
            for i in 0..4 {
                col[i] = (T::lit(4.0) * d1[i] - d2[i]) / (two * h);
            }
            col
        } else {
            let up = fd_point(&perturb(params, which, base + h)?)?;
            let down = fd_point(&perturb(params, which, base - h)?)?;
            fd_diff(&up, &down).map(|d| d / (two * h))
        };
        for i in 0..4 {
            entries[i][j] = col[i];
        }
    }
    Ok(DerivativeTable { entries })
}

/// Entrywise `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_discrepancy<T: Scalar>(a: &DerivativeTable<T>, b: &DerivativeTable<T>, floor: T) -> DerivativeTable<T> {
    let entries = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (x, y) = (a.entries[i][j], b.entries[i][j]);
            (x - y).abs() / x.abs().max(y.abs()).max(floor)
        })
    });
    DerivativeTable { entries }
}

/// Absolute floor used when relating discrepancies to near-zero entries.
pub const DISCREPANCY_FLOOR: f64 = 1e-9;

/// Verdict on one signed monotonicity claim.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignVerdict<T> {
    pub clause: &'static str,
    pub expected: String,
    pub value: T,
    pub pass: bool,
}

/// Checks the nine signed claims about how the steady state moves with the
/// primitives.
pub fn sign_audit<T: Scalar>(params: &ModelParams<T>, table: &DerivativeTable<T>) -> Vec<SignVerdict<T>> {
    use Primitive as P;
    use Quantity as Q;
    let zero = T::zero();
    let verdict = |clause: &'static str, value: T, positive: bool| SignVerdict {
        clause,
        expected: if positive { "> 0" } else { "< 0" }.to_string(),
        value,
        pass: if positive { value > zero } else { value < zero },
    };
    let mut out = vec![
        verdict("V* decreasing in delta", table.get(Q::VStar, P::Delta), false),
        verdict("x* increasing in delta", table.get(Q::XStar, P::Delta), true),
        verdict("V* increasing in c", table.get(Q::VStar, P::C), true),
        verdict("x* decreasing in c", table.get(Q::XStar, P::C), false),
        verdict("C* increasing in rho", table.get(Q::CStar, P::Rho), true),
        verdict("C* decreasing in delta", table.get(Q::CStar, P::Delta), false),
        verdict("C* increasing in c", table.get(Q::CStar, P::C), true),
        verdict("C* increasing in sigma_sq", table.get(Q::CStar, P::SigmaSq), true),
    ];

    let dv_drho = table.get(Q::VStar, P::Rho);
    // dV*/d rho = (dP*/d rho - 2 rho V*) / rho^2 cancels when delta = 0.
    let tiny = T::lit(1e-10) * (table.get(Q::PStar, P::Rho).abs() / (params.rho() * params.rho())).max(T::one());
    let rs = rho_star(params);
    let (expected, pass) = if params.delta() == zero {
        ("= 0 (delta = 0)".to_string(), dv_drho.abs() <= tiny)
    } else if params.rho() < rs {
        (format!("< 0 (rho < rho* = {rs})"), dv_drho < zero)
    } else if params.rho() > rs {
        (format!("> 0 (rho > rho* = {rs})"), dv_drho > zero)
    } else {
        (format!("= 0 (rho = rho* = {rs})"), dv_drho.abs() <= tiny)
    };
    out.push(SignVerdict {
        clause: "sign of dV*/d rho matches sign of rho - rho*",
        expected,
        value: dv_drho,
        pass,
    });
    out
}

/// Analytic table, finite-difference table, their worst disagreement and the
/// sign audit, in one value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticsReport<T> {
    pub analytic: DerivativeTable<T>,
    pub finite_diff: DerivativeTable<T>,
    pub step: T,
    pub rel_discrepancy: DerivativeTable<T>,
    pub max_rel_discrepancy: T,
    pub sign_audit: Vec<SignVerdict<T>>,
}

impl<T: Scalar> StaticsReport<T> {
    pub fn all_signs_pass(&self) -> bool {
        self.sign_audit.iter().all(|v| v.pass)
    }
}

pub fn statics_report<T: Scalar>(params: &ModelParams<T>, step: T) -> Result<StaticsReport<T>> {
    let analytic = analytic_statics(params)?;
    let finite_diff = finite_difference_statics(params, step)?;
    let rel = relative_discrepancy(&analytic, &finite_diff, T::lit(DISCREPANCY_FLOOR));
    let max_rel = rel.iter().map(|(_, _, e)| e).fold(T::zero(), T::max);
    Ok(StaticsReport {
        sign_audit: sign_audit(params, &analytic),
        analytic,
        finite_diff,
        step,
        rel_discrepancy: rel,
        max_rel_discrepancy: max_rel,
    })
}
