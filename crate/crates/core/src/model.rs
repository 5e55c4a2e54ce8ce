//! Model primitives and the elementary variance and cost algebra.
//!
//! The state follows `theta_t = rho * theta_{t-1} + eta_t` with
//! `eta_t ~ N(0, sigma_sq)` and `theta_0 ~ N(0, sigma0_sq)`. Each period the
//! agent buys a Gaussian signal of precision `x_t >= 0` at unit price `c` and
//! discounts the future at `delta`.

use serde::{Deserialize, Serialize};

use crate::error::{BoundViolation, ModelError, Result};
use crate::scalar::Scalar;

/// The five model primitives, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", into = "RawParams<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ModelParams<T> {
    rho: T,
    sigma0_sq: T,
    sigma_sq: T,
    c: T,
    delta: T,
}

/// Unvalidated five-tuple, as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams<T> {
    pub rho: T,
    pub sigma0_sq: T,
    pub sigma_sq: T,
    pub c: T,
    pub delta: T,
}

impl<T: Scalar> TryFrom<RawParams<T>> for ModelParams<T> {
    type Error = ModelError;

    fn try_from(raw: RawParams<T>) -> Result<Self> {
        validate_params(raw)
    }
}

impl<T: Scalar> From<ModelParams<T>> for RawParams<T> {
    fn from(p: ModelParams<T>) -> Self {
        RawParams {
            rho: p.rho,
            sigma0_sq: p.sigma0_sq,
            sigma_sq: p.sigma_sq,
            c: p.c,
            delta: p.delta,
        }
    }
}

/// Checks every bound and reports all violations at once.
pub fn validate_params<T: Scalar>(raw: RawParams<T>) -> Result<ModelParams<T>> {
    let zero = T::zero();
    let one = T::one();
    let mut bad = Vec::new();
    let mut check = |ok: bool, name: &'static str, value: T, constraint: &'static str| {
        if !ok {
            bad.push(BoundViolation {
                name,
                value: value.to_f64_lossy(),
                constraint,
            });
        }
    };
    // Negated comparisons so that NaN is rejected too.
    check(raw.rho > zero && raw.rho < one, "rho", raw.rho, "0 < rho < 1");
    check(
        raw.sigma0_sq >= zero && raw.sigma0_sq.is_finite(),
        "sigma0_sq",
        raw.sigma0_sq,
        "sigma0_sq >= 0",
    );
    check(
        raw.sigma_sq > zero && raw.sigma_sq.is_finite(),
        "sigma_sq",
        raw.sigma_sq,
        "sigma_sq > 0",
    );
    check(raw.c > zero && raw.c.is_finite(), "c", raw.c, "c > 0");
    check(raw.delta >= zero && raw.delta < one, "delta", raw.delta, "0 <= delta < 1");
    if bad.is_empty() {
        Ok(ModelParams {
            rho: raw.rho,
            sigma0_sq: raw.sigma0_sq,
            sigma_sq: raw.sigma_sq,
            c: raw.c,
            delta: raw.delta,
        })
    } else {
        Err(ModelError::InvalidParams(bad))
    }
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(rho: T, sigma0_sq: T, sigma_sq: T, c: T, delta: T) -> Result<Self> {
        validate_params(RawParams {
            rho,
            sigma0_sq,
            sigma_sq,
            c,
            delta,
        })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn sigma0_sq(&self) -> T {
        self.sigma0_sq
    }

    pub fn sigma_sq(&self) -> T {
        self.sigma_sq
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn raw(&self) -> RawParams<T> {
        (*self).into()
    }

    /// Copy with some fields replaced, revalidated.
    pub fn with(&self, edit: impl FnOnce(&mut RawParams<T>)) -> Result<Self> {
        let mut raw = self.raw();
        edit(&mut raw);
        validate_params(raw)
    }

    /// Next-period prediction variance `rho^2 V + sigma^2`.
    pub fn predict_variance(&self, v: T) -> Result<T> {
        if !(v >= T::zero()) {
            return Err(ModelError::Domain(format!(
                "posterior variance must be >= 0, got {v}"
            )));
        }
        Ok(self.predict_unchecked(v))
    }

    #[inline]
    pub(crate) fn predict_unchecked(&self, v: T) -> T {
        self.rho * self.rho * v + self.sigma_sq
    }

    /// Prediction variance of `theta_1` before any signal.
    pub fn first_prediction(&self) -> T {
        self.predict_unchecked(self.sigma0_sq)
    }

    /// No-learning limit `sigma^2 / (1 - rho^2)`.
    pub fn no_learning_variance(&self) -> T {
        self.sigma_sq / (T::one() - self.rho * self.rho)
    }

    /// `C(V, P) = V + c (1/V - 1/P)`, split into its two components.
    pub fn period_cost(&self, v: T, p: T) -> Result<PeriodCostBreakdown<T>> {
        if !(v > T::zero()) {
            return Err(ModelError::Domain(format!(
                "posterior variance must be > 0, got {v}"
            )));
        }
        if !(v <= p) {
            return Err(ModelError::Domain(format!(
                "posterior variance {v} exceeds prediction variance {p} (negative precision)"
            )));
        }
        let x = v.recip() - p.recip();
        // V = P can round to a tiny negative difference.
        let x = x.max(T::zero());
        let information_cost = self.c * x;
        Ok(PeriodCostBreakdown {
            posterior_variance: v,
            signal_precision: x,
            action_cost: v,
            information_cost,
            total: v + information_cost,
        })
    }

    #[inline]
    pub(crate) fn cost_unchecked(&self, v: T, p: T) -> T {
        v + self.c * (v.recip() - p.recip())
    }

    /// Upper bound on `c` under which the agent keeps acquiring information
    /// in steady state: `sigma^4 / ((1 - delta rho^2)(1 - rho^2)^2)`.
    pub fn cost_assumption(&self) -> CostAssumption<T> {
        let one = T::one();
        let r2 = self.rho * self.rho;
        let bound = self.sigma_sq * self.sigma_sq / ((one - self.delta * r2) * (one - r2) * (one - r2));
        CostAssumption {
            bound,
            holds: self.c < bound,
        }
    }
}

/// Verdict on the steady-state cost bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostAssumption<T> {
    pub bound: T,
    pub holds: bool,
}

/// One period's expected cost, split into action and information parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodCostBreakdown<T> {
    pub posterior_variance: T,
    pub signal_precision: T,
    pub action_cost: T,
    pub information_cost: T,
    pub total: T,
}

/// Gaussian posterior variance `(1/P + x)^-1`.
pub fn posterior_variance<T: Scalar>(p: T, x: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(ModelError::Domain(format!(
            "prediction variance must be > 0, got {p}"
        )));
    }
    if !(x >= T::zero()) {
        return Err(ModelError::Domain(format!("precision must be >= 0, got {x}")));
    }
    if x == T::zero() {
        return Ok(p);
    }
    Ok((p.recip() + x).recip())
}

/// Signal precision that moves prediction variance `p` to `v_target`:
/// `max(1/v_target - 1/p, 0)`.
pub fn precision_for<T: Scalar>(p: T, v_target: T) -> Result<T> {
    if !(p > T::zero()) {
        return Err(ModelError::Domain(format!(
            "prediction variance must be > 0, got {p}"
        )));
    }
    if !(v_target > T::zero()) {
        return Err(ModelError::Domain(format!(
            "target variance must be > 0, got {v_target}"
        )));
    }
    Ok(precision_unchecked(p, v_target))
}

#[inline]
pub(crate) fn precision_unchecked<T: Scalar>(p: T, v_target: T) -> T {
    if v_target >= p {
        T::zero()
    } else {
        (v_target.recip() - p.recip()).max(T::zero())
    }
}
