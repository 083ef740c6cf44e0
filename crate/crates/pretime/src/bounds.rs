//! Closed-form settling-time bounds and the conservatism analysis built on
//! them.
//!
//! `gamma_bound` is the exact least upper bound of the settling-time
//! function,
//!
//! ```text
//! gamma = Gamma(m_p) Gamma(m_q) / (alpha^k Gamma(k) (q - p)) * (alpha/beta)^m_p,
//! ```
//!
//! with `m_p = (1 - k p)/(q - p)` and `m_q = (k q - 1)/(q - p)`;
//! `t_max_classical` is the conservative two-term estimate
//! `1/(alpha^k (1 - p k)) + 1/(beta^k (q k - 1))`. Their quotient is the
//! conservatism ratio, which `t_max_of_rho` exposes as a function of the
//! gain ratio `rho` at fixed exponents (`alpha = rho`, `beta = 1/rho`, with
//! the `gamma/T_c` gain folded in so the true least upper bound stays at
//! `T_c` across the sweep). Everything is evaluated in log space and
//! exponentiated once, surviving gain ratios far beyond 1e12.

use std::fmt;

use crate::params::{
    self, ConstraintViolation, ParamError, PredefinedParams, SecondOrderParams, SystemParams,
};
use crate::quadrature::{self, QuadratureError};
use crate::specfun::ln_gamma_unchecked;

#[derive(Debug, Clone, PartialEq)]
pub enum BoundsError {
    /// The log-space magnitude of the result exceeds the representable f64
    /// range (extreme gain ratios combined with a large `m_p`).
    Overflow { ln_value: f64 },
    /// Parameters failed class validation.
    InvalidParams(ParamError),
}

impl BoundsError {
    /// Log of the unrepresentable value, NaN when the error is not an
    /// overflow.
    pub fn ln_value(&self) -> f64 {
        match self {
            Self::Overflow { ln_value } => *ln_value,
            Self::InvalidParams(_) => f64::NAN,
        }
    }
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Overflow { ln_value } => {
                write!(f, "bound not representable in f64 (ln value = {ln_value})")
            }
            Self::InvalidParams(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BoundsError {}

impl From<ParamError> for BoundsError {
    fn from(e: ParamError) -> Self {
        Self::InvalidParams(e)
    }
}

/// Least upper bound and classical bound side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// Exact least upper bound of the settling time.
    pub gamma: f64,
    /// Classical two-term upper estimate.
    pub t_max_classical: f64,
    /// `t_max_classical / gamma`; at least 1 (the estimate can never
    /// undercut the exact supremum).
    pub conservatism_ratio: f64,
    /// Set when the classical bound or the ratio overflowed to infinity;
    /// the quotient is reported uncapped.
    pub overflowed: bool,
}

/// `ln gamma(sp)`; always finite for valid parameters within f64.
pub fn ln_gamma_bound(sp: &SystemParams) -> f64 {
    let e = sp.exponents();
    ln_gamma_unchecked(e.m_p) + ln_gamma_unchecked(e.m_q) - ln_gamma_unchecked(sp.k())
        - sp.k() * sp.alpha().ln()
        - (sp.q() - sp.p()).ln()
        + e.m_p * (sp.alpha().ln() - sp.beta().ln())
}

/// Exact least upper bound of the settling-time function of the plant.
pub fn gamma_bound(sp: &SystemParams) -> Result<f64, BoundsError> {
    let ln_value = ln_gamma_bound(sp);
    let value = ln_value.exp();
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(BoundsError::Overflow { ln_value })
    }
}

/// Classical two-term upper estimate of the settling time. May overflow to
/// infinity for extreme gains; no error is raised.
pub fn t_max_classical(sp: &SystemParams) -> f64 {
    let pk = sp.p() * sp.k();
    let qk = sp.q() * sp.k();
    (-sp.k() * sp.alpha().ln()).exp() / (1.0 - pk) + (-sp.k() * sp.beta().ln()).exp() / (qk - 1.0)
}

/// Classical estimate for the gained system: `(T_c / gamma) * t_max_classical`.
pub fn t_max_predefined(pp: &PredefinedParams) -> f64 {
    t_max_classical(pp.base()) / pp.gain()
}

fn ln_k_factor(p: f64, q: f64, k: f64) -> f64 {
    let m_p = (-k).mul_add(p, 1.0) / (q - p);
    let m_q = k.mul_add(q, -1.0) / (q - p);
    ln_gamma_unchecked(m_p) + ln_gamma_unchecked(m_q) - ln_gamma_unchecked(k) - (q - p).ln()
}

fn t_max_rho_terms(
    rho: f64,
    p: f64,
    q: f64,
    k: f64,
    t_c: f64,
    tail_exponent: f64,
) -> Result<f64, BoundsError> {
    params::validate_exponents(p, q, k)?;
    if !rho.is_finite() || rho <= 0.0 {
        return Err(BoundsError::InvalidParams(params::single_violation(
            ConstraintViolation::NotPositive { field: "rho", value: rho },
        )));
    }
    if !t_c.is_finite() || t_c <= 0.0 {
        return Err(BoundsError::InvalidParams(params::single_violation(
            ConstraintViolation::NotPositive { field: "t_c", value: t_c },
        )));
    }
    let m_p = (1.0 - k * p) / (q - p);
    let ln_base = t_c.ln() - ln_k_factor(p, q, k);
    let ln_first = ln_base - 2.0 * m_p * rho.ln() - (1.0 - k * p).ln();
    let ln_second = ln_base + tail_exponent * rho.ln() - (k * q - 1.0).ln();
    let value = ln_first.exp() + ln_second.exp();
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(BoundsError::Overflow { ln_value: ln_first.max(ln_second) })
    }
}

/// Classical estimate of the gained system as a function of the gain ratio:
/// `alpha = rho`, `beta = 1/rho` at fixed exponents, with the `gamma/T_c`
/// gain applied. Obtained by substituting into the classical bound:
///
/// ```text
/// T_max(rho) = (T_c / K) * ( rho^(-2 m_p) / (1 - p k)
///                          + rho^(2 (k - m_p)) / (q k - 1) ),
/// K = Gamma(m_p) Gamma(m_q) / (Gamma(k) (q - p)).
/// ```
///
/// The least upper bound of the actual settling time stays at `T_c` for
/// every `rho`, while this estimate diverges on both ends and attains its
/// minimum exactly at `rho = 1`.
pub fn t_max_of_rho(rho: f64, p: f64, q: f64, k: f64, t_c: f64) -> Result<f64, BoundsError> {
    let m_p = (-k).mul_add(p, 1.0) / (q - p);
    t_max_rho_terms(rho, p, q, k, t_c, 2.0 * (k - m_p))
}

/// Variant of [`t_max_of_rho`] with the tail exponent `2 (k - 2 m_p)`
/// instead of `2 (k - m_p)`. This variant is sometimes quoted for the
/// sweep but does not follow from the substitution and does not reproduce
/// the reference values; it is kept solely so the `verify` pipeline can
/// report both values side by side. The two agree at `rho = 1`.
pub fn t_max_of_rho_alt_tail(
    rho: f64,
    p: f64,
    q: f64,
    k: f64,
    t_c: f64,
) -> Result<f64, BoundsError> {
    let m_p = (-k).mul_add(p, 1.0) / (q - p);
    t_max_rho_terms(rho, p, q, k, t_c, 2.0 * (k - 2.0 * m_p))
}

/// Conservative two-phase estimate for the second-order controller: the
/// reaching phase bound plus the reduced-order sliding phase bound, each in
/// classical form scaled by its `T_c / gamma`.
pub fn t_max_second_order(sop: &SecondOrderParams) -> f64 {
    let reaching = sop.t_c2() / sop.gamma2() * t_max_classical(sop.outer());
    let sliding = sop.t_c1() / sop.gamma1() * t_max_classical(&sop.inner());
    reaching + sliding
}

/// Exact settling time `T(x0)` of the plant, by quadrature. Even in `x0`.
pub fn settling_time(sp: &SystemParams, x0: f64, tol: f64) -> Result<f64, QuadratureError> {
    if x0.is_nan() {
        return Err(QuadratureError::InvalidInput { what: "x0", value: x0 });
    }
    Ok(quadrature::integrate_settling(sp, x0.abs(), tol)?.value)
}

/// Exact settling time of the gained (predefined-time) system; its supremum
/// over `x0` equals `T_c`.
pub fn settling_time_predefined(
    pp: &PredefinedParams,
    x0: f64,
    tol: f64,
) -> Result<f64, QuadratureError> {
    Ok(settling_time(pp.base(), x0, tol)? / pp.gain())
}

/// Bound report for the plant without a prescribed time: exact sup versus
/// classical estimate.
pub fn fixed_time_report(sp: &SystemParams) -> Result<BoundReport, BoundsError> {
    let gamma = gamma_bound(sp)?;
    let t_max = t_max_classical(sp);
    let ratio = t_max / gamma;
    Ok(BoundReport {
        gamma,
        t_max_classical: t_max,
        conservatism_ratio: ratio,
        overflowed: !t_max.is_finite() || !ratio.is_finite(),
    })
}

/// Bound report for the gained system: the least upper bound is `T_c` by
/// construction, the classical estimate scales accordingly, and the ratio
/// quantifies the overestimation.
pub fn conservatism_report(pp: &PredefinedParams) -> BoundReport {
    let t_max = t_max_predefined(pp);
    let ratio = t_max / pp.t_c();
    BoundReport {
        gamma: pp.t_c(),
        t_max_classical: t_max,
        conservatism_ratio: ratio,
        overflowed: !t_max.is_finite() || !ratio.is_finite(),
    }
}
