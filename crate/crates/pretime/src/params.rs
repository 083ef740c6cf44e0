//! Validated parameter bundles for the fixed-time system class and the
//! controllers built on top of it.
//!
//! The plant class is `dx/dt = -(alpha*|x|^p + beta*|x|^q)^k * sign(x)` with
//! all five parameters positive and the exponent products constrained by
//! `k*p < 1` and `k*q > 1`. Every bundle here is validated on construction,
//! so downstream code can assume the class constraints hold.

use std::fmt;

use crate::bounds;

/// A single failed validity constraint, named so callers can report exactly
/// what was wrong.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintViolation {
    /// A field was NaN or infinite.
    NotFinite { field: &'static str, value: f64 },
    /// A field that must be strictly positive was not.
    NotPositive { field: &'static str, value: f64 },
    /// A field that must be nonnegative was negative.
    Negative { field: &'static str, value: f64 },
    /// `k*p < 1` failed.
    KpNotLessThanOne { kp: f64 },
    /// `k*q > 1` failed.
    KqNotGreaterThanOne { kq: f64 },
    /// `p < q` failed. Implied by the two exponent constraints but surfaced
    /// separately for diagnostics.
    PNotLessThanQ { p: f64, q: f64 },
    /// `zeta >= delta` failed (robustness margin below the disturbance bound).
    ZetaBelowDelta { zeta: f64, delta: f64 },
    /// The derived gain `gamma/T_c` is not representable in f64.
    GainNotRepresentable { ln_gamma: f64 },
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotFinite { field, value } => write!(f, "{field} must be finite (got {value})"),
            Self::NotPositive { field, value } => {
                write!(f, "{field} > 0 violated (got {value})")
            }
            Self::Negative { field, value } => {
                write!(f, "{field} >= 0 violated (got {value})")
            }
            Self::KpNotLessThanOne { kp } => write!(f, "k*p < 1 violated (k*p = {kp})"),
            Self::KqNotGreaterThanOne { kq } => write!(f, "k*q > 1 violated (k*q = {kq})"),
            Self::PNotLessThanQ { p, q } => write!(f, "p < q violated (p = {p}, q = {q})"),
            Self::ZetaBelowDelta { zeta, delta } => {
                write!(f, "zeta >= delta violated (zeta = {zeta}, delta = {delta})")
            }
            Self::GainNotRepresentable { ln_gamma } => {
                write!(f, "gamma/T_c not representable in f64 (ln gamma = {ln_gamma})")
            }
        }
    }
}

/// Validation failure carrying every violated constraint, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamError {
    violations: Vec<ConstraintViolation>,
}

impl ParamError {
    fn new(violations: Vec<ConstraintViolation>) -> Self {
        debug_assert!(!violations.is_empty());
        Self { violations }
    }

    pub fn violations(&self) -> &[ConstraintViolation] {
        &self.violations
    }
}

/// Wraps one violation in a [`ParamError`] (for checks living outside this
/// module, e.g. the sweep entry points).
pub(crate) fn single_violation(v: ConstraintViolation) -> ParamError {
    ParamError::new(vec![v])
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid parameters: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParamError {}

fn check_finite(out: &mut Vec<ConstraintViolation>, field: &'static str, value: f64) -> bool {
    if value.is_finite() {
        true
    } else {
        out.push(ConstraintViolation::NotFinite { field, value });
        false
    }
}

fn check_positive(out: &mut Vec<ConstraintViolation>, field: &'static str, value: f64) {
    if value <= 0.0 {
        out.push(ConstraintViolation::NotPositive { field, value });
    }
}

fn check_nonnegative(out: &mut Vec<ConstraintViolation>, field: &'static str, value: f64) {
    if value < 0.0 {
        out.push(ConstraintViolation::Negative { field, value });
    }
}

/// Checks the exponent triple `(p, q, k)` against the class constraints,
/// collecting all violations.
pub(crate) fn exponent_violations(p: f64, q: f64, k: f64) -> Vec<ConstraintViolation> {
    let mut v = Vec::new();
    let finite =
        check_finite(&mut v, "p", p) & check_finite(&mut v, "q", q) & check_finite(&mut v, "k", k);
    if !finite {
        return v;
    }
    check_positive(&mut v, "p", p);
    check_positive(&mut v, "q", q);
    check_positive(&mut v, "k", k);
    // Strict inequalities with no tolerance band: k*p == 1 exactly is
    // rejected, since the settling-time integral diverges on the boundary.
    if k * p >= 1.0 {
        v.push(ConstraintViolation::KpNotLessThanOne { kp: k * p });
    }
    if k * q <= 1.0 {
        v.push(ConstraintViolation::KqNotGreaterThanOne { kq: k * q });
    }
    if p >= q {
        v.push(ConstraintViolation::PNotLessThanQ { p, q });
    }
    v
}

/// Validates an exponent triple on its own (used by the gain-ratio sweep,
/// where `alpha` and `beta` are derived from the sweep variable).
pub fn validate_exponents(p: f64, q: f64, k: f64) -> Result<(), ParamError> {
    let v = exponent_violations(p, q, k);
    if v.is_empty() {
        Ok(())
    } else {
        Err(ParamError::new(v))
    }
}

/// Parameter vector of the fixed-time stable plant.
///
/// Invariants held by construction: `alpha, beta, p, q, k > 0`, `k*p < 1`,
/// `k*q > 1` (hence `p < q`), all finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    alpha: f64,
    beta: f64,
    p: f64,
    q: f64,
    k: f64,
}

impl SystemParams {
    /// Validates the raw tuple and returns the parameter bundle, or an error
    /// naming every violated constraint.
    pub fn new(alpha: f64, beta: f64, p: f64, q: f64, k: f64) -> Result<Self, ParamError> {
        let mut v = Vec::new();
        let gains_finite =
            check_finite(&mut v, "alpha", alpha) & check_finite(&mut v, "beta", beta);
        if gains_finite {
            check_positive(&mut v, "alpha", alpha);
            check_positive(&mut v, "beta", beta);
        }
        v.extend(exponent_violations(p, q, k));
        if v.is_empty() {
            Ok(Self { alpha, beta, p, q, k })
        } else {
            Err(ParamError::new(v))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Auxiliary exponents `m_p = (1 - k*p)/(q - p)` and
    /// `m_q = (k*q - 1)/(q - p)`. The numerators are fused so the
    /// cancellation near the class boundaries stays exactly rounded and
    /// `m_p + m_q` recovers `k` to a few ulp.
    pub fn exponents(&self) -> DerivedExponents {
        let span = self.q - self.p;
        DerivedExponents {
            m_p: (-self.k).mul_add(self.p, 1.0) / span,
            m_q: self.k.mul_add(self.q, -1.0) / span,
        }
    }

    /// Natural log of the knee point `z* = (alpha/beta)^(1/(q-p))`, where the
    /// two terms of the field balance. Kept in log form because `z*` itself
    /// can leave the f64 range for extreme gain ratios.
    pub fn ln_knee(&self) -> f64 {
        (self.alpha.ln() - self.beta.ln()) / (self.q - self.p)
    }

    /// Returns the bundle with both gains scaled by `c > 0`. The scaled
    /// system's settling times are those of `self` divided by `c^k`.
    pub fn scale_gains(&self, c: f64) -> Result<Self, ParamError> {
        Self::new(c * self.alpha, c * self.beta, self.p, self.q, self.k)
    }
}

/// Exponents derived from a valid [`SystemParams`].
///
/// Both are strictly positive, bounded above by `k`, and satisfy
/// `m_p + m_q = k` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedExponents {
    pub m_p: f64,
    pub m_q: f64,
}

/// Plant parameters plus the prescribed settling-time bound `T_c` and the
/// derived constant gain `gamma/T_c` that makes `T_c` the least upper bound
/// of the settling time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredefinedParams {
    base: SystemParams,
    t_c: f64,
    gain: f64,
}

impl PredefinedParams {
    /// Derives the gain `gamma(base)/T_c`. Fails if `T_c` is not a positive
    /// finite real or if `gamma` falls outside the f64 range.
    pub fn new(base: SystemParams, t_c: f64) -> Result<Self, ParamError> {
        let mut v = Vec::new();
        if check_finite(&mut v, "t_c", t_c) {
            check_positive(&mut v, "t_c", t_c);
        }
        if !v.is_empty() {
            return Err(ParamError::new(v));
        }
        let ln_gamma = bounds::ln_gamma_bound(&base);
        let gain = (ln_gamma - t_c.ln()).exp();
        if !gain.is_finite() || gain <= 0.0 {
            return Err(ParamError::new(vec![
                ConstraintViolation::GainNotRepresentable { ln_gamma },
            ]));
        }
        Ok(Self { base, t_c, gain })
    }

    pub fn base(&self) -> &SystemParams {
        &self.base
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    /// The constant gain `gamma/T_c`.
    pub fn gain(&self) -> f64 {
        self.gain
    }
}

/// First-order robust controller parameters: the predefined-time bundle plus
/// the switching margin `zeta` dominating the disturbance bound `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderControlParams {
    pre: PredefinedParams,
    zeta: f64,
    delta: f64,
}

impl FirstOrderControlParams {
    pub fn new(pre: PredefinedParams, zeta: f64, delta: f64) -> Result<Self, ParamError> {
        let mut v = Vec::new();
        let finite =
            check_finite(&mut v, "zeta", zeta) & check_finite(&mut v, "delta", delta);
        if finite {
            check_nonnegative(&mut v, "zeta", zeta);
            check_nonnegative(&mut v, "delta", delta);
            if zeta < delta {
                v.push(ConstraintViolation::ZetaBelowDelta { zeta, delta });
            }
        }
        if v.is_empty() {
            Ok(Self { pre, zeta, delta })
        } else {
            Err(ParamError::new(v))
        }
    }

    pub fn pre(&self) -> &PredefinedParams {
        &self.pre
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Second-order sliding controller parameters.
///
/// The reduced-order sliding surface uses gains `(alpha1, beta1)` with the
/// exponents fixed at `p = 1`, `q = 3`, `k = 1/2`; the reaching phase reuses
/// the full exponent set through `outer`. `gamma1` and `gamma2` are the least
/// upper bounds of the respective settling-time functions, derived on
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderParams {
    alpha1: f64,
    beta1: f64,
    outer: SystemParams,
    t_c1: f64,
    t_c2: f64,
    zeta: f64,
    delta: f64,
    gamma1: f64,
    gamma2: f64,
}

/// Exponents of the reduced-order sliding dynamics: `(p, q, k) = (1, 3, 1/2)`.
pub const REDUCED_EXPONENTS: (f64, f64, f64) = (1.0, 3.0, 0.5);

impl SecondOrderParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha1: f64,
        beta1: f64,
        outer: SystemParams,
        t_c1: f64,
        t_c2: f64,
        zeta: f64,
        delta: f64,
    ) -> Result<Self, ParamError> {
        let mut v = Vec::new();
        let finite = check_finite(&mut v, "alpha1", alpha1)
            & check_finite(&mut v, "beta1", beta1)
            & check_finite(&mut v, "t_c1", t_c1)
            & check_finite(&mut v, "t_c2", t_c2)
            & check_finite(&mut v, "zeta", zeta)
            & check_finite(&mut v, "delta", delta);
        if finite {
            check_positive(&mut v, "alpha1", alpha1);
            check_positive(&mut v, "beta1", beta1);
            check_positive(&mut v, "t_c1", t_c1);
            check_positive(&mut v, "t_c2", t_c2);
            check_nonnegative(&mut v, "zeta", zeta);
            check_nonnegative(&mut v, "delta", delta);
            if zeta < delta {
                v.push(ConstraintViolation::ZetaBelowDelta { zeta, delta });
            }
        }
        if !v.is_empty() {
            return Err(ParamError::new(v));
        }
        let (rp, rq, rk) = REDUCED_EXPONENTS;
        let inner = SystemParams::new(alpha1, beta1, rp, rq, rk)?;
        let gamma1 = bounds::gamma_bound(&inner)
            .map_err(|e| ParamError::new(vec![ConstraintViolation::GainNotRepresentable {
                ln_gamma: e.ln_value(),
            }]))?;
        let gamma2 = bounds::gamma_bound(&outer)
            .map_err(|e| ParamError::new(vec![ConstraintViolation::GainNotRepresentable {
                ln_gamma: e.ln_value(),
            }]))?;
        Ok(Self { alpha1, beta1, outer, t_c1, t_c2, zeta, delta, gamma1, gamma2 })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    /// The reduced-order surface parameters as a full bundle
    /// (`p = 1`, `q = 3`, `k = 1/2`).
    pub fn inner(&self) -> SystemParams {
        let (rp, rq, rk) = REDUCED_EXPONENTS;
        SystemParams::new(self.alpha1, self.beta1, rp, rq, rk)
            .expect("validated on construction")
    }

    pub fn outer(&self) -> &SystemParams {
        &self.outer
    }

    pub fn t_c1(&self) -> f64 {
        self.t_c1
    }

    pub fn t_c2(&self) -> f64 {
        self.t_c2
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Least upper bound of the reduced-order settling time (unit `T_c1`).
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    /// Least upper bound of the reaching-phase settling time (unit `T_c2`).
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1_params() -> SystemParams {
        SystemParams::new(4.0, 0.25, 0.5, 3.0, 1.5).unwrap()
    }

    #[test]
    fn accepts_reference_parameters() {
        let sp = fig1_params();
        assert_eq!(sp.alpha(), 4.0);
        assert_eq!(sp.beta(), 0.25);
    }

    #[test]
    fn rejects_kq_boundary() {
        // k*q = 1 exactly sits on the excluded boundary.
        let err = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| matches!(v, ConstraintViolation::KqNotGreaterThanOne { kq } if *kq == 1.0)));
    }

    #[test]
    fn rejects_kp_above_one() {
        let err = SystemParams::new(2.0, 3.0, 0.6, 2.0, 2.0).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| matches!(v, ConstraintViolation::KpNotLessThanOne { kp } if (*kp - 1.2).abs() < 1e-15)));
    }

    #[test]
    fn rejects_p_not_less_than_q_with_dedicated_violation() {
        let err = SystemParams::new(1.0, 1.0, 2.0, 0.4, 1.0).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| matches!(v, ConstraintViolation::PNotLessThanQ { .. })));
    }

    #[test]
    fn reports_all_failures_not_just_the_first() {
        // alpha <= 0 and k*q <= 1 both violated.
        let err = SystemParams::new(-1.0, 1.0, 0.5, 1.5, 0.5).unwrap_err();
        assert!(err.violations().len() >= 2, "{err}");
    }

    #[test]
    fn rejects_non_finite_fields() {
        let err = SystemParams::new(f64::NAN, 1.0, 0.5, 3.0, 1.5).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| matches!(v, ConstraintViolation::NotFinite { field: "alpha", .. })));
    }

    #[test]
    fn derived_exponents_reference_values() {
        let e = fig1_params().exponents();
        assert!((e.m_p - 0.1).abs() < 1e-15);
        assert!((e.m_q - 1.4).abs() < 1e-15);
    }

    #[test]
    fn derived_exponents_symmetric_case() {
        // p = 1 - s, q = 1 + s, k = 1 with s = 0.5 gives m_p = m_q = 1/2.
        let sp = SystemParams::new(1.0, 1.0, 0.5, 1.5, 1.0).unwrap();
        let e = sp.exponents();
        assert_eq!(e.m_p, 0.5);
        assert_eq!(e.m_q, 0.5);
    }

    #[test]
    fn zeta_must_dominate_delta() {
        let pre = PredefinedParams::new(fig1_params(), 1.0).unwrap();
        let err = FirstOrderControlParams::new(pre, 0.5, 1.0).unwrap_err();
        assert!(err
            .violations()
            .iter()
            .any(|v| matches!(v, ConstraintViolation::ZetaBelowDelta { .. })));
    }

    #[test]
    fn predefined_gain_times_t_c_recovers_gamma() {
        let sp = fig1_params();
        let gamma = bounds::gamma_bound(&sp).unwrap();
        for t_c in [0.25, 1.0, 7.5] {
            let pp = PredefinedParams::new(sp, t_c).unwrap();
            let rel = (pp.gain() * t_c - gamma).abs() / gamma;
            assert!(rel < 1e-15, "t_c = {t_c}: rel = {rel:e}");
        }
    }

    #[test]
    fn second_order_gammas_match_component_bounds() {
        let outer = fig1_params();
        let sop = SecondOrderParams::new(4.0, 0.25, outer, 0.5, 0.5, 1.0, 1.0).unwrap();
        let inner = sop.inner();
        assert_eq!(sop.gamma1(), bounds::gamma_bound(&inner).unwrap());
        assert_eq!(sop.gamma2(), bounds::gamma_bound(&outer).unwrap());
    }

    #[test]
    fn second_order_gamma1_closed_form() {
        // gamma1 = Gamma(1/4)^2 / (2 sqrt(alpha1) Gamma(1/2)) * (alpha1/beta1)^(1/4)
        let sop =
            SecondOrderParams::new(4.0, 0.25, fig1_params(), 0.5, 0.5, 1.0, 1.0).unwrap();
        let g14 = crate::specfun::gamma_fn(0.25).unwrap();
        let g12 = crate::specfun::gamma_fn(0.5).unwrap();
        let expected = g14 * g14 / (2.0 * 4.0_f64.sqrt() * g12) * 16.0_f64.powf(0.25);
        let rel = (sop.gamma1() - expected).abs() / expected;
        assert!(rel < 1e-13, "rel = {rel:e}");
    }
}
