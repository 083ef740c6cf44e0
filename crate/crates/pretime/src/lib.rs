//! Settling-time analysis and simulation for the fixed-time stable system
//! class `dx/dt = -(alpha*|x|^p + beta*|x|^q)^k * sign(x)` with `k*p < 1` and
//! `k*q > 1`.
//!
//! The crate provides:
//!
//! - validated parameter bundles for the plant and the derived controllers
//!   ([`params`]),
//! - real-argument Gamma/log-Gamma/Beta functions ([`specfun`]),
//! - tanh-sinh quadrature of the settling-time integral, robust to the
//!   endpoint singularity at the origin and to the improper upper limit
//!   ([`quadrature`]),
//! - closed-form settling-time bounds: the exact least upper bound `gamma`,
//!   the classical two-term estimate `T_max`, and the gain-ratio sweep
//!   `T_max(rho)` ([`bounds`]),
//! - right-hand sides, robust first/second-order control laws, and a
//!   non-Lipschitz-aware integrator with settling detection ([`dynamics`]).
//!
//! The quadrature route and the closed-form route are kept independent so
//! that each can serve as an oracle for the other; the `verify` subcommand of
//! the companion CLI crosses them over randomized parameter sets.

pub mod bounds;
pub mod dynamics;
pub mod params;
pub mod quadrature;
pub mod specfun;
mod util;

pub use bounds::{BoundReport, BoundsError};
pub use dynamics::{Disturbance, SimError, SimOptions, System, Trajectory};
pub use params::{
    DerivedExponents, FirstOrderControlParams, ParamError, PredefinedParams, SecondOrderParams,
    SystemParams,
};
pub use quadrature::{QuadratureError, QuadratureResult};
pub use specfun::SpecFunError;
