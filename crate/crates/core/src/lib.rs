//! Link-level performance analysis for dual-hop amplify-and-forward (AF)
//! optical wireless links under combined fog and pointing-error fading.
//!
//! The crate computes outage probability, average SNR and ergodic rate of a
//! relay-assisted free-space optical link three independent ways:
//!
//! * closed-form approximations built from incomplete gamma functions and
//!   exponential integrals ([`relay`]),
//! * exact numerical quadrature of the underlying distribution integrals
//!   ([`quadrature`] driving [`channel`] and [`relay`]),
//! * seeded Monte Carlo simulation of the physical channel ([`montecarlo`]).
//!
//! The three routes cross-validate each other; the binary in `foglink-cli`
//! exposes them as `metrics`, `sweep`, `simulate` and `validate` commands.
//!
//! All analytic modules are generic over the scalar type through the [`Real`]
//! trait (`f32` or `f64`); concrete `*64` aliases are exported at the crate
//! root. Monte Carlo simulation is `f64` only.

pub mod channel;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod relay;
pub mod specfun;

mod real;

pub use real::Real;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Adaptive quadrature exhausted its subdivision budget above tolerance.
    #[error("quadrature did not converge in {context}: value {value:e}, error estimate {err_estimate:e}")]
    NonConvergence {
        context: String,
        value: f64,
        err_estimate: f64,
    },
    /// An integrand or series produced a non-finite value.
    #[error("evaluation failure in {context} at {abscissa:e}")]
    EvaluationFailure { context: String, abscissa: f64 },
    /// A closed form that requires equal hops was asked for an asymmetric link.
    #[error("closed form requires a symmetric relay configuration (d1 = d2)")]
    NotSymmetric,
    /// |z_r - rho^2| fell below the threshold where the closed forms divide by
    /// an effectively zero parameter; callers should fall back to quadrature.
    #[error("singular parameter {name} = {value:e}; use the quadrature path")]
    SingularParameter { name: &'static str, value: f64 },
    /// A printed closed form requires a real power of a negative base that
    /// only exists for integer shape parameters.
    #[error("closed form undefined here: {0}")]
    ClosedFormInvalid(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// dB of attenuation per neper, rounded to the value used throughout the
/// fog-channel exponent z = 4.343 / (beta * d).
pub const DB_PER_NEPER: f64 = 4.343;

// Concrete double-precision aliases for the generic core types.
pub type QuadSpec64 = quadrature::QuadSpec<f64>;
pub type PointingGeometry64 = geometry::PointingGeometry<f64>;
pub type PointingParams64 = geometry::PointingParams<f64>;
pub type FogParams64 = channel::FogParams<f64>;
pub type SystemParams64 = channel::SystemParams<f64>;
pub type LinkParams64 = channel::LinkParams<f64>;
pub type RelayConfig64 = relay::RelayConfig<f64>;
pub type MetricReport64 = relay::MetricReport<f64>;
