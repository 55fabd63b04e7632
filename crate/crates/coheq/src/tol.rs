//! Centralized numerical tolerances.
//!
//! Every inexact comparison in the crate goes through one of these
//! constants so that the accuracy contract of the toolkit is documented in
//! a single place.  The `strict` profile (selected with
//! `COHEQ_TOLERANCE_PROFILE=strict`) tightens the verification thresholds
//! by one order of magnitude; synthesis-side constants are profile
//! independent.

/// Absolute distance below which a numerator root and a denominator root
/// are treated as a common factor and cancelled.
pub const CANCEL_TOL: f64 = 1e-9;

/// Hard cap on polynomial degree; guards against runaway degree growth in
/// chained rational arithmetic.
pub const DEGREE_CAP: usize = 16;

/// Residual allowed in channel paraunitarity identities.
pub const CHANNEL_PARAUNITARITY_TOL: f64 = 1e-9;

/// Residual allowed in filter paraunitarity identities.
pub const FILTER_PARAUNITARITY_TOL: f64 = 1e-8;

/// Contraction margin: `1 - max |H11(iw)|` may be this negative.
pub const CONTRACTION_MARGIN: f64 = -1e-9;

/// Pointwise residual allowed in spectral/J-spectral factor identities.
pub const FACTOR_RESIDUAL_TOL: f64 = 1e-9;

/// Agreement required between the direct and the oracle error-PSD paths.
pub const PSD_ORACLE_TOL: f64 = 1e-10;

/// Default offset of the constant Theta parameter from the interval
/// endpoint -1 used by the cavity gamma search.
pub const THETA_ENDPOINT_OFFSET: f64 = 2e-4;

/// Epsilon used by the boundary-branch constant Theta of the static
/// parameterization ("sufficiently close to 1").
pub const STATIC_THETA_EPSILON: f64 = 1.0 - 1e-6;

/// Multiplicative shrink applied to boundary-touching grid node values
/// before interpolation, enforcing the strict form of the contraction
/// constraint.
pub const BOUNDARY_SHRINK: f64 = 1e-6;

/// Starting value of the conformal shift tau.
pub const TAU_DEFAULT: f64 = 1e-3;

/// Absolute tolerance of the gamma^2 bisection.
pub const GAMMA_BISECTION_TOL: f64 = 1e-8;

/// Safety margin added to the bisection optimum before the design is built.
pub const GAMMA_SAFETY_MARGIN: f64 = 1e-6;

/// Tolerance profile selected through `COHEQ_TOLERANCE_PROFILE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Default,
    Strict,
}

impl Profile {
    /// Reads the profile from the environment; unknown values fall back to
    /// the default profile.
    pub fn from_env() -> Self {
        match std::env::var("COHEQ_TOLERANCE_PROFILE").as_deref() {
            Ok("strict") => Profile::Strict,
            _ => Profile::Default,
        }
    }

    pub fn paraunitarity_tol(self) -> f64 {
        match self {
            Profile::Default => FILTER_PARAUNITARITY_TOL,
            Profile::Strict => FILTER_PARAUNITARITY_TOL / 10.0,
        }
    }

    pub fn contraction_margin(self) -> f64 {
        match self {
            Profile::Default => CONTRACTION_MARGIN,
            Profile::Strict => CONTRACTION_MARGIN / 10.0,
        }
    }
}
