//! Synthesis and verification toolkit for passive coherent equalizers of
//! linear quantum communication channels.
//!
//! Given a passive channel model (a static two-port or an optical cavity
//! with beam splitters) and the thermal intensities of its input and
//! environment fields, the crate designs physically realizable equalizing
//! filters and verifies the physical-realizability invariants of the
//! results.  Three synthesis routes are provided:
//!
//! * closed-form optimal designs for static channels ([`synthesis::static_optimal`]),
//! * guaranteed-cost designs from a J-spectral factorization
//!   ([`synthesis::cavity_suboptimal`], [`synthesis::cavity_gamma_search`]),
//! * a frequency-grid relaxation solved per node followed by
//!   Nevanlinna-Pick interpolation ([`sdp::grid_solve`], [`nevpick`]).
//!
//! Everything is built on exact complex-coefficient rational-function
//! algebra in [`rational`]; [`verify`] re-checks every claim a design makes
//! on an independent dense grid.

pub mod channel;
pub mod nevpick;
pub mod rational;
pub mod records;
pub mod sdp;
pub mod spectral;
pub mod synthesis;
pub mod tol;
pub mod verify;
