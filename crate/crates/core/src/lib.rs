//! Reconstruction of the convex hull of sound-hard polygonal obstacles and
//! piecewise-linear cracks from far-field scattering data at a single wave
//! number.
//!
//! The pipeline has two halves:
//!
//! * **Forward synthesis** ([`forward`]): a dense boundary-integral solver for
//!   the exterior Neumann problem (single-layer ansatz on polygons, a
//!   square-root-weighted Chebyshev Galerkin method on cracks) that emits
//!   far-field datasets and Cauchy data on a circle.
//! * **Inverse reconstruction** ([`enclosure`], [`aperture`]): indicator
//!   functionals pairing the far field with explicitly constructed Herglotz
//!   densities ([`herglotz`]). The growth rate in the probe parameter recovers
//!   the support function direction by direction; intersecting the resulting
//!   half-planes yields the convex hull ([`geometry`]).
//!
//! Full-aperture data goes through the truncated geometric density `g_N`;
//! limited-aperture data goes through a Tikhonov minimum-norm density with a
//! Morozov discrepancy parameter choice.

pub mod aperture;
pub mod enclosure;
pub mod farfield;
pub mod forward;
pub mod geometry;
pub mod herglotz;
pub mod specfun;

mod vec2;

pub use num_complex::Complex64;

/// Crate-wide error type.
///
/// The CLI maps `InvalidInput`/`Parse` to exit code 2 and
/// `Numerical`/`Resonance` to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The discrete boundary-integral operator is close to singular, which
    /// happens when k² approaches an interior Dirichlet eigenvalue of the
    /// scatterer.
    #[error("near-resonant wave number: condition estimate {cond:.3e}; shift k slightly or enable the combined-source formulation")]
    Resonance { cond: f64 },

    /// Half-plane intersection came out empty; `constraint` is the index of
    /// the support sample whose half-plane removed the last of the feasible
    /// region.
    #[error("support estimates are inconsistent: half-plane intersection emptied at constraint {constraint} (theta={theta:.6}, h={h:.6})")]
    InfeasibleHull {
        constraint: usize,
        theta: f64,
        h: f64,
    },

    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
