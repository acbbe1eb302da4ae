//! Numerical toolkit for the free energy of aggregation-diffusion equations
//!
//! ```text
//! E_eps(rho) = 1/2 ∫∫ W(x - y) drho(x) drho(y) + eps ∫ U(rho) dx
//! ```
//!
//! on radially symmetric densities: quadrature of the interaction and entropy
//! terms, dilation-ray analysis and regime classification, Euler–Lagrange
//! steady states on bounded domains, the McKean–Vlasov particle system, and
//! the dyadic fast-diffusion construction.

pub mod cli;
pub mod config;
pub mod dyadic;
pub mod energy;
pub mod kernels;
pub mod measures;
pub mod particles;
pub mod properties;
pub mod quadrature;
pub mod scaling;
pub mod steady;

pub use energy::EnergyBreakdown;
pub use kernels::{EntropySpec, KernelSpec, Slope};
pub use measures::{ParticleEnsemble, RadialDensity, RadialMeasure};
pub use scaling::{RegimeVerdict, Verdict};


use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: {cells} cells (need at least {min})")]
    GridTooCoarse { cells: usize, min: usize },

    #[error("total mass {mass} differs from 1 by more than {tol}")]
    MassNotNormalized { mass: f64, tol: f64 },

    #[error("atom at the origin not supported by {0}")]
    AtomNotSupported(&'static str),

    #[error("degenerate density: no mass to sample from")]
    DegenerateDensity,

    #[error("tabulated kernel queried at {s} beyond its domain cap {r_max}")]
    BeyondTable { s: f64, r_max: f64 },

    #[error("kernel not integrable in d = {d}: singularity exponent {beta} <= -d")]
    NonIntegrableKernel { beta: f64, d: usize },

    #[error("infinite self-interaction of the atom (kernel infinite at the origin)")]
    InfiniteSelfInteraction,

    #[error("exponential overflow: sup of potential / eps = {sup_over_eps}")]
    Overflow { sup_over_eps: f64 },

    #[error("non-finite particle position at step {step}")]
    NonFinite { step: usize },

    #[error("empty support")]
    EmptySupport,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::NonFinite { .. }
                | Error::InfiniteSelfInteraction
                | Error::DerivativeUnavailable(_)
        )
    }
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Surface area of the unit sphere S^{d-1}, i.e. d times the ball volume.
pub fn unit_sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }
}
