use num_complex::Complex64;
use thiserror::Error;

/// Failures reported by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not reach tolerance {tol:e} ({what})")]
    Quadrature { what: &'static str, tol: f64 },

    #[error("amplitude formulas disagree: {0}")]
    Consistency(String),

    #[error("|Re λ^(1/4)| = {x:.3} exceeds the overflow clamp {clamp} at λ = {lambda}")]
    Clamp { lambda: Complex64, x: f64, clamp: f64 },

    #[error("integrator exceeded {steps} steps at |λ| = {abs_lambda:e}")]
    StepLimit { abs_lambda: f64, steps: usize },

    #[error("winding number did not converge on contour ({0})")]
    ContourThroughZero(String),

    #[error("Newton refinement diverged from seed {seed}")]
    Refinement { seed: Complex64 },

    #[error("contour subdivision lost zeros: parent {parent}, children {children}")]
    Subdivision { parent: i64, children: i64 },

    #[error("spectral assembly could not resolve the real axis: {0}")]
    Resolution(String),

    #[error("resonance multiplicity {m} at {lambda} contradicts the two-sheet structure")]
    Multiplicity { lambda: f64, m: i64 },

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
