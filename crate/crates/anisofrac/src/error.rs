//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tensor input is not symmetric: relative asymmetry {asymmetry:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("operator is not symmetric positive-definite: eigenvalue {eigenvalue:.6e} below threshold {threshold:.6e}")]
    NotPositiveDefinite { eigenvalue: f64, threshold: f64 },

    #[error("matrix is not orthogonal in Kelvin space: |P P^T - I| = {deviation:.3e}")]
    NotOrthogonal { deviation: f64 },

    #[error("inadmissible elastic constants: {0}")]
    InadmissibleElasticity(String),

    #[error("damage value {0} outside [0, 1]")]
    DamageOutOfRange(f64),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("constrained damage solve did not converge after {iterations} sweeps (residual {residual:.3e})")]
    ConstrainedSolve { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("annulus [{r_inner:.3e}, {r_outer:.3e}] around tip ({x:.3e}, {y:.3e}) lies outside the mesh")]
    AnnulusOutsideDomain {
        x: f64,
        y: f64,
        r_inner: f64,
        r_outer: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
