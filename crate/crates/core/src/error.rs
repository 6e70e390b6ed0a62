//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Non-finite intermediate inside a coefficient integrand; carries the
    /// integration point and pulse indices for post-mortem.
    #[error("numeric domain error at z={z} m, s={s} m, (m,n,k)=({m},{n},{k}): {what}")]
    NumericDomain {
        what: &'static str,
        z: f64,
        s: f64,
        m: i32,
        n: i32,
        k: i32,
    },

    /// Panel doubling failed to settle below the requested relative tolerance.
    #[error(
        "quadrature did not converge at (m,n,k)=({m},{n},{k}): \
         achieved {achieved:.3e}, requested {requested:.3e}"
    )]
    Quadrature {
        m: i32,
        n: i32,
        k: i32,
        achieved: f64,
        requested: f64,
    },

    #[error("non-finite sample detected during {0}")]
    NonFinite(&'static str),

    #[error("degenerate quantization: reference coefficient rounds to zero")]
    DegenerateQuantization,

    #[error("table format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
