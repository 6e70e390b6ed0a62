//! Perturbation-based nonlinearity compensation (PB-NLC) for polarization-multiplexed
//! coherent fiber links: first- and second-order coefficient tables built by adaptive
//! quadrature of the Gaussian-pulse mixing integrals, transmitter-side predistortion,
//! a Manakov split-step channel with EDFA noise, receiver DSP (EDC / DBP / matched
//! filter / detection), and real-multiplication complexity accounting.

pub mod channel;
pub mod coeffs;
pub mod complexity;
pub mod error;
pub mod fftutil;
pub mod model;
pub mod oracle;
pub mod predistort;
pub mod rxdsp;

pub use error::{Error, Result};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Display, LowerExp};
use std::iter::Sum;

/// Scalar abstraction: every algorithm in this crate is generic over the float
/// width and runs in either `f32` or `f64`. Coefficient tables and acceptance
/// runs use `f64`; `f32` is supported for the waveform-processing paths.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + rustfft::FftNum
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, for constants and config plumbing.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to scalar")
    }

    fn to64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + rustfft::FftNum
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Default precision for the CLI and the acceptance suite.
pub type Scalar = f64;
/// Complex sample at default precision.
pub type Cx = num_complex::Complex<Scalar>;

pub type Constellation = model::Constellation<Scalar>;
pub type SymbolGrid = model::SymbolGrid<Scalar>;
pub type SampledField = model::SampledField<Scalar>;
pub type PulseParams = model::PulseParams<Scalar>;
pub type LinkConfig = model::LinkConfig<Scalar>;
pub type CoeffTable = coeffs::CoeffTable<Scalar>;
pub type QuadratureSpec = coeffs::QuadratureSpec<Scalar>;
