//! Very-low-delay full-bandwidth MDCT audio codec.
//!
//! Each frame is transformed with a reduced-overlap MDCT, split into
//! critical-band-like bands, and coded as explicit band energies plus unit-norm
//! band shapes quantized with a pyramid vector quantizer. All symbols go
//! through a range coder, and the bit allocation is derived on both sides from
//! the fixed frame size, so no allocation data is transmitted.

pub mod allocation;
pub mod bands;
pub mod codec;
pub mod container;
pub mod energy;
pub mod error;
pub mod metrics;
pub mod pvq;
pub mod range_coder;
pub mod signals;
pub mod transform;

pub use error::{Error, Result};
