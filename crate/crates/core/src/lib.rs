//! Design and verification of fixed-point generalized comb filters (GCF).
//!
//! A GCF is a third-order comb decimator whose zeros are rotated by `±alpha`
//! inside every folding band. The crate covers:
//!
//! * [`filter`]: coefficient construction in cascaded, polyphase and
//!   partial-polyphase form, plus the classical comb reference.
//! * [`spectral`]: folding bands, frequency responses and attenuation.
//! * [`fixedpoint`]: sensitivity functions, statistical word-length sizing,
//!   coefficient quantization and Monte Carlo validation.
//! * [`sim`]: a second-order sigma-delta modulator feeding a fixed-point
//!   cascaded GCF decimator, with Welch spectra.
//! * [`export`]: CSV / JSON writers shared by the command-line tool.

pub mod error;
pub mod export;
pub mod filter;
pub mod fixedpoint;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result};
pub use filter::{CombSpec, GcfDesign, GcfSpec};
