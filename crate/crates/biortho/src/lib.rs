//! Biorthogonal families to real exponentials `e^{lambda_n t}` on `L^2(0,T)`.
//!
//! The Gram-matrix oracle ([`gram`]) gives the exact minimal norms; [`guichal`]
//! evaluates explicit lower bounds for them; [`sai`] builds an explicit family
//! by Fourier inversion of a Weierstrass product times a cosine mollifier.

pub mod counting;
pub mod error;
pub mod gram;
pub mod guichal;
pub mod harness;
pub mod precision;
pub mod sai;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
pub use precision::{log_sum, LogValue, PrecisionContext, Sign};
pub use spectra::{GapProfile, Spectrum};
