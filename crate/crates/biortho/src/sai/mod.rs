//! Explicit biorthogonal family `sigma_m^+` from a Weierstrass product and a
//! cosine mollifier, inverted by Fourier quadrature.

mod calibration;
mod construct;
mod cx;
mod mollifier;
mod weierstrass;

pub use calibration::{calibrate_constants, CalibrationConstants, CalibrationGrid, CALIBRATION_VERSION};
pub use construct::{sai_family, sai_norm, theoretical_b_star, SaiSamples};
pub use mollifier::{choose_params, log_mollifier, MollifierParams, MollifierValue};
pub use weierstrass::{log_weierstrass, WeierstrassValue};
