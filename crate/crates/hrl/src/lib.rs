//! Numerical verification toolkit for a sharp weighted fourth-order
//! Sobolev-type inequality: closed-form constants, the explicit extremal
//! family, the radial change of variables, sector-by-sector linearized
//! spectra, and quantitative stability experiments.

pub mod emden_fowler;
pub mod error;
pub mod extremals;
pub mod jet;
pub mod params;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod spectrum;
pub mod stability;

pub use error::{HrlError, Result};
pub use params::{derive_constants, ParameterSet};
pub use profile::{Channels, RadialProfile};
pub use quadrature::QuadratureConfig;
