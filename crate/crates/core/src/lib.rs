//! Frequency-response modeling and optimization for photovoltaic optical
//! receivers.
//!
//! * [`model`] evaluates the DC and small-signal receiver equations.
//! * [`fit`] extracts (R_S, R_P, C_P) from impedance spectra.
//! * [`load`] sweeps the load resistance for the best gain-bandwidth product.
//! * [`link`] simulates a PAM link through the receiver with LMS equalization.
//! * [`profile`] bundles calibrated module parameters.

pub mod constants;
pub mod error;
pub mod fit;
pub mod link;
pub mod load;
pub mod lsq;
pub mod model;
pub mod profile;
pub mod schema;

pub use error::{Error, Result};
