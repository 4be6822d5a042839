//! Dynamic small-signal model of a photovoltaic receiver.
//!
//! The receiver is a photocurrent source feeding a diode, a shunt resistance,
//! a bias-dependent capacitance and an optional resistive load. At a DC
//! operating point the diode linearizes to `r = n·V_T/I_D`, which combines
//! with the shunt into `R_P`; together with `C_P(V_DC)` this fixes the
//! receiver's RC pole. Changing the illuminance or the load moves V_DC and
//! hence both R_P and C_P.

mod dc;
mod params;
mod response;
mod small_signal;

pub use dc::{
    diode_current, kcl_residual, parallel_capacitance, parallel_resistance, small_signal_resistance,
    solve_operating_point, OperatingPoint, KCL_TOLERANCE,
};
pub use params::{CapacitanceLaw, CapacitanceModel, DiodeParams, Load, PvStaticParams};
pub use response::{
    bandwidth_3db, dynamic_response, log_space, FrequencyResponse, ResponseSample, ResponseScale,
    SinglePole,
};
pub use small_signal::{
    internal_impedance, receiver_impedance, small_signal_at, transfer_bias, transfer_conventional,
    transfer_dynamic, SmallSignalModel,
};
