//! DC state of the receiver: diode law, its linearization, and the
//! self-consistent operating point under illumination and load.

use serde::{Deserialize, Serialize};

use super::params::{CapacitanceModel, DiodeParams, Load, PvStaticParams};
use crate::error::{Error, Result};

/// Exponent above which the diode law is evaluated in log space.
const LOG_SPACE_EXPONENT: f64 = 700.0;

/// KCL residual accepted by [`solve_operating_point`], A.
pub const KCL_TOLERANCE: f64 = 1e-12;

const BISECTION_BUDGET: usize = 400;

/// Diode forward current `I_0·(exp(V/(n·V_T)) − 1)`.
pub fn diode_current(d: &DiodeParams, v_dc: f64) -> f64 {
    let x = v_dc / d.slope_voltage();
    if x > LOG_SPACE_EXPONENT {
        // exp(x) - 1 == exp(x) to machine precision here
        let i = (d.saturation_current.ln() + x).exp();
        if i.is_finite() {
            i
        } else {
            f64::MAX
        }
    } else {
        d.saturation_current * x.exp_m1()
    }
}

/// Small-signal diode resistance `r = n·V_T/I_D`.
///
/// Fails with [`Error::NonConductingDiode`] when `I_D ≤ 0`.
pub fn small_signal_resistance(d: &DiodeParams, v_dc: f64) -> Result<f64> {
    let i_d = diode_current(d, v_dc);
    if i_d <= 0.0 {
        return Err(Error::NonConductingDiode { v_dc });
    }
    Ok(d.slope_voltage() / i_d)
}

/// `r ∥ R_SH`. Either argument may be infinite.
pub fn parallel_resistance(r: f64, r_sh: f64) -> f64 {
    if r.is_infinite() {
        r_sh
    } else if r_sh.is_infinite() {
        r
    } else {
        r * r_sh / (r_sh + r)
    }
}

/// C_P at the given bias.
pub fn parallel_capacitance(c: &CapacitanceModel, temperature: f64, v_dc: f64) -> f64 {
    c.capacitance(temperature, v_dc)
}

/// DC state of an illuminated, loaded receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// I_PH, A.
    pub photocurrent: f64,
    /// V_DC across the terminals, V.
    pub bias_voltage: f64,
    pub load: Load,
    /// Illuminance that produced `photocurrent`, lux. Informational.
    pub illuminance: Option<f64>,
}

impl OperatingPoint {
    /// An operating point at an externally imposed bias (e.g. a dark impedance
    /// measurement under applied voltage).
    pub fn biased(v_dc: f64, load: Load) -> Self {
        Self {
            photocurrent: 0.0,
            bias_voltage: v_dc,
            load,
            illuminance: None,
        }
    }
}

/// `I_PH − I_D(V) − V/R_SH − V/R_L`; strictly decreasing in `v`.
pub fn kcl_residual(d: &DiodeParams, s: &PvStaticParams, i_ph: f64, load: Load, v: f64) -> f64 {
    i_ph - diode_current(d, v) - v / s.shunt_resistance - v * load.conductance()
}

/// Solves the DC balance `I_PH = I_D(V) + V/R_SH + V/R_L` for V by bisection.
///
/// Series resistance is neglected. The bracket is
/// `[-1 V, n·V_T·ln(1 + I_PH/I_0) + 0.1 V]`, whose end residuals always have
/// opposite signs.
pub fn solve_operating_point(
    d: &DiodeParams,
    s: &PvStaticParams,
    _c: &CapacitanceModel,
    i_ph: f64,
    load: Load,
) -> Result<OperatingPoint> {
    if !(i_ph.is_finite() && i_ph >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "photocurrent must be >= 0, got {i_ph}"
        )));
    }
    let point = |v| OperatingPoint {
        photocurrent: i_ph,
        bias_voltage: v,
        load,
        illuminance: None,
    };
    if i_ph == 0.0 {
        return Ok(point(0.0));
    }

    let residual = |v| kcl_residual(d, s, i_ph, load, v);
    let mut lo = -1.0;
    let mut hi = d.slope_voltage() * (i_ph / d.saturation_current).ln_1p() + 0.1;
    let (mut best_v, mut best_r) = (lo, residual(lo));
    for _ in 0..BISECTION_BUDGET {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r.abs() < best_r.abs() {
            best_v = mid;
            best_r = r;
        }
        if r == 0.0 || mid <= lo || mid >= hi {
            break;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_r.abs() < KCL_TOLERANCE {
        Ok(point(best_v))
    } else {
        Err(Error::NoConvergence {
            iterations: BISECTION_BUDGET,
            residual: best_r.abs(),
        })
    }
}
