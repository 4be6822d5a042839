//! Small-signal (R_S, R_P, C_P) model of the receiver, its impedances and
//! transimpedance transfer functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dc::{parallel_capacitance, parallel_resistance, small_signal_resistance, OperatingPoint};
use super::params::{CapacitanceModel, DiodeParams, Load, PvStaticParams};
use crate::error::{Error, Result};

/// Linearized receiver at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallSignalModel {
    /// R_P = r ∥ R_SH, Ω.
    pub parallel_resistance: f64,
    /// C_P, F.
    pub parallel_capacitance: f64,
    /// R_S, Ω.
    pub series_resistance: f64,
}

impl SmallSignalModel {
    pub fn new(parallel_resistance: f64, parallel_capacitance: f64, series_resistance: f64) -> Result<Self> {
        let m = Self {
            parallel_resistance,
            parallel_capacitance,
            series_resistance,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.parallel_resistance > 0.0 && self.parallel_resistance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "R_P must be finite and > 0, got {}",
                self.parallel_resistance
            )));
        }
        if !(self.parallel_capacitance > 0.0 && self.parallel_capacitance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C_P must be finite and > 0, got {}",
                self.parallel_capacitance
            )));
        }
        if !(self.series_resistance >= 0.0 && self.series_resistance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "R_S must be finite and >= 0, got {}",
                self.series_resistance
            )));
        }
        Ok(())
    }

    /// Minority carrier lifetime τ_n = R_P·C_P, s.
    pub fn lifetime(&self) -> f64 {
        self.parallel_resistance * self.parallel_capacitance
    }

    /// R_P ∥ R_L, the effective transimpedance at DC.
    pub fn loaded_resistance(&self, load: Load) -> f64 {
        parallel_resistance(load.resistance(), self.parallel_resistance)
    }

    /// Pole frequency 1/(2π·(R_P∥R_L)·C_P) of the loaded receiver, Hz.
    pub fn pole_frequency(&self, load: Load) -> f64 {
        1.0 / (2.0 * PI * self.loaded_resistance(load) * self.parallel_capacitance)
    }
}

/// Linearizes the receiver at `op`.
///
/// A non-conducting diode (V_DC ≤ 0) contributes no conductance, so R_P falls
/// back to R_SH.
pub fn small_signal_at(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    op: &OperatingPoint,
) -> SmallSignalModel {
    let r = small_signal_resistance(d, op.bias_voltage).unwrap_or(f64::INFINITY);
    SmallSignalModel {
        parallel_resistance: parallel_resistance(r, s.shunt_resistance),
        parallel_capacitance: parallel_capacitance(c, d.temperature, op.bias_voltage),
        series_resistance: s.series_resistance,
    }
}

#[inline]
fn omega(f: f64) -> f64 {
    2.0 * PI * f
}

/// Internal impedance `Z = R_S + R_P/(1 + jωC_P R_P)`.
pub fn internal_impedance(m: &SmallSignalModel, f: f64) -> Complex64 {
    let rp = m.parallel_resistance;
    let denom = Complex64::new(1.0, omega(f) * m.parallel_capacitance * rp);
    m.series_resistance + rp / denom
}

/// Loaded receiver impedance `Z_TI = R_S + (R_P∥R_L)/(1 + jωC_P (R_P∥R_L))`.
pub fn receiver_impedance(m: &SmallSignalModel, load: Load, f: f64) -> Complex64 {
    let r = m.loaded_resistance(load);
    let denom = Complex64::new(1.0, omega(f) * m.parallel_capacitance * r);
    m.series_resistance + r / denom
}

/// Power transimpedance `|R_L/(R_L/R_P + jωR_L C_P + 1)|²`, Ω².
///
/// An open load evaluates the `R_L → ∞` limit `|R_P/(1 + jωR_P C_P)|²`.
pub fn transfer_dynamic(m: &SmallSignalModel, load: Load, f: f64) -> f64 {
    let rp = m.parallel_resistance;
    let cp = m.parallel_capacitance;
    match load {
        Load::Resistive(rl) => {
            let denom = Complex64::new(rl / rp + 1.0, omega(f) * rl * cp);
            (rl / denom).norm_sqr()
        }
        Load::Open => {
            let denom = Complex64::new(1.0, omega(f) * rp * cp);
            (rp / denom).norm_sqr()
        }
    }
}

/// Bias-dependent power transimpedance
/// `|1/(1/R_SH + 1/r(V) + jωC_P(V) + 1/R_L)|²`, Ω².
///
/// Written in admittance form straight from the diode law; the 1/r term is
/// dropped while the diode is not forward conducting.
pub fn transfer_bias(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    v_dc: f64,
    load: Load,
    f: f64,
) -> f64 {
    let diode_g = small_signal_resistance(d, v_dc).map_or(0.0, |r| 1.0 / r);
    let g = 1.0 / s.shunt_resistance + diode_g + load.conductance();
    let b = omega(f) * parallel_capacitance(c, d.temperature, v_dc);
    1.0 / Complex64::new(g, b).norm_sqr()
}

/// Conventional single-diode transfer with series resistance and lead
/// inductance: `|(R_L/R_X)/(1/r + jωC + 1/R_SH + 1/R_X)|²`,
/// `R_X = R_S + R_L + jωL`.
///
/// Requires a finite load.
pub fn transfer_conventional(
    d: &DiodeParams,
    s: &PvStaticParams,
    c: &CapacitanceModel,
    op: &OperatingPoint,
    f: f64,
) -> Result<f64> {
    let rl = match op.load {
        Load::Resistive(r) => r,
        Load::Open => {
            return Err(Error::InvalidParameter(
                "conventional transfer needs a finite load".into(),
            ))
        }
    };
    let w = omega(f);
    let v = op.bias_voltage;
    let diode_g = small_signal_resistance(d, v).map_or(0.0, |r| 1.0 / r);
    let rx = Complex64::new(s.series_resistance + rl, w * s.wire_inductance);
    let y = Complex64::new(diode_g + 1.0 / s.shunt_resistance, w * parallel_capacitance(c, d.temperature, v))
        + rx.inv();
    Ok(((rl / rx) / y).norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::dc::solve_operating_point;
    use approx::assert_relative_eq;

    fn model() -> SmallSignalModel {
        SmallSignalModel::new(2500.0, 37.4e-9, 10.0).unwrap()
    }

    #[test]
    fn dark_zero_bias_falls_back_to_shunt() {
        let d = DiodeParams::new(1e-9, 1.5, 300.0).unwrap();
        let s = PvStaticParams::new(35e3, 10.0, 0.0).unwrap();
        let c = CapacitanceModel::empirical_through(10e-9, 5.0, 90e-9).unwrap();
        let op = solve_operating_point(&d, &s, &c, 0.0, Load::Open).unwrap();
        let m = small_signal_at(&d, &s, &c, &op);
        assert_eq!(m.parallel_resistance, 35e3);
        assert_eq!(m.parallel_capacitance, 10e-9);
        assert_eq!(m.lifetime(), m.parallel_resistance * m.parallel_capacitance);
    }

    #[test]
    fn internal_impedance_limits() {
        let m = model();
        assert_eq!(internal_impedance(&m, 0.0), Complex64::new(2510.0, 0.0));
        let hf = internal_impedance(&m, 1e15);
        assert_relative_eq!(hf.re, 10.0, max_relative = 1e-9);
        assert!(hf.im.abs() < 1e-6);
        let apex = 1.0 / (2.0 * PI * m.lifetime());
        let z = internal_impedance(&m, apex);
        assert_relative_eq!(z.re, 10.0 + 1250.0, max_relative = 1e-12);
        assert_relative_eq!(z.im, -1250.0, max_relative = 1e-12);
    }

    #[test]
    fn receiver_impedance_degenerates_to_internal() {
        let m = model();
        assert_eq!(receiver_impedance(&m, Load::Resistive(800.0), 0.0).re, 10.0 + 2500.0 * 800.0 / 3300.0);
        for f in [0.0, 10.0, 1e3, 1e5] {
            let a = receiver_impedance(&m, Load::Open, f);
            let b = internal_impedance(&m, f);
            assert_relative_eq!(a.re, b.re, max_relative = 1e-14);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-14, epsilon = 1e-300);
        }
    }

    #[test]
    fn transfer_dynamic_dc_and_open_limit() {
        let m = SmallSignalModel::new(2.0, 1e-6, 0.0).unwrap();
        assert_relative_eq!(transfer_dynamic(&m, Load::Resistive(2.0), 0.0), 1.0, max_relative = 1e-15);
        let m = model();
        for f in [0.0, 500.0, 1.7e3, 1e5] {
            let far = transfer_dynamic(&m, Load::Resistive(1e15), f);
            let open = transfer_dynamic(&m, Load::Open, f);
            assert_relative_eq!(far, open, max_relative = 1e-9);
        }
    }

    #[test]
    fn transfer_dynamic_half_power_at_pole() {
        let m = model();
        let load = Load::Resistive(800.0);
        let f3 = m.pole_frequency(load);
        let ratio = transfer_dynamic(&m, load, f3) / transfer_dynamic(&m, load, 0.0);
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn transfer_conventional_rejects_open_load() {
        let d = DiodeParams::new(1e-9, 1.5, 300.0).unwrap();
        let s = PvStaticParams::new(35e3, 10.0, 0.0).unwrap();
        let c = CapacitanceModel::empirical(10e-9, 2.0).unwrap();
        let op = OperatingPoint::biased(0.3, Load::Open);
        assert!(transfer_conventional(&d, &s, &c, &op, 1e3).is_err());
    }
}
