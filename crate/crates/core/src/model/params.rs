//! Parameter sets describing a PV module as a single-diode receiver.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Shockley diode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiodeParams {
    /// Reverse saturation current I_0, A.
    pub saturation_current: f64,
    /// Ideality factor n. Module-level values include the series cell count.
    pub ideality: f64,
    /// Junction temperature, K.
    pub temperature: f64,
}

impl DiodeParams {
    pub fn new(saturation_current: f64, ideality: f64, temperature: f64) -> Result<Self> {
        let d = Self {
            saturation_current,
            ideality,
            temperature,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.saturation_current.is_finite() && self.saturation_current > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "saturation current must be > 0, got {}",
                self.saturation_current
            )));
        }
        if !(self.ideality.is_finite() && self.ideality >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ideality factor must be >= 1, got {}",
                self.ideality
            )));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be > 0 K, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    /// V_T = k_B·T/q.
    pub fn thermal_voltage(&self) -> f64 {
        PhysicalConstants::thermal_voltage(self.temperature)
    }

    /// n·V_T, the exponential voltage scale of the diode law.
    pub fn slope_voltage(&self) -> f64 {
        self.ideality * self.thermal_voltage()
    }
}

/// Static parasitics of the conventional single-diode circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvStaticParams {
    /// Shunt resistance R_SH, Ω. `f64::INFINITY` models an ideal (leak-free) cell.
    pub shunt_resistance: f64,
    /// Series resistance R_S, Ω.
    pub series_resistance: f64,
    /// Lead inductance, H. Only the conventional transfer function uses it.
    #[serde(default)]
    pub wire_inductance: f64,
}

impl PvStaticParams {
    pub fn new(shunt_resistance: f64, series_resistance: f64, wire_inductance: f64) -> Result<Self> {
        let s = Self {
            shunt_resistance,
            series_resistance,
            wire_inductance,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shunt_resistance.is_nan() || self.shunt_resistance <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shunt resistance must be > 0, got {}",
                self.shunt_resistance
            )));
        }
        if !(self.series_resistance.is_finite() && self.series_resistance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "series resistance must be >= 0, got {}",
                self.series_resistance
            )));
        }
        if !(self.wire_inductance.is_finite() && self.wire_inductance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "wire inductance must be >= 0, got {}",
                self.wire_inductance
            )));
        }
        if self.series_resistance > self.shunt_resistance / 100.0 {
            log::warn!(
                "series resistance {} Ω is not small against shunt resistance {} Ω",
                self.series_resistance,
                self.shunt_resistance
            );
        }
        Ok(())
    }
}

/// Forward-bias capacitance law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CapacitanceLaw {
    /// Diffusion capacitance from junction physics:
    /// `A·q²·L_j·n_0/(k_B·T)·exp(q·V/(k_B·T))`.
    Physical {
        /// Cell area, m².
        area: f64,
        /// Junction layer thickness, m.
        junction_thickness: f64,
        /// Equilibrium minority carrier density, m⁻³.
        equilibrium_density: f64,
    },
    /// `C_0·exp(V/V_c)`.
    Empirical {
        /// Capacitance at zero bias, F.
        c0: f64,
        /// Exponential voltage scale, V.
        voltage_scale: f64,
    },
}

/// Parallel capacitance C_P as a function of terminal bias.
///
/// Forward bias (V > 0) follows [`CapacitanceLaw`]; at or below zero bias the
/// depletion capacitance is treated as the constant `reverse_capacitance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitanceModel {
    pub law: CapacitanceLaw,
    /// Depletion capacitance C_rev used for V ≤ 0, F.
    pub reverse_capacitance: f64,
}

impl CapacitanceModel {
    /// Empirical law with `C(0+) = C_rev = c0`.
    pub fn empirical(c0: f64, voltage_scale: f64) -> Result<Self> {
        let c = Self {
            law: CapacitanceLaw::Empirical { c0, voltage_scale },
            reverse_capacitance: c0,
        };
        c.validate()?;
        Ok(c)
    }

    /// Empirical law through two points `(0, c_zero)` and `(v, c_at_v)`.
    pub fn empirical_through(c_zero: f64, v: f64, c_at_v: f64) -> Result<Self> {
        if !(v > 0.0 && c_at_v > c_zero && c_zero > 0.0) {
            return Err(Error::InvalidParameter(
                "need v > 0 and c_at_v > c_zero > 0".into(),
            ));
        }
        Self::empirical(c_zero, v / (c_at_v / c_zero).ln())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be > 0, got {x}")))
            }
        };
        positive("reverse capacitance", self.reverse_capacitance)?;
        match self.law {
            CapacitanceLaw::Physical {
                area,
                junction_thickness,
                equilibrium_density,
            } => {
                positive("area", area)?;
                positive("junction thickness", junction_thickness)?;
                positive("equilibrium density", equilibrium_density)?;
            }
            CapacitanceLaw::Empirical { c0, voltage_scale } => {
                positive("c0", c0)?;
                positive("voltage scale", voltage_scale)?;
            }
        }
        Ok(())
    }

    /// Validates against a temperature as well: the forward branch must not
    /// start below `reverse_capacitance`, or C_P(V) would step down at 0 V.
    pub fn validate_at(&self, temperature: f64) -> Result<()> {
        self.validate()?;
        let forward_onset = self.forward(temperature, 0.0);
        if forward_onset < self.reverse_capacitance * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "forward capacitance at 0+ V ({forward_onset:e} F) is below reverse capacitance ({:e} F)",
                self.reverse_capacitance
            )));
        }
        Ok(())
    }

    fn forward(&self, temperature: f64, v: f64) -> f64 {
        match self.law {
            CapacitanceLaw::Physical {
                area,
                junction_thickness,
                equilibrium_density,
            } => {
                let q = PhysicalConstants::Q;
                let kt = PhysicalConstants::K_B * temperature;
                area * q * q * junction_thickness * equilibrium_density / kt * (q * v / kt).exp()
            }
            CapacitanceLaw::Empirical { c0, voltage_scale } => c0 * (v / voltage_scale).exp(),
        }
    }

    /// C_P at bias `v_dc` and temperature `temperature`.
    pub fn capacitance(&self, temperature: f64, v_dc: f64) -> f64 {
        if v_dc <= 0.0 {
            self.reverse_capacitance
        } else {
            self.forward(temperature, v_dc)
        }
    }
}

/// Resistive load on the receiver terminals.
///
/// Serialized as a number of ohms, or the string `"open"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Load {
    #[default]
    Open,
    Resistive(f64),
}

impl Load {
    pub fn ohms(r: f64) -> Result<Self> {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "load resistance must be > 0, got {r}"
            )));
        }
        if r.is_infinite() {
            Ok(Load::Open)
        } else {
            Ok(Load::Resistive(r))
        }
    }

    /// Load conductance 1/R_L (0 when open).
    pub fn conductance(&self) -> f64 {
        match *self {
            Load::Open => 0.0,
            Load::Resistive(r) => 1.0 / r,
        }
    }

    /// R_L, `f64::INFINITY` when open.
    pub fn resistance(&self) -> f64 {
        match *self {
            Load::Open => f64::INFINITY,
            Load::Resistive(r) => r,
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Load::Open)
    }
}

impl fmt::Display for Load {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Load::Open => write!(f, "open"),
            Load::Resistive(r) => write!(f, "{r} Ω"),
        }
    }
}

impl std::str::FromStr for Load {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("open") || t.eq_ignore_ascii_case("inf") {
            return Ok(Load::Open);
        }
        let r: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse load '{s}'")))?;
        Load::ohms(r)
    }
}

impl Serialize for Load {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Load::Open => serializer.serialize_str("open"),
            Load::Resistive(r) => serializer.serialize_f64(r),
        }
    }
}

impl<'de> Deserialize<'de> for Load {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct LoadVisitor;

        impl Visitor<'_> for LoadVisitor {
            type Value = Load;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive resistance in ohms or \"open\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Load, E> {
                Load::ohms(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Load, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Load, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Load, E> {
                if v == "open" {
                    Ok(Load::Open)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(LoadVisitor)
    }
}
