//! Fixed physical constants (CODATA 2018 exact values).

/// Physical constants used by the diode and capacitance laws.
///
/// Both values are exact in the 2019 SI redefinition and cannot be altered
/// at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhysicalConstants;

impl PhysicalConstants {
    /// Elementary charge, C.
    pub const Q: f64 = 1.602_176_634e-19;
    /// Boltzmann constant, J/K.
    pub const K_B: f64 = 1.380_649e-23;

    /// Thermal voltage k_B·T/q at temperature `t` (K).
    #[inline]
    pub fn thermal_voltage(t: f64) -> f64 {
        Self::K_B * t / Self::Q
    }
}
