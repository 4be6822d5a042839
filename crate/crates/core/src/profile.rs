//! Named module profiles and their calibration against observed anchors.
//!
//! A profile bundles everything needed to predict the receiver at a given
//! illuminance and load: diode law, parasitics, capacitance law and the
//! illuminance-to-photocurrent responsivity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::{evaluate_load, LoadSweepPoint};
use crate::lsq::{self, LmConfig};
use crate::model::{
    small_signal_at, solve_operating_point, CapacitanceLaw, CapacitanceModel, DiodeParams, Load,
    OperatingPoint, PvStaticParams, SmallSignalModel,
};
use crate::schema;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleProfile {
    #[serde(default = "schema::current")]
    pub schema_version: u32,
    pub name: String,
    pub diode: DiodeParams,
    #[serde(rename = "static")]
    pub static_params: PvStaticParams,
    pub capacitance: CapacitanceModel,
    /// Photocurrent per unit illuminance κ, A/lux.
    pub responsivity: f64,
}

impl ModuleProfile {
    pub fn validate(&self) -> Result<()> {
        schema::check(self.schema_version, "module profile")?;
        self.diode.validate()?;
        self.static_params.validate()?;
        self.capacitance.validate_at(self.diode.temperature)?;
        if !(self.responsivity.is_finite() && self.responsivity > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "responsivity must be > 0, got {}",
                self.responsivity
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// I_PH = κ·E.
    pub fn photocurrent(&self, lux: f64) -> f64 {
        self.responsivity * lux
    }

    pub fn operating_point(&self, lux: f64, load: Load) -> Result<OperatingPoint> {
        if !(lux.is_finite() && lux >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "illuminance must be >= 0, got {lux}"
            )));
        }
        let mut op = solve_operating_point(
            &self.diode,
            &self.static_params,
            &self.capacitance,
            self.photocurrent(lux),
            load,
        )?;
        op.illuminance = Some(lux);
        Ok(op)
    }

    pub fn small_signal(&self, lux: f64, load: Load) -> Result<SmallSignalModel> {
        let op = self.operating_point(lux, load)?;
        Ok(small_signal_at(&self.diode, &self.static_params, &self.capacitance, &op))
    }

    /// Small-signal model of the unilluminated module held at `bias`.
    pub fn small_signal_biased(&self, bias: f64) -> SmallSignalModel {
        small_signal_at(
            &self.diode,
            &self.static_params,
            &self.capacitance,
            &OperatingPoint::biased(bias, Load::Open),
        )
    }

    /// Gain, bandwidth and gain-bandwidth product at one illuminance and load.
    pub fn evaluate(&self, lux: f64, load: Load) -> Result<LoadSweepPoint> {
        evaluate_load(
            &self.diode,
            &self.static_params,
            &self.capacitance,
            self.photocurrent(lux),
            load,
        )
    }

    /// CdTe module profile calibrated against the published impedance and
    /// bandwidth observations in `data/anchors_cdte.json`.
    pub fn reference_cdte() -> Self {
        Self {
            schema_version: schema::SCHEMA_VERSION,
            name: "cdte-165x133".into(),
            diode: DiodeParams {
                saturation_current: REFERENCE[1],
                ideality: REFERENCE[2],
                temperature: 300.0,
            },
            static_params: PvStaticParams {
                shunt_resistance: REFERENCE[3],
                series_resistance: 10.0,
                wire_inductance: 0.0,
            },
            capacitance: CapacitanceModel {
                law: CapacitanceLaw::Empirical {
                    c0: REFERENCE[4],
                    voltage_scale: REFERENCE[5],
                },
                reverse_capacitance: REFERENCE[4],
            },
            responsivity: REFERENCE[0],
        }
    }
}

/// κ, I_0, n, R_SH, C_0, V_c of [`ModuleProfile::reference_cdte`].
const REFERENCE: [f64; 6] = [
    1.425_633_130_661_056e-6,
    5.182_371_556_293_27e-7,
    21.406_382_948_093_473,
    39_606.129_750_124_164,
    6.961_491_628_032_931e-9,
    1.953_570_731_133_335_2,
];

fn default_weight() -> f64 {
    1.0
}

/// One observation the calibrated profile should reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Anchor {
    /// Open-circuit R_P at an illuminance, Ω.
    RpAtLux {
        lux: f64,
        value: f64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// 3-dB bandwidth at an illuminance and load, Hz.
    F3dbAtLux {
        lux: f64,
        #[serde(default)]
        load: Load,
        value: f64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// C_P at an illuminance and load, F.
    CpAtLux {
        lux: f64,
        #[serde(default)]
        load: Load,
        value: f64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// Dark R_P under an applied bias, Ω.
    RpAtBias {
        bias_v: f64,
        value: f64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    /// Dark C_P under an applied bias, F.
    CpAtBias {
        bias_v: f64,
        value: f64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
}

impl Anchor {
    pub fn value(&self) -> f64 {
        match *self {
            Anchor::RpAtLux { value, .. }
            | Anchor::F3dbAtLux { value, .. }
            | Anchor::CpAtLux { value, .. }
            | Anchor::RpAtBias { value, .. }
            | Anchor::CpAtBias { value, .. } => value,
        }
    }

    pub fn weight(&self) -> f64 {
        match *self {
            Anchor::RpAtLux { weight, .. }
            | Anchor::F3dbAtLux { weight, .. }
            | Anchor::CpAtLux { weight, .. }
            | Anchor::RpAtBias { weight, .. }
            | Anchor::CpAtBias { weight, .. } => weight,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Anchor::RpAtLux { lux, .. } => format!("R_P at {lux} lux, open"),
            Anchor::F3dbAtLux { lux, load, .. } => format!("f_3dB at {lux} lux, load {load}"),
            Anchor::CpAtLux { lux, load, .. } => format!("C_P at {lux} lux, load {load}"),
            Anchor::RpAtBias { bias_v, .. } => format!("dark R_P at {bias_v} V"),
            Anchor::CpAtBias { bias_v, .. } => format!("dark C_P at {bias_v} V"),
        }
    }

    /// The anchored quantity as predicted by `p`.
    pub fn predict(&self, p: &ModuleProfile) -> Result<f64> {
        Ok(match *self {
            Anchor::RpAtLux { lux, .. } => p.small_signal(lux, Load::Open)?.parallel_resistance,
            Anchor::F3dbAtLux { lux, load, .. } => p.small_signal(lux, load)?.pole_frequency(load),
            Anchor::CpAtLux { lux, load, .. } => p.small_signal(lux, load)?.parallel_capacitance,
            Anchor::RpAtBias { bias_v, .. } => p.small_signal_biased(bias_v).parallel_resistance,
            Anchor::CpAtBias { bias_v, .. } => p.small_signal_biased(bias_v).parallel_capacitance,
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = self.value().is_finite()
            && self.value() > 0.0
            && self.weight().is_finite()
            && self.weight() >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "{}: value must be > 0 and weight >= 0",
                self.describe()
            )))
        }
    }
}

fn default_name() -> String {
    "calibrated".into()
}
fn default_temperature() -> f64 {
    300.0
}
fn default_series_resistance() -> f64 {
    10.0
}

/// Input document of [`calibrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSet {
    #[serde(default = "schema::current")]
    pub schema_version: u32,
    #[serde(default = "default_name")]
    pub name: String,
    /// Held fixed, K.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Held fixed, Ω.
    #[serde(default = "default_series_resistance")]
    pub series_resistance: f64,
    pub anchors: Vec<Anchor>,
    /// Starting point; a generic CdTe-like guess when absent.
    #[serde(default)]
    pub initial: Option<ModuleProfile>,
}

impl AnchorSet {
    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)?;
        schema::check(a.schema_version, "anchor set")?;
        for anchor in &a.anchors {
            anchor.validate()?;
        }
        Ok(a)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Free parameters: κ, I_0, n, R_SH, C_0 (= C_rev) and V_c.
pub const CALIBRATION_PARAMETERS: usize = 6;

/// Anchor-wise comparison after calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorFit {
    pub anchor: String,
    pub target: f64,
    pub predicted: f64,
    /// predicted/target − 1.
    pub relative_error: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub profile: ModuleProfile,
    pub anchors: Vec<AnchorFit>,
    /// Weighted sum of squared log-ratios.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn initial_guess() -> [f64; 6] {
    [1.8e-6, 4e-6, 28.0, 35e3, 10e-9, 2.28]
}

fn pack(p: &ModuleProfile) -> Result<Vec<f64>> {
    let CapacitanceLaw::Empirical { c0, voltage_scale } = p.capacitance.law else {
        return Err(Error::Validation(
            "calibration needs an empirical capacitance law".into(),
        ));
    };
    Ok(vec![
        p.responsivity.ln(),
        p.diode.saturation_current.ln(),
        (p.diode.ideality - 1.0).max(1e-6).ln(),
        p.static_params.shunt_resistance.ln(),
        c0.ln(),
        voltage_scale.ln(),
    ])
}

fn unpack(theta: &[f64], set: &AnchorSet) -> ModuleProfile {
    let c0 = theta[4].exp();
    ModuleProfile {
        schema_version: schema::SCHEMA_VERSION,
        name: set.name.clone(),
        diode: DiodeParams {
            saturation_current: theta[1].exp(),
            ideality: 1.0 + theta[2].exp(),
            temperature: set.temperature,
        },
        static_params: PvStaticParams {
            shunt_resistance: theta[3].exp(),
            series_resistance: set.series_resistance,
            wire_inductance: 0.0,
        },
        capacitance: CapacitanceModel {
            law: CapacitanceLaw::Empirical {
                c0,
                voltage_scale: theta[5].exp(),
            },
            reverse_capacitance: c0,
        },
        responsivity: theta[0].exp(),
    }
}

/// Fits the six free parameters to the anchors by weighted least squares
/// on log-ratios `w·ln(predicted/target)`.
///
/// Fails with [`Error::Underdetermined`] when fewer than six anchors carry
/// weight, or when the anchors do not constrain six independent directions
/// at the starting point.
pub fn calibrate(set: &AnchorSet) -> Result<CalibrationReport> {
    schema::check(set.schema_version, "anchor set")?;
    if !(set.temperature > 0.0 && set.series_resistance >= 0.0) {
        return Err(Error::Validation(
            "temperature must be > 0 and series resistance >= 0".into(),
        ));
    }
    let active: Vec<Anchor> = set.anchors.iter().copied().filter(|a| a.weight() > 0.0).collect();
    for a in &active {
        a.validate()?;
    }
    if active.len() < CALIBRATION_PARAMETERS {
        return Err(Error::Underdetermined {
            anchors: active.len(),
            parameters: CALIBRATION_PARAMETERS,
        });
    }

    let residuals = |theta: &[f64]| -> Option<Vec<f64>> {
        let p = unpack(theta, set);
        active
            .iter()
            .map(|a| {
                let pred = a.predict(&p).ok()?;
                (pred > 0.0).then(|| a.weight() * (pred / a.value()).ln())
            })
            .collect()
    };

    let x0 = match &set.initial {
        Some(p) => pack(p)?,
        None => {
            let g = initial_guess();
            vec![g[0].ln(), g[1].ln(), (g[2] - 1.0).ln(), g[3].ln(), g[4].ln(), g[5].ln()]
        }
    };
    let cfg = LmConfig {
        max_iterations: 500,
        relative_tolerance: 1e-12,
        ..LmConfig::default()
    };
    let j = lsq::jacobian(&residuals, &x0, cfg.jacobian_step).ok_or_else(|| {
        Error::Validation("anchors cannot be evaluated at the starting profile".into())
    })?;
    let rank = lsq::column_scaled_rank(&j, 1e-9);
    if rank < CALIBRATION_PARAMETERS {
        return Err(Error::Underdetermined {
            anchors: rank,
            parameters: CALIBRATION_PARAMETERS,
        });
    }

    let out = lsq::minimize(residuals, &x0, &cfg);
    let profile = unpack(&out.params, set);
    profile.validate()?;
    let anchors = set
        .anchors
        .iter()
        .map(|a| {
            let predicted = a.predict(&profile).unwrap_or(f64::NAN);
            AnchorFit {
                anchor: a.describe(),
                target: a.value(),
                predicted,
                relative_error: predicted / a.value() - 1.0,
                weight: a.weight(),
            }
        })
        .collect();
    Ok(CalibrationReport {
        profile,
        anchors,
        objective: out.objective,
        iterations: out.iterations,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_profile_is_valid_and_round_trips_json() {
        let p = ModuleProfile::reference_cdte();
        p.validate().unwrap();
        let text = serde_json::to_string_pretty(&p).unwrap();
        assert!(text.contains("\"static\""));
        assert_eq!(ModuleProfile::from_json(&text).unwrap(), p);
        let bad = text.replacen("\"name\"", "\"colour\": 1, \"name\"", 1);
        assert!(ModuleProfile::from_json(&bad).is_err());
    }

    #[test]
    fn photocurrent_is_linear_in_lux() {
        let p = ModuleProfile::reference_cdte();
        assert_eq!(p.photocurrent(0.0), 0.0);
        assert_eq!(p.photocurrent(200.0), 200.0 * p.responsivity);
        assert!(p.operating_point(-1.0, Load::Open).is_err());
    }

    #[test]
    fn dark_reverse_bias_sees_shunt_and_reverse_capacitance() {
        let p = ModuleProfile::reference_cdte();
        let m = p.small_signal_biased(-1.0);
        assert_eq!(m.parallel_resistance, p.static_params.shunt_resistance);
        assert_eq!(m.parallel_capacitance, p.capacitance.reverse_capacitance);
    }

    #[test]
    fn two_anchors_are_underdetermined() {
        let set = AnchorSet::from_json(
            r#"{"anchors": [
                {"kind": "rp_at_lux", "lux": 200, "value": 2500},
                {"kind": "cp_at_bias", "bias_v": 0, "value": 1e-8}
            ]}"#,
        )
        .unwrap();
        assert_eq!(
            calibrate(&set),
            Err(Error::Underdetermined { anchors: 2, parameters: 6 })
        );
    }

    #[test]
    fn redundant_anchors_are_underdetermined() {
        let a = Anchor::RpAtBias { bias_v: -1.0, value: 35e3, weight: 1.0 };
        let set = AnchorSet {
            schema_version: 1,
            name: "x".into(),
            temperature: 300.0,
            series_resistance: 10.0,
            anchors: vec![a; 7],
            initial: None,
        };
        assert!(matches!(calibrate(&set), Err(Error::Underdetermined { .. })));
    }
}
