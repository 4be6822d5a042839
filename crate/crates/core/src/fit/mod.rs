//! Parameter extraction from impedance spectra.
//!
//! A spectrum of a single parallel RC behind a series resistance traces a
//! semicircle in the Nyquist plane. [`seed_estimate`] reads R_S and R_S + R_P
//! off its real-axis intercepts and C_P off the apex frequency;
//! [`cnls_fit`] then refines all three by complex nonlinear least squares.

mod spectrum;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use spectrum::{
    ImpedancePoint, ImpedanceSpectrum, SpectrumMetadata, CSV_HEADER, MAX_FREQUENCY, MIN_FREQUENCY,
};

use crate::error::{Error, Result};
use crate::lsq::{self, LmConfig};
use crate::model::{
    internal_impedance, FrequencyResponse, ResponseSample, ResponseScale, SmallSignalModel,
};
use crate::schema;

/// Minimum number of points accepted by [`cnls_fit`].
pub const MIN_FIT_POINTS: usize = 5;

/// Per-point weight in the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// w_k = 1.
    Unit,
    /// w_k = 1/|Z_k|².
    #[default]
    Proportional,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unit" => Ok(Weighting::Unit),
            "proportional" => Ok(Weighting::Proportional),
            _ => Err(Error::Validation(format!("unknown weighting '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: SmallSignalModel,
    /// RMS weighted complex misfit per point.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub weighting: Weighting,
    /// Objective before the first step and after every accepted step.
    pub objective_history: Vec<f64>,
}

impl FitResult {
    /// Turns an unconverged fit into [`Error::NoConvergence`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            schema_version: schema::SCHEMA_VERSION,
            r_s_ohm: self.model.series_resistance,
            r_p_ohm: self.model.parallel_resistance,
            c_p_f: self.model.parallel_capacitance,
            tau_n_s: self.model.lifetime(),
            residual: self.residual,
            iterations: self.iterations,
            converged: self.converged,
            weighting: self.weighting,
        }
    }
}

/// JSON form of a [`FitResult`], SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub schema_version: u32,
    pub r_s_ohm: f64,
    pub r_p_ohm: f64,
    pub c_p_f: f64,
    pub tau_n_s: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub weighting: Weighting,
}

/// Initial (R_S, R_P, C_P) from the geometry of the Nyquist arc.
pub fn seed_estimate(s: &ImpedanceSpectrum) -> Result<SmallSignalModel> {
    s.validate()?;
    if s.decades() < 1.0 {
        return Err(Error::Validation(format!(
            "spectrum spans {:.2} decades, need at least one",
            s.decades()
        )));
    }
    let pts = &s.points;
    let (apex, neg_im_max) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, -p.im))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if neg_im_max <= 0.0 {
        return Err(Error::DegenerateSpectrum(
            "no capacitive arc: -Im{Z} is non-positive everywhere".into(),
        ));
    }

    // high-frequency intercept: smallest |im| above the apex, latest wins ties
    let r_s = pts[apex..]
        .iter()
        .rev()
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .map(|p| p.re)
        .unwrap_or(pts[pts.len() - 1].re);
    // low-frequency intercept: smallest |im| below the apex, earliest wins ties
    let r_total = pts[..=apex]
        .iter()
        .min_by(|a, b| a.im.abs().total_cmp(&b.im.abs()))
        .map(|p| p.re)
        .unwrap_or(pts[0].re);

    let f_apex = refine_apex(pts, apex);
    let r_s = r_s.max(0.0);
    let r_p = r_total - r_s;
    if !(r_p > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "low-frequency intercept {r_total} Ω does not exceed high-frequency intercept {r_s} Ω"
        )));
    }
    let c_p = 1.0 / (2.0 * PI * f_apex * r_p);
    SmallSignalModel::new(r_p, c_p, r_s)
}

/// Parabolic refinement of the -Im{Z} peak in log-frequency.
fn refine_apex(pts: &[ImpedancePoint], i: usize) -> f64 {
    if i == 0 || i + 1 >= pts.len() {
        return pts[i].frequency;
    }
    let (x0, x1, x2) = (
        pts[i - 1].frequency.ln(),
        pts[i].frequency.ln(),
        pts[i + 1].frequency.ln(),
    );
    let (y0, y1, y2) = (-pts[i - 1].im, -pts[i].im, -pts[i + 1].im);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature >= 0.0 {
        return pts[i].frequency;
    }
    // vertex of the interpolating parabola
    let x = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    x.clamp(x0, x2).exp()
}

fn unpack(theta: &[f64]) -> SmallSignalModel {
    SmallSignalModel {
        series_resistance: theta[0].exp(),
        parallel_resistance: theta[1].exp(),
        parallel_capacitance: theta[2].exp(),
    }
}

/// Complex nonlinear least-squares refinement of (R_S, R_P, C_P).
///
/// Parameters are optimized as logarithms, which keeps them positive. An
/// unconverged fit is returned with `converged = false`; see
/// [`FitResult::into_converged`].
pub fn cnls_fit(
    s: &ImpedanceSpectrum,
    seed: &SmallSignalModel,
    weighting: Weighting,
) -> Result<FitResult> {
    cnls_fit_with(s, seed, weighting, &LmConfig::default())
}

pub fn cnls_fit_with(
    s: &ImpedanceSpectrum,
    seed: &SmallSignalModel,
    weighting: Weighting,
    cfg: &LmConfig,
) -> Result<FitResult> {
    s.validate()?;
    if s.points.len() < MIN_FIT_POINTS {
        return Err(Error::Validation(format!(
            "need at least {MIN_FIT_POINTS} points to fit, got {}",
            s.points.len()
        )));
    }
    if !(seed.series_resistance > 0.0
        && seed.parallel_resistance > 0.0
        && seed.parallel_capacitance > 0.0)
    {
        return Err(Error::InvalidParameter(
            "seed parameters must all be positive".into(),
        ));
    }

    let data: Vec<(f64, Complex64, f64)> = s
        .points
        .iter()
        .map(|p| {
            let z = p.z();
            let w = match weighting {
                Weighting::Unit => 1.0,
                Weighting::Proportional => 1.0 / z.norm_sqr().max(f64::MIN_POSITIVE),
            };
            (p.frequency, z, w.sqrt())
        })
        .collect();
    let scale: f64 = data.iter().map(|(_, z, sw)| (sw * z).norm_sqr()).sum();

    let residuals = |theta: &[f64]| -> Option<Vec<f64>> {
        let m = unpack(theta);
        let mut r = Vec::with_capacity(2 * data.len());
        for &(f, z, sw) in &data {
            let d = (internal_impedance(&m, f) - z) * sw;
            r.push(d.re);
            r.push(d.im);
        }
        Some(r)
    };

    let cfg = LmConfig {
        absolute_tolerance: cfg.absolute_tolerance.max(1e-26 * scale),
        ..cfg.clone()
    };
    let theta0 = [
        seed.series_resistance.ln(),
        seed.parallel_resistance.ln(),
        seed.parallel_capacitance.ln(),
    ];
    let out = lsq::minimize(residuals, &theta0, &cfg);
    let n = data.len() as f64;
    Ok(FitResult {
        model: unpack(&out.params),
        residual: (out.objective / n).sqrt(),
        iterations: out.iterations,
        converged: out.converged,
        weighting,
        objective_history: out.history,
    })
}

/// Seeds and refines in one call.
pub fn fit_spectrum(s: &ImpedanceSpectrum, weighting: Weighting) -> Result<FitResult> {
    let mut seed = seed_estimate(s)?;
    // a zero high-frequency intercept cannot be log-parameterized
    if seed.series_resistance <= 0.0 {
        seed.series_resistance = seed.parallel_resistance * 1e-6;
    }
    cnls_fit(s, &seed, weighting)
}

/// Bode modulus |Z(f)| of a spectrum with its 3-dB point.
///
/// The reference level is |Z| at the lowest measured frequency; the 3-dB
/// frequency is where |Z|² first falls to half of it.
pub fn bode_modulus(s: &ImpedanceSpectrum) -> Result<FrequencyResponse> {
    s.validate()?;
    let samples: Vec<ResponseSample> = s
        .points
        .iter()
        .map(|p| ResponseSample {
            frequency: p.frequency,
            value: p.z().norm(),
        })
        .collect();
    let dc = samples[0].value;
    let r = FrequencyResponse::new(samples, ResponseScale::Magnitude, dc, None)?;
    r.sampled_bandwidth()?;
    Ok(r)
}
