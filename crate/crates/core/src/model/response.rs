//! Sampled frequency responses and 3-dB bandwidth readout.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::params::Load;
use super::small_signal::{transfer_dynamic, SmallSignalModel};
use crate::error::{Error, Result};

/// How the response values relate to signal power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseScale {
    /// Values are squared magnitudes; half power is `dc/2`.
    Power,
    /// Values are magnitudes; half power is `dc/√2`.
    Magnitude,
}

/// Single-pole skeleton of a model-generated response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglePole {
    /// Effective resistance, Ω.
    pub resistance: f64,
    /// Capacitance, F.
    pub capacitance: f64,
}

impl SinglePole {
    pub fn corner(&self) -> f64 {
        1.0 / (2.0 * PI * self.resistance * self.capacitance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub frequency: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub samples: Vec<ResponseSample>,
    pub scale: ResponseScale,
    /// Reference value at DC (or the lowest sampled frequency for measured data).
    pub dc_value: f64,
    /// Present when the producing model is a single real pole.
    pub pole: Option<SinglePole>,
}

impl FrequencyResponse {
    pub fn new(
        samples: Vec<ResponseSample>,
        scale: ResponseScale,
        dc_value: f64,
        pole: Option<SinglePole>,
    ) -> Result<Self> {
        if !(dc_value.is_finite() && dc_value > 0.0) {
            return Err(Error::Validation(format!(
                "response needs a finite positive DC value, got {dc_value}"
            )));
        }
        let mut prev = 0.0;
        for s in &samples {
            if !(s.frequency > prev) || !s.frequency.is_finite() {
                return Err(Error::Validation(
                    "response frequencies must be positive and strictly increasing".into(),
                ));
            }
            prev = s.frequency;
        }
        Ok(Self {
            samples,
            scale,
            dc_value,
            pole,
        })
    }

    /// Samples a model transfer function on `freqs`.
    pub fn from_fn(
        freqs: &[f64],
        scale: ResponseScale,
        dc_value: f64,
        pole: Option<SinglePole>,
        mut value: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        let samples = freqs
            .iter()
            .map(|&frequency| ResponseSample {
                frequency,
                value: value(frequency),
            })
            .collect();
        Self::new(samples, scale, dc_value, pole)
    }

    /// Half-power threshold expressed in this response's value units.
    pub fn half_power_value(&self) -> f64 {
        match self.scale {
            ResponseScale::Power => self.dc_value / 2.0,
            ResponseScale::Magnitude => self.dc_value / SQRT_2,
        }
    }

    fn power(&self, v: f64) -> f64 {
        match self.scale {
            ResponseScale::Power => v,
            ResponseScale::Magnitude => v * v,
        }
    }

    /// 3-dB point read off the samples, interpolating linearly in
    /// (log f, power) between the bracketing samples.
    pub fn sampled_bandwidth(&self) -> Result<f64> {
        let target = self.power(self.half_power_value());
        let mut prev: Option<(f64, f64)> = None;
        for s in &self.samples {
            let p = self.power(s.value);
            if p <= target {
                return Ok(match prev {
                    None => s.frequency,
                    Some((f0, p0)) => {
                        let (l0, l1) = (f0.ln(), s.frequency.ln());
                        let t = if p0 == p { 0.0 } else { (p0 - target) / (p0 - p) };
                        (l0 + t * (l1 - l0)).exp()
                    }
                });
            }
            prev = Some((s.frequency, p));
        }
        Err(Error::NotReached)
    }

    /// Renders `f_hz,value` rows.
    pub fn to_csv(&self, value_header: &str) -> String {
        let mut out = format!("f_hz,{value_header}\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.frequency, s.value));
        }
        out
    }
}

/// 3-dB bandwidth of a response.
///
/// Uses the analytic corner `1/(2πRC)` when the response carries a
/// single-pole skeleton, otherwise interpolates the sampled curve.
pub fn bandwidth_3db(response: &FrequencyResponse) -> Result<f64> {
    match response.pole {
        Some(p) => Ok(p.corner()),
        None => response.sampled_bandwidth(),
    }
}

/// `n` logarithmically spaced points from `start` to `stop` inclusive.
pub fn log_space(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        start
                    } else if i == n - 1 {
                        stop
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Power transimpedance of the loaded receiver sampled on `freqs`.
pub fn dynamic_response(m: &SmallSignalModel, load: Load, freqs: &[f64]) -> Result<FrequencyResponse> {
    let pole = SinglePole {
        resistance: m.loaded_resistance(load),
        capacitance: m.parallel_capacitance,
    };
    FrequencyResponse::from_fn(
        freqs,
        ResponseScale::Power,
        transfer_dynamic(m, load, 0.0),
        Some(pole),
        |f| transfer_dynamic(m, load, f),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_pole_is_one_hertz() {
        let m = SmallSignalModel::new(1.0, 1.0 / (2.0 * PI), 0.0).unwrap();
        let freqs = log_space(0.01, 100.0, 401);
        let r = dynamic_response(&m, Load::Open, &freqs).unwrap();
        assert!((bandwidth_3db(&r).unwrap() - 1.0).abs() < 1e-12);
        let sampled = r.sampled_bandwidth().unwrap();
        assert!((sampled - 1.0).abs() < 0.01, "{sampled}");
    }

    #[test]
    fn analytic_and_sampled_agree_within_grid_step() {
        let m = SmallSignalModel::new(2500.0, 37.4e-9, 10.0).unwrap();
        for load in [Load::Open, Load::Resistive(800.0), Load::Resistive(100.0)] {
            let freqs = log_space(1.0, 1e7, 141);
            let step = (1e7f64).powf(1.0 / 140.0);
            let r = dynamic_response(&m, load, &freqs).unwrap();
            let a = bandwidth_3db(&r).unwrap();
            let s = r.sampled_bandwidth().unwrap();
            assert!(s / a < step && a / s < step, "{a} {s}");
        }
    }

    #[test]
    fn not_reached_when_flat() {
        let r = FrequencyResponse::from_fn(&[1.0, 2.0, 3.0], ResponseScale::Power, 1.0, None, |_| 0.9)
            .unwrap();
        assert_eq!(bandwidth_3db(&r), Err(Error::NotReached));
    }

    #[test]
    fn rejects_non_increasing_frequencies() {
        let s = vec![
            ResponseSample { frequency: 2.0, value: 1.0 },
            ResponseSample { frequency: 1.0, value: 1.0 },
        ];
        assert!(FrequencyResponse::new(s, ResponseScale::Power, 1.0, None).is_err());
        assert!(FrequencyResponse::new(vec![], ResponseScale::Power, 0.0, None).is_err());
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(100.0, 4200.0, 60);
        assert_eq!(v.len(), 60);
        assert_eq!(v[0], 100.0);
        assert_eq!(v[59], 4200.0);
        assert!(v.windows(2).all(|w| w[1] > w[0]));
    }
}
