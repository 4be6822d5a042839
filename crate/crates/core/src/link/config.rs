use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Load, SmallSignalModel};
use crate::schema;

/// Linearized receiver as seen by the link: its small-signal model, the
/// load it drives and the DC photocurrent setting the signal swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub model: SmallSignalModel,
    pub load: Load,
    /// DC photocurrent, A.
    pub photocurrent: f64,
}

impl ReceiverConfig {
    /// DC transimpedance R_P∥R_L, Ω.
    pub fn gain(&self) -> f64 {
        self.model.loaded_resistance(self.load)
    }

    pub fn pole_frequency(&self) -> f64 {
        self.model.pole_frequency(self.load)
    }
}

fn default_pam_order() -> u32 {
    8
}
fn default_samples_per_symbol() -> usize {
    8
}
fn default_modulation_index() -> f64 {
    0.43
}
fn default_led_f3db() -> f64 {
    1.2e6
}
fn default_preamble_len() -> usize {
    1000
}
fn default_payload_len() -> usize {
    10_000
}
fn default_eq_taps() -> usize {
    15
}
fn default_eq_step() -> f64 {
    1e-3
}
fn default_eq_epochs() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(default = "schema::current")]
    pub schema_version: u32,
    #[serde(default = "default_pam_order")]
    pub pam_order: u32,
    /// Symbols per second.
    pub symbol_rate: f64,
    #[serde(default = "default_samples_per_symbol")]
    pub samples_per_symbol: usize,
    /// Optical AC swing relative to the DC level.
    #[serde(default = "default_modulation_index")]
    pub modulation_index: f64,
    #[serde(default = "default_led_f3db")]
    pub led_f3db: f64,
    pub receiver: ReceiverConfig,
    /// White noise density on the load, V/√Hz.
    #[serde(default)]
    pub noise_density: f64,
    #[serde(default = "default_preamble_len")]
    pub preamble_len: usize,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    #[serde(default = "default_eq_taps")]
    pub eq_taps: usize,
    #[serde(default = "default_eq_step")]
    pub eq_step: f64,
    /// Passes over the preamble during equalizer training.
    #[serde(default = "default_eq_epochs")]
    pub eq_epochs: usize,
    #[serde(default)]
    pub rng_seed: u64,
}

impl LinkConfig {
    /// Defaults for everything but the rate and the receiver.
    pub fn new(symbol_rate: f64, receiver: ReceiverConfig) -> Self {
        Self {
            schema_version: schema::SCHEMA_VERSION,
            pam_order: default_pam_order(),
            symbol_rate,
            samples_per_symbol: default_samples_per_symbol(),
            modulation_index: default_modulation_index(),
            led_f3db: default_led_f3db(),
            receiver,
            noise_density: 0.0,
            preamble_len: default_preamble_len(),
            payload_len: default_payload_len(),
            eq_taps: default_eq_taps(),
            eq_step: default_eq_step(),
            eq_epochs: default_eq_epochs(),
            rng_seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        schema::check(cfg.schema_version, "link config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.pam_order < 2 || !self.pam_order.is_power_of_two() {
            return bad(format!("pam_order must be a power of two >= 2, got {}", self.pam_order));
        }
        if !(self.symbol_rate.is_finite() && self.symbol_rate > 0.0) {
            return bad(format!("symbol_rate must be > 0, got {}", self.symbol_rate));
        }
        if self.samples_per_symbol < 4 {
            return bad(format!(
                "samples_per_symbol must be >= 4, got {}",
                self.samples_per_symbol
            ));
        }
        if !(self.modulation_index > 0.0 && self.modulation_index <= 1.0) {
            return bad(format!(
                "modulation_index must lie in (0, 1], got {}",
                self.modulation_index
            ));
        }
        if !(self.led_f3db.is_finite() && self.led_f3db > 0.0) {
            return bad(format!("led_f3db must be > 0, got {}", self.led_f3db));
        }
        if !(self.noise_density.is_finite() && self.noise_density >= 0.0) {
            return bad(format!("noise_density must be >= 0, got {}", self.noise_density));
        }
        if self.preamble_len < 2 || self.payload_len == 0 {
            return bad("preamble_len must be >= 2 and payload_len > 0".into());
        }
        if self.eq_taps == 0 || self.eq_epochs == 0 {
            return bad("eq_taps and eq_epochs must be > 0".into());
        }
        if !(self.eq_step.is_finite() && self.eq_step >= 0.0) {
            return bad(format!("eq_step must be >= 0, got {}", self.eq_step));
        }
        if !(self.receiver.photocurrent.is_finite() && self.receiver.photocurrent > 0.0) {
            return bad(format!(
                "receiver photocurrent must be > 0, got {}",
                self.receiver.photocurrent
            ));
        }
        self.receiver.model.validate()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.pam_order.trailing_zeros() as usize
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate * self.samples_per_symbol as f64
    }

    pub fn bit_rate(&self) -> f64 {
        self.symbol_rate * self.bits_per_symbol() as f64
    }

    /// Copy running at `bit_rate` bits per second.
    pub fn with_bit_rate(&self, bit_rate: f64) -> Self {
        Self {
            symbol_rate: bit_rate / self.bits_per_symbol() as f64,
            ..self.clone()
        }
    }

    /// Faster of the two channel poles, Hz.
    pub fn max_pole(&self) -> f64 {
        self.led_f3db.max(self.receiver.pole_frequency())
    }

    /// Smallest sample rate the channel discretization accepts.
    pub fn required_sample_rate(&self) -> f64 {
        10.0 * self.max_pole()
    }

    /// Samples per symbol needed to meet [`Self::required_sample_rate`],
    /// never fewer than configured.
    pub fn adequate_samples_per_symbol(&self) -> usize {
        let need = (self.required_sample_rate() / self.symbol_rate).ceil() as usize;
        self.samples_per_symbol.max(need)
    }
}
