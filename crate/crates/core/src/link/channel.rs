//! LED and receiver low-pass stages plus additive noise on the load.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::LinkConfig;
use crate::error::{Error, Result};

/// First-order low-pass discretized by the bilinear transform, prewarped so
/// the -3 dB point lands exactly on `corner`.
#[derive(Debug, Clone, Copy)]
pub struct SinglePoleFilter {
    b0: f64,
    a1: f64,
    x_prev: f64,
    y_prev: f64,
}

impl SinglePoleFilter {
    pub fn new(corner: f64, sample_rate: f64) -> Self {
        let k = (PI * corner / sample_rate).tan();
        Self {
            b0: k / (1.0 + k),
            a1: (k - 1.0) / (k + 1.0),
            x_prev: 0.0,
            y_prev: 0.0,
        }
    }

    /// Sets the state to the steady response of a constant input `x`.
    pub fn settle(&mut self, x: f64) {
        self.x_prev = x;
        self.y_prev = x;
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = self.b0 * (x + self.x_prev) - self.a1 * self.y_prev;
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

/// Noise RNG for a seed, kept on a separate stream from the data bits.
pub(crate) fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn check_sample_rate(cfg: &LinkConfig) -> Result<()> {
    let (fs, need) = (cfg.sample_rate(), cfg.required_sample_rate());
    if fs < need {
        return Err(Error::SampleRateTooLow {
            sample_rate: fs,
            required: need,
        });
    }
    Ok(())
}

/// Noiseless load voltage for a normalized intensity waveform.
///
/// Both poles start settled at the waveform's mean, the LED's DC bias, so
/// the frame begins without a start-up transient.
pub fn channel_response(waveform: &[f64], cfg: &LinkConfig) -> Result<Vec<f64>> {
    check_sample_rate(cfg)?;
    let fs = cfg.sample_rate();
    let mut led = SinglePoleFilter::new(cfg.led_f3db, fs);
    let mut rx = SinglePoleFilter::new(cfg.receiver.pole_frequency(), fs);
    if !waveform.is_empty() {
        let bias = waveform.iter().sum::<f64>() / waveform.len() as f64;
        led.settle(bias);
        rx.settle(bias);
    }
    let scale = cfg.receiver.gain() * cfg.receiver.photocurrent;
    Ok(waveform
        .iter()
        .map(|&x| scale * rx.step(led.step(x)))
        .collect())
}

/// Per-sample noise standard deviation for a white density over the
/// simulation bandwidth fs/2.
pub fn noise_sigma(cfg: &LinkConfig) -> f64 {
    cfg.noise_density * (cfg.sample_rate() / 2.0).sqrt()
}

/// [`channel_response`] plus white Gaussian noise seeded by `cfg.rng_seed`.
pub fn channel_filter(waveform: &[f64], cfg: &LinkConfig) -> Result<Vec<f64>> {
    let mut out = channel_response(waveform, cfg)?;
    add_noise(&mut out, cfg, &mut noise_rng(cfg.rng_seed));
    Ok(out)
}

pub(crate) fn add_noise(v: &mut [f64], cfg: &LinkConfig, rng: &mut ChaCha8Rng) {
    let sigma = noise_sigma(cfg);
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
        for x in v.iter_mut() {
            *x += normal.sample(rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::config::ReceiverConfig;
    use crate::model::{Load, SmallSignalModel};

    fn cfg(led: f64, sps: usize, symbol_rate: f64) -> LinkConfig {
        let rx = ReceiverConfig {
            model: SmallSignalModel::new(2500.0, 37.4e-9, 10.0).unwrap(),
            load: Load::Resistive(800.0),
            photocurrent: 3e-4,
        };
        LinkConfig {
            led_f3db: led,
            samples_per_symbol: sps,
            ..LinkConfig::new(symbol_rate, rx)
        }
    }

    #[test]
    fn dc_input_settles_to_transimpedance() {
        let c = cfg(1.2e6, 16, 1e6);
        let mut w = vec![0.0; 4];
        w.extend(vec![1.0; 16 * 20_000]);
        let y = channel_response(&w, &c).unwrap();
        let expected = c.receiver.gain() * 3e-4;
        let tau = 1.0 / (2.0 * PI * c.receiver.pole_frequency());
        let settled = (10.0 * tau * c.sample_rate()) as usize + 4;
        assert!(settled < y.len());
        assert!((y[settled] / expected - 1.0).abs() < 1e-3);
    }

    #[test]
    fn sine_at_receiver_pole_is_half_power() {
        let c = cfg(1e6, 8, 2.5e6);
        let f = c.receiver.pole_frequency();
        let fs = c.sample_rate();
        let n = (200.0 * fs / f) as usize;
        let w: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let y = channel_response(&w, &c).unwrap();
        let tail = &y[n / 2..];
        let peak = tail.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let ratio = peak / (c.receiver.gain() * 3e-4);
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn impulse_energy_matches_two_pole_formula() {
        let c = cfg(200e3, 64, 1e6);
        let fs = c.sample_rate();
        let (a, b) = (2.0 * PI * 200e3, 2.0 * PI * c.receiver.pole_frequency());
        let mut w = vec![0.0; 2_000_000];
        w[1] = fs;
        let scale = c.receiver.gain() * 3e-4;
        let y = channel_response(&w, &c).unwrap();
        let energy: f64 = y.iter().map(|v| (v / scale).powi(2)).sum::<f64>() / fs;
        let analytic = a * b / (2.0 * (a + b));
        assert!((energy / analytic - 1.0).abs() < 0.01, "{energy} vs {analytic}");
    }

    #[test]
    fn undersampling_rejected() {
        let c = cfg(1.2e6, 4, 1e6);
        assert!(matches!(
            channel_response(&[1.0; 8], &c),
            Err(Error::SampleRateTooLow { .. })
        ));
    }

    #[test]
    fn noise_is_seeded() {
        let mut c = cfg(1.2e6, 16, 1e6);
        c.noise_density = 1e-6;
        let w = vec![1.0; 1000];
        let a = channel_filter(&w, &c).unwrap();
        assert_eq!(a, channel_filter(&w, &c).unwrap());
        c.rng_seed = 1;
        assert_ne!(a, channel_filter(&w, &c).unwrap());
    }
}
