//! End-to-end link runs, data-rate search and noise calibration.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{channel_filter, channel_response};
use super::config::LinkConfig;
use super::equalizer::lms_equalize;
use super::pam::{level_amplitude, levels_to_bits, modulate_levels};
use super::sync::frame_sync;
use crate::error::{Error, Result};
use crate::schema;

/// Forward-error-correction BER threshold.
pub const FEC_THRESHOLD: f64 = 3.8e-3;

/// Payload bits simulated per point by [`find_max_rate`] and
/// [`calibrate_noise_density`].
pub const MIN_BITS_PER_RATE: usize = 100_000;

/// Random symbols sent before the preamble.
const GUARD_SYMBOLS: usize = 32;
/// How far past the guard the preamble may be found.
const SYNC_SLACK_SYMBOLS: usize = 64;
/// The preamble is shared knowledge, so it never depends on the run seed.
const PREAMBLE_SEED: u64 = 0x5EED_0FF1_2A3E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkResult {
    pub schema_version: u32,
    pub ber: f64,
    pub bit_errors: usize,
    pub bits: usize,
    /// Payload SNR after equalization, dB. Absent when sync failed.
    pub snr_est: Option<f64>,
    pub converged_sync: bool,
}

impl LinkResult {
    fn sync_failed(bits: usize) -> Self {
        let bit_errors = bits / 2;
        Self {
            schema_version: schema::SCHEMA_VERSION,
            ber: bit_errors as f64 / bits as f64,
            bit_errors,
            bits,
            snr_est: None,
            converged_sync: false,
        }
    }
}

/// Transmitted frame: guard, preamble, payload and tail level indices.
struct Frame {
    levels: Vec<usize>,
    preamble: Vec<usize>,
    payload: Vec<usize>,
}

fn random_levels(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..m)).collect()
}

/// The fixed training sequence for a given order and length.
pub fn preamble_levels(m: usize, n: usize) -> Vec<usize> {
    random_levels(&mut ChaCha8Rng::seed_from_u64(PREAMBLE_SEED), n, m)
}

fn build_frame(cfg: &LinkConfig) -> Frame {
    let m = cfg.pam_order as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let preamble = preamble_levels(m, cfg.preamble_len);
    let guard = random_levels(&mut rng, GUARD_SYMBOLS, m);
    let payload = random_levels(&mut rng, cfg.payload_len, m);
    let tail = random_levels(&mut rng, GUARD_SYMBOLS + SYNC_SLACK_SYMBOLS, m);
    let levels = [&guard[..], &preamble, &payload, &tail].concat();
    Frame {
        levels,
        preamble,
        payload,
    }
}

/// Received load voltage for the configured frame, noise included.
pub fn received_waveform(cfg: &LinkConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    channel_filter(&modulate_levels(&build_frame(cfg).levels, cfg), cfg)
}

/// Writes the received waveform as `t_s,v_volt` rows.
pub fn write_waveform_csv<W: Write>(cfg: &LinkConfig, writer: W) -> Result<()> {
    let v = received_waveform(cfg)?;
    let dt = 1.0 / cfg.sample_rate();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_s", "v_volt"])?;
    for (i, x) in v.iter().enumerate() {
        w.write_record([(i as f64 * dt).to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Modulate, filter, add noise, synchronize, equalize, demap and count.
pub fn run_link(cfg: &LinkConfig) -> Result<LinkResult> {
    cfg.validate()?;
    let m = cfg.pam_order as usize;
    let sps = cfg.samples_per_symbol;
    let frame = build_frame(cfg);
    let bits = cfg.payload_len * cfg.bits_per_symbol();

    let tx = modulate_levels(&frame.levels, cfg);
    let rx = channel_filter(&tx, cfg)?;

    let pre_amp: Vec<f64> = frame.preamble.iter().map(|&l| level_amplitude(l, m)).collect();
    let max_offset = (GUARD_SYMBOLS + SYNC_SLACK_SYMBOLS) * sps;
    let sync = match frame_sync(&rx, &pre_amp, sps, max_offset) {
        Ok(s) => s,
        Err(Error::SyncFailed { peak }) => {
            log::debug!("sync failed at {:.3e} Bd (peak {peak:.3})", cfg.symbol_rate);
            return Ok(LinkResult::sync_failed(bits));
        }
        Err(e) => return Err(e),
    };

    let n_sym = cfg.preamble_len + cfg.payload_len;
    let z: Vec<f64> = (0..n_sym).map(|j| rx[sync.offset + j * sps]).collect();

    // unit-RMS, zero-mean equalizer input, statistics from the preamble only
    let p = cfg.preamble_len;
    let mean = z[..p].iter().sum::<f64>() / p as f64;
    let rms = (z[..p].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / p as f64).sqrt();
    if !(rms > 0.0) {
        return Ok(LinkResult::sync_failed(bits));
    }
    let x: Vec<f64> = z.iter().map(|v| (v - mean) / rms).collect();

    let eq = lms_equalize(&x, &pre_amp, cfg.eq_taps, cfg.eq_step, cfg.eq_epochs)?;
    let y = eq.symbols;

    // decision centroids measured on the preamble
    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for (j, &l) in frame.preamble.iter().enumerate() {
        sum[l] += y[j];
        count[l] += 1;
    }
    let centroids: Vec<f64> = (0..m)
        .map(|l| {
            if count[l] > 0 {
                sum[l] / count[l] as f64
            } else {
                level_amplitude(l, m)
            }
        })
        .collect();

    let decided: Vec<usize> = y[p..]
        .iter()
        .map(|&v| {
            (0..m)
                .min_by(|&a, &b| (v - centroids[a]).abs().total_cmp(&(v - centroids[b]).abs()))
                .expect("at least two levels")
        })
        .collect();
    let sent_bits = levels_to_bits(&frame.payload, m);
    let got_bits = levels_to_bits(&decided, m);
    let bit_errors = sent_bits.iter().zip(&got_bits).filter(|(a, b)| a != b).count();

    let c_mean = frame.payload.iter().map(|&l| centroids[l]).sum::<f64>() / cfg.payload_len as f64;
    let (mut sig, mut noise) = (0.0, 0.0);
    for (j, &l) in frame.payload.iter().enumerate() {
        sig += (centroids[l] - c_mean).powi(2);
        noise += (y[p + j] - centroids[l]).powi(2);
    }
    let snr_est = 10.0 * (sig / noise.max(sig * 1e-30)).log10();

    Ok(LinkResult {
        schema_version: schema::SCHEMA_VERSION,
        ber: bit_errors as f64 / bits as f64,
        bit_errors,
        bits,
        snr_est: Some(snr_est),
        converged_sync: true,
    })
}

/// Noiseless variant of the receive chain's front end, for diagnostics.
pub fn noiseless_waveform(cfg: &LinkConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    channel_response(&modulate_levels(&build_frame(cfg).levels, cfg), cfg)
}

/// `template` at `bit_rate` with enough samples per symbol for the channel
/// and at least [`MIN_BITS_PER_RATE`] payload bits.
pub fn prepare(template: &LinkConfig, bit_rate: f64) -> LinkConfig {
    let mut cfg = template.with_bit_rate(bit_rate);
    cfg.samples_per_symbol = cfg.adequate_samples_per_symbol();
    let need = MIN_BITS_PER_RATE.div_ceil(cfg.bits_per_symbol());
    cfg.payload_len = cfg.payload_len.max(need);
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub bit_rate: f64,
    pub ber: f64,
    pub bits: usize,
    pub samples_per_symbol: usize,
    pub converged_sync: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSearch {
    /// Largest passing rate, 0 when none pass.
    pub max_rate: f64,
    pub points: Vec<RatePoint>,
}

/// Largest rate whose BER is at or below `threshold`; 0 when none is.
pub fn select_max_rate(points: &[(f64, f64)], threshold: f64) -> f64 {
    points
        .iter()
        .filter(|(_, ber)| *ber <= threshold)
        .map(|(r, _)| *r)
        .fold(0.0, f64::max)
}

/// Runs every rate of an ascending grid (in parallel, run `i` seeded with
/// `rng_seed + i`) and returns the largest rate meeting `fec_threshold`.
pub fn find_max_rate(template: &LinkConfig, fec_threshold: f64, rates: &[f64]) -> Result<RateSearch> {
    if rates.is_empty() || rates.windows(2).any(|w| !(w[1] > w[0])) || !(rates[0] > 0.0) {
        return Err(Error::Validation(
            "rate grid must be positive and strictly ascending".into(),
        ));
    }
    let points = rates
        .par_iter()
        .enumerate()
        .map(|(i, &rate)| {
            let mut cfg = prepare(template, rate);
            cfg.rng_seed = template.rng_seed.wrapping_add(i as u64);
            let res = run_link(&cfg);
            let (ber, bits, converged_sync) = match res {
                Ok(r) => (r.ber, r.bits, r.converged_sync),
                Err(e @ Error::Divergence { .. }) => {
                    log::warn!("{rate:.4e} bit/s: {e}");
                    (0.5, cfg.payload_len * cfg.bits_per_symbol(), true)
                }
                Err(e) => return Err(e),
            };
            Ok(RatePoint {
                bit_rate: rate,
                ber,
                bits,
                samples_per_symbol: cfg.samples_per_symbol,
                converged_sync,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.bit_rate, p.ber)).collect();
    Ok(RateSearch {
        max_rate: select_max_rate(&pairs, fec_threshold),
        points,
    })
}

fn ber_at_density(template: &LinkConfig, bit_rate: f64, density: f64) -> Result<f64> {
    let mut cfg = prepare(template, bit_rate);
    cfg.noise_density = density;
    match run_link(&cfg) {
        Ok(r) => Ok(r.ber),
        Err(Error::Divergence { .. }) => Ok(0.5),
        Err(e) => Err(e),
    }
}

/// Noise density at which the link at `bit_rate` shows `target_ber`, found
/// by bisection on log density within `[lo, hi]` V/√Hz.
pub fn calibrate_noise_density(
    template: &LinkConfig,
    bit_rate: f64,
    target_ber: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(lo > 0.0 && hi > lo && target_ber > 0.0 && target_ber < 0.5) {
        return Err(Error::Validation(format!(
            "need 0 < lo < hi and 0 < target < 0.5, got [{lo}, {hi}], {target_ber}"
        )));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let ber_lo = ber_at_density(template, bit_rate, lo)?;
    let ber_hi = ber_at_density(template, bit_rate, hi)?;
    if !(ber_lo <= target_ber && ber_hi >= target_ber) {
        return Err(Error::NotReached);
    }
    while b - a > 1e-4 {
        let mid = 0.5 * (a + b);
        if ber_at_density(template, bit_rate, mid.exp())? <= target_ber {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
