//! Gray-coded PAM mapping and NRZ modulation of optical intensity.

use super::config::LinkConfig;
use crate::error::{Error, Result};

pub fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

/// Amplitude of level `index` of an `m`-level alphabet, uniformly spaced on
/// [-1, 1].
pub fn level_amplitude(index: usize, m: usize) -> f64 {
    (2.0 * index as f64 - (m - 1) as f64) / (m - 1) as f64
}

/// Groups bits (MSB first) into level indices.
pub fn bits_to_levels(bits: &[u8], m: usize) -> Result<Vec<usize>> {
    let k = m.trailing_zeros() as usize;
    if !bits.len().is_multiple_of(k) {
        return Err(Error::BitCountMismatch {
            bits: bits.len(),
            bits_per_symbol: k,
        });
    }
    Ok(bits
        .chunks(k)
        .map(|c| gray_decode(c.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)))
        .collect())
}

/// Inverse of [`bits_to_levels`].
pub fn levels_to_bits(levels: &[usize], m: usize) -> Vec<u8> {
    let k = m.trailing_zeros() as usize;
    let mut out = Vec::with_capacity(levels.len() * k);
    for &l in levels {
        let g = gray_encode(l);
        for b in (0..k).rev() {
            out.push(((g >> b) & 1) as u8);
        }
    }
    out
}

/// NRZ intensity waveform `1 + m·a` for a sequence of level indices.
pub fn modulate_levels(levels: &[usize], cfg: &LinkConfig) -> Vec<f64> {
    let m = cfg.pam_order as usize;
    let sps = cfg.samples_per_symbol;
    let mut out = Vec::with_capacity(levels.len() * sps);
    for &l in levels {
        let x = 1.0 + cfg.modulation_index * level_amplitude(l, m);
        out.extend(std::iter::repeat_n(x, sps));
    }
    out
}

/// Normalized optical intensity for `bits`: unit DC level, peak-to-peak
/// swing of `2·modulation_index`.
pub fn pam_modulate(bits: &[u8], cfg: &LinkConfig) -> Result<Vec<f64>> {
    let levels = bits_to_levels(bits, cfg.pam_order as usize)?;
    Ok(modulate_levels(&levels, cfg))
}
