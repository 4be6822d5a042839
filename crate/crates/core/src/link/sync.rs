//! Frame timing from a known preamble.
//!
//! The receiver point-samples once per symbol. For every candidate sample
//! offset the symbol-spaced samples are differenced, which removes the DC
//! level and undoes most of a slow receiver pole, and the result is
//! correlated with the preamble amplitudes. Behind a low-pass channel the
//! best offset lands just after each symbol has been fully integrated,
//! which is also where a short linear equalizer works best.

use crate::error::{Error, Result};

/// Correlation coefficient below which synchronization is declared failed.
pub const SYNC_THRESHOLD: f64 = 0.5;

/// Upper bound on the preamble symbols used for the search.
pub const MAX_SYNC_SYMBOLS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Sample index at which the first preamble symbol is read.
    pub offset: usize,
    /// Correlation coefficient at `offset`, at most 1.
    pub peak: f64,
}

/// Searches offsets `0..=max_offset` for the preamble.
///
/// `preamble` holds the transmitted amplitudes, one per symbol. Ties go to
/// the earliest offset.
pub fn frame_sync(
    rx: &[f64],
    preamble: &[f64],
    samples_per_symbol: usize,
    max_offset: usize,
) -> Result<SyncResult> {
    let sps = samples_per_symbol;
    let n = preamble.len().min(MAX_SYNC_SYMBOLS);
    if n < 2 || sps == 0 {
        return Err(Error::SyncFailed { peak: 0.0 });
    }
    let mean = preamble[1..n].iter().sum::<f64>() / (n - 1) as f64;
    let reference: Vec<f64> = preamble[1..n].iter().map(|v| v - mean).collect();
    let ref_norm = reference.iter().map(|x| x * x).sum::<f64>().sqrt();
    let span = (n - 1) * sps;
    if ref_norm == 0.0 || rx.len() <= span {
        return Err(Error::SyncFailed { peak: 0.0 });
    }
    let last = max_offset.min(rx.len() - 1 - span);

    let mut best = SyncResult { offset: 0, peak: f64::NEG_INFINITY };
    for k in 0..=last {
        let (mut dot, mut sum, mut sq) = (0.0, 0.0, 0.0);
        for (j, r) in reference.iter().enumerate() {
            let i = k + (j + 1) * sps;
            let d = rx[i] - rx[i - sps];
            dot += d * r;
            sum += d;
            sq += d * d;
        }
        // the reference is zero-mean, so only the norm needs centering
        let norm = sq - sum * sum / reference.len() as f64;
        if !(norm > 0.0) {
            continue;
        }
        let rho = dot / (norm.sqrt() * ref_norm);
        if rho > best.peak {
            best = SyncResult { offset: k, peak: rho };
        }
    }
    if best.peak < SYNC_THRESHOLD {
        return Err(Error::SyncFailed { peak: best.peak.max(0.0) });
    }
    Ok(best)
}
