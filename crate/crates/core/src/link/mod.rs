//! Baseband simulation of a PAM optical link received by the PV module.
//!
//! The transmitter drives an LED with Gray-coded NRZ PAM around a DC
//! operating level. The channel is the LED pole followed by the receiver's
//! RC pole and white noise on the load. The receiver synchronizes on a
//! known preamble, equalizes with a symbol-spaced LMS filter trained on that
//! preamble, and slices against level centroids.

mod channel;
mod config;
mod equalizer;
mod pam;
mod sim;
mod sync;

pub use channel::{channel_filter, channel_response, noise_sigma, SinglePoleFilter};
pub use config::{LinkConfig, ReceiverConfig};
pub use equalizer::{block_means, lms_equalize, Equalized, LmsEqualizer, DIVERGENCE_NORM};
pub use pam::{
    bits_to_levels, gray_decode, gray_encode, level_amplitude, levels_to_bits, modulate_levels,
    pam_modulate,
};
pub use sim::{
    calibrate_noise_density, find_max_rate, noiseless_waveform, preamble_levels, prepare,
    received_waveform, run_link, select_max_rate, write_waveform_csv, LinkResult, RatePoint,
    RateSearch, FEC_THRESHOLD, MIN_BITS_PER_RATE,
};
pub use sync::{frame_sync, SyncResult, MAX_SYNC_SYMBOLS, SYNC_THRESHOLD};
