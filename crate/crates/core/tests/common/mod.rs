#![allow(dead_code)]

use num_complex::Complex64;
use pvlc_core::fit::{fit_spectrum, ImpedanceSpectrum, Weighting};
use pvlc_core::model::{log_space, SmallSignalModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// A random (R_S, R_P, C_P) triple over the fitting range.
pub fn random_model(rng: &mut impl Rng) -> SmallSignalModel {
    let rs = log_uniform(rng, 1.0, 100.0);
    let rp = log_uniform(rng, 100.0, 1e5);
    let cp = log_uniform(rng, 1e-9, 200e-9);
    SmallSignalModel::new(rp, cp, rs).unwrap()
}

pub fn fit_grid() -> Vec<f64> {
    log_space(0.1, 1e7, 81)
}

/// Multiplies every point by (1 + ε) with ε complex Gaussian of the given
/// per-component spread.
pub fn with_noise(s: &ImpedanceSpectrum, rel: f64, rng: &mut impl Rng) -> ImpedanceSpectrum {
    let mut out = s.clone();
    for p in &mut out.points {
        let e = Complex64::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ) * rel;
        let z = p.z() * (1.0 + e);
        p.re = z.re;
        p.im = z.im;
    }
    out
}

/// Largest relative error over R_S, R_P and C_P.
pub fn worst_error(fit: &SmallSignalModel, truth: &SmallSignalModel) -> f64 {
    [
        (fit.series_resistance, truth.series_resistance),
        (fit.parallel_resistance, truth.parallel_resistance),
        (fit.parallel_capacitance, truth.parallel_capacitance),
    ]
    .iter()
    .map(|(a, b)| (a / b - 1.0).abs())
    .fold(0.0, f64::max)
}

/// Worst-parameter errors of `trials` fits, noiseless when `noise` is zero.
pub fn recovery_errors(seed: u64, trials: usize, noise: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let truth = random_model(&mut rng);
            let mut s = ImpedanceSpectrum::synthesize(&truth, &fit_grid()).unwrap();
            if noise > 0.0 {
                s = with_noise(&s, noise, &mut rng);
            }
            match fit_spectrum(&s, Weighting::Proportional) {
                Ok(f) if f.converged => worst_error(&f.model, &truth),
                _ => f64::INFINITY,
            }
        })
        .collect()
}

pub fn median(v: &[f64]) -> f64 {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Illuminance of every link scenario, lux.
pub const LINK_LUX: f64 = 200.0;

/// Link template for the reference module at [`LINK_LUX`] behind `load`.
pub fn link_template(load: pvlc_core::model::Load, noise: f64) -> pvlc_core::link::LinkConfig {
    use pvlc_core::link::{LinkConfig, ReceiverConfig};
    use pvlc_core::profile::ModuleProfile;
    let p = ModuleProfile::reference_cdte();
    let rx = ReceiverConfig {
        model: p.small_signal(LINK_LUX, load).unwrap(),
        load,
        photocurrent: p.photocurrent(LINK_LUX),
    };
    LinkConfig {
        noise_density: noise,
        ..LinkConfig::new(1e6, rx)
    }
}
