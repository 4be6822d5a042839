//! Symbol-spaced LMS linear equalizer.

use crate::error::{Error, Result};

/// Coefficient norm treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Linear feed-forward equalizer adapted by LMS.
///
/// The filter is an ordinary `n`-tap FIR on the input, but adaptation runs
/// in a rotated basis: `n - 1` taps on the first-order prediction error
/// `x[t] - p * x[t - 1]` and one tap on `x` itself at the oldest position.
/// Every FIR has exactly one representation in that basis, for any `p`.
/// Training sets `p` to the lag-1 correlation of the input and scales both
/// streams to unit power, which keeps LMS well conditioned when the input is
/// dominated by a slow pole. With `p = 0` this is plain LMS.
#[derive(Debug, Clone, PartialEq)]
pub struct LmsEqualizer {
    /// Prediction-error taps followed by the level tap, in scaled units.
    coef: Vec<f64>,
    cursor: usize,
    step: f64,
    pred: f64,
    error_scale: f64,
    level_scale: f64,
}

impl LmsEqualizer {
    /// `n` taps initialized to a unit impulse at the center tap.
    pub fn new(n: usize, step: f64) -> Self {
        let n = n.max(1);
        let mut eq = Self {
            coef: vec![0.0; n],
            cursor: n / 2,
            step,
            pred: 0.0,
            error_scale: 1.0,
            level_scale: 1.0,
        };
        let mut delta = vec![0.0; n];
        delta[eq.cursor] = 1.0;
        eq.set_taps(&delta);
        eq
    }

    /// Equivalent direct-form FIR taps; tap `k` multiplies `x[j + cursor - k]`.
    pub fn taps(&self) -> Vec<f64> {
        let n = self.coef.len();
        let mut w = vec![0.0; n];
        let mut prev = 0.0;
        for (wk, &c) in w.iter_mut().zip(&self.coef[..n - 1]) {
            let v = c * self.error_scale;
            *wk = v - self.pred * prev;
            prev = v;
        }
        w[n - 1] = self.coef[n - 1] * self.level_scale - self.pred * prev;
        w
    }

    fn set_taps(&mut self, w: &[f64]) {
        let n = w.len();
        let mut prev = 0.0;
        for (c, &wk) in self.coef.iter_mut().zip(&w[..n - 1]) {
            let v = wk + self.pred * prev;
            *c = v / self.error_scale;
            prev = v;
        }
        self.coef[n - 1] = (w[n - 1] + self.pred * prev) / self.level_scale;
    }

    pub fn norm(&self) -> f64 {
        self.taps().iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    fn regressor(&self, x: &[f64], j: usize, out: &mut [f64]) {
        let at = |i: Option<usize>| i.and_then(|i| x.get(i)).copied().unwrap_or(0.0);
        let n = self.coef.len();
        let t = j + self.cursor;
        for (k, r) in out.iter_mut().enumerate().take(n - 1) {
            let i = t.checked_sub(k);
            let prev = at(i.and_then(|i| i.checked_sub(1)));
            *r = (at(i) - self.pred * prev) * self.error_scale;
        }
        out[n - 1] = at(t.checked_sub(n - 1)) * self.level_scale;
    }

    fn output(&self, u: &[f64]) -> f64 {
        self.coef.iter().zip(u).map(|(c, v)| c * v).sum()
    }

    /// Fits the basis to `x[..n]`, keeping the current filter.
    fn fit_basis(&mut self, x: &[f64], n: usize) {
        let taps = self.taps();
        let x = &x[..n];
        let power = x.iter().map(|v| v * v).sum::<f64>();
        let lag1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
        self.pred = if power > 0.0 { (lag1 / power).clamp(-1.0, 1.0) } else { 0.0 };
        let mean_sq = |s: f64, c: usize| if c > 0 { s / c as f64 } else { 0.0 };
        let xs = mean_sq(power, n).sqrt();
        let es = mean_sq(
            x.windows(2).map(|w| (w[1] - self.pred * w[0]).powi(2)).sum(),
            n.saturating_sub(1),
        )
        .sqrt();
        self.level_scale = if xs > 0.0 { 1.0 / xs } else { 1.0 };
        self.error_scale = if es > 0.0 { 1.0 / es } else { 1.0 };
        self.set_taps(&taps);
    }

    /// Adapts on `x[..targets.len()]` for `epochs` passes and returns the
    /// squared error of every update in order.
    pub fn train(&mut self, x: &[f64], targets: &[f64], epochs: usize) -> Result<Vec<f64>> {
        let n = targets.len().min(x.len());
        self.fit_basis(x, n);
        let mut errors = Vec::with_capacity(n * epochs);
        let mut u = vec![0.0; self.coef.len()];
        for _ in 0..epochs {
            for (j, &t) in targets.iter().enumerate().take(n) {
                self.regressor(x, j, &mut u);
                let e = t - self.output(&u);
                errors.push(e * e);
                if self.step == 0.0 {
                    continue;
                }
                let g = self.step * e;
                for (c, v) in self.coef.iter_mut().zip(&u) {
                    *c += g * v;
                }
                let norm = self.norm();
                if !(norm <= DIVERGENCE_NORM) {
                    return Err(Error::Divergence { norm });
                }
            }
        }
        Ok(errors)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.coef.len()];
        (0..x.len())
            .map(|j| {
                self.regressor(x, j, &mut u);
                self.output(&u)
            })
            .collect()
    }
}

/// Output of [`lms_equalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Equalized {
    /// Equalized symbols, training section included.
    pub symbols: Vec<f64>,
    pub equalizer: LmsEqualizer,
    /// Squared error of each training update.
    pub training_errors: Vec<f64>,
}

/// Trains on the leading `training.len()` symbols, then filters the whole
/// stream with the frozen coefficients.
pub fn lms_equalize(
    x: &[f64],
    training: &[f64],
    taps: usize,
    step: f64,
    epochs: usize,
) -> Result<Equalized> {
    let mut equalizer = LmsEqualizer::new(taps, step);
    let training_errors = equalizer.train(x, training, epochs)?;
    Ok(Equalized {
        symbols: equalizer.apply(x),
        equalizer,
        training_errors,
    })
}

/// Means of consecutive `block`-long chunks.
pub fn block_means(v: &[f64], block: usize) -> Vec<f64> {
    v.chunks_exact(block)
        .map(|c| c.iter().sum::<f64>() / block as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn symbols(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (2 * rng.random_range(0..8) - 7) as f64 / 7.0).collect()
    }

    fn one_pole(x: &[f64], a: f64) -> Vec<f64> {
        let mut y = 0.0;
        x.iter()
            .map(|&v| {
                y = a * y + (1.0 - a) * v;
                y
            })
            .collect()
    }

    fn min_level_gap(y: &[f64], s: &[f64]) -> f64 {
        // smallest distance between the extreme outputs of adjacent levels
        let mut lo = [f64::MAX; 8];
        let mut hi = [f64::MIN; 8];
        for (&v, &t) in y.iter().zip(s) {
            let l = ((t * 7.0 + 7.0) / 2.0).round() as usize;
            lo[l] = lo[l].min(v);
            hi[l] = hi[l].max(v);
        }
        (0..7).map(|l| lo[l + 1] - hi[l]).fold(f64::MAX, f64::min)
    }

    #[test]
    fn identity_channel_stays_delta() {
        let s = symbols(3000, 1);
        let out = lms_equalize(&s, &s[..1000], 15, 1e-2, 1).unwrap();
        let mse = out.symbols[1000..]
            .iter()
            .zip(&s[1000..])
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / 2000.0;
        assert!(mse < 1e-6, "{mse}");
        assert!((out.equalizer.taps()[7] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_step_is_pass_through() {
        let s = symbols(500, 2);
        let x = one_pole(&s, 0.5);
        let out = lms_equalize(&x, &s[..200], 15, 0.0, 3).unwrap();
        for (a, b) in out.symbols.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.equalizer.taps().iter().zip(LmsEqualizer::new(15, 0.0).taps()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn opens_the_eye_of_an_isi_channel() {
        let s = symbols(6000, 3);
        let x = one_pole(&s, 0.6);
        let out = lms_equalize(&x, &s[..3000], 15, 2e-2, 1).unwrap();
        let before = min_level_gap(&x[3000..], &s[3000..]);
        let after = min_level_gap(&out.symbols[3000..], &s[3000..]);
        assert!(before < 0.0, "{before}");
        assert!(after > before, "{before} -> {after}");
        assert!(after > 0.0, "{after}");
    }

    #[test]
    fn training_error_falls_in_trend() {
        let s = symbols(4000, 4);
        let x = one_pole(&s, 0.6);
        let out = lms_equalize(&x, &s[..4000], 15, 1e-2, 1).unwrap();
        let blocks = block_means(&out.training_errors, 100);
        assert!(blocks.last().unwrap() < &(0.2 * blocks[0]), "{blocks:?}");
    }

    #[test]
    fn large_step_diverges() {
        let s = symbols(2000, 5);
        let x: Vec<f64> = s.iter().map(|v| 10.0 * v).collect();
        let err = lms_equalize(&x, &s, 15, 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }
}
