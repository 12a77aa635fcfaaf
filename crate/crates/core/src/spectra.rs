//! Lag windows, biased sample autocorrelation, and the Blackman–Tukey PSD
//! estimator.
//!
//! The estimator evaluated here is
//!
//! ```text
//! s(f) = Σ_{|m|<M} g[m] r[m] e^{-i2πfm},   r[m] = (1/M) Σ_{n=0}^{M-|m|-1} x[n+m] x[n]
//! ```
//!
//! on the uniform grid `f_k = k/F`. Missing samples are stored as zeros, so
//! the sample ACF of a masked observation is biased by `p` at lag zero and by
//! `p²` elsewhere; [`bias_corrected_window`] folds the inverse of that bias
//! into the window.

use rustfft::num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::fft;

/// Number of points of the dense grid used to bound the DTFT of an arbitrary
/// window.
pub const DTFT_BOUND_GRID: usize = 1 << 16;

/// Smallest frequency grid used for PSD estimates.
pub const MIN_GRID: usize = 4096;

/// An even lag window `g[m] = g[-m]` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFunction {
    /// `g[0], g[1], ..., g[half_support]`.
    weights: Vec<f64>,
    dtft_bound: f64,
}

impl WindowFunction {
    /// Builds a window from its nonnegative-lag weights. The DTFT bound is the
    /// maximum of `|g(f)|` over a dense grid.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("window needs at least the lag-0 weight"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid("window weights must be finite"));
        }
        let dtft_bound = dense_dtft_sup(&weights);
        Ok(Self {
            weights,
            dtft_bound,
        })
    }

    /// `g[m] = 1` for `|m| <= half_support`.
    pub fn rectangular(half_support: usize) -> Self {
        let weights = vec![1.0; half_support + 1];
        Self {
            weights,
            dtft_bound: (2 * half_support + 1) as f64,
        }
    }

    pub fn half_support(&self) -> usize {
        self.weights.len() - 1
    }

    /// `g[m]` for any integer lag; zero outside the support.
    pub fn weight(&self, lag: i64) -> f64 {
        self.weights
            .get(lag.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Upper bound `A` on the window DTFT.
    pub fn dtft_bound(&self) -> f64 {
        self.dtft_bound
    }

    /// `g(f) = g[0] + 2 Σ_{m≥1} g[m] cos(2πfm)`.
    pub fn dtft(&self, f: f64) -> f64 {
        let w = std::f64::consts::TAU * f;
        self.weights
            .iter()
            .enumerate()
            .skip(1)
            .map(|(m, g)| 2.0 * g * (w * m as f64).cos())
            .sum::<f64>()
            + self.weights[0]
    }
}

fn dense_dtft_sup(weights: &[f64]) -> f64 {
    let len = DTFT_BOUND_GRID.max((2 * weights.len()).next_power_of_two());
    fft::even_sequence_spectrum(weights, len)
        .iter()
        .map(|c| c.re.abs())
        .fold(0.0, f64::max)
}

/// Bartlett (triangular) window of length `w`: `g[m] = 1 - |m|/⌊w/2⌋` for
/// `|m| <= ⌊w/2⌋`. Its DTFT is a Fejér kernel peaking at `f = 0` with value
/// `⌊w/2⌋`.
pub fn bartlett_window(w: usize) -> Result<WindowFunction> {
    if w < 3 {
        return Err(invalid(format!("Bartlett window length must be >= 3, got {w}")));
    }
    let k = w / 2;
    let weights = (0..=k).map(|m| 1.0 - m as f64 / k as f64).collect();
    Ok(WindowFunction {
        weights,
        dtft_bound: k as f64,
    })
}

/// Divides the window by the lag-dependent attenuation of a Bernoulli(`p`)
/// mask: `ĝ[0] = g[0]/p`, `ĝ[m] = g[m]/p²` otherwise.
pub fn bias_corrected_window(g: &WindowFunction, p: f64) -> Result<WindowFunction> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("sampling probability must be in (0, 1], got {p}")));
    }
    if p == 1.0 {
        return Ok(g.clone());
    }
    let p2 = p * p;
    let weights = g
        .weights
        .iter()
        .enumerate()
        .map(|(m, w)| if m == 0 { w / p } else { w / p2 })
        .collect();
    // ĝ(f) = g(f)/p² + g[0](1/p - 1/p²) and the second term is never positive.
    Ok(WindowFunction {
        weights,
        dtft_bound: g.dtft_bound / p2,
    })
}

/// A length-M observation with its binary sampling mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    samples: Vec<f64>,
    mask: Vec<bool>,
    pub label: Option<usize>,
}

impl Observation {
    /// Fully observed series.
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let mask = vec![true; samples.len()];
        Self::with_mask(samples, mask)
    }

    /// Samples where `mask` is false must be stored as zero.
    pub fn with_mask(samples: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(invalid(format!(
                "observation needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.len() != mask.len() {
            return Err(invalid("samples and mask differ in length"));
        }
        if let Some(n) = samples.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("sample {n} is not finite")));
        }
        if let Some(n) = (0..samples.len()).find(|&n| !mask[n] && samples[n] != 0.0) {
            return Err(invalid(format!("masked sample {n} is nonzero")));
        }
        Ok(Self {
            samples,
            mask,
            label: None,
        })
    }

    pub fn with_label(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Fraction of observed entries.
    pub fn observed_fraction(&self) -> f64 {
        self.mask.iter().filter(|&&m| m).count() as f64 / self.mask.len() as f64
    }

    /// Subtracts the mean of the observed entries from them.
    pub fn centered(&self) -> Self {
        let n_obs = self.mask.iter().filter(|&&m| m).count();
        if n_obs == 0 {
            return self.clone();
        }
        let mean = self.samples.iter().sum::<f64>() / n_obs as f64;
        let samples = self
            .samples
            .iter()
            .zip(&self.mask)
            .map(|(&x, &m)| if m { x - mean } else { 0.0 })
            .collect();
        Self {
            samples,
            mask: self.mask.clone(),
            label: self.label,
        }
    }
}

/// Biased sample autocorrelation `r̂[m]` for lags `0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfEstimate {
    values: Vec<f64>,
}

impl AcfEstimate {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observation length `M` the estimate was computed from.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `r̂[m]` for any integer lag, zero for `|m| >= M`.
    pub fn at(&self, lag: i64) -> f64 {
        self.values
            .get(lag.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }
}

/// `r̂[m] = (1/M) Σ_{n=0}^{M-m-1} x[n+m] x[n]`, computed through a zero-padded
/// FFT so that the circular correlation equals the linear one.
pub fn estimate_acf(obs: &Observation) -> AcfEstimate {
    let x = obs.samples();
    let m = x.len();
    let len = (2 * m - 1).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    fft::forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    fft::inverse(len).process(&mut buf);
    let scale = 1.0 / (len as f64 * m as f64);
    AcfEstimate {
        values: buf[..m].iter().map(|c| c.re * scale).collect(),
    }
}

/// PSD values on the uniform grid `f_k = k/F`, `k = 0..F`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    values: Vec<f64>,
}

impl PsdEstimate {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(invalid("a PSD grid needs at least 2 points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("PSD values must be finite"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    /// Grid mean, i.e. the Riemann sum of `∫₀¹ s(f) df`.
    pub fn power(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Keeps every `factor`-th grid point.
    pub fn decimate(&self, grid: usize) -> Result<Self> {
        let f = self.values.len();
        if grid == 0 || f % grid != 0 {
            return Err(invalid(format!("cannot resample a {f}-point grid to {grid} points")));
        }
        let step = f / grid;
        Self::from_values(self.values.iter().step_by(step).copied().collect())
    }
}

/// Grid size used for length-`m` observations: the smallest power of two that
/// is at least `max(2m - 1, 4096)`.
pub fn grid_size_for(m: usize) -> usize {
    (2 * m).saturating_sub(1).max(MIN_GRID).next_power_of_two()
}

/// Blackman–Tukey estimate `Σ_{|m|<M} g[m] r̂[m] e^{-i2πkm/F}`.
pub fn bt_psd(acf: &AcfEstimate, window: &WindowFunction, grid: usize) -> Result<PsdEstimate> {
    let m = acf.len();
    if grid < 2 * m - 1 {
        return Err(Error::GridTooSmall {
            grid,
            required: 2 * m - 1,
        });
    }
    if window.half_support() >= m {
        return Err(Error::WindowTooLong {
            support: window.half_support(),
            len: m,
        });
    }
    let lagged: Vec<f64> = window
        .weights()
        .iter()
        .zip(acf.values())
        .map(|(g, r)| g * r)
        .collect();
    let spectrum = fft::even_sequence_spectrum(&lagged, grid);
    let peak = spectrum.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let residue = spectrum.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-9 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "imaginary residue {residue:e} of an even lag sequence"
        )));
    }
    PsdEstimate::from_values(spectrum.into_iter().map(|c| c.re).collect())
}

/// Convenience: ACF followed by the BT estimator on the default grid.
pub fn estimate_psd(obs: &Observation, window: &WindowFunction) -> Result<PsdEstimate> {
    bt_psd(&estimate_acf(obs), window, grid_size_for(obs.len()))
}

/// Rescales to unit grid mean.
pub fn normalize_power(psd: &PsdEstimate) -> Result<PsdEstimate> {
    let power = psd.power();
    if !(power > 0.0) {
        return Err(Error::NonPositivePower(power));
    }
    PsdEstimate::from_values(psd.values.iter().map(|v| v / power).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_acf(x: &[f64]) -> Vec<f64> {
        let m = x.len();
        (0..m)
            .map(|lag| (0..m - lag).map(|n| x[n + lag] * x[n]).sum::<f64>() / m as f64)
            .collect()
    }

    #[test]
    fn bartlett_small() {
        let g = bartlett_window(5).unwrap();
        assert_eq!(g.weight(0), 1.0);
        assert_eq!(g.weight(1), 0.5);
        assert_eq!(g.weight(-1), 0.5);
        assert_eq!(g.weight(2), 0.0);
        assert_eq!(g.weight(-2), 0.0);
        assert_eq!(g.dtft_bound(), 2.0);
        assert!(bartlett_window(2).is_err());
    }

    #[test]
    fn bartlett_bound_is_weight_sum_and_dense_sup() {
        let g = bartlett_window(101).unwrap();
        assert_eq!(g.dtft_bound(), 50.0);
        let sum: f64 = (-50..=50).map(|m| g.weight(m)).sum();
        assert_relative_eq!(sum, 50.0, epsilon = 1e-12);
        // dense-grid sup of |Σ g[m] e^{-i2πfm}|, evaluated term by term
        let n = 1usize << 16;
        let mut sup = 0.0f64;
        for k in (0..n).step_by(7).chain([0usize]) {
            let f = k as f64 / n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for m in -50i64..=50 {
                let ph = -std::f64::consts::TAU * f * m as f64;
                re += g.weight(m) * ph.cos();
                im += g.weight(m) * ph.sin();
            }
            sup = sup.max(re.hypot(im));
        }
        assert!((sup - 50.0).abs() < 1e-9);
        let generic = WindowFunction::from_weights(g.weights().to_vec()).unwrap();
        assert!((generic.dtft_bound() - 50.0).abs() < 1e-9);
    }

    #[test]
    fn bias_correction() {
        let g = bartlett_window(5).unwrap();
        assert_eq!(bias_corrected_window(&g, 1.0).unwrap(), g);
        let gh = bias_corrected_window(&g, 0.5).unwrap();
        assert_eq!(gh.weight(0), 2.0);
        assert_eq!(gh.weight(1), 2.0);
        assert_eq!(gh.half_support(), g.half_support());
        assert_eq!(gh.dtft_bound(), 8.0);
        for k in 0..64 {
            assert!(gh.dtft(k as f64 / 64.0) <= gh.dtft_bound() + 1e-12);
        }
        assert!(bias_corrected_window(&g, 0.0).is_err());
        assert!(bias_corrected_window(&g, 1.5).is_err());
    }

    #[test]
    fn acf_examples() {
        let r = estimate_acf(&Observation::new(vec![2.0, 0.0, 0.0, 0.0]).unwrap());
        let expect = [1.0, 0.0, 0.0, 0.0];
        for (a, b) in r.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let r = estimate_acf(&Observation::new(vec![1.0; 4]).unwrap());
        let expect = [1.0, 0.75, 0.5, 0.25];
        for (a, b) in r.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn acf_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [2usize, 3, 17, 64, 255, 256] {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fast = estimate_acf(&Observation::new(x.clone()).unwrap());
            for (a, b) in fast.values().iter().zip(brute_acf(&x)) {
                assert!((a - b).abs() < 1e-12, "M={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn bt_dc_term_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let acf = estimate_acf(&Observation::new(x).unwrap());
        let g = bias_corrected_window(&bartlett_window(41).unwrap(), 0.7).unwrap();
        let psd = bt_psd(&acf, &g, grid_size_for(300)).unwrap();
        let f = psd.grid_size();
        assert_relative_eq!(psd.power(), g.weight(0) * acf.at(0), max_relative = 1e-9);
        let scale = psd.values().iter().map(|v| v.abs()).fold(0.0, f64::max);
        for k in 1..f {
            assert!((psd.values()[k] - psd.values()[f - k]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn bt_lag_zero_only() {
        let acf = estimate_acf(&Observation::new(vec![2.0, 0.0, 0.0, 0.0]).unwrap());
        let psd = bt_psd(&acf, &WindowFunction::rectangular(0), 8).unwrap();
        for v in psd.values() {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bt_rejects_bad_sizes() {
        let acf = estimate_acf(&Observation::new(vec![1.0; 10]).unwrap());
        let g = bartlett_window(5).unwrap();
        assert!(matches!(bt_psd(&acf, &g, 18), Err(Error::GridTooSmall { .. })));
        assert!(matches!(
            bt_psd(&acf, &bartlett_window(21).unwrap(), 64),
            Err(Error::WindowTooLong { .. })
        ));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size_for(2), 4096);
        assert_eq!(grid_size_for(2000), 4096);
        assert_eq!(grid_size_for(2049), 8192);
        assert_eq!(grid_size_for(8000), 16384);
    }

    #[test]
    fn normalization() {
        let psd = PsdEstimate::from_values(vec![4.0; 16]).unwrap();
        let n = normalize_power(&psd).unwrap();
        assert!(n.values().iter().all(|&v| v == 1.0));
        let again = normalize_power(&n).unwrap();
        for (a, b) in n.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = PsdEstimate::from_values((0..100).map(|_| rng.random_range(0.1..5.0)).collect())
            .unwrap();
        assert!((normalize_power(&r).unwrap().power() - 1.0).abs() < 1e-12);
        let z = PsdEstimate::from_values(vec![0.0; 4]).unwrap();
        assert!(matches!(normalize_power(&z), Err(Error::NonPositivePower(_))));
    }

    #[test]
    fn observation_validation() {
        assert!(Observation::new(vec![1.0]).is_err());
        assert!(Observation::with_mask(vec![1.0, 2.0], vec![true, false]).is_err());
        assert!(Observation::with_mask(vec![1.0, 0.0], vec![true, false]).is_ok());
        assert!(Observation::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn white_noise_estimate_is_flat() {
        use rand_distr::{Distribution, StandardNormal};
        let g = bartlett_window(101).unwrap();
        let mut good = 0;
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let x: Vec<f64> = (0..10_000)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let psd = estimate_psd(&Observation::new(x).unwrap(), &g).unwrap();
            let d = psd.values().iter().map(|v| (v - 1.0).abs()).sum::<f64>()
                / (2.0 * psd.grid_size() as f64);
            if d < 0.1 {
                good += 1;
            }
        }
        assert!(good >= 18, "{good}/20 flat estimates");
    }

    #[test]
    fn masked_lag_zero_bias() {
        use rand_distr::{Bernoulli, Distribution, StandardNormal};
        let p = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mask_dist = Bernoulli::new(p).unwrap();
        let mut acc = 0.0;
        let mut full = 0.0;
        let trials = 2000;
        for _ in 0..trials {
            let x: Vec<f64> = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
            full += estimate_acf(&Observation::new(x.clone()).unwrap()).at(0);
            let mask: Vec<bool> = (0..200).map(|_| mask_dist.sample(&mut rng)).collect();
            let xm = x.iter().zip(&mask).map(|(&v, &k)| if k { v } else { 0.0 }).collect();
            acc += estimate_acf(&Observation::with_mask(xm, mask).unwrap()).at(0);
        }
        let (masked, full) = (acc / trials as f64, full / trials as f64);
        assert!((masked - p * full).abs() < 0.05 * p * full);
    }
}
