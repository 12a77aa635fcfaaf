//! Synthetic generative models: second-order AR resonators, exact Gaussian
//! sampling from Toeplitz covariances, additive noise, and Bernoulli masking.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::fft;
use crate::seed::{derive_seed, rng_for};
use crate::spectra::{Observation, PsdEstimate};

/// Grid on which model PSDs, their normalization, and their ACFs are
/// tabulated.
pub const FINE_GRID: usize = 1 << 18;

/// Default number of ACF lags kept for a model.
pub const DEFAULT_MAXLAG: usize = 4096;

pub const DEFAULT_BURNIN: usize = 2000;

/// Largest length accepted by the exact (Cholesky) sampler.
pub const MAX_EXACT_LEN: usize = 2048;

const CHOLESKY_JITTER: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2Params {
    pub a: f64,
    /// Resonance angle in radians.
    pub nu: f64,
    /// Innovation variance giving unit power.
    pub b2: f64,
}

impl Ar2Params {
    /// `|1 - 2a cos(ν) e^{i2πf} + a² e^{i4πf}|²`
    fn denominator(a: f64, nu: f64, f: f64) -> f64 {
        let c = 2.0 * a * nu.cos();
        let z1 = Complex::from_polar(1.0, TAU * f);
        let z2 = Complex::from_polar(1.0, 2.0 * TAU * f);
        (Complex::new(1.0, 0.0) - z1 * c + z2 * (a * a)).norm_sqr()
    }

    pub fn psd_at(&self, f: f64) -> f64 {
        self.b2 / Self::denominator(self.a, self.nu, f)
    }

    /// Recursion coefficients `(φ₁, φ₂)` of `x[n] = φ₁x[n-1] + φ₂x[n-2] + b w[n]`.
    pub fn coefficients(&self) -> (f64, f64) {
        (2.0 * self.a * self.nu.cos(), -self.a * self.a)
    }
}

/// A zero-mean stationary Gaussian model described by its unit-power PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeModel {
    psd: PsdEstimate,
    acf: Vec<f64>,
    psd_sup: f64,
    ar2: Option<Ar2Params>,
}

impl GenerativeModel {
    /// Tabulated model. The values are rescaled to unit power and the ACF
    /// is the inverse DFT of the table, truncated at `maxlag`.
    pub fn from_psd(values: Vec<f64>, maxlag: usize) -> Result<Self> {
        let grid = values.len();
        if values.iter().any(|&v| v < 0.0) {
            return Err(invalid("model PSD must be nonnegative"));
        }
        if maxlag > grid / 2 {
            return Err(invalid(format!(
                "maxlag {maxlag} exceeds half the PSD grid ({grid})"
            )));
        }
        let psd = crate::spectra::normalize_power(&PsdEstimate::from_values(values)?)?;
        let acf = acf_from_psd(psd.values(), maxlag);
        let psd_sup = psd.values().iter().copied().fold(0.0, f64::max);
        Ok(Self {
            psd,
            acf,
            psd_sup,
            ar2: None,
        })
    }

    pub fn psd(&self) -> &PsdEstimate {
        &self.psd
    }

    /// `r[m]` for `0 <= m <= maxlag`.
    pub fn acf(&self) -> &[f64] {
        &self.acf
    }

    /// `r[m]` for any lag, zero beyond `maxlag`.
    pub fn acf_at(&self, lag: i64) -> f64 {
        self.acf
            .get(lag.unsigned_abs() as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn maxlag(&self) -> usize {
        self.acf.len() - 1
    }

    /// `B`: supremum of the PSD over the tabulation grid.
    pub fn psd_sup(&self) -> f64 {
        self.psd_sup
    }

    pub fn ar2_params(&self) -> Option<Ar2Params> {
        self.ar2
    }

    /// The model PSD on a `grid`-point uniform grid; evaluated in closed form
    /// for AR(2) models, decimated from the table otherwise.
    pub fn psd_on_grid(&self, grid: usize) -> Result<PsdEstimate> {
        match self.ar2 {
            Some(params) => PsdEstimate::from_values(
                (0..grid)
                    .map(|k| params.psd_at(k as f64 / grid as f64))
                    .collect(),
            ),
            None => self.psd.decimate(grid),
        }
    }
}

fn acf_from_psd(psd: &[f64], maxlag: usize) -> Vec<f64> {
    let grid = psd.len();
    let mut buf: Vec<Complex<f64>> = psd.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft::inverse(grid).process(&mut buf);
    buf[..=maxlag].iter().map(|c| c.re / grid as f64).collect()
}

/// AR(2) resonator `s(f) = b² / |1 - 2a cos(ν) e^{i2πf} + a² e^{i4πf}|²` with
/// `b²` chosen numerically on `grid` points so that the grid mean is one.
pub fn ar2_model(a: f64, nu: f64, grid: usize, maxlag: usize) -> Result<GenerativeModel> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid(format!("AR(2) radius must be in (0, 1), got {a}")));
    }
    if !(0.0..=std::f64::consts::PI).contains(&nu) {
        return Err(invalid(format!("AR(2) angle must be in [0, π], got {nu}")));
    }
    if grid < 2 || maxlag > grid / 2 {
        return Err(invalid(format!("grid {grid} too small for maxlag {maxlag}")));
    }
    let inv: Vec<f64> = (0..grid)
        .map(|k| 1.0 / Ar2Params::denominator(a, nu, k as f64 / grid as f64))
        .collect();
    let b2 = grid as f64 / inv.iter().sum::<f64>();
    let values: Vec<f64> = inv.iter().map(|v| b2 * v).collect();
    let psd_sup = values.iter().copied().fold(0.0, f64::max);
    let acf = acf_from_psd(&values, maxlag);
    Ok(GenerativeModel {
        psd: PsdEstimate::from_values(values)?,
        acf,
        psd_sup,
        ar2: Some(Ar2Params { a, nu, b2 }),
    })
}

/// Runs the AR(2) recursion from rest, discards `burnin` samples and returns
/// the next `m`.
pub fn sample_ar2(model: &GenerativeModel, m: usize, seed: u64, burnin: usize) -> Result<Observation> {
    let params = model
        .ar2
        .ok_or_else(|| invalid("model has no AR(2) parameters"))?;
    let (phi1, phi2) = params.coefficients();
    let b = params.b2.sqrt();
    let mut rng = rng_for(seed, &[]);
    let (mut x1, mut x2) = (0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(m);
    for n in 0..burnin + m {
        let w: f64 = StandardNormal.sample(&mut rng);
        let x = phi1 * x1 + phi2 * x2 + b * w;
        x2 = x1;
        x1 = x;
        if n >= burnin {
            out.push(x);
        }
    }
    Observation::new(out)
}

/// Noise level, sampling probability, and seed of the corruption
/// `x̌ = ξ ∘ (x + w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionSpec {
    pub sigma: f64,
    pub p: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn new(sigma: f64, p: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("noise level must be >= 0, got {sigma}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(invalid(format!("sampling probability must be in (0, 1], got {p}")));
        }
        Ok(Self { sigma, p, seed })
    }
}

/// Adds i.i.d. `N(0, σ²)` noise, then zeroes entries with an i.i.d.
/// Bernoulli(`p`) mask.
pub fn corrupt(obs: &Observation, spec: &CorruptionSpec) -> Result<Observation> {
    let mut rng = rng_for(spec.seed, &[]);
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| invalid(e.to_string()))?;
    let keep = Bernoulli::new(spec.p).map_err(|e| invalid(e.to_string()))?;
    let mut samples = Vec::with_capacity(obs.len());
    let mut mask = Vec::with_capacity(obs.len());
    for (&x, &m) in obs.samples().iter().zip(obs.mask()) {
        let w = if spec.sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        let k = m && (spec.p >= 1.0 || keep.sample(&mut rng));
        samples.push(if k { x + w } else { 0.0 });
        mask.push(k);
    }
    let out = Observation::with_mask(samples, mask)?;
    Ok(match obs.label {
        Some(l) => out.with_label(l),
        None => out,
    })
}

/// `n_per_model` corrupted observations of every model, labeled by model
/// index. Observation `(l, i)` is drawn from seeds derived from
/// `(spec.seed, l, i)` only.
pub fn make_dataset(
    models: &[GenerativeModel],
    n_per_model: usize,
    m: usize,
    spec: &CorruptionSpec,
) -> Result<Vec<Observation>> {
    if models.is_empty() {
        return Err(invalid("need at least one model"));
    }
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|l| (0..n_per_model).map(move |i| (l, i)))
        .collect();
    jobs.par_iter()
        .map(|&(l, i)| {
            let base = derive_seed(spec.seed, &[l as u64, i as u64]);
            let model = &models[l];
            let clean = if model.ar2.is_some() {
                sample_ar2(model, m, derive_seed(base, &[0]), DEFAULT_BURNIN)?
            } else {
                sample_gp_exact(model, 0.0, m, derive_seed(base, &[0]))?
            };
            let noisy = corrupt(
                &clean,
                &CorruptionSpec {
                    seed: derive_seed(base, &[1]),
                    ..*spec
                },
            )?;
            Ok(noisy.with_label(l))
        })
        .collect()
}

/// `R̃[v, w] = r[|v - w|] + σ² 1{v = w}`.
pub fn toeplitz_cov(model: &GenerativeModel, sigma: f64, m: usize) -> DMatrix<f64> {
    if m > 0 && m - 1 > model.maxlag() {
        log::warn!(
            "covariance of size {m} needs lag {}, model keeps {}; extending by zeros",
            m - 1,
            model.maxlag()
        );
    }
    let s2 = sigma * sigma;
    DMatrix::from_fn(m, m, |v, w| {
        model.acf_at(v as i64 - w as i64) + if v == w { s2 } else { 0.0 }
    })
}

/// Exact sampler `x = C y` with `C` the Cholesky factor of `R̃`, reusable
/// across draws.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    factor: DMatrix<f64>,
}

impl GaussianSampler {
    pub fn new(model: &GenerativeModel, sigma: f64, m: usize) -> Result<Self> {
        if m > MAX_EXACT_LEN {
            return Err(invalid(format!(
                "exact sampling supports M <= {MAX_EXACT_LEN}, got {m}"
            )));
        }
        Self::from_covariance(toeplitz_cov(model, sigma, m))
    }

    pub fn from_covariance(mut cov: DMatrix<f64>) -> Result<Self> {
        for i in 0..cov.nrows() {
            cov[(i, i)] += CHOLESKY_JITTER;
        }
        let chol = nalgebra::Cholesky::new(cov).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self { factor: chol.l() })
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.nrows() == 0
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.sample_into(rng, &mut out);
        out
    }

    /// Writes one draw into `out`, which must have length `M`.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let y = DVector::from_fn(self.len(), |_, _| StandardNormal.sample(rng));
        let x = &self.factor * y;
        out.copy_from_slice(x.as_slice());
    }
}

pub fn sample_gp_exact(model: &GenerativeModel, sigma: f64, m: usize, seed: u64) -> Result<Observation> {
    let sampler = GaussianSampler::new(model, sigma, m)?;
    Observation::new(sampler.sample(&mut rng_for(seed, &[])))
}
