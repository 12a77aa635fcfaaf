//! Numerical evaluation of the analytic side: distances between models, the
//! ACF moment, the sufficient clustering condition, strict separation of a
//! realized distance matrix, the lower bound on inner-product confusion, and
//! the tail bound for Boolean quadratic forms, each with a Monte-Carlo
//! counterpart where one makes sense.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dissimilarity::{psd_distance, DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};
use crate::genmodel::{toeplitz_cov, GaussianSampler, GenerativeModel};
use crate::seed::{derive_seed, rng_for};
use crate::spectra::WindowFunction;

/// Largest ACF tail mass tolerated beyond the tabulated lags.
pub const ACF_TAIL_TOLERANCE: f64 = 1e-6;

/// Monte-Carlo draws per parallel chunk.
const MC_CHUNK: usize = 4096;

/// `(1/2) mean |s₁ - s₂|` over the common tabulation grid.
pub fn model_distance(m1: &GenerativeModel, m2: &GenerativeModel) -> Result<f64> {
    psd_distance(m1.psd(), m2.psd(), Metric::L1)
}

/// Mass of `Σ_{m > maxlag} |r[m]|` extrapolated from a geometric fit of the
/// envelope over the last half of the table.
pub fn acf_tail_estimate(acf: &[f64]) -> f64 {
    let maxlag = acf.len() - 1;
    if maxlag < 8 {
        return acf.last().map_or(0.0, |r| r.abs());
    }
    let envelope = |lo: usize, hi: usize| acf[lo..=hi].iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let quarter = maxlag / 4;
    let early = envelope(maxlag - 2 * quarter, maxlag - quarter);
    let late = envelope(maxlag - quarter + 1, maxlag);
    if late <= 1e-12 {
        return 0.0;
    }
    let ratio = (late / early).powf(1.0 / quarter as f64);
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    late * ratio / (1.0 - ratio)
}

/// `μ = Σ_{|m|<M} |1 - g[m](1 - |m|/M)| |r[m]| + Σ_{|m|≥M} |r[m]|`, with the
/// ACF truncated at the model's `maxlag`.
pub fn acf_moment(model: &GenerativeModel, g: &WindowFunction, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(invalid("observation length must be positive"));
    }
    let acf = model.acf();
    let tail = acf_tail_estimate(acf);
    if tail >= ACF_TAIL_TOLERANCE {
        return Err(Error::AcfTail {
            maxlag: model.maxlag(),
            tail,
        });
    }
    let big_m = m as f64;
    let mut mu = 0.0;
    for (lag, r) in acf.iter().enumerate() {
        let h = if lag < m {
            (1.0 - g.weight(lag as i64) * (1.0 - lag as f64 / big_m)).abs()
        } else {
            1.0
        };
        let term = h * r.abs();
        mu += if lag == 0 { term } else { 2.0 * term };
    }
    Ok(mu)
}

/// Right-hand side of the sufficient clustering condition:
/// `8√2 A (B + σ² + √2(1+p)(1+σ²)) / p² · √(log M / M) + 2 μ_max`.
/// `m` is real so that the asymptotic regime can be evaluated.
pub fn condition_rhs(a: f64, b: f64, sigma: f64, p: f64, m: f64, mu_max: f64) -> f64 {
    let s2 = sigma * sigma;
    let prefactor = 8.0 * SQRT_2 * a * (b + s2 + SQRT_2 * (1.0 + p) * (1.0 + s2)) / (p * p);
    prefactor * (m.ln() / m).sqrt() + 2.0 * mu_max
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub min_model_distance: f64,
    pub rhs: f64,
    pub mu_max: f64,
    pub satisfied: bool,
    /// `min_model_distance - rhs`.
    pub margin: f64,
}

impl ConditionReport {
    fn new(min_model_distance: f64, rhs: f64, mu_max: f64) -> Self {
        Self {
            min_model_distance,
            rhs,
            mu_max,
            satisfied: min_model_distance > rhs,
            margin: min_model_distance - rhs,
        }
    }
}

/// Evaluates the sufficient condition for the given models, lag window `g`
/// (before any bias correction), length `m`, noise level and sampling
/// probability.
pub fn clustering_condition(
    models: &[GenerativeModel],
    g: &WindowFunction,
    m: usize,
    sigma: f64,
    p: f64,
) -> Result<ConditionReport> {
    if models.len() < 2 {
        return Err(invalid("the clustering condition needs at least two models"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("sampling probability must be in (0, 1], got {p}")));
    }
    if !(sigma >= 0.0) {
        return Err(invalid(format!("noise level must be nonnegative, got {sigma}")));
    }
    let mut min_distance = f64::INFINITY;
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            min_distance = min_distance.min(model_distance(&models[i], &models[j])?);
        }
    }
    let mu_max = models
        .iter()
        .map(|model| acf_moment(model, g, m))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let b = models.iter().map(|m| m.psd_sup()).fold(0.0, f64::max);
    let rhs = condition_rhs(g.dtft_bound(), b, sigma, p, m as f64, mu_max);
    Ok(ConditionReport::new(min_distance, rhs, mu_max))
}

/// True iff every cross-label distance exceeds every within-label distance.
pub fn check_strict_separation(d: &DistanceMatrix, labels: &[usize]) -> Result<bool> {
    let n = d.size();
    if labels.len() != n {
        return Err(invalid(format!("{} labels for {n} observations", labels.len())));
    }
    let mut max_within = f64::NEG_INFINITY;
    let mut min_across = f64::INFINITY;
    let mut any_within = false;
    for i in 0..n {
        for j in i + 1..n {
            let v = d.get(i, j);
            if labels[i] == labels[j] {
                any_within = true;
                max_within = max_within.max(v);
            } else {
                min_across = min_across.min(v);
            }
        }
    }
    if !any_within {
        return Err(invalid("every label class has a single member"));
    }
    Ok(min_across > max_within)
}

/// `(1/(5π)) arctan(√tr(R_k R_l) / (5√3 √tr(R_l R_l)))`, a lower bound on the
/// probability that a cross-model inner product dominates a within-model one.
pub fn inner_product_bound(rk: &DMatrix<f64>, rl: &DMatrix<f64>) -> Result<f64> {
    if rk.shape() != rl.shape() || !rk.is_square() {
        return Err(invalid(format!(
            "covariances must be square and equal in size, got {:?} and {:?}",
            rk.shape(),
            rl.shape()
        )));
    }
    // tr(XY) = Σ X_ij Y_ji, and both are symmetric
    let cross = rk.component_mul(rl).sum();
    let own = rl.component_mul(rl).sum();
    if own <= 0.0 {
        return Err(invalid("tr(R_l R_l) must be positive"));
    }
    let ratio = cross.max(0.0).sqrt() / (5.0 * 3f64.sqrt() * own.sqrt());
    Ok(ratio.atan() / (5.0 * PI))
}

/// [`inner_product_bound`] for two models observed in white noise of level `sigma`.
pub fn inner_product_bound_for_models(
    k: &GenerativeModel,
    l: &GenerativeModel,
    sigma: f64,
    m: usize,
) -> Result<f64> {
    inner_product_bound(&toeplitz_cov(k, sigma, m), &toeplitz_cov(l, sigma, m))
}

/// Fraction of independent triples `(x_j ~ k, x_i ~ l, x_v ~ l)` with
/// `|⟨x_j, x_i⟩| >= |⟨x_v, x_i⟩|`, drawn by exact Gaussian sampling.
pub fn inner_product_mc_probability(
    k: &GenerativeModel,
    l: &GenerativeModel,
    sigma: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let sk = GaussianSampler::new(k, sigma, m)?;
    let sl = GaussianSampler::new(l, sigma, m)?;
    let hits: usize = chunks(trials)
        .into_par_iter()
        .map(|(chunk, count)| {
            let mut rng = rng_for(seed, &[chunk as u64]);
            let (mut xj, mut xi, mut xv) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            (0..count)
                .filter(|_| {
                    sk.sample_into(&mut rng, &mut xj);
                    sl.sample_into(&mut rng, &mut xi);
                    sl.sample_into(&mut rng, &mut xv);
                    dot(&xj, &xi).abs() >= dot(&xv, &xi).abs()
                })
                .count()
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

fn chunks(trials: usize) -> Vec<(usize, usize)> {
    (0..trials.div_ceil(MC_CHUNK))
        .map(|c| (c, MC_CHUNK.min(trials - c * MC_CHUNK)))
        .collect()
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(invalid(format!("matrix must be square, got {:?}", h.shape())));
    }
    let n = h.nrows();
    let scale = h.amax();
    if scale == 0.0 {
        return Err(invalid("matrix is zero"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    Ok(())
}

/// Largest absolute eigenvalue of a symmetric matrix, by power iteration on
/// `H²`.
pub fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    if n == 0 {
        return 0.0;
    }
    // a generic start vector avoids landing orthogonal to the top eigenspace
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i + 1) as f64).sin());
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = h * (h * &v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - estimate).abs() <= 1e-10 * next.abs() {
            estimate = next;
            break;
        }
        estimate = next;
    }
    estimate.max(0.0).sqrt()
}

/// `4 exp(-t² / (32 (1+p)² M ‖H‖²))`. Values above one are returned as they
/// are.
pub fn quadform_tail_bound(h: &DMatrix<f64>, p: f64, t: f64) -> Result<f64> {
    check_symmetric(h)?;
    check_tail_args(p, t)?;
    let norm = spectral_norm(h);
    let m = h.nrows() as f64;
    Ok(4.0 * (-t * t / (32.0 * (1.0 + p).powi(2) * m * norm * norm)).exp())
}

fn check_tail_args(p: f64, t: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("sampling probability must be in (0, 1], got {p}")));
    }
    if !(t > 0.0) {
        return Err(invalid(format!("threshold must be positive, got {t}")));
    }
    Ok(())
}

/// `E[ξᵀHξ] = p Σ_i H_ii + p² Σ_{i≠j} H_ij` for i.i.d. Bernoulli(p) `ξ`.
pub fn quadform_mean(h: &DMatrix<f64>, p: f64) -> f64 {
    let diag = h.diagonal().sum();
    p * diag + p * p * (h.sum() - diag)
}

/// Empirical `P[|ξᵀHξ - E ξᵀHξ| > t]` over `trials` Bernoulli(p) masks.
pub fn quadform_mc_tail(h: &DMatrix<f64>, p: f64, t: f64, trials: usize, seed: u64) -> Result<f64> {
    Ok(quadform_mc_tail_many(h, p, &[t], trials, seed)?[0])
}

/// [`quadform_mc_tail`] for several thresholds, sharing the mask draws.
pub fn quadform_mc_tail_many(
    h: &DMatrix<f64>,
    p: f64,
    thresholds: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_symmetric(h)?;
    for &t in thresholds {
        check_tail_args(p, t)?;
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let n = h.nrows();
    let mean = quadform_mean(h, p);
    let counts = chunks(trials)
        .into_par_iter()
        .map(|(chunk, count)| {
            let mut rng = rng_for(derive_seed(seed, &[0x7a11]), &[chunk as u64]);
            let mut hits = vec![0usize; thresholds.len()];
            let mut selected = Vec::with_capacity(n);
            for _ in 0..count {
                selected.clear();
                selected.extend((0..n).filter(|_| rng.random_bool(p)));
                let value: f64 = selected
                    .iter()
                    .map(|&i| selected.iter().map(|&j| h[(i, j)]).sum::<f64>())
                    .sum();
                let dev = (value - mean).abs();
                for (hit, &t) in hits.iter_mut().zip(thresholds) {
                    if dev > t {
                        *hit += 1;
                    }
                }
            }
            hits
        })
        .reduce(
            || vec![0; thresholds.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts.into_iter().map(|c| c as f64 / trials as f64).collect())
}
