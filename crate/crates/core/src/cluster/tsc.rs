use super::graph::{nearest_by, symmetrized_adjacency};
use super::spectral::{spectral_cluster, SpectralParams};
use super::ClusteringResult;
use crate::error::{invalid, Error, Result};

/// Thresholding-style baseline on raw sample vectors: each `x_j` links to the
/// `q` vectors with the largest `|⟨x_i, x_j⟩|`, weighted by
/// `exp(-2 (1 - |cos θ_ij|))`, followed by normalized spectral clustering.
pub fn tsc_baseline(
    vectors: &[Vec<f64>],
    clusters: usize,
    q: usize,
    params: &SpectralParams,
) -> Result<ClusteringResult> {
    let n = vectors.len();
    if n == 0 {
        return Err(invalid("no observations"));
    }
    let len = vectors[0].len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != len) {
        return Err(invalid(format!(
            "observation {bad} has length {}, expected {len}",
            vectors[bad].len()
        )));
    }
    let norms: Vec<f64> = vectors.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if let Some(zero) = norms.iter().position(|&nrm| nrm == 0.0) {
        return Err(Error::ZeroNorm(zero));
    }
    let mut inner = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let ip: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            inner[i * n + j] = ip.abs();
            inner[j * n + i] = ip.abs();
        }
    }
    let sets = nearest_by(n, q, |j, i| -inner[j * n + i])?;
    let adjacency = symmetrized_adjacency(&sets, |i, j| {
        let cos = (inner[i * n + j] / (norms[i] * norms[j])).min(1.0);
        (-2.0 * (1.0 - cos)).exp()
    });
    spectral_cluster(&adjacency, clusters, params)
}
