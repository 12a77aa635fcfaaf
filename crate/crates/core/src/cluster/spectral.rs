//! Normalized spectral clustering: embed with the eigenvectors of the `L`
//! smallest eigenvalues of `L_sym = I - D^{-1/2} A D^{-1/2}`, scale the rows
//! to unit length, and run k-means on the rows.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ensure_nonempty, ClusteringResult};
use crate::error::{invalid, Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParams {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 100,
            seed: 0,
        }
    }
}

fn validate_adjacency(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(invalid("adjacency must be square"));
    }
    if n == 0 {
        return Err(invalid("empty graph"));
    }
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            if !(x >= 0.0) || !x.is_finite() {
                return Err(invalid(format!("adjacency entry ({i}, {j}) = {x}")));
            }
            if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    let degrees: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedNode(i));
    }
    Ok(degrees)
}

fn sym_laplacian(a: &DMatrix<f64>, degrees: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    DMatrix::from_fn(n, n, |i, j| {
        let off = a[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
        if i == j {
            1.0 - off
        } else {
            -off
        }
    })
}

/// Eigenvalues (ascending) and matching eigenvectors as columns.
fn sorted_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let degrees = validate_adjacency(a)?;
    let eig = SymmetricEigen::new(sym_laplacian(a, &degrees));
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of the symmetric normalized Laplacian of `a`.
pub fn laplacian_spectrum(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(sorted_eigen(a)?.0)
}

pub fn spectral_cluster(
    a: &DMatrix<f64>,
    clusters: usize,
    params: &SpectralParams,
) -> Result<ClusteringResult> {
    let n = a.nrows();
    if clusters < 1 || clusters > n {
        return Err(invalid(format!("number of clusters {clusters} must be in 1..={n}")));
    }
    let (values, vectors) = sorted_eigen(a)?;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let row: Vec<f64> = (0..clusters).map(|c| vectors[(i, c)]).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let assignments = kmeans(&rows, clusters, params)?;
    Ok(ClusteringResult {
        eigenvalues: Some(values),
        ..ClusteringResult::from_assignments(assignments)
    })
}

/// Number of clusters at the largest gap `λ_{ℓ+1} - λ_ℓ`, `1 <= ℓ < l_max`.
pub fn eigengap_estimate(a: &DMatrix<f64>, l_max: usize) -> Result<usize> {
    let n = a.nrows();
    if l_max < 2 || l_max > n {
        return Err(invalid(format!("l_max = {l_max} must be in 2..={n}")));
    }
    let values = laplacian_spectrum(a)?;
    let mut best = (f64::NEG_INFINITY, 1);
    for l in 1..l_max {
        let gap = values[l] - values[l - 1];
        if gap > best.0 {
            best = (gap, l);
        }
    }
    Ok(best.1)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Greedy k-means++: at each step draw several D²-weighted candidates and
/// keep the one that lowers the potential most.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut closest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = if total > 0.0 {
                let mut target = rng.random::<f64>() * total;
                let mut pick = n - 1;
                for (i, &d) in closest.iter().enumerate() {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, &c)| c.min(sq_dist(p, &points[cand])))
                .collect();
            let potential = updated.iter().sum::<f64>();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one candidate");
        closest = updated;
        centers.push(points[cand].clone());
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> (Vec<usize>, f64) {
    let dim = points[0].len();
    let k = centers.len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (labels, inertia)
}

/// Renumbers clusters in order of first appearance.
fn canonical(labels: Vec<usize>, k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .into_iter()
        .map(|l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

/// Best of `params.restarts` seeded k-means runs; runs that leave a cluster
/// empty are only used when every run does, in which case the result is an
/// error.
pub(crate) fn kmeans(points: &[Vec<f64>], k: usize, params: &SpectralParams) -> Result<Vec<usize>> {
    if k == 1 {
        return Ok(vec![0; points.len()]);
    }
    let mut best: Option<(bool, f64, Vec<usize>)> = None;
    for restart in 0..params.restarts.max(1) {
        let mut rng = rng_for(params.seed, &[restart as u64]);
        let centers = seed_centers(points, k, &mut rng);
        let (labels, inertia) = lloyd(points, centers, params.max_iter);
        let complete = ensure_nonempty(&labels, k).is_ok();
        let better = match &best {
            None => true,
            Some((c, i, _)) => (complete && !c) || (complete == *c && inertia < *i),
        };
        if better {
            best = Some((complete, inertia, labels));
        }
    }
    let (complete, _, labels) = best.expect("at least one restart");
    if !complete {
        ensure_nonempty(&labels, k)?;
    }
    Ok(canonical(labels, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::clustering_error;

    fn block(sizes: &[usize], inner: f64, cross: f64) -> DMatrix<f64> {
        let n: usize = sizes.iter().sum();
        let group: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else if group[i] == group[j] {
                inner
            } else {
                cross
            }
        })
    }

    #[test]
    fn components_are_recovered() {
        let a = block(&[5, 7], 1.0, 0.0);
        let r = spectral_cluster(&a, 2, &SpectralParams::default()).unwrap();
        let truth: Vec<usize> = (0..12).map(|i| usize::from(i >= 5)).collect();
        assert_eq!(clustering_error(&r.assignments, &truth).unwrap(), 0.0);
        let ev = r.eigenvalues.unwrap();
        assert!(ev[0].abs() < 1e-10 && ev[1].abs() < 1e-10 && ev[2] > 0.1);
    }

    #[test]
    fn single_cluster() {
        let a = block(&[6], 1.0, 0.0);
        let r = spectral_cluster(&a, 1, &SpectralParams::default()).unwrap();
        assert!(r.assignments.iter().all(|&l| l == 0));
    }

    #[test]
    fn planted_partition_with_weak_cross_edges() {
        let a = block(&[10, 10], 1.9, 0.01);
        let truth: Vec<usize> = (0..20).map(|i| i / 10).collect();
        for seed in 0..10 {
            let params = SpectralParams {
                seed,
                ..Default::default()
            };
            let r = spectral_cluster(&a, 2, &params).unwrap();
            assert_eq!(clustering_error(&r.assignments, &truth).unwrap(), 0.0);
        }
    }

    #[test]
    fn errors() {
        let mut a = block(&[3, 3], 1.0, 0.0);
        a[(0, 1)] = 0.5;
        assert!(matches!(
            spectral_cluster(&a, 2, &SpectralParams::default()),
            Err(Error::NotSymmetric(..))
        ));
        let mut a = block(&[3, 3], 1.0, 0.0);
        for j in 0..6 {
            a[(0, j)] = 0.0;
            a[(j, 0)] = 0.0;
        }
        assert!(matches!(
            spectral_cluster(&a, 2, &SpectralParams::default()),
            Err(Error::IsolatedNode(0))
        ));
        assert!(spectral_cluster(&block(&[3], 1.0, 0.0), 4, &SpectralParams::default()).is_err());
    }

    #[test]
    fn eigengap_counts_components() {
        assert_eq!(eigengap_estimate(&block(&[5, 6], 1.0, 0.0), 6).unwrap(), 2);
        assert_eq!(eigengap_estimate(&block(&[4, 5, 6], 1.0, 0.0), 6).unwrap(), 3);
        assert!(eigengap_estimate(&block(&[4], 1.0, 0.0), 5).is_err());
    }

    #[test]
    fn deterministic() {
        let a = block(&[8, 8, 8], 1.0, 0.2);
        let p = SpectralParams::default();
        assert_eq!(spectral_cluster(&a, 3, &p).unwrap(), spectral_cluster(&a, 3, &p).unwrap());
    }
}
