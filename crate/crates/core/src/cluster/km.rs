use super::{ensure_nonempty, Centers, ClusteringResult};
use crate::dissimilarity::{grid_distance, pairwise_distances, DistanceMatrix, Metric};
use crate::error::{invalid, Result};
use crate::spectra::PsdEstimate;

pub const DEFAULT_KMIT_ITERS: usize = 100;

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Farthest-point centers starting from observation 0, then one nearest-center
/// assignment pass.
pub fn km_farthest(d: &DistanceMatrix, clusters: usize) -> Result<ClusteringResult> {
    let n = d.size();
    if clusters < 1 || clusters > n {
        return Err(invalid(format!("number of clusters {clusters} must be in 1..={n}")));
    }
    let mut centers = vec![0];
    let mut min_dist: Vec<f64> = d.row(0).to_vec();
    while centers.len() < clusters {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &m) in min_dist.iter().enumerate() {
            if m > best.1 {
                best = (i, m);
            }
        }
        let c = best.0;
        centers.push(c);
        for (i, m) in min_dist.iter_mut().enumerate() {
            *m = m.min(d.get(i, c));
        }
    }
    let assignments: Vec<usize> = (0..n)
        .map(|i| argmin(centers.iter().map(|&c| d.get(i, c))))
        .collect();
    ensure_nonempty(&assignments, clusters)?;
    Ok(ClusteringResult {
        centers: Some(Centers::Indices(centers)),
        ..ClusteringResult::from_assignments(assignments)
    })
}

/// KM followed by up to `iters` k-means iterations whose centers are
/// pointwise means of the assigned PSD estimates. A center that loses all its
/// members keeps its previous value, so such a cluster may stay empty.
pub fn kmit(
    psds: &[PsdEstimate],
    clusters: usize,
    iters: usize,
    metric: Metric,
) -> Result<ClusteringResult> {
    let d = pairwise_distances(psds, metric)?;
    let km = km_farthest(&d, clusters)?;
    if iters == 0 {
        return Ok(km);
    }
    let Some(Centers::Indices(idx)) = &km.centers else {
        unreachable!("KM always reports center indices")
    };
    let grid = psds[0].grid_size();
    let mut centers: Vec<Vec<f64>> = idx.iter().map(|&c| psds[c].values().to_vec()).collect();
    let mut assignments = km.assignments.clone();
    for _ in 0..iters {
        let mut sums = vec![vec![0.0; grid]; clusters];
        let mut counts = vec![0usize; clusters];
        for (psd, &a) in psds.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(psd.values()) {
                *s += v;
            }
        }
        for c in 0..clusters {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let next = psds
            .iter()
            .map(|psd| {
                let dists = centers
                    .iter()
                    .map(|c| grid_distance(psd.values(), c, metric))
                    .collect::<Result<Vec<_>>>()?;
                Ok(argmin(dists.into_iter()))
            })
            .collect::<Result<Vec<_>>>()?;
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let centers = centers
        .into_iter()
        .map(PsdEstimate::from_values)
        .collect::<Result<_>>()?;
    Ok(ClusteringResult {
        centers: Some(Centers::Psds(centers)),
        ..ClusteringResult::from_assignments(assignments)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_blobs() -> DistanceMatrix {
        DistanceMatrix::from_fn(6, |i, j| if (i < 3) == (j < 3) { 0.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn separated_groups() {
        let r = km_farthest(&two_blobs(), 2).unwrap();
        assert_eq!(r.assignments, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(r.centers, Some(Centers::Indices(vec![0, 3])));
    }

    #[test]
    fn every_point_a_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DistanceMatrix::from_fn(7, |_, _| rng.random_range(0.1..1.0)).unwrap();
        let r = km_farthest(&d, 7).unwrap();
        let Some(Centers::Indices(c)) = &r.centers else { panic!() };
        let mut sorted = c.clone();
        sorted.sort();
        assert_eq!(sorted, (0..7).collect::<Vec<_>>());
        for (i, &a) in r.assignments.iter().enumerate() {
            assert_eq!(c[a], i);
        }
    }

    #[test]
    fn too_many_clusters() {
        assert!(km_farthest(&two_blobs(), 7).is_err());
        assert!(matches!(km_farthest(&two_blobs(), 3), Err(Error::EmptyCluster(_))));
    }

    // Straight-line transcription of the two KM steps.
    fn km_oracle(d: &DistanceMatrix, l: usize) -> (Vec<usize>, Vec<usize>) {
        let n = d.size();
        let mut c = vec![0usize];
        for _ in 1..l {
            let mut best_i = 0;
            let mut best_v = -1.0;
            for i in 0..n {
                let mut m = f64::INFINITY;
                for &cl in &c {
                    if d.get(i, cl) < m {
                        m = d.get(i, cl);
                    }
                }
                if m > best_v {
                    best_v = m;
                    best_i = i;
                }
            }
            c.push(best_i);
        }
        let mut assign = vec![0; n];
        for (i, a) in assign.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for (k, &cl) in c.iter().enumerate() {
                if d.get(i, cl) < best {
                    best = d.get(i, cl);
                    *a = k;
                }
            }
        }
        (c, assign)
    }

    #[test]
    fn matches_transcription_oracle() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DistanceMatrix::from_fn(10, |_, _| rng.random_range(0.0..1.0)).unwrap();
            let r = km_farthest(&d, 3).unwrap();
            let (c, a) = km_oracle(&d, 3);
            assert_eq!(r.centers, Some(Centers::Indices(c)));
            assert_eq!(r.assignments, a);
        }
    }

    fn blob_psds() -> Vec<PsdEstimate> {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        (0..12)
            .map(|i| {
                let base = if i < 6 { 1.0 } else { 3.0 };
                PsdEstimate::from_values((0..16).map(|_| base + rng.random_range(-0.2..0.2)).collect())
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn kmit_fixed_point_and_zero_iterations() {
        let psds = blob_psds();
        let d = pairwise_distances(&psds, Metric::L1).unwrap();
        let km = km_farthest(&d, 2).unwrap();
        assert_eq!(kmit(&psds, 2, 0, Metric::L1).unwrap(), km);
        let it = kmit(&psds, 2, DEFAULT_KMIT_ITERS, Metric::L1).unwrap();
        assert_eq!(it.assignments, km.assignments);
        assert!(matches!(it.centers, Some(Centers::Psds(ref c)) if c.len() == 2));
    }

    #[test]
    fn kmit_refines_a_bad_start() {
        // observation 0 sits between the groups, so KM's first center is poor
        let mut psds = vec![PsdEstimate::from_values(vec![2.0; 4]).unwrap()];
        for i in 0..5 {
            psds.push(PsdEstimate::from_values(vec![1.0 + 0.01 * i as f64; 4]).unwrap());
        }
        for i in 0..5 {
            psds.push(PsdEstimate::from_values(vec![3.5 + 0.01 * i as f64; 4]).unwrap());
        }
        let it = kmit(&psds, 2, 10, Metric::L1).unwrap();
        for i in 2..6 {
            assert_eq!(it.assignments[i], it.assignments[1]);
        }
        for i in 7..11 {
            assert_eq!(it.assignments[i], it.assignments[6]);
        }
        assert_ne!(it.assignments[1], it.assignments[6]);
    }
}
