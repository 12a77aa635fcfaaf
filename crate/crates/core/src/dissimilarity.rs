//! Distances between PSDs sampled on a common uniform grid.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectra::PsdEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Metric {
    /// `½ ∫ |a - b|`
    #[default]
    #[serde(alias = "l1")]
    L1,
    /// `(∫ |a - b|²)^½`
    #[serde(alias = "l2")]
    L2,
    /// `sup |a - b|`
    #[serde(alias = "linf")]
    Linf,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "linf" | "l_inf" | "max" => Ok(Metric::Linf),
            other => Err(invalid(format!("unknown metric {other:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::L1 => "L1",
            Metric::L2 => "L2",
            Metric::Linf => "Linf",
        })
    }
}

/// Distance between two value arrays on the same grid, integrals taken as
/// left Riemann sums.
pub fn grid_distance(a: &[f64], b: &[f64], metric: Metric) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(a.len(), b.len()));
    }
    let n = a.len() as f64;
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    Ok(match metric {
        Metric::L1 => 0.5 * diffs.sum::<f64>() / n,
        Metric::L2 => (diffs.map(|d| d * d).sum::<f64>() / n).sqrt(),
        Metric::Linf => diffs.fold(0.0, f64::max),
    })
}

pub fn psd_distance(a: &PsdEstimate, b: &PsdEstimate, metric: Metric) -> Result<f64> {
    grid_distance(a.values(), b.values(), metric)
}

/// Symmetric nonnegative matrix with zero diagonal, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds the matrix from the strict upper triangle `f(i, j)`, `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = f(i, j);
                check_entry(d, i, j)?;
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Ok(Self { n, entries })
    }

    /// Validates a full row-major matrix.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("distance matrix must be square"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(invalid(format!("nonzero diagonal at {i}")));
            }
            for (j, &d) in row.iter().enumerate() {
                check_entry(d, i, j)?;
                if d != rows[j][i] {
                    return Err(invalid(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

fn check_entry(d: f64, i: usize, j: usize) -> Result<()> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(invalid(format!("distance ({i}, {j}) = {d} is not a finite nonnegative value")));
    }
    Ok(())
}

/// All pairwise distances. Pairs are computed in parallel; the result does
/// not depend on scheduling.
pub fn pairwise_distances(psds: &[PsdEstimate], metric: Metric) -> Result<DistanceMatrix> {
    let n = psds.len();
    if n < 2 {
        return Err(invalid("need at least two PSDs"));
    }
    let grid = psds[0].grid_size();
    if let Some(p) = psds.iter().find(|p| p.grid_size() != grid) {
        return Err(Error::GridMismatch(grid, p.grid_size()));
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| psd_distance(&psds[i], &psds[j], metric))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    DistanceMatrix::from_fn(n, |i, j| upper[i][j - i - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const METRICS: [Metric; 3] = [Metric::L1, Metric::L2, Metric::Linf];

    fn psd(v: Vec<f64>) -> PsdEstimate {
        PsdEstimate::from_values(v).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let a = psd(vec![1.0, 2.0, 3.0, 0.5]);
        for m in METRICS {
            assert_eq!(psd_distance(&a, &a, m).unwrap(), 0.0);
        }
    }

    #[test]
    fn disjoint_unit_power_is_one() {
        let mut a = vec![0.0; 64];
        let mut b = vec![0.0; 64];
        a[..32].fill(2.0);
        b[32..].fill(2.0);
        assert!((psd_distance(&psd(a), &psd(b), Metric::L1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn metric_values() {
        let a = psd(vec![0.0, 0.0, 0.0, 4.0]);
        let b = psd(vec![0.0; 4]);
        assert_eq!(psd_distance(&a, &b, Metric::L1).unwrap(), 0.5);
        assert_eq!(psd_distance(&a, &b, Metric::L2).unwrap(), 2.0);
        assert_eq!(psd_distance(&a, &b, Metric::Linf).unwrap(), 4.0);
    }

    #[test]
    fn mismatched_grids() {
        let a = psd(vec![1.0; 4]);
        let b = psd(vec![1.0; 8]);
        assert!(matches!(psd_distance(&a, &b, Metric::L1), Err(Error::GridMismatch(4, 8))));
        assert!(pairwise_distances(&[a, b], Metric::L1).is_err());
    }

    #[test]
    fn pairwise_small() {
        let a = psd(vec![1.0, 3.0]);
        let d = pairwise_distances(&[a.clone(), a.clone()], Metric::L1).unwrap();
        assert_eq!(d.row(0), &[0.0, 0.0]);
        assert_eq!(d.row(1), &[0.0, 0.0]);

        let set = [a, psd(vec![2.0, 0.0]), psd(vec![0.5, 0.5])];
        for m in METRICS {
            let d = pairwise_distances(&set, m).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(d.get(i, j), psd_distance(&set[i], &set[j], m).unwrap());
                }
            }
        }
    }

    #[test]
    fn pairwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let set: Vec<_> = (0..10)
            .map(|_| psd((0..32).map(|_| rng.random_range(0.0..3.0)).collect()))
            .collect();
        let d = pairwise_distances(&set, Metric::L1).unwrap();
        for i in 0..10 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..10 {
                assert_eq!(d.get(i, j), psd_distance(&set[j], &set[i], Metric::L1).unwrap());
            }
        }
    }

    #[test]
    fn matrix_validation() {
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).is_ok());
    }

    fn grid(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..10.0, len)
    }

    proptest! {
        #[test]
        fn triangle_inequality((a, b, c) in (grid(24), grid(24), grid(24))) {
            for m in METRICS {
                let ab = grid_distance(&a, &b, m).unwrap();
                let bc = grid_distance(&b, &c, m).unwrap();
                let ac = grid_distance(&a, &c, m).unwrap();
                prop_assert!(ac <= ab + bc + 1e-12);
            }
        }

        #[test]
        fn homogeneous((a, b) in (grid(16), grid(16)), c in 0.01f64..100.0) {
            for m in METRICS {
                let d = grid_distance(&a, &b, m).unwrap();
                let sa: Vec<f64> = a.iter().map(|x| c * x).collect();
                let sb: Vec<f64> = b.iter().map(|x| c * x).collect();
                let ds = grid_distance(&sa, &sb, m).unwrap();
                prop_assert!((ds - c * d).abs() <= 1e-9 * (1.0 + c * d));
            }
        }

        #[test]
        fn l1_of_unit_power_in_unit_interval((a, b) in (grid(32), grid(32))) {
            prop_assume!(a.iter().sum::<f64>() > 0.0 && b.iter().sum::<f64>() > 0.0);
            let a = crate::spectra::normalize_power(&psd(a)).unwrap();
            let b = crate::spectra::normalize_power(&psd(b)).unwrap();
            let d = psd_distance(&a, &b, Metric::L1).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        }
    }
}
