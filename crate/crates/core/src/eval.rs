//! Clustering quality: confusion matrix, clustering error (CE) minimized over
//! cluster relabelings, and the normalized entropy of the confusion matrix.

use crate::error::{invalid, Result};

/// Largest label count for which CE is computed by enumerating permutations.
pub const BRUTE_FORCE_MAX_LABELS: usize = 8;

/// Rows are true labels, columns predicted clusters; square of side
/// `max(#labels, #clusters)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    size: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(predicted: &[usize], truth: &[usize]) -> Result<Self> {
        if predicted.len() != truth.len() {
            return Err(invalid(format!(
                "label vectors differ in length: {} vs {}",
                predicted.len(),
                truth.len()
            )));
        }
        if predicted.is_empty() {
            return Err(invalid("no labels"));
        }
        let size = predicted.iter().chain(truth).max().map_or(0, |m| m + 1);
        let mut counts = vec![0; size * size];
        for (&p, &t) in predicted.iter().zip(truth) {
            counts[t * size + p] += 1;
        }
        Ok(Self { size, counts })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, truth: usize, predicted: usize) -> usize {
        self.counts[truth * self.size + predicted]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    fn column(&self, predicted: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).map(move |t| self.get(t, predicted))
    }
}

/// `min_π (1/N) #{i : π(predicted_i) ≠ truth_i}`. Permutations are
/// enumerated for up to eight labels, larger problems are solved as a linear
/// assignment.
pub fn clustering_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let cm = ConfusionMatrix::new(predicted, truth)?;
    let matched = if cm.size() <= BRUTE_FORCE_MAX_LABELS {
        best_trace_enumerated(&cm)
    } else {
        best_trace_assignment(&cm)
    };
    Ok(1.0 - matched as f64 / cm.total() as f64)
}

/// CE computed through the assignment solver regardless of label count.
pub fn clustering_error_assignment(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let cm = ConfusionMatrix::new(predicted, truth)?;
    Ok(1.0 - best_trace_assignment(&cm) as f64 / cm.total() as f64)
}

fn best_trace_assignment(cm: &ConfusionMatrix) -> usize {
    let n = cm.size();
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|t| (0..n).map(|p| -(cm.get(t, p) as i64)).collect())
        .collect();
    let column_of_row = min_cost_assignment(&cost);
    column_of_row.iter().enumerate().map(|(t, &p)| cm.get(t, p)).sum()
}

/// Hungarian method with row and column potentials, O(n³). Returns the column
/// matched to each row.
fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based internally; index 0 is the virtual unmatched row/column
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of_col[0] = row;
        let mut col = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col] = true;
            let r = row_of_col[col];
            let mut delta = i64::MAX;
            let mut next = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[r - 1][j - 1] - u[r] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    next = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col = next;
            if row_of_col[col] == 0 {
                break;
            }
        }
        while col != 0 {
            let prev = way[col];
            row_of_col[col] = row_of_col[prev];
            col = prev;
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    col_of_row
}

// Heap's algorithm over column permutations.
fn best_trace_enumerated(cm: &ConfusionMatrix) -> usize {
    let n = cm.size();
    let mut perm: Vec<usize> = (0..n).collect();
    let trace = |perm: &[usize]| perm.iter().enumerate().map(|(p, &t)| cm.get(t, p)).sum();
    let mut best: usize = trace(&perm);
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(trace(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// `S = Σ_j (n_j/N) H(truth | cluster j) / log L` with `L` the number of
/// labels; zero for a single label.
pub fn confusion_entropy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    let cm = ConfusionMatrix::new(predicted, truth)?;
    let labels = truth.iter().max().map_or(0, |m| m + 1).max(predicted.iter().max().map_or(0, |m| m + 1));
    if labels < 2 {
        return Ok(0.0);
    }
    let total = cm.total() as f64;
    let s: f64 = (0..cm.size())
        .map(|j| {
            let nj: usize = cm.column(j).sum();
            if nj == 0 {
                return 0.0;
            }
            let h: f64 = cm
                .column(j)
                .filter(|&c| c > 0)
                .map(|c| {
                    let q = c as f64 / nj as f64;
                    -q * q.ln()
                })
                .sum();
            nj as f64 / total * h
        })
        .sum();
    // adding +0 turns the -0 of a perfect clustering into 0
    Ok(s / (labels as f64).ln() + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_and_swapped() {
        let t = [0, 0, 1, 1, 2];
        assert_eq!(clustering_error(&t, &t).unwrap(), 0.0);
        assert_eq!(clustering_error(&[1, 1, 0, 0, 2], &t).unwrap(), 0.0);
        assert_eq!(confusion_entropy(&t, &t).unwrap(), 0.0);
        assert_eq!(confusion_entropy(&[2, 2, 0, 0, 1], &t).unwrap(), 0.0);
    }

    #[test]
    fn simple_error() {
        assert_eq!(clustering_error(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.25);
        assert_eq!(clustering_error_assignment(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.25);
    }

    #[test]
    fn length_mismatch() {
        assert!(clustering_error(&[0, 1], &[0]).is_err());
        assert!(confusion_entropy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn entropy_of_uninformative_clustering() {
        // each cluster contains both labels in equal proportion
        let n = 1000;
        let truth: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let pred: Vec<usize> = (0..n).map(|i| (i / 2) % 2).collect();
        assert!((confusion_entropy(&pred, &truth).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn many_labels_use_assignment() {
        let truth: Vec<usize> = (0..40).map(|i| i % 10).collect();
        let pred: Vec<usize> = truth.iter().map(|t| (t + 3) % 10).collect();
        assert_eq!(clustering_error(&pred, &truth).unwrap(), 0.0);
    }

    fn labelings() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
        (2usize..6).prop_flat_map(|l| {
            (
                prop::collection::vec(0..l, 24),
                prop::collection::vec(0..l, 24),
                Just((0..l).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn relabeling_invariance((pred, truth, perm) in labelings()) {
            let base = clustering_error(&pred, &truth).unwrap();
            let relabeled: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
            prop_assert_eq!(clustering_error(&relabeled, &truth).unwrap(), base);
            let truth_relabeled: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
            prop_assert_eq!(clustering_error(&pred, &truth_relabeled).unwrap(), base);
            prop_assert_eq!(clustering_error_assignment(&pred, &truth).unwrap(), base);
        }

        #[test]
        fn balanced_upper_bound(l in 2usize..6, pred in prop::collection::vec(0usize..6, 30)) {
            let truth: Vec<usize> = (0..30).map(|i| i % l).collect();
            prop_assume!(30 % l == 0);
            let pred: Vec<usize> = pred.into_iter().map(|p| p % l).collect();
            prop_assert!(clustering_error(&pred, &truth).unwrap() <= 1.0 - 1.0 / l as f64 + 1e-12);
        }
    }
}
