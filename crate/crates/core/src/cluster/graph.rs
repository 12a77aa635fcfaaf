use nalgebra::DMatrix;

use crate::dissimilarity::DistanceMatrix;
use crate::error::{invalid, Result};

/// q-nearest-neighbor graph with weights `exp(-2 d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    /// `T_j`, ordered from nearest to farthest.
    pub neighbor_sets: Vec<Vec<usize>>,
    /// `A = Z + Zᵀ` with `Z[i, j] = exp(-2 d(i, j))` for `i ∈ T_j`.
    pub adjacency: DMatrix<f64>,
}

impl NeighborGraph {
    pub fn size(&self) -> usize {
        self.neighbor_sets.len()
    }
}

/// For each `i`, the `q` indices `j != i` with the smallest `key(i, j)`,
/// ties going to the smaller index.
pub(crate) fn nearest_by(
    n: usize,
    q: usize,
    key: impl Fn(usize, usize) -> f64,
) -> Result<Vec<Vec<usize>>> {
    if q < 1 || q + 1 > n {
        return Err(invalid(format!("q = {q} must be in 1..={}", n.saturating_sub(1))));
    }
    Ok((0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (key(i, j), j)).collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.into_iter().take(q).map(|(_, j)| j).collect()
        })
        .collect())
}

pub(crate) fn symmetrized_adjacency(
    sets: &[Vec<usize>],
    weight: impl Fn(usize, usize) -> f64,
) -> DMatrix<f64> {
    let n = sets.len();
    let mut z = DMatrix::zeros(n, n);
    for (j, set) in sets.iter().enumerate() {
        for &i in set {
            z[(i, j)] = weight(i, j);
        }
    }
    &z + z.transpose()
}

pub fn knn_sets(d: &DistanceMatrix, q: usize) -> Result<Vec<Vec<usize>>> {
    nearest_by(d.size(), q, |i, j| d.get(i, j))
}

pub fn nnpc_adjacency(d: &DistanceMatrix, q: usize) -> Result<NeighborGraph> {
    let neighbor_sets = knn_sets(d, q)?;
    let adjacency = symmetrized_adjacency(&neighbor_sets, |i, j| (-2.0 * d.get(i, j)).exp());
    Ok(NeighborGraph {
        neighbor_sets,
        adjacency,
    })
}

/// Undirected edges `{i, j}` of the graph whose endpoints carry different
/// labels. Zero means the no-false-connections property holds.
pub fn count_cross_edges(graph: &NeighborGraph, labels: &[usize]) -> usize {
    let mut count = 0;
    for j in 0..graph.size() {
        for i in 0..j {
            if labels[i] != labels[j] && graph.adjacency[(i, j)] > 0.0 {
                count += 1;
            }
        }
    }
    count
}
