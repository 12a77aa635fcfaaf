use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ClusteringResult;
use crate::dissimilarity::DistanceMatrix;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Linkage {
    Single,
    Average,
    Complete,
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" | "sl" => Ok(Linkage::Single),
            "average" | "al" => Ok(Linkage::Average),
            "complete" | "cl" => Ok(Linkage::Complete),
            other => Err(invalid(format!("unknown linkage {other:?}"))),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Average => "average",
            Linkage::Complete => "complete",
        })
    }
}

/// One agglomeration step. Clusters are named by their smallest member, and
/// `left < right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// Size of the merged cluster.
    pub size: usize,
}

/// Full agglomeration from singletons, with Lance–Williams updates of the
/// inter-cluster distances. Among equally close pairs the one with the
/// smallest `(left, right)` merges first.
pub fn linkage_tree(d: &DistanceMatrix, linkage: Linkage) -> Vec<Merge> {
    let n = d.size();
    let mut dist: Vec<Vec<f64>> = (0..n).map(|i| d.row(i).to_vec()).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for a in (0..n).filter(|&a| active[a]) {
            for b in (a + 1..n).filter(|&b| active[b]) {
                if dist[a][b] < best.0 {
                    best = (dist[a][b], a, b);
                }
            }
        }
        let (delta, a, b) = best;
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in (0..n).filter(|&k| active[k] && k != a && k != b) {
            let (dak, dbk) = (dist[a][k], dist[b][k]);
            let updated = match linkage {
                Linkage::Single => dak.min(dbk),
                Linkage::Complete => dak.max(dbk),
                Linkage::Average => (na * dak + nb * dbk) / (na + nb),
            };
            dist[a][k] = updated;
            dist[k][a] = updated;
        }
        active[b] = false;
        size[a] += size[b];
        merges.push(Merge {
            left: a,
            right: b,
            distance: delta,
            size: size[a],
        });
    }
    merges
}

/// Cuts the agglomeration at `clusters` clusters. Labels follow the order of
/// each cluster's smallest member.
pub fn hierarchical(d: &DistanceMatrix, linkage: Linkage, clusters: usize) -> Result<ClusteringResult> {
    let n = d.size();
    if clusters < 1 || clusters > n {
        return Err(invalid(format!("number of clusters {clusters} must be in 1..={n}")));
    }
    let merges = linkage_tree(d, linkage);
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for m in &merges[..n - clusters] {
        let (ra, rb) = (root(&mut parent, m.left), root(&mut parent, m.right));
        parent[rb] = ra;
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    let assignments = (0..n)
        .map(|i| {
            let r = root(&mut parent, i);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect();
    Ok(ClusteringResult::from_assignments(assignments))
}
