//! Clustering algorithms operating on PSD estimates or their distance matrix:
//! NNPC (nearest-neighbor graph + normalized spectral clustering), KM
//! (farthest-point centers, one assignment pass), KMit (KM refined by k-means
//! iterations in PSD space), agglomerative baselines, and an inner-product
//! neighbor baseline on raw samples.
//!
//! Ties are broken toward the smallest index everywhere, and every randomized
//! step draws from an explicit seed, so all results are reproducible.

mod graph;
mod hierarchical;
mod km;
mod spectral;
mod tsc;

use crate::dissimilarity::{pairwise_distances, DistanceMatrix, Metric};
use crate::error::{invalid, Error, Result};
use crate::spectra::PsdEstimate;

pub use graph::{count_cross_edges, knn_sets, nnpc_adjacency, NeighborGraph};
pub use hierarchical::{hierarchical, linkage_tree, Linkage, Merge};
pub use km::{km_farthest, kmit, DEFAULT_KMIT_ITERS};
pub use spectral::{eigengap_estimate, laplacian_spectrum, spectral_cluster, SpectralParams};
pub use tsc::tsc_baseline;

#[derive(Debug, Clone, PartialEq)]
pub enum Centers {
    /// Indices of the observations chosen as centers.
    Indices(Vec<usize>),
    /// Centroids in PSD space.
    Psds(Vec<PsdEstimate>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster index in `0..L` for every observation.
    pub assignments: Vec<usize>,
    pub centers: Option<Centers>,
    /// Ascending spectrum of the normalized Laplacian, for spectral runs.
    pub eigenvalues: Option<Vec<f64>>,
    /// Number of graph edges joining different true labels, when the truth
    /// was supplied to a graph-based run.
    pub nfc_violations: Option<usize>,
}

impl ClusteringResult {
    pub(crate) fn from_assignments(assignments: Vec<usize>) -> Self {
        Self {
            assignments,
            centers: None,
            eigenvalues: None,
            nfc_violations: None,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.assignments.iter().max().map_or(0, |m| m + 1)
    }
}

pub(crate) fn ensure_nonempty(assignments: &[usize], clusters: usize) -> Result<()> {
    let mut seen = vec![false; clusters];
    for &a in assignments {
        seen[a] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(c) => Err(Error::EmptyCluster(c)),
        None => Ok(()),
    }
}

/// Nearest-neighbor process clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Nnpc {
    pub clusters: usize,
    pub q: usize,
    pub metric: Metric,
    pub spectral: SpectralParams,
}

impl Nnpc {
    pub fn new(clusters: usize, q: usize) -> Self {
        Self {
            clusters,
            q,
            metric: Metric::L1,
            spectral: SpectralParams::default(),
        }
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.spectral.seed = seed;
        self
    }

    pub fn run(&self, psds: &[PsdEstimate], truth: Option<&[usize]>) -> Result<ClusteringResult> {
        let d = pairwise_distances(psds, self.metric)?;
        self.run_on_distances(&d, truth)
    }

    pub fn run_on_distances(
        &self,
        d: &DistanceMatrix,
        truth: Option<&[usize]>,
    ) -> Result<ClusteringResult> {
        let graph = nnpc_adjacency(d, self.q)?;
        let mut result = spectral_cluster(&graph.adjacency, self.clusters, &self.spectral)?;
        if let Some(truth) = truth {
            if truth.len() != d.size() {
                return Err(invalid("truth length does not match the data"));
            }
            result.nfc_violations = Some(count_cross_edges(&graph, truth));
        }
        Ok(result)
    }
}

/// NNPC with default spectral-clustering settings.
pub fn nnpc(psds: &[PsdEstimate], clusters: usize, q: usize, metric: Metric) -> Result<ClusteringResult> {
    Nnpc::new(clusters, q).with_metric(metric).run(psds, None)
}
