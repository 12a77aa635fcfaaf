use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::io::{load_series, SeriesFormat};
use super::sweep::{cluster_observations, write_table};
use crate::error::{invalid, Error, Result};
use crate::eval::{clustering_error, confusion_entropy};

/// Assignments for a set of series files, with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FileClustering {
    pub paths: Vec<PathBuf>,
    pub assignments: Vec<usize>,
    /// Normalized-Laplacian spectrum, when the algorithm builds a graph.
    pub eigenvalues: Option<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
    pub ce: Option<f64>,
    pub entropy: Option<f64>,
    pub config_hash: String,
}

/// Loads one-column series files, estimates their PSDs with the configured
/// window and clusters them. The data are taken as fully observed.
pub fn cluster_files(
    paths: &[PathBuf],
    config: &ExperimentConfig,
    labels: Option<&[usize]>,
) -> Result<FileClustering> {
    if paths.len() < 2 {
        return Err(invalid("need at least two series files"));
    }
    if let Some(l) = labels {
        if l.len() != paths.len() {
            return Err(invalid(format!("{} labels for {} files", l.len(), paths.len())));
        }
    }
    config.check_sizes(paths.len())?;
    let observations = paths
        .iter()
        .map(|p| load_series(p, SeriesFormat::Text, config.center))
        .collect::<Result<Vec<_>>>()?;
    let result = cluster_observations(config, &observations, 1.0, config.master_seed, labels)
        .map_err(|e| match e {
            Error::InvalidArgument(msg) => Error::InvalidArgument(format!("clustering files: {msg}")),
            other => other,
        })?;
    let (ce, entropy) = match labels {
        Some(l) => (
            Some(clustering_error(&result.assignments, l)?),
            Some(confusion_entropy(&result.assignments, l)?),
        ),
        None => (None, None),
    };
    Ok(FileClustering {
        paths: paths.to_vec(),
        assignments: result.assignments,
        eigenvalues: result.eigenvalues,
        labels: labels.map(<[usize]>::to_vec),
        ce,
        entropy,
        config_hash: config.hash(),
    })
}

impl FileClustering {
    /// Columns `path, cluster`, plus `label, ce, s` when labels were given.
    /// The spectrum follows as a trailing comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["path".to_string(), "cluster".to_string()];
        if self.labels.is_some() {
            header.extend(["label", "ce", "s"].map(String::from));
        }
        let rows = self.paths.iter().enumerate().map(|(i, p)| {
            let mut rec = vec![display(p), self.assignments[i].to_string()];
            if let (Some(l), Some(ce), Some(s)) = (&self.labels, self.ce, self.entropy) {
                rec.extend([l[i].to_string(), ce.to_string(), s.to_string()]);
            }
            rec
        });
        write_table(&mut out, &self.config_hash, &header, rows)?;
        if let Some(ev) = &self.eigenvalues {
            let list: Vec<String> = ev.iter().map(ToString::to_string).collect();
            writeln!(out, "# eigenvalues: {}", list.join(" ")).map_err(|e| Error::Io {
                context: "writing CSV".into(),
                source: e,
            })?;
        }
        Ok(())
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
