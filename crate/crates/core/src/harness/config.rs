use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::Linkage;
use crate::dissimilarity::Metric;
use crate::error::{Error, Result};
use crate::spectra::{bartlett_window, bias_corrected_window, WindowFunction};

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// A generative model entry: an AR(2) resonator with its angle given in
/// multiples of π, or a tabulated PSD read from a one-column text file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ModelSpec {
    Ar2 { a: f64, nu: f64 },
    Table { psd_file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Bartlett,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub kind: WindowKind,
    /// Full width `W` for Bartlett, half-support for rectangular.
    pub width: usize,
}

impl WindowSpec {
    pub fn build(&self) -> Result<WindowFunction> {
        match self.kind {
            WindowKind::Bartlett => bartlett_window(self.width),
            WindowKind::Rectangular => Ok(WindowFunction::rectangular(self.width)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nnpc,
    Km,
    Kmit,
    Sl,
    Al,
    Cl,
    Tsc,
}

impl Algorithm {
    pub fn linkage(self) -> Option<Linkage> {
        match self {
            Algorithm::Sl => Some(Linkage::Single),
            Algorithm::Al => Some(Linkage::Average),
            Algorithm::Cl => Some(Linkage::Complete),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Nnpc => "nnpc",
            Algorithm::Km => "km",
            Algorithm::Kmit => "kmit",
            Algorithm::Sl => "sl",
            Algorithm::Al => "al",
            Algorithm::Cl => "cl",
            Algorithm::Tsc => "tsc",
        };
        f.write_str(name)
    }
}

/// Number of clusters: fixed, or estimated from the eigengap of the
/// neighbor graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterCount {
    Fixed(usize),
    Eigengap,
}

impl Serialize for ClusterCount {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClusterCount::Fixed(l) => s.serialize_u64(*l as u64),
            ClusterCount::Eigengap => s.serialize_str("eigengap"),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterCount {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(l) => Ok(ClusterCount::Fixed(l)),
            Raw::Name(s) if s == "eigengap" => Ok(ClusterCount::Eigengap),
            Raw::Name(s) => Err(serde::de::Error::custom(format!(
                "expected a cluster count or \"eigengap\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Angle of the second model, in multiples of π.
    Nu2,
    #[serde(rename = "M", alias = "m")]
    M,
    Sigma,
    /// Inverse sampling probability `1/p`.
    InvP,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Nu2 => "nu2",
            Axis::M => "M",
            Axis::Sigma => "sigma",
            Axis::InvP => "inv_p",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<f64>,
}

fn default_true() -> bool {
    true
}

fn default_kmit_iters() -> usize {
    crate::cluster::DEFAULT_KMIT_ITERS
}

fn default_eigengap_max() -> usize {
    10
}

fn default_trials() -> usize {
    1
}

/// One experiment: models, corruption, estimator, algorithm, and up to two
/// sweep axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default = "one_usize")]
    pub n_per_model: usize,
    /// Observation length of synthetic data.
    #[serde(rename = "M", default)]
    pub m: usize,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "one")]
    pub p: f64,
    pub window: WindowSpec,
    /// Divide the window by the lag-dependent sampling rate when `p < 1`.
    #[serde(default = "default_true")]
    pub bias_correction: bool,
    #[serde(default)]
    pub metric: Metric,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub q: Option<usize>,
    #[serde(rename = "L")]
    pub clusters: ClusterCount,
    /// Upper limit for the eigengap estimate.
    #[serde(default = "default_eigengap_max")]
    pub eigengap_max: usize,
    #[serde(default = "default_kmit_iters")]
    pub kmit_iters: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Rescale every estimate to unit power before comparing.
    #[serde(default)]
    pub normalize: bool,
    /// Subtract the sample mean of loaded series.
    #[serde(default)]
    pub center: bool,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one_usize() -> usize {
    1
}

fn one() -> f64 {
    1.0
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(s).map_err(|e| config_error(e.to_string()))?;
        config.validate_fields()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    /// Reads and validates a TOML file. Relative model paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut config: Self = text.parse().map_err(|e| match e {
            Error::Config(msg) => config_error(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_fields()?;
        if self.models.is_empty() {
            return Err(config_error("models: at least one model is required"));
        }
        check_m(self.m, "M")?;
        self.check_sizes(self.models.len() * self.n_per_model)
    }

    /// Field checks that do not depend on the models, as needed when
    /// clustering files.
    pub fn validate_fields(&self) -> Result<()> {
        for (i, model) in self.models.iter().enumerate() {
            if let ModelSpec::Ar2 { a, nu } = model {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(config_error(format!("models[{i}].a: must be in (0, 1), got {a}")));
                }
                if !(0.0..=1.0).contains(nu) {
                    return Err(config_error(format!(
                        "models[{i}].nu: must be in [0, 1] (multiples of π), got {nu}"
                    )));
                }
            }
        }
        if self.n_per_model == 0 {
            return Err(config_error("n_per_model: must be positive"));
        }
        check_sigma(self.sigma, "sigma")?;
        check_p(self.p, "p")?;
        self.window
            .build()
            .map_err(|e| config_error(format!("window: {e}")))?;
        if self.trials == 0 {
            return Err(config_error("trials: must be positive"));
        }
        match self.clusters {
            ClusterCount::Fixed(0) => return Err(config_error("L: must be positive")),
            ClusterCount::Eigengap if self.eigengap_max < 2 => {
                return Err(config_error("eigengap_max: must be at least 2"));
            }
            _ => {}
        }
        if self.q == Some(0) {
            return Err(config_error("q: must be positive"));
        }
        let needs_q = matches!(self.algorithm, Algorithm::Nnpc | Algorithm::Tsc)
            || self.clusters == ClusterCount::Eigengap;
        if needs_q && self.q.is_none() {
            return Err(config_error(format!(
                "q: required for algorithm {} or an eigengap estimate",
                self.algorithm
            )));
        }
        if self.sweep.len() > 2 {
            return Err(config_error("sweep: at most two axes"));
        }
        if self.sweep.len() == 2 && self.sweep[0].axis == self.sweep[1].axis {
            return Err(config_error(format!("sweep: axis {} given twice", self.sweep[0].axis)));
        }
        for (i, ax) in self.sweep.iter().enumerate() {
            let field = format!("sweep[{i}].values");
            if ax.values.is_empty() {
                return Err(config_error(format!("{field}: empty")));
            }
            for &v in &ax.values {
                match ax.axis {
                    Axis::Nu2 => {
                        if !matches!(self.models.get(1), Some(ModelSpec::Ar2 { .. })) {
                            return Err(config_error(format!(
                                "{field}: the nu2 axis needs an AR(2) second model"
                            )));
                        }
                        if !(0.0..=1.0).contains(&v) {
                            return Err(config_error(format!("{field}: nu2 {v} not in [0, 1]")));
                        }
                    }
                    Axis::M => {
                        if v.fract() != 0.0 || v < 0.0 {
                            return Err(config_error(format!("{field}: M {v} is not an integer")));
                        }
                        check_m(v as usize, &field)?;
                    }
                    Axis::Sigma => check_sigma(v, &field)?,
                    Axis::InvP => {
                        if !(v >= 1.0) {
                            return Err(config_error(format!("{field}: 1/p must be >= 1, got {v}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks the cluster count and neighbor count against the number of
    /// observations `n`.
    pub fn check_sizes(&self, n: usize) -> Result<()> {
        match self.clusters {
            ClusterCount::Fixed(l) if l > n => {
                return Err(config_error(format!("L: must be in 1..={n}, got {l}")));
            }
            ClusterCount::Eigengap if self.eigengap_max > n => {
                return Err(config_error(format!(
                    "eigengap_max: must be in 2..={n}, got {}",
                    self.eigengap_max
                )));
            }
            _ => {}
        }
        match self.q {
            Some(q) if q >= n => Err(config_error(format!("q: must be in 1..={}, got {q}", n - 1))),
            _ => Ok(()),
        }
    }

    /// The lag window for sampling probability `p`, bias-corrected if enabled.
    pub fn window_for(&self, p: f64) -> Result<WindowFunction> {
        let g = self.window.build()?;
        if self.bias_correction && p < 1.0 {
            bias_corrected_window(&g, p)
        } else {
            Ok(g)
        }
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_relative() {
            self.base_dir.join(path)
        } else {
            path.to_path_buf()
        }
    }
}

fn check_m(m: usize, field: &str) -> Result<()> {
    if m < 2 {
        return Err(config_error(format!("{field}: observation length must be >= 2, got {m}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64, field: &str) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(config_error(format!("{field}: noise level must be >= 0, got {sigma}")));
    }
    Ok(())
}

fn check_p(p: f64, field: &str) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(config_error(format!("{field}: must be in (0, 1], got {p}")));
    }
    Ok(())
}
