//! Configured experiments: TOML configs, sweep grids with deterministic
//! seeding, series loading, clustering of series files, and the Monte-Carlo
//! bound checks. All tables are CSV with a leading `# config-sha256:` line.

mod config;
mod files;
mod io;
mod sweep;
mod validate;

pub use config::{
    Algorithm, Axis, ClusterCount, ExperimentConfig, ModelSpec, SweepAxis, WindowKind, WindowSpec,
};
pub use files::{cluster_files, FileClustering};
pub use io::{load_labels, load_series, write_series, SeriesFormat};
pub use sweep::{
    build_models, cluster_observations, estimate_all, run_sweep, run_trial, theory_table, write_theory_csv,
    CellSettings, SweepRow, SweepTable,
};
pub use validate::{quadform_suite, inner_product_suite, random_symmetric, write_checks_csv, BoundCheck};
