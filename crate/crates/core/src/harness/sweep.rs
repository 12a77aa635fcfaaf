use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use super::config::{Algorithm, Axis, ClusterCount, ExperimentConfig, ModelSpec};
use super::io::read_column;
use crate::cluster::{
    eigengap_estimate, hierarchical, km_farthest, kmit, laplacian_spectrum, nnpc_adjacency, tsc_baseline,
    ClusteringResult, Nnpc, SpectralParams,
};
use crate::dissimilarity::pairwise_distances;
use crate::error::{Error, Result};
use crate::eval::{clustering_error, confusion_entropy};
use crate::genmodel::{ar2_model, make_dataset, CorruptionSpec, GenerativeModel, DEFAULT_MAXLAG, FINE_GRID};
use crate::seed::derive_seed;
use crate::spectra::{estimate_psd, normalize_power, Observation, PsdEstimate};
use crate::theory::{clustering_condition, model_distance, ConditionReport};

/// Builds the generative models of a config.
pub fn build_models(config: &ExperimentConfig, specs: &[ModelSpec]) -> Result<Vec<GenerativeModel>> {
    specs
        .iter()
        .map(|spec| match spec {
            ModelSpec::Ar2 { a, nu } => ar2_model(*a, nu * PI, FINE_GRID, DEFAULT_MAXLAG),
            ModelSpec::Table { psd_file } => {
                let values = read_column(&config.resolve(psd_file), None)?;
                let maxlag = DEFAULT_MAXLAG.min(values.len() / 2);
                GenerativeModel::from_psd(values, maxlag)
            }
        })
        .collect()
}

/// Estimates PSDs with the configured window for sampling probability `p`.
pub fn estimate_all(config: &ExperimentConfig, observations: &[Observation], p: f64) -> Result<Vec<PsdEstimate>> {
    let window = config.window_for(p)?;
    observations
        .par_iter()
        .map(|obs| {
            let psd = estimate_psd(obs, &window)?;
            if config.normalize {
                normalize_power(&psd)
            } else {
                Ok(psd)
            }
        })
        .collect()
}

/// Runs the configured algorithm. With an eigengap cluster count, the
/// estimate comes from the NNPC graph and its spectrum is reported.
pub fn cluster_observations(
    config: &ExperimentConfig,
    observations: &[Observation],
    p: f64,
    seed: u64,
    truth: Option<&[usize]>,
) -> Result<ClusteringResult> {
    let psds = estimate_all(config, observations, p)?;
    let d = pairwise_distances(&psds, config.metric)?;
    let spectral = SpectralParams {
        seed,
        ..SpectralParams::default()
    };
    let mut spectrum = None;
    let clusters = match config.clusters {
        ClusterCount::Fixed(l) => l,
        ClusterCount::Eigengap => {
            let q = config.q.expect("validated");
            let graph = nnpc_adjacency(&d, q)?;
            spectrum = Some(laplacian_spectrum(&graph.adjacency)?);
            eigengap_estimate(&graph.adjacency, config.eigengap_max)?
        }
    };
    let mut result = match config.algorithm {
        Algorithm::Nnpc => Nnpc {
            clusters,
            q: config.q.expect("validated"),
            metric: config.metric,
            spectral,
        }
        .run_on_distances(&d, truth)?,
        Algorithm::Km => km_farthest(&d, clusters)?,
        Algorithm::Kmit => kmit(&psds, clusters, config.kmit_iters, config.metric)?,
        Algorithm::Sl | Algorithm::Al | Algorithm::Cl => {
            hierarchical(&d, config.algorithm.linkage().expect("linkage algorithm"), clusters)?
        }
        Algorithm::Tsc => {
            let raw: Vec<Vec<f64>> = observations.iter().map(|o| o.samples().to_vec()).collect();
            tsc_baseline(&raw, clusters, config.q.expect("validated"), &spectral)?
        }
    };
    if result.eigenvalues.is_none() {
        result.eigenvalues = spectrum;
    }
    Ok(result)
}

/// Parameters of one sweep cell after applying the axis values.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSettings {
    pub models: Vec<ModelSpec>,
    pub m: usize,
    pub sigma: f64,
    pub p: f64,
}

impl CellSettings {
    fn new(config: &ExperimentConfig, axes: &[Axis], coords: &[f64]) -> Self {
        let mut cell = CellSettings {
            models: config.models.clone(),
            m: config.m,
            sigma: config.sigma,
            p: config.p,
        };
        for (axis, &v) in axes.iter().zip(coords) {
            match axis {
                Axis::Nu2 => {
                    if let Some(ModelSpec::Ar2 { nu, .. }) = cell.models.get_mut(1) {
                        *nu = v;
                    }
                }
                Axis::M => cell.m = v as usize,
                Axis::Sigma => cell.sigma = v,
                Axis::InvP => cell.p = 1.0 / v,
            }
        }
        cell
    }
}

/// Grid cells in row-major order of the sweep axes, with their index
/// coordinates.
fn grid(config: &ExperimentConfig) -> Vec<(Vec<usize>, Vec<f64>)> {
    let mut cells = vec![(Vec::new(), Vec::new())];
    for ax in &config.sweep {
        cells = cells
            .into_iter()
            .flat_map(|(idx, vals)| {
                ax.values.iter().enumerate().map(move |(k, &v)| {
                    let mut idx = idx.clone();
                    let mut vals = vals.clone();
                    idx.push(k);
                    vals.push(v);
                    (idx, vals)
                })
            })
            .collect();
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    /// Distance between the first two models, for sweeps over `nu2`.
    pub model_distance: Option<f64>,
    pub mean_ce: f64,
    /// Sample standard deviation across trials; zero for a single trial.
    pub std_ce: f64,
    pub mean_entropy: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axes: Vec<Axis>,
    pub config_hash: String,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_distance = self.axes.contains(&Axis::Nu2);
        let mut header: Vec<String> = self.axes.iter().map(ToString::to_string).collect();
        if with_distance {
            header.push("d".into());
        }
        header.extend(["mean_ce", "std_ce", "mean_s", "trials"].map(String::from));
        let rows = self.rows.iter().map(|row| {
            let mut rec: Vec<String> = row.coords.iter().map(ToString::to_string).collect();
            if with_distance {
                rec.push(row.model_distance.map_or(String::new(), |d| d.to_string()));
            }
            rec.extend([
                row.mean_ce.to_string(),
                row.std_ce.to_string(),
                row.mean_entropy.to_string(),
                row.trials.to_string(),
            ]);
            rec
        });
        write_table(out, &self.config_hash, &header, rows)
    }
}

pub(crate) fn write_table<W: Write>(
    mut out: W,
    hash: &str,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let io_err = |e| Error::Io {
        context: "writing CSV".into(),
        source: e,
    };
    writeln!(out, "# config-sha256: {hash}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for rec in rows {
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One trial of a cell: draws a dataset, clusters it and scores it against
/// the model labels. Returns `(CE, S)`.
pub fn run_trial(
    config: &ExperimentConfig,
    models: &[GenerativeModel],
    cell: &CellSettings,
    seed: u64,
) -> Result<(f64, f64)> {
    let spec = CorruptionSpec::new(cell.sigma, cell.p, derive_seed(seed, &[0]))?;
    let data = make_dataset(models, config.n_per_model, cell.m, &spec)?;
    let truth: Vec<usize> = data.iter().map(|o| o.label.expect("labeled dataset")).collect();
    let result = cluster_observations(config, &data, cell.p, derive_seed(seed, &[1]), None)?;
    Ok((
        clustering_error(&result.assignments, &truth)?,
        confusion_entropy(&result.assignments, &truth)?,
    ))
}

/// Runs every cell of the sweep grid `trials` times. Trial `t` of the cell
/// with index coordinates `(i, j)` uses the seed derived from
/// `(master_seed, i, j, t)`, so results do not depend on scheduling or on
/// which other cells exist.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let axes: Vec<Axis> = config.sweep.iter().map(|a| a.axis).collect();
    let cells = grid(config);
    let prepared = cells
        .iter()
        .map(|(_, coords)| {
            let cell = CellSettings::new(config, &axes, coords);
            let models = build_models(config, &cell.models)?;
            Ok((cell, models))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, t)| {
            let mut coords: Vec<u64> = cells[c].0.iter().map(|&i| i as u64).collect();
            coords.push(t as u64);
            let seed = derive_seed(config.master_seed, &coords);
            let (cell, models) = &prepared[c];
            log::debug!("cell {:?} trial {t}", cells[c].1);
            run_trial(config, models, cell, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = prepared
        .iter()
        .zip(&cells)
        .enumerate()
        .map(|(c, ((_, models), (_, coords)))| {
            let slice = &outcomes[c * config.trials..(c + 1) * config.trials];
            let ces: Vec<f64> = slice.iter().map(|o| o.0).collect();
            let ss: Vec<f64> = slice.iter().map(|o| o.1).collect();
            let (mean_ce, std_ce) = mean_std(&ces);
            let model_distance = if axes.contains(&Axis::Nu2) && models.len() >= 2 {
                Some(model_distance(&models[0], &models[1])?)
            } else {
                None
            };
            Ok(SweepRow {
                coords: coords.clone(),
                model_distance,
                mean_ce,
                std_ce,
                mean_entropy: mean_std(&ss).0,
                trials: config.trials,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepTable {
        axes,
        config_hash: config.hash(),
        rows,
    })
}

/// Clustering-condition report for every sweep cell, evaluated with the
/// window before bias correction.
pub fn theory_table(config: &ExperimentConfig) -> Result<Vec<(Vec<f64>, ConditionReport)>> {
    config.validate()?;
    let axes: Vec<Axis> = config.sweep.iter().map(|a| a.axis).collect();
    let g = config.window.build()?;
    grid(config)
        .into_iter()
        .map(|(_, coords)| {
            let cell = CellSettings::new(config, &axes, &coords);
            let models = build_models(config, &cell.models)?;
            let report = clustering_condition(&models, &g, cell.m, cell.sigma, cell.p)?;
            Ok((coords, report))
        })
        .collect()
}

pub fn write_theory_csv<W: Write>(
    config: &ExperimentConfig,
    table: &[(Vec<f64>, ConditionReport)],
    out: W,
) -> Result<()> {
    let mut header: Vec<String> = config.sweep.iter().map(|a| a.axis.to_string()).collect();
    header.extend(["min_model_distance", "rhs", "mu_max", "satisfied", "margin"].map(String::from));
    let rows = table.iter().map(|(coords, r)| {
        let mut rec: Vec<String> = coords.iter().map(ToString::to_string).collect();
        rec.extend([
            r.min_model_distance.to_string(),
            r.rhs.to_string(),
            r.mu_max.to_string(),
            r.satisfied.to_string(),
            r.margin.to_string(),
        ]);
        rec
    });
    write_table(out, &config.hash(), &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        format!(
            r#"
models = [{{ a = 0.6, nu = 0.7 }}, {{ a = 0.6, nu = 0.4 }}]
n_per_model = 6
M = 300
sigma = 0.2
window = {{ kind = "bartlett", width = 31 }}
algorithm = "nnpc"
q = 3
L = 2
master_seed = 11
{extra}"#
        )
        .parse()
        .unwrap()
    }

    #[test]
    fn grid_order() {
        let c = config("[[sweep]]\naxis = \"nu2\"\nvalues = [0.4, 0.5]\n[[sweep]]\naxis = \"sigma\"\nvalues = [0.0, 0.1, 0.2]\n");
        let g = grid(&c);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], (vec![0, 1], vec![0.4, 0.1]));
        assert_eq!(g[3], (vec![1, 0], vec![0.5, 0.0]));
    }

    #[test]
    fn sweep_is_deterministic() {
        let c = config("trials = 2\n[[sweep]]\naxis = \"nu2\"\nvalues = [0.4, 0.68]\n");
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config-sha256: "));
        assert_eq!(lines.next().unwrap(), "nu2,d,mean_ce,std_ce,mean_s,trials");
        assert_eq!(text.lines().count(), 4);
        assert!(a.rows[0].model_distance.unwrap() > a.rows[1].model_distance.unwrap());
    }

    #[test]
    fn every_algorithm_runs() {
        for alg in ["nnpc", "km", "kmit", "sl", "al", "cl", "tsc"] {
            let c = toml_with_algorithm(alg);
            let table = run_sweep(&c).unwrap();
            assert_eq!(table.rows.len(), 1);
            assert!(table.rows[0].mean_ce <= 0.5, "{alg}");
        }
    }

    fn toml_with_algorithm(alg: &str) -> ExperimentConfig {
        format!(
            r#"
models = [{{ a = 0.6, nu = 0.7 }}, {{ a = 0.6, nu = 0.3 }}]
n_per_model = 6
M = 400
sigma = 0.1
window = {{ kind = "bartlett", width = 31 }}
algorithm = "{alg}"
q = 3
L = 2
"#
        )
        .parse()
        .unwrap()
    }

    #[test]
    fn eigengap_count() {
        let mut c = toml_with_algorithm("nnpc");
        c.clusters = ClusterCount::Eigengap;
        c.eigengap_max = 5;
        c.n_per_model = 10;
        c.q = Some(5);
        let cell = CellSettings::new(&c, &[], &[]);
        let models = build_models(&c, &cell.models).unwrap();
        let data = make_dataset(&models, 10, 400, &CorruptionSpec::new(0.1, 1.0, 3).unwrap()).unwrap();
        let r = cluster_observations(&c, &data, 1.0, 0, None).unwrap();
        let ev = r.eigenvalues.clone().unwrap();
        assert_eq!(r.num_clusters(), 2, "{ev:?}");
        assert_eq!(ev.len(), 20);
    }

    #[test]
    fn theory_rows() {
        let c = config("[[sweep]]\naxis = \"M\"\nvalues = [400.0, 1600.0]\n");
        let t = theory_table(&c).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t[1].1.rhs < t[0].1.rhs);
        let mut buf = Vec::new();
        write_theory_csv(&c, &t, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("M,min_model_distance,rhs,mu_max,satisfied,margin"));
    }
}
