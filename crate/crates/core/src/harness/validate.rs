use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;

use super::sweep::write_table;
use crate::error::Result;
use crate::genmodel::{ar2_model, DEFAULT_MAXLAG, FINE_GRID};
use crate::seed::{derive_seed, rng_for};
use crate::theory::{
    inner_product_bound_for_models, inner_product_mc_probability, quadform_mc_tail_many, quadform_tail_bound, spectral_norm,
};

/// One Monte-Carlo estimate set against its analytic bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub suite: &'static str,
    pub case: String,
    pub empirical: f64,
    pub bound: f64,
    /// Binomial allowance granted to the estimate.
    pub slack: f64,
    pub holds: bool,
}

/// Symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, &[]);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
    (&a + a.transpose()) * 0.5
}

pub const QUADFORM_SIZE: usize = 50;
pub const QUADFORM_MATRICES: usize = 20;
pub const QUADFORM_PROBABILITIES: [f64; 3] = [0.3, 0.5, 0.9];
pub const QUADFORM_MULTIPLIERS: [f64; 3] = [2.0, 3.0, 4.0];

/// Tail of Boolean quadratic forms: random symmetric `H`, thresholds
/// `t = c √M ‖H‖`. An estimate passes if it stays below the bound plus three
/// binomial standard deviations.
pub fn quadform_suite(trials: usize, seed: u64) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for k in 0..QUADFORM_MATRICES {
        let h = random_symmetric(QUADFORM_SIZE, derive_seed(seed, &[k as u64]));
        let norm = spectral_norm(&h);
        let scale = (QUADFORM_SIZE as f64).sqrt() * norm;
        let thresholds: Vec<f64> = QUADFORM_MULTIPLIERS.iter().map(|c| c * scale).collect();
        for (pi, &p) in QUADFORM_PROBABILITIES.iter().enumerate() {
            let mc = quadform_mc_tail_many(&h, p, &thresholds, trials, derive_seed(seed, &[k as u64, pi as u64]))?;
            for ((&c, &t), empirical) in QUADFORM_MULTIPLIERS.iter().zip(&thresholds).zip(mc) {
                let bound = quadform_tail_bound(&h, p, t)?;
                let b = bound.min(1.0);
                let slack = 3.0 * (b * (1.0 - b) / trials as f64).sqrt();
                out.push(BoundCheck {
                    suite: "quadform_tail",
                    case: format!("H{k} p={p} c={c}"),
                    empirical,
                    bound,
                    slack,
                    holds: empirical <= bound + slack,
                });
            }
        }
    }
    Ok(out)
}

pub const INNER_PRODUCT_LEN: usize = 64;
pub const INNER_PRODUCT_SIGMAS: [f64; 2] = [0.0, 0.5];

/// Inner-product dominance between AR(2) resonators at `0.7π` and `0.4π`
/// (radius 0.6). The estimate must reach the lower bound.
pub fn inner_product_suite(trials: usize, seed: u64) -> Result<Vec<BoundCheck>> {
    let k = ar2_model(0.6, 0.7 * PI, FINE_GRID, DEFAULT_MAXLAG)?;
    let l = ar2_model(0.6, 0.4 * PI, FINE_GRID, DEFAULT_MAXLAG)?;
    INNER_PRODUCT_SIGMAS
        .iter()
        .enumerate()
        .map(|(i, &sigma)| {
            let bound = inner_product_bound_for_models(&k, &l, sigma, INNER_PRODUCT_LEN)?;
            let empirical =
                inner_product_mc_probability(&k, &l, sigma, INNER_PRODUCT_LEN, trials, derive_seed(seed, &[i as u64]))?;
            Ok(BoundCheck {
                suite: "inner_product_dominance",
                case: format!("sigma={sigma} M={INNER_PRODUCT_LEN}"),
                empirical,
                bound,
                slack: 0.0,
                holds: empirical >= bound,
            })
        })
        .collect()
}

pub fn write_checks_csv<W: Write>(checks: &[BoundCheck], hash: &str, out: W) -> Result<()> {
    let header = ["suite", "case", "empirical", "bound", "slack", "holds"].map(String::from);
    let rows = checks.iter().map(|c| {
        vec![
            c.suite.to_string(),
            c.case.clone(),
            c.empirical.to_string(),
            c.bound.to_string(),
            c.slack.to_string(),
            c.holds.to_string(),
        ]
    });
    write_table(out, hash, &header, rows)
}
