//! Complete-data generation and single-cell missingness induction under
//! MCAR and right-tailed MAR.
//!
//! Every incomplete row loses exactly one cell. Under MCAR each row is made
//! incomplete with probability `prop_missing_rows` and assigned a pattern by
//! weight. Under right-tailed MAR every row is first assigned a candidate
//! pattern by weight; within the group of rows sharing pattern `j`,
//! `k ~ Bin(n_j, prop)` rows are chosen by weighted sampling without
//! replacement, with weight `logistic(z̄)` where `z̄` is the mean of the
//! row's other variables after standardization. Rows with high values on
//! the observed variables are therefore more likely to lose `j`, and the
//! expected fraction of incomplete rows is unchanged.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::IncompleteData;
use crate::error::{Error, Result};
use crate::gaussian::GaussianParams;
use crate::samplers;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "MCAR", alias = "mcar")]
    Mcar,
    /// Right-tailed missing at random.
    #[serde(rename = "MARr", alias = "marr")]
    MarRight,
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcar" => Ok(Self::Mcar),
            "marr" | "mar-right" => Ok(Self::MarRight),
            _ => Err(Error::InvalidParameter(format!("unknown mechanism `{s}` (expected MCAR or MARr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmputationSpec {
    pub mechanism: Mechanism,
    pub prop_missing_rows: f64,
    /// `(column losing its value, weight)`
    pub patterns: Vec<(usize, f64)>,
}

impl AmputationSpec {
    /// Equal-weight single-column patterns over every column.
    pub fn one_cell_per_row(mechanism: Mechanism, prop_missing_rows: f64, p: usize) -> Result<Self> {
        let spec = Self {
            mechanism,
            prop_missing_rows,
            patterns: (0..p).map(|j| (j, 1.0 / p as f64)).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let prop = self.prop_missing_rows;
        if !(prop > 0.0 && prop < 1.0) {
            return Err(Error::InvalidParameter(format!("missing-row proportion must be in (0, 1), got {prop}")));
        }
        if self.patterns.is_empty() {
            return Err(Error::InvalidParameter("no missingness patterns given".into()));
        }
        let mut cols: Vec<usize> = self.patterns.iter().map(|p| p.0).collect();
        cols.sort_unstable();
        cols.dedup();
        if cols.len() != self.patterns.len() {
            return Err(Error::InvalidParameter("pattern columns must be distinct".into()));
        }
        if self.patterns.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
            return Err(Error::InvalidParameter("pattern weights must be positive".into()));
        }
        let total: f64 = self.patterns.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("pattern weights sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// The trivariate normal used throughout the simulation study, columns
/// `(x, y, z)`.
pub fn simulation_population() -> GaussianParams {
    GaussianParams::from_rows(&[1.0, 4.0, 9.0], &[&[4.0, 2.0, 2.0], &[2.0, 4.0, 2.0], &[2.0, 2.0, 9.0]])
        .expect("population covariance is positive definite")
}

pub const SIMULATION_COLUMNS: [&str; 3] = ["x", "y", "z"];

/// `n` iid rows from `params`.
pub fn generate_complete<R: Rng + ?Sized>(rng: &mut R, n: usize, params: &GaussianParams) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one case".into()));
    }
    let mut out = DMatrix::zeros(n, params.dim());
    for i in 0..n {
        out.row_mut(i).copy_from(&samplers::draw_mvn(rng, params).transpose());
    }
    Ok(out)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-row mean of the standardized columns other than `j`.
fn standardized_rest_mean(data: &DMatrix<f64>, j: usize) -> DVector<f64> {
    let (n, p) = data.shape();
    let mut out = DVector::zeros(n);
    let rest: Vec<usize> = (0..p).filter(|&k| k != j).collect();
    for &k in &rest {
        let col = data.column(k);
        let mean = col.mean();
        let sd = if n > 1 { col.variance().sqrt() * (n as f64 / (n as f64 - 1.0)).sqrt() } else { 0.0 };
        for i in 0..n {
            out[i] += if sd > 0.0 { (data[(i, k)] - mean) / sd } else { 0.0 };
        }
    }
    out / rest.len() as f64
}

/// Deletes cells of `data` according to `spec`.
pub fn ampute<R: Rng + ?Sized>(
    rng: &mut R,
    data: &DMatrix<f64>,
    column_names: Vec<String>,
    spec: &AmputationSpec,
) -> Result<IncompleteData> {
    spec.validate()?;
    let (n, p) = data.shape();
    if let Some(&(j, _)) = spec.patterns.iter().find(|pat| pat.0 >= p) {
        return Err(Error::IndexOutOfRange { index: j, dim: p });
    }
    if p < 2 {
        return Err(Error::InvalidParameter("amputation needs at least two columns".into()));
    }
    let choose = WeightedIndex::new(spec.patterns.iter().map(|p| p.1))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let prop = spec.prop_missing_rows;
    let mut mask = DMatrix::from_element(n, p, false);
    match spec.mechanism {
        Mechanism::Mcar => {
            for i in 0..n {
                if rng.random::<f64>() < prop {
                    mask[(i, spec.patterns[choose.sample(rng)].0)] = true;
                }
            }
        }
        Mechanism::MarRight => {
            let assigned: Vec<usize> = (0..n).map(|_| choose.sample(rng)).collect();
            for (g, &(j, _)) in spec.patterns.iter().enumerate() {
                let rows: Vec<usize> = (0..n).filter(|&i| assigned[i] == g).collect();
                if rows.is_empty() {
                    continue;
                }
                let k = rand_distr::Binomial::new(rows.len() as u64, prop)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sample(rng) as usize;
                let score = standardized_rest_mean(data, j);
                // weighted sampling without replacement: keep the k largest u^(1/w)
                let mut keyed: Vec<(f64, usize)> = rows
                    .iter()
                    .map(|&i| {
                        let w = logistic(score[i]);
                        (rng.random::<f64>().ln() / w, i)
                    })
                    .collect();
                keyed.sort_by(|a, b| b.0.total_cmp(&a.0));
                for &(_, i) in keyed.iter().take(k) {
                    mask[(i, j)] = true;
                }
            }
        }
    }
    IncompleteData::new(data.clone(), mask, column_names)
}
