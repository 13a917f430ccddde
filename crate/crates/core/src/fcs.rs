//! Fully conditional specification: each incomplete column is updated in
//! turn from a Bayesian linear regression on all other columns with a
//! normal–inverse-gamma prior.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::data::IncompleteData;
use crate::error::{Error, Result};
use crate::gaussian::ConditionalRegression;
use crate::linalg::{self, Chol};
use crate::prior::NigPrior;
use crate::samplers::{self, RngSeed};

/// Order in which incomplete columns are updated within a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitSequence {
    order: Vec<usize>,
}

impl VisitSequence {
    /// `order` must be a permutation of the columns that contain missing cells.
    pub fn new(order: Vec<usize>, data: &IncompleteData) -> Result<Self> {
        let mut sorted = order.clone();
        sorted.sort_unstable();
        if sorted != data.incomplete_columns() {
            return Err(Error::InvalidParameter(format!(
                "visit order {order:?} is not a permutation of the incomplete columns {:?}",
                data.incomplete_columns()
            )));
        }
        Ok(Self { order })
    }

    /// Resolves names, dropping columns that happen to be fully observed.
    pub fn from_names<S: AsRef<str>>(names: &[S], data: &IncompleteData) -> Result<Self> {
        let incomplete = data.incomplete_columns();
        let mut order = Vec::with_capacity(names.len());
        for name in names {
            let j = data.column_index(name.as_ref())?;
            if order.contains(&j) {
                return Err(Error::InvalidParameter(format!("column `{}` visited twice", name.as_ref())));
            }
            if incomplete.contains(&j) {
                order.push(j);
            }
        }
        Self::new(order, data)
    }

    /// Incomplete columns in column order.
    pub fn natural(data: &IncompleteData) -> Self {
        Self { order: data.incomplete_columns() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Posterior of `(c, σ²)` for one regression: `σ² ~ W⁻¹(sigma_df, sigma_scale)`
/// (scalar, sampler convention) and `c | σ² ~ N(coef_mean, σ² P⁻¹)` with
/// `P = L Lᵀ` stored as its Cholesky factor.
#[derive(Debug, Clone)]
pub struct NigPosterior {
    pub coef_mean: DVector<f64>,
    pub coef_precision_chol: Chol,
    pub sigma_df: f64,
    pub sigma_scale: f64,
}

/// Conjugate update; `x` already carries the intercept column.
pub fn nig_posterior_update(prior: &NigPrior, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<NigPosterior> {
    let q = prior.n_coef();
    if x.ncols() != q || x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "design is {}x{} with {} responses; prior has {q} coefficients",
            x.nrows(),
            x.ncols(),
            y.len()
        )));
    }
    let v_chol = linalg::cholesky(&prior.coef_scale_given_sigma, "coefficient prior scale")?;
    let p0 = v_chol.inverse();
    let p0 = (&p0 + p0.transpose()) * 0.5;
    let xt = x.transpose();
    let prec = linalg::symmetrized(&(&p0 + &xt * x))?;
    let column = prior.j;
    let chol = prec
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateDesign { column, reason: "posterior precision is not positive definite".into() })?;
    let mean = chol.solve(&(&p0 * &prior.coef_mean + &xt * y));
    let resid = y - x * &mean;
    let shift = &mean - &prior.coef_mean;
    let scale = prior.sigma_trace_scale() + resid.norm_squared() + shift.dot(&(&p0 * &shift));
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegenerateDesign { column, reason: format!("posterior σ² scale is {scale}") });
    }
    Ok(NigPosterior {
        coef_mean: mean,
        coef_precision_chol: chol,
        sigma_df: prior.sigma_df + y.len() as f64,
        sigma_scale: scale,
    })
}

/// `σ² ~ IG(df/2, scale/2)`, then `c = mean + σ L⁻ᵀ z`.
pub fn draw_regression<R: Rng + ?Sized>(post: &NigPosterior, rng: &mut R) -> Result<ConditionalRegression> {
    let sigma2 = samplers::draw_inv_gamma(rng, post.sigma_df / 2.0, post.sigma_scale / 2.0)?;
    let z = samplers::standard_normal_vec(rng, post.coef_mean.len());
    let lt = post.coef_precision_chol.l().transpose();
    let dev = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::Degenerate("singular posterior precision factor".into()))?;
    let c = &post.coef_mean + dev * sigma2.sqrt();
    Ok(ConditionalRegression { alpha: c[0], beta: c.rows(1, c.len() - 1).into_owned(), sigma2 })
}

/// `[1, y_{-j}]` for the given rows of `completed`.
pub fn design_matrix(completed: &DMatrix<f64>, j: usize, rows: &[usize]) -> DMatrix<f64> {
    let rest = linalg::others(completed.ncols(), j);
    DMatrix::from_fn(rows.len(), rest.len() + 1, |r, c| {
        if c == 0 { 1.0 } else { completed[(rows[r], rest[c - 1])] }
    })
}

/// Replaces the missing cells of column `j` by `α + βᵀ y_{-j} + ε`.
pub fn impute_column<R: Rng + ?Sized>(
    completed: &mut DMatrix<f64>,
    data: &IncompleteData,
    j: usize,
    reg: &ConditionalRegression,
    rng: &mut R,
) -> Result<()> {
    let p = completed.ncols();
    if reg.beta.len() + 1 != p {
        return Err(Error::Dimension(format!("regression has {} slopes for {p} columns", reg.beta.len())));
    }
    let rest = linalg::others(p, j);
    let sd = reg.sigma2.max(0.0).sqrt();
    for i in data.missing_rows(j) {
        let pred = reg.alpha + rest.iter().zip(reg.beta.iter()).map(|(&k, b)| b * completed[(i, k)]).sum::<f64>();
        let eps: f64 = rng.sample(StandardNormal);
        completed[(i, j)] = pred + sd * eps;
    }
    Ok(())
}

/// Fit on rows where `j` is observed, draw parameters, impute `j`.
pub fn update_column<R: Rng + ?Sized>(
    completed: &mut DMatrix<f64>,
    data: &IncompleteData,
    j: usize,
    prior: &NigPrior,
    rng: &mut R,
) -> Result<ConditionalRegression> {
    let rows = data.observed_rows(j);
    let x = design_matrix(completed, j, &rows);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| completed[(i, j)]));
    let reg = draw_regression(&nig_posterior_update(prior, &x, &y)?, rng)?;
    impute_column(completed, data, j, &reg, rng)?;
    Ok(reg)
}

/// What a trace hook sees after one column update.
#[derive(Debug, Clone, Copy)]
pub struct TraceEvent<'a> {
    pub chain: u64,
    /// Sweep index, starting at 0.
    pub iteration: usize,
    /// Position of the column within the visit sequence.
    pub position: usize,
    pub column: usize,
    pub regression: &'a ConditionalRegression,
    pub completed: &'a DMatrix<f64>,
}

/// Read-only observer of an FCS chain; may be shared across chains.
pub trait FcsTraceHook: Sync {
    fn on_update(&self, event: &TraceEvent<'_>);
}

impl<F: Fn(&TraceEvent<'_>) + Sync> FcsTraceHook for F {
    fn on_update(&self, event: &TraceEvent<'_>) {
        self(event)
    }
}

fn prior_for(priors: &[NigPrior], j: usize, p: usize) -> Result<&NigPrior> {
    let prior = priors
        .iter()
        .find(|pr| pr.j == j)
        .ok_or_else(|| Error::InvalidParameter(format!("no prior supplied for column {j}")))?;
    if prior.n_coef() != p {
        return Err(Error::Dimension(format!(
            "prior for column {j} has {} coefficients, expected {p}",
            prior.n_coef()
        )));
    }
    Ok(prior)
}

/// Initializes from observed marginals and runs `n_iter` sweeps.
#[allow(clippy::too_many_arguments)]
pub fn fcs_iterate<R: Rng + ?Sized>(
    data: &IncompleteData,
    priors: &[NigPrior],
    visit: &VisitSequence,
    rng: &mut R,
    n_iter: usize,
    chain: u64,
    hook: Option<&dyn FcsTraceHook>,
) -> Result<DMatrix<f64>> {
    let p = data.n_cols();
    let plan: Vec<(usize, &NigPrior)> = visit
        .order()
        .iter()
        .map(|&j| prior_for(priors, j, p).map(|pr| (j, pr)))
        .collect::<Result<_>>()?;
    let mut completed = data.initialize(rng)?;
    for iteration in 0..n_iter {
        for (position, &(column, prior)) in plan.iter().enumerate() {
            let regression = update_column(&mut completed, data, column, prior, rng)?;
            if let Some(h) = hook {
                h.on_update(&TraceEvent { chain, iteration, position, column, regression: &regression, completed: &completed });
            }
        }
    }
    Ok(completed)
}

/// `m` independent chains of `n_burn` sweeps each; chain `c` draws from
/// stream `(replication, c)` of `seed` and contributes its final dataset.
pub fn fcs_impute(
    data: &IncompleteData,
    priors: &[NigPrior],
    visit: &VisitSequence,
    seed: RngSeed,
    replication: u64,
    n_burn: usize,
    m: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    (0..m as u64)
        .into_par_iter()
        .map(|c| fcs_iterate(data, priors, visit, &mut seed.stream(replication, c), n_burn, c, None))
        .collect()
}
