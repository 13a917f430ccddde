//! Joint-model multiple imputation: a data-augmentation Gibbs sampler that
//! alternates `θ | Y_complete` (normal–inverse-Wishart conjugacy) with
//! `Y_mis | Y_obs, θ` (conditional normal per missingness pattern).

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::data::IncompleteData;
use crate::error::{Error, Result};
use crate::gaussian::{ConditionalGaussian, GaussianParams};
use crate::linalg;
use crate::prior::{NiwPrior, ScaleConvention};
use crate::samplers;

/// Current parameter draw and completed dataset of one chain.
#[derive(Debug, Clone)]
pub struct JmState {
    pub params: GaussianParams,
    pub completed: DMatrix<f64>,
    pub iteration: usize,
}

impl JmState {
    /// Fills missing cells from each column's observed values, then draws
    /// an initial `θ` from the posterior given that fill.
    pub fn initialize<R: Rng + ?Sized>(data: &IncompleteData, prior: &NiwPrior, rng: &mut R) -> Result<Self> {
        let completed = data.initialize(rng)?;
        let params = draw_niw(rng, &niw_posterior_update(prior, &completed)?)?;
        Ok(Self { params, completed, iteration: 0 })
    }
}

/// Conjugate update of the joint prior with complete rows `data`.
///
/// The result is expressed in the same [`ScaleConvention`] as `prior`.
pub fn niw_posterior_update(prior: &NiwPrior, data: &DMatrix<f64>) -> Result<NiwPrior> {
    let p = prior.dim();
    if data.ncols() != p {
        return Err(Error::Dimension(format!("data has {} columns, prior covers {p}", data.ncols())));
    }
    let n = data.nrows();
    if n == 0 {
        return Ok(prior.clone());
    }
    let nf = n as f64;
    let ybar = DVector::from_fn(p, |j, _| data.column(j).mean());
    let centered = DMatrix::from_fn(n, p, |i, j| data[(i, j)] - ybar[j]);
    let scatter = centered.transpose() * &centered;
    let tau = prior.tau();
    let d = &ybar - prior.mu0();
    let shrink = tau * nf / (tau + nf);
    let s = prior.trace_scale() + scatter + &d * d.transpose() * shrink;
    let s = (&s + s.transpose()) * 0.5;
    let lambda = match prior.convention() {
        ScaleConvention::Covariance => s,
        ScaleConvention::Precision => {
            let inv = linalg::cholesky(&s, "posterior scale")?.inverse();
            (&inv + inv.transpose()) * 0.5
        }
    };
    let mu = (prior.mu0() * tau + &ybar * nf) / (tau + nf);
    NiwPrior::new(mu, tau + nf, prior.m() + nf, lambda, prior.convention())
}

/// `Σ ~ W⁻¹(m, S)`, then `μ | Σ ~ N(μ0, Σ/τ)`.
pub fn draw_niw<R: Rng + ?Sized>(rng: &mut R, prior: &NiwPrior) -> Result<GaussianParams> {
    let sigma = samplers::draw_inv_wishart(rng, prior.iw_df(), &prior.trace_scale())?;
    let ch = linalg::cholesky(&(&sigma / prior.tau()), "μ covariance")?;
    let mu = samplers::draw_mvn_chol(rng, prior.mu0(), &ch);
    GaussianParams::new(mu, sigma)
}

/// Redraws every missing cell of `completed` from its conditional law
/// under `params`, one factorization per missingness pattern.
pub fn impute_missing<R: Rng + ?Sized>(
    rng: &mut R,
    data: &IncompleteData,
    params: &GaussianParams,
    completed: &mut DMatrix<f64>,
) -> Result<()> {
    for pattern in data.patterns() {
        let cond = ConditionalGaussian::new(params, &pattern.observed)?;
        for &i in &pattern.rows {
            let obs = DVector::from_iterator(
                pattern.observed.len(),
                pattern.observed.iter().map(|&j| completed[(i, j)]),
            );
            let draw = samplers::draw_mvn_chol(rng, &cond.mean_given(&obs), cond.cov_chol());
            for (k, &j) in pattern.missing.iter().enumerate() {
                completed[(i, j)] = draw[k];
            }
        }
    }
    Ok(())
}

/// One data-augmentation sweep: `θ` from the complete-data posterior, then
/// the missing cells given `θ`.
pub fn jm_gibbs_step<R: Rng + ?Sized>(
    state: JmState,
    data: &IncompleteData,
    prior: &NiwPrior,
    rng: &mut R,
) -> Result<JmState> {
    let JmState { mut completed, iteration, .. } = state;
    let params = draw_niw(rng, &niw_posterior_update(prior, &completed)?)?;
    impute_missing(rng, data, &params, &mut completed)?;
    Ok(JmState { params, completed, iteration: iteration + 1 })
}

/// Runs `n_burn` sweeps, then keeps `m` completed datasets `thin` sweeps apart.
pub fn jm_impute<R: Rng + ?Sized>(
    data: &IncompleteData,
    prior: &NiwPrior,
    rng: &mut R,
    n_burn: usize,
    m: usize,
    thin: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if m == 0 || thin == 0 {
        return Err(Error::InvalidParameter("m and thin must be at least 1".into()));
    }
    let mut state = JmState::initialize(data, prior, rng)?;
    for _ in 0..n_burn {
        state = jm_gibbs_step(state, data, prior, rng)?;
    }
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        for _ in 0..thin {
            state = jm_gibbs_step(state, data, prior, rng)?;
        }
        out.push(state.completed.clone());
    }
    Ok(out)
}
