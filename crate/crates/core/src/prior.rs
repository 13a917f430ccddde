//! Conversion between a joint normal–inverse-Wishart prior on `(μ, Σ)` and
//! the per-variable normal–inverse-gamma priors of the conditional
//! regressions `y_j = α_j + β_jᵀ y_{-j} + e`.
//!
//! # Conventions
//!
//! The joint prior is `μ | Σ ~ N(μ0, Σ/τ)` with unnormalized density
//!
//! ```text
//! |Σ|^{-(m+p+2)/2} exp{-½ tr(S Σ⁻¹)} exp{-τ/2 (μ-μ0)ᵀ Σ⁻¹ (μ-μ0)}
//! ```
//!
//! where the trace matrix `S` depends on [`ScaleConvention`]: `S = Λ⁻¹`
//! (the default, `Λ` scales the Wishart law of `Σ⁻¹`) or `S = Λ`. In the
//! sampler convention of [`crate::samplers`] this is `Σ ~ W⁻¹(m, S)`: the
//! extra `|Σ|^{-1/2}` comes from the normal prior on `μ`, so the inverse-Wishart
//! degrees of freedom equal `m` exactly.
//!
//! Splitting `Σ` around variable `j` into `(σ², β, Σ_{-j})` with
//! `ξ = Σ_{-j} β` and `ω = σ² + βᵀ Σ_{-j} β` (Jacobian `|Σ_{-j}|`) gives, with
//! `S` partitioned as `[s_jj, s_ψᵀ; s_ψ, S_{-j}]`:
//!
//! * `σ² ~ W⁻¹(m, s_jj - s_ψᵀ S_{-j}⁻¹ s_ψ)`
//! * `β | σ² ~ N(S_{-j}⁻¹ s_ψ, σ² S_{-j}⁻¹)`
//! * `α | β, σ² ~ N(μ0_j - βᵀ μ0_{-j}, σ²/τ)`
//! * `(μ_{-j}, Σ_{-j})` normal–inverse-Wishart with `m - 1`, scale `S_{-j}`,
//!   independent of the above.
//!
//! Under the default convention `S_{-j}⁻¹ = Λ_{-j} - ψψᵀ/Λ_jj`,
//! `S_{-j}⁻¹ s_ψ = -ψ/Λ_jj` and the residual scale is `1/Λ_jj`, so nothing
//! beyond a division by `Λ_jj` is needed. The marginal df of the coefficients
//! after integrating out `σ²` is `m` (not `2m - p + 1`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, ConditionalRegression, GaussianParams};
use crate::linalg::{self, clean_zero};

/// How the scale matrix `Λ` enters the inverse-Wishart kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleConvention {
    /// `exp(-½ tr(Λ⁻¹ Σ⁻¹))`, i.e. `Σ⁻¹ ~ Wishart(m, Λ)`.
    #[default]
    Precision,
    /// `exp(-½ tr(Λ Σ⁻¹))`.
    Covariance,
}

/// Joint normal–inverse-Wishart hyperparameters `(μ0, τ, m, Λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NiwPriorDoc", into = "NiwPriorDoc")]
pub struct NiwPrior {
    mu0: DVector<f64>,
    tau: f64,
    m: f64,
    lambda: DMatrix<f64>,
    convention: ScaleConvention,
}

/// `NiwPrior` split around variable `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NiwPartition {
    pub j: usize,
    pub mu0_j: f64,
    pub mu0_rest: DVector<f64>,
    pub lambda_j: f64,
    pub psi_j: DVector<f64>,
    pub lambda_rest: DMatrix<f64>,
    /// `Λ_j - ψ_jᵀ Λ_{-j}⁻¹ ψ_j`.
    pub lambda_small_j: f64,
}

impl NiwPrior {
    pub fn new(
        mu0: DVector<f64>,
        tau: f64,
        m: f64,
        lambda: DMatrix<f64>,
        convention: ScaleConvention,
    ) -> Result<Self> {
        let p = mu0.len();
        if p == 0 {
            return Err(Error::Dimension("prior must cover at least one variable".into()));
        }
        if lambda.nrows() != p || lambda.ncols() != p {
            return Err(Error::Dimension(format!(
                "Λ is {}x{} but μ0 has length {p}",
                lambda.nrows(),
                lambda.ncols()
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("τ must be positive, got {tau}")));
        }
        if !(m >= p as f64 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("m must be at least p = {p}, got {m}")));
        }
        if mu0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("μ0 has non-finite entries".into()));
        }
        let lambda = linalg::symmetrized(&lambda)?;
        linalg::cholesky(&lambda, "Λ")?;
        Ok(Self { mu0, tau, m, lambda, convention })
    }

    /// `μ0 = 0`, `τ = 1`, `m = p`, `Λ = 60·I`, default convention.
    pub fn weakly_informative(p: usize) -> Self {
        Self::new(
            DVector::zeros(p),
            1.0,
            p as f64,
            DMatrix::identity(p, p) * 60.0,
            ScaleConvention::Precision,
        )
        .expect("valid by construction")
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn convention(&self) -> ScaleConvention {
        self.convention
    }

    /// Degrees of freedom of `Σ` in the sampler's inverse-Wishart convention.
    pub fn iw_df(&self) -> f64 {
        self.m
    }

    /// The matrix `S` of `tr(S Σ⁻¹)`.
    pub fn trace_scale(&self) -> DMatrix<f64> {
        match self.convention {
            ScaleConvention::Covariance => self.lambda.clone(),
            ScaleConvention::Precision => {
                let ch = linalg::cholesky(&self.lambda, "Λ").expect("validated");
                let inv = ch.inverse();
                (&inv + inv.transpose()) * 0.5
            }
        }
    }

    pub fn partition(&self, j: usize) -> Result<NiwPartition> {
        let p = self.dim();
        if j >= p {
            return Err(Error::IndexOutOfRange { index: j, dim: p });
        }
        if p < 2 {
            return Err(Error::Dimension("partition needs at least two variables".into()));
        }
        let rest = linalg::others(p, j);
        let lambda_rest = linalg::select_mat(&self.lambda, &rest, &rest);
        let psi_j = linalg::select_mat(&self.lambda, &rest, &[j]).column(0).into_owned();
        let ch = linalg::cholesky(&lambda_rest, "Λ_{-j}")?;
        let lambda_j = self.lambda[(j, j)];
        let lambda_small_j = lambda_j - linalg::inv_quad(&ch, &psi_j);
        Ok(NiwPartition {
            j,
            mu0_j: self.mu0[j],
            mu0_rest: linalg::select_vec(&self.mu0, &rest),
            lambda_j,
            psi_j,
            lambda_rest,
            lambda_small_j,
        })
    }
}

impl NiwPartition {
    pub fn reassemble_lambda(&self) -> DMatrix<f64> {
        let p = self.mu0_rest.len() + 1;
        let rest = linalg::others(p, self.j);
        let mut l = DMatrix::zeros(p, p);
        l[(self.j, self.j)] = self.lambda_j;
        for (a, &ra) in rest.iter().enumerate() {
            l[(ra, self.j)] = self.psi_j[a];
            l[(self.j, ra)] = self.psi_j[a];
            for (b, &rb) in rest.iter().enumerate() {
                l[(ra, rb)] = self.lambda_rest[(a, b)];
            }
        }
        l
    }
}

/// Normal–inverse-gamma prior on the regression of variable `j`:
/// `σ² ~ W⁻¹(sigma_df, sigma_scale)` (scalar, read in `convention`) and
/// `(α, β) | σ² ~ N(coef_mean, σ² · coef_scale_given_sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NigPriorDoc", into = "NigPriorDoc")]
pub struct NigPrior {
    pub j: usize,
    pub sigma_df: f64,
    pub sigma_scale: f64,
    pub convention: ScaleConvention,
    pub coef_mean: DVector<f64>,
    pub coef_scale_given_sigma: DMatrix<f64>,
}

impl NigPrior {
    pub fn new(
        j: usize,
        sigma_df: f64,
        sigma_scale: f64,
        convention: ScaleConvention,
        coef_mean: DVector<f64>,
        coef_scale_given_sigma: DMatrix<f64>,
    ) -> Result<Self> {
        if !(sigma_df > 0.0 && sigma_df.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ df must be positive, got {sigma_df}")));
        }
        if !(sigma_scale > 0.0 && sigma_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ scale must be positive, got {sigma_scale}")));
        }
        let q = coef_mean.len();
        if q == 0 || coef_scale_given_sigma.nrows() != q || coef_scale_given_sigma.ncols() != q {
            return Err(Error::Dimension("coefficient mean and scale disagree".into()));
        }
        let v = linalg::symmetrized(&coef_scale_given_sigma)?;
        linalg::cholesky(&v, "coefficient scale")?;
        Ok(Self { j, sigma_df, sigma_scale, convention, coef_mean, coef_scale_given_sigma: v })
    }

    /// Number of regression coefficients including the intercept.
    pub fn n_coef(&self) -> usize {
        self.coef_mean.len()
    }

    /// Scale of σ² in the sampler convention (`tr(s σ⁻²)`).
    pub fn sigma_trace_scale(&self) -> f64 {
        match self.convention {
            ScaleConvention::Covariance => self.sigma_scale,
            ScaleConvention::Precision => 1.0 / self.sigma_scale,
        }
    }

    /// Inverse-gamma shape of σ².
    pub fn ig_shape(&self) -> f64 {
        self.sigma_df / 2.0
    }

    /// Inverse-gamma scale of σ².
    pub fn ig_scale(&self) -> f64 {
        self.sigma_trace_scale() / 2.0
    }

    /// Coefficient covariance with σ² set to its scale hyperparameter.
    pub fn coef_cov_at_sigma_scale(&self) -> DMatrix<f64> {
        (&self.coef_scale_given_sigma * self.sigma_scale).map(clean_zero)
    }
}

/// Splits a joint prior into the prior of the regression of `j` on the rest
/// and the `(p-1)`-variable prior of the rest.
pub fn decompose(prior: &NiwPrior, j: usize) -> Result<(NigPrior, NiwPrior)> {
    let part = prior.partition(j)?;
    let a = part.lambda_j;
    // b: prior mean of β; cov_b: its covariance per unit σ²;
    // scale: σ² scale in the prior's convention; rest_lambda: Λ of the margin.
    let (b, cov_b, scale, rest_lambda) = match prior.convention {
        ScaleConvention::Precision => {
            let b = part.psi_j.map(|v| clean_zero(-v / a));
            let cond = &part.lambda_rest - &part.psi_j * part.psi_j.transpose() / a;
            let cond = linalg::symmetrized(&cond)?;
            (b, cond.clone(), a, cond)
        }
        ScaleConvention::Covariance => {
            let ch = linalg::cholesky(&part.lambda_rest, "Λ_{-j}")?;
            let b = ch.solve(&part.psi_j);
            let inv = ch.inverse();
            let inv = (&inv + inv.transpose()) * 0.5;
            (b, inv, part.lambda_small_j, part.lambda_rest.clone())
        }
    };
    if !(scale > 0.0) {
        return Err(Error::NotPositiveDefinite(format!("Λ (residual scale of variable {j})")));
    }

    let q = b.len() + 1;
    let shift = &cov_b * &part.mu0_rest;
    let mut coef_mean = DVector::zeros(q);
    coef_mean[0] = clean_zero(part.mu0_j - b.dot(&part.mu0_rest));
    coef_mean.rows_mut(1, q - 1).copy_from(&b);
    let mut v = DMatrix::zeros(q, q);
    v[(0, 0)] = 1.0 / prior.tau + part.mu0_rest.dot(&shift);
    for k in 0..q - 1 {
        v[(0, k + 1)] = clean_zero(-shift[k]);
        v[(k + 1, 0)] = clean_zero(-shift[k]);
    }
    v.view_mut((1, 1), (q - 1, q - 1)).copy_from(&cov_b);

    let cond = NigPrior::new(j, prior.m, scale, prior.convention, coef_mean, v)?;
    let marginal = NiwPrior::new(
        part.mu0_rest.clone(),
        prior.tau,
        prior.m - 1.0,
        rest_lambda,
        prior.convention,
    )?;
    Ok((cond, marginal))
}

/// Per-column priors for every variable.
pub fn decompose_all(prior: &NiwPrior) -> Result<Vec<NigPrior>> {
    (0..prior.dim()).map(|j| decompose(prior, j).map(|(c, _)| c)).collect()
}

/// Unnormalized log density of the joint prior at `(μ, Σ)`.
pub fn log_niw_density(prior: &NiwPrior, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let p = prior.dim();
    if mu.len() != p || sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::Dimension("point does not match prior dimension".into()));
    }
    let sigma = linalg::symmetrized(sigma)?;
    let ch = linalg::cholesky(&sigma, "Σ")?;
    let sigma_inv = ch.inverse();
    let r = mu - prior.mu0();
    Ok(-((prior.m + p as f64 + 2.0) / 2.0) * linalg::log_det(&ch)
        - 0.5 * linalg::trace_of_product(&prior.trace_scale(), &sigma_inv)
        - 0.5 * prior.tau * linalg::inv_quad(&ch, &r))
}

/// Unnormalized log density of the regression prior at `theta`.
pub fn log_nig_density(cond: &NigPrior, theta: &ConditionalRegression) -> Result<f64> {
    let c = theta.coefficients();
    if c.len() != cond.n_coef() {
        return Err(Error::Dimension("regression does not match prior dimension".into()));
    }
    if !(theta.sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("σ² must be positive, got {}", theta.sigma2)));
    }
    let ch = linalg::cholesky(&cond.coef_scale_given_sigma, "coefficient scale")?;
    let s2 = theta.sigma2;
    let q = c.len() as f64;
    Ok(-((cond.sigma_df + 2.0) / 2.0) * s2.ln() - cond.sigma_trace_scale() / (2.0 * s2)
        - (q / 2.0) * s2.ln()
        - linalg::inv_quad(&ch, &(c - &cond.coef_mean)) / (2.0 * s2))
}

/// `log π(θ_j) + log π(θ_{-j})`.
///
/// The margin's `m - 1` exponent already carries the `|Σ_{-j}|` factor of the
/// reparameterization, since `-(m+p)/2 = -(m+p+2)/2 + 1`.
pub fn log_factored_density(
    cond: &NigPrior,
    marg: &NiwPrior,
    theta_j: &ConditionalRegression,
    theta_rest: &GaussianParams,
) -> Result<f64> {
    Ok(log_nig_density(cond, theta_j)? + log_niw_density(marg, theta_rest.mu(), theta_rest.sigma())?)
}

/// Joint prior density expressed in the regression parameterization
/// `(α_j, β_j, σ²_j, μ_{-j}, Σ_{-j})`, including the Jacobian `|Σ_{-j}|`.
pub fn log_reparameterized_density(
    prior: &NiwPrior,
    j: usize,
    theta_j: &ConditionalRegression,
    theta_rest: &GaussianParams,
) -> Result<f64> {
    let joint = gaussian::from_regression(j, theta_j, theta_rest)?;
    Ok(log_niw_density(prior, joint.mu(), joint.sigma())? + theta_rest.log_det())
}

/// Location, scale and df of the multivariate t obtained by integrating σ²
/// out of the regression prior.
pub fn marginal_t_params(cond: &NigPrior) -> (DVector<f64>, DMatrix<f64>, f64) {
    let df = cond.sigma_df;
    let scale = &cond.coef_scale_given_sigma * (cond.sigma_trace_scale() / df);
    (cond.coef_mean.clone(), scale, df)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NiwPriorDoc {
    mu0: Vec<f64>,
    tau: f64,
    m: f64,
    lambda: Vec<Vec<f64>>,
    #[serde(default)]
    scale_convention: ScaleConvention,
}

/// Builds a matrix from row vectors, rejecting ragged input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, k| rows[i][k]))
}

/// Row vectors of a matrix, the inverse of [`matrix_from_rows`].
pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<NiwPriorDoc> for NiwPrior {
    type Error = Error;

    fn try_from(d: NiwPriorDoc) -> Result<Self> {
        NiwPrior::new(
            DVector::from_vec(d.mu0),
            d.tau,
            d.m,
            matrix_from_rows(&d.lambda)?,
            d.scale_convention,
        )
    }
}

impl From<NiwPrior> for NiwPriorDoc {
    fn from(p: NiwPrior) -> Self {
        NiwPriorDoc {
            mu0: p.mu0.iter().copied().collect(),
            tau: p.tau,
            m: p.m,
            lambda: matrix_to_rows(&p.lambda),
            scale_convention: p.convention,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NigPriorDoc {
    column: usize,
    sigma_df: f64,
    sigma_scale: f64,
    #[serde(default)]
    scale_convention: ScaleConvention,
    coef_mean: Vec<f64>,
    coef_scale_given_sigma: Vec<Vec<f64>>,
}

impl TryFrom<NigPriorDoc> for NigPrior {
    type Error = Error;

    fn try_from(d: NigPriorDoc) -> Result<Self> {
        NigPrior::new(
            d.column,
            d.sigma_df,
            d.sigma_scale,
            d.scale_convention,
            DVector::from_vec(d.coef_mean),
            matrix_from_rows(&d.coef_scale_given_sigma)?,
        )
    }
}

impl From<NigPrior> for NigPriorDoc {
    fn from(p: NigPrior) -> Self {
        NigPriorDoc {
            column: p.j,
            sigma_df: p.sigma_df,
            sigma_scale: p.sigma_scale,
            scale_convention: p.convention,
            coef_mean: p.coef_mean.iter().copied().collect(),
            coef_scale_given_sigma: matrix_to_rows(&p.coef_scale_given_sigma),
        }
    }
}
