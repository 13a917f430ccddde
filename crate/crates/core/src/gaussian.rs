//! Multivariate normal parameters and the partition algebra that maps a joint
//! Gaussian onto per-variable linear regressions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Chol};

/// Mean vector and covariance matrix of a multivariate normal.
///
/// The covariance is symmetrized on construction and its Cholesky factor is
/// kept alongside, so every value of this type is known to be positive definite.
#[derive(Debug, Clone)]
pub struct GaussianParams {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Chol,
}

impl PartialEq for GaussianParams {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu && self.sigma == other.sigma
    }
}

impl GaussianParams {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        if sigma.nrows() != mu.len() {
            return Err(Error::Dimension(format!(
                "mean has length {} but covariance is {}x{}",
                mu.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mean has non-finite entries".into()));
        }
        let sigma = linalg::symmetrized(&sigma)?;
        let chol = linalg::cholesky(&sigma, "covariance")?;
        Ok(Self { mu, sigma, chol })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_rows(mu: &[f64], sigma: &[&[f64]]) -> Result<Self> {
        let p = mu.len();
        if sigma.len() != p || sigma.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("covariance rows do not match mean length".into()));
        }
        let s = DMatrix::from_fn(p, p, |i, j| sigma[i][j]);
        Self::new(DVector::from_column_slice(mu), s)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cholesky(&self) -> &Chol {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        linalg::log_det(&self.chol)
    }
}

/// The j-th block decomposition of a [`GaussianParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedGaussian {
    pub j: usize,
    pub mu_j: f64,
    pub mu_rest: DVector<f64>,
    /// Marginal variance of variable j.
    pub omega_j: f64,
    /// Covariance between variable j and the others.
    pub xi_j: DVector<f64>,
    pub sigma_rest: DMatrix<f64>,
}

/// Linear regression of one variable on the others:
/// `y_j = alpha + betaᵀ y_rest + e`, `e ~ N(0, sigma2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRegression {
    pub alpha: f64,
    pub beta: DVector<f64>,
    pub sigma2: f64,
}

impl ConditionalRegression {
    /// Linear predictor at `rest`.
    pub fn predict(&self, rest: &DVector<f64>) -> f64 {
        self.alpha + self.beta.dot(rest)
    }

    /// Coefficients stacked as `(alpha, beta)`.
    pub fn coefficients(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.beta.len() + 1);
        c[0] = self.alpha;
        c.rows_mut(1, self.beta.len()).copy_from(&self.beta);
        c
    }
}

/// Splits `params` around variable `j`; remaining indices keep ascending order.
pub fn partition(params: &GaussianParams, j: usize) -> Result<PartitionedGaussian> {
    let p = params.dim();
    if j >= p {
        return Err(Error::IndexOutOfRange { index: j, dim: p });
    }
    if p < 2 {
        return Err(Error::Dimension("partition needs at least two variables".into()));
    }
    let rest = linalg::others(p, j);
    Ok(PartitionedGaussian {
        j,
        mu_j: params.mu[j],
        mu_rest: linalg::select_vec(&params.mu, &rest),
        omega_j: params.sigma[(j, j)],
        xi_j: linalg::select_mat(&params.sigma, &rest, &[j]).column(0).into_owned(),
        sigma_rest: linalg::select_mat(&params.sigma, &rest, &rest),
    })
}

impl PartitionedGaussian {
    pub fn dim(&self) -> usize {
        self.mu_rest.len() + 1
    }

    /// Inverse of [`partition`].
    pub fn reassemble(&self) -> Result<GaussianParams> {
        let (mu, sigma) = self.reassembled_parts();
        GaussianParams::new(mu, sigma)
    }

    pub(crate) fn reassembled_parts(&self) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.dim();
        let rest = linalg::others(p, self.j);
        let mut mu = DVector::zeros(p);
        let mut sigma = DMatrix::zeros(p, p);
        mu[self.j] = self.mu_j;
        sigma[(self.j, self.j)] = self.omega_j;
        for (a, &ra) in rest.iter().enumerate() {
            mu[ra] = self.mu_rest[a];
            sigma[(ra, self.j)] = self.xi_j[a];
            sigma[(self.j, ra)] = self.xi_j[a];
            for (b, &rb) in rest.iter().enumerate() {
                sigma[(ra, rb)] = self.sigma_rest[(a, b)];
            }
        }
        (mu, sigma)
    }

    /// Marginal parameters of the remaining variables.
    pub fn rest_params(&self) -> Result<GaussianParams> {
        GaussianParams::new(self.mu_rest.clone(), self.sigma_rest.clone())
    }
}

/// Regression parameters of variable j on the rest, via a Cholesky solve.
pub fn to_regression(part: &PartitionedGaussian) -> Result<ConditionalRegression> {
    let ch = linalg::cholesky(&part.sigma_rest, "covariance of the conditioning block")?;
    let beta = ch.solve(&part.xi_j);
    let alpha = part.mu_j - beta.dot(&part.mu_rest);
    let sigma2 = part.omega_j - part.xi_j.dot(&beta);
    if !(sigma2 > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "covariance (residual variance {sigma2:e} for variable {})",
            part.j
        )));
    }
    Ok(ConditionalRegression { alpha, beta, sigma2 })
}

/// Inverse of [`to_regression`]: rebuilds the joint from a regression of
/// variable `j` and the marginal law of the remaining variables.
pub fn from_regression(
    j: usize,
    reg: &ConditionalRegression,
    rest: &GaussianParams,
) -> Result<GaussianParams> {
    if reg.beta.len() != rest.dim() {
        return Err(Error::Dimension("regression slopes do not match the rest block".into()));
    }
    if j > rest.dim() {
        return Err(Error::IndexOutOfRange { index: j, dim: rest.dim() + 1 });
    }
    let xi_j = rest.sigma() * &reg.beta;
    let part = PartitionedGaussian {
        j,
        mu_j: reg.alpha + reg.beta.dot(rest.mu()),
        mu_rest: rest.mu().clone(),
        omega_j: reg.sigma2 + reg.beta.dot(&xi_j),
        xi_j,
        sigma_rest: rest.sigma().clone(),
    };
    part.reassemble()
}

/// Conditional law of a set of missing coordinates given the observed ones,
/// precomputed once so it can be applied to many rows sharing a pattern.
#[derive(Debug, Clone)]
pub struct ConditionalGaussian {
    missing: Vec<usize>,
    observed: Vec<usize>,
    mu_missing: DVector<f64>,
    mu_observed: DVector<f64>,
    /// `Σ_mo Σ_oo⁻¹`
    gain: DMatrix<f64>,
    cov: DMatrix<f64>,
    cov_chol: Chol,
}

impl ConditionalGaussian {
    pub fn new(params: &GaussianParams, observed: &[usize]) -> Result<Self> {
        let p = params.dim();
        let mut seen = vec![false; p];
        for &i in observed {
            if i >= p {
                return Err(Error::IndexOutOfRange { index: i, dim: p });
            }
            if seen[i] {
                return Err(Error::InvalidParameter(format!("observed index {i} repeated")));
            }
            seen[i] = true;
        }
        if observed.is_empty() || observed.len() == p {
            return Err(Error::InvalidParameter(
                "observed set must be a nonempty proper subset of the variables".into(),
            ));
        }
        let mut observed = observed.to_vec();
        observed.sort_unstable();
        let missing: Vec<usize> = (0..p).filter(|&i| !seen[i]).collect();

        let s = params.sigma();
        let s_oo = linalg::select_mat(s, &observed, &observed);
        let s_mo = linalg::select_mat(s, &missing, &observed);
        let s_mm = linalg::select_mat(s, &missing, &missing);
        let ch = linalg::cholesky(&s_oo, "observed covariance block")?;
        // gainᵀ = Σ_oo⁻¹ Σ_om
        let gain = ch.solve(&s_mo.transpose()).transpose();
        let cov = linalg::symmetrized(&(&s_mm - &gain * s_mo.transpose()))?;
        let cov_chol = linalg::cholesky(&cov, "conditional covariance")?;
        Ok(Self {
            mu_missing: linalg::select_vec(params.mu(), &missing),
            mu_observed: linalg::select_vec(params.mu(), &observed),
            missing,
            observed,
            gain,
            cov,
            cov_chol,
        })
    }

    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub(crate) fn cov_chol(&self) -> &Chol {
        &self.cov_chol
    }

    /// Conditional mean given observed values (ordered as [`Self::observed`]).
    pub fn mean_given(&self, observed_vals: &DVector<f64>) -> DVector<f64> {
        &self.mu_missing + &self.gain * (observed_vals - &self.mu_observed)
    }
}

/// Conditional Gaussian of the complement of `observed_idx` given
/// `observed_vals` (listed in the same order as `observed_idx`).
pub fn conditional_mvn(
    params: &GaussianParams,
    observed_idx: &[usize],
    observed_vals: &[f64],
) -> Result<GaussianParams> {
    if observed_idx.len() != observed_vals.len() {
        return Err(Error::Dimension("observed indices and values differ in length".into()));
    }
    let cond = ConditionalGaussian::new(params, observed_idx)?;
    let mut pairs: Vec<(usize, f64)> = observed_idx
        .iter()
        .copied()
        .zip(observed_vals.iter().copied())
        .collect();
    pairs.sort_unstable_by_key(|&(i, _)| i);
    let vals = DVector::from_iterator(pairs.len(), pairs.into_iter().map(|(_, v)| v));
    GaussianParams::new(cond.mean_given(&vals), cond.cov.clone())
}

/// Exact multivariate normal log density.
pub fn log_density_mvn(params: &GaussianParams, y: &DVector<f64>) -> Result<f64> {
    let p = params.dim();
    if y.len() != p {
        return Err(Error::Dimension(format!("point has length {} but dimension is {p}", y.len())));
    }
    let r = y - params.mu();
    let q = linalg::inv_quad(params.cholesky(), &r);
    Ok(-0.5 * (p as f64 * (2.0 * PI).ln() + params.log_det() + q))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn design() -> GaussianParams {
        GaussianParams::from_rows(
            &[1.0, 4.0, 9.0],
            &[&[4.0, 2.0, 2.0], &[2.0, 4.0, 2.0], &[2.0, 2.0, 9.0]],
        )
        .unwrap()
    }

    /// Cramer's rule on a 2x2 system, independent of the Cholesky path.
    fn cramer2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [
            (b[0] * a[1][1] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - b[0] * a[1][0]) / det,
        ]
    }

    fn det3_cofactor(m: &DMatrix<f64>) -> f64 {
        m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
            - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
            + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
    }

    fn spd_strategy(max_p: usize) -> impl Strategy<Value = GaussianParams> {
        (2..=max_p).prop_flat_map(|p| {
            (
                prop::collection::vec(-5.0..5.0_f64, p),
                prop::collection::vec(-1.0..1.0_f64, p * p),
                prop::collection::vec(0.2..2.0_f64, p),
            )
                .prop_map(move |(mu, a, d)| {
                    let a = DMatrix::from_vec(p, p, a);
                    let s = &a * a.transpose() + DMatrix::from_diagonal(&DVector::from_vec(d));
                    GaussianParams::new(DVector::from_vec(mu), s).unwrap()
                })
        })
    }

    #[test]
    fn partition_design_middle_variable() {
        let part = partition(&design(), 1).unwrap();
        assert_eq!(part.mu_j, 4.0);
        assert_eq!(part.mu_rest.as_slice(), &[1.0, 9.0]);
        assert_eq!(part.omega_j, 4.0);
        assert_eq!(part.xi_j.as_slice(), &[2.0, 2.0]);
        assert_eq!(part.sigma_rest, DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 9.0]));
    }

    #[test]
    fn partition_identity() {
        let g = GaussianParams::from_rows(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let part = partition(&g, 0).unwrap();
        assert_eq!(part.mu_j, 0.0);
        assert_eq!(part.mu_rest.as_slice(), &[0.0]);
        assert_eq!(part.omega_j, 1.0);
        assert_eq!(part.xi_j.as_slice(), &[0.0]);
        assert_eq!(part.sigma_rest.as_slice(), &[1.0]);
    }

    #[test]
    fn partition_rejects_bad_index() {
        assert!(matches!(
            partition(&design(), 3),
            Err(Error::IndexOutOfRange { index: 3, dim: 3 })
        ));
    }

    #[test]
    fn construction_symmetrizes_or_rejects() {
        let mut s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0 + 1e-12, 2.0]);
        let g = GaussianParams::new(DVector::zeros(2), s.clone()).unwrap();
        assert_eq!(g.sigma()[(0, 1)], g.sigma()[(1, 0)]);
        s[(1, 0)] = 1.1;
        assert!(matches!(
            GaussianParams::new(DVector::zeros(2), s),
            Err(Error::NotSymmetric(_))
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            GaussianParams::new(DVector::zeros(2), bad),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn regression_of_y_on_x_and_z() {
        let reg = to_regression(&partition(&design(), 1).unwrap()).unwrap();
        let oracle = cramer2([[4.0, 2.0], [2.0, 9.0]], [2.0, 2.0]);
        assert_relative_eq!(oracle[0], 7.0 / 16.0, epsilon = 1e-15);
        assert_relative_eq!(oracle[1], 1.0 / 8.0, epsilon = 1e-15);
        assert_relative_eq!(reg.beta[0], 7.0 / 16.0, epsilon = 1e-14);
        assert_relative_eq!(reg.beta[1], 1.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(reg.alpha, 39.0 / 16.0, epsilon = 1e-14);
        assert_relative_eq!(reg.sigma2, 23.0 / 8.0, epsilon = 1e-14);
    }

    #[test]
    fn regression_under_independence() {
        let g = GaussianParams::from_rows(
            &[1.5, -2.0, 3.0],
            &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]],
        )
        .unwrap();
        for j in 0..3 {
            let reg = to_regression(&partition(&g, j).unwrap()).unwrap();
            assert!(reg.beta.iter().all(|&b| b == 0.0));
            assert_eq!(reg.alpha, g.mu()[j]);
            assert_eq!(reg.sigma2, 1.0);
        }
    }

    #[test]
    fn conditional_on_prior_mean_point() {
        let c = conditional_mvn(&design(), &[0, 2], &[1.0, 9.0]).unwrap();
        assert_eq!(c.dim(), 1);
        assert_relative_eq!(c.mu()[0], 4.0, epsilon = 1e-14);
        assert_relative_eq!(c.sigma()[(0, 0)], 23.0 / 8.0, epsilon = 1e-14);
        // order of the observed list does not matter
        let c2 = conditional_mvn(&design(), &[2, 0], &[9.0, 1.0]).unwrap();
        assert_relative_eq!(c2.mu()[0], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn conditional_requires_proper_subset() {
        assert!(conditional_mvn(&design(), &[], &[]).is_err());
        assert!(conditional_mvn(&design(), &[0, 1, 2], &[0.0, 0.0, 0.0]).is_err());
        assert!(conditional_mvn(&design(), &[0, 0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn bivariate_conditional_variance() {
        let (rho, s2) = (0.6, 2.5);
        let g = GaussianParams::from_rows(&[0.0, 0.0], &[&[s2, rho * s2], &[rho * s2, s2]])
            .unwrap();
        let c = conditional_mvn(&g, &[0], &[1.3]).unwrap();
        assert_relative_eq!(c.sigma()[(0, 0)], (1.0 - rho * rho) * s2, epsilon = 1e-14);
        assert_relative_eq!(c.mu()[0], rho * 1.3, epsilon = 1e-14);
    }

    #[test]
    fn log_density_reference_points() {
        let g1 = GaussianParams::from_rows(&[0.0], &[&[1.0]]).unwrap();
        assert_relative_eq!(
            log_density_mvn(&g1, &DVector::from_vec(vec![0.0])).unwrap(),
            -0.5 * (2.0 * PI).ln(),
            epsilon = 1e-15
        );
        let g2 = GaussianParams::from_rows(&[0.0, 0.0], &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_relative_eq!(
            log_density_mvn(&g2, &DVector::zeros(2)).unwrap(),
            -(2.0 * PI).ln(),
            epsilon = 1e-15
        );
        let d = design();
        let det = det3_cofactor(d.sigma());
        assert_eq!(det, 92.0);
        assert_relative_eq!(d.log_det().exp(), 92.0, epsilon = 1e-12);
        assert_relative_eq!(
            log_density_mvn(&d, d.mu()).unwrap(),
            -0.5 * ((2.0 * PI).powi(3) * det).ln(),
            epsilon = 1e-13
        );
        assert!(log_density_mvn(&d, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn from_regression_inverts_to_regression() {
        let d = design();
        for j in 0..3 {
            let part = partition(&d, j).unwrap();
            let reg = to_regression(&part).unwrap();
            let back = from_regression(j, &reg, &part.rest_params().unwrap()).unwrap();
            assert_relative_eq!(back.mu(), d.mu(), epsilon = 1e-12);
            assert_relative_eq!(back.sigma(), d.sigma(), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn partition_round_trip_is_exact(g in spd_strategy(10), j_seed in 0usize..100) {
            let j = j_seed % g.dim();
            let back = partition(&g, j).unwrap().reassemble().unwrap();
            prop_assert_eq!(back.mu(), g.mu());
            prop_assert_eq!(back.sigma(), g.sigma());
        }

        #[test]
        fn regression_density_identity(
            g in spd_strategy(6),
            j_seed in 0usize..100,
            pts in prop::collection::vec(prop::collection::vec(-6.0..6.0_f64, 6), 5),
        ) {
            let p = g.dim();
            let j = j_seed % p;
            let part = partition(&g, j).unwrap();
            let reg = to_regression(&part).unwrap();
            let rest = part.rest_params().unwrap();
            let idx = linalg::others(p, j);
            for pt in &pts {
                let y = DVector::from_column_slice(&pt[..p]);
                let y_rest = linalg::select_vec(&y, &idx);
                let cond = GaussianParams::from_rows(&[reg.predict(&y_rest)], &[&[reg.sigma2]]).unwrap();
                let lhs = log_density_mvn(&g, &y).unwrap();
                let rhs = log_density_mvn(&cond, &DVector::from_vec(vec![y[j]])).unwrap()
                    + log_density_mvn(&rest, &y_rest).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
            }
        }

        #[test]
        fn residual_variance_is_inverse_precision_diagonal(g in spd_strategy(6), j_seed in 0usize..100) {
            let j = j_seed % g.dim();
            let reg = to_regression(&partition(&g, j).unwrap()).unwrap();
            let prec = g.cholesky().inverse();
            prop_assert!((reg.sigma2 - 1.0 / prec[(j, j)]).abs() <= 1e-10 * reg.sigma2.max(1.0));
            prop_assert!(reg.sigma2 <= g.sigma()[(j, j)]);
        }

        #[test]
        fn single_missing_conditional_matches_regression(
            g in spd_strategy(6),
            j_seed in 0usize..100,
            vals in prop::collection::vec(-6.0..6.0_f64, 6),
        ) {
            let p = g.dim();
            let j = j_seed % p;
            let idx = linalg::others(p, j);
            let obs: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
            let c = conditional_mvn(&g, &idx, &obs).unwrap();
            let reg = to_regression(&partition(&g, j).unwrap()).unwrap();
            let pred = reg.predict(&DVector::from_vec(obs));
            prop_assert!((c.mu()[0] - pred).abs() <= 1e-10 * pred.abs().max(1.0));
            prop_assert!((c.sigma()[(0, 0)] - reg.sigma2).abs() <= 1e-10 * reg.sigma2.max(1.0));
        }
    }
}
