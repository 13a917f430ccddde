//! Seedable draws for every distribution the imputers need.
//!
//! Inverse-Wishart convention used throughout: `Σ ~ W⁻¹(ν, S)` has density
//! proportional to `|Σ|^{-(ν+p+1)/2} exp(-½ tr(S Σ⁻¹))`. For `p = 1` this is an
//! inverse-gamma with shape `ν/2` and scale `S/2`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianParams;
use crate::linalg::{self, Chol};

/// Generator used by every chain and replication.
pub type SimRng = ChaCha8Rng;

/// Master seed from which independent streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

const CHAIN_BITS: u32 = 20;

/// Chain id reserved for generating and amputing a replication's data.
pub const DATA_CHAIN: u64 = (1 << CHAIN_BITS) - 1;
/// Chain ids from here on are used by joint-model chains, so they never
/// share a stream with FCS chains of the same replication.
pub const JM_CHAIN_BASE: u64 = 1 << (CHAIN_BITS - 1);

impl RngSeed {
    /// The master stream.
    pub fn rng(self) -> SimRng {
        SimRng::seed_from_u64(self.0)
    }

    /// Independent stream for `(replication, chain)`. Distinct pairs never
    /// share a ChaCha stream, and none coincides with the master stream.
    pub fn stream(self, replication: u64, chain: u64) -> SimRng {
        assert!(chain < (1 << CHAIN_BITS), "chain id {chain} too large");
        assert!(replication < (1 << (63 - CHAIN_BITS)), "replication id too large");
        let mut rng = self.rng();
        rng.set_stream(((replication << CHAIN_BITS) | chain) + 1);
        rng
    }
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `μ + L z` with `L` the Cholesky factor of Σ.
pub fn draw_mvn<R: Rng + ?Sized>(rng: &mut R, params: &GaussianParams) -> DVector<f64> {
    let z = standard_normal_vec(rng, params.dim());
    params.mu() + params.cholesky().l_dirty().lower_triangle() * z
}

pub(crate) fn draw_mvn_chol<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &DVector<f64>,
    chol: &Chol,
) -> DVector<f64> {
    let z = standard_normal_vec(rng, mean.len());
    mean + chol.l() * z
}

fn check_df(df: f64, p: usize) -> Result<()> {
    if !df.is_finite() || df <= (p as f64) - 1.0 {
        return Err(Error::InvalidParameter(format!(
            "inverse-Wishart degrees of freedom {df} must exceed dimension minus one ({})",
            p as f64 - 1.0
        )));
    }
    Ok(())
}

/// Draw `Σ ~ W⁻¹(df, scale)` through the Bartlett decomposition of the
/// Wishart-distributed precision.
pub fn draw_inv_wishart<R: Rng + ?Sized>(
    rng: &mut R,
    df: f64,
    scale: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let scale = linalg::symmetrized(scale)?;
    check_df(df, scale.nrows())?;
    let ch = linalg::cholesky(&scale, "inverse-Wishart scale")?;
    Ok(draw_inv_wishart_chol(rng, df, &ch))
}

/// Same as [`draw_inv_wishart`] with a pre-factored scale `S = U Uᵀ`.
///
/// With `A` the Bartlett factor of a standard Wishart, `Σ⁻¹ = U⁻ᵀ A Aᵀ U⁻¹`,
/// so `Σ = X Xᵀ` with `X = U A⁻ᵀ`.
pub(crate) fn draw_inv_wishart_chol<R: Rng + ?Sized>(
    rng: &mut R,
    df: f64,
    scale_chol: &Chol,
) -> DMatrix<f64> {
    let u = scale_chol.l();
    let p = u.nrows();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(df - i as f64).expect("df checked by caller");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let a_inv = a
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .expect("Bartlett diagonal is positive");
    let x = u * a_inv.transpose();
    let s = &x * x.transpose();
    (&s + s.transpose()) * 0.5
}

/// Inverse-gamma draw: `scale / G` with `G ~ Gamma(shape, 1)`.
pub fn draw_inv_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse-gamma needs positive shape and scale, got ({shape}, {scale})"
        )));
    }
    let g = Gamma::new(shape, 1.0).expect("validated");
    Ok(scale / g.sample(rng))
}

/// Multivariate Student-t: `loc + L z √(df/g)`, `g ~ χ²(df)`.
pub fn draw_mv_student_t<R: Rng + ?Sized>(
    rng: &mut R,
    loc: &DVector<f64>,
    scale: &DMatrix<f64>,
    df: f64,
) -> Result<DVector<f64>> {
    if !(df > 0.0) {
        return Err(Error::InvalidParameter(format!("t degrees of freedom must be positive, got {df}")));
    }
    if scale.nrows() != loc.len() {
        return Err(Error::Dimension("t location and scale disagree".into()));
    }
    let scale = linalg::symmetrized(scale)?;
    let ch = linalg::cholesky(&scale, "t scale")?;
    let z = standard_normal_vec(rng, loc.len());
    let g = ChiSquared::new(df).expect("validated").sample(rng);
    Ok(loc + ch.l() * z * (df / g).sqrt())
}
