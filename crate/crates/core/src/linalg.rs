//! Small dense helpers on top of nalgebra shared by the Gaussian and prior code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative asymmetry accepted (and averaged away) on construction.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub type Chol = Cholesky<f64, Dyn>;

/// Checks symmetry and returns `(A + Aᵀ)/2`.
pub fn symmetrized(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = a.amax();
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    let rel = if scale > 0.0 { worst / scale } else { 0.0 };
    if rel > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(rel));
    }
    if worst == 0.0 {
        return Ok(a.clone());
    }
    Ok((a + a.transpose()) * 0.5)
}

pub fn cholesky(a: &DMatrix<f64>, what: &str) -> Result<Chol> {
    Cholesky::new(a.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// `ln |A|` from a Cholesky factor.
pub fn log_det(ch: &Chol) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// `vᵀ A⁻¹ v` using the factor `A = L Lᵀ`.
pub fn inv_quad(ch: &Chol, v: &DVector<f64>) -> f64 {
    let l = ch.l();
    let w = l
        .solve_lower_triangular(v)
        .expect("cholesky factor has a positive diagonal");
    w.norm_squared()
}

/// Indices `0..p` with `skip` removed, ascending.
pub fn others(p: usize, skip: usize) -> Vec<usize> {
    (0..p).filter(|&i| i != skip).collect()
}

pub fn select_vec(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn select_mat(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| a[(rows[r], cols[c])])
}

/// `tr(A B)` for square matrices of equal size.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// Maps `-0.0` to `0.0` so serialized documents stay clean.
pub fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}
