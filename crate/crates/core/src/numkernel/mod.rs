//! Dense complex linear algebra: Hermitian eigendecomposition by cyclic
//! Jacobi, PSD projection, Gram factors and least-squares solves.

mod eig;
mod factor;
mod matrix;

pub use eig::{
    hermitian_eig, hermitian_eig_warm, hermitian_eig_with, min_eigenvalue, operator_norm,
    psd_project, psd_project_warm, EigenDecomposition, JacobiOptions,
};
pub use factor::{
    gram_factor, lu_solve, nearest_unitary, orthonormal_complement, pinv_apply, pinv_apply_right,
    vec_norm, GramFactor, DEFAULT_RANK_TOL,
};
pub use matrix::{CMatrix, HermMatrix, C64, HERMITIZE_TOL, ONE, ZERO};

use crate::error::{Error, Result};

/// Matrix as nested rows of `[re, im]` pairs, the layout used by every
/// file format in this crate.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let r: Vec<Vec<C64>> = rows
        .iter()
        .map(|row| row.iter().map(|[a, b]| C64::new(*a, *b)).collect())
        .collect();
    let m = CMatrix::from_rows(&r)?;
    if !m.is_finite() {
        return Err(Error::Format("matrix contains non-finite entries".into()));
    }
    Ok(m)
}

pub fn herm_from_json(rows: &MatrixJson) -> Result<HermMatrix> {
    let m = matrix_from_json(rows)?;
    if !m.is_square() {
        return Err(Error::Format(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    HermMatrix::try_new(m).map_err(|e| Error::Format(e.to_string()))
}
