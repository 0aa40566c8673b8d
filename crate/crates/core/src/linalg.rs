//! Small dense linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// `mat` with column `col` removed.
pub fn remove_column(mat: &DMatrix<f64>, col: usize) -> DMatrix<f64> {
    mat.clone().remove_column(col)
}

/// `v` with entry `idx` removed.
pub fn remove_element(v: &DVector<f64>, idx: usize) -> DVector<f64> {
    v.clone().remove_row(idx)
}

/// Smallest singular value; zero for an empty matrix.
pub fn smallest_singular_value(mat: &DMatrix<f64>) -> f64 {
    if mat.is_empty() {
        return 0.0;
    }
    let sv = mat.clone().svd(false, false).singular_values;
    // A wide matrix has min(rows, cols) singular values, all of them relevant.
    sv.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Result of an LU inversion.
#[derive(Debug, Clone)]
pub struct Inverse {
    pub inverse: DMatrix<f64>,
    pub det: f64,
    /// 1-norm condition number `|A|_1 |A^-1|_1`.
    pub condition: f64,
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverts a square matrix by LU with partial pivoting. Returns `None` when
/// the factorization is singular.
pub fn invert(mat: &DMatrix<f64>) -> Option<Inverse> {
    let lu = mat.clone().lu();
    let det = lu.determinant();
    let inverse = lu.try_inverse()?;
    let condition = norm1(mat) * norm1(&inverse);
    Some(Inverse { inverse, det, condition })
}

/// Solves `a x = b` by LU; `None` when singular.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().lu().solve(b)
}
