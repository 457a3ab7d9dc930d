//! Dense symmetric linear algebra: the generalized symmetric-definite
//! eigensolver, SVD-based nullspaces and symmetric solves.
//!
//! Everything is dense. Sparse FEM matrices are densified before they reach
//! this module.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{get_global_parallelism, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Default relative eigen-residual tolerance.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;
/// Default relative rank threshold for nullspaces.
pub const NULLSPACE_RTOL: f64 = 1e-12;

/// Eigenpairs of a symmetric-definite pencil `(A, B)`.
#[derive(Debug, Clone)]
pub struct DenseSymEigResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// B-orthonormal columns.
    pub eigenvectors: Mat<f64>,
    /// `|Ax - λBx| / ((|A| + |λ||B|) |x|)` per pair.
    pub residuals: Vec<f64>,
}

fn check_square(a: MatRef<'_, f64>, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::dim(format!(
            "{what} is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: MatRef<'_, f64>) -> Mat<f64> {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn is_symmetric(a: MatRef<'_, f64>, rtol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > rtol * scale {
                return false;
            }
        }
    }
    true
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky_lower(b: MatRef<'_, f64>) -> Result<Mat<f64>> {
    check_square(b, "B")?;
    let llt = b.llt(Side::Lower).map_err(|_| Error::NotSpd)?;
    Ok(llt.L().to_owned())
}

/// Solves `L X = rhs` for lower-triangular `L`.
pub fn lower_solve(l: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut x = rhs.to_owned();
    solve_lower_triangular_in_place(l, x.as_mut(), get_global_parallelism());
    x
}

/// Solves `Lᵀ X = rhs` for lower-triangular `L`.
pub fn lower_transpose_solve(l: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut x = rhs.to_owned();
    solve_upper_triangular_in_place(l.transpose(), x.as_mut(), get_global_parallelism());
    x
}

/// Whether `b` is exactly the identity matrix.
pub fn is_identity(b: MatRef<'_, f64>) -> bool {
    let n = b.nrows();
    if b.ncols() != n {
        return false;
    }
    (0..n).all(|j| (0..n).all(|i| b[(i, j)] == if i == j { 1.0 } else { 0.0 }))
}

/// `L⁻¹ A L⁻ᵀ`, symmetrized.
fn congruence_by_inverse(l: MatRef<'_, f64>, a: MatRef<'_, f64>) -> Mat<f64> {
    let x = lower_solve(l, a);
    let c = lower_solve(l, x.transpose());
    symmetrize(c.as_ref())
}

/// First `m` eigenpairs of `A x = λ B x` with `A` symmetric and `B` SPD.
///
/// Cholesky-reduces `B = L Lᵀ`, diagonalizes `L⁻¹ A L⁻ᵀ` and maps the
/// eigenvectors back with `L⁻ᵀ`.
pub fn sym_generalized_eig(
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    m: usize,
) -> Result<DenseSymEigResult> {
    let n = check_square(a, "A")?;
    if check_square(b, "B")? != n {
        return Err(Error::dim("A and B differ in size"));
    }
    if m > n {
        return Err(Error::InsufficientEigenvalues {
            needed: m,
            available: n,
        });
    }
    if n == 0 {
        return Ok(DenseSymEigResult {
            eigenvalues: vec![],
            eigenvectors: Mat::zeros(0, 0),
            residuals: vec![],
        });
    }
    if is_identity(b) {
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let eigenvalues: Vec<f64> = (0..m).map(|i| evd.S()[i]).collect();
        let x = evd.U().subcols(0, m).to_owned();
        let residuals = pencil_residuals(a, b, &eigenvalues, x.as_ref());
        return Ok(DenseSymEigResult {
            eigenvalues,
            eigenvectors: x,
            residuals,
        });
    }
    let l = cholesky_lower(b)?;
    let c = congruence_by_inverse(l.as_ref(), a);
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = (0..m).map(|i| evd.S()[i]).collect();
    let y = evd.U().subcols(0, m);
    let x = lower_transpose_solve(l.as_ref(), y);
    let residuals = pencil_residuals(a, b, &eigenvalues, x.as_ref());
    Ok(DenseSymEigResult {
        eigenvalues,
        eigenvectors: x,
        residuals,
    })
}

/// All eigenvalues of the pencil, no vectors.
pub fn sym_generalized_eigenvalues(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let n = check_square(a, "A")?;
    if check_square(b, "B")? != n {
        return Err(Error::dim("A and B differ in size"));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if is_identity(b) {
        return a
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")));
    }
    let l = cholesky_lower(b)?;
    let c = congruence_by_inverse(l.as_ref(), a);
    c.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))
}

/// Relative residuals of eigenpairs of the pencil `(A, B)`.
pub fn pencil_residuals(
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    values: &[f64],
    vectors: MatRef<'_, f64>,
) -> Vec<f64> {
    if vectors.ncols() == 0 {
        return vec![];
    }
    let an = a.norm_l2();
    let bn = b.norm_l2();
    let ax = a * vectors;
    let bx = b * vectors;
    values
        .iter()
        .enumerate()
        .map(|(j, &lam)| {
            let mut r2 = 0.0;
            for i in 0..vectors.nrows() {
                let r = ax[(i, j)] - lam * bx[(i, j)];
                r2 += r * r;
            }
            let denom = (an + lam.abs() * bn) * vectors.col(j).norm_l2();
            if denom > 0.0 {
                r2.sqrt() / denom
            } else {
                r2.sqrt()
            }
        })
        .collect()
}

/// Full SVD of a matrix split at its numerical rank.
#[derive(Debug, Clone)]
pub struct RankSplit {
    pub rank: usize,
    /// Singular values, nonincreasing.
    pub sigma: Vec<f64>,
    /// Orthonormal basis of the column space (`rows × rank`).
    pub range: Mat<f64>,
    /// Orthonormal basis of the complement of the column space.
    pub corange: Mat<f64>,
    /// Orthonormal basis of the row space (`cols × rank`).
    pub row_space: Mat<f64>,
    /// Orthonormal basis of the nullspace (`cols × (cols - rank)`).
    pub null: Mat<f64>,
}

/// SVD with rank threshold `rtol · σ_max`.
pub fn rank_split(b: MatRef<'_, f64>, rtol: f64) -> Result<RankSplit> {
    let (k, n) = (b.nrows(), b.ncols());
    if k == 0 || n == 0 {
        return Ok(RankSplit {
            rank: 0,
            sigma: vec![],
            range: Mat::zeros(k, 0),
            corange: Mat::identity(k, k),
            row_space: Mat::zeros(n, 0),
            null: Mat::identity(n, n),
        });
    }
    let svd = b.svd().map_err(|e| Error::Solver(format!("{e:?}")))?;
    let p = k.min(n);
    let sigma: Vec<f64> = (0..p).map(|i| svd.S()[i]).collect();
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = if smax > 0.0 {
        sigma.iter().take_while(|&&s| s > rtol * smax).count()
    } else {
        0
    };
    Ok(RankSplit {
        rank,
        sigma,
        range: svd.U().subcols(0, rank).to_owned(),
        corange: svd.U().subcols(rank, k - rank).to_owned(),
        row_space: svd.V().subcols(0, rank).to_owned(),
        null: svd.V().subcols(rank, n - rank).to_owned(),
    })
}

/// Orthonormal basis of the row space of `b` from a thin SVD, with the
/// same rank rule as [`rank_split`]. Much cheaper than the full split for
/// wide matrices.
pub fn row_space(b: MatRef<'_, f64>, rtol: f64) -> Result<Mat<f64>> {
    let (k, n) = (b.nrows(), b.ncols());
    if k == 0 || n == 0 {
        return Ok(Mat::zeros(n, 0));
    }
    let svd = b.thin_svd().map_err(|e| Error::Solver(format!("{e:?}")))?;
    let p = k.min(n);
    let smax = svd.S()[0];
    let rank = if smax > 0.0 {
        (0..p).take_while(|&i| svd.S()[i] > rtol * smax).count()
    } else {
        0
    };
    Ok(svd.V().subcols(0, rank).to_owned())
}

/// Orthonormal basis of `ker B`.
pub fn nullspace(b: MatRef<'_, f64>, rtol: f64) -> Result<Mat<f64>> {
    Ok(rank_split(b, rtol)?.null)
}

/// Symmetric eigendecomposition `A = U diag(s) Uᵀ`, kept for repeated solves
/// with possibly indefinite `A`.
#[derive(Debug, Clone)]
pub struct SymFactor {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl SymFactor {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        check_square(a, "A")?;
        let s = symmetrize(a);
        let evd = s
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        let values = (0..s.nrows()).map(|i| evd.S()[i]).collect();
        Ok(SymFactor {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `A⁻¹ rhs`; fails when `min |s| ≤ tol · max |s|`.
    pub fn solve(&self, rhs: MatRef<'_, f64>, tol: f64) -> Result<Mat<f64>> {
        let min_abs = self.min_abs();
        if !(min_abs > tol * self.max_abs()) {
            return Err(Error::SingularShift { min_abs });
        }
        let mut t = self.vectors.transpose() * rhs;
        for i in 0..t.nrows() {
            let inv = 1.0 / self.values[i];
            for j in 0..t.ncols() {
                t[(i, j)] *= inv;
            }
        }
        Ok(&self.vectors * &t)
    }
}

/// Solves `A X = rhs` for symmetric, possibly indefinite `A` through its
/// eigendecomposition.
pub fn sym_solve(a: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if a.nrows() != rhs.nrows() {
        return Err(Error::dim("rhs rows differ from A"));
    }
    SymFactor::new(a)?.solve(rhs, 1e-13)
}

/// `Pᵀ A P`, symmetrized.
pub fn congruence(a: MatRef<'_, f64>, p: MatRef<'_, f64>) -> Mat<f64> {
    let ap = a * p;
    let c = p.transpose() * &ap;
    symmetrize(c.as_ref())
}

/// Euclidean norm of a column given as a slice.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn col_from_slice(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn col_to_vec(m: MatRef<'_, f64>, j: usize) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}

/// `xᵀ A y`.
pub fn bilinear(a: MatRef<'_, f64>, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        if y[j] == 0.0 {
            continue;
        }
        let mut t = 0.0;
        for i in 0..a.nrows() {
            t += x[i] * a[(i, j)];
        }
        s += t * y[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> Mat<f64> {
        Mat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    #[test]
    fn diagonal_identity_pencil() {
        let r = sym_generalized_eig(diag(&[3.0, 1.0, 2.0]).as_ref(), diag(&[1.0; 3]).as_ref(), 3)
            .unwrap();
        assert_eq!(r.eigenvalues.len(), 3);
        for (v, e) in r.eigenvalues.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn hand_divided_pencil() {
        let r = sym_generalized_eig(diag(&[2.0, 3.0]).as_ref(), diag(&[2.0, 1.0]).as_ref(), 2)
            .unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((r.eigenvalues[1] - 3.0).abs() < 1e-14);
        // B-normalized: x0 = e0 / sqrt(2)
        assert!((r.eigenvectors[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_gram() {
        let err = sym_generalized_eig(diag(&[1.0, 1.0]).as_ref(), diag(&[1.0, -1.0]).as_ref(), 1);
        assert!(matches!(err, Err(Error::NotSpd)));
    }

    #[test]
    fn nullspace_of_row_selector() {
        let b = Mat::from_fn(1, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
        let z = nullspace(b.as_ref(), NULLSPACE_RTOL).unwrap();
        assert_eq!(z.ncols(), 1);
        assert!(z[(0, 0)].abs() < 1e-15);
        assert!((z[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nullspace_of_zero_map() {
        let b = Mat::<f64>::zeros(2, 3);
        assert_eq!(nullspace(b.as_ref(), NULLSPACE_RTOL).unwrap().ncols(), 3);
    }

    #[test]
    fn identity_and_indefinite_solves() {
        let rhs = Mat::from_fn(2, 1, |_, _| 1.0);
        let x = sym_solve(diag(&[1.0, 1.0]).as_ref(), rhs.as_ref()).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] - 1.0).abs() < 1e-15);
        let x = sym_solve(diag(&[1.0, -1.0]).as_ref(), rhs.as_ref()).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15 && (x[(1, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_solve_is_reported() {
        let rhs = Mat::from_fn(2, 1, |_, _| 1.0);
        let err = sym_solve(diag(&[1.0, 0.0]).as_ref(), rhs.as_ref());
        assert!(matches!(err, Err(Error::SingularShift { .. })));
    }
}
