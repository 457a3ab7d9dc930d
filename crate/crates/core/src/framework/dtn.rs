use faer::{Mat, MatRef};

use super::{gram_err, FormSystem};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative distance to `σ(A^D)` below which a shift counts as resonant.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-8;

/// Spectrum of the single-valued part `N_λ°` of the Dirichlet-to-Neumann
/// graph at shift `λ`.
#[derive(Debug, Clone)]
pub struct DtnResult {
    pub shift: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Mb-orthonormal columns in boundary coordinates, inside `range(J)`.
    pub eigenvectors: Mat<f64>,
    pub residuals: Vec<f64>,
    /// Mb-orthonormal basis of the Mb-orthogonal complement of `range(J)`;
    /// the multivalued directions of the graph.
    pub multivalued_basis: Mat<f64>,
    /// Distance from the shift to the nearest Dirichlet eigenvalue.
    pub dirichlet_distance: f64,
    /// Set when the shift is within `sqrt(tol)` (relative) of `σ(A^D)`:
    /// the result is valid but ill-conditioned.
    pub resonance_flag: bool,
}

impl DtnResult {
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn negative_count(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|&&v| v < -tol).count()
    }
}

/// Shift-independent data of the DtN graph of a form system.
///
/// The Dirichlet block `(A - λM)` on `ker J` is diagonalized once, so each
/// additional shift costs `O(n_D · r²)`.
#[derive(Debug, Clone)]
pub struct DtnOperator {
    /// Euclidean-orthonormal basis of `range(J)`.
    range: Mat<f64>,
    /// Lift of `range` into `V`: `J · lift = range`.
    lift: Mat<f64>,
    dirichlet_values: Vec<f64>,
    /// M-orthonormal Dirichlet eigenvectors in `V` coordinates.
    dirichlet_vectors: Mat<f64>,
    lift_a: Mat<f64>,
    lift_m: Mat<f64>,
    coupling_a: Mat<f64>,
    coupling_m: Mat<f64>,
    gram: Mat<f64>,
    multivalued: Mat<f64>,
}

impl DtnOperator {
    pub fn new(fs: &FormSystem) -> Result<Self> {
        let split = fs.trace_split()?;
        let r = split.rank;
        let range = split.range.clone();
        let lift = Mat::from_fn(fs.n(), r, |i, j| split.row_space[(i, j)] / split.sigma[j]);
        let zd = &split.null;

        let (dirichlet_values, dirichlet_vectors) = if zd.ncols() > 0 {
            let ad = linalg::congruence(fs.a(), zd.as_ref());
            let md = linalg::congruence(fs.m(), zd.as_ref());
            let e = linalg::sym_generalized_eig(ad.as_ref(), md.as_ref(), zd.ncols())
                .map_err(gram_err)?;
            (e.eigenvalues, zd * &e.eigenvectors)
        } else {
            (vec![], Mat::zeros(fs.n(), 0))
        };

        let lift_a = linalg::congruence(fs.a(), lift.as_ref());
        let lift_m = linalg::congruence(fs.m(), lift.as_ref());
        let coupling_a = dirichlet_vectors.transpose() * (fs.a() * &lift);
        let coupling_m = dirichlet_vectors.transpose() * (fs.m() * &lift);
        let gram = linalg::congruence(fs.mb(), range.as_ref());
        if r > 0 {
            linalg::cholesky_lower(gram.as_ref()).map_err(gram_err)?;
        }
        let multivalued = mb_orthogonal_complement(fs.mb(), split.corange.as_ref())?;

        Ok(DtnOperator {
            range,
            lift,
            dirichlet_values,
            dirichlet_vectors,
            lift_a,
            lift_m,
            coupling_a,
            coupling_m,
            gram,
            multivalued,
        })
    }

    pub fn dirichlet_values(&self) -> &[f64] {
        &self.dirichlet_values
    }

    /// `dim range(J)`.
    pub fn rank(&self) -> usize {
        self.range.ncols()
    }

    pub fn multivalued_basis(&self) -> MatRef<'_, f64> {
        self.multivalued.as_ref()
    }

    /// Nearest Dirichlet eigenvalue and its distance from `lambda`.
    pub fn nearest_dirichlet(&self, lambda: f64) -> Option<(f64, f64)> {
        self.dirichlet_values
            .iter()
            .map(|&v| (v, (v - lambda).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn check_resonance(&self, lambda: f64, tol: f64) -> Result<f64> {
        let scale = lambda.abs().max(1.0);
        match self.nearest_dirichlet(lambda) {
            Some((nearest, distance)) if distance <= tol * scale => Err(Error::DirichletResonance {
                lambda,
                nearest,
                distance,
            }),
            Some((_, distance)) => Ok(distance),
            None => Ok(f64::INFINITY),
        }
    }

    /// `X_Dᵀ (A - λM) L`.
    fn coupling(&self, lambda: f64) -> Mat<f64> {
        let mut p = self.coupling_a.clone();
        p -= faer::Scale(lambda) * &self.coupling_m;
        p
    }

    /// Matrix of the quadratic form `b_λ(u(c), u(c'))` of harmonic extensions
    /// in `range` coordinates.
    pub fn form_matrix(&self, lambda: f64, tol: f64) -> Result<Mat<f64>> {
        self.check_resonance(lambda, tol)?;
        let p = self.coupling(lambda);
        let mut w = p.clone();
        for (i, &d) in self.dirichlet_values.iter().enumerate() {
            let inv = 1.0 / (d - lambda);
            for j in 0..w.ncols() {
                w[(i, j)] *= inv;
            }
        }
        let mut q = self.lift_a.clone();
        q -= faer::Scale(lambda) * &self.lift_m;
        q -= p.transpose() * &w;
        Ok(linalg::symmetrize(q.as_ref()))
    }

    /// The spectrum of `N_λ°`.
    pub fn evaluate(&self, lambda: f64, tol: f64) -> Result<DtnResult> {
        let distance = self.check_resonance(lambda, tol)?;
        let q = self.form_matrix(lambda, tol)?;
        let r = self.rank();
        let e = linalg::sym_generalized_eig(q.as_ref(), self.gram.as_ref(), r).map_err(gram_err)?;
        let eigenvectors = &self.range * &e.eigenvectors;
        let scale = lambda.abs().max(1.0);
        Ok(DtnResult {
            shift: lambda,
            eigenvalues: e.eigenvalues,
            eigenvectors,
            residuals: e.residuals,
            multivalued_basis: self.multivalued.clone(),
            dirichlet_distance: distance,
            resonance_flag: distance <= tol.sqrt() * scale,
        })
    }

    /// Coordinates of a trace in the `range` basis (orthogonal projection).
    fn coordinates(&self, phi: &[f64]) -> Vec<f64> {
        let c = self.range.transpose() * linalg::col_from_slice(phi);
        linalg::col_to_vec(c.as_ref(), 0)
    }

    /// `(N_λ° φ, φ)_K` for a trace `φ ∈ range(J)`.
    pub fn quadratic_form(&self, lambda: f64, tol: f64, phi: &[f64], psi: &[f64]) -> Result<f64> {
        let q = self.form_matrix(lambda, tol)?;
        let c = self.coordinates(phi);
        let d = self.coordinates(psi);
        Ok(linalg::bilinear(q.as_ref(), &c, &d))
    }

    /// The `b_λ`-harmonic extension of a trace `φ ∈ range(J)` into `V`.
    pub fn harmonic_extension(&self, lambda: f64, tol: f64, phi: &[f64]) -> Result<Vec<f64>> {
        self.check_resonance(lambda, tol)?;
        let c = linalg::col_from_slice(&self.coordinates(phi));
        let mut pc = self.coupling(lambda) * &c;
        for (i, &d) in self.dirichlet_values.iter().enumerate() {
            pc[(i, 0)] /= d - lambda;
        }
        let u = &self.lift * &c - &self.dirichlet_vectors * &pc;
        Ok(linalg::col_to_vec(u.as_ref(), 0))
    }
}

/// Mb-orthonormal basis of `{x : (x, range(J))_Mb = 0}` given a Euclidean
/// basis `corange` of `range(J)^⊥`.
fn mb_orthogonal_complement(mb: MatRef<'_, f64>, corange: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if corange.ncols() == 0 {
        return Ok(Mat::zeros(corange.nrows(), 0));
    }
    let l = linalg::cholesky_lower(mb).map_err(gram_err)?;
    let x = linalg::lower_transpose_solve(l.as_ref(), linalg::lower_solve(l.as_ref(), corange).as_ref());
    let g = linalg::symmetrize((corange.transpose() * &x).as_ref());
    let lg = linalg::cholesky_lower(g.as_ref()).map_err(gram_err)?;
    let xt = linalg::lower_solve(lg.as_ref(), x.transpose());
    Ok(xt.transpose().to_owned())
}

/// Spectrum of `N_λ°` for a single shift.
pub fn dtn_spectrum(fs: &FormSystem, lambda: f64, tol: f64) -> Result<DtnResult> {
    DtnOperator::new(fs)?.evaluate(lambda, tol)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{diag, hand_system};
    use super::*;

    #[test]
    fn hand_system_dtn_values() {
        let op = DtnOperator::new(&hand_system()).unwrap();
        let r = op.evaluate(0.0, DEFAULT_RESONANCE_TOL).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-12);
        let r = op.evaluate(0.5, DEFAULT_RESONANCE_TOL).unwrap();
        assert!((r.eigenvalues[0] - 0.5).abs() < 1e-12);
        assert_eq!(r.multivalued_basis.ncols(), 0);
        assert!(!r.resonance_flag);
    }

    #[test]
    fn resonance_at_dirichlet_eigenvalue() {
        let err = dtn_spectrum(&hand_system(), 2.0, DEFAULT_RESONANCE_TOL);
        assert!(matches!(err, Err(Error::DirichletResonance { .. })));
    }

    #[test]
    fn multivalued_part_is_mb_orthogonal_to_range() {
        // J has rank 1 in a 2-dimensional K.
        let fs = FormSystem::new(
            diag(&[1.0, 2.0, 3.0]),
            diag(&[1.0, 1.0, 1.0]),
            Mat::from_fn(2, 3, |i, j| if j == 0 { 1.0 + i as f64 } else { 0.0 }),
            Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 0.5 }),
        )
        .unwrap();
        let r = dtn_spectrum(&fs, 0.3, DEFAULT_RESONANCE_TOL).unwrap();
        assert_eq!(r.eigenvalues.len(), 1);
        assert_eq!(r.multivalued_basis.ncols(), 1);
        let cross = r.eigenvectors.transpose() * fs.mb() * &r.multivalued_basis;
        assert!(cross[(0, 0)].abs() < 1e-13);
        let norm = r.multivalued_basis.transpose() * fs.mb() * &r.multivalued_basis;
        assert!((norm[(0, 0)] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn harmonic_extension_has_requested_trace() {
        let fs = hand_system();
        let op = DtnOperator::new(&fs).unwrap();
        let u = op.harmonic_extension(0.7, DEFAULT_RESONANCE_TOL, &[2.0]).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-14);
        assert!(u[1].abs() < 1e-14);
        let q = op.quadratic_form(0.7, DEFAULT_RESONANCE_TOL, &[2.0], &[2.0]).unwrap();
        assert!((q - 4.0 * 0.3).abs() < 1e-12);
    }
}
