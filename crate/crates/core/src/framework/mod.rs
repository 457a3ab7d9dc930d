//! Matrix realization of a form system `(a, i, j)`.
//!
//! A [`FormSystem`] stores the form matrix `A`, the Gram matrix `M` of the
//! embedding into `H`, the trace map `J: V → K` and the Gram matrix `Mb` of
//! `K`. From it we build the Neumann operator (pencil `(A, M)`), the
//! Dirichlet operator (the same pencil restricted to `ker J`), the Robin
//! family `A - μ JᵀMbJ` and the Dirichlet-to-Neumann graph `N_λ`.

mod checks;
mod dtn;

use std::sync::OnceLock;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Side};

pub use checks::{
    birman_schwinger_check, friedlander_check, resolvent_gap, robin_grid, robin_sweep, BsDirection, BsEntry,
    BirmanSchwingerReport, FriedlanderReport, RobinSweep, SweepViolation,
};
pub use dtn::{dtn_spectrum, DtnOperator, DtnResult, DEFAULT_RESONANCE_TOL};

use crate::error::{Error, Result};
use crate::linalg::{self, RankSplit, NULLSPACE_RTOL};

#[derive(Debug, Clone)]
pub struct FormSystem {
    a: Mat<f64>,
    m: Mat<f64>,
    j: Mat<f64>,
    mb: Mat<f64>,
    m_identity: bool,
    trace_split: OnceLock<RankSplit>,
    trace_rows: OnceLock<Mat<f64>>,
}

impl FormSystem {
    /// Validates shapes and symmetry. `A` and the Gram matrices are stored
    /// exactly symmetric.
    pub fn new(a: Mat<f64>, m: Mat<f64>, j: Mat<f64>, mb: Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::dim("form system needs n >= 1"));
        }
        if a.ncols() != n || m.nrows() != n || m.ncols() != n {
            return Err(Error::dim("A and M must be n x n"));
        }
        let k = mb.nrows();
        if mb.ncols() != k || j.nrows() != k || j.ncols() != n {
            return Err(Error::dim("J must be k x n and Mb k x k"));
        }
        for (name, mat) in [("A", &a), ("M", &m), ("Mb", &mb)] {
            if !linalg::is_symmetric(mat.as_ref(), 1e-10) {
                return Err(Error::dim(format!("{name} is not symmetric")));
            }
        }
        let m_identity = linalg::is_identity(m.as_ref());
        Ok(FormSystem {
            m_identity,
            trace_rows: OnceLock::new(),
            a: linalg::symmetrize(a.as_ref()),
            m: linalg::symmetrize(m.as_ref()),
            j,
            mb: linalg::symmetrize(mb.as_ref()),
            trace_split: OnceLock::new(),
        })
    }

    pub fn a(&self) -> MatRef<'_, f64> {
        self.a.as_ref()
    }

    pub fn m(&self) -> MatRef<'_, f64> {
        self.m.as_ref()
    }

    pub fn j(&self) -> MatRef<'_, f64> {
        self.j.as_ref()
    }

    pub fn mb(&self) -> MatRef<'_, f64> {
        self.mb.as_ref()
    }

    /// dim V.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// dim K.
    pub fn k(&self) -> usize {
        self.mb.nrows()
    }

    /// SVD of `J`, computed once.
    pub fn trace_split(&self) -> Result<&RankSplit> {
        if let Some(s) = self.trace_split.get() {
            return Ok(s);
        }
        let s = linalg::rank_split(self.j.as_ref(), NULLSPACE_RTOL)?;
        Ok(self.trace_split.get_or_init(|| s))
    }

    /// Orthonormal basis of the row space of `J` (thin SVD, computed once).
    pub fn trace_rows(&self) -> Result<&Mat<f64>> {
        if let Some(r) = self.trace_rows.get() {
            return Ok(r);
        }
        let r = match self.trace_split.get() {
            Some(s) => s.row_space.clone(),
            None => linalg::row_space(self.j.as_ref(), NULLSPACE_RTOL)?,
        };
        Ok(self.trace_rows.get_or_init(|| r))
    }

    /// `dim V_D`.
    pub fn dirichlet_dim(&self) -> Result<usize> {
        Ok(self.n() - self.trace_rows()?.ncols())
    }

    /// Whether `M` is exactly the identity (the basis of `V` is
    /// `H`-orthonormal).
    pub fn has_identity_mass(&self) -> bool {
        self.m_identity
    }

    /// Orthonormal basis of `V_D = ker J`.
    pub fn dirichlet_basis(&self) -> Result<&Mat<f64>> {
        Ok(&self.trace_split()?.null)
    }

    /// The same system in a new basis of `V`: `(PᵀAP, PᵀMP, JP, Mb)`.
    pub fn congruent(&self, p: MatRef<'_, f64>) -> Result<FormSystem> {
        if p.nrows() != self.n() {
            return Err(Error::dim("basis change has wrong row count"));
        }
        FormSystem::new(
            linalg::congruence(self.a(), p),
            linalg::congruence(self.m(), p),
            self.j() * p,
            self.mb.clone(),
        )
    }

    /// `A - μ JᵀMbJ`.
    pub fn robin_matrix(&self, mu: f64) -> Mat<f64> {
        let jt_mb_j = linalg::congruence(self.mb(), self.j());
        let mut out = self.a.clone();
        out -= faer::Scale(mu) * &jt_mb_j;
        out
    }

    /// `|Jx|_Mb`.
    pub fn trace_norm(&self, x: &[f64]) -> f64 {
        let jx = &self.j * linalg::col_from_slice(x);
        let jx: Vec<f64> = linalg::col_to_vec(jx.as_ref(), 0);
        linalg::bilinear(self.mb(), &jx, &jx).max(0.0).sqrt()
    }
}

/// Ascending eigenvalues with eigenvectors (columns) and relative residuals.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Mat<f64>,
    pub residuals: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        linalg::col_to_vec(self.eigenvectors.as_ref(), i)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    fn from_eig(r: linalg::DenseSymEigResult) -> Self {
        Spectrum {
            eigenvalues: r.eigenvalues,
            eigenvectors: r.eigenvectors,
            residuals: r.residuals,
        }
    }
}

fn gram_err(e: Error) -> Error {
    match e {
        Error::NotSpd => Error::GramNotPd,
        other => other,
    }
}

fn check_count(m: usize, available: usize) -> Result<()> {
    if m > available {
        return Err(Error::InsufficientEigenvalues {
            needed: m,
            available,
        });
    }
    Ok(())
}

/// First `m` eigenpairs of the Neumann operator: `A x = λ M x`.
pub fn neumann_spectrum(fs: &FormSystem, m: usize) -> Result<Spectrum> {
    check_count(m, fs.n())?;
    linalg::sym_generalized_eig(fs.a(), fs.m(), m)
        .map(Spectrum::from_eig)
        .map_err(gram_err)
}

/// First `m` eigenpairs of the Dirichlet operator, eigenvectors in `V`
/// coordinates.
pub fn dirichlet_spectrum(fs: &FormSystem, m: usize) -> Result<Spectrum> {
    let nd = fs.dirichlet_dim()?;
    if nd == 0 {
        return Err(Error::EmptyKernel);
    }
    check_count(m, nd)?;
    if fs.has_identity_mass() {
        return projected_dirichlet_spectrum(fs, m);
    }
    let z = fs.dirichlet_basis()?;
    let ad = linalg::congruence(fs.a(), z.as_ref());
    let md = linalg::congruence(fs.m(), z.as_ref());
    let r = linalg::sym_generalized_eig(ad.as_ref(), md.as_ref(), m).map_err(gram_err)?;
    let x = z * &r.eigenvectors;
    let residuals = linalg::pencil_residuals(ad.as_ref(), md.as_ref(), &r.eigenvalues, r.eigenvectors.as_ref());
    Ok(Spectrum {
        eigenvalues: r.eigenvalues,
        eigenvectors: x,
        residuals,
    })
}

/// All Dirichlet eigenvalues without vectors.
pub fn dirichlet_eigenvalues(fs: &FormSystem) -> Result<Vec<f64>> {
    let nd = fs.dirichlet_dim()?;
    if nd == 0 {
        return Err(Error::EmptyKernel);
    }
    if fs.has_identity_mass() {
        let shifted = shifted_projection(fs)?;
        let mut vals = shifted
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(format!("{e:?}")))?;
        vals.truncate(nd);
        return Ok(vals);
    }
    let z = fs.dirichlet_basis()?;
    let ad = linalg::congruence(fs.a(), z.as_ref());
    let md = linalg::congruence(fs.m(), z.as_ref());
    linalg::sym_generalized_eigenvalues(ad.as_ref(), md.as_ref()).map_err(gram_err)
}

/// With `M = I` and `R` an orthonormal basis of `range(Jᵀ)`, the matrix
/// `P A P + c R Rᵀ` (`P = I - R Rᵀ`) has the Dirichlet eigenvalues plus
/// `c` with multiplicity `rank J`. Choosing `c` above a Gershgorin bound of
/// `A` puts the spurious copies at the top. This costs a few rank-`r`
/// products instead of a full congruence with a nullspace basis.
fn shifted_projection(fs: &FormSystem) -> Result<Mat<f64>> {
    let r = fs.trace_rows()?;
    let a = fs.a();
    let mut out = a.to_owned();
    if r.ncols() == 0 {
        return Ok(out);
    }
    let c = 1.0
        + (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
    let ar = a * r;
    let mut k = r.transpose() * &ar;
    for i in 0..k.nrows() {
        k[(i, i)] += c;
    }
    // P A P + c R Rᵀ = A - R Yᵀ - Y Rᵀ with Y = A R - R K / 2
    let y = &ar - faer::Scale(0.5) * (r * &k);
    let par = faer::get_global_parallelism();
    matmul(out.as_mut(), Accum::Add, r.as_ref(), y.transpose(), -1.0, par);
    matmul(out.as_mut(), Accum::Add, y.as_ref(), r.transpose(), -1.0, par);
    Ok(out)
}

fn projected_dirichlet_spectrum(fs: &FormSystem, m: usize) -> Result<Spectrum> {
    let shifted = shifted_projection(fs)?;
    let evd = shifted
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = (0..m).map(|i| evd.S()[i]).collect();
    let x = evd.U().subcols(0, m).to_owned();
    // residual of the projected equation P(Ax - λx) = 0
    let r = fs.trace_rows()?;
    let mut res = fs.a() * &x;
    for (j, &lam) in eigenvalues.iter().enumerate() {
        for i in 0..res.nrows() {
            res[(i, j)] -= lam * x[(i, j)];
        }
    }
    let res = &res - r * (r.transpose() * &res);
    let an = fs.a().norm_l2();
    let residuals = eigenvalues
        .iter()
        .enumerate()
        .map(|(j, &lam)| res.col(j).norm_l2() / ((an + lam.abs()) * x.col(j).norm_l2()))
        .collect();
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: x,
        residuals,
    })
}

/// All Neumann eigenvalues without vectors.
pub fn neumann_eigenvalues(fs: &FormSystem) -> Result<Vec<f64>> {
    linalg::sym_generalized_eigenvalues(fs.a(), fs.m()).map_err(gram_err)
}

/// First `m` eigenpairs of the Robin operator `A_μ`.
///
/// For `μ < -1` the pencil is stiff (`‖A_μ‖ ~ |μ|`) and a direct solve would
/// lose the small eigenvalues to roundoff of order `ε|μ|`; those are
/// computed from the inverse instead, see [`stiff_robin_spectrum`].
pub fn robin_spectrum(fs: &FormSystem, mu: f64, m: usize) -> Result<Spectrum> {
    check_count(m, fs.n())?;
    if mu < -1.0 {
        // an indefinite form can make the shifted blocks fail to factor
        if let Ok(spectrum) = stiff_robin_spectrum(fs, mu, m) {
            return Ok(spectrum);
        }
    }
    let a_mu = fs.robin_matrix(mu);
    linalg::sym_generalized_eig(a_mu.as_ref(), fs.m(), m)
        .map(Spectrum::from_eig)
        .map_err(gram_err)
}

fn spd_inverse_apply(e: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let l = linalg::cholesky_lower(e).map_err(|_| Error::Solver("Robin block is not positive definite".into()))?;
    Ok(linalg::lower_transpose_solve(l.as_ref(), linalg::lower_solve(l.as_ref(), rhs).as_ref()))
}

/// Robin eigenpairs for `μ = -t`, `t > 1`.
///
/// In `M`-orthonormal coordinates split as `ker J ⊕ (ker J)^⊥`, the shifted
/// matrix `A_μ + sI` has blocks `[[X, Y], [Yᵀ, Z + tC]]` with `X, Y, Z, C`
/// independent of `t`. Its inverse follows from the Schur complement
/// `S = X - Y (Z + tC)⁻¹ Yᵀ` without cancellation, so the dominant
/// eigenvalues `κ = 1/(λ + s)` of the inverse, i.e. the small `λ`, keep full
/// absolute accuracy however large `t` is.
fn stiff_robin_spectrum(fs: &FormSystem, mu: f64, m: usize) -> Result<Spectrum> {
    let t = -mu;
    let shift = 1.0;
    let n = fs.n();
    let l = if fs.has_identity_mass() {
        None
    } else {
        Some(linalg::cholesky_lower(fs.m()).map_err(|_| Error::GramNotPd)?)
    };
    let (a, j) = match &l {
        None => (fs.a().to_owned(), fs.j().to_owned()),
        Some(l) => {
            let x = linalg::lower_solve(l.as_ref(), fs.a());
            let a = linalg::symmetrize(linalg::lower_solve(l.as_ref(), x.transpose()).as_ref());
            let j = linalg::lower_solve(l.as_ref(), fs.j().transpose()).transpose().to_owned();
            (a, j)
        }
    };
    let split = linalg::rank_split(j.as_ref(), NULLSPACE_RTOL)?;
    let (w, r) = (&split.null, &split.row_space);
    let (nw, nr) = (w.ncols(), r.ncols());

    let mut x = linalg::congruence(a.as_ref(), w.as_ref());
    let y = w.transpose() * (&a * r);
    let mut e = linalg::congruence(a.as_ref(), r.as_ref());
    let c = linalg::congruence(fs.mb(), (&j * r).as_ref());
    for i in 0..nw {
        x[(i, i)] += shift;
    }
    for i in 0..nr {
        for k in 0..nr {
            e[(i, k)] += t * c[(i, k)];
        }
        e[(i, i)] += shift;
    }
    let e_inv = spd_inverse_apply(e.as_ref(), Mat::<f64>::identity(nr, nr).as_ref())?;
    let g = &e_inv * y.transpose();
    let mut s = x;
    s -= &y * &g;
    let s = linalg::symmetrize(s.as_ref());
    let k11 = spd_inverse_apply(s.as_ref(), Mat::<f64>::identity(nw, nw).as_ref())?;
    let k12 = -(&k11 * g.transpose());
    let k22 = &e_inv + &g * (&k11 * g.transpose());
    let k = Mat::from_fn(n, n, |i, jj| match (i < nw, jj < nw) {
        (true, true) => k11[(i, jj)],
        (true, false) => k12[(i, jj - nw)],
        (false, true) => k12[(jj, i - nw)],
        (false, false) => k22[(i - nw, jj - nw)],
    });
    let k = linalg::symmetrize(k.as_ref());
    let evd = k
        .self_adjoint_eigen(Side::Lower)
        .map_err(|err| Error::Solver(format!("{err:?}")))?;
    let eigenvalues: Vec<f64> = (0..m).map(|i| 1.0 / evd.S()[n - 1 - i] - shift).collect();
    let q = Mat::from_fn(n, n, |i, jj| if jj < nw { w[(i, jj)] } else { r[(i, jj - nw)] });
    let v = Mat::from_fn(n, m, |i, jj| evd.U()[(i, n - 1 - jj)]);
    let y = &q * &v;
    let vectors = match &l {
        None => y,
        Some(l) => linalg::lower_transpose_solve(l.as_ref(), y.as_ref()),
    };
    let a_mu = fs.robin_matrix(mu);
    let residuals = linalg::pencil_residuals(a_mu.as_ref(), fs.m(), &eigenvalues, vectors.as_ref());
    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
        residuals,
    })
}
