use faer::Mat;

use super::{BoundaryCondition, DiscreteProblem, ProblemKind};
use crate::error::{Error, Result};
use crate::fem::{self, DofMap, ElementKind};
use crate::framework::{dirichlet_spectrum, neumann_spectrum};
use crate::linalg::{self, SymFactor};
use crate::mesh::{refine, Mesh};

const MAX_CONDITION: f64 = 1e12;

fn stokes_only(p: &DiscreteProblem) -> Result<(&crate::sparse::SparseMatrix, &DofMap)> {
    match (p.divergence(), p.pressure_dofs()) {
        (Some(b), Some(q)) => Ok((b, q)),
        _ => Err(Error::BadParameter("operation needs a stokes problem".into())),
    }
}

/// `(A - λM) u` on the full velocity space.
fn momentum(p: &DiscreteProblem, u: &[f64], lambda: f64) -> Vec<f64> {
    let au = p.form_matrix().mul_vec(u);
    let mu = p.mass().mul_vec(u);
    au.iter().zip(&mu).map(|(a, m)| a - lambda * m).collect()
}

/// Least-squares pressure `π` with `Bᵀπ ≈ (A - λM)u` on the test space: all
/// velocity dofs for Neumann, interior ones for Dirichlet. The Dirichlet
/// pressure is fixed to zero mean.
pub fn recover_pressure(p: &DiscreteProblem, u: &[f64], lambda: f64, bc: BoundaryCondition) -> Result<Vec<f64>> {
    let (b, pre) = stokes_only(p)?;
    if u.len() != p.num_dofs() {
        return Err(Error::dim("velocity has wrong length"));
    }
    let rows: Vec<usize> = match bc {
        BoundaryCondition::Neumann => (0..p.num_dofs()).collect(),
        BoundaryCondition::Dirichlet => p.velocity_dofs().interior_dofs(),
    };
    let all: Vec<usize> = (0..pre.num_nodes()).collect();
    let bt = b.submatrix(&all, &rows).to_dense();
    let r = momentum(p, u, lambda);
    let rt: Vec<f64> = rows.iter().map(|&i| r[i]).collect();

    let mut normal = linalg::symmetrize((&bt * bt.transpose()).as_ref());
    let rhs = &bt * linalg::col_from_slice(&rt);
    if bc == BoundaryCondition::Dirichlet {
        let m = fem::load_vector(p.mesh(), pre)?;
        let m2: f64 = m.iter().map(|x| x * x).sum();
        let s = normal.norm_max().max(f64::MIN_POSITIVE) / m2;
        normal += Mat::from_fn(m.len(), m.len(), |i, j| s * m[i] * m[j]);
    }
    let f = SymFactor::new(normal.as_ref())?;
    let min = f.min_abs();
    let condition = if min > 0.0 { f.max_abs() / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let pi = f.solve(rhs.as_ref(), 0.0)?;
    Ok(linalg::col_to_vec(pi.as_ref(), 0))
}

/// Boundary coefficients `F` of the weak normal derivative: the
/// Mb-representative of
/// `Φ ↦ a(u, Φ) - ∫ π div Φ - ∫ f · Φ` on boundary-nodal test fields.
pub fn weak_normal_derivative(p: &DiscreteProblem, u: &[f64], pi: &[f64], f: &[f64]) -> Result<Vec<f64>> {
    let n = p.num_dofs();
    if u.len() != n || f.len() != n {
        return Err(Error::dim("velocity and load need one value per dof"));
    }
    let mut g = p.form_matrix().mul_vec(u);
    let mf = p.mass().mul_vec(f);
    for (gi, m) in g.iter_mut().zip(&mf) {
        *gi -= m;
    }
    if let Some(b) = p.divergence() {
        if pi.len() != b.nrows() {
            return Err(Error::dim("pressure has wrong length"));
        }
        let btp = b.mul_transpose_vec(pi);
        for (gi, x) in g.iter_mut().zip(&btp) {
            *gi -= x;
        }
    }
    let gb = p.boundary().j.mul_vec(&g);
    p.mb_solve(&gb)
}

/// A Stokes eigenpair lifted to velocity and pressure coefficients.
#[derive(Debug, Clone)]
pub struct StokesEigenfunction {
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    /// `|(A - λM)u - Bᵀπ|` on the test space relative to `|(A - λM)u|`.
    pub momentum_residual: f64,
    /// `|Bu| / |u|`.
    pub divergence_residual: f64,
    /// `|F|_Mb / |u|_M` of the weak normal derivative on the same mesh.
    pub boundary_residual: f64,
}

/// The first `count` eigenfunctions with recovered pressures.
pub fn stokes_eigenfunctions(p: &DiscreteProblem, bc: BoundaryCondition, count: usize) -> Result<Vec<StokesEigenfunction>> {
    let (b, _) = stokes_only(p)?;
    let fs = p.form_system()?;
    let spectrum = match bc {
        BoundaryCondition::Neumann => neumann_spectrum(fs, count)?,
        BoundaryCondition::Dirichlet => dirichlet_spectrum(fs, count)?,
    };
    let interior = p.velocity_dofs().interior_dofs();
    (0..count)
        .map(|i| {
            let lambda = spectrum.eigenvalues[i];
            let u = p.to_fem(&spectrum.vector(i))?;
            let pi = recover_pressure(p, &u, lambda, bc)?;
            let r = momentum(p, &u, lambda);
            let btp = b.mul_transpose_vec(&pi);
            let rows: Vec<usize> = match bc {
                BoundaryCondition::Neumann => (0..u.len()).collect(),
                BoundaryCondition::Dirichlet => interior.clone(),
            };
            let num = rows.iter().map(|&k| (r[k] - btp[k]).powi(2)).sum::<f64>().sqrt();
            let den = rows.iter().map(|&k| r[k].powi(2)).sum::<f64>().sqrt();
            let f: Vec<f64> = u.iter().map(|x| lambda * x).collect();
            let fnd = weak_normal_derivative(p, &u, &pi, &f)?;
            let unorm = p.mass().form(&u, &u).sqrt();
            Ok(StokesEigenfunction {
                lambda,
                bc,
                momentum_residual: if den > 0.0 { num / den } else { num },
                divergence_residual: linalg::norm(&b.mul_vec(&u)) / linalg::norm(&u),
                boundary_residual: p.boundary_norm(&fnd) / unorm,
                u,
                pi,
            })
        })
        .collect()
}

/// Natural-boundary residual of a Neumann pair `(u, π)` measured with test
/// fields from the red-refined mesh.
///
/// On its own mesh a discrete Neumann eigenpair satisfies the weak
/// boundary condition exactly, so the residual is evaluated after
/// prolongation to the refined spaces, where it measures how far the pair
/// is from satisfying the continuous condition.
pub fn natural_boundary_residual(p: &DiscreteProblem, ef: &StokesEigenfunction) -> Result<f64> {
    let (_, pre) = stokes_only(p)?;
    if p.element() != ElementKind::P2 {
        return Err(Error::BadParameter("refined residual needs the P2 velocity".into()));
    }
    let coarse: &Mesh = p.mesh();
    let fine_mesh = refine(coarse);
    let fine = super::assemble_stokes(&fine_mesh, p.alpha())?;
    let u = fem::prolongate(coarse, p.velocity_dofs(), &fine_mesh, fine.velocity_dofs(), &ef.u)?;
    let fine_pre = fine.pressure_dofs().expect("stokes");
    let pi = fem::prolongate(coarse, pre, &fine_mesh, fine_pre, &ef.pi)?;
    let f: Vec<f64> = u.iter().map(|x| ef.lambda * x).collect();
    let fnd = weak_normal_derivative(&fine, &u, &pi, &f)?;
    let unorm = fine.mass().form(&u, &u).sqrt();
    Ok(fine.boundary_norm(&fnd) / unorm)
}

/// Minimum-norm divergence-free extension of a boundary trace.
#[derive(Debug, Clone)]
pub struct Extension {
    pub u: Vec<f64>,
    /// `|Bu| / |u|`.
    pub divergence_residual: f64,
    /// `|Ju - φ| / |φ|`.
    pub trace_residual: f64,
}

/// The field `u` of least `H¹` norm with `Bu = 0` and `Ju = φ`.
pub fn divergence_free_extension(p: &DiscreteProblem, phi: &[f64]) -> Result<Extension> {
    let fs = p.form_system()?;
    if phi.len() != fs.k() {
        return Err(Error::dim("trace has wrong length"));
    }
    let norm = p.boundary_norm(phi);
    if p.kind() == ProblemKind::Stokes {
        let flux = p.flux(phi);
        if flux.abs() > 1e-8 * norm {
            return Err(Error::FluxNotZero { flux });
        }
    }
    let split = fs.trace_split()?;
    // particular solution through the pseudoinverse of JZ
    let c = split.range.transpose() * linalg::col_from_slice(phi);
    let yp = Mat::from_fn(split.rank, 1, |i, _| c[(i, 0)] / split.sigma[i]);
    let yp = &split.row_space * &yp;

    let h1 = p.stiffness().add_scaled(1.0, p.mass());
    let (h, n) = match p.basis()? {
        None => (h1.to_dense(), split.null.clone()),
        Some(z) => {
            let hz = h1.mul_dense(z.as_ref());
            (linalg::symmetrize((z.transpose() * &hz).as_ref()), split.null.clone())
        }
    };
    let y = if n.ncols() > 0 {
        let nhn = linalg::congruence(h.as_ref(), n.as_ref());
        let rhs = -(n.transpose() * (&h * &yp));
        let l = linalg::cholesky_lower(nhn.as_ref())?;
        let z = linalg::lower_transpose_solve(l.as_ref(), linalg::lower_solve(l.as_ref(), rhs.as_ref()).as_ref());
        &yp + &n * &z
    } else {
        yp
    };
    let u = p.to_fem(&linalg::col_to_vec(y.as_ref(), 0))?;
    let unorm = linalg::norm(&u).max(f64::MIN_POSITIVE);
    let divergence_residual = p.divergence().map_or(0.0, |b| linalg::norm(&b.mul_vec(&u)) / unorm);
    let ju = p.boundary().j.mul_vec(&u);
    let diff: Vec<f64> = ju.iter().zip(phi).map(|(a, b)| a - b).collect();
    let trace_residual = linalg::norm(&diff) / linalg::norm(phi).max(f64::MIN_POSITIVE);
    Ok(Extension {
        u,
        divergence_residual,
        trace_residual,
    })
}
