//! The scalar Laplacian and the Stokes operators as form systems.
//!
//! A [`DiscreteProblem`] keeps its sparse finite-element matrices and builds
//! the dense reduced [`FormSystem`] lazily. For Stokes, `V` is the discrete
//! divergence-free subspace `ker B` of the velocity space, represented by an
//! orthonormal basis `Z`; all form-system vectors are `Z`-coordinates.

mod helmholtz;
mod pressure;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{self, BoundaryData, DofMap, ElementKind};
use crate::framework::FormSystem;
use crate::linalg::{self, NULLSPACE_RTOL};
use crate::mesh::Mesh;
use crate::sparse::{SparseMatrix, SparseSymMatrix};

pub use helmholtz::{helmholtz_project_sigma, helmholtz_project_v, HelmholtzProjector};
pub use pressure::{
    divergence_free_extension, natural_boundary_residual, recover_pressure, stokes_eigenfunctions,
    weak_normal_derivative, Extension, StokesEigenfunction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Laplacian,
    Stokes,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Laplacian => "laplacian",
            ProblemKind::Stokes => "stokes",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" | "laplace" => Ok(ProblemKind::Laplacian),
            "stokes" => Ok(ProblemKind::Stokes),
            other => Err(Error::BadParameter(format!("unknown problem kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet" | "D" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "N" => Ok(BoundaryCondition::Neumann),
            other => Err(Error::BadParameter(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// Parts that do not depend on `α`, shared between problems built from the
/// same assembly.
#[derive(Debug)]
struct Shared {
    kind: ProblemKind,
    mesh: Mesh,
    velocity: DofMap,
    pressure: Option<DofMap>,
    stiffness: SparseSymMatrix,
    transpose: Option<SparseSymMatrix>,
    mass: SparseSymMatrix,
    divergence: Option<SparseMatrix>,
    boundary: BoundaryData,
    basis: OnceLock<Mat<f64>>,
    reduced_mass: OnceLock<Mat<f64>>,
    reduced_trace: OnceLock<Mat<f64>>,
}

#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    shared: Arc<Shared>,
    alpha: f64,
    form: SparseSymMatrix,
    system: Arc<OnceLock<FormSystem>>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > -1.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::BadAlpha(alpha))
    }
}

/// Scalar P2 Laplacian: `V = P2`, `K = P2 traces`.
pub fn assemble_laplacian(mesh: &Mesh) -> Result<DiscreteProblem> {
    let velocity = DofMap::new(mesh, ElementKind::P2, 1)?;
    let stiffness = fem::stiffness(mesh, &velocity)?;
    let mass = fem::mass(mesh, &velocity)?;
    let boundary = fem::boundary_data(mesh, &velocity)?;
    Ok(DiscreteProblem {
        alpha: 0.0,
        form: stiffness.clone(),
        system: Arc::new(OnceLock::new()),
        shared: Arc::new(Shared {
            kind: ProblemKind::Laplacian,
            mesh: mesh.clone(),
            velocity,
            pressure: None,
            stiffness,
            transpose: None,
            mass,
            divergence: None,
            boundary,
            basis: OnceLock::new(),
            reduced_mass: OnceLock::new(),
            reduced_trace: OnceLock::new(),
        }),
    })
}

/// [`assemble_laplacian`] with the dense form system built eagerly.
pub fn build_laplacian(mesh: &Mesh) -> Result<DiscreteProblem> {
    let p = assemble_laplacian(mesh)?;
    p.form_system()?;
    Ok(p)
}

fn assemble_stokes_with(mesh: &Mesh, alpha: f64, element: ElementKind) -> Result<DiscreteProblem> {
    check_alpha(alpha)?;
    let velocity = DofMap::new(mesh, element, 2)?;
    let pressure = DofMap::new(mesh, ElementKind::P1, 1)?;
    let stiffness = fem::stiffness(mesh, &velocity)?;
    let transpose = fem::transpose_gradient_form(mesh, &velocity)?;
    let mass = fem::mass(mesh, &velocity)?;
    let divergence = fem::divergence(mesh, &velocity, &pressure)?;
    let boundary = fem::boundary_data(mesh, &velocity)?;
    let form = stiffness.add_scaled(alpha, &transpose);
    Ok(DiscreteProblem {
        alpha,
        form,
        system: Arc::new(OnceLock::new()),
        shared: Arc::new(Shared {
            kind: ProblemKind::Stokes,
            mesh: mesh.clone(),
            velocity,
            pressure: Some(pressure),
            stiffness,
            transpose: Some(transpose),
            mass,
            divergence: Some(divergence),
            boundary,
            basis: OnceLock::new(),
            reduced_mass: OnceLock::new(),
            reduced_trace: OnceLock::new(),
        }),
    })
}

/// Taylor–Hood (P2 velocity, P1 pressure) Stokes problem with form
/// `∫ ∇u:∇v + α ∫ (∇u)ᵀ:∇v`. Only sparse matrices are assembled.
pub fn assemble_stokes(mesh: &Mesh, alpha: f64) -> Result<DiscreteProblem> {
    assemble_stokes_with(mesh, alpha, ElementKind::P2)
}

/// [`assemble_stokes`] with the divergence-free reduction done eagerly and
/// the trace-rank invariant checked.
pub fn build_stokes(mesh: &Mesh, alpha: f64) -> Result<DiscreteProblem> {
    let p = assemble_stokes(mesh, alpha)?;
    p.form_system()?;
    p.check_trace_rank()?;
    Ok(p)
}

/// The same Stokes problem on the MINI element (P1 plus cubic bubble
/// velocity, P1 pressure); an independent discretization for cross-checks.
pub fn build_stokes_oracle_mini(mesh: &Mesh, alpha: f64) -> Result<DiscreteProblem> {
    let p = assemble_stokes_with(mesh, alpha, ElementKind::Mini)?;
    p.form_system()?;
    p.check_trace_rank()?;
    Ok(p)
}

/// Problem of the given kind; `alpha` is ignored for the Laplacian.
pub fn assemble(mesh: &Mesh, kind: ProblemKind, alpha: f64) -> Result<DiscreteProblem> {
    match kind {
        ProblemKind::Laplacian => assemble_laplacian(mesh),
        ProblemKind::Stokes => assemble_stokes(mesh, alpha),
    }
}

impl DiscreteProblem {
    /// The same assembly with another `α`; the divergence-free basis and the
    /// reduced mass are shared.
    pub fn with_alpha(&self, alpha: f64) -> Result<DiscreteProblem> {
        check_alpha(alpha)?;
        let transpose = self
            .shared
            .transpose
            .as_ref()
            .ok_or_else(|| Error::BadParameter("alpha only applies to stokes".into()))?;
        Ok(DiscreteProblem {
            shared: Arc::clone(&self.shared),
            alpha,
            form: self.shared.stiffness.add_scaled(alpha, transpose),
            system: Arc::new(OnceLock::new()),
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.shared.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn element(&self) -> ElementKind {
        self.shared.velocity.kind()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.shared.mesh
    }

    pub fn velocity_dofs(&self) -> &DofMap {
        &self.shared.velocity
    }

    pub fn pressure_dofs(&self) -> Option<&DofMap> {
        self.shared.pressure.as_ref()
    }

    /// Sparse matrix of the form `a` on the full velocity space.
    pub fn form_matrix(&self) -> &SparseSymMatrix {
        &self.form
    }

    /// `∫ ∇u:∇v` alone.
    pub fn stiffness(&self) -> &SparseSymMatrix {
        &self.shared.stiffness
    }

    pub fn mass(&self) -> &SparseSymMatrix {
        &self.shared.mass
    }

    /// `B[q, u] = ∫ q div u` (Stokes only).
    pub fn divergence(&self) -> Option<&SparseMatrix> {
        self.shared.divergence.as_ref()
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.shared.boundary
    }

    /// Number of finite-element velocity dofs.
    pub fn num_dofs(&self) -> usize {
        self.shared.velocity.num_dofs()
    }

    /// Basis of `ker B`, orthonormal in the mass inner product (identity
    /// for the Laplacian, returned as `None`). The reduced mass matrix is
    /// then exactly the identity.
    pub fn basis(&self) -> Result<Option<&Mat<f64>>> {
        let Some(b) = &self.shared.divergence else {
            return Ok(None);
        };
        if let Some(z) = self.shared.basis.get() {
            return Ok(Some(z));
        }
        let z0 = linalg::nullspace(b.to_dense().as_ref(), NULLSPACE_RTOL)?;
        let gram = linalg::symmetrize((z0.transpose() * self.shared.mass.mul_dense(z0.as_ref())).as_ref());
        let l = linalg::cholesky_lower(gram.as_ref()).map_err(|_| Error::GramNotPd)?;
        // Z = Z0 L⁻ᵀ, so that ZᵀMZ = L⁻¹ (Z0ᵀMZ0) L⁻ᵀ = I
        let z = linalg::lower_solve(l.as_ref(), z0.transpose()).transpose().to_owned();
        Ok(Some(self.shared.basis.get_or_init(|| z)))
    }

    fn reduce(&self, m: &SparseSymMatrix) -> Result<Mat<f64>> {
        Ok(match self.basis()? {
            None => m.to_dense(),
            Some(z) => {
                let mz = m.mul_dense(z.as_ref());
                linalg::symmetrize((z.transpose() * &mz).as_ref())
            }
        })
    }

    /// The form system `(ZᵀAZ, ZᵀMZ, JZ, Mb)`, built on first use.
    pub fn form_system(&self) -> Result<&FormSystem> {
        if let Some(fs) = self.system.get() {
            return Ok(fs);
        }
        let sh = &self.shared;
        let a = self.reduce(&self.form)?;
        if sh.reduced_mass.get().is_none() {
            let m = match self.basis()? {
                None => sh.mass.to_dense(),
                Some(z) => Mat::identity(z.ncols(), z.ncols()),
            };
            let _ = sh.reduced_mass.set(m);
        }
        if sh.reduced_trace.get().is_none() {
            let j = match self.basis()? {
                None => sh.boundary.j.to_dense(),
                Some(z) => sh.boundary.j.mul_dense(z.as_ref()),
            };
            let _ = sh.reduced_trace.set(j);
        }
        let fs = FormSystem::new(
            a,
            sh.reduced_mass.get().expect("set above").clone(),
            sh.reduced_trace.get().expect("set above").clone(),
            sh.boundary.mb.to_dense(),
        )?;
        Ok(self.system.get_or_init(|| fs))
    }

    /// Whether the dense form system has been built.
    pub fn is_reduced(&self) -> bool {
        self.system.get().is_some()
    }

    /// Maps form-system coordinates to finite-element coefficients.
    pub fn to_fem(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self.basis()? {
            None => Ok(y.to_vec()),
            Some(z) => {
                if y.len() != z.ncols() {
                    return Err(Error::dim("coordinate vector has wrong length"));
                }
                Ok(linalg::col_to_vec((z * linalg::col_from_slice(y)).as_ref(), 0))
            }
        }
    }

    /// Maps finite-element coefficients to form-system coordinates by the
    /// mass-orthogonal projection onto `ker B` (exact for fields in it).
    pub fn from_fem(&self, u: &[f64]) -> Result<Vec<f64>> {
        match self.basis()? {
            None => Ok(u.to_vec()),
            Some(z) => {
                if u.len() != z.nrows() {
                    return Err(Error::dim("coefficient vector has wrong length"));
                }
                let mu = self.shared.mass.mul_vec(u);
                Ok(linalg::col_to_vec((z.transpose() * linalg::col_from_slice(&mu)).as_ref(), 0))
            }
        }
    }

    /// `rank(J Z)` together with the number of boundary dofs.
    pub fn trace_rank(&self) -> Result<(usize, usize)> {
        let fs = self.form_system()?;
        Ok((fs.trace_split()?.rank, fs.k()))
    }

    /// For Stokes the traces of divergence-free fields are exactly the
    /// zero-flux boundary fields, so `rank(JZ) = k - 1`.
    pub fn check_trace_rank(&self) -> Result<()> {
        let (rank, k) = self.trace_rank()?;
        let expected = match self.kind() {
            ProblemKind::Laplacian => k,
            ProblemKind::Stokes => k - 1,
        };
        if rank != expected {
            return Err(Error::TraceRank { expected, found: rank });
        }
        Ok(())
    }

    /// `wᵀφ = ∫_∂Ω φ · ν` for a boundary vector field.
    pub fn flux(&self, phi: &[f64]) -> f64 {
        self.shared.boundary.nu_flux.iter().zip(phi).map(|(w, p)| w * p).sum()
    }

    /// `Mb⁻¹ w`: the Riesz representative of the flux functional.
    pub fn nu_riesz(&self) -> Result<Vec<f64>> {
        self.mb_solve(&self.shared.boundary.nu_flux)
    }

    pub(crate) fn mb_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mb = self.shared.boundary.mb.to_dense();
        let l = linalg::cholesky_lower(mb.as_ref())?;
        let x = linalg::lower_transpose_solve(
            l.as_ref(),
            linalg::lower_solve(l.as_ref(), linalg::col_from_slice(rhs).as_ref()).as_ref(),
        );
        Ok(linalg::col_to_vec(x.as_ref(), 0))
    }

    /// `‖φ‖_Mb` for a boundary vector.
    pub fn boundary_norm(&self, phi: &[f64]) -> f64 {
        self.shared.boundary.mb.form(phi, phi).max(0.0).sqrt()
    }

    /// Boundary interpolant of the piecewise normal: on each edge the
    /// normal component is 1; at a corner the value has unit normal
    /// component with respect to both adjacent edges.
    pub fn normal_interpolant(&self) -> Result<Vec<f64>> {
        if self.kind() != ProblemKind::Stokes {
            return Err(Error::BadParameter("normal interpolant needs a vector field".into()));
        }
        let mesh = self.mesh();
        let dm = &self.shared.velocity;
        let bnodes = dm.boundary_nodes();
        let nb = bnodes.len();
        let mut normals: Vec<Vec<[f64; 2]>> = vec![Vec::new(); dm.num_nodes()];
        for (e, nodes) in dm.boundary_edge_nodes().iter().enumerate() {
            for &n in nodes {
                normals[n].push(mesh.normals()[e]);
            }
        }
        let mut phi = vec![0.0; 2 * nb];
        for (k, &node) in bnodes.iter().enumerate() {
            let ns = &normals[node];
            let n1 = ns[0];
            let v = match ns.get(1) {
                Some(&n2) if (n1[0] * n2[1] - n1[1] * n2[0]).abs() > 1e-12 => {
                    let det = n1[0] * n2[1] - n1[1] * n2[0];
                    [(n2[1] - n1[1]) / det, (n1[0] - n2[0]) / det]
                }
                _ => n1,
            };
            phi[k] = v[0];
            phi[nb + k] = v[1];
        }
        Ok(phi)
    }
}
