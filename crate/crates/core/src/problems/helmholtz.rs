use faer::Mat;

use crate::error::{Error, Result};
use crate::fem::{self, DofMap, ElementKind};
use crate::linalg;
use crate::mesh::Mesh;

/// Discrete Helmholtz decompositions of P2 vector fields.
///
/// The gradient of a P2 scalar `π` is represented by its M-orthogonal
/// projection `M⁻¹Gᵀπ` into the vector space, where `G[q, u] = ∫ ∇q · u`.
/// Both projections are M-orthogonal: `f - P f` is a discrete gradient and
/// `P f` is M-orthogonal to every discrete gradient of the admissible
/// potentials (all of P2 for the σ-projection, P2 with zero boundary values
/// for the V-projection).
#[derive(Debug, Clone)]
pub struct HelmholtzProjector {
    velocity: DofMap,
    scalar: DofMap,
    mass: Mat<f64>,
    /// `M⁻¹Gᵀ`, one column per scalar node.
    gradients: Mat<f64>,
    g: Mat<f64>,
}

fn cholesky_solve(l: &Mat<f64>, rhs: &Mat<f64>) -> Mat<f64> {
    linalg::lower_transpose_solve(l.as_ref(), linalg::lower_solve(l.as_ref(), rhs.as_ref()).as_ref())
}

impl HelmholtzProjector {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let velocity = DofMap::new(mesh, ElementKind::P2, 2)?;
        let scalar = velocity.with_components(1);
        let mass = fem::mass(mesh, &velocity)?.to_dense();
        let g = fem::gradient_coupling(mesh, &velocity, &scalar)?.to_dense();
        let l = linalg::cholesky_lower(mass.as_ref())?;
        let gradients = cholesky_solve(&l, &g.transpose().to_owned());
        Ok(HelmholtzProjector {
            velocity,
            scalar,
            mass,
            gradients,
            g,
        })
    }

    pub fn velocity_dofs(&self) -> &DofMap {
        &self.velocity
    }

    /// `(x, y)_M`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        linalg::bilinear(self.mass.as_ref(), x, y)
    }

    /// The discrete gradient `M⁻¹Gᵀπ` of a P2 scalar.
    pub fn gradient(&self, pi: &[f64]) -> Vec<f64> {
        linalg::col_to_vec((&self.gradients * linalg::col_from_slice(pi)).as_ref(), 0)
    }

    /// Discrete gradient of the P2 hat function of scalar node `j`.
    pub fn gradient_of_node(&self, j: usize) -> Vec<f64> {
        linalg::col_to_vec(self.gradients.as_ref(), j)
    }

    /// Scalar nodes off the boundary.
    pub fn interior_scalar_nodes(&self) -> Vec<usize> {
        self.scalar.interior_dofs()
    }

    fn project(&self, f: &[f64], nodes: &[usize], pin_constant: bool) -> Result<Vec<f64>> {
        if f.len() != self.velocity.num_dofs() {
            return Err(Error::dim("field has wrong length"));
        }
        let w = Mat::from_fn(self.gradients.nrows(), nodes.len(), |i, j| self.gradients[(i, nodes[j])]);
        let g = Mat::from_fn(nodes.len(), self.g.ncols(), |i, j| self.g[(nodes[i], j)]);
        let mut s = linalg::symmetrize((&g * &w).as_ref());
        if pin_constant {
            // Gᵀ1 = 0: fix the additive constant of the potential
            let scale = s.norm_max() / nodes.len() as f64;
            s += Mat::from_fn(nodes.len(), nodes.len(), |_, _| scale);
        }
        let rhs = &g * linalg::col_from_slice(f);
        let l = linalg::cholesky_lower(s.as_ref())?;
        let pi = cholesky_solve(&l, &rhs);
        let grad = &w * &pi;
        Ok(f.iter().enumerate().map(|(i, x)| x - grad[(i, 0)]).collect())
    }

    /// Projection onto fields orthogonal to all discrete gradients.
    pub fn project_sigma(&self, f: &[f64]) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..self.scalar.num_nodes()).collect();
        self.project(f, &all, true)
    }

    /// Projection onto fields orthogonal to gradients of potentials
    /// vanishing on the boundary.
    pub fn project_v(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.project(f, &self.interior_scalar_nodes(), false)
    }
}

/// One-shot [`HelmholtzProjector::project_sigma`].
pub fn helmholtz_project_sigma(mesh: &Mesh, f: &[f64]) -> Result<Vec<f64>> {
    HelmholtzProjector::new(mesh)?.project_sigma(f)
}

/// One-shot [`HelmholtzProjector::project_v`].
pub fn helmholtz_project_v(mesh: &Mesh, f: &[f64]) -> Result<Vec<f64>> {
    HelmholtzProjector::new(mesh)?.project_v(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Domain};

    #[test]
    fn gradient_fields_project_to_zero() {
        let mesh = generate(Domain::Square, 0.25, None).unwrap();
        let h = HelmholtzProjector::new(&mesh).unwrap();
        let f = h.velocity_dofs().interpolate(|_| [1.0, 0.0]);
        let p = h.project_sigma(&f).unwrap();
        assert!(h.inner(&p, &p).sqrt() <= 1e-8 * h.inner(&f, &f).sqrt());
        let pv = h.project_v(&f).unwrap();
        assert!(h.inner(&pv, &pv).sqrt() > 1e-3);
        let j = h.interior_scalar_nodes()[3];
        let bubble = h.gradient_of_node(j);
        let pb = h.project_v(&bubble).unwrap();
        assert!(h.inner(&pb, &pb).sqrt() <= 1e-8 * h.inner(&bubble, &bubble).sqrt());
    }
}
