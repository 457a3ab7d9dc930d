use super::quadrature::{gauss_unit, TriangleRule};
use super::{local_basis, DofMap, Geometry, LocalBasis};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{SparseMatrix, SparseSymMatrix, TripletBuilder};

/// Degree 6 covers every product assembled here, including the cubic
/// bubble mass.
fn rule() -> TriangleRule {
    TriangleRule::degree6()
}

fn check(mesh: &Mesh, dm: &DofMap) -> Result<()> {
    if dm.num_cells() != mesh.num_triangles() {
        return Err(Error::dim(format!(
            "dof map has {} cells, mesh has {} triangles",
            dm.num_cells(),
            mesh.num_triangles()
        )));
    }
    Ok(())
}

/// Calls `f(cell, weight, basis)` at every quadrature point.
fn for_each_point(mesh: &Mesh, dm: &DofMap, mut f: impl FnMut(&[usize], f64, &LocalBasis)) {
    let rule = rule();
    for t in 0..mesh.num_triangles() {
        let g = Geometry::new(mesh.triangle_coords(t));
        let cell = dm.cell(t);
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let b = local_basis(dm.kind(), *lam, &g.grads);
            f(cell, w * g.area, &b);
        }
    }
}

fn scalar_form(mesh: &Mesh, dm: &DofMap, kernel: impl Fn(&LocalBasis, usize, usize) -> f64) -> Result<SparseSymMatrix> {
    check(mesh, dm)?;
    let n = dm.num_nodes();
    let c = dm.components();
    let mut tb = TripletBuilder::new(c * n, c * n);
    for_each_point(mesh, dm, |cell, w, b| {
        for (i, &gi) in cell.iter().enumerate() {
            for (j, &gj) in cell.iter().enumerate() {
                let v = w * kernel(b, i, j);
                for comp in 0..c {
                    tb.add(comp * n + gi, comp * n + gj, v);
                }
            }
        }
    });
    SparseSymMatrix::new(tb.build())
}

/// `∫ ∇u : ∇v`, block diagonal over components.
pub fn stiffness(mesh: &Mesh, dm: &DofMap) -> Result<SparseSymMatrix> {
    scalar_form(mesh, dm, |b, i, j| {
        b.grads[i][0] * b.grads[j][0] + b.grads[i][1] * b.grads[j][1]
    })
}

/// `∫ u · v`.
pub fn mass(mesh: &Mesh, dm: &DofMap) -> Result<SparseSymMatrix> {
    scalar_form(mesh, dm, |b, i, j| b.values[i] * b.values[j])
}

/// `∫ (∇u)ᵀ : ∇v = ∫ Σ ∂_b u_a ∂_a v_b` on two-component fields.
pub fn transpose_gradient_form(mesh: &Mesh, dm: &DofMap) -> Result<SparseSymMatrix> {
    check(mesh, dm)?;
    if dm.components() != 2 {
        return Err(Error::dim("transpose gradient form needs a vector dof map"));
    }
    let n = dm.num_nodes();
    let mut tb = TripletBuilder::new(2 * n, 2 * n);
    for_each_point(mesh, dm, |cell, w, b| {
        for (i, &gi) in cell.iter().enumerate() {
            for (j, &gj) in cell.iter().enumerate() {
                // trial φ_i e_a, test φ_j e_bb
                for a in 0..2 {
                    for bb in 0..2 {
                        let v = w * b.grads[i][bb] * b.grads[j][a];
                        tb.add(bb * n + gj, a * n + gi, v);
                    }
                }
            }
        }
    });
    SparseSymMatrix::new(tb.build())
}

fn mixed(
    mesh: &Mesh,
    vel: &DofMap,
    pre: &DofMap,
    kernel: impl Fn(&LocalBasis, &LocalBasis, usize, usize, usize) -> f64,
) -> Result<SparseMatrix> {
    check(mesh, vel)?;
    check(mesh, pre)?;
    if vel.components() != 2 || pre.components() != 1 {
        return Err(Error::dim("mixed forms need vector velocity and scalar pressure"));
    }
    let rule = rule();
    let (nv, np) = (vel.num_nodes(), pre.num_nodes());
    let mut tb = TripletBuilder::new(np, 2 * nv);
    for t in 0..mesh.num_triangles() {
        let g = Geometry::new(mesh.triangle_coords(t));
        for (lam, w) in rule.points.iter().zip(&rule.weights) {
            let bu = local_basis(vel.kind(), *lam, &g.grads);
            let bq = local_basis(pre.kind(), *lam, &g.grads);
            for (q, &gq) in pre.cell(t).iter().enumerate() {
                for (i, &gi) in vel.cell(t).iter().enumerate() {
                    for a in 0..2 {
                        tb.add(gq, a * nv + gi, w * g.area * kernel(&bu, &bq, i, q, a));
                    }
                }
            }
        }
    }
    Ok(tb.build())
}

/// `B[q, u] = ∫ q div u`.
pub fn divergence(mesh: &Mesh, vel: &DofMap, pre: &DofMap) -> Result<SparseMatrix> {
    mixed(mesh, vel, pre, |bu, bq, i, q, a| bq.values[q] * bu.grads[i][a])
}

/// `G[q, u] = ∫ ∇q · u`.
pub fn gradient_coupling(mesh: &Mesh, vel: &DofMap, pre: &DofMap) -> Result<SparseMatrix> {
    mixed(mesh, vel, pre, |bu, bq, i, q, a| bq.grads[q][a] * bu.values[i])
}

/// `∫ φ_i` per scalar node.
pub fn load_vector(mesh: &Mesh, dm: &DofMap) -> Result<Vec<f64>> {
    check(mesh, dm)?;
    let mut out = vec![0.0; dm.num_nodes()];
    for_each_point(mesh, dm, |cell, w, b| {
        for (i, &gi) in cell.iter().enumerate() {
            out[gi] += w * b.values[i];
        }
    });
    Ok(out)
}

/// Trace selection, boundary Gram matrix and normal-flux functional.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    /// `k × n` selection of boundary dofs.
    pub j: SparseMatrix,
    /// `L₂(∂Ω)` Gram matrix on boundary dofs.
    pub mb: SparseSymMatrix,
    /// `wᵀφ = ∫_∂Ω φ · ν`; empty for scalar fields.
    pub nu_flux: Vec<f64>,
}

/// 1D Lagrange basis on an edge in the order `(start, end[, mid])`.
fn edge_basis(nodes: usize, s: f64) -> [f64; 3] {
    if nodes == 2 {
        [1.0 - s, s, 0.0]
    } else {
        [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)]
    }
}

pub fn boundary_data(mesh: &Mesh, dm: &DofMap) -> Result<BoundaryData> {
    if dm.boundary_edge_nodes().len() != mesh.boundary_edges().len() {
        return Err(Error::dim("dof map does not match the mesh boundary"));
    }
    let n = dm.num_nodes();
    let c = dm.components();
    let bnodes = dm.boundary_nodes();
    let nb = bnodes.len();
    let mut local = vec![usize::MAX; n];
    for (k, &i) in bnodes.iter().enumerate() {
        local[i] = k;
    }

    let mut jb = TripletBuilder::new(c * nb, c * n);
    for comp in 0..c {
        for (k, &i) in bnodes.iter().enumerate() {
            jb.add(comp * nb + k, comp * n + i, 1.0);
        }
    }

    let (xs, ws) = gauss_unit(3);
    let mut mb = TripletBuilder::new(c * nb, c * nb);
    let mut nu_flux = if c == 2 { vec![0.0; 2 * nb] } else { vec![] };
    for (e, nodes) in dm.boundary_edge_nodes().iter().enumerate() {
        let len = mesh.edge_length(e);
        let nu = mesh.normals()[e];
        let p = nodes.len();
        for (s, w) in xs.iter().zip(&ws) {
            let phi = edge_basis(p, *s);
            for a in 0..p {
                let ia = local[nodes[a]];
                if c == 2 {
                    for comp in 0..2 {
                        nu_flux[comp * nb + ia] += w * len * phi[a] * nu[comp];
                    }
                }
                for b in 0..p {
                    let v = w * len * phi[a] * phi[b];
                    for comp in 0..c {
                        mb.add(comp * nb + ia, comp * nb + local[nodes[b]], v);
                    }
                }
            }
        }
    }
    Ok(BoundaryData {
        j: jb.build(),
        mb: SparseSymMatrix::new(mb.build())?,
        nu_flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::ElementKind;
    use crate::linalg;
    use crate::mesh::{generate, Domain};

    fn right_triangle() -> Mesh {
        Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    #[test]
    fn p1_reference_matrices() {
        let m = right_triangle();
        let dm = DofMap::new(&m, ElementKind::P1, 1).unwrap();
        let k = stiffness(&m, &dm).unwrap().to_dense();
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let mm = mass(&m, &dm).unwrap().to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)] - expect[i][j]).abs() < 1e-14);
                let e = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((mm[(i, j)] - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn p2_edge_mass() {
        let m = Mesh::from_triangles(vec![[0.0, 0.0], [3.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let dm = DofMap::new(&m, ElementKind::P2, 1).unwrap();
        let bd = boundary_data(&m, &dm).unwrap();
        let nodes = &dm.boundary_edge_nodes()[0];
        assert_eq!(m.boundary_edges()[0], [0, 1]);
        let idx: Vec<usize> = nodes
            .iter()
            .map(|n| dm.boundary_nodes().iter().position(|b| b == n).unwrap())
            .collect();
        let expect = [[4.0, -1.0, 2.0], [-1.0, 4.0, 2.0], [2.0, 2.0, 16.0]];
        // The end nodes are shared with neighbouring edges, so compare the
        // mid-node row, which only this edge touches.
        let mb = bd.mb.to_dense();
        for b in 0..3 {
            assert!((mb[(idx[2], idx[b])] - 3.0 / 30.0 * expect[2][b]).abs() < 1e-14);
        }
    }

    #[test]
    fn kernels_row_sums_and_totals() {
        let m = generate(Domain::Lshape, 0.25, None).unwrap();
        let dm = DofMap::new(&m, ElementKind::P2, 1).unwrap();
        let k = stiffness(&m, &dm).unwrap();
        let ones = vec![1.0; dm.num_dofs()];
        assert!(linalg::norm(&k.mul_vec(&ones)) < 1e-12);
        let mm = mass(&m, &dm).unwrap();
        assert!((mm.form(&ones, &ones) - 0.75).abs() < 1e-12);
        let bd = boundary_data(&m, &dm).unwrap();
        let ob = vec![1.0; bd.mb.nrows()];
        assert!((bd.mb.form(&ob, &ob) - 4.0).abs() < 1e-12);
        assert!((load_vector(&m, &dm).unwrap().iter().sum::<f64>() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn transpose_form_on_linear_fields() {
        let m = generate(Domain::Square, 0.25, None).unwrap();
        let dm = DofMap::new(&m, ElementKind::P2, 2).unwrap();
        let k = stiffness(&m, &dm).unwrap();
        let kt = transpose_gradient_form(&m, &dm).unwrap();
        let rot = dm.interpolate(|x| [-x[1], x[0]]);
        let sym = k.add_scaled(1.0, &kt);
        assert!(sym.form(&rot, &rot).abs() < 1e-12);
        let stretch = dm.interpolate(|x| [x[0], 0.0]);
        assert!((kt.form(&stretch, &stretch) - 1.0).abs() < 1e-12);
        assert!((k.form(&stretch, &stretch) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_simple_fields() {
        let m = generate(Domain::DiskPolygon, 0.4, Some(8)).unwrap();
        let vel = DofMap::new(&m, ElementKind::P2, 2).unwrap();
        let pre = DofMap::new(&m, ElementKind::P1, 1).unwrap();
        let b = divergence(&m, &vel, &pre).unwrap();
        let load = load_vector(&m, &pre).unwrap();
        assert!(linalg::norm(&b.mul_vec(&vel.interpolate(|_| [1.0, -2.0]))) < 1e-13);
        assert!(linalg::norm(&b.mul_vec(&vel.interpolate(|x| [-x[1], x[0]]))) < 1e-13);
        let bx = b.mul_vec(&vel.interpolate(|x| [x[0], 0.0]));
        for (a, e) in bx.iter().zip(&load) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn normal_flux() {
        let m = generate(Domain::Square, 0.25, None).unwrap();
        let dm = DofMap::new(&m, ElementKind::P2, 2).unwrap();
        let bd = boundary_data(&m, &dm).unwrap();
        let jc = bd.j.mul_vec(&dm.interpolate(|_| [0.3, 1.7]));
        let flux: f64 = bd.nu_flux.iter().zip(&jc).map(|(w, x)| w * x).sum();
        assert!(flux.abs() < 1e-12);
        let jx = bd.j.mul_vec(&dm.interpolate(|x| [x[0], x[1]]));
        let flux: f64 = bd.nu_flux.iter().zip(&jx).map(|(w, x)| w * x).sum();
        assert!((flux - 2.0).abs() < 1e-12);
    }
}
