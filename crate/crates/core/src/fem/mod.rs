//! Lagrange finite elements on triangle meshes: degree-of-freedom maps,
//! local bases and global assembly.
//!
//! Vector fields are stored component-major: the dof of component `c` at
//! node `i` is `c * n_nodes + i`. P2 nodes are the mesh vertices followed by
//! the edge midpoints, with edges numbered by sorted `(min, max)` vertex
//! pairs so the numbering does not depend on triangle order.

pub mod assembly;
pub mod quadrature;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

pub use assembly::{
    boundary_data, divergence, gradient_coupling, load_vector, mass, stiffness, transpose_gradient_form,
    BoundaryData,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    /// Continuous piecewise linear.
    P1,
    /// Continuous piecewise quadratic.
    P2,
    /// Piecewise linear enriched by one cubic bubble per triangle.
    Mini,
}

impl ElementKind {
    pub fn local_size(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::P2 => 6,
            ElementKind::Mini => 4,
        }
    }
}

/// Local basis of at most six functions evaluated at one point.
#[derive(Debug, Clone, Copy)]
pub struct LocalBasis {
    pub len: usize,
    pub values: [f64; 6],
    pub grads: [[f64; 2]; 6],
}

/// Area and barycentric gradients of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl Geometry {
    pub fn new(p: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = p;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
        let grads = [
            [(p1[1] - p2[1]) / twice, (p2[0] - p1[0]) / twice],
            [(p2[1] - p0[1]) / twice, (p0[0] - p2[0]) / twice],
            [(p0[1] - p1[1]) / twice, (p1[0] - p0[0]) / twice],
        ];
        Geometry { area: 0.5 * twice, grads }
    }
}

fn axpy2(s: f64, g: [f64; 2]) -> [f64; 2] {
    [s * g[0], s * g[1]]
}

fn add2(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Local edge `e` joins local vertices `EDGES[e]`.
pub const EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Basis values and gradients at barycentric point `lam`.
pub fn local_basis(kind: ElementKind, lam: [f64; 3], g: &[[f64; 2]; 3]) -> LocalBasis {
    let mut b = LocalBasis {
        len: kind.local_size(),
        values: [0.0; 6],
        grads: [[0.0; 2]; 6],
    };
    match kind {
        ElementKind::P1 => {
            for i in 0..3 {
                b.values[i] = lam[i];
                b.grads[i] = g[i];
            }
        }
        ElementKind::P2 => {
            for i in 0..3 {
                b.values[i] = lam[i] * (2.0 * lam[i] - 1.0);
                b.grads[i] = axpy2(4.0 * lam[i] - 1.0, g[i]);
            }
            for (e, &(i, j)) in EDGES.iter().enumerate() {
                b.values[3 + e] = 4.0 * lam[i] * lam[j];
                b.grads[3 + e] = add2(axpy2(4.0 * lam[i], g[j]), axpy2(4.0 * lam[j], g[i]));
            }
        }
        ElementKind::Mini => {
            for i in 0..3 {
                b.values[i] = lam[i];
                b.grads[i] = g[i];
            }
            b.values[3] = 27.0 * lam[0] * lam[1] * lam[2];
            let mut gb = axpy2(lam[1] * lam[2], g[0]);
            gb = add2(gb, axpy2(lam[0] * lam[2], g[1]));
            gb = add2(gb, axpy2(lam[0] * lam[1], g[2]));
            b.grads[3] = axpy2(27.0, gb);
        }
    }
    b
}

/// Node numbering for one element family on one mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: ElementKind,
    components: usize,
    nodes: Vec<[f64; 2]>,
    /// Global node of each local basis function, per triangle.
    cells: Vec<[usize; 6]>,
    boundary_nodes: Vec<usize>,
    /// Nodes of each boundary edge: `[start, end]` or `[start, end, mid]`.
    boundary_edge_nodes: Vec<Vec<usize>>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, kind: ElementKind, components: usize) -> Result<Self> {
        if components == 0 || components > 2 {
            return Err(Error::BadParameter(format!("unsupported component count {components}")));
        }
        let nv = mesh.num_vertices();
        let mut nodes = mesh.vertices().to_vec();
        let mut cells = Vec::with_capacity(mesh.num_triangles());
        let mut edge_index = HashMap::new();
        if kind == ElementKind::P2 {
            for (e, (a, b)) in mesh.edges().into_iter().enumerate() {
                edge_index.insert((a, b), nv + e);
                let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
                nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            }
        }
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let mut c = [usize::MAX; 6];
            c[..3].copy_from_slice(tri);
            match kind {
                ElementKind::P1 => {}
                ElementKind::P2 => {
                    for (e, &(i, j)) in EDGES.iter().enumerate() {
                        c[3 + e] = edge_index[&key(tri[i], tri[j])];
                    }
                }
                ElementKind::Mini => {
                    c[3] = nv + t;
                    let [p, q, r] = mesh.triangle_coords(t);
                    nodes.push([(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]);
                }
            }
            cells.push(c);
        }
        let mut boundary_edge_nodes = Vec::with_capacity(mesh.boundary_edges().len());
        let mut on_boundary = vec![false; nodes.len()];
        for &[a, b] in mesh.boundary_edges() {
            let mut e = vec![a, b];
            if kind == ElementKind::P2 {
                let m = *edge_index
                    .get(&key(a, b))
                    .ok_or_else(|| Error::InvalidMesh(format!("boundary edge ({a},{b}) not in any triangle")))?;
                e.push(m);
            }
            for &n in &e {
                on_boundary[n] = true;
            }
            boundary_edge_nodes.push(e);
        }
        let boundary_nodes = (0..nodes.len()).filter(|&i| on_boundary[i]).collect();
        Ok(DofMap {
            kind,
            components,
            nodes,
            cells,
            boundary_nodes,
            boundary_edge_nodes,
        })
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// The same node numbering with a different number of components.
    pub fn with_components(&self, components: usize) -> DofMap {
        DofMap {
            components,
            ..self.clone()
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.components * self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local-to-global node map of triangle `t`.
    pub fn cell(&self, t: usize) -> &[usize] {
        &self.cells[t][..self.kind.local_size()]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Sorted nodes lying on the boundary.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edge_nodes(&self) -> &[Vec<usize>] {
        &self.boundary_edge_nodes
    }

    /// Boundary dofs, component-major over [`DofMap::boundary_nodes`].
    pub fn boundary_dofs(&self) -> Vec<usize> {
        let n = self.num_nodes();
        (0..self.components)
            .flat_map(|c| self.boundary_nodes.iter().map(move |&b| c * n + b))
            .collect()
    }

    pub fn interior_dofs(&self) -> Vec<usize> {
        let mut on = vec![false; self.num_dofs()];
        for d in self.boundary_dofs() {
            on[d] = true;
        }
        (0..self.num_dofs()).filter(|&d| !on[d]).collect()
    }

    /// Interpolant of `f` (one value per component). For the bubble element
    /// the bubble coefficient makes the interpolant exact at the centroid.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let n = self.num_nodes();
        let mut out = vec![0.0; self.num_dofs()];
        for (i, &x) in self.nodes.iter().enumerate() {
            let v = f(x);
            for c in 0..self.components {
                out[c * n + i] = v[c];
            }
        }
        if self.kind == ElementKind::Mini {
            for cell in &self.cells {
                let b = cell[3];
                for c in 0..self.components {
                    let mean = (out[c * n + cell[0]] + out[c * n + cell[1]] + out[c * n + cell[2]]) / 3.0;
                    out[c * n + b] -= mean;
                }
            }
        }
        out
    }

    /// Evaluates component `c` of the field `coeffs` at barycentric point
    /// `lam` of triangle `t`.
    pub fn evaluate(&self, mesh: &Mesh, coeffs: &[f64], t: usize, lam: [f64; 3], c: usize) -> f64 {
        let g = Geometry::new(mesh.triangle_coords(t));
        let b = local_basis(self.kind, lam, &g.grads);
        let n = self.num_nodes();
        self.cell(t)
            .iter()
            .enumerate()
            .map(|(k, &i)| b.values[k] * coeffs[c * n + i])
            .sum()
    }
}

/// Transfers a field from `coarse` to the same element on `fine`, where
/// `fine` came from red refinement of `coarse` (children of triangle `t` are
/// `4t..4t+4`). Exact for fields in the coarse space.
pub fn prolongate(coarse_mesh: &Mesh, coarse: &DofMap, fine_mesh: &Mesh, fine: &DofMap, coeffs: &[f64]) -> Result<Vec<f64>> {
    if fine_mesh.num_triangles() != 4 * coarse_mesh.num_triangles()
        || coarse.kind != fine.kind
        || coarse.components != fine.components
        || coeffs.len() != coarse.num_dofs()
    {
        return Err(Error::dim("prolongation needs a red refinement and matching element"));
    }
    if fine.kind == ElementKind::Mini {
        return Err(Error::BadParameter("prolongation of bubble fields is not nodal".into()));
    }
    let n = fine.num_nodes();
    let mut out = vec![0.0; fine.num_dofs()];
    let mut done = vec![false; n];
    for tf in 0..fine_mesh.num_triangles() {
        let tc = tf / 4;
        let parent = coarse_mesh.triangle_coords(tc);
        let pg = Geometry::new(parent);
        for &node in fine.cell(tf) {
            if done[node] {
                continue;
            }
            done[node] = true;
            let x = fine.nodes[node];
            let lam = barycentric(parent[0], &pg, x);
            for c in 0..fine.components {
                out[c * n + node] = coarse.evaluate(coarse_mesh, coeffs, tc, lam, c);
            }
        }
    }
    Ok(out)
}

fn barycentric(p0: [f64; 2], g: &Geometry, x: [f64; 2]) -> [f64; 3] {
    let d = [x[0] - p0[0], x[1] - p0[1]];
    let l1 = g.grads[1][0] * d[0] + g.grads[1][1] * d[1];
    let l2 = g.grads[2][0] * d[0] + g.grads[2][1] * d[1];
    [1.0 - l1 - l2, l1, l2]
}
