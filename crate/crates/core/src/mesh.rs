//! Conforming triangulations of the benchmark polygons.
//!
//! Triangles are counterclockwise; boundary edges are oriented so that the
//! domain lies on their left, which makes `(dy, -dx) / len` the outward unit
//! normal. Indices are 0-based everywhere.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::json::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[0,1]²`.
    Square,
    /// `[0,1]² \ [0.5,1]²`.
    Lshape,
    /// Regular polygon inscribed in the unit circle.
    DiskPolygon,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Square => "square",
            Domain::Lshape => "lshape",
            Domain::DiskPolygon => "disk_polygon",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Domain::Square),
            "lshape" | "l-shape" | "l_shape" => Ok(Domain::Lshape),
            "disk" | "disk_polygon" | "disk-polygon" => Ok(Domain::DiskPolygon),
            other => Err(Error::BadParameter(format!("unknown domain '{other}'"))),
        }
    }
}

pub const DEFAULT_DISK_SIDES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
    normals: Vec<[f64; 2]>,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    let (u, v) = (sub(q, p), sub(r, p));
    0.5 * (u[0] * v[1] - u[1] * v[0])
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    /// Builds a mesh from explicit data. Only index bounds and edge lengths are
    /// checked here; see [`Mesh::validate`] for the geometric invariants.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if let Some(t) = triangles.iter().find(|t| t.iter().any(|&i| i >= nv)) {
            return Err(Error::InvalidMesh(format!("triangle {t:?} indexes past {nv} vertices")));
        }
        let mut normals = Vec::with_capacity(boundary_edges.len());
        for e in &boundary_edges {
            if e.iter().any(|&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("edge {e:?} indexes past {nv} vertices")));
            }
            let d = sub(vertices[e[1]], vertices[e[0]]);
            let len = d[0].hypot(d[1]);
            if !(len > 0.0) {
                return Err(Error::InvalidMesh(format!("boundary edge {e:?} has zero length")));
            }
            normals.push([d[1] / len, -d[0] / len]);
        }
        Ok(Mesh {
            vertices,
            triangles,
            boundary_edges,
            normals,
        })
    }

    /// Builds a mesh whose boundary edges are extracted from the triangles and
    /// chained into loops.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let boundary = extract_boundary(&triangles);
        Mesh::new(vertices, triangles, boundary)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Outward unit normal per boundary edge.
    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_coords(t);
        signed_area(p, q, r)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary_edges[e];
        let d = sub(self.vertices[b], self.vertices[a]);
        d[0].hypot(d[1])
    }

    /// Perimeter: sum of boundary edge lengths.
    pub fn boundary_measure(&self) -> f64 {
        (0..self.boundary_edges.len()).map(|e| self.edge_length(e)).sum()
    }

    /// All undirected edges, sorted by `(min, max)` vertex index.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self
            .triangles
            .iter()
            .flat_map(|t| [edge_key(t[0], t[1]), edge_key(t[1], t[2]), edge_key(t[2], t[0])])
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// Longest edge.
    pub fn max_edge_length(&self) -> f64 {
        self.edges()
            .iter()
            .map(|&(a, b)| {
                let d = sub(self.vertices[b], self.vertices[a]);
                d[0].hypot(d[1])
            })
            .fold(0.0, f64::max)
    }

    /// `V - E + F` with `F` counting triangles.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.vertices.len()];
        for e in &self.boundary_edges {
            f[e[0]] = true;
            f[e[1]] = true;
        }
        f
    }

    /// Checks all mesh invariants and lists every violation found.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let nv = self.vertices.len();
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                violations.push(MeshViolation::IndexOutOfRange { triangle: t });
                continue;
            }
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                violations.push(MeshViolation::NonPositiveArea { triangle: t, area });
            }
            for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                edge_tris.entry(edge_key(a, b)).or_default().push(t);
            }
        }

        let mut degree = vec![0i64; nv];
        let mut on_boundary = std::collections::HashSet::new();
        for (e, &[a, b]) in self.boundary_edges.iter().enumerate() {
            degree[a] += 1;
            degree[b] -= 1;
            on_boundary.insert(edge_key(a, b));
            let tris = edge_tris.get(&edge_key(a, b)).cloned().unwrap_or_default();
            if tris.len() != 1 {
                violations.push(MeshViolation::BoundaryEdgeTriangles {
                    edge: e,
                    count: tris.len(),
                });
                continue;
            }
            let [p, q, r] = self.triangle_coords(tris[0]);
            let centroid = [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0];
            let (va, vb) = (self.vertices[a], self.vertices[b]);
            let mid = [0.5 * (va[0] + vb[0]), 0.5 * (va[1] + vb[1])];
            let n = self.normals[e];
            let to_centroid = sub(centroid, mid);
            if !(to_centroid[0] * n[0] + to_centroid[1] * n[1] < 0.0) {
                violations.push(MeshViolation::InwardNormal { edge: e });
            }
        }
        for (v, &d) in degree.iter().enumerate() {
            if d != 0 {
                violations.push(MeshViolation::OpenBoundary { vertex: v });
            }
        }
        for (&key, tris) in &edge_tris {
            if tris.len() == 1 && !on_boundary.contains(&key) {
                violations.push(MeshViolation::MissingBoundaryEdge { edge: key });
            }
            if tris.len() > 2 {
                violations.push(MeshViolation::NonManifoldEdge { edge: key });
            }
        }

        let mut sum = [0.0, 0.0];
        for e in 0..self.boundary_edges.len() {
            let len = self.edge_length(e);
            sum[0] += len * self.normals[e][0];
            sum[1] += len * self.normals[e][1];
        }
        let perimeter = self.boundary_measure().max(1.0);
        if sum[0].hypot(sum[1]) > 1e-12 * perimeter {
            violations.push(MeshViolation::NormalSumNonzero { sum });
        }
        violations.sort_by_key(|v| v.to_string());
        ValidationReport { violations }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = String::from("{\n  \"vertices\": [");
        for (i, v) in self.vertices.iter().enumerate() {
            let sep = if i == 0 { "\n    " } else { ",\n    " };
            s.push_str(&format!("{sep}[{}, {}]", fmt_f64(v[0]), fmt_f64(v[1])));
        }
        s.push_str("\n  ],\n  \"triangles\": [");
        for (i, t) in self.triangles.iter().enumerate() {
            let sep = if i == 0 { "\n    " } else { ",\n    " };
            s.push_str(&format!("{sep}[{}, {}, {}]", t[0], t[1], t[2]));
        }
        s.push_str("\n  ],\n  \"boundary_edges\": [");
        for (i, e) in self.boundary_edges.iter().enumerate() {
            let sep = if i == 0 { "\n    " } else { ",\n    " };
            s.push_str(&format!("{sep}[{}, {}]", e[0], e[1]));
        }
        s.push_str("\n  ]\n}\n");
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct MeshFile {
            vertices: Vec<[f64; 2]>,
            triangles: Vec<[usize; 3]>,
            boundary_edges: Vec<[usize; 2]>,
        }
        let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let nv = file.vertices.len();
        let field_err = |field: &str, i: usize, idx: usize| Error::Parse {
            line: 0,
            column: 0,
            message: format!("{field}[{i}]: vertex index {idx} out of range (have {nv} vertices)"),
        };
        for (i, t) in file.triangles.iter().enumerate() {
            if let Some(&idx) = t.iter().find(|&&x| x >= nv) {
                return Err(field_err("triangles", i, idx));
            }
        }
        for (i, e) in file.boundary_edges.iter().enumerate() {
            if let Some(&idx) = e.iter().find(|&&x| x >= nv) {
                return Err(field_err("boundary_edges", i, idx));
            }
        }
        Mesh::new(file.vertices, file.triangles, file.boundary_edges)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshViolation {
    IndexOutOfRange { triangle: usize },
    NonPositiveArea { triangle: usize, area: f64 },
    BoundaryEdgeTriangles { edge: usize, count: usize },
    InwardNormal { edge: usize },
    OpenBoundary { vertex: usize },
    MissingBoundaryEdge { edge: (usize, usize) },
    NonManifoldEdge { edge: (usize, usize) },
    NormalSumNonzero { sum: [f64; 2] },
}

impl fmt::Display for MeshViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshViolation::IndexOutOfRange { triangle } => {
                write!(f, "triangle {triangle}: vertex index out of range")
            }
            MeshViolation::NonPositiveArea { triangle, area } => {
                write!(f, "triangle {triangle}: non-positive signed area {area:e}")
            }
            MeshViolation::BoundaryEdgeTriangles { edge, count } => {
                write!(f, "boundary edge {edge}: belongs to {count} triangles")
            }
            MeshViolation::InwardNormal { edge } => {
                write!(f, "boundary edge {edge}: normal points into the domain")
            }
            MeshViolation::OpenBoundary { vertex } => {
                write!(f, "vertex {vertex}: boundary loop is not closed")
            }
            MeshViolation::MissingBoundaryEdge { edge } => {
                write!(f, "edge {edge:?}: on one triangle but not listed as boundary")
            }
            MeshViolation::NonManifoldEdge { edge } => {
                write!(f, "edge {edge:?}: shared by more than two triangles")
            }
            MeshViolation::NormalSumNonzero { sum } => {
                write!(f, "sum of length-weighted normals is {sum:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<MeshViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Directed edges that belong to exactly one triangle, chained into loops.
fn extract_boundary(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *count.entry(edge_key(a, b)).or_default() += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for t in triangles {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if count[&edge_key(a, b)] == 1 {
                next.insert(a, b);
            }
        }
    }
    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut visited = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(next.len());
    for s in starts {
        let mut a = s;
        while visited.insert(a) {
            let b = next[&a];
            out.push([a, b]);
            a = b;
        }
    }
    out
}

fn cells_per_unit(h: f64) -> usize {
    ((1.0 / h) - 1e-9).ceil().max(1.0) as usize
}

/// Structured triangulation of a benchmark domain with edge lengths of
/// order `h` (at most `2h`).
pub fn generate(domain: Domain, h: f64, sides: Option<usize>) -> Result<Mesh> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::BadParameter(format!("mesh size h = {h} must be positive")));
    }
    if h < 1.0 / 512.0 {
        return Err(Error::BadParameter(format!("mesh size h = {h} is below 1/512")));
    }
    match domain {
        Domain::Square => {
            if sides.is_some() {
                return Err(Error::BadParameter("sides only applies to disk_polygon".into()));
            }
            Ok(grid_mesh(cells_per_unit(h), |_, _| true))
        }
        Domain::Lshape => {
            if sides.is_some() {
                return Err(Error::BadParameter("sides only applies to disk_polygon".into()));
            }
            let n = 2 * cells_per_unit(2.0 * h);
            let half = n / 2;
            Ok(grid_mesh(n, |i, j| !(i >= half && j >= half)))
        }
        Domain::DiskPolygon => {
            let s = sides.unwrap_or(DEFAULT_DISK_SIDES);
            if s < 6 {
                return Err(Error::BadParameter(format!("disk polygon needs >= 6 sides, got {s}")));
            }
            Ok(disk_mesh(s, h))
        }
    }
}

/// `n × n` cells on the unit square, keeping cells where `keep(i, j)`; cells
/// are split along their (0,0)-(1,1) diagonal except in convex corners.
fn grid_mesh(n: usize, keep: impl Fn(usize, usize) -> bool) -> Mesh {
    let mut index = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<[f64; 2]>| {
        let k = j * (n + 1) + i;
        if index[k] == usize::MAX {
            index[k] = vertices.len();
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
        index[k]
    };
    for j in 0..n {
        for i in 0..n {
            if !keep(i, j) {
                continue;
            }
            let v00 = vid(i, j, &mut vertices);
            let v10 = vid(i + 1, j, &mut vertices);
            let v01 = vid(i, j + 1, &mut vertices);
            let v11 = vid(i + 1, j + 1, &mut vertices);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    // A triangle with all three vertices on the boundary sits in a convex
    // corner cut off by the diagonal; use the other diagonal there so every
    // triangle keeps an interior vertex (needed for inf-sup stability of
    // the Taylor-Hood pair).
    let on_boundary = Mesh::from_triangles(vertices.clone(), triangles.clone())
        .expect("structured grid is well formed")
        .boundary_vertex_flags();
    if vertices.len() > 4 {
        for cell in triangles.chunks_mut(2) {
            if cell.iter().any(|t| t.iter().all(|&v| on_boundary[v])) {
                let ([v00, v10, v11], [_, _, v01]) = (cell[0], cell[1]);
                cell[0] = [v00, v10, v01];
                cell[1] = [v10, v11, v01];
            }
        }
    }
    Mesh::from_triangles(vertices, triangles).expect("structured grid is well formed")
}

/// Regular `sides`-gon inscribed in the unit circle, triangulated by rings.
/// Ring `k` lies on the scaled polygon of radius `k / R`; each of its sides
/// is split into enough segments to keep tangential edges below `h`.
fn disk_mesh(sides: usize, h: f64) -> Mesh {
    let rings = cells_per_unit(h);
    let side_len = 2.0 * (std::f64::consts::PI / sides as f64).sin();
    let corner = |q: usize| {
        let t = 2.0 * std::f64::consts::PI * (q % sides) as f64 / sides as f64;
        [t.cos(), t.sin()]
    };
    let segs: Vec<usize> = (0..=rings)
        .map(|k| {
            let r = k as f64 / rings as f64;
            ((r * side_len / h) - 1e-9).ceil().max(1.0) as usize
        })
        .collect();

    let mut vertices = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize; rings + 1];
    for k in 1..=rings {
        ring_start[k] = vertices.len();
        let r = k as f64 / rings as f64;
        let m = segs[k];
        for q in 0..sides {
            let (p0, p1) = (corner(q), corner(q + 1));
            for j in 0..m {
                let t = j as f64 / m as f64;
                vertices.push([
                    r * ((1.0 - t) * p0[0] + t * p1[0]),
                    r * ((1.0 - t) * p0[1] + t * p1[1]),
                ]);
            }
        }
    }
    // index of point j (0..=m) on sector q of ring k, wrapping at the end
    let at = |k: usize, q: usize, j: usize| -> usize {
        if k == 0 {
            return 0;
        }
        let m = segs[k];
        let count = sides * m;
        ring_start[k] + (q * m + j) % count
    };

    let mut triangles = Vec::new();
    let mut push = |mut t: [usize; 3], vertices: &Vec<[f64; 2]>| {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
        triangles.push(t);
    };
    for k in 1..=rings {
        for q in 0..sides {
            let mo = segs[k];
            if k == 1 {
                for j in 0..mo {
                    push([0, at(1, q, j), at(1, q, j + 1)], &vertices);
                }
                continue;
            }
            let mi = segs[k - 1];
            let (mut i, mut j) = (0, 0);
            while i < mi || j < mo {
                let advance_inner = j == mo || (i < mi && (i + 1) * mo <= (j + 1) * mi);
                if advance_inner {
                    push([at(k - 1, q, i), at(k - 1, q, i + 1), at(k, q, j)], &vertices);
                    i += 1;
                } else {
                    push([at(k - 1, q, i), at(k, q, j), at(k, q, j + 1)], &vertices);
                    j += 1;
                }
            }
        }
    }
    Mesh::from_triangles(vertices, triangles).expect("ring mesh is well formed")
}

/// Uniform red refinement: every triangle splits into four through its edge
/// midpoints. Children of triangle `t` are `4t..4t+4`, the last one being
/// the central triangle.
pub fn refine(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices.clone();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for &[a, b] in &mesh.boundary_edges {
        let m = midpoint(a, b, &mut vertices);
        boundary.push([a, m]);
        boundary.push([m, b]);
    }
    Mesh::new(vertices, triangles, boundary).expect("refinement preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_half_combinatorics() {
        let m = generate(Domain::Square, 0.5, None).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.boundary_edges().len(), 8);
        assert!(m.validate().is_valid());
        assert!((m.boundary_measure() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lshape_area_and_perimeter() {
        for h in [0.5, 0.25, 0.1, 1.0 / 16.0] {
            let m = generate(Domain::Lshape, h, None).unwrap();
            assert!((m.total_area() - 0.75).abs() < 1e-12);
            assert!((m.boundary_measure() - 4.0).abs() < 1e-12);
            assert!(m.validate().is_valid(), "{:?}", m.validate());
            assert_eq!(m.euler_characteristic(), 1);
        }
    }

    #[test]
    fn disk_polygon_area_and_perimeter() {
        let m = generate(Domain::DiskPolygon, 0.2, Some(16)).unwrap();
        let area = 8.0 * (2.0 * PI / 16.0).sin();
        assert!((m.total_area() - area).abs() < 1e-12);
        assert!((m.boundary_measure() - 32.0 * (PI / 16.0).sin()).abs() < 1e-12);
        assert!(m.validate().is_valid(), "{:?}", m.validate());
        assert_eq!(m.euler_characteristic(), 1);
        assert!(m.max_edge_length() <= 2.0 * 0.2);
    }

    #[test]
    fn bad_parameters() {
        assert!(generate(Domain::Square, 0.0, None).is_err());
        assert!(generate(Domain::Square, f64::NAN, None).is_err());
        assert!(generate(Domain::DiskPolygon, 0.1, Some(5)).is_err());
    }

    #[test]
    fn refinement_counts() {
        let m = generate(Domain::Square, 0.5, None).unwrap();
        let r = refine(&m);
        assert_eq!(r.num_triangles(), 32);
        assert_eq!(r.boundary_edges().len(), 16);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        assert!(r.validate().is_valid());
        let fine = generate(Domain::Square, 0.25, None).unwrap();
        assert_eq!(r.num_vertices(), fine.num_vertices());
        assert_eq!(r.euler_characteristic(), 1);
    }

    #[test]
    fn swapped_triangle_is_reported() {
        let m = generate(Domain::Square, 0.5, None).unwrap();
        let mut tris = m.triangles().to_vec();
        tris[3].swap(0, 1);
        let bad = Mesh::new(m.vertices().to_vec(), tris, m.boundary_edges().to_vec()).unwrap();
        let report = bad.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, MeshViolation::NonPositiveArea { triangle: 3, .. })));
    }

    #[test]
    fn reversed_boundary_edge_is_reported() {
        let m = generate(Domain::Square, 0.5, None).unwrap();
        let mut edges = m.boundary_edges().to_vec();
        edges[2].swap(0, 1);
        let bad = Mesh::new(m.vertices().to_vec(), m.triangles().to_vec(), edges).unwrap();
        let report = bad.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, MeshViolation::InwardNormal { edge: 2 })));
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let m = generate(Domain::DiskPolygon, 0.3, Some(7)).unwrap();
        let back = Mesh::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, back);
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn json_errors_have_diagnostics() {
        let err = Mesh::from_json_str(r#"{"vertices": [[0,0]], "boundary_edges": []}"#).unwrap_err();
        match err {
            Error::Parse { message, line, .. } => {
                assert!(message.contains("triangles"), "{message}");
                assert_eq!(line, 1);
            }
            other => panic!("{other:?}"),
        }
        let err = Mesh::from_json_str(
            "{\"vertices\": [[0,0],[1,0],[0,1]],\n \"triangles\": [[0, 1.5, 2]], \"boundary_edges\": []}",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }
}
