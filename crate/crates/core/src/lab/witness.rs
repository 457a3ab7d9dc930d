use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::DEFAULT_RESONANCE_TOL;
use crate::json::sci;
use crate::linalg;
use crate::problems::{DiscreteProblem, ProblemKind};
use crate::sparse::{SparseLu, SparseMatrix, TripletBuilder};

/// DtN quadratic form of a plane-wave witness.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessResult {
    #[serde(serialize_with = "sci")]
    pub lambda: f64,
    /// Real part of `(N_λ° φ, φ)` for the complex trace `φ`.
    #[serde(serialize_with = "sci")]
    pub real: f64,
    #[serde(serialize_with = "sci")]
    pub imag: f64,
    /// `|(N_λ° φ, φ)| / (φ, φ)_Mb`.
    #[serde(serialize_with = "sci")]
    pub normalized: f64,
    /// `(φ, φ)_Mb` after projection.
    #[serde(serialize_with = "sci")]
    pub trace_norm2: f64,
    /// Flux of the interpolated trace before projection, relative to its
    /// Mb-norm (zero for scalar problems).
    #[serde(serialize_with = "sci")]
    pub flux_defect: f64,
    /// Dirichlet eigenvalue closest to `λ` (inverse iteration).
    #[serde(serialize_with = "sci")]
    pub nearest_dirichlet: f64,
    #[serde(serialize_with = "sci")]
    pub dirichlet_distance: f64,
}

/// Sparse solver for `λ`-harmonic extensions: the interior problem
/// `(A - λM) u = 0` (with `Bu = 0` for Stokes) under prescribed boundary
/// values, factored once per shift.
#[derive(Debug)]
pub struct WitnessSolver<'a> {
    problem: &'a DiscreteProblem,
    lambda: f64,
    shifted: SparseMatrix,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    /// Pressure rows kept after pinning the last one.
    pressure: usize,
    lu: SparseLu,
}

impl<'a> WitnessSolver<'a> {
    pub fn new(problem: &'a DiscreteProblem, lambda: f64) -> Result<Self> {
        let n = problem.num_dofs();
        let shifted = problem.form_matrix().add_scaled(-lambda, problem.mass()).into_matrix();
        let interior = problem.velocity_dofs().interior_dofs();
        let boundary = problem.velocity_dofs().boundary_dofs();
        let mut pos = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            pos[i] = k;
        }
        let ni = interior.len();
        let pressure = problem.divergence().map_or(0, |b| b.nrows() - 1);
        let mut tb = TripletBuilder::new(ni + pressure, ni + pressure);
        for (r, c, v) in shifted.iter() {
            if pos[r] != usize::MAX && pos[c] != usize::MAX {
                tb.add(pos[r], pos[c], v);
            }
        }
        if let Some(b) = problem.divergence() {
            for (q, c, v) in b.iter() {
                if q < pressure && pos[c] != usize::MAX {
                    tb.add(ni + q, pos[c], v);
                    tb.add(pos[c], ni + q, v);
                }
            }
        }
        let lu = SparseLu::new(&tb.build())?;
        Ok(WitnessSolver {
            problem,
            lambda,
            shifted,
            interior,
            boundary,
            pressure,
            lu,
        })
    }

    /// Velocity with trace `phi` (in boundary-dof order) solving the
    /// shifted interior problem.
    pub fn extend(&self, phi: &[f64]) -> Result<Vec<f64>> {
        if phi.len() != self.boundary.len() {
            return Err(Error::dim("trace has wrong length"));
        }
        let n = self.problem.num_dofs();
        let mut u = vec![0.0; n];
        for (&i, &v) in self.boundary.iter().zip(phi) {
            u[i] = v;
        }
        let su = self.shifted.mul_vec(&u);
        let ni = self.interior.len();
        let mut rhs = vec![0.0; ni + self.pressure];
        for (k, &i) in self.interior.iter().enumerate() {
            rhs[k] = -su[i];
        }
        if let Some(b) = self.problem.divergence() {
            let bu = b.mul_vec(&u);
            for q in 0..self.pressure {
                rhs[ni + q] = -bu[q];
            }
        }
        let x = self.lu.solve(&rhs)?;
        for (k, &i) in self.interior.iter().enumerate() {
            u[i] = x[k];
        }
        Ok(u)
    }

    /// `uᵀ(A - λM)v`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let sv = self.shifted.mul_vec(v);
        u.iter().zip(&sv).map(|(a, b)| a * b).sum()
    }

    /// Dirichlet eigenvalue nearest to the shift, by inverse iteration
    /// with the factored interior operator.
    pub fn nearest_dirichlet(&self, iterations: usize) -> Result<f64> {
        let ni = self.interior.len();
        let n = self.problem.num_dofs();
        let mass = self.problem.mass();
        let mut x: Vec<f64> = (0..ni).map(|k| 1.0 + ((k * 7919) % 101) as f64 / 101.0).collect();
        let mut rho = self.lambda;
        let embed = |x: &[f64]| {
            let mut u = vec![0.0; n];
            for (&i, &v) in self.interior.iter().zip(x) {
                u[i] = v;
            }
            u
        };
        for _ in 0..iterations {
            let mx = mass.mul_vec(&embed(&x));
            let mut rhs = vec![0.0; ni + self.pressure];
            for (k, &i) in self.interior.iter().enumerate() {
                rhs[k] = mx[i];
            }
            let y = self.lu.solve(&rhs)?;
            let u = embed(&y[..ni]);
            let mnorm = mass.form(&u, &u).sqrt();
            if !(mnorm > 0.0) {
                return Err(Error::Solver("inverse iteration collapsed".into()));
            }
            x = y[..ni].iter().map(|v| v / mnorm).collect();
            let u = embed(&x);
            rho = self.lambda + self.form(&u, &u) / mass.form(&u, &u);
        }
        Ok(rho)
    }
}

/// Evaluates the discrete DtN form on the trace of `τ b` with
/// `τ(x) = e^{i ω·x}` at `λ = |ω|²` (for the Laplacian the witness is `τ`
/// and `b` is ignored).
///
/// The trace is taken from the nodal interpolant, projected Mb-orthogonally
/// onto zero-flux fields for Stokes, and extended into the interior by a
/// sparse solve of the shifted problem.
pub fn witness_rayleigh(p: &DiscreteProblem, omega: [f64; 2], b: [f64; 2]) -> Result<WitnessResult> {
    let lambda = omega[0] * omega[0] + omega[1] * omega[1];
    let stokes = p.kind() == ProblemKind::Stokes;
    if stokes {
        let dot = b[0] * omega[0] + b[1] * omega[1];
        if dot.abs() > 1e-12 {
            return Err(Error::NonOrthogonal { dot });
        }
    }
    let solver = WitnessSolver::new(p, lambda).map_err(|e| match e {
        Error::Solver(_) => Error::DirichletResonance {
            lambda,
            nearest: lambda,
            distance: 0.0,
        },
        other => other,
    })?;
    let nearest = solver.nearest_dirichlet(30)?;
    let distance = (nearest - lambda).abs();
    if distance <= DEFAULT_RESONANCE_TOL * lambda.abs().max(1.0) {
        return Err(Error::DirichletResonance {
            lambda,
            nearest,
            distance,
        });
    }

    let dm = p.velocity_dofs();
    let phase = |x: [f64; 2]| omega[0] * x[0] + omega[1] * x[1];
    let parts: [Box<dyn Fn([f64; 2]) -> [f64; 2]>; 2] = if stokes {
        [
            Box::new(move |x| [b[0] * phase(x).cos(), b[1] * phase(x).cos()]),
            Box::new(move |x| [b[0] * phase(x).sin(), b[1] * phase(x).sin()]),
        ]
    } else {
        [Box::new(move |x| [phase(x).cos(), 0.0]), Box::new(move |x| [phase(x).sin(), 0.0])]
    };
    let riesz = if stokes { Some(p.nu_riesz()?) } else { None };
    let mut traces = Vec::new();
    let mut flux_defect: f64 = 0.0;
    for f in &parts {
        let mut phi = p.boundary().j.mul_vec(&dm.interpolate(f));
        if let Some(r) = &riesz {
            let flux = p.flux(&phi);
            flux_defect = flux_defect.max(flux.abs() / p.boundary_norm(&phi).max(f64::MIN_POSITIVE));
            let scale = flux / p.flux(r);
            for (x, y) in phi.iter_mut().zip(r) {
                *x -= scale * y;
            }
        }
        traces.push(phi);
    }
    let ext: Vec<Vec<f64>> = traces.iter().map(|t| solver.extend(t)).collect::<Result<_>>()?;
    let q = |i: usize, j: usize| solver.form(&ext[i], &ext[j]);
    // sesquilinear extension of the real symmetric form
    let real = q(0, 0) + q(1, 1);
    let imag = q(1, 0) - q(0, 1);
    let trace_norm2 = traces.iter().map(|t| p.boundary_norm(t).powi(2)).sum::<f64>();
    Ok(WitnessResult {
        lambda,
        real,
        imag,
        normalized: real.hypot(imag) / trace_norm2,
        trace_norm2,
        flux_defect,
        nearest_dirichlet: nearest,
        dirichlet_distance: distance,
    })
}

/// `i ∫_∂Ω (ω·ν) |b|² |τ|²` by edge quadrature; zero for closed boundaries.
pub fn boundary_identity(p: &DiscreteProblem, omega: [f64; 2]) -> f64 {
    let mesh = p.mesh();
    (0..mesh.boundary_edges().len())
        .map(|e| {
            let nu = mesh.normals()[e];
            mesh.edge_length(e) * (omega[0] * nu[0] + omega[1] * nu[1])
        })
        .sum::<f64>()
        .abs()
        / linalg::norm(&omega).max(1.0)
}
