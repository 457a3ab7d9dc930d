//! Finite-element laboratory for the interlacing `λ_{n+1}^N < λ_n^D` between
//! Neumann and Dirichlet eigenvalues of Laplacian and Stokes operators on
//! polygons.
//!
//! The crate is layered bottom-up:
//!
//! * [`linalg`], [`sparse`]: dense symmetric kernels and CSR storage;
//! * [`framework`]: abstract form systems `(A, M, J, Mb)` with their
//!   Neumann, Dirichlet, Robin and Dirichlet-to-Neumann spectra;
//! * [`mesh`], [`fem`]: triangulations and P1/P2/MINI assembly;
//! * [`problems`]: Laplacian and Stokes form systems plus pressure
//!   recovery, weak normal derivatives and Helmholtz projections;
//! * [`lab`]: interlacing experiments, witness fields, DtN negativity and
//!   convergence studies;
//! * [`cli`]: the `interlace` command-line driver.

pub mod cli;
pub mod error;
pub mod fem;
pub mod framework;
pub mod json;
pub mod lab;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod sparse;

pub use error::{Error, Result};
pub use framework::{FormSystem, Spectrum};
pub use mesh::{Domain, Mesh};
