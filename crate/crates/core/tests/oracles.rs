//! Closed-form reference values checked against the discrete machinery.

use std::f64::consts::PI;

use faer::Mat;

use interlace::fem::{self, DofMap, ElementKind};
use interlace::framework::{dirichlet_eigenvalues, dtn_spectrum, neumann_eigenvalues, robin_spectrum, DEFAULT_RESONANCE_TOL};
use interlace::lab::{square_dirichlet_exact, square_neumann_exact};
use interlace::mesh::generate;
use interlace::problems::{build_laplacian, build_stokes};
use interlace::{Domain, Error, FormSystem};

fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol * w.abs().max(1.0), "{got:?} vs {want:?}");
    }
}

#[test]
fn square_tables() {
    let pi2 = PI * PI;
    let d: Vec<f64> = [2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0, 17.0, 17.0].iter().map(|x| x * pi2).collect();
    let n: Vec<f64> = [0.0, 1.0, 1.0, 2.0, 4.0, 4.0, 5.0, 5.0, 8.0, 9.0, 9.0].iter().map(|x| x * pi2).collect();
    assert_close(&square_dirichlet_exact(10), &d, 1e-15);
    assert_close(&square_neumann_exact(11), &n, 1e-15);
}

/// `A = diag(1, 2, 3)`, `M = diag(2, 1, 1)`, trace on the first coordinate.
fn weighted_system() -> FormSystem {
    let a = Mat::from_fn(3, 3, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let m = Mat::from_fn(3, 3, |i, j| if i == j { if i == 0 { 2.0 } else { 1.0 } } else { 0.0 });
    let j = Mat::from_fn(1, 3, |_, c| if c == 0 { 1.0 } else { 0.0 });
    let mb = Mat::from_fn(1, 1, |_, _| 4.0);
    FormSystem::new(a, m, j, mb).unwrap()
}

#[test]
fn weighted_hand_system() {
    let fs = weighted_system();
    assert_close(&neumann_eigenvalues(&fs).unwrap(), &[0.5, 2.0, 3.0], 1e-12);
    assert_close(&dirichlet_eigenvalues(&fs).unwrap(), &[2.0, 3.0], 1e-12);
    // a(u,u) - μ‖Ju‖²_b shifts the first entry by -4μ before dividing by m₁₁ = 2
    for mu in [0.25, -1.0, -1e3] {
        let mut want = vec![(1.0 - 4.0 * mu) / 2.0, 2.0, 3.0];
        want.sort_by(f64::total_cmp);
        assert_close(&robin_spectrum(&fs, mu, 3).unwrap().eigenvalues, &want, 1e-10);
    }
    // N(λ) solves (1 - 2λ) φ = 4 N φ
    for lambda in [0.0, 0.3, 2.5] {
        let r = dtn_spectrum(&fs, lambda, DEFAULT_RESONANCE_TOL).unwrap();
        assert_close(&r.eigenvalues, &[(1.0 - 2.0 * lambda) / 4.0], 1e-12);
    }
    assert!(matches!(dtn_spectrum(&fs, 3.0, DEFAULT_RESONANCE_TOL), Err(Error::DirichletResonance { .. })));
}

#[test]
fn element_matrices_integrate_polynomials_exactly() {
    let mesh = generate(Domain::Square, 0.25, None).unwrap();
    for kind in [ElementKind::P1, ElementKind::P2] {
        let dm = DofMap::new(&mesh, kind, 1).unwrap();
        let k = fem::stiffness(&mesh, &dm).unwrap();
        let m = fem::mass(&mesh, &dm).unwrap();
        let one = vec![1.0; dm.num_dofs()];
        assert!(k.as_matrix().mul_vec(&one).iter().all(|v| v.abs() < 1e-12));
        assert!((m.form(&one, &one) - 1.0).abs() < 1e-12);
        let x: Vec<f64> = dm.nodes().iter().map(|p| p[0]).collect();
        let y: Vec<f64> = dm.nodes().iter().map(|p| p[1]).collect();
        assert!((k.form(&x, &x) - 1.0).abs() < 1e-12);
        assert!(k.form(&x, &y).abs() < 1e-12);
        assert!((m.form(&x, &one) - 0.5).abs() < 1e-12);
        if kind == ElementKind::P2 {
            // ∫|∇x²|² = 4/3 and ∫x² = 1/3, both exact for quadratics
            let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
            assert!((k.form(&x2, &x2) - 4.0 / 3.0).abs() < 1e-12);
            assert!((m.form(&x2, &one) - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn boundary_gram_measures_the_perimeter() {
    for domain in [Domain::Square, Domain::Lshape, Domain::DiskPolygon] {
        let mesh = generate(domain, 0.25, None).unwrap();
        let dm = DofMap::new(&mesh, ElementKind::P2, 1).unwrap();
        let b = fem::boundary_data(&mesh, &dm).unwrap();
        let one = vec![1.0; b.j.nrows()];
        assert!((b.mb.form(&one, &one) - mesh.boundary_measure()).abs() < 1e-12);
    }
    let square = generate(Domain::Square, 0.5, None).unwrap();
    assert!((square.boundary_measure() - 4.0).abs() < 1e-14);
}

#[test]
fn stokes_flux_of_constant_fields_vanishes() {
    let mesh = generate(Domain::Lshape, 0.25, None).unwrap();
    let p = build_stokes(&mesh, 0.0).unwrap();
    let dm = p.velocity_dofs();
    let j = &p.boundary().j;
    let e1 = j.mul_vec(&dm.interpolate(|_| [1.0, 0.0]));
    let radial = j.mul_vec(&dm.interpolate(|x| [x[0], x[1]]));
    assert!(p.flux(&e1).abs() < 1e-12);
    // ∫_∂Ω x·ν = 2|Ω|
    assert!((p.flux(&radial) - 1.5).abs() < 1e-12);
}

#[test]
fn laplacian_converges_at_quadratic_element_rate() {
    let exact_d = square_dirichlet_exact(3);
    let exact_n = square_neumann_exact(4);
    let mut errs = Vec::new();
    for h in [0.25, 0.125] {
        let p = build_laplacian(&generate(Domain::Square, h, None).unwrap()).unwrap();
        let fs = p.form_system().unwrap();
        let d = dirichlet_eigenvalues(fs).unwrap();
        let n = neumann_eigenvalues(fs).unwrap();
        assert!(n[0].abs() < 1e-9);
        // min-max from above: conforming eigenvalues never undershoot
        for i in 0..3 {
            assert!(d[i] >= exact_d[i] * (1.0 - 1e-12));
            assert!(n[i + 1] >= exact_n[i + 1] * (1.0 - 1e-12));
        }
        errs.push((d[0] - exact_d[0]) / exact_d[0]);
    }
    let order = (errs[0] / errs[1]).log2();
    assert!(order >= 3.0, "observed order {order}");
    assert!(errs[1] < 5e-4, "{errs:?}");
}
