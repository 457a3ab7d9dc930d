use std::ffi::{CStr, CString};
use std::ptr;

use interlace_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(interlace_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(interlace_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn laplacian_round_trip_through_handles() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(interlace_mesh_generate(InterlaceDomain::Square, 0.25, 0, &mut mesh), InterlaceStatus::Ok);
        assert_eq!(interlace_mesh_num_vertices(mesh), 25);
        assert_eq!(interlace_mesh_num_triangles(mesh), 32);

        let mut problem = ptr::null_mut();
        assert_eq!(interlace_problem_new(mesh, InterlaceKind::Laplacian, 0.0, &mut problem), InterlaceStatus::Ok);
        interlace_mesh_free(mesh);
        assert_eq!(interlace_problem_num_dofs(problem), 81);

        let mut spectrum = ptr::null_mut();
        let status = interlace_spectrum_compute(problem, InterlaceBoundary::Dirichlet, 3, &mut spectrum);
        assert_eq!(status, InterlaceStatus::Ok);
        assert_eq!(interlace_spectrum_len(spectrum), 3);
        let mut vals = [0.0; 3];
        let mut res = [1.0; 3];
        let mut written = 0;
        let status = interlace_spectrum_copy(spectrum, vals.as_mut_ptr(), res.as_mut_ptr(), 3, &mut written);
        assert_eq!(status, InterlaceStatus::Ok);
        assert_eq!(written, 3);
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        assert!((vals[0] - exact).abs() / exact < 0.02, "{}", vals[0]);
        assert!(vals[0] < vals[1] && vals[1] <= vals[2]);
        assert!(res.iter().all(|r| *r < 1e-8));
        interlace_spectrum_free(spectrum);
        interlace_problem_free(problem);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut mesh = ptr::null_mut();
        let s = interlace_mesh_generate(InterlaceDomain::Square, -1.0, 0, &mut mesh);
        assert_eq!(s, InterlaceStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert!(!last_error().is_empty());

        let s = interlace_mesh_generate(InterlaceDomain::Square, 0.5, 0, ptr::null_mut());
        assert_eq!(s, InterlaceStatus::NullPointer);

        let mut problem = ptr::null_mut();
        let s = interlace_problem_new(ptr::null(), InterlaceKind::Stokes, 0.0, &mut problem);
        assert_eq!(s, InterlaceStatus::NullPointer);
        assert!(last_error().contains("mesh"));

        let mut mesh = ptr::null_mut();
        assert_eq!(interlace_mesh_generate(InterlaceDomain::Square, 0.5, 0, &mut mesh), InterlaceStatus::Ok);
        assert!(last_error().is_empty());
        let s = interlace_problem_new(mesh, InterlaceKind::Stokes, 1.5, &mut problem);
        assert_eq!(s, InterlaceStatus::InvalidArgument);
        interlace_mesh_free(mesh);

        let bad = CString::new("{\"vertices\": [}").unwrap();
        let s = interlace_mesh_from_json(bad.as_ptr(), &mut mesh);
        assert_eq!(s, InterlaceStatus::Parse);
    }
}

#[test]
fn mesh_json_is_accepted() {
    let m = interlace::mesh::generate(interlace::Domain::Lshape, 0.5, None).unwrap();
    let json = CString::new(m.to_json_string()).unwrap();
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(interlace_mesh_from_json(json.as_ptr(), &mut mesh), InterlaceStatus::Ok);
        assert_eq!(interlace_mesh_num_triangles(mesh), m.num_triangles());
        interlace_mesh_free(mesh);
    }
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        assert_eq!(interlace_mesh_num_vertices(ptr::null()), 0);
        assert_eq!(interlace_spectrum_len(ptr::null()), 0);
        interlace_mesh_free(ptr::null_mut());
        interlace_problem_free(ptr::null_mut());
        interlace_spectrum_free(ptr::null_mut());
    }
}

#[test]
fn coarse_verify_passes() {
    let mut pass = -1;
    let s = unsafe { interlace_verify(InterlaceDomain::Square, InterlaceKind::Laplacian, 0.0, 0.125, 3, &mut pass) };
    assert_eq!(s, InterlaceStatus::Ok);
    assert_eq!(pass, 1);
}
