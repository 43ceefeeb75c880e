use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use zetaflow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(zf_last_error()) }.to_string_lossy().into_owned()
}

fn data(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn mesh_metric_and_spectrum_round_trip() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(zf_mesh_icosphere(2, &mut mesh), ZfStatus::Ok);
        let mut topo = ZfTopology::default();
        assert_eq!(zf_mesh_topology(mesh, &mut topo), ZfStatus::Ok);
        assert_eq!((topo.vertices, topo.chi, topo.genus), (162, 2, 0));

        let mut metric = ptr::null_mut();
        assert_eq!(zf_metric_new(mesh, &mut metric), ZfStatus::Ok);
        // The metric shares the mesh, so the mesh handle can go first.
        zf_mesh_free(mesh);
        let n = zf_metric_num_vertices(metric);
        assert_eq!(n, 162);

        let u = vec![2f64.ln(); n];
        let mut scaled = ptr::null_mut();
        assert_eq!(zf_metric_with_u(metric, u.as_ptr(), n, &mut scaled), ZfStatus::Ok);
        let (mut a0, mut a1) = (0.0, 0.0);
        zf_metric_area(metric, &mut a0);
        zf_metric_area(scaled, &mut a1);
        assert!((a1 / a0 - 4.0).abs() < 1e-12);
        assert_eq!(zf_metric_with_u(metric, u.as_ptr(), n - 1, &mut scaled), ZfStatus::InvalidInput);

        let psi = vec![0.3; n];
        let mut rhs = 0.0;
        assert_eq!(zf_polyakov_rhs(metric, psi.as_ptr(), n, &mut rhs), ZfStatus::Ok);
        assert!((rhs - 0.3 * (1.0 - 2.0 / 6.0)).abs() < 1e-9);

        let mut spectrum = ptr::null_mut();
        assert_eq!(zf_spectrum_laplacian(metric, 10, &mut spectrum), ZfStatus::Ok);
        assert_eq!(zf_spectrum_len(spectrum), 10);
        let mut values = [f64::NAN; 4];
        let mut written = 0;
        assert_eq!(zf_spectrum_copy(spectrum, values.as_mut_ptr(), 4, &mut written), ZfStatus::Ok);
        assert_eq!(written, 4);
        assert_eq!(values[0], 0.0);
        assert!((values[1] - 2.0).abs() < 0.05, "{}", values[1]);

        zf_spectrum_free(spectrum);
        zf_metric_free(scaled);
        zf_metric_free(metric);
    }
}

#[test]
fn analytic_determinants() {
    unsafe {
        let mut torus = ptr::null_mut();
        assert_eq!(zf_spectrum_torus(60, 1.0, &mut torus), ZfStatus::Ok);
        let mut scaled = ptr::null_mut();
        assert_eq!(zf_spectrum_scaled(torus, 2.0, &mut scaled), ZfStatus::Ok);
        let (mut z1, mut z2) = (ZfZeta::default(), ZfZeta::default());
        assert_eq!(zf_log_det_zeta(torus, 1.0, &mut z1), ZfStatus::Ok);
        assert_eq!(zf_log_det_zeta(scaled, 0.5, &mut z2), ZfStatus::Ok);
        assert_eq!(z1.zeta0, -1.0);
        assert!((z2.log_det - z1.log_det + 2f64.ln()).abs() < 1e-6);
        assert_eq!(zf_log_det_zeta(torus, -1.0, &mut z1), ZfStatus::InvalidInput);
        zf_spectrum_free(scaled);
        zf_spectrum_free(torus);

        let mut sphere = ptr::null_mut();
        assert_eq!(zf_spectrum_sphere(2, 1.0, &mut sphere), ZfStatus::Ok);
        assert_eq!(zf_spectrum_len(sphere), 9);
        // Too few modes for a determinant is a numerical failure.
        assert_eq!(zf_log_det_zeta(sphere, 1.0, &mut z1), ZfStatus::Numerical);
        zf_spectrum_free(sphere);
    }
}

#[test]
fn thermodynamics_and_models() {
    unsafe {
        let mut s = 0.0;
        assert_eq!(zf_entropy_conformal(std::f64::consts::E, 2, &mut s), ZfStatus::Ok);
        assert_eq!(s, 0.0);
        assert_eq!(zf_log_partition_conformal(1.0, 0, &mut s), ZfStatus::Ok);
        assert_eq!(zf_log_partition_conformal(0.0, 0, &mut s), ZfStatus::InvalidInput);

        let g = [2.0, 0.5, 0.5, 1.0];
        let a = [1.0, 0.0, 0.0, 3.0];
        let mut model = ptr::null_mut();
        assert_eq!(zf_model_new(2, g.as_ptr(), g.as_ptr(), &mut model), ZfStatus::Ok);
        let mut c = ZfClassic::default();
        assert_eq!(zf_verify_classic(model, 2.0, &mut c), ZfStatus::Ok);
        assert!(c.equal && c.rel_diff < 1e-12);
        zf_model_free(model);
        // GA is not symmetric here.
        assert_ne!(zf_model_new(2, g.as_ptr(), a.as_ptr(), &mut model), ZfStatus::Ok);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn files_and_null_handles() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(zf_mesh_load_off(data("genus2.off").as_ptr(), &mut mesh), ZfStatus::Ok);
        let mut topo = ZfTopology::default();
        zf_mesh_topology(mesh, &mut topo);
        assert_eq!(topo.genus, 2);
        zf_mesh_free(mesh);

        assert_eq!(zf_mesh_load_off(data("malformed.off").as_ptr(), &mut mesh), ZfStatus::Parse);
        assert!(last_error().contains(":5:"));
        assert_eq!(zf_mesh_load_off(data("nonmanifold.off").as_ptr(), &mut mesh), ZfStatus::Validation);
        assert_eq!(zf_mesh_load_off(data("absent.off").as_ptr(), &mut mesh), ZfStatus::Io);
        assert_eq!(zf_mesh_load_off(ptr::null(), &mut mesh), ZfStatus::NullPointer);
        assert_eq!(zf_mesh_topology(ptr::null(), &mut topo), ZfStatus::NullPointer);
        assert_eq!(zf_metric_num_vertices(ptr::null()), 0);
        assert_eq!(zf_spectrum_len(ptr::null()), 0);
        zf_mesh_free(ptr::null_mut());
        zf_model_free(ptr::null_mut());
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/zetaflow.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["zf_mesh_icosphere", "zf_log_det_zeta", "zf_verify_classic", "ZF_STATUS_NUMERICAL"] {
        assert!(text.contains(name), "{name} missing from the header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"zetaflow.h\"\n\
         int main(void) {\n\
           ZfMesh *m = 0; ZfTopology t;\n\
           if (zf_mesh_icosphere(1, &m) != ZF_STATUS_OK) return 1;\n\
           zf_mesh_topology(m, &t); zf_mesh_free(m);\n\
           return t.chi == 2 ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let status = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(header.parent().unwrap())
            .arg(&src)
            .status();
        match status {
            Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
            Err(_) => eprintln!("{compiler} not found; skipping"),
        }
    }
}
