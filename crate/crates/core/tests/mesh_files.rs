use std::path::PathBuf;
use std::sync::Arc;

use zetaflow::error::{Defect, Error};
use zetaflow::mesh::{load_off, topology};
use zetaflow::metric::{base_metric, curvature};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn platonic_solids() {
    for (name, v, e, f) in [("icosahedron.off", 12, 30, 20), ("octahedron.off", 6, 12, 8)] {
        let mesh = load_off(data(name)).unwrap();
        let t = topology(&mesh);
        assert_eq!((t.vertices, t.edges, t.faces), (v, e, f), "{name}");
        assert_eq!((t.chi, t.genus), (2, 0), "{name}");
        let k = curvature(&base_metric(Arc::new(mesh)).unwrap());
        assert!(k.gauss_bonnet_residual(2) < 1e-12, "{name}");
    }
}

#[test]
fn octahedron_angle_defects() {
    // Four equilateral corners meet at each vertex, leaving 2π − 4π/3.
    let m = base_metric(Arc::new(load_off(data("octahedron.off")).unwrap())).unwrap();
    for d in m.base().angle_defect() {
        assert!((d - 2.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}

#[test]
fn genus_two_slab() {
    // Counts taken from the generator: 48 vertices, 150 edges, 100 faces.
    let mesh = load_off(data("genus2.off")).unwrap();
    let t = topology(&mesh);
    assert_eq!((t.vertices, t.edges, t.faces), (48, 150, 100));
    assert_eq!((t.chi, t.genus), (-2, 2));
    let k = curvature(&base_metric(Arc::new(mesh)).unwrap());
    assert!(k.gauss_bonnet_residual(-2) < 1e-10);
}

#[test]
fn malformed_file_reports_the_line() {
    match load_off(data("malformed.off")) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 5);
            assert!(message.contains("zero"), "{message}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn shared_edge_is_rejected() {
    match load_off(data("nonmanifold.off")) {
        Err(Error::Validation { defect, .. }) => assert_eq!(defect, Defect::NonManifoldEdge),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn missing_file_names_the_path() {
    let err = load_off(data("absent.off")).unwrap_err();
    assert_eq!(err.kind(), "io");
    assert!(err.to_string().contains("absent.off"));
}
