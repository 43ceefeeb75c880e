//! Metrics in a fixed conformal class, `g = e^{2u} g₀`, on a triangle mesh.
//!
//! The base metric is given by edge lengths. Everything that depends only on
//! the base (cotangent weights, base areas, angle defects) is computed once and
//! shared between all metrics of the class.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{check_field, Defect, Error, Result, Simplex};
use crate::mesh::TriMesh;
use crate::sparse::CsrMatrix;

/// Quantities of the base metric g₀.
#[derive(Debug)]
pub struct BaseGeometry {
    lengths: Vec<f64>,
    face_areas: Vec<f64>,
    /// Cotangent of the interior angle at each face corner.
    corner_cot: Vec<[f64; 3]>,
    /// Barycentric lumped areas.
    vertex_areas: Vec<f64>,
    /// 2π minus the angle sum at each vertex.
    angle_defect: Vec<f64>,
    stiffness: CsrMatrix,
}

impl BaseGeometry {
    fn new(mesh: &TriMesh, lengths: Vec<f64>) -> Result<Self> {
        if lengths.len() != mesh.edges().len() {
            return Err(Error::invalid(format!(
                "{} edge lengths given for {} edges",
                lengths.len(),
                mesh.edges().len()
            )));
        }
        if let Some(e) = lengths.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(format!("edge {e} has non-positive length")));
        }
        let nv = mesh.num_vertices();
        let mut face_areas = Vec::with_capacity(mesh.num_faces());
        let mut corner_cot = Vec::with_capacity(mesh.num_faces());
        let mut vertex_areas = vec![0.0; nv];
        let mut angle_sum = vec![0.0; nv];
        for (f, (face, fe)) in mesh.faces().iter().zip(mesh.face_edges()).enumerate() {
            let l = fe.map(|e| lengths[e]);
            let area = triangle_area(l).ok_or(Error::Validation {
                defect: Defect::TriangleInequality,
                simplex: Simplex::Face,
                index: f,
            })?;
            let mut cot = [0.0; 3];
            for k in 0..3 {
                let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
                let cos_term = b * b + c * c - a * a;
                cot[k] = cos_term / (4.0 * area);
                angle_sum[face[k]] += (4.0 * area).atan2(cos_term);
                vertex_areas[face[k]] += area / 3.0;
            }
            face_areas.push(area);
            corner_cot.push(cot);
        }
        let angle_defect = angle_sum.iter().map(|s| 2.0 * PI - s).collect();
        let mut geom = BaseGeometry {
            lengths,
            face_areas,
            corner_cot,
            vertex_areas,
            angle_defect,
            stiffness: CsrMatrix::from_triplets(0, &[]),
        };
        geom.stiffness = geom.weighted_stiffness(mesh, None);
        Ok(geom)
    }

    /// Cotangent stiffness with an optional per-face weight.
    pub fn weighted_stiffness(&self, mesh: &TriMesh, face_weights: Option<&[f64]>) -> CsrMatrix {
        let mut edge_w = vec![0.0; mesh.edges().len()];
        for (f, fe) in mesh.face_edges().iter().enumerate() {
            let w = face_weights.map_or(1.0, |fw| fw[f]);
            for k in 0..3 {
                edge_w[fe[k]] += 0.5 * w * self.corner_cot[f][k];
            }
        }
        let nv = mesh.num_vertices();
        let mut diag = vec![0.0; nv];
        let mut t = Vec::with_capacity(2 * edge_w.len() + nv);
        for (&[a, b], &w) in mesh.edges().iter().zip(&edge_w) {
            t.push((a, b, -w));
            t.push((b, a, -w));
            diag[a] += w;
            diag[b] += w;
        }
        t.extend(diag.into_iter().enumerate().map(|(i, d)| (i, i, d)));
        CsrMatrix::from_triplets(nv, &t)
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn corner_cot(&self) -> &[[f64; 3]] {
        &self.corner_cot
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn angle_defect(&self) -> &[f64] {
        &self.angle_defect
    }

    /// Unweighted cotangent stiffness of the base metric.
    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }
}

/// Area from edge lengths, `None` unless the strict triangle inequality holds.
fn triangle_area(l: [f64; 3]) -> Option<f64> {
    let mut s = l;
    s.sort_by(|a, b| b.total_cmp(a));
    let [a, b, c] = s;
    if a >= b + c {
        return None;
    }
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    (p > 0.0).then(|| 0.25 * p.sqrt())
}

#[derive(Debug, Clone)]
pub struct ConformalMetric {
    mesh: Arc<TriMesh>,
    base: Arc<BaseGeometry>,
    u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CurvatureField {
    /// Gauss curvature per vertex.
    pub gauss: Vec<f64>,
    /// Scalar curvature, twice the Gauss curvature.
    pub scalar: Vec<f64>,
    /// Lumped vertex areas in the current metric.
    pub vertex_areas: Vec<f64>,
}

impl CurvatureField {
    /// Σ K_i A_i.
    pub fn total(&self) -> f64 {
        self.gauss.iter().zip(&self.vertex_areas).map(|(k, a)| k * a).sum()
    }

    /// |Σ K_i A_i − 2πχ|.
    pub fn gauss_bonnet_residual(&self, chi: i64) -> f64 {
        (self.total() - 2.0 * PI * chi as f64).abs()
    }
}

/// Base metric of a mesh: stored edge lengths if the mesh carries them,
/// otherwise lengths of the embedding; `u ≡ 0`.
pub fn base_metric(mesh: Arc<TriMesh>) -> Result<ConformalMetric> {
    let lengths = mesh.edge_lengths();
    ConformalMetric::with_lengths(mesh, lengths)
}

/// Returns the metric with `u' = u + du`.
pub fn scale_conformal(metric: &ConformalMetric, du: &[f64]) -> Result<ConformalMetric> {
    check_field("du", du, metric.num_vertices())?;
    let u = metric.u.iter().zip(du).map(|(a, b)| a + b).collect();
    Ok(ConformalMetric { u, ..metric.clone() })
}

pub fn curvature(metric: &ConformalMetric) -> CurvatureField {
    metric.curvature()
}

impl ConformalMetric {
    /// Base metric from explicit per-edge lengths.
    pub fn with_lengths(mesh: Arc<TriMesh>, lengths: Vec<f64>) -> Result<Self> {
        let base = BaseGeometry::new(&mesh, lengths)?;
        let u = vec![0.0; mesh.num_vertices()];
        Ok(ConformalMetric {
            mesh,
            base: Arc::new(base),
            u,
        })
    }

    /// Same base, replaced conformal factor.
    pub fn with_u(&self, u: Vec<f64>) -> Result<Self> {
        check_field("u", &u, self.num_vertices())?;
        Ok(ConformalMetric { u, ..self.clone() })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn base(&self) -> &BaseGeometry {
        &self.base
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn num_vertices(&self) -> usize {
        self.u.len()
    }

    pub fn chi(&self) -> i64 {
        self.mesh.topology().chi
    }

    /// Lumped vertex areas `A₀_i e^{2u_i}`.
    pub fn vertex_areas(&self) -> Vec<f64> {
        self.base
            .vertex_areas
            .iter()
            .zip(&self.u)
            .map(|(a, u)| a * (2.0 * u).exp())
            .collect()
    }

    /// Σ_T area₀(T) · mean_T e^{2u}.
    pub fn area(&self) -> f64 {
        let w: Vec<f64> = self.u.iter().map(|u| (2.0 * u).exp()).collect();
        self.mesh
            .faces()
            .iter()
            .zip(&self.base.face_areas)
            .map(|(f, a)| a * (w[f[0]] + w[f[1]] + w[f[2]]) / 3.0)
            .sum()
    }

    /// Gauss curvature by the conformal rule `K = e^{−2u}(K₀ − Δ₀u)` with the
    /// cotangent Laplacian of the base metric.
    pub fn curvature(&self) -> CurvatureField {
        let su = self.base.stiffness.mul_vec(&self.u);
        let a0 = &self.base.vertex_areas;
        let gauss: Vec<f64> = (0..self.num_vertices())
            .map(|i| (-2.0 * self.u[i]).exp() * (self.base.angle_defect[i] + su[i]) / a0[i])
            .collect();
        CurvatureField {
            scalar: gauss.iter().map(|k| 2.0 * k).collect(),
            gauss,
            vertex_areas: self.vertex_areas(),
        }
    }
}

/// Per-vertex field as CSV with header `vertex_index,value`.
pub fn vertex_field_csv(values: &[f64]) -> String {
    let mut out = String::from("vertex_index,value\n");
    for (i, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", crate::io::fmt_f64(*v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere};

    fn sphere(k: u32) -> ConformalMetric {
        base_metric(Arc::new(generate_icosphere(k).unwrap())).unwrap()
    }

    #[test]
    fn icosphere_area_approaches_sphere() {
        let a = sphere(3).area();
        assert!((a / (4.0 * PI) - 1.0).abs() < 0.01, "{a}");
    }

    #[test]
    fn torus_is_flat_with_unit_area() {
        let m = base_metric(Arc::new(generate_flat_torus(16, 16, 1.0).unwrap())).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        let m = base_metric(Arc::new(generate_flat_torus(8, 8, 1.0).unwrap())).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
        let k = m.curvature();
        assert!(k.gauss.iter().all(|k| k.abs() < 1e-10));
        let m = base_metric(Arc::new(generate_flat_torus(5, 7, 2.5).unwrap())).unwrap();
        assert!((m.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn broken_triangle_inequality_rejected() {
        let mesh = Arc::new(generate_icosphere(0).unwrap());
        let mut lengths = mesh.edge_lengths();
        lengths[0] *= 3.0;
        match ConformalMetric::with_lengths(mesh, lengths) {
            Err(Error::Validation { defect: Defect::TriangleInequality, simplex: Simplex::Face, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gauss_bonnet_base_and_conformal() {
        let m = sphere(4);
        let k = m.curvature();
        assert!(k.gauss_bonnet_residual(2) < 1e-9);
        // Barycentric areas overweight the twelve valence-5 vertices.
        let mut valence = vec![0usize; m.num_vertices()];
        for f in m.mesh().faces() {
            for &v in f {
                valence[v] += 1;
            }
        }
        for (k, d) in k.gauss.iter().zip(&valence) {
            let tol = if *d == 6 { 0.05 } else { 0.15 };
            assert!((k - 1.0).abs() < tol, "{k} at valence {d}");
        }
        let u: Vec<f64> = m.mesh().vertices().iter().map(|p| 0.4 * p[0] * p[1] + 0.2 * p[2]).collect();
        let g = m.with_u(u).unwrap();
        assert!(g.curvature().gauss_bonnet_residual(2) < 1e-9);
    }

    #[test]
    fn constant_scaling() {
        let m = sphere(3);
        let beta: f64 = 3.7;
        let s = scale_conformal(&m, &vec![0.5 * beta.ln(); m.num_vertices()]).unwrap();
        assert!((s.area() / m.area() - beta).abs() < 1e-12 * beta);
        let c = 0.5 * 4f64.ln();
        let s = scale_conformal(&m, &vec![c; m.num_vertices()]).unwrap();
        for (k1, k0) in s.curvature().gauss.iter().zip(m.curvature().gauss) {
            assert!((k1 - k0 / 4.0).abs() < 1e-10 * k0.abs());
        }
        let same = scale_conformal(&m, &vec![0.0; m.num_vertices()]).unwrap();
        assert_eq!(same.u(), m.u());
        assert!(scale_conformal(&m, &vec![f64::NAN; m.num_vertices()]).is_err());
        assert!(scale_conformal(&m, &[0.0]).is_err());
    }

    #[test]
    fn area_matches_direct_summation() {
        let m = sphere(3);
        let du: Vec<f64> = m.mesh().vertices().iter().map(|p| 0.3 * (-(p[2] - 1.0).powi(2)).exp()).collect();
        let s = scale_conformal(&m, &du).unwrap();
        let mut direct = 0.0;
        for f in m.mesh().faces() {
            let [a, b, c] = f.map(|v| m.mesh().vertices()[v]);
            let ab = crate::mesh::sub(b, a);
            let ac = crate::mesh::sub(c, a);
            let cross = [
                ab[1] * ac[2] - ab[2] * ac[1],
                ab[2] * ac[0] - ab[0] * ac[2],
                ab[0] * ac[1] - ab[1] * ac[0],
            ];
            let area = 0.5 * crate::mesh::norm(cross);
            direct += area * f.iter().map(|&v| (2.0 * du[v]).exp()).sum::<f64>() / 3.0;
        }
        assert!((s.area() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn stiffness_has_zero_row_sums() {
        let m = sphere(2);
        let s = m.base().stiffness();
        assert!(s.row_sums().iter().all(|r| r.abs() < 1e-12));
        assert!(s.max_asymmetry() == 0.0);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(vertex_field_csv(&[0.5]), "vertex_index,value\n0,5.0000000000000000e-1\n");
    }
}
