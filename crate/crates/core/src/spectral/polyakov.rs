use std::f64::consts::PI;

use super::{eigen_spectrum, log_det_zeta, EigenCount, Spectrum, ZetaResult};
use crate::error::{check_field, Result};
use crate::metric::{scale_conformal, ConformalMetric};
use crate::operators::{assemble, OperatorSpec};

/// Default split point for mesh determinants, as a fraction of Area/(4π).
/// Scaling `t0` with the area makes the determinant of a constant rescaling
/// exact.
pub const DEFAULT_T0_FRACTION: f64 = 0.3;

/// Right side of the Polyakov formula for `g = e^{ψ} h`:
/// `−(1/48π)∫(|∇ψ|² + 2ψR_h) dA_h + log(Area(g)/Area(h))`.
pub fn polyakov_rhs(metric_h: &ConformalMetric, psi: &[f64]) -> Result<f64> {
    check_field("psi", psi, metric_h.num_vertices())?;
    let g = scale_conformal(metric_h, &half(psi))?;
    let gradient = metric_h.base().stiffness().quad_form(psi);
    let k = metric_h.curvature();
    let curvature: f64 = (0..psi.len())
        .map(|i| psi[i] * k.scalar[i] * k.vertex_areas[i])
        .sum();
    Ok(-(gradient + 2.0 * curvature) / (48.0 * PI) + (g.area() / metric_h.area()).ln())
}

/// `d/dt log det` along `∂g/∂t = ψ g`: `−∫ψ (R/24π − 1/Area) dA`.
pub fn conformal_variation_logdet(metric: &ConformalMetric, psi: &[f64]) -> Result<f64> {
    check_field("psi", psi, metric.num_vertices())?;
    let k = metric.curvature();
    let area = metric.area();
    Ok(-(0..psi.len())
        .map(|i| psi[i] * (k.scalar[i] / (24.0 * PI) - 1.0 / area) * k.vertex_areas[i])
        .sum::<f64>())
}

fn half(psi: &[f64]) -> Vec<f64> {
    psi.iter().map(|p| 0.5 * p).collect()
}

/// Zeta-regularized log det of the mesh Laplacian with `t0 = fraction·Area/(4π)`.
///
/// Computes just enough low modes for the fit window to be complete.
pub fn mesh_log_det(metric: &ConformalMetric, t0_fraction: f64) -> Result<(ZetaResult, Spectrum)> {
    let assembly = assemble(metric, &OperatorSpec::laplacian())?;
    let n = assembly.dim();
    let t0 = t0_fraction * metric.area() / (4.0 * PI);
    // Weyl's law: N(λ) ≈ Area·λ/(4π); the window starts at 2t0/3.
    let needed = 27.7 * 1.5 / t0_fraction;
    let mut k = ((1.3 * needed) as usize + 24).min(n);
    loop {
        let spectrum = eigen_spectrum(&assembly, EigenCount::Lowest(k))?;
        if spectrum.complete_below() * 2.0 * t0 / 3.0 >= 27.7 || k == n {
            return Ok((log_det_zeta(&spectrum, t0)?, spectrum));
        }
        k = (k * 3 / 2).min(n);
    }
}

#[derive(Debug, Clone)]
pub struct PolyakovLhs {
    pub log_det_h: ZetaResult,
    pub log_det_g: ZetaResult,
    /// log det(g) − log det(h).
    pub difference: f64,
}

/// Left side of the Polyakov formula from two mesh determinants.
pub fn polyakov_lhs(metric_h: &ConformalMetric, psi: &[f64], t0_fraction: f64) -> Result<PolyakovLhs> {
    check_field("psi", psi, metric_h.num_vertices())?;
    let g = scale_conformal(metric_h, &half(psi))?;
    let (h_det, _) = mesh_log_det(metric_h, t0_fraction)?;
    let (g_det, _) = mesh_log_det(&g, t0_fraction)?;
    Ok(PolyakovLhs {
        difference: g_det.log_det - h_det.log_det,
        log_det_h: h_det,
        log_det_g: g_det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere};
    use crate::metric::base_metric;
    use std::sync::Arc;

    fn sphere(k: u32) -> ConformalMetric {
        base_metric(Arc::new(generate_icosphere(k).unwrap())).unwrap()
    }

    #[test]
    fn rhs_trivial_cases() {
        let m = sphere(3);
        let n = m.num_vertices();
        assert_eq!(polyakov_rhs(&m, &vec![0.0; n]).unwrap(), 0.0);
        let beta: f64 = 2.5;
        let r = polyakov_rhs(&m, &vec![beta.ln(); n]).unwrap();
        assert!((r - beta.ln() * (1.0 - 2.0 / 6.0)).abs() < 1e-9);
        let t = base_metric(Arc::new(generate_flat_torus(6, 6, 1.0).unwrap())).unwrap();
        let r = polyakov_rhs(&t, &vec![beta.ln(); 36]).unwrap();
        assert!((r - beta.ln()).abs() < 1e-9);
    }

    #[test]
    fn rhs_refines() {
        // Self-convergence: value at level 4 against level 5.
        let rhs = |k| {
            let m = sphere(k);
            let psi: Vec<f64> = m.mesh().vertices().iter().map(|p| 0.3 * p[2]).collect();
            polyakov_rhs(&m, &psi).unwrap()
        };
        let (a, b) = (rhs(4), rhs(5));
        assert!((a - b).abs() < 0.01 * b.abs(), "{a} {b}");
    }

    #[test]
    fn variation_cases() {
        let m = sphere(3);
        let n = m.num_vertices();
        let c = 0.7;
        let v = conformal_variation_logdet(&m, &vec![c; n]).unwrap();
        assert!((v + c * (2.0 / 6.0 - 1.0)).abs() < 1e-12);
        let tau = 0.4;
        let v = conformal_variation_logdet(&m, &vec![1.0 / tau; n]).unwrap();
        assert!((v + (2.0 / 6.0 - 1.0) / tau).abs() < 1e-12);
        // Round sphere: constant curvature, mean-zero ψ.
        let t = base_metric(Arc::new(generate_flat_torus(8, 8, 1.0).unwrap())).unwrap();
        let areas = t.vertex_areas();
        let mut psi: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let mean = psi.iter().zip(&areas).map(|(p, a)| p * a).sum::<f64>() / t.area();
        psi.iter_mut().for_each(|p| *p -= mean);
        assert!(conformal_variation_logdet(&t, &psi).unwrap().abs() < 1e-9);
    }

    #[test]
    fn constant_shift_determinant_is_exact() {
        let m = sphere(3);
        let beta: f64 = 1.8;
        let lhs = polyakov_lhs(&m, &vec![beta.ln(); m.num_vertices()], DEFAULT_T0_FRACTION).unwrap();
        let expected = beta.ln() * (1.0 - 2.0 / 6.0);
        assert!((lhs.difference - expected).abs() < 1e-6 * expected, "{} {expected}", lhs.difference);
    }
}
