//! Spectra of Laplace-type operators, heat traces, zeta-regularized
//! determinants and the conformal-anomaly identities.

mod eigen;
mod polyakov;
mod zeta;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

pub use eigen::{eigen_spectrum, lowest_eigenvalues, EigenCount};
pub use polyakov::{
    conformal_variation_logdet, mesh_log_det, polyakov_lhs, polyakov_rhs, PolyakovLhs,
    DEFAULT_T0_FRACTION,
};
pub use zeta::{empirical_zeta0, log_det_zeta, ZetaResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Mesh,
    AnalyticSphere,
    AnalyticTorus,
}

/// Ascending eigenvalues of a non-negative self-adjoint operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    kernel_dim: usize,
    source: SpectrumSource,
    area: f64,
    chi: i64,
    /// Every eigenvalue of the operator below this value is present.
    complete_below: f64,
    /// Distinct nonzero eigenvalues with multiplicities.
    levels: Vec<(f64, usize)>,
    /// Size of the discretized operator, when the spectrum may be partial.
    operator_dim: usize,
}

impl Spectrum {
    /// Builds a spectrum from ascending eigenvalues. Values at or below
    /// `zero_threshold` form the kernel and are stored as exact zeros.
    pub fn new(
        mut eigenvalues: Vec<f64>,
        zero_threshold: f64,
        source: SpectrumSource,
        area: f64,
        chi: i64,
        complete_below: f64,
    ) -> Result<Self> {
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("spectrum contains non-finite eigenvalues"));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("eigenvalues must be ascending"));
        }
        if let Some(&v) = eigenvalues.first() {
            if v < -zero_threshold {
                return Err(Error::numerical(format!(
                    "operator is not positive semidefinite (eigenvalue {v:e})"
                )));
            }
        }
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::invalid(format!("spectrum area must be positive, got {area}")));
        }
        let kernel_dim = eigenvalues.iter().take_while(|&&v| v <= zero_threshold).count();
        for v in &mut eigenvalues[..kernel_dim] {
            *v = 0.0;
        }
        let mut levels: Vec<(f64, usize)> = Vec::new();
        for &v in &eigenvalues[kernel_dim..] {
            match levels.last_mut() {
                Some((w, m)) if *w == v => *m += 1,
                _ => levels.push((v, 1)),
            }
        }
        let operator_dim = eigenvalues.len();
        Ok(Spectrum {
            eigenvalues,
            operator_dim,
            kernel_dim,
            source,
            area,
            chi,
            complete_below,
            levels,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[self.kernel_dim..]
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_dim
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn chi(&self) -> i64 {
        self.chi
    }

    pub fn complete_below(&self) -> f64 {
        self.complete_below
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Spectrum of `β·A`: eigenvalues times β, area divided by β.
    pub fn scaled(&self, beta: f64) -> Result<Spectrum> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("scale must be positive, got {beta}")));
        }
        Ok(Spectrum {
            eigenvalues: self.eigenvalues.iter().map(|v| v * beta).collect(),
            area: self.area / beta,
            complete_below: self.complete_below * beta,
            levels: self.levels.iter().map(|&(v, m)| (v * beta, m)).collect(),
            ..self.clone()
        })
    }

    /// Smallest nonzero eigenvalue.
    pub fn gap(&self) -> Option<f64> {
        self.levels.first().map(|l| l.0)
    }

    /// Records the dimension of the operator a partial spectrum came from.
    pub fn with_operator_dim(mut self, n: usize) -> Self {
        self.operator_dim = n.max(self.eigenvalues.len());
        self
    }

    pub fn operator_dim(&self) -> usize {
        self.operator_dim
    }

    /// Highest eigenvalue of the trusted lower quarter of a discretized
    /// spectrum, or the completeness bound if fewer modes were computed.
    pub fn trusted_eigenvalue(&self) -> f64 {
        let idx = self.operator_dim / 4;
        match self.eigenvalues.get(idx) {
            Some(&v) => v,
            None => self.complete_below.min(*self.eigenvalues.last().unwrap_or(&0.0)),
        }
    }

    pub(crate) fn levels(&self) -> &[(f64, usize)] {
        &self.levels
    }
}

/// Round sphere of the given radius: l(l+1)/r² with multiplicity 2l+1.
pub fn analytic_sphere_spectrum(l_max: usize, radius: f64) -> Result<Spectrum> {
    if l_max < 1 {
        return Err(Error::invalid("l_max must be at least 1"));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    let mut eigenvalues = Vec::with_capacity((l_max + 1) * (l_max + 1));
    for l in 0..=l_max {
        let v = (l * (l + 1)) as f64 / r2;
        eigenvalues.extend(std::iter::repeat_n(v, 2 * l + 1));
    }
    let next = ((l_max + 1) * (l_max + 2)) as f64 / r2;
    Spectrum::new(eigenvalues, 0.0, SpectrumSource::AnalyticSphere, 4.0 * PI * r2, 2, next)
}

/// Square flat torus of the given area: 4π²(p² + q²)/area for |p|, |q| ≤ k_max.
pub fn analytic_torus_spectrum(k_max: usize, area_scale: f64) -> Result<Spectrum> {
    if k_max < 1 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if !(area_scale.is_finite() && area_scale > 0.0) {
        return Err(Error::invalid(format!("area must be positive, got {area_scale}")));
    }
    let k = k_max as i64;
    let mut norms: Vec<i64> = Vec::with_capacity(((2 * k + 1) * (2 * k + 1)) as usize);
    for p in -k..=k {
        for q in -k..=k {
            norms.push(p * p + q * q);
        }
    }
    norms.sort_unstable();
    let c = 4.0 * PI * PI / area_scale;
    let eigenvalues = norms.into_iter().map(|s| c * s as f64).collect();
    let next = c * ((k + 1) * (k + 1)) as f64;
    Spectrum::new(eigenvalues, 0.0, SpectrumSource::AnalyticTorus, area_scale, 0, next)
}

/// θ̄(t) = Σ_{λ>0} e^{−λt}.
pub fn heat_trace(spectrum: &Spectrum, t: f64) -> f64 {
    spectrum
        .levels
        .iter()
        .map(|&(v, m)| m as f64 * (-v * t).exp())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_fixture() {
        let s = analytic_sphere_spectrum(2, 1.0).unwrap();
        assert_eq!(s.eigenvalues(), &[0.0, 2.0, 2.0, 2.0, 6.0, 6.0, 6.0, 6.0, 6.0]);
        assert_eq!(s.kernel_dim(), 1);
        let s = analytic_sphere_spectrum(1, 2.0).unwrap();
        assert!(s.nonzero().iter().all(|&v| v == 0.5));
        assert_eq!(analytic_sphere_spectrum(100, 1.0).unwrap().len(), 10201);
        assert!(analytic_sphere_spectrum(0, 1.0).is_err());
    }

    #[test]
    fn torus_fixture() {
        let c = 4.0 * PI * PI;
        let s = analytic_torus_spectrum(1, 1.0).unwrap();
        let mut expected = vec![c; 4];
        expected.extend([2.0 * c; 4]);
        assert_eq!(s.nonzero(), &expected[..]);
        let s2 = analytic_torus_spectrum(2, 1.0).unwrap();
        assert_eq!(s2.nonzero().iter().filter(|&&v| v == 4.0 * c).count(), 4);
        let q = analytic_torus_spectrum(1, 4.0).unwrap();
        for (a, b) in q.nonzero().iter().zip(s.nonzero()) {
            assert_eq!(*a, b / 4.0);
        }
        assert_eq!(s.chi(), 0);
    }

    #[test]
    fn heat_trace_limits() {
        let s = analytic_sphere_spectrum(100, 1.0).unwrap();
        let t: f64 = 10.0;
        let two_term = 3.0 * (-2.0 * t).exp() + 5.0 * (-6.0 * t).exp();
        assert!((heat_trace(&s, t) / two_term - 1.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..15 {
            let h = heat_trace(&s, 0.05 * 1.5f64.powi(k));
            assert!(h < prev);
            prev = h;
        }
        assert!(prev < 1e-10);

        let torus = analytic_torus_spectrum(60, 1.0).unwrap();
        let t = 0.01;
        let approx = 1.0 / (4.0 * PI * t) - 1.0;
        assert!((heat_trace(&torus, t) / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn scaling_moves_area() {
        let s = analytic_sphere_spectrum(3, 1.0).unwrap().scaled(2.0).unwrap();
        assert_eq!(s.nonzero()[0], 4.0);
        assert!((s.area() - 2.0 * PI).abs() < 1e-15);
        assert!(s.scaled(-1.0).is_err());
    }

    #[test]
    fn rejects_negative_spectrum() {
        assert!(Spectrum::new(vec![-1.0, 0.0, 1.0], 1e-9, SpectrumSource::Mesh, 1.0, 2, f64::INFINITY).is_err());
        let s = Spectrum::new(vec![-1e-12, 2e-12, 1.0], 1e-9, SpectrumSource::Mesh, 1.0, 2, f64::INFINITY).unwrap();
        assert_eq!(s.kernel_dim(), 2);
        assert_eq!(s.eigenvalues()[..2], [0.0, 0.0]);
    }
}
