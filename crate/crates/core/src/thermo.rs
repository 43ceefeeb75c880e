//! Partition functions, entropies and free energy of the Gaussian field
//! theory built on a Laplace-type operator.
//!
//! With `Z(β) = (det βA)^{−1/2}` and zeta regularization,
//! `log Z = −½ζ(0) log β + const`, and on a surface `ζ(0) = χ/6 − 1`.
//! Everything here is a closed form in `(β, χ)` except the numeric
//! derivatives, which are shared by the two entropy routes so they can be
//! compared to rounding.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{check_field, Error, Result};
use crate::metric::ConformalMetric;
use crate::spectral::{empirical_zeta0, polyakov_rhs, Spectrum, SpectrumSource, DEFAULT_T0_FRACTION};

/// Relative step of the central differences. Smaller steps lose digits to
/// rounding in the function values: at `1e−6` the error floor is near `3e−10`.
pub const DIFF_REL_STEP: f64 = 1e-4;

/// Scale factors applied to `t0` when probing the drifted ζ(0).
const T0_SENSITIVITY: [f64; 5] = [0.5, 0.75, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoState {
    pub beta: f64,
    pub tau: f64,
    #[serde(rename = "logZ")]
    pub log_z: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "F")]
    pub free_energy: f64,
}

impl ThermoState {
    pub fn new(beta: f64, log_z: f64, entropy: f64) -> Result<Self> {
        positive("beta", beta)?;
        let tau = 1.0 / beta;
        Ok(ThermoState {
            beta,
            tau,
            log_z,
            entropy,
            free_energy: -tau * log_z,
        })
    }

    /// State of the conformal-class partition function of a surface.
    pub fn conformal(beta: f64, chi: i64) -> Result<Self> {
        ThermoState::new(
            beta,
            log_partition_conformal(beta, chi)?,
            entropy_conformal(beta, chi)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsStats {
    pub mean_energy: f64,
    pub std_energy: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn coefficient(chi: i64) -> f64 {
    0.5 - chi as f64 / 12.0
}

/// `(1/2 − χ/12) ln β`.
pub fn log_partition_conformal(beta: f64, chi: i64) -> Result<f64> {
    positive("beta", beta)?;
    Ok(coefficient(chi) * beta.ln())
}

/// `(1/2 − χ/12)(ln β − 1)`.
pub fn entropy_conformal(beta: f64, chi: i64) -> Result<f64> {
    positive("beta", beta)?;
    Ok(coefficient(chi) * (beta.ln() - 1.0))
}

/// `dS/dτ = (χ/12 − 1/2)/τ`.
pub fn entropy_rate_tau(tau: f64, chi: i64) -> Result<f64> {
    positive("tau", tau)?;
    Ok((chi as f64 / 12.0 - 0.5) / tau)
}

/// Entropy within a conformal class, measured from the reference metric
/// `g₀` whose determinant is supplied.
pub fn entropy_fixed_class(beta: f64, chi: i64, log_det_g0: f64) -> Result<f64> {
    Ok(entropy_conformal(beta, chi)? - 0.5 * log_det_g0)
}

/// `S(g₁) − S(g₀)` for `g₁ = e^{ψ}g₀`:
/// `(1/96π)∫(|∇ψ|² + 2ψR) dA − ½ log(Area₁/Area₀)`, which is `−½` times the
/// Polyakov right side. Independent of β.
pub fn relative_entropy(metric_g0: &ConformalMetric, psi: &[f64], beta: f64) -> Result<f64> {
    positive("beta", beta)?;
    if let Some(i) = psi.iter().position(|p| !p.is_finite()) {
        return Err(Error::invalid(format!("psi is not finite at vertex {i}")));
    }
    Ok(-0.5 * polyakov_rhs(metric_g0, psi)?)
}

/// `f'(x)` by central differences with relative step [`DIFF_REL_STEP`] and one
/// Richardson step against the doubled step.
pub fn central_derivative<F>(mut f: F, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = DIFF_REL_STEP * x.abs().max(f64::MIN_POSITIVE);
    let mut quotient = |h: f64| -> Result<f64> {
        let (hi, lo) = (x + h, x - h);
        let (a, b) = (f(hi)?, f(lo)?);
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::numerical(format!("function is not finite near {x}")));
        }
        Ok((a - b) / (hi - lo))
    };
    let near = quotient(h)?;
    let far = quotient(2.0 * h)?;
    Ok((4.0 * near - far) / 3.0)
}

/// `S = log Z − β ∂_β log Z` for a log-partition function of β.
pub fn gibbs_entropy<F>(mut log_z: F, beta: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    positive("beta", beta)?;
    if beta * (1.0 - 2.0 * DIFF_REL_STEP) <= 0.0 {
        return Err(Error::invalid("beta too small for the difference stencil"));
    }
    let value = log_z(beta)?;
    if !value.is_finite() {
        return Err(Error::numerical(format!("log Z is not finite at beta = {beta}")));
    }
    let slope = central_derivative(&mut log_z, beta)?;
    Ok(value - beta * slope)
}

/// `F = −τ log Z`.
pub fn free_energy(state: &ThermoState) -> f64 {
    -state.tau * state.log_z
}

/// `S = −∂F/∂τ`.
pub fn entropy_from_free_energy<F>(free_energy_of_tau: F, tau: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    positive("tau", tau)?;
    Ok(-central_derivative(free_energy_of_tau, tau)?)
}

/// Entropy of a drifted operator with the `log det` ratio taken from the
/// heat trace.
#[derive(Debug, Clone, Serialize)]
pub struct DriftedEntropy {
    /// `−½ζ(0)(ln β − 1)`, excluding the unknown additive constant.
    pub entropy: f64,
    pub zeta0_empirical: f64,
    pub t0: f64,
    /// `(t0, ζ(0))` pairs at the scaled split points that the spectrum supports.
    pub sensitivity: Vec<(f64, f64)>,
    /// Spread of ζ(0) across the sensitivity points.
    pub zeta0_spread: f64,
    /// The path-integral normalization of the reference metric enters as an
    /// additive constant that no spectrum determines. It is reported, never
    /// folded into `entropy`; τ-derivatives along a conformal flow cancel it.
    pub additive_constant: Option<f64>,
}

/// Entropy from `G(β) = log det βA − log det A = ζ(0) ln β`, with ζ(0) read
/// off the heat trace since no closed form is assumed for a drifted operator.
/// `t0` defaults to `0.3·Area/(4π)` for mesh spectra.
pub fn entropy_drifted(beta: f64, spectrum: &Spectrum, t0: Option<f64>) -> Result<DriftedEntropy> {
    positive("beta", beta)?;
    let t0 = match t0 {
        Some(t) => t,
        None => match spectrum.source() {
            SpectrumSource::Mesh => DEFAULT_T0_FRACTION * spectrum.area() / (4.0 * PI),
            _ => 1.0,
        },
    };
    positive("t0", t0)?;
    let zeta0 = empirical_zeta0(spectrum, t0)?;
    let sensitivity: Vec<(f64, f64)> = T0_SENSITIVITY
        .iter()
        .filter_map(|s| empirical_zeta0(spectrum, s * t0).ok().map(|z| (s * t0, z)))
        .collect();
    let (lo, hi) = sensitivity
        .iter()
        .fold((zeta0, zeta0), |(lo, hi), &(_, z)| (lo.min(z), hi.max(z)));
    Ok(DriftedEntropy {
        entropy: -0.5 * zeta0 * (beta.ln() - 1.0),
        zeta0_empirical: zeta0,
        t0,
        sensitivity,
        zeta0_spread: hi - lo,
        additive_constant: None,
    })
}

/// Perelman-type functional on a surface:
/// `∫(τ(R + |∇f|²) + f − 2)(4πτ)^{−1} e^{−f} dA`.
///
/// The gradient term uses the cotangent stiffness weighted per face by the
/// mean of `e^{−f}`; `|∇f|² dA` is conformally invariant so the base
/// stiffness serves every `u`.
#[allow(non_snake_case)]
pub fn evaluate_W(metric: &ConformalMetric, f: &[f64], tau: f64) -> Result<f64> {
    positive("tau", tau)?;
    check_field("f", f, metric.num_vertices())?;
    let k = metric.curvature();
    let pointwise: f64 = (0..f.len())
        .map(|i| k.vertex_areas[i] * (tau * k.scalar[i] + f[i] - 2.0) * (-f[i]).exp())
        .sum();
    let weight: Vec<f64> = f.iter().map(|v| (-v).exp()).collect();
    let face_w: Vec<f64> = metric
        .mesh()
        .faces()
        .iter()
        .map(|t| (weight[t[0]] + weight[t[1]] + weight[t[2]]) / 3.0)
        .collect();
    let gradient = metric
        .base()
        .weighted_stiffness(metric.mesh(), Some(&face_w))
        .quad_form(f);
    Ok((pointwise + tau * gradient) / (4.0 * PI * tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere};
    use crate::metric::base_metric;
    use crate::operators::{assemble, OperatorSpec};
    use crate::spectral::{eigen_spectrum, EigenCount};
    use std::f64::consts::E;
    use std::sync::Arc;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn closed_forms() {
        close(log_partition_conformal(1.0, 5).unwrap(), 0.0, 0.0);
        close(log_partition_conformal(E, 2).unwrap(), 1.0 / 3.0, 1e-15);
        close(log_partition_conformal(E * E, -2).unwrap(), 4.0 / 3.0, 1e-15);
        close(entropy_conformal(1.0, 2).unwrap(), -1.0 / 3.0, 1e-15);
        close(entropy_conformal(3.7, 6).unwrap(), 0.0, 0.0);
        close(entropy_conformal(E, 0).unwrap(), 0.0, 1e-16);
        close(entropy_rate_tau(1.0, 2).unwrap(), -1.0 / 3.0, 1e-15);
        close(entropy_rate_tau(2.0, -2).unwrap(), -1.0 / 3.0, 1e-15);
        assert_eq!(entropy_rate_tau(0.3, 6).unwrap(), 0.0);
        close(entropy_fixed_class(1.0, 2, 0.0).unwrap(), -1.0 / 3.0, 1e-15);
        close(entropy_fixed_class(1.0, 2, 1.4).unwrap(), -1.0 / 3.0 - 0.7, 1e-15);
        assert!(log_partition_conformal(0.0, 2).is_err());
        assert!(entropy_rate_tau(-1.0, 2).is_err());
    }

    #[test]
    fn rate_signs() {
        for chi in -10..=10 {
            let r = entropy_rate_tau(0.7, chi).unwrap();
            assert_eq!(r.partial_cmp(&0.0).unwrap(), chi.cmp(&6));
        }
    }

    #[test]
    fn gibbs_entropy_examples() {
        close(gibbs_entropy(|_| Ok(2.5), 1.3).unwrap(), 2.5, 1e-12);
        let a = 0.75;
        for beta in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let s = gibbs_entropy(|b| Ok(a * b.ln()), beta).unwrap();
            close(s, a * (beta.ln() - 1.0), 1e-11);
        }
        // Finite Gaussian: log Z = −(n/2) ln β + c.
        let (n, c) = (5.0, 0.4);
        let s = gibbs_entropy(|b: f64| Ok(-0.5 * n * b.ln() + c), 2.0).unwrap();
        close(s, c - 0.5 * n * 2f64.ln() + 0.5 * n, 1e-10);
        assert!(gibbs_entropy(|_| Err(Error::numerical("boom")), 1.0).is_err());
        assert!(gibbs_entropy(|b| Ok(1.0 / (b - 1.0)), 1.0).is_err());
    }

    #[test]
    fn free_energy_route() {
        let s = ThermoState::conformal(2.0, 2).unwrap();
        close(s.tau * s.beta, 1.0, 1e-15);
        close(free_energy(&s), -s.tau * s.log_z, 0.0);
        close(s.free_energy, free_energy(&s), 0.0);
        for beta in [0.2, 1.0, 7.0] {
            let tau = 1.0 / beta;
            let sf = entropy_from_free_energy(|t| Ok(-t * log_partition_conformal(1.0 / t, 2)?), tau).unwrap();
            close(sf, (beta.ln() - 1.0) / 3.0, 1e-10);
            let sg = gibbs_entropy(|b| log_partition_conformal(b, 2), beta).unwrap();
            close(sf, sg, 1e-10);
        }
        close(entropy_from_free_energy(|_| Ok(0.0), 1.0).unwrap(), 0.0, 0.0);
    }

    #[test]
    fn fixed_class_derivative_matches_rate() {
        for beta in [0.5, 2.0] {
            let d = central_derivative(|t| entropy_fixed_class(1.0 / t, -2, 0.9), 1.0 / beta).unwrap();
            close(d, entropy_rate_tau(1.0 / beta, -2).unwrap(), 1e-9);
        }
    }

    #[test]
    fn relative_entropy_identities() {
        let m = base_metric(Arc::new(generate_icosphere(3).unwrap())).unwrap();
        let n = m.num_vertices();
        assert_eq!(relative_entropy(&m, &vec![0.0; n], 2.0).unwrap(), 0.0);
        let c = 0.4;
        close(relative_entropy(&m, &vec![c; n], 1.0).unwrap(), -c * (0.5 - 2.0 / 12.0), 1e-12);
        let psi: Vec<f64> = m.mesh().vertices().iter().map(|p| 0.2 * p[0] + 0.1 * p[1] * p[2]).collect();
        let forward = relative_entropy(&m, &psi, 1.0).unwrap();
        close(forward, -0.5 * polyakov_rhs(&m, &psi).unwrap(), 1e-15);
        let g1 = crate::metric::scale_conformal(&m, &psi.iter().map(|p| 0.5 * p).collect::<Vec<_>>()).unwrap();
        let neg: Vec<f64> = psi.iter().map(|p| -p).collect();
        close(relative_entropy(&g1, &neg, 1.0).unwrap(), -forward, 1e-12);
    }

    #[test]
    fn w_functional_cases() {
        let sphere = base_metric(Arc::new(generate_icosphere(4).unwrap())).unwrap();
        let n = sphere.num_vertices();
        for (c, tau) in [(2.0, 1.0), (0.5, 0.3)] {
            let w = evaluate_W(&sphere, &vec![c; n], tau).unwrap();
            let expected = (-c).exp() * (2.0 * tau + c - 2.0) / tau;
            close(w, expected, 0.01 * expected.abs());
        }
        let torus = base_metric(Arc::new(generate_flat_torus(8, 8, 1.0).unwrap())).unwrap();
        let w = evaluate_W(&torus, &vec![0.0; 64], 1.0).unwrap();
        close(w, -1.0 / (2.0 * PI), 1e-6);
        assert!(evaluate_W(&torus, &[0.0; 3], 1.0).is_err());
    }

    #[test]
    fn drifted_entropy_reduces_to_laplacian() {
        let m = base_metric(Arc::new(generate_icosphere(3).unwrap())).unwrap();
        let n = m.num_vertices();
        let flat = eigen_spectrum(&assemble(&m, &OperatorSpec::drifted(vec![0.0; n])).unwrap(), EigenCount::All).unwrap();
        let shifted = eigen_spectrum(&assemble(&m, &OperatorSpec::drifted(vec![0.8; n])).unwrap(), EigenCount::All).unwrap();
        for beta in [0.5, 2.0] {
            let a = entropy_drifted(beta, &flat, None).unwrap();
            close(a.entropy, entropy_conformal(beta, 2).unwrap(), 0.02);
            let b = entropy_drifted(beta, &shifted, None).unwrap();
            close(a.entropy, b.entropy, 1e-6);
            assert!(a.sensitivity.len() >= 3);
            assert!(a.additive_constant.is_none());
        }
    }
}
