//! Laplace-type operators on a conformal metric: `−Δ`, the drifted Laplacian
//! `−Δ_f`, and the drifted Schrödinger operator `−Δ_f + V`.
//!
//! All three are assembled against the weighted measure `e^{−f} dA`. In 2D the
//! stiffness part never sees the conformal factor, so Dirichlet energies of the
//! Laplacian and drifted Laplacian are exactly invariant under changes of `u`.

use crate::error::{check_field, Error, Result};
use crate::io::triplet_text;
use crate::metric::ConformalMetric;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Laplacian,
    Drifted,
    Schrodinger,
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(Self::Laplacian),
            "drifted" => Ok(Self::Drifted),
            "schrodinger" => Ok(Self::Schrodinger),
            _ => Err(Error::invalid(format!(
                "unknown operator {s:?}, expected laplacian, drifted or schrodinger"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    /// Drift potential; empty for the Laplacian.
    pub f: Vec<f64>,
    /// Potential; empty unless Schrödinger.
    pub potential: Vec<f64>,
}

impl OperatorSpec {
    pub fn laplacian() -> Self {
        OperatorSpec {
            kind: OperatorKind::Laplacian,
            f: Vec::new(),
            potential: Vec::new(),
        }
    }

    pub fn drifted(f: Vec<f64>) -> Self {
        OperatorSpec {
            kind: OperatorKind::Drifted,
            f,
            potential: Vec::new(),
        }
    }

    pub fn schrodinger(f: Vec<f64>, potential: Vec<f64>) -> Self {
        OperatorSpec {
            kind: OperatorKind::Schrodinger,
            f,
            potential,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            OperatorKind::Laplacian => {
                if !self.f.is_empty() || !self.potential.is_empty() {
                    return Err(Error::invalid("laplacian takes neither f nor V"));
                }
            }
            OperatorKind::Drifted => {
                check_field("f", &self.f, n)?;
                if !self.potential.is_empty() {
                    return Err(Error::invalid("drifted operator takes no V"));
                }
            }
            OperatorKind::Schrodinger => {
                check_field("f", &self.f, n)?;
                check_field("V", &self.potential, n)?;
            }
        }
        Ok(())
    }

    fn f_at(&self, i: usize) -> f64 {
        self.f.get(i).copied().unwrap_or(0.0)
    }

    fn v_at(&self, i: usize) -> f64 {
        self.potential.get(i).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct OperatorAssembly {
    pub kind: OperatorKind,
    /// Weighted cotangent stiffness `S_w`.
    pub stiffness: CsrMatrix,
    /// Diagonal of the lumped weighted mass `M_w`.
    pub mass: Vec<f64>,
    /// Diagonal of the potential matrix `P`.
    pub potential: Vec<f64>,
    /// Unweighted area of the metric the operator was assembled on.
    pub area: f64,
    pub chi: i64,
}

impl OperatorAssembly {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// `S_w + P`.
    pub fn energy_matrix(&self) -> CsrMatrix {
        if self.potential.iter().all(|&p| p == 0.0) {
            self.stiffness.clone()
        } else {
            self.stiffness.plus_diagonal(&self.potential)
        }
    }

    /// Stiffness, mass and potential as `row col value` triplet text.
    pub fn export_triplets(&self) -> (String, String, String) {
        let diag = |d: &[f64]| -> Vec<(usize, usize, f64)> {
            d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect()
        };
        (
            triplet_text(&self.stiffness.triplets()),
            triplet_text(&diag(&self.mass)),
            triplet_text(&diag(&self.potential)),
        )
    }
}

pub fn assemble(metric: &ConformalMetric, spec: &OperatorSpec) -> Result<OperatorAssembly> {
    let n = metric.num_vertices();
    spec.validate(n)?;
    let mesh = metric.mesh();
    let base = metric.base();
    let weight: Vec<f64> = (0..n).map(|i| (-spec.f_at(i)).exp()).collect();
    let stiffness = match spec.kind {
        OperatorKind::Laplacian => base.stiffness().clone(),
        _ => {
            let face_w: Vec<f64> = mesh
                .faces()
                .iter()
                .map(|f| (weight[f[0]] + weight[f[1]] + weight[f[2]]) / 3.0)
                .collect();
            base.weighted_stiffness(mesh, Some(&face_w))
        }
    };
    if let Some((i, j, _)) = stiffness.triplets().into_iter().find(|t| !t.2.is_finite()) {
        return Err(Error::numerical(format!("non-finite stiffness entry at ({i}, {j})")));
    }
    let mass: Vec<f64> = (0..n)
        .map(|i| base.vertex_areas()[i] * (2.0 * metric.u()[i]).exp() * weight[i])
        .collect();
    if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::numerical(format!("mass entry {i} is not positive and finite")));
    }
    let potential = (0..n).map(|i| spec.v_at(i) * mass[i]).collect();
    Ok(OperatorAssembly {
        kind: spec.kind,
        stiffness,
        mass,
        potential,
        area: metric.area(),
        chi: metric.chi(),
    })
}

/// `φᵀ(S_w + P)φ`.
pub fn dirichlet_energy(assembly: &OperatorAssembly, phi: &[f64]) -> Result<f64> {
    check_field("phi", phi, assembly.dim())?;
    let pot: f64 = assembly.potential.iter().zip(phi).map(|(p, x)| p * x * x).sum();
    Ok(assembly.stiffness.quad_form(phi) + pot)
}

/// Time derivatives driving a conformal variation: `∂g/∂t = ψ g`, `∂f/∂t`,
/// `∂V/∂t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub psi: Vec<f64>,
    pub f_dot: Vec<f64>,
    pub v_dot: Vec<f64>,
}

/// `dE/dt` for the energy of a fixed field under a conformal variation.
///
/// Differentiates the discrete energy exactly. In 2D the `−ψ|∇φ|²` and
/// `+ψ|∇φ|²` contributions of the stiffness cancel identically, leaving
/// `−∫ḟ|∇φ|² du + ∫(V̇ + V(ψ − ḟ))φ² du`.
pub fn energy_variation(
    metric: &ConformalMetric,
    spec: &OperatorSpec,
    phi: &[f64],
    rates: &Rates,
) -> Result<f64> {
    let n = metric.num_vertices();
    spec.validate(n)?;
    check_field("phi", phi, n)?;
    check_field("psi", &rates.psi, n)?;
    check_field("f_dot", &rates.f_dot, n)?;
    check_field("V_dot", &rates.v_dot, n)?;
    let (f_dot, v_dot): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| match spec.kind {
            OperatorKind::Laplacian => (0.0, 0.0),
            OperatorKind::Drifted => (rates.f_dot[i], 0.0),
            OperatorKind::Schrodinger => (rates.f_dot[i], rates.v_dot[i]),
        })
        .unzip();

    let mesh = metric.mesh();
    let base = metric.base();
    let dweight: Vec<f64> = (0..n).map(|i| -f_dot[i] * (-spec.f_at(i)).exp()).collect();
    let face_dw: Vec<f64> = mesh
        .faces()
        .iter()
        .map(|f| (dweight[f[0]] + dweight[f[1]] + dweight[f[2]]) / 3.0)
        .collect();
    let stiffness_rate = if face_dw.iter().all(|&w| w == 0.0) {
        0.0
    } else {
        base.weighted_stiffness(mesh, Some(&face_dw)).quad_form(phi)
    };
    let potential_rate: f64 = (0..n)
        .map(|i| {
            let measure = base.vertex_areas()[i] * (2.0 * metric.u()[i] - spec.f_at(i)).exp();
            let v = spec.v_at(i);
            (v_dot[i] + v * (rates.psi[i] - f_dot[i])) * measure * phi[i] * phi[i]
        })
        .sum();
    Ok(stiffness_rate + potential_rate)
}
