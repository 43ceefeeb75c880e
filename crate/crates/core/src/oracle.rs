//! Finite-dimensional Gaussian field theory, where every partition function,
//! measure change and Gibbs moment has a closed form.
//!
//! A model is a metric `G` on `ℝⁿ` and an operator `A` self-adjoint for it,
//! so `B = GA` is symmetric and the energy is `⟨φ, Aφ⟩_G = φᵀBφ`. The
//! measure attached to a model is `π^{−n/2} dc₁⋯dcₙ` in the coordinates of a
//! `G`-orthonormal eigenbasis of `A`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stencil::grid_derivative;
use crate::thermo::{central_derivative, GibbsStats};

pub const MIN_MC_SAMPLES: usize = 10_000;
pub const MAX_MC_DIM: usize = 8;
/// Nodes per stencil for derivatives along model paths.
const PATH_STENCIL: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    g: DMatrix<f64>,
    a: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

/// JSON form: row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub dim: usize,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax() / m.amax().max(f64::MIN_POSITIVE)
}

impl FiniteModel {
    pub fn new(g: DMatrix<f64>, a: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if n == 0 || !g.is_square() || a.shape() != (n, n) {
            return Err(Error::invalid("G and A must be square matrices of the same nonzero size"));
        }
        if g.iter().chain(a.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("model entries must be finite"));
        }
        if asymmetry(&g) > 1e-12 {
            return Err(Error::invalid("G is not symmetric"));
        }
        if asymmetry(&(&g * &a)) > 1e-12 {
            return Err(Error::invalid("A is not self-adjoint for G: GA is not symmetric"));
        }
        if Cholesky::new(g.clone()).is_none() {
            return Err(Error::invalid("G is not positive definite"));
        }
        let mut model = FiniteModel { g, a, eigenvalues: Vec::new() };
        let (values, _) = model.eigen();
        if values[0] <= 0.0 {
            return Err(Error::invalid(format!("A is not positive definite (eigenvalue {:e})", values[0])));
        }
        model.eigenvalues = values;
        Ok(model)
    }

    /// Model with the given metric and a diagonal operator.
    pub fn diagonal(lambda: &[f64]) -> Result<Self> {
        let n = lambda.len();
        FiniteModel::new(DMatrix::identity(n, n), DMatrix::from_diagonal(&DVector::from_column_slice(lambda)))
    }

    /// Seeded random model: `G = MᵀM + I`, `A = G⁻¹(NᵀN + εI)`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = |_, _| -> f64 { StandardNormal.sample(&mut rng) };
        let m = DMatrix::from_fn(n, n, &mut normal);
        let k = DMatrix::from_fn(n, n, &mut normal);
        let g = m.transpose() * &m + DMatrix::identity(n, n);
        let b = k.transpose() * &k + DMatrix::identity(n, n) * 0.1;
        let b = (&b + b.transpose()) * 0.5;
        let a = Cholesky::new(g.clone()).expect("G is positive definite").solve(&b);
        let g_sym = (&g + g.transpose()) * 0.5;
        // Re-symmetrize GA against rounding in the solve.
        let ga = &g_sym * &a;
        let a = if asymmetry(&ga) > 1e-12 {
            Cholesky::new(g_sym.clone()).unwrap().solve(&((&ga + ga.transpose()) * 0.5))
        } else {
            a
        };
        FiniteModel::new(g_sym, a)
    }

    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let n = json.dim;
        if json.g.len() != n * n || json.a.len() != n * n {
            return Err(Error::invalid(format!("model of dim {n} needs {} entries per matrix", n * n)));
        }
        FiniteModel::new(DMatrix::from_row_slice(n, n, &json.g), DMatrix::from_row_slice(n, n, &json.a))
    }

    pub fn to_json(&self) -> ModelJson {
        let row_major = |m: &DMatrix<f64>| m.transpose().iter().copied().collect();
        ModelJson {
            dim: self.dim(),
            g: row_major(&self.g),
            a: row_major(&self.a),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn operator(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Ascending eigenvalues of `A`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Energy matrix `B = GA`, symmetrized.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let b = &self.g * &self.a;
        (&b + b.transpose()) * 0.5
    }

    /// Model at the metric `G/β`, whose operator is `βA`.
    pub fn rescaled(&self, beta: f64) -> Result<Self> {
        positive("beta", beta)?;
        FiniteModel::new(&self.g / beta, &self.a * beta)
    }

    /// Ascending eigenvalues and the `G`-orthonormal eigenbasis.
    fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let l = Cholesky::new(self.g.clone()).expect("validated").l();
        let l_inv = l.clone().try_inverse().expect("triangular factor is invertible");
        let c = &l_inv * self.energy_matrix() * l_inv.transpose();
        let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..c.nrows()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let q = DMatrix::from_fn(c.nrows(), c.ncols(), |r, k| eig.eigenvectors[(r, order[k])]);
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        (values, l_inv.transpose() * q)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// A `G`-orthonormal eigenbasis, the coordinates of the model's measure.
#[derive(Debug, Clone)]
pub struct MeasureFrame {
    basis: DMatrix<f64>,
}

impl MeasureFrame {
    pub fn of(model: &FiniteModel) -> Self {
        MeasureFrame { basis: model.eigen().1 }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn jacobian_to(&self, other: &MeasureFrame) -> Result<f64> {
        jacobian(self, other)
    }
}

/// `J` with `Dφ₁ = J Dφ₀`: the determinant of the map from coordinates in
/// frame 0 to coordinates in frame 1.
pub fn jacobian(frame0: &MeasureFrame, frame1: &MeasureFrame) -> Result<f64> {
    let n = frame0.basis.nrows();
    if frame1.basis.nrows() != n {
        return Err(Error::invalid(format!(
            "frames have dimensions {n} and {}",
            frame1.basis.nrows()
        )));
    }
    let change = frame1
        .basis
        .clone()
        .lu()
        .solve(&frame0.basis)
        .ok_or_else(|| Error::numerical("frame basis is singular"))?;
    Ok(change.determinant().abs())
}

/// `∏(βλᵢ)^{−1/2}`.
pub fn exact_partition(model: &FiniteModel, beta: f64) -> Result<f64> {
    Ok(log_partition(model, beta)?.exp())
}

/// `−½ Σ ln(βλᵢ)`.
pub fn log_partition(model: &FiniteModel, beta: f64) -> Result<f64> {
    positive("beta", beta)?;
    Ok(-0.5 * model.eigenvalues.iter().map(|l| (beta * l).ln()).sum::<f64>())
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Importance-sampled `∫e^{−βΣλᵢcᵢ²} π^{−n/2} dc`.
///
/// The proposal is a centered Gaussian with variance `max(½, 1/(2βλᵢ))` per
/// coordinate. Variance ½ alone gives weights `e^{(1−βλ)c²}`, whose second
/// moment diverges once `βλ ≤ ½`; widening keeps every weight bounded.
pub fn mc_partition(model: &FiniteModel, beta: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    positive("beta", beta)?;
    check_mc(model, samples)?;
    let rates: Vec<f64> = model.eigenvalues.iter().map(|l| beta * l).collect();
    let var: Vec<f64> = rates.iter().map(|r| (0.5f64).max(0.5 / r)).collect();
    // log of π^{−1/2} / q(0) per coordinate.
    let log_norm: f64 = var.iter().map(|v| 0.5 * (2.0 * v).ln()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut log_w = log_norm;
        for (r, v) in rates.iter().zip(&var) {
            let z: f64 = StandardNormal.sample(&mut rng);
            let c2 = v * z * z;
            log_w += c2 / (2.0 * v) - r * c2;
        }
        weights.push(log_w.exp());
    }
    let (mean, var_w) = mean_and_variance(&weights);
    Ok(McEstimate {
        estimate: mean,
        std_error: (var_w / samples as f64).sqrt(),
        samples,
        seed,
    })
}

fn check_mc(model: &FiniteModel, samples: usize) -> Result<()> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::invalid(format!("at least {MIN_MC_SAMPLES} samples are required, got {samples}")));
    }
    if model.dim() > MAX_MC_DIM {
        return Err(Error::invalid(format!("Monte Carlo is limited to dimension {MAX_MC_DIM}")));
    }
    Ok(())
}

/// Pairwise sum, so the result does not depend on accumulation order drift.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn mean_and_variance(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&sq) / (n - 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub closed_form: f64,
    pub rel_diff: f64,
    pub equal: bool,
}

/// Both sides of `∫e^{−⟨φ,A_{g/β}φ⟩_g} Dφ_g = ∫e^{−⟨φ,A_gφ⟩_g} Dφ_{g/β}`.
///
/// The left side diagonalizes `βA` in `G`. The right side integrates in the
/// frame of `G`, then converts to the measure of `G/β` through the numerical
/// Jacobian between the two frames.
pub fn verify_classic(model: &FiniteModel, beta: f64) -> Result<ClassicCheck> {
    positive("beta", beta)?;
    let n = model.dim();
    let scaled_op = FiniteModel::new(model.g.clone(), &model.a * beta)?;
    let lhs = (-0.5 * scaled_op.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()).exp();

    let frame_g = MeasureFrame::of(model);
    let frame_scaled = MeasureFrame::of(&model.rescaled(beta)?);
    let j = jacobian(&frame_g, &frame_scaled)?;
    let rhs = j * (-0.5 * model.eigenvalues.iter().map(|l| l.ln()).sum::<f64>()).exp();

    let closed_form = beta.powf(-(n as f64) / 2.0) / model.eigenvalues.iter().product::<f64>().sqrt();
    let rel_diff = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
    Ok(ClassicCheck {
        lhs,
        rhs,
        closed_form,
        rel_diff,
        equal: rel_diff <= 1e-12,
    })
}

/// Closed-form Gaussian moments of `E = ⟨φ, Aφ⟩` under `e^{−βE}`:
/// `⟨E⟩ = n/(2β)`, `σ² = n/(2β²)`.
pub fn gibbs_stats(model: &FiniteModel, beta: f64) -> Result<GibbsStats> {
    positive("beta", beta)?;
    let n = model.dim() as f64;
    Ok(GibbsStats {
        mean_energy: n / (2.0 * beta),
        std_energy: (n / 2.0).sqrt() / beta,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct McGibbs {
    pub mean_energy: f64,
    pub variance: f64,
    pub variance_std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Energy moments from direct samples of the Gibbs measure: in eigen
/// coordinates `cᵢ ~ N(0, 1/(2βλᵢ))`.
pub fn mc_gibbs_stats(model: &FiniteModel, beta: f64, samples: usize, seed: u64) -> Result<McGibbs> {
    positive("beta", beta)?;
    check_mc(model, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let energies: Vec<f64> = (0..samples)
        .map(|_| {
            model
                .eigenvalues
                .iter()
                .map(|l| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let c2 = z * z / (2.0 * beta * l);
                    l * c2
                })
                .sum()
        })
        .collect();
    let (mean, variance) = mean_and_variance(&energies);
    let m4: Vec<f64> = energies.iter().map(|e| (e - mean).powi(4)).collect();
    let m4 = pairwise_sum(&m4) / samples as f64;
    Ok(McGibbs {
        mean_energy: mean,
        variance,
        variance_std_error: ((m4 - variance * variance) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsIdentity {
    pub tau: f64,
    /// dS/dτ by differences of the closed-form `S(τ) = ln Z − β∂_β ln Z`.
    pub ds_dtau: f64,
    /// σ²/τ³.
    pub fluctuation: f64,
    pub residual: f64,
}

/// `∂S/∂τ = σ²/τ³`.
pub fn gibbs_identity(model: &FiniteModel, beta: f64) -> Result<GibbsIdentity> {
    positive("beta", beta)?;
    let tau = 1.0 / beta;
    let half_n = model.dim() as f64 / 2.0;
    // β∂_β ln Z = −n/2 for every Gaussian model.
    let entropy = |t: f64| -> Result<f64> { Ok(log_partition(model, 1.0 / t)? + half_n) };
    let ds_dtau = central_derivative(entropy, tau)?;
    let sigma = gibbs_stats(model, beta)?.std_energy;
    let fluctuation = sigma * sigma / tau.powi(3);
    Ok(GibbsIdentity {
        tau,
        ds_dtau,
        fluctuation,
        residual: (ds_dtau - fluctuation).abs(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalizedPath {
    pub t: Vec<f64>,
    /// `Z_g(β)/Z_g(1)`.
    pub ratio: Vec<f64>,
    /// `Φ = d/dt ln Z_g(1)`.
    pub phi: Vec<f64>,
    /// `d/dt ln J(g(t₀), g(t))`.
    pub measure_rate: Vec<f64>,
    /// `⟨∂E/∂t⟩ = ½ tr(B⁻¹Ḃ)` under the Gibbs measure at β = 1.
    pub mean_energy_rate: Vec<f64>,
    /// `measure_rate − Φ − ⟨∂E/∂t⟩`, zero when the measure change exactly
    /// accounts for the change of `Z_g(1)`.
    pub residual: Vec<f64>,
    pub max_residual: f64,
}

/// Normalized partition function along a path of models, with the
/// measure-invariance residual. Derivatives are 7-point differences on the
/// supplied grid.
pub fn normalized_partition(path: &[(f64, FiniteModel)], beta: f64) -> Result<NormalizedPath> {
    positive("beta", beta)?;
    if path.len() < 3 {
        return Err(Error::invalid("a model path needs at least three points"));
    }
    let n = path[0].1.dim();
    if path.iter().any(|(_, m)| m.dim() != n) {
        return Err(Error::invalid("models along a path must share a dimension"));
    }
    let t: Vec<f64> = path.iter().map(|p| p.0).collect();
    if t.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::invalid("path times must be strictly increasing"));
    }
    let mut ratio = Vec::with_capacity(path.len());
    let mut log_z1 = Vec::with_capacity(path.len());
    let mut log_j = Vec::with_capacity(path.len());
    let frame0 = MeasureFrame::of(&path[0].1);
    for (_, m) in path {
        let z1 = log_partition(m, 1.0)?;
        ratio.push((log_partition(m, beta)? - z1).exp());
        log_z1.push(z1);
        log_j.push(jacobian(&frame0, &MeasureFrame::of(m))?.ln());
    }
    let phi = grid_derivative(&t, &log_z1, PATH_STENCIL);
    let measure_rate = grid_derivative(&t, &log_j, PATH_STENCIL);

    // Ḃ entrywise on the grid.
    let energies: Vec<DMatrix<f64>> = path.iter().map(|(_, m)| m.energy_matrix()).collect();
    let mut b_dot = vec![DMatrix::<f64>::zeros(n, n); path.len()];
    for r in 0..n {
        for c in 0..n {
            let series: Vec<f64> = energies.iter().map(|b| b[(r, c)]).collect();
            for (k, d) in grid_derivative(&t, &series, PATH_STENCIL).into_iter().enumerate() {
                b_dot[k][(r, c)] = d;
            }
        }
    }
    let mut mean_energy_rate = Vec::with_capacity(path.len());
    for (b, bd) in energies.iter().zip(&b_dot) {
        let chol = Cholesky::new(b.clone()).ok_or_else(|| Error::numerical("energy matrix is not positive definite"))?;
        mean_energy_rate.push(0.5 * chol.solve(bd).trace());
    }
    let residual: Vec<f64> = (0..path.len())
        .map(|k| measure_rate[k] - phi[k] - mean_energy_rate[k])
        .collect();
    let max_residual = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(NormalizedPath {
        t,
        ratio,
        phi,
        measure_rate,
        mean_energy_rate,
        residual,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) {
        assert!((a - b).abs() <= rel * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn partition_examples() {
        let m = FiniteModel::diagonal(&[1.0, 4.0]).unwrap();
        close(exact_partition(&m, 1.0).unwrap(), 0.5, 1e-15);
        close(exact_partition(&m, 2.0).unwrap(), 0.25, 1e-15);
        let one = FiniteModel::diagonal(&[1.0]).unwrap();
        close(exact_partition(&one, 9.0).unwrap(), 1.0 / 3.0, 1e-15);
        let r = FiniteModel::random(5, 3).unwrap();
        let folded = FiniteModel::new(r.metric().clone(), r.operator() * 2.5).unwrap();
        close(exact_partition(&r, 2.5).unwrap(), exact_partition(&folded, 1.0).unwrap(), 1e-13);
    }

    #[test]
    fn rejects_bad_models() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(FiniteModel::new(g, DMatrix::identity(2, 2)).is_err());
        let neg = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(FiniteModel::new(DMatrix::identity(2, 2), neg.clone()).is_err());
        assert!(FiniteModel::new(neg, DMatrix::identity(2, 2)).is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(FiniteModel::new(DMatrix::identity(2, 2), a).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = FiniteModel::random(3, 11).unwrap();
        let text = serde_json::to_string(&m.to_json()).unwrap();
        assert!(text.contains("\"G\"") && text.contains("\"dim\":3"));
        let back = FiniteModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.metric(), m.metric());
        assert!(FiniteModel::from_json(&ModelJson { dim: 2, g: vec![1.0], a: vec![1.0] }).is_err());
    }

    #[test]
    fn classic_identity() {
        let m = FiniteModel::diagonal(&[1.0, 4.0]).unwrap();
        let c = verify_classic(&m, 4.0).unwrap();
        assert!(c.equal);
        close(c.lhs, 0.125, 1e-14);
        close(c.rhs, 0.125, 1e-14);
        let r = FiniteModel::random(6, 42).unwrap();
        let c = verify_classic(&r, 1.0).unwrap();
        close(c.lhs, exact_partition(&r, 1.0).unwrap(), 1e-12);
        let c = verify_classic(&r, 3.0).unwrap();
        assert!(c.equal, "{c:?}");
        close(c.lhs, c.closed_form, 1e-12);
    }

    #[test]
    fn jacobian_properties() {
        let m = FiniteModel::random(4, 7).unwrap();
        let f = MeasureFrame::of(&m);
        close(jacobian(&f, &f).unwrap(), 1.0, 1e-13);
        let beta: f64 = 2.7;
        let scaled = MeasureFrame::of(&m.rescaled(beta).unwrap());
        close(jacobian(&f, &scaled).unwrap(), beta.powf(-2.0), 1e-13);
        let (a, b, c) = (
            MeasureFrame::of(&FiniteModel::random(4, 1).unwrap()),
            MeasureFrame::of(&FiniteModel::random(4, 2).unwrap()),
            MeasureFrame::of(&FiniteModel::random(4, 3).unwrap()),
        );
        let direct = jacobian(&a, &c).unwrap();
        close(jacobian(&a, &b).unwrap() * jacobian(&b, &c).unwrap(), direct, 1e-10);
        let small = MeasureFrame::of(&FiniteModel::random(3, 1).unwrap());
        assert!(jacobian(&a, &small).is_err());
    }

    #[test]
    fn monte_carlo() {
        let m = FiniteModel::diagonal(&[1.0, 4.0]).unwrap();
        let est = mc_partition(&m, 1.0, 200_000, 5).unwrap();
        assert!((est.estimate - 0.5).abs() <= 3.0 * est.std_error, "{est:?}");
        let again = mc_partition(&m, 1.0, 200_000, 5).unwrap();
        assert_eq!(est.estimate.to_bits(), again.estimate.to_bits());
        let one = mc_partition(&FiniteModel::diagonal(&[1.0]).unwrap(), 1.0, 10_000, 1).unwrap();
        close(one.estimate, 1.0, 1e-13);
        // Small βλ where the narrow proposal would diverge.
        let soft = FiniteModel::diagonal(&[0.1, 3.0, 8.0]).unwrap();
        let est = mc_partition(&soft, 0.5, 100_000, 9).unwrap();
        let exact = exact_partition(&soft, 0.5).unwrap();
        assert!(est.std_error > 0.0);
        assert!((est.estimate - exact).abs() <= 3.0 * est.std_error, "{est:?} {exact}");
        // Every βλ ≤ 1: the proposal is the integrand, so every weight is exact.
        let matched = FiniteModel::diagonal(&[0.1, 0.3, 2.0]).unwrap();
        let est = mc_partition(&matched, 0.5, 10_000, 9).unwrap();
        close(est.estimate, exact_partition(&matched, 0.5).unwrap(), 1e-13);
        assert!(mc_partition(&m, 1.0, 100, 5).is_err());
    }

    #[test]
    fn gibbs_moments() {
        let m = FiniteModel::random(4, 8).unwrap();
        let s = gibbs_stats(&m, 2.0).unwrap();
        close(s.mean_energy, 1.0, 1e-15);
        close(s.std_energy * s.std_energy, 0.5, 1e-15);
        close(gibbs_stats(&m, 4.0).unwrap().mean_energy, 0.5, 1e-15);
        for beta in [0.5, 1.0, 2.0, 4.0] {
            let id = gibbs_identity(&m, beta).unwrap();
            assert!(id.residual <= 1e-10, "{id:?}");
        }
        let mc = mc_gibbs_stats(&m, 2.0, 100_000, 3).unwrap();
        assert!((mc.variance - 0.5).abs() <= 3.0 * mc.variance_std_error, "{mc:?}");
    }

    #[test]
    fn paths() {
        let base = FiniteModel::random(3, 21).unwrap();
        let conformal: Vec<(f64, FiniteModel)> = (0..11)
            .map(|k| {
                let t = 0.05 * k as f64;
                (t, FiniteModel::new(base.metric() * t.exp(), base.operator() * (-t).exp()).unwrap())
            })
            .collect();
        let p = normalized_partition(&conformal, 2.0).unwrap();
        for r in &p.ratio {
            close(*r, 2f64.powf(-1.5), 1e-12);
        }
        assert!(p.max_residual <= 1e-8, "{}", p.max_residual);

        let moving: Vec<(f64, FiniteModel)> = (0..21)
            .map(|k| {
                let t = 0.01 * k as f64;
                (t, FiniteModel::diagonal(&[1.0 + t, 4.0]).unwrap())
            })
            .collect();
        let p = normalized_partition(&moving, 1.0).unwrap();
        for (phi, t) in p.phi.iter().zip(&p.t) {
            assert!((phi + 0.5 / (1.0 + t)).abs() <= 1e-8, "{phi}");
        }
        assert!(p.max_residual <= 1e-8);
        assert!(normalized_partition(&moving[..2], 1.0).is_err());
    }
}
