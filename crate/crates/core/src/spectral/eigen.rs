use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Spectrum, SpectrumSource};
use crate::error::{Error, Result};
use crate::operators::OperatorAssembly;
use crate::sparse::{CsrMatrix, EnvelopeCholesky};

/// Largest problem solved with the dense solver.
pub const DENSE_LIMIT: usize = 4000;

const BLOCK: usize = 8;
const KRYLOV_SEED: u64 = 0x5eed_2f10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenCount {
    All,
    Lowest(usize),
}

/// Solves `S_w x = λ M_w x` (with `S_w + P` for the Schrödinger operator).
///
/// Full spectra use a dense solver and are capped at [`DENSE_LIMIT`] vertices.
/// A partial count of lowest modes on a larger or sparse-friendly problem uses
/// a shift-invert block Krylov iteration with an envelope Cholesky factor.
pub fn eigen_spectrum(assembly: &OperatorAssembly, count: EigenCount) -> Result<Spectrum> {
    let n = assembly.dim();
    if let Some(i) = assembly.mass.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::invalid(format!("mass matrix is not strictly positive at {i}")));
    }
    let matrix = assembly.energy_matrix();
    let (values, complete_below) = match count {
        EigenCount::All => {
            if n > DENSE_LIMIT {
                return Err(Error::invalid(format!(
                    "{n} vertices exceed the dense eigensolver cap of {DENSE_LIMIT}; request a partial count"
                )));
            }
            (dense_eigenvalues(&matrix, &assembly.mass), f64::INFINITY)
        }
        EigenCount::Lowest(k) => {
            if k == 0 || k > n {
                return Err(Error::invalid(format!("eigenvalue count {k} outside 1..={n}")));
            }
            let values = if n <= 1500 || 4 * k >= n {
                if n > DENSE_LIMIT {
                    return Err(Error::invalid(format!(
                        "{k} of {n} modes needs the dense solver, which is capped at {DENSE_LIMIT}"
                    )));
                }
                let mut all = dense_eigenvalues(&matrix, &assembly.mass);
                all.truncate(k);
                all
            } else {
                lowest_eigenvalues(&matrix, &assembly.mass, k)?
            };
            let top = *values.last().unwrap();
            (values, if k == n { f64::INFINITY } else { top })
        }
    };
    let lambda_max = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    Spectrum::new(
        values,
        1e-9 * lambda_max,
        SpectrumSource::Mesh,
        assembly.area,
        assembly.chi,
        complete_below,
    )
    .map(|s| s.with_operator_dim(n))
}

fn dense_eigenvalues(matrix: &CsrMatrix, mass: &[f64]) -> Vec<f64> {
    let n = mass.len();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut b = DMatrix::zeros(n, n);
    for (i, j, v) in matrix.triplets() {
        b[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
    }
    let mut values: Vec<f64> = b.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Lowest `k` eigenvalues of `A x = λ M x` for sparse symmetric positive
/// semidefinite `A` and diagonal positive `M`.
pub fn lowest_eigenvalues(matrix: &CsrMatrix, mass: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = mass.len();
    let sigma = {
        let s = matrix.diagonal().iter().sum::<f64>() / mass.iter().sum::<f64>() / n as f64;
        if s > 0.0 && s.is_finite() {
            s
        } else {
            1.0
        }
    };
    let shifted: Vec<f64> = mass.iter().map(|m| sigma * m).collect();
    let chol = EnvelopeCholesky::factor(&matrix.plus_diagonal(&shifted))?;
    let d: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    // Op = M^{1/2} (A + σM)^{-1} M^{1/2}; its eigenvalues are 1/(λ + σ).
    let apply = |x: &DMatrix<f64>| -> DMatrix<f64> {
        let mut y = x.clone();
        let r = y.ncols();
        for c in 0..r {
            for i in 0..n {
                y[(i, c)] *= d[i];
            }
        }
        chol.solve_block(y.as_mut_slice(), r);
        for c in 0..r {
            for i in 0..n {
                y[(i, c)] *= d[i];
            }
        }
        y
    };

    let max_dim = n.min((4 * k).max(k + 400)) / BLOCK * BLOCK;
    if max_dim < k + BLOCK {
        return Err(Error::invalid(format!("cannot compute {k} of {n} modes iteratively")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(KRYLOV_SEED);
    let mut q = DMatrix::<f64>::zeros(n, max_dim);
    // Projection T = Qᵀ Op Q, grown one block at a time.
    let mut t = DMatrix::<f64>::zeros(max_dim, max_dim);
    let mut x = DMatrix::from_fn(n, BLOCK, |_, _| StandardNormal.sample(&mut rng));
    let mut m = 0usize;
    let mut last_check = 0usize;
    loop {
        orthonormalize_block(&q.columns(0, m), &mut x, &mut rng);
        let wx = apply(&x);
        q.columns_mut(m, BLOCK).copy_from(&x);
        m += BLOCK;
        let c = q.columns(0, m).tr_mul(&wx);
        t.view_mut((0, m - BLOCK), (m, BLOCK)).copy_from(&c);
        t.view_mut((m - BLOCK, 0), (BLOCK, m)).copy_from(&c.transpose());

        let full = m + BLOCK > max_dim;
        if m >= k + 2 * BLOCK && (m - last_check >= 4 * BLOCK || full) {
            last_check = m;
            // Only the newest block of Op Q leaves span(Q).
            let mut outside = wx.clone();
            outside.gemm(-1.0, &q.columns(0, m), &c, 1.0);
            if let Some(values) = rayleigh_ritz(&t.view((0, 0), (m, m)), &outside, k) {
                let mut lambda: Vec<f64> = values.iter().map(|nu| 1.0 / nu - sigma).collect();
                lambda.sort_by(f64::total_cmp);
                return Ok(lambda);
            }
        }
        if full {
            return Err(Error::numerical(format!(
                "shift-invert iteration did not converge for {k} modes within a basis of {m}"
            )));
        }
        x = wx;
    }
}

type View<'a> = nalgebra::MatrixView<'a, f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Orthonormalizes `x` against the columns of `q` and itself (classical
/// Gram–Schmidt applied twice), replacing deflated columns with fresh random
/// directions.
fn orthonormalize_block(q: &View<'_>, x: &mut DMatrix<f64>, rng: &mut ChaCha8Rng) {
    let n = x.nrows();
    for _ in 0..2 {
        if q.ncols() > 0 {
            let c = q.tr_mul(x);
            x.gemm(-1.0, q, &c, 1.0);
        }
    }
    for j in 0..x.ncols() {
        let mut attempts = 0;
        loop {
            let before = x.column(j).norm();
            for _ in 0..2 {
                for i in 0..j {
                    let dot = x.column(i).dot(&x.column(j));
                    let xi = x.column(i).clone_owned();
                    x.column_mut(j).axpy(-dot, &xi, 1.0);
                }
                if q.ncols() > 0 {
                    let c = q.tr_mul(&x.column(j));
                    let mut col = x.column_mut(j);
                    col.gemv(-1.0, q, &c, 1.0);
                }
            }
            let after = x.column(j).norm();
            if after > 1e-8 * before && after > 0.0 {
                x.column_mut(j).scale_mut(1.0 / after);
                break;
            }
            attempts += 1;
            assert!(attempts < 10, "cannot extend the Krylov basis");
            let fresh = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng));
            x.column_mut(j).copy_from(&fresh);
        }
    }
}

/// Largest `k` Ritz values of the projection `t` if all have converged.
/// `outside` is the component of Op applied to the last basis block that
/// lies outside the basis; Ritz residuals are that block times the last rows
/// of the Ritz vectors.
fn rayleigh_ritz(t: &View<'_>, outside: &DMatrix<f64>, k: usize) -> Option<Vec<f64>> {
    let m = t.ncols();
    let sym = (t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);
    let tail = DMatrix::from_fn(BLOCK, k, |i, j| eig.eigenvectors[(m - BLOCK + i, order[j])]);
    let residuals = outside * tail;
    let nu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (0..k)
        .all(|j| residuals.column(j).norm() <= 1e-9 * nu[j].abs())
        .then_some(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_flat_torus, generate_icosphere};
    use crate::metric::base_metric;
    use crate::operators::{assemble, OperatorSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn laplacian(mesh: crate::mesh::TriMesh) -> OperatorAssembly {
        assemble(&base_metric(Arc::new(mesh)).unwrap(), &OperatorSpec::laplacian()).unwrap()
    }

    #[test]
    fn torus_first_modes() {
        let a = laplacian(generate_flat_torus(16, 16, 1.0).unwrap());
        let s = eigen_spectrum(&a, EigenCount::All).unwrap();
        assert_eq!(s.kernel_dim(), 1);
        let target = 4.0 * PI * PI;
        for v in &s.nonzero()[..4] {
            assert!((v / target - 1.0).abs() < 0.03, "{v}");
        }
    }

    #[test]
    fn sphere_low_modes_iterative_and_dense_agree() {
        let a = laplacian(generate_icosphere(3).unwrap());
        let dense = eigen_spectrum(&a, EigenCount::All).unwrap();
        let sparse = lowest_eigenvalues(&a.stiffness, &a.mass, 60).unwrap();
        for (x, y) in sparse.iter().zip(dense.eigenvalues()).skip(1) {
            assert!((x - y).abs() < 1e-9 * y, "{x} {y}");
        }
        assert!(sparse[0].abs() < 1e-9);
    }

    #[test]
    fn icosphere4_harmonics() {
        let a = laplacian(generate_icosphere(4).unwrap());
        let s = eigen_spectrum(&a, EigenCount::Lowest(9)).unwrap();
        let v = s.eigenvalues();
        assert_eq!(s.kernel_dim(), 1);
        assert!(v[1..4].iter().all(|x| (x / 2.0 - 1.0).abs() < 0.02), "{v:?}");
        assert!(v[4..9].iter().all(|x| (x / 6.0 - 1.0).abs() < 0.03), "{v:?}");
        assert_eq!(s.complete_below(), v[8]);
    }

    #[test]
    fn constant_drift_leaves_spectrum() {
        let m = base_metric(Arc::new(generate_icosphere(2).unwrap())).unwrap();
        let n = m.num_vertices();
        let lap = eigen_spectrum(&assemble(&m, &OperatorSpec::laplacian()).unwrap(), EigenCount::All).unwrap();
        let dr = eigen_spectrum(&assemble(&m, &OperatorSpec::drifted(vec![1.3; n])).unwrap(), EigenCount::All).unwrap();
        for (a, b) in lap.nonzero().iter().zip(dr.nonzero()) {
            assert!((a - b).abs() <= 1e-10 * a);
        }
    }

    #[test]
    fn count_and_cap_errors() {
        let a = laplacian(generate_icosphere(1).unwrap());
        assert!(eigen_spectrum(&a, EigenCount::Lowest(0)).is_err());
        assert!(eigen_spectrum(&a, EigenCount::Lowest(43)).is_err());
        let big = laplacian(generate_icosphere(5).unwrap());
        assert!(matches!(eigen_spectrum(&big, EigenCount::All), Err(Error::InvalidInput(_))));
        let mut bad = a.clone();
        bad.mass[3] = 0.0;
        assert!(eigen_spectrum(&bad, EigenCount::All).is_err());
    }
}
