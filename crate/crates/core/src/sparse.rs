//! Compressed sparse rows plus an envelope Cholesky factorization for the
//! shift-invert eigensolver.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Square sparse matrix in CSR layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from coordinate triplets, summing duplicates in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        CsrMatrix {
            vals: self.vals.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// Adds a diagonal, inserting diagonal entries where missing.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        let mut t: Vec<(usize, usize, f64)> = self.triplets();
        t.extend(d.iter().enumerate().map(|(i, &v)| (i, i, v)));
        Self::from_triplets(self.n, &t)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let start = pseudo_peripheral(a, start, &degree);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a
                .row(v)
                .map(|(j, _)| j)
                .filter(|&j| !visited[j])
                .collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Node at the end of the deepest breadth-first level structure, found by a
/// few rounds of the George–Liu heuristic.
fn pseudo_peripheral(a: &CsrMatrix, mut start: usize, degree: &[usize]) -> usize {
    let mut depth = 0;
    for _ in 0..8 {
        let levels = bfs_levels(a, start);
        let max = *levels.iter().filter_map(|l| l.as_ref()).max().unwrap();
        if max <= depth {
            break;
        }
        depth = max;
        start = (0..levels.len())
            .filter(|&i| levels[i] == Some(max))
            .min_by_key(|&i| degree[i])
            .unwrap();
    }
    start
}

fn bfs_levels(a: &CsrMatrix, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.dim()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let l = level[v].unwrap();
        for (j, _) in a.row(v) {
            if level[j].is_none() {
                level[j] = Some(l + 1);
                queue.push_back(j);
            }
        }
    }
    level
}

/// Cholesky factor stored by rows over the matrix envelope, in a permuted
/// ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of each row's segment in `vals`; the segment covers `first[i]..=i`.
    offset: Vec<usize>,
    vals: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive-definite matrix using reverse
    /// Cuthill–McKee ordering.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (j, _) in a.row(old) {
                first[new] = first[new].min(inv[j]);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + i - first[i] + 1);
        }
        let mut vals = vec![0.0; offset[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (j, v) in a.row(old) {
                let jn = inv[j];
                if jn <= new {
                    vals[offset[new] + jn - first[new]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let oi = offset[i];
            for j in fi..i {
                let fj = first[j];
                let oj = offset[j];
                let k0 = fi.max(fj);
                let len = j - k0;
                let ri = &vals[oi + k0 - fi..oi + k0 - fi + len];
                let rj = &vals[oj + k0 - fj..oj + k0 - fj + len];
                let dot: f64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                let ljj = vals[oj + j - fj];
                let idx = oi + j - fi;
                vals[idx] = (vals[idx] - dot) / ljj;
            }
            let row = &vals[oi..oi + i - fi];
            let d = vals[oi + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if d.is_nan() || d <= 0.0 || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "matrix is not positive definite (pivot {d:e} at row {i})"
                )));
            }
            vals[oi + i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            offset,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    /// Solves A X = B in place for `r` right-hand sides stored column-major.
    pub fn solve_block(&self, b: &mut [f64], r: usize) {
        let n = self.dim();
        assert_eq!(b.len(), n * r);
        let mut y = vec![0.0; n * r];
        for (new, &old) in self.perm.iter().enumerate() {
            for c in 0..r {
                y[new * r + c] = b[c * n + old];
            }
        }
        let mut acc = vec![0.0; r];
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            acc.iter_mut().for_each(|a| *a = 0.0);
            for (k, l) in self.vals[oi..oi + i - fi].iter().enumerate() {
                let yk = &y[(fi + k) * r..(fi + k + 1) * r];
                for c in 0..r {
                    acc[c] += l * yk[c];
                }
            }
            let d = self.vals[oi + i - fi];
            for c in 0..r {
                y[i * r + c] = (y[i * r + c] - acc[c]) / d;
            }
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            let d = self.vals[oi + i - fi];
            for c in 0..r {
                acc[c] = y[i * r + c] / d;
                y[i * r + c] = acc[c];
            }
            for (k, l) in self.vals[oi..oi + i - fi].iter().enumerate() {
                let yk = &mut y[(fi + k) * r..(fi + k + 1) * r];
                for c in 0..r {
                    yk[c] -= l * acc[c];
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            for c in 0..r {
                b[c * n + old] = y[new * r + c];
            }
        }
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            let row = &self.vals[oi..oi + i - fi];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(l, x)| l * x).sum();
            y[i] = (y[i] - dot) / self.vals[oi + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            y[i] /= self.vals[oi + i - fi];
            let xi = y[i];
            for (k, l) in self.vals[oi..oi + i - fi].iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn path_laplacian(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.5), (1, 1, -1.0)]);
        assert_eq!(a.get(0, 1), 3.5);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.mul_vec(&[1.0, 2.0]), vec![7.0, -2.0]);
        assert_eq!(a.quad_form(&[1.0, 2.0]), 7.0 - 4.0);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = path_laplacian(30, 0.0);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort();
        assert_eq!(p, (0..30).collect::<Vec<_>>());
    }

    #[test]
    fn cholesky_solves_random_sparse_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let mut t = Vec::new();
        for _ in 0..150 {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                let w: f64 = rng.random_range(0.1..1.0);
                t.extend([(i, j, -w), (j, i, -w), (i, i, w), (j, j, w)]);
            }
        }
        for i in 0..n {
            t.push((i, i, 0.5));
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = a.mul_vec(&x);
        chol.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12, "{i}: {} vs {}", b[i], x[i]);
        }
    }

    #[test]
    fn block_solve_matches_single() {
        let a = path_laplacian(40, 0.3);
        let chol = EnvelopeCholesky::factor(&a).unwrap();
        let mut block: Vec<f64> = (0..120).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let orig = block.clone();
        chol.solve_block(&mut block, 3);
        for c in 0..3 {
            let mut single = orig[c * 40..(c + 1) * 40].to_vec();
            chol.solve_in_place(&mut single);
            for i in 0..40 {
                assert!((single[i] - block[c * 40 + i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = path_laplacian(10, -1.0);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::Numerical(_))));
    }
}
