//! Finite-difference weights on arbitrary nodes.

/// Weights of the first derivative at `z` from values at nodes `x`
/// (Fornberg's recursion).
pub fn derivative_weights(z: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Derivative of sampled values at every node, each from the `width` nearest
/// nodes (centered where possible).
pub fn grid_derivative(t: &[f64], y: &[f64], width: usize) -> Vec<f64> {
    let width = width.min(t.len());
    (0..t.len())
        .map(|i| {
            let lo = i.saturating_sub(width / 2).min(t.len() - width);
            derivative_weights(t[i], &t[lo..lo + width])
                .iter()
                .zip(&y[lo..lo + width])
                .map(|(w, v)| w * v)
                .sum()
        })
        .collect()
}
