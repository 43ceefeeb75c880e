//! Globally adaptive Gauss–Kronrod (7/15) quadrature and the exponential
//! integral E₁.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, bisecting the
/// interval with the largest error estimate first.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<Integral> {
    const MAX_SEGMENTS: usize = 4000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut heap = BinaryHeap::from([Segment { a, b, value, error }]);
    let (mut total, mut total_err) = (value, error);
    let mut evaluations = 15;
    while total_err > tol {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::numerical(format!(
                "quadrature did not converge on [{a}, {b}]: error {total_err:e} after {evaluations} evaluations"
            )));
        }
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        let (v1, e1) = kronrod(&mut f, s.a, m);
        let (v2, e2) = kronrod(&mut f, m, s.b);
        evaluations += 30;
        total += v1 + v2 - s.value;
        total_err += e1 + e2 - s.error;
        heap.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: s.b, value: v2, error: e2 });
        if !total.is_finite() {
            return Err(Error::numerical("integrand is not finite"));
        }
        // Re-sum occasionally so the running error does not drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
        }
    }
    Ok(Integral {
        value: heap.iter().map(|s| s.value).sum(),
        error: heap.iter().map(|s| s.error).sum(),
        evaluations,
    })
}

/// Exponential integral E₁(x) = ∫₁^∞ e^{−xt}/t dt for x > 0.
pub fn exp_integral_e1(x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // Modified Lentz evaluation of the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| 3.0 * x * x - x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 6.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_on_peaked_integrand() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0f64 / 1e-2).atan();
        assert!((r.value - exact).abs() < 1e-8, "{} {}", r.value, exact);
    }

    #[test]
    fn gives_up_on_singularity() {
        assert!(matches!(
            integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun, Table 5.1.
        let cases = [
            (0.1, 1.822_923_958_419_390_7),
            (0.5, 0.559_773_594_776_160_8),
            (1.0, 0.219_383_934_395_520_3),
            (2.0, 0.048_900_510_708_061_0),
            (10.0, 4.156_968_929_685_324e-6),
        ];
        for (x, e) in cases {
            assert!((exp_integral_e1(x) - e).abs() < 1e-14 * e.max(1e-3), "{x}");
        }
    }

    #[test]
    fn e1_against_quadrature() {
        for x in [0.3, 1.7, 4.0] {
            let q = integrate(|t: f64| (-x * t).exp() / t, 1.0, 60.0 / x + 1.0, 1e-14).unwrap();
            assert!((q.value - exp_integral_e1(x)).abs() < 1e-12);
        }
    }
}
