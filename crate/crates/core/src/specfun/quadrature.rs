//! Quadrature rules: Gauss-Chebyshev for the phase average and adaptive
//! Gauss-Kronrod for everything on an interval.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Chebyshev rule of the first kind on `(-1, 1)` with weight `1 / sqrt(1 - y^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// `y_l = cos(pi (2l - 1) / (2L))`, `l = 1..L`.
    pub nodes: Vec<f64>,
    /// All equal to `pi / L`.
    pub weights: Vec<f64>,
    /// The angles `pi (2l - 1) / (2L)` whose cosines are the nodes.
    pub angles: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_chebyshev(points: usize) -> Self {
        let l = points as f64;
        let angles: Vec<f64> = (1..=points)
            .map(|i| PI * (2.0 * i as f64 - 1.0) / (2.0 * l))
            .collect();
        let nodes = angles.iter().map(|t| t.cos()).collect();
        QuadratureRule {
            nodes,
            weights: vec![PI / l; points],
            angles,
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// `int_{-1}^{1} f(y) / sqrt(1 - y^2) dy` approximated by `(pi / L) sum_l f(y_l)`.
pub fn gauss_chebyshev<F: FnMut(f64) -> f64>(rule: &QuadratureRule, mut f: F) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&y, &w)| w * f(y))
        .sum()
}

/// `ln( (1/L) sum_l exp(r y_l) )` over the nodes of a Gauss-Chebyshev rule.
///
/// This is the quadrature estimate of `ln I_0(r)`.
pub fn ln_mean_exp_cos(nodes: &[f64], r: f64) -> f64 {
    // the extreme nodes carry the largest exponent
    let top = r * nodes[0].max(nodes[nodes.len() - 1]);
    let s: f64 = nodes.iter().map(|c| (r * c - top).exp()).sum();
    top + (s / nodes.len() as f64).ln()
}

// 15-point Kronrod nodes on [0, 1] (symmetric), with the 7-point Gauss subset.
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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss-Kronrod (7, 15) panel: returns (Kronrod estimate, error estimate).
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-14,
            rel: 1e-11,
            max_panels: 4000,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive integration over the panels between consecutive
/// `breakpoints`, bisecting the panel with the largest error estimate.
///
/// Returns `(value, error estimate)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    what: &'static str,
    mut f: F,
    breakpoints: &[f64],
    tol: Tolerance,
) -> Result<(f64, f64)> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gauss_kronrod_15(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    while !(err <= tol.abs.max(tol.rel * total.abs())) {
        if !total.is_finite() || heap.len() >= tol.max_panels {
            return Err(Error::Quadrature { what, error: err });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            return Err(Error::Quadrature { what, error: err });
        }
        let (v1, e1) = gauss_kronrod_15(&mut f, p.a, m);
        let (v2, e2) = gauss_kronrod_15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
    // re-add from the panels to shed accumulated rounding in the running sums
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok((value, error))
}
