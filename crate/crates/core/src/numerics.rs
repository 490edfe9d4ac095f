//! Small numerical kernels shared by the solver, the dissipation checks and
//! the ladder oracle: finite differences, quadrature and convergence orders.

use std::ops::RangeInclusive;

/// Index range of the five-point stencil used for node `i` of an `n + 1`
/// node grid.
pub fn stencil(i: usize, n: usize) -> RangeInclusive<usize> {
    assert!(n >= 4, "five-point stencils need at least 5 nodes");
    match i {
        0 | 1 => 0..=4,
        _ if i + 2 > n => n - 4..=n,
        _ => i - 2..=i + 2,
    }
}

/// Fourth-order finite-difference derivative of uniformly sampled values.
///
/// Central five-point stencils in the interior, one-sided five-point
/// stencils on the two nodes closest to each end.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let len = values.len();
    assert!(len >= 5, "need at least 5 samples, got {len}");
    let n = len - 1;
    let f = values;
    let scale = 1.0 / (12.0 * h);
    (0..len)
        .map(|i| {
            let d = match i {
                0 => -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4],
                1 => -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4],
                _ if i == n - 1 => {
                    3.0 * f[n] + 10.0 * f[n - 1] - 18.0 * f[n - 2] + 6.0 * f[n - 3] - f[n - 4]
                }
                _ if i == n => {
                    25.0 * f[n] - 48.0 * f[n - 1] + 36.0 * f[n - 2] - 16.0 * f[n - 3]
                        + 3.0 * f[n - 4]
                }
                _ => f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2],
            };
            d * scale
        })
        .collect()
}

/// Composite Simpson rule on an even number of uniform intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    assert!(n >= 2 && n.is_multiple_of(2), "Simpson needs an even number of intervals, got {n}");
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, &f) in values.iter().enumerate().take(n).skip(1) {
        if i % 2 == 1 {
            odd += f;
        } else {
            even += f;
        }
    }
    h / 3.0 * (values[0] + 4.0 * odd + 2.0 * even + values[n])
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Five-point Gauss-Legendre rule on `[a, b]`; exact for degree ≤ 9.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS_NODES
        .iter()
        .zip(GAUSS_WEIGHTS.iter())
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// `∫ f dx` over uniformly spaced nodes `xs` for a function that is smooth
/// between `breaks` but may have kinks there.
///
/// Without interior breakpoints this is composite Simpson (even number of
/// intervals required). Otherwise every cell is split at the breakpoints
/// it contains and each piece integrates the cubic through the four
/// nearest nodes on the same side of every breakpoint, which keeps
/// fourth-order accuracy where Simpson would drop to second order.
pub fn piecewise_integral(xs: &[f64], values: &[f64], breaks: &[f64]) -> f64 {
    assert_eq!(xs.len(), values.len());
    let n = xs.len() - 1;
    let (x0, xn) = (xs[0], xs[n]);
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&c| c > x0 && c < xn).collect();
    if inner.is_empty() {
        return simpson(values, (xn - x0) / n as f64);
    }
    assert!(n >= 3, "need at least 4 nodes");
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    let mut edges = vec![x0];
    edges.extend(&inner);
    edges.push(xn);

    let mut total = 0.0;
    for i in 0..n {
        let mut cuts = vec![xs[i]];
        cuts.extend(inner.iter().copied().filter(|&c| c > xs[i] && c < xs[i + 1]));
        cuts.push(xs[i + 1]);
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let piece = edges.partition_point(|&e| e <= mid) - 1;
            let (lo, hi) = (edges[piece], edges[piece + 1]);
            // node range inside the closed piece
            let first = xs.partition_point(|&x| x < lo);
            let last = xs.partition_point(|&x| x <= hi) - 1;
            let (first, last) = if last > first { (first, last) } else { (i.saturating_sub(1), (i + 2).min(n)) };
            let count = (last - first + 1).min(4);
            let start = (i.saturating_sub(1)).clamp(first, last + 1 - count);
            let nodes = start..start + count;
            total += gauss_legendre(a, b, |x| lagrange(&xs[nodes.clone()], &values[nodes.clone()], x));
        }
    }
    total
}

fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    for (j, (&xj, &yj)) in xs.iter().zip(ys).enumerate() {
        let mut basis = 1.0;
        for (m, &xm) in xs.iter().enumerate() {
            if m != j {
                basis *= (x - xm) / (xj - xm);
            }
        }
        sum += yj * basis;
    }
    sum
}

/// Observed convergence orders `log2(e_k / e_{k+1})` for errors measured on
/// successively halved grids.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}
