use std::f64::consts::PI;

use super::laguerre::LaguerreFunctions;

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
///
/// Newton iteration on the three-term recurrence starting from the
/// Tricomi asymptotic guess; accurate to a few ulp for any order.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n > 0, "quadrature order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule over consecutive panels `[b_k, b_{k+1}]`.
pub fn composite_gauss_legendre(breaks: &[f64], order: usize) -> Rule {
    let base = gauss_legendre(order);
    let mut nodes = Vec::with_capacity(order * breaks.len());
    let mut weights = Vec::with_capacity(order * breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&x, &wt) in base.nodes.iter().zip(&base.weights) {
            nodes.push(mid + half * x);
            weights.push(half * wt);
        }
    }
    Rule { nodes, weights }
}

/// Panel breaks on `[0, len]` whose widths grow geometrically from `first`
/// by `ratio`, capped at `max_width`.
pub fn graded_breaks(len: f64, first: f64, ratio: f64, max_width: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut width = first.min(len);
    let mut x = 0.0;
    while x < len {
        let next = (x + width).min(len);
        // avoid a sliver panel at the end
        let next = if len - next < 0.25 * width { len } else { next };
        breaks.push(next);
        x = next;
        width = (width * ratio).min(max_width);
    }
    breaks
}

/// Breaks on `[0, len]` graded towards both endpoints.
pub fn two_sided_breaks(len: f64, first: f64, ratio: f64, max_width: f64) -> Vec<f64> {
    let half = graded_breaks(0.5 * len, first, ratio, max_width);
    let mut breaks = half.clone();
    for &b in half.iter().rev().skip(1) {
        breaks.push(len - b);
    }
    breaks
}

/// Generalized Gauss-Laguerre rule for the weight `x^alpha e^{-x}` with the
/// weights returned pre-multiplied by `e^{x}`.
///
/// Nodes come from the Golub-Welsch matrix and are polished by Newton on the
/// orthonormal recurrence; the scaled weights are Christoffel numbers
/// `1 / sum_j psi_j(x)^2` of the orthonormal Laguerre functions, which keeps
/// full relative accuracy at the far nodes.
pub fn gauss_laguerre_scaled(n: usize, alpha: u32) -> Rule {
    assert!(n > 0, "quadrature order must be positive");
    let a = alpha as f64;
    let diag = nalgebra::DVector::from_fn(n, |k, _| 2.0 * k as f64 + 1.0 + a);
    let mut jac = nalgebra::DMatrix::from_diagonal(&diag);
    for k in 1..n {
        let off = (k as f64 * (k as f64 + a)).sqrt();
        jac[(k, k - 1)] = off;
        jac[(k - 1, k)] = off;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap());

    let funcs = LaguerreFunctions::new(alpha);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            // Newton on the unscaled polynomial: p/p' == psi/(psi' + psi/2)
            let (vals, ders) = funcs.values_and_derivatives(n + 1, *x);
            let psi = vals[n];
            let dpsi = ders[n] + 0.5 * psi;
            if dpsi == 0.0 {
                break;
            }
            let dx = psi / dpsi;
            *x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1e-3) {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let vals = funcs.values(n, x);
            1.0 / vals.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 64] {
            let rule = gauss_legendre(n);
            for k in 0..(2 * n) {
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                let got = rule.integrate(|x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k} got={got}");
            }
        }
    }

    #[test]
    fn gauss_laguerre_moments() {
        // int x^(alpha+k) e^{-x} = Gamma(alpha+k+1)
        for alpha in 0..3u32 {
            let n = 30;
            let rule = gauss_laguerre_scaled(n, alpha);
            for k in 0..(2 * n as i32 - 1) {
                let exact: f64 = (1..=(alpha as i32 + k)).map(|v| v as f64).product();
                let got: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| w * (-x).exp() * x.powi(k))
                    .sum();
                assert!(((got - exact) / exact).abs() < 1e-11, "alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn graded_breaks_cover_interval() {
        let b = two_sided_breaks(3.0, 0.01, 1.6, 0.4);
        assert_eq!(b[0], 0.0);
        assert!((b[b.len() - 1] - 3.0).abs() < 1e-15);
        assert!(b.windows(2).all(|w| w[1] > w[0]));
        assert!((b[1] - 0.01).abs() < 1e-15);
    }
}
