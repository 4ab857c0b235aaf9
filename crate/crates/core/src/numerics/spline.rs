/// Clamped cubic spline on a strictly increasing, possibly non-uniform grid.
///
/// End slopes are taken from the cubic through the four outermost samples,
/// which keeps the interpolant fourth-order accurate up to the boundary.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        assert!(n >= 2, "spline needs at least two knots");
        if n < 4 {
            // piecewise linear on very short tables
            return Self { x, y, m: vec![0.0; n] };
        }
        let d0 = lagrange_slope(&x[0..4], &y[0..4], x[0]);
        let dn = lagrange_slope(&x[n - 4..], &y[n - 4..], x[n - 1]);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for second derivatives m_i
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut r = vec![0.0; n];
        b[0] = 2.0 * h[0];
        c[0] = h[0];
        r[0] = 6.0 * ((y[1] - y[0]) / h[0] - d0);
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            r[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        a[n - 1] = h[n - 2];
        b[n - 1] = 2.0 * h[n - 2];
        r[n - 1] = 6.0 * (dn - (y[n - 1] - y[n - 2]) / h[n - 2]);
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            r[i] -= w * r[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = r[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (r[i] - c[i] * m[i + 1]) / b[i];
        }
        Self { x, y, m }
    }

    pub fn min_x(&self) -> f64 {
        self.x[0]
    }

    pub fn max_x(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    fn locate(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    /// Value and first derivative at `t` (extrapolates the end cubic outside the grid).
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let i = self.locate(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (mi, mj) = (self.m[i], self.m[i + 1]);
        let v = a * self.y[i] + b * self.y[i + 1]
            + ((a * a * a - a) * mi + (b * b * b - b) * mj) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * mi + (3.0 * b * b - 1.0) * mj) * h / 6.0;
        (v, d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_derivative(t).0
    }
}

fn lagrange_slope(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    let mut slope = 0.0;
    for i in 0..n {
        // derivative of the i-th Lagrange basis polynomial at t
        let mut denom = 1.0;
        for j in 0..n {
            if j != i {
                denom *= x[i] - x[j];
            }
        }
        let mut num = 0.0;
        for k in 0..n {
            if k == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..n {
                if j != i && j != k {
                    prod *= t - x[j];
                }
            }
            num += prod;
        }
        slope += y[i] * num / denom;
    }
    slope
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let x: Vec<f64> = (0..12).map(|i| 0.3 * i as f64 + 0.02 * (i * i) as f64).collect();
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t - 0.1 * t * t * t;
        let df = |t: f64| -2.0 + t - 0.3 * t * t;
        let s = CubicSpline::new(x.clone(), x.iter().map(|&t| f(t)).collect());
        for k in 0..50 {
            let t = x[0] + (x[11] - x[0]) * k as f64 / 49.0;
            let (v, d) = s.eval_with_derivative(t);
            assert!((v - f(t)).abs() < 1e-12);
            assert!((d - df(t)).abs() < 1e-11);
        }
    }

    #[test]
    fn converges_on_smooth_function() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..n).map(|i| 3.0 * i as f64 / (n - 1) as f64).collect();
            let s = CubicSpline::new(x.clone(), x.iter().map(|t| t.sin()).collect());
            (0..200)
                .map(|k| {
                    let t = 3.0 * k as f64 / 199.0;
                    (s.eval(t) - t.sin()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(20), err(40));
        assert!(e2 < e1 / 10.0, "e1={e1} e2={e2}");
    }
}
