/// Normalized associated Legendre functions with the `(1 - eta^2)^{m/2}`
/// factor stripped:
///
/// `Pbar_l^m(eta) = (1 - eta^2)^{m/2} R_l^m(eta)`, `int_{-1}^{1} Pbar_l^m Pbar_{l'}^m = delta_{ll'}`.
///
/// No Condon-Shortley phase: every `R_l^m(1) > 0`. The reduced functions are
/// polynomials, so values and derivatives are finite at `eta = +-1`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedLegendre {
    m: u32,
}

impl ReducedLegendre {
    pub fn new(m: u32) -> Self {
        Self { m }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn seed(&self) -> f64 {
        let mut v = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..=self.m {
            let kf = k as f64;
            v *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt();
        }
        v
    }

    fn coeffs(&self, l: u32) -> (f64, f64) {
        let (lf, mf) = (l as f64, self.m as f64);
        let denom = lf * lf - mf * mf;
        let a = ((4.0 * lf * lf - 1.0) / denom).sqrt();
        let b = ((2.0 * lf + 1.0) * ((lf - 1.0).powi(2) - mf * mf) / ((2.0 * lf - 3.0) * denom)).sqrt();
        (a, b)
    }

    /// `R_{m+k}^m(eta)` for `k = 0..n`.
    pub fn values(&self, n: usize, eta: f64) -> Vec<f64> {
        self.values_and_derivatives(n, eta).0
    }

    pub fn values_and_derivatives(&self, n: usize, eta: f64) -> (Vec<f64>, Vec<f64>) {
        let mut v = vec![0.0; n];
        let mut d = vec![0.0; n];
        if n == 0 {
            return (v, d);
        }
        v[0] = self.seed();
        if n > 1 {
            let a = (2.0 * self.m as f64 + 3.0).sqrt();
            v[1] = a * eta * v[0];
            d[1] = a * v[0];
        }
        for k in 2..n {
            let l = self.m + k as u32;
            let (a, b) = self.coeffs(l);
            v[k] = a * eta * v[k - 1] - b * v[k - 2];
            d[k] = a * (v[k - 1] + eta * d[k - 1]) - b * d[k - 2];
        }
        (v, d)
    }

    /// `<Pbar_l | eta | Pbar_{l+1}>` for `l = m + k`.
    pub fn eta_element(&self, k: usize) -> f64 {
        let l = (self.m as usize + k) as f64;
        let mf = self.m as f64;
        (((l + 1.0).powi(2) - mf * mf) / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::gauss_legendre;

    #[test]
    fn orthonormal_with_weight() {
        let rule = gauss_legendre(80);
        for m in 0..4u32 {
            let f = ReducedLegendre::new(m);
            let n = 25;
            for i in 0..n {
                for j in 0..n {
                    let s = rule.integrate(|x| {
                        let v = f.values(n, x);
                        (1.0 - x * x).powi(m as i32) * v[i] * v[j]
                    });
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12, "m={m} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn eta_elements_match_quadrature() {
        let rule = gauss_legendre(60);
        let f = ReducedLegendre::new(2);
        for k in 0..10 {
            let s = rule.integrate(|x| {
                let v = f.values(12, x);
                x * (1.0 - x * x).powi(2) * v[k] * v[k + 1]
            });
            assert!((s - f.eta_element(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn low_order_closed_forms() {
        // Pbar_1^0 = sqrt(3/2) x ; Pbar_2^1 = sqrt(15/4) x sqrt(1-x^2)
        let x = 0.37;
        let v0 = ReducedLegendre::new(0).values(2, x);
        assert!((v0[1] - 1.5f64.sqrt() * x).abs() < 1e-15);
        let v1 = ReducedLegendre::new(1).values(2, x);
        assert!((v1[1] - (15.0f64 / 4.0).sqrt() * x).abs() < 1e-14);
    }
}
