/// Orthonormal Laguerre functions `psi_j(x) = e^{-x/2} L_j^{(alpha)}(x) / sqrt(h_j)`
/// with `h_j = Gamma(j + alpha + 1) / j!`.
///
/// They satisfy `int_0^inf x^alpha psi_i psi_j dx = delta_ij`.
#[derive(Debug, Clone, Copy)]
pub struct LaguerreFunctions {
    alpha: f64,
    psi0_scale: f64,
}

impl LaguerreFunctions {
    pub fn new(alpha: u32) -> Self {
        let gamma: f64 = (1..=alpha).map(|v| v as f64).product();
        Self {
            alpha: alpha as f64,
            psi0_scale: 1.0 / gamma.sqrt(),
        }
    }

    pub fn values(&self, n: usize, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if n == 0 {
            return out;
        }
        let a = self.alpha;
        out[0] = (-0.5 * x).exp() * self.psi0_scale;
        if n > 1 {
            out[1] = (1.0 + a - x) * out[0] / (1.0 + a).sqrt();
        }
        for j in 1..n.saturating_sub(1) {
            let jf = j as f64;
            out[j + 1] = ((2.0 * jf + 1.0 + a - x) * out[j] - (jf * (jf + a)).sqrt() * out[j - 1])
                / ((jf + 1.0) * (jf + a + 1.0)).sqrt();
        }
        out
    }

    /// Values and x-derivatives of the first `n` functions.
    pub fn values_and_derivatives(&self, n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let vals = self.values(n, x);
        let mut ders = vec![0.0; n];
        let mut partial = 0.0;
        for j in 0..n {
            ders[j] = -partial - 0.5 * vals[j];
            let jf = j as f64;
            partial = ((jf + 1.0) / (jf + self.alpha + 1.0)).sqrt() * (partial + vals[j]);
        }
        (vals, ders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::gauss_laguerre_scaled;

    #[test]
    fn orthonormal_under_generalized_weight() {
        for alpha in 0..4u32 {
            let n = 20;
            let rule = gauss_laguerre_scaled(n + 2, alpha);
            let f = LaguerreFunctions::new(alpha);
            let tab: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| f.values(n, x)).collect();
            for i in 0..n {
                for j in 0..n {
                    let s: f64 = tab
                        .iter()
                        .zip(&rule.weights)
                        .map(|(v, &w)| w * v[i] * v[j])
                        .sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12, "alpha={alpha} i={i} j={j} s={s}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let f = LaguerreFunctions::new(2);
        let h = 1e-6;
        for &x in &[0.3, 2.0, 11.0, 40.0] {
            let (_, d) = f.values_and_derivatives(12, x);
            let vp = f.values(12, x + h);
            let vm = f.values(12, x - h);
            for j in 0..12 {
                let fd = (vp[j] - vm[j]) / (2.0 * h);
                assert!((fd - d[j]).abs() < 1e-7 * (1.0 + d[j].abs()), "x={x} j={j}");
            }
        }
    }
}
