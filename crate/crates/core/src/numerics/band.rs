//! Symmetric banded generalized eigenproblems `K v = lambda M v` with
//! positive definite `M`, solved by inertia bisection.

use nalgebra::{DMatrix, DVector};

/// Lower band of a symmetric pencil.
#[derive(Debug, Clone)]
pub struct BandPencil {
    n: usize,
    bw: usize,
    /// `k[i][d] = K(i, i - d)`, `d <= bw`.
    k: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
}

impl BandPencil {
    /// Takes the band `|i - j| <= bw` of dense symmetric `k` and `m`.
    pub fn from_dense(k: &DMatrix<f64>, m: &DMatrix<f64>, bw: usize) -> Self {
        let n = k.nrows();
        let take = |a: &DMatrix<f64>| {
            (0..n)
                .map(|i| (0..=bw.min(i)).map(|d| a[(i, i - d)]).collect())
                .collect()
        };
        Self {
            n,
            bw,
            k: take(k),
            m: take(m),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of pencil eigenvalues below `sigma`: the count of negative
    /// pivots in the LDL^T factorization of `K - sigma M`. A near-zero
    /// pivot moves `sigma` up by a few ulps of the matrix scale.
    pub fn count_below(&self, sigma: f64) -> usize {
        let scale = self.scale().max(sigma.abs()).max(f64::MIN_POSITIVE.sqrt());
        let mut shift = sigma;
        let mut bump = 1e-14 * scale;
        for _ in 0..12 {
            if let Some(c) = self.try_count(shift) {
                return c;
            }
            shift = sigma + bump;
            bump *= 10.0;
        }
        self.try_count(shift).unwrap_or(0)
    }

    fn scale(&self) -> f64 {
        self.k
            .iter()
            .zip(&self.m)
            .map(|(k, m)| k[0].abs() / m[0])
            .fold(0.0, f64::max)
    }

    fn try_count(&self, sigma: f64) -> Option<usize> {
        let (n, bw) = (self.n, self.bw);
        let mut l = vec![vec![0.0; bw + 1]; n];
        let mut d = vec![0.0; n];
        let mut count = 0;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                let mut v = self.k[i][i - j] - sigma * self.m[i][i - j];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    v -= l[i][i - k] * l[j][j - k] * d[k];
                }
                l[i][i - j] = v / d[j];
            }
            let a = self.k[i][0] - sigma * self.m[i][0];
            let v = a - (lo..i).map(|k| l[i][i - k] * l[i][i - k] * d[k]).sum::<f64>();
            if v.abs() <= 1e-14 * (self.k[i][0].abs() + sigma.abs() * self.m[i][0]) || v == 0.0 {
                return None;
            }
            if v < 0.0 {
                count += 1;
            }
            d[i] = v;
            l[i][0] = 1.0;
        }
        Some(count)
    }

    /// Eigenvalue number `idx` (ascending).
    pub fn eigenvalue(&self, idx: usize) -> f64 {
        let mut lo = -1.0;
        while self.count_below(lo) > idx {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while self.count_below(hi) <= idx {
            hi *= 2.0;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                return mid;
            }
            if self.count_below(mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

/// Eigenvector of `K v = lambda M v` for an accurate `lambda` by inverse
/// iteration, normalized to `v^T M v = 1`.
pub fn pencil_eigenvector(k: &DMatrix<f64>, m: &DMatrix<f64>, lambda: f64) -> Vec<f64> {
    let n = k.nrows();
    let shift = lambda + 1e-13 * lambda.abs().max(1.0);
    let lu = (k - m * shift).lu();
    let mut v = DVector::from_fn(n, |i, _| 1.0 / (1.0 + i as f64).sqrt());
    for _ in 0..3 {
        if let Some(next) = lu.solve(&(m * &v)) {
            let norm = next.dot(&(m * &next)).sqrt();
            if norm.is_finite() && norm > 0.0 {
                v = next / norm;
            }
        }
    }
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn matches_dense_solution() {
        let n = 30;
        let bw = 3;
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d = (i as i64 - j as i64).abs();
            if d > bw as i64 {
                0.0
            } else {
                (i + j) as f64 * 0.1 + if d == 0 { i as f64 } else { 0.3 / d as f64 }
            }
        });
        let m = DMatrix::from_fn(n, n, |i, j| match (i as i64 - j as i64).abs() {
            0 => 2.0,
            1 => 0.4,
            _ => 0.0,
        });
        let chol = m.clone().cholesky().unwrap();
        let linv = chol.l().try_inverse().unwrap();
        let red = &linv * &k * linv.transpose();
        let mut dense: Vec<f64> = SymmetricEigen::new(0.5 * (&red + red.transpose())).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let pencil = BandPencil::from_dense(&k, &m, bw);
        for (idx, want) in dense.iter().enumerate() {
            let got = pencil.eigenvalue(idx);
            assert!((got - want).abs() < 1e-12 * want.abs().max(1.0), "{idx}: {got} vs {want}");
            let v = DVector::from_vec(pencil_eigenvector(&k, &m, got));
            let res = (&k * &v - &m * &v * got).norm();
            assert!(res < 1e-9 * got.abs().max(1.0));
        }
    }
}
