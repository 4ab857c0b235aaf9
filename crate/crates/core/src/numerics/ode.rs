//! Adaptive Dormand-Prince 5(4) integration of first-order systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; zero picks one from the interval length.
    pub first_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            first_step: 0.0,
            max_step: f64::INFINITY,
            min_step: 1e-14,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// `on_step(x, y)` runs after every accepted step and may rescale `y`
/// in place; the integrator treats the rescaled vector as the new state.
pub fn integrate<F, S>(mut f: F, x0: f64, x1: f64, y0: &[f64], opts: &OdeOptions, mut on_step: S) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &mut [f64]),
{
    let n = y0.len();
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    if span == 0.0 {
        return Ok((y, stats));
    }
    let mut k = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut x = x0;
    let mut h = if opts.first_step > 0.0 { opts.first_step } else { 1e-3 * span };
    h = h.min(opts.max_step).min(span);
    f(x, &y, &mut k[0]);
    stats.evaluations += 1;
    while (x1 - x) * dir > 0.0 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StiffnessFailure(x));
        }
        let remaining = (x1 - x).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = h * dir;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hs * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            f(x + C[s] * hs, &tmp, &mut k[s]);
            stats.evaluations += 1;
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut acc = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                acc += hs * B[s] * k[s][i];
                e += hs * E[s] * k[s][i];
            }
            y_new[i] = acc;
            let scale = opts.atol + opts.rtol * y[i].abs().max(acc.abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            x = if last { x1 } else { x + hs };
            y.copy_from_slice(&y_new);
            stats.accepted += 1;
            on_step(x, &mut y);
            // first-same-as-last only holds without rescaling; re-evaluate
            f(x, &y, &mut k[0]);
            stats.evaluations += 1;
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(opts.max_step);
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.25)).clamp(0.1, 0.5);
            if h < opts.min_step * span.max(x.abs()).max(1.0) {
                return Err(Error::StiffnessFailure(x));
            }
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_both_directions() {
        let opts = OdeOptions::default();
        let f = |_: f64, y: &[f64], d: &mut [f64]| {
            d[0] = y[1];
            d[1] = -y[0];
        };
        let (y, _) = integrate(f, 0.0, 10.0, &[0.0, 1.0], &opts, |_, _| {}).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
        let (y, _) = integrate(f, 10.0, 0.0, &[10f64.sin(), 10f64.cos()], &opts, |_, _| {}).unwrap();
        assert!(y[0].abs() < 1e-8 && (y[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rescaling_callback_is_respected() {
        let opts = OdeOptions::default();
        let mut log_scale = 0.0;
        let (y, _) = integrate(
            |_, y, d| d[0] = y[0],
            0.0,
            50.0,
            &[1.0],
            &opts,
            |_, y| {
                log_scale += y[0].ln();
                y[0] = 1.0;
            },
        )
        .unwrap();
        assert!(((y[0].ln() + log_scale) - 50.0).abs() < 1e-7);
    }
}
