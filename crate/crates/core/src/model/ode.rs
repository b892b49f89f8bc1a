//! Adaptive Dormand–Prince 5(4) integrator for small autonomous systems.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction) with local
/// error per step at most `tol * max(1, |y|)` componentwise, and returns `y(t1)`.
pub fn integrate<F>(f: F, t0: f64, y0: &[f64], t1: f64, tol: f64) -> Result<(Vec<f64>, OdeStats)>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let d = y0.len();
    let mut y = y0.to_vec();
    let mut stats = OdeStats {
        accepted: 0,
        rejected: 0,
    };
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y, stats));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut h = dir * span.abs().min(tol.powf(0.2) * 0.5).max(span.abs() * 1e-3);
    let h_min = 1e-14 * span.abs().max(t0.abs()).max(1.0);

    let mut k = vec![vec![0.0; d]; 7];
    let mut tmp = vec![0.0; d];
    let mut y_new = vec![0.0; d];
    f(t, &y, &mut k[0]);

    while (t1 - t) * dir > 0.0 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::Integration(format!("more than {MAX_STEPS} steps")));
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        let stage = |coef: &[(usize, f64)], tmp: &mut [f64], k: &[Vec<f64>], y: &[f64]| {
            for i in 0..d {
                tmp[i] = y[i] + h * coef.iter().map(|&(s, a)| a * k[s][i]).sum::<f64>();
            }
        };
        stage(&[(0, A21)], &mut tmp, &k, &y);
        f(t + C2 * h, &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &mut tmp, &k, &y);
        f(t + C3 * h, &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &mut tmp, &k, &y);
        f(t + C4 * h, &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp, &k, &y);
        f(t + C5 * h, &tmp, &mut k[4]);
        stage(
            &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)],
            &mut tmp,
            &k,
            &y,
        );
        f(t + h, &tmp, &mut k[5]);
        stage(
            &[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)],
            &mut y_new,
            &k,
            &y,
        );
        f(t + h, &y_new, &mut k[6]);

        let mut err = 0.0f64;
        for i in 0..d {
            let e = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = tol * y[i].abs().max(y_new[i].abs()).max(1.0);
            err = err.max(e.abs() / scale);
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integration(format!("non-finite state near t = {t}")));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            let (first, rest) = k.split_at_mut(1);
            first[0].copy_from_slice(&rest[5]);
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        h *= factor;
        if h.abs() < h_min && (t1 - t) * dir > h_min {
            return Err(Error::Integration(format!(
                "step size underflow ({:e}) at t = {t}",
                h.abs()
            )));
        }
    }
    Ok((y, stats))
}
