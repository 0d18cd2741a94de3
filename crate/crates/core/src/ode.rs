//! Embedded adaptive Runge–Kutta integrator (Dormand–Prince 5(4)).
//!
//! Steps are accepted when the embedded-pair error estimate, scaled by
//! `atol + rtol·|y|`, has RMS norm at most one. Dense output between accepted
//! nodes is cubic Hermite interpolation from the stored endpoint slopes
//! (FSAL makes those free).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}: system too stiff for an explicit method")]
    StepSizeUnderflow { t: f64 },
}

// Dormand–Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Accepted trajectory nodes with slopes, supporting dense evaluation.
#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl OdeSolution {
    pub fn end(&self) -> &[f64] {
        self.ys.last().expect("solution has at least one node")
    }

    /// Dense output at `t` (clamped to the integrated span).
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let t0 = self.ts[0];
        let t1 = *self.ts.last().unwrap();
        let t = t.clamp(t0, t1);
        if self.ts.len() == 1 {
            return self.ys[0].clone();
        }
        // Last interval containing t.
        let idx = match self.ts.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => i.min(self.ts.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.ts.len() - 2),
        };
        let h = self.ts[idx + 1] - self.ts[idx];
        if h == 0.0 {
            return self.ys[idx].clone();
        }
        let s = (t - self.ts[idx]) / h;
        let (ya, yb) = (&self.ys[idx], &self.ys[idx + 1]);
        let (fa, fb) = (&self.slopes[idx], &self.slopes[idx + 1]);
        // Cubic Hermite basis.
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (0..ya.len())
            .map(|i| h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i])
            .collect()
    }
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end >= t0`.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<OdeSolution, OdeError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    assert!(rel_tol > 0.0 && abs_tol > 0.0);
    assert!(t_end >= t0);
    let dim = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f_cur = vec![0.0; dim];
    rhs(t, &y, &mut f_cur);

    let mut sol = OdeSolution {
        ts: vec![t],
        ys: vec![y.clone()],
        slopes: vec![f_cur.clone()],
    };
    if t_end == t0 {
        return Ok(sol);
    }

    let span = t_end - t0;
    let mut h = (span / 100.0).min(0.1 * span.max(1e-12));
    let h_min = 1e-14 * span;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];

    while t < t_end {
        h = h.min(t_end - t);
        if h < h_min {
            return Err(OdeError::StepSizeUnderflow { t });
        }
        // FSAL: k1 is the slope already evaluated at (t, y).
        k[0].copy_from_slice(&f_cur);
        for stage in 1..7 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let a = A[stage - 1][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(stage);
            let _ = head;
            rhs(t + C[stage] * h, &y_stage, &mut tail[0]);
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut y5 = y[i];
            let mut err = 0.0;
            for j in 0..7 {
                y5 += h * B5[j] * k[j][i];
                err += h * (B5[j] - B4[j]) * k[j][i];
            }
            y_new[i] = y5;
            let scale = abs_tol + rel_tol * y[i].abs().max(y5.abs());
            err_sq += (err / scale) * (err / scale);
        }
        // A non-finite estimate (overflowing rhs) is a hard rejection.
        let err_norm = (err_sq / dim as f64).sqrt();
        if !err_norm.is_finite() {
            h *= 0.2;
            continue;
        }
        if err_norm <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            // y7 stage equals y5, so k7 is the slope at the new point.
            f_cur.copy_from_slice(&k[6]);
            sol.ts.push(t);
            sol.ys.push(y.clone());
            sol.slopes.push(f_cur.clone());
            let grow = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= grow;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let sol = integrate(|_, y, dy| dy[0] = -y[0], &[1.0], 0.0, 1.0, 1e-8, 1e-12).unwrap();
        let expect = (-1.0f64).exp();
        assert!((sol.end()[0] - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let sol = integrate(|_, y, dy| dy[0] = -y[0], &[2.0], 0.0, 0.0, 1e-8, 1e-12).unwrap();
        assert_eq!(sol.ts.len(), 1);
        assert_eq!(sol.sample(0.0), vec![2.0]);
    }

    #[test]
    fn dense_output_tracks_solution() {
        let sol = integrate(|_, y, dy| dy[0] = -y[0], &[1.0], 0.0, 5.0, 1e-10, 1e-14).unwrap();
        for i in 0..=50 {
            let t = 0.1 * i as f64;
            let v = sol.sample(t)[0];
            assert!((v - (-t).exp()).abs() < 1e-7, "t = {t}: {v}");
        }
    }

    #[test]
    fn harmonic_oscillator_energy_is_preserved() {
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            0.0,
            20.0,
            1e-9,
            1e-12,
        )
        .unwrap();
        let end = sol.end();
        let energy = end[0] * end[0] + end[1] * end[1];
        assert!((energy - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stiffness_guard_triggers_on_discontinuous_rhs() {
        // A right-hand side whose magnitude explodes forces h below the floor.
        let res = integrate(
            |t, _, dy| dy[0] = if t < 0.5 { 1.0 } else { 1e18 / (1.0 - t).max(0.0) },
            &[0.0],
            0.0,
            1.0,
            1e-10,
            1e-14,
        );
        assert!(matches!(res, Err(OdeError::StepSizeUnderflow { .. })));
    }
}
