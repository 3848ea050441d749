//! Embedded Dormand–Prince 5(4) step for two-dimensional systems, with the
//! standard fourth-order continuous extension for dense output. Event
//! detection in the radial integrator relies on the dense polynomial, so the
//! stepper exposes one accepted step at a time rather than a whole solve.

pub type State = [f64; 2];

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
/// Fifth-order weights (row 7 of A, FSAL) minus the embedded fourth-order
/// weights: the error estimator.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];
/// Dense-output weights for the fifth contribution of the continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Continuous extension over one accepted step [t0, t0 + h].
#[derive(Debug, Clone)]
pub struct DenseOutput {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; 2]; 5],
}

impl DenseOutput {
    /// Solution at t0 + theta·h, theta ∈ [0, 1].
    pub fn eval(&self, theta: f64) -> State {
        let th1 = 1.0 - theta;
        let mut y = [0.0; 2];
        for i in 0..2 {
            let c = &self.cont;
            y[i] = c[0][i] + theta * (c[1][i] + th1 * (c[2][i] + theta * (c[3][i] + th1 * c[4][i])));
        }
        y
    }
}

/// Result of one accepted step: new state, dense interpolant, FSAL derivative,
/// and the step size proposal for the next step.
pub struct Step {
    pub t: f64,
    pub y: State,
    pub dense: DenseOutput,
    pub dy: State,
    pub h_next: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub atol: f64,
    pub rtol: f64,
}

/// Take one error-controlled step of the system y' = rhs(t, y) starting at
/// (t, y) with derivative dy = rhs(t, y) (FSAL), initial trial size h.
/// Returns None when the step size underflows below `h_floor`.
pub fn step<F: FnMut(f64, &State) -> State>(
    rhs: &mut F,
    t: f64,
    y: &State,
    dy: &State,
    mut h: f64,
    h_floor: f64,
    ctrl: &StepControl,
) -> Option<Step> {
    let mut k = [[0.0f64; 2]; 7];
    k[0] = *dy;
    loop {
        for s in 1..7 {
            let mut ys = *y;
            for i in 0..2 {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        // Stage 7 is evaluated at the fifth-order solution (FSAL).
        let mut y1 = *y;
        for i in 0..2 {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[6][j] * kj[i];
            }
            y1[i] += h * acc;
        }

        let mut err = 0.0f64;
        for i in 0..2 {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = ctrl.atol + ctrl.rtol * y[i].abs().max(y1[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / 2.0).sqrt();

        if err <= 1.0 {
            if !y1[0].is_finite() || !y1[1].is_finite() {
                return None;
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            let dy1 = k[6];
            // Hairer's rcont coefficients for the 4th-order dense output.
            let mut cont = [[0.0f64; 2]; 5];
            for i in 0..2 {
                let ydiff = y1[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut d5 = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    d5 += D[j] * kj[i];
                }
                cont[4][i] = h * d5;
            }
            return Some(Step {
                t: t + h,
                y: y1,
                dense: DenseOutput { t0: t, h, cont },
                dy: dy1,
                h_next: h * factor,
            });
        }
        let factor = if err.is_finite() {
            (0.9 * err.powf(-0.2)).clamp(0.2, 1.0)
        } else {
            0.2
        };
        h *= factor;
        if h < h_floor {
            return None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate<F: FnMut(f64, &State) -> State>(
        rhs: &mut F,
        t0: f64,
        t1: f64,
        y0: State,
        ctrl: &StepControl,
    ) -> State {
        let mut t = t0;
        let mut y = y0;
        let mut dy = rhs(t0, &y0);
        let mut h = 1e-4f64;
        while t < t1 {
            h = h.min(t1 - t);
            let s = step(rhs, t, &y, &dy, h, 1e-14, ctrl).expect("step underflow");
            t = s.t;
            y = s.y;
            dy = s.dy;
            h = s.h_next;
        }
        y
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        // y'' = -y from (1, 0): y = cos t.
        let ctrl = StepControl { atol: 1e-12, rtol: 1e-11 };
        let y = integrate(&mut |_t, y: &State| [y[1], -y[0]], 0.0, 10.0, [1.0, 0.0], &ctrl);
        assert!((y[0] - 10.0f64.cos()).abs() <= 1e-9);
        assert!((y[1] + 10.0f64.sin()).abs() <= 1e-9);
    }

    #[test]
    fn dense_output_accuracy() {
        // Dense samples of exp growth match the exact solution to 4th order.
        let ctrl = StepControl { atol: 1e-12, rtol: 1e-11 };
        let mut rhs = |_t: f64, y: &State| [y[0], y[1]];
        let y0 = [1.0, 1.0];
        let dy0 = rhs(0.0, &y0);
        let s = step(&mut rhs, 0.0, &y0, &dy0, 0.1, 1e-14, &ctrl).unwrap();
        for k in 1..10 {
            let theta = k as f64 / 10.0;
            let y = s.dense.eval(theta);
            let exact = (s.dense.h * theta).exp();
            assert!((y[0] - exact).abs() <= 1e-11, "theta = {theta}");
        }
    }

    #[test]
    fn tolerance_scaling() {
        // Tightening tolerances by 10^2 improves the error by at least 10.
        let err = |rtol: f64| {
            let ctrl = StepControl { atol: rtol * 1e-2, rtol };
            let y = integrate(
                &mut |t: f64, y: &State| [y[1], -y[0] * (1.0 + 0.3 * t.sin())],
                0.0,
                20.0,
                [1.0, 0.0],
                &ctrl,
            );
            y[0]
        };
        let reference = {
            let ctrl = StepControl { atol: 1e-14, rtol: 1e-13 };
            integrate(
                &mut |t: f64, y: &State| [y[1], -y[0] * (1.0 + 0.3 * t.sin())],
                0.0,
                20.0,
                [1.0, 0.0],
                &ctrl,
            )[0]
        };
        let e1 = (err(1e-6) - reference).abs();
        let e2 = (err(1e-8) - reference).abs();
        assert!(e2 * 10.0 <= e1.max(1e-12));
    }
}
