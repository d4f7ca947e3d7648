//! Dormand–Prince 5(4) embedded pair with FSAL and an elementary step controller.

use crate::error::Result;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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

/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct Step<const N: usize> {
    pub y: [f64; N],
    /// Derivative at the new point (first stage of the next step).
    pub f_new: [f64; N],
    pub err: [f64; N],
}

/// One trial step of size `dt` from `(t, y)` with `f0 = f(t, y)`.
pub(crate) fn dopri_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    f0: &[f64; N],
    dt: f64,
) -> Result<Step<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let mut k = [[0.0; N]; 7];
    k[0] = *f0;
    for s in 1..7 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let incr: f64 = (0..s).map(|j| A[s][j] * k[j][i]).sum();
            *yi += dt * incr;
        }
        k[s] = f(t + C[s] * dt, &ys)?;
    }
    // the seventh stage is evaluated at the fifth-order solution
    let mut y_new = *y;
    let mut err = [0.0; N];
    for i in 0..N {
        y_new[i] += dt * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>();
        err[i] = dt * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
    }
    Ok(Step {
        y: y_new,
        f_new: k[6],
        err,
    })
}

/// RMS of `err_i / (atol + rtol max(|y_i|, |y_new_i|))`.
pub(crate) fn error_norm<const N: usize>(
    step: &Step<N>,
    y: &[f64; N],
    rtol: f64,
    atol: f64,
) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = atol + rtol * y[i].abs().max(step.y[i].abs());
            (step.err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// New step-size factor from the error norm of the last trial.
pub(crate) fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}
