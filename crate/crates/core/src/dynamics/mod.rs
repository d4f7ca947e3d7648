//! Approach dynamics of the two spheres.
//!
//! Each sphere obeys `m h'' + κ_pass(h) h' + F(h) = 0` where the forcing `F` is
//! `f_p (1 - κ_prop(h, λ))` for active swimmers and `f_ext` for passive spheres
//! pushed together. With `m = 0` the equation is algebraic in `h'`.
//!
//! The integrator works on `ln h` so that the near-contact `1/h` drag law does
//! not force vanishing steps in absolute `h`.

mod analysis;
mod integrator;

pub use analysis::{
    collision_time_quadrature, noslip_lower_bound_fit, threshold_speed_probe, CollisionQuadrature,
    LowerBoundFit, ProbeOutcome, ProbeReport, ProbeSample, ProbeSettings,
};

use crate::drag::{BoundaryCondition, DragModel};
use crate::error::{ensure_positive, Error, Result};
use integrator::{dopri_step, error_norm, step_factor};

/// Default contact threshold for no-slip runs.
pub const H_FLOOR_NOSLIP: f64 = 1e-7;
/// Default contact threshold for Navier runs.
pub const H_FLOOR_NAVIER: f64 = 1e-9;

/// Largest change of `ln h` allowed across one accepted step.
const MAX_LOG_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    ActiveSwimmers,
    /// Passive spheres pushed together by a constant external force.
    PassiveForced {
        f_ext: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwimmerScenario {
    /// Initial half-gap.
    pub h0: f64,
    /// Initial approach speed `-h'(0)`; ignored when `m = 0`.
    pub s0: f64,
    pub m: f64,
    pub f_p: f64,
    pub lambda: f64,
    pub bc: BoundaryCondition,
    pub mode: Mode,
}

impl SwimmerScenario {
    pub fn active(h0: f64, m: f64, f_p: f64, lambda: f64, bc: BoundaryCondition) -> Self {
        Self {
            h0,
            s0: 0.0,
            m,
            f_p,
            lambda,
            bc,
            mode: Mode::ActiveSwimmers,
        }
    }

    pub fn passive(h0: f64, m: f64, f_ext: f64, bc: BoundaryCondition) -> Self {
        Self {
            h0,
            s0: 0.0,
            m,
            f_p: 0.0,
            lambda: 1.0,
            bc,
            mode: Mode::PassiveForced { f_ext },
        }
    }

    pub fn with_speed(mut self, s0: f64) -> Self {
        self.s0 = s0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("h0", self.h0)?;
        ensure_positive("lambda", self.lambda)?;
        for (name, v) in [("s0", self.s0), ("m", self.m), ("f_p", self.f_p)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if let Mode::PassiveForced { f_ext } = self.mode {
            ensure_positive("f_ext", f_ext)?;
        }
        Ok(())
    }

    /// Default contact threshold for this boundary condition.
    pub fn default_h_floor(&self) -> f64 {
        match self.bc {
            BoundaryCondition::NoSlip => H_FLOOR_NOSLIP,
            BoundaryCondition::Navier { .. } => H_FLOOR_NAVIER,
        }
    }

    /// Force pushing the spheres together after the propulsion backflow.
    pub fn forcing(&self, model: &DragModel, h: f64) -> Result<f64> {
        match self.mode {
            Mode::ActiveSwimmers => model.net_propulsion(h, self.lambda, self.f_p, self.bc),
            Mode::PassiveForced { f_ext } => Ok(f_ext),
        }
    }

    /// `(h', h'')` at state `(h, hdot)`. For `m = 0` the input `hdot` is ignored,
    /// the first component is the algebraic `-F/κ_pass` and `h''` is reported as 0.
    pub fn rhs(&self, model: &DragModel, h: f64, hdot: f64) -> Result<(f64, f64)> {
        // forcing first: the propulsion solve also caches the drag at this gap
        let force = self.forcing(model, h)?;
        let kappa = model.kappa_pass(h, self.bc)?;
        if self.m == 0.0 {
            Ok((-force / kappa, 0.0))
        } else {
            Ok((hdot, (-kappa * hdot - force) / self.m))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub h: f64,
    pub hdot: f64,
    pub kappa_pass: f64,
    pub kappa_prop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// `h` reached the contact threshold at the given time.
    Collision(f64),
    HorizonReached,
    /// The spheres stopped approaching.
    SpeedReversed,
}

impl Termination {
    pub fn collision_time(&self) -> Option<f64> {
        match *self {
            Self::Collision(t) => Some(t),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Collision(_) => "collision",
            Self::HorizonReached => "horizon",
            Self::SpeedReversed => "speed-reversed",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub termination: Termination,
    pub scenario: SwimmerScenario,
    pub h_floor: f64,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn min_h(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.h)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points
            .last()
            .expect("trajectory has at least the initial point")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-3,
            ..Self::default()
        }
    }

    pub fn refined(&self, factor: f64) -> Self {
        Self {
            rtol: self.rtol / factor,
            atol: self.atol / factor,
            ..*self
        }
    }
}

/// Integrates until contact (`h = h_floor`), the horizon `t_max`, or the spheres
/// stop approaching. The contact time is localized by bisection to 1e-12.
pub fn simulate(
    model: &DragModel,
    scenario: &SwimmerScenario,
    t_max: f64,
    h_floor: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    scenario.validate()?;
    ensure_positive("t_max", t_max)?;
    ensure_positive("h_floor", h_floor)?;
    if h_floor >= scenario.h0 {
        return Err(Error::Domain(format!(
            "h_floor {h_floor} must be below h0 {}",
            scenario.h0
        )));
    }
    if scenario.m == 0.0 {
        integrate::<1>(model, scenario, t_max, h_floor, opts)
    } else {
        integrate::<2>(model, scenario, t_max, h_floor, opts)
    }
}

/// State layout: `[ln h]` when massless, `[ln h, h']` otherwise.
fn integrate<const N: usize>(
    model: &DragModel,
    sc: &SwimmerScenario,
    t_max: f64,
    h_floor: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    let mut stats = IntegratorStats::default();
    let mut evals = 0usize;
    let mut f = |_t: f64, y: &[f64; N]| -> Result<[f64; N]> {
        evals += 1;
        let h = y[0].exp();
        let hdot_in = if N == 2 { y[N - 1] } else { 0.0 };
        let (hdot, hddot) = sc.rhs(model, h, hdot_in)?;
        let mut out = [0.0; N];
        out[0] = hdot / h;
        if N == 2 {
            out[N - 1] = hddot;
        }
        Ok(out)
    };

    let log_floor = h_floor.ln();
    let mut t = 0.0;
    let mut y = [0.0; N];
    y[0] = sc.h0.ln();
    if N == 2 {
        y[N - 1] = -sc.s0;
    }
    let mut fy = f(t, &y)?;
    let point = |t: f64, y: &[f64; N], fy: &[f64; N]| -> Result<TrajectoryPoint> {
        let h = y[0].exp();
        let c = model.coefficients(h, sc.lambda, sc.bc)?;
        Ok(TrajectoryPoint {
            t,
            h,
            hdot: fy[0] * h,
            kappa_pass: c.kappa_pass,
            kappa_prop: c.kappa_prop,
        })
    };
    let mut points = vec![point(t, &y, &fy)?];

    let stalled = |fy: &[f64; N], y: &[f64; N]| -> bool {
        if N == 1 {
            fy[0] >= 0.0
        } else {
            y[N - 1] >= 0.0 && fy[N - 1] >= 0.0
        }
    };
    if stalled(&fy, &y) {
        stats.rhs_evals = evals;
        return Ok(Trajectory {
            points,
            termination: Termination::SpeedReversed,
            scenario: *sc,
            h_floor,
            stats,
        });
    }

    // initial step from the local time scale of ln h
    let rate = fy.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut dt = if rate > 0.0 {
        (0.01 / rate).min(t_max / 10.0)
    } else {
        t_max / 100.0
    };

    let termination = loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::Stiffness {
                t,
                h: y[0].exp(),
                hdot: fy[0] * y[0].exp(),
                dt,
            });
        }
        let dt_min = 1e-13 * t.max(1.0);
        if dt < dt_min {
            return Err(Error::Stiffness {
                t,
                h: y[0].exp(),
                hdot: fy[0] * y[0].exp(),
                dt,
            });
        }
        let last = t + dt >= t_max;
        let step_dt = if last { t_max - t } else { dt };
        let step = dopri_step(&mut f, t, &y, &fy, step_dt)?;
        let err = error_norm(&step, &y, opts.rtol, opts.atol);
        let dlog = (step.y[0] - y[0]).abs();
        if err > 1.0 || dlog > MAX_LOG_STEP || !step.y.iter().all(|v| v.is_finite()) {
            stats.rejected += 1;
            let mut factor = if err.is_finite() {
                step_factor(err).min(1.0)
            } else {
                0.2
            };
            if dlog > MAX_LOG_STEP {
                factor = factor.min(0.9 * MAX_LOG_STEP / dlog);
            }
            dt = step_dt * factor.max(0.1);
            continue;
        }

        if step.y[0] <= log_floor {
            // bisection on the step length, re-stepping from the accepted state
            let (mut lo, mut hi) = (0.0, step_dt);
            let mut y_hi = step.y;
            let mut f_hi = step.f_new;
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let trial = dopri_step(&mut f, t, &y, &fy, mid)?;
                if trial.y[0] <= log_floor {
                    hi = mid;
                    y_hi = trial.y;
                    f_hi = trial.f_new;
                } else {
                    lo = mid;
                }
            }
            stats.accepted += 1;
            t += hi;
            points.push(point(t, &y_hi, &f_hi)?);
            break Termination::Collision(t);
        }

        stats.accepted += 1;
        t += step_dt;
        y = step.y;
        fy = step.f_new;
        points.push(point(t, &y, &fy)?);
        if last {
            break Termination::HorizonReached;
        }
        if stalled(&fy, &y) {
            break Termination::SpeedReversed;
        }
        dt = step_dt * step_factor(err);
    };

    stats.rhs_evals = evals;
    Ok(Trajectory {
        points,
        termination,
        scenario: *sc,
        h_floor,
        stats,
    })
}
