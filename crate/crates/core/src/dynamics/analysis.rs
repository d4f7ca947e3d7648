//! Post-processing of trajectories: exponential lower-bound fits, the
//! collision-time integral, and the approach-speed threshold search.

use std::f64::consts::LN_10;

use super::{simulate, IntegratorOptions, SwimmerScenario, Trajectory};
use crate::drag::{BoundaryCondition, DragModel, KAPPA_PROP_MIN_GAP};
use crate::error::{ensure_positive, Error, Result};
use crate::series::MIN_SERIES_GAP;

/// Fitted bound `h(t) >= c1 exp(-c2 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundFit {
    pub c1: f64,
    pub c2: f64,
    /// RMS residual of `ln h` about the fitted line over the tail.
    pub residual: f64,
    /// Start time of the window used for the fit.
    pub tail_start: f64,
}

impl LowerBoundFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.c1 * (-self.c2 * t).exp()
    }

    /// Strict pointwise check over every trajectory point.
    pub fn holds_on(&self, traj: &Trajectory) -> bool {
        traj.points.iter().all(|p| p.h > self.bound(p.t))
    }
}

/// Least-squares fit of `ln h` against `t` over the second half of the run.
/// The decay rate comes from the fit; `c1` is then lowered just enough that
/// the bound holds at every computed point.
pub fn noslip_lower_bound_fit(traj: &Trajectory) -> Result<LowerBoundFit> {
    if traj.scenario.bc != BoundaryCondition::NoSlip {
        return Err(Error::Domain(format!(
            "lower-bound fit needs a no-slip trajectory, got {}",
            traj.scenario.bc
        )));
    }
    for (i, w) in traj.points.windows(2).enumerate() {
        if w[1].h > w[0].h * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "trajectory not monotone: h rises from {:e} to {:e} at point {}, t = {}",
                w[0].h,
                w[1].h,
                i + 1,
                w[1].t
            )));
        }
    }
    let t_end = traj.last().t;
    let tail_start = 0.5 * t_end;
    let tail: Vec<(f64, f64)> = traj
        .points
        .iter()
        .filter(|p| p.t >= tail_start)
        .map(|p| (p.t, p.h.ln()))
        .collect();
    if tail.len() < 3 {
        return Err(Error::Domain(format!(
            "only {} points in the fit window [{tail_start}, {t_end}]",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let t_mean = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = tail.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    let sty: f64 = tail.iter().map(|p| (p.0 - t_mean) * (p.1 - y_mean)).sum();
    let slope = sty / stt;
    let intercept = y_mean - slope * t_mean;
    let residual = (tail
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let c2 = (-slope).max(0.0);
    let c1 = traj
        .points
        .iter()
        .map(|p| p.h * (c2 * p.t).exp())
        .fold(f64::INFINITY, f64::min)
        * (1.0 - 1e-9);
    Ok(LowerBoundFit {
        c1,
        c2,
        residual,
        tail_start,
    })
}

/// Result of integrating `dh / U(h)` from contact up to `h0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionQuadrature {
    pub t_coll: f64,
    /// Accumulated Gauss–Kronrod error estimate.
    pub abs_error: f64,
    /// Estimated contribution of the gaps below the last decade integrated.
    pub tail: f64,
    pub decades: usize,
}

const QUAD_RTOL: f64 = 1e-10;
const MAX_DECADES: usize = 400;

/// Collision time of a massless scenario, `T = ∫_0^{h0} dh / U(h)` with
/// `U = F(h) / κ_pass(h)`, computed in `s = ln h` one decade at a time.
///
/// No-slip drag makes each decade contribute about the same amount, so the
/// integral diverges; that case is reported as [`Error::Divergence`].
pub fn collision_time_quadrature(
    model: &DragModel,
    scenario: &SwimmerScenario,
) -> Result<CollisionQuadrature> {
    scenario.validate()?;
    if scenario.m != 0.0 {
        return Err(Error::Domain(format!(
            "collision-time quadrature needs m = 0, got {}",
            scenario.m
        )));
    }
    let integrand = |s: f64| -> Result<f64> {
        let h = s.exp();
        let kappa = model.kappa_pass(h, scenario.bc)?;
        let force = scenario.forcing(model, h)?;
        if force.is_nan() || force <= 0.0 {
            return Err(Error::NoCollision {
                h,
                speed: force / kappa,
            });
        }
        Ok(h * kappa / force)
    };

    let floor = match scenario.bc {
        BoundaryCondition::NoSlip => MIN_SERIES_GAP.ln(),
        BoundaryCondition::Navier { .. } => f64::MIN_POSITIVE.ln() + 10.0,
    };
    let mut kinks = vec![KAPPA_PROP_MIN_GAP.ln()];
    if let BoundaryCondition::Navier { beta } = scenario.bc {
        kinks.push(beta.ln());
    }

    let mut total = 0.0;
    let mut abs_error = 0.0;
    let mut contributions: Vec<f64> = Vec::new();
    let mut upper = scenario.h0.ln();
    for decade in 1..=MAX_DECADES {
        let lower = (upper - LN_10).max(floor);
        let mut edges = vec![lower];
        edges.extend(kinks.iter().copied().filter(|&k| k > lower && k < upper));
        edges.push(upper);
        let mut piece = 0.0;
        for w in edges.windows(2) {
            let (v, e) = adaptive_gk(&integrand, w[0], w[1], QUAD_RTOL, 40)?;
            piece += v;
            abs_error += e;
        }
        total += piece;
        contributions.push(piece);
        upper = lower;

        let k = contributions.len();
        let ratio = if k >= 2 {
            piece / contributions[k - 2]
        } else {
            f64::NAN
        };
        if k >= 3 && ratio < 0.5 && piece < 1e-14 * total {
            let tail = piece * ratio / (1.0 - ratio);
            return Ok(CollisionQuadrature {
                t_coll: total + tail,
                abs_error,
                tail,
                decades: decade,
            });
        }
        let stalled = k >= 4
            && contributions[k - 3..]
                .iter()
                .zip(&contributions[k - 4..])
                .all(|(b, a)| b / a > 0.9);
        if stalled || lower <= floor {
            let h = lower.exp();
            return Err(if ratio > 0.5 || stalled {
                Error::Divergence(format!(
                    "each decade of h adds about {piece:.6e}; partial integral {total:.6e} down to h = {h:e}"
                ))
            } else {
                Error::Quadrature(format!("tail not resolved above h = {h:e}"))
            });
        }
    }
    Err(Error::Quadrature(format!(
        "no convergence after {MAX_DECADES} decades"
    )))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid)?;
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(mid - dx)? + f(mid + dx)?;
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Ok((kron * half, ((kron - gauss) * half).abs()))
}

fn adaptive_gk<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    rtol: f64,
    depth: usize,
) -> Result<(f64, f64)> {
    let (v, e) = gk15(f, a, b)?;
    if e <= rtol * v.abs() || e < 1e-300 {
        return Ok((v, e));
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "interval [{a}, {b}] error {e:e} above tolerance"
        )));
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adaptive_gk(f, a, m, rtol, depth - 1)?;
    let (v2, e2) = adaptive_gk(f, m, b, rtol, depth - 1)?;
    Ok((v1 + v2, e1 + e2))
}

/// Search window and run settings for [`threshold_speed_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub s_lo: f64,
    pub s_hi: f64,
    pub t_max: f64,
    pub h_floor: f64,
    /// Evenly spaced speeds checked for monotonicity before bisecting.
    pub samples: usize,
    /// Bisection stops once the bracket is narrower than this.
    pub s_tol: f64,
    pub opts: IntegratorOptions,
}

impl ProbeSettings {
    pub fn new(s_lo: f64, s_hi: f64, t_max: f64, h_floor: f64) -> Self {
        Self {
            s_lo,
            s_hi,
            t_max,
            h_floor,
            samples: 5,
            s_tol: 1e-3,
            opts: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    /// Speeds above the estimate collide, speeds below do not.
    Critical(f64),
    CollidesForAll,
    NoneCollide,
    /// The slowest probe collides but the fastest does not.
    NonBracketing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub s0: f64,
    pub collision_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub outcome: ProbeOutcome,
    pub samples: Vec<ProbeSample>,
    /// No faster sample failed to collide where a slower one did.
    pub monotone: bool,
}

/// Bisection on the initial approach speed over simulate outcomes.
pub fn threshold_speed_probe(
    model: &DragModel,
    base: &SwimmerScenario,
    settings: &ProbeSettings,
) -> Result<ProbeReport> {
    let ProbeSettings {
        s_lo,
        s_hi,
        samples,
        s_tol,
        ..
    } = *settings;
    if !(s_lo.is_finite() && s_lo >= 0.0 && s_hi > s_lo && s_hi.is_finite()) {
        return Err(Error::Domain(format!(
            "probe bounds need 0 <= s_lo < s_hi, got [{s_lo}, {s_hi}]"
        )));
    }
    ensure_positive("s_tol", s_tol)?;
    let run = |s0: f64| -> Result<ProbeSample> {
        let sc = base.with_speed(s0);
        let traj = simulate(model, &sc, settings.t_max, settings.h_floor, &settings.opts)?;
        Ok(ProbeSample {
            s0,
            collision_time: traj.termination.collision_time(),
        })
    };

    let count = samples.max(2);
    let mut found = Vec::with_capacity(count);
    for i in 0..count {
        let s0 = s_lo + (s_hi - s_lo) * i as f64 / (count - 1) as f64;
        found.push(run(s0)?);
    }
    let monotone = found.iter().enumerate().all(|(i, a)| {
        a.collision_time.is_none() || found[i + 1..].iter().all(|b| b.collision_time.is_some())
    });

    let lo_hits = found[0].collision_time.is_some();
    let hi_hits = found[count - 1].collision_time.is_some();
    let outcome = match (lo_hits, hi_hits) {
        (true, true) => ProbeOutcome::CollidesForAll,
        (false, false) => ProbeOutcome::NoneCollide,
        (true, false) => ProbeOutcome::NonBracketing,
        (false, true) => {
            // tightest bracket from the grid, then bisect
            let i = found
                .iter()
                .rposition(|s| s.collision_time.is_none())
                .unwrap();
            let (mut a, mut b) = (found[i].s0, found[i + 1].s0);
            while b - a > s_tol {
                let mid = 0.5 * (a + b);
                let s = run(mid)?;
                if s.collision_time.is_some() {
                    b = mid;
                } else {
                    a = mid;
                }
                found.push(s);
            }
            ProbeOutcome::Critical(0.5 * (a + b))
        }
    };
    found.sort_by(|a, b| a.s0.total_cmp(&b.s0));
    Ok(ProbeReport {
        outcome,
        samples: found,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Termination, TrajectoryPoint};

    fn synthetic(hs: &[(f64, f64)]) -> Trajectory {
        Trajectory {
            points: hs
                .iter()
                .map(|&(t, h)| TrajectoryPoint {
                    t,
                    h,
                    hdot: 0.0,
                    kappa_pass: 0.0,
                    kappa_prop: 0.0,
                })
                .collect(),
            termination: Termination::HorizonReached,
            scenario: SwimmerScenario::passive(1.0, 0.0, 1.0, BoundaryCondition::NoSlip),
            h_floor: 1e-7,
            stats: Default::default(),
        }
    }

    #[test]
    fn exact_exponential_fit() {
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|i| (i as f64, 0.7 * (-0.3 * i as f64).exp()))
            .collect();
        let fit = noslip_lower_bound_fit(&synthetic(&pts)).unwrap();
        assert!((fit.c2 - 0.3).abs() < 1e-12);
        assert!((fit.c1 - 0.7).abs() < 1e-8);
        assert!(fit.residual < 1e-12);
        assert!(fit.holds_on(&synthetic(&pts)));
    }

    #[test]
    fn fit_rejects_rising_gap() {
        let err = noslip_lower_bound_fit(&synthetic(&[
            (0.0, 1.0),
            (1.0, 0.5),
            (2.0, 0.6),
            (3.0, 0.4),
        ]))
        .unwrap_err();
        assert!(err.to_string().contains("not monotone"));
    }

    #[test]
    fn gauss_kronrod_polynomial_and_exp() {
        let (v, e) = gk15(&|x: f64| Ok(x.powi(10)), -1.0, 2.0).unwrap();
        assert!((v - (2f64.powi(11) + 1.0) / 11.0).abs() < 1e-12);
        assert!(e < 1e-10);
        let (v, _) = adaptive_gk(&|x: f64| Ok(x.exp()), -30.0, 0.0, 1e-12, 30).unwrap();
        assert!((v - (1.0 - (-30f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn quadrature_requires_massless() {
        let model = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        let sc = SwimmerScenario::passive(1.0, 0.5, 1.0, bc);
        assert!(collision_time_quadrature(&model, &sc).is_err());
    }

    #[test]
    fn no_force_means_no_collision() {
        let model = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        let sc = SwimmerScenario::active(0.5, 0.0, 0.0, 1.0, bc);
        assert!(matches!(
            collision_time_quadrature(&model, &sc),
            Err(Error::NoCollision { .. })
        ));
    }

    #[test]
    fn probe_rejects_bad_bounds() {
        let model = DragModel::default();
        let sc =
            SwimmerScenario::active(0.5, 0.1, 1.0, 1.0, BoundaryCondition::navier(0.1).unwrap());
        let s = ProbeSettings::new(1.0, 0.5, 10.0, 1e-9);
        assert!(threshold_speed_probe(&model, &sc, &s).is_err());
    }
}
