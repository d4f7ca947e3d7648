//! Machine-checkable invariants of every module, run as one suite.
//!
//! A [`Fault`] perturbs one formula inside the checks that exercise it, so the
//! suite can demonstrate that it actually detects a broken kernel.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::Vector3;

use crate::drag::{BoundaryCondition, DragModel, Provenance, KAPPA_PROP_MIN_GAP};
use crate::dynamics::{
    collision_time_quadrature, noslip_lower_bound_fit, simulate, IntegratorOptions,
    SwimmerScenario, Termination,
};
use crate::error::Error;
use crate::geometry::{legendre_explicit, legendre_p, AxisymPoint, BipolarFrame, BipolarPoint};
use crate::series::{
    flagellum_tip, g_m, positivity_bracket, swim_contribution_w, SeriesSolution, SeriesTruncation,
};
use crate::stokeslet::StokesletPair;

/// Deliberate corruption of one kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Multiplies the angular Gegenbauer kernel of the stream function.
    GegenbauerScale(f64),
    /// Multiplies `G_m` in the nonpenetration form of `U_n`.
    GmScale(f64),
}

impl Fault {
    fn gegenbauer(&self) -> f64 {
        match *self {
            Fault::GegenbauerScale(s) => s,
            _ => 1.0,
        }
    }

    fn gm(&self) -> f64 {
        match *self {
            Fault::GmScale(s) => s,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<28} {:>8.3}s  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.elapsed.as_secs_f64(),
                c.detail
            )?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

type CheckResult = std::result::Result<String, String>;
type CheckFn = fn(&DragModel, Fault) -> CheckResult;

const CHECKS: &[(&str, CheckFn)] = &[
    ("bipolar-roundtrip", roundtrip),
    ("sphere-surface", sphere_surface),
    ("legendre-rodrigues", legendre_rodrigues),
    ("dual-formula", dual_formula),
    ("positivity-chain", positivity_chain),
    ("psi-axis-oracle", psi_axis_oracle),
    ("kappa-pass-limits", kappa_pass_limits),
    ("swim-w-consistency", swim_w_consistency),
    ("truncation-robustness", truncation_robustness),
    ("stokeslet-divergence", stokeslet_divergence),
    ("navier-log-bounds", navier_log_bounds),
    ("regime-continuity", regime_continuity),
    ("provenance", provenance),
    ("cache-transparency", cache_transparency),
    ("decomposition", decomposition),
    ("drag-decelerates", drag_decelerates),
    ("determinism", determinism),
    ("event-localization", event_localization),
    ("refinement", refinement),
    ("noslip-lower-bound", noslip_lower_bound),
    ("passive-noslip-bound", passive_noslip_bound),
    ("navier-collision", navier_collision),
    ("quadrature-vs-event", quadrature_vs_event),
    ("noslip-divergence", noslip_divergence),
];

/// Names of every check, in run order.
pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(n, _)| *n)
}

/// Runs the full suite.
pub fn run_suite(model: &DragModel, fault: Fault) -> ValidationReport {
    run_selected(model, fault, |_| true)
}

/// Runs the checks whose names pass `select`.
pub fn run_selected(
    model: &DragModel,
    fault: Fault,
    select: impl Fn(&str) -> bool,
) -> ValidationReport {
    let checks = CHECKS
        .iter()
        .filter(|(name, _)| select(name))
        .map(|(name, check)| {
            let start = Instant::now();
            let result = check(model, fault);
            let elapsed = start.elapsed();
            let (passed, detail) = match result {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome {
                name,
                passed,
                detail,
                elapsed,
            }
        })
        .collect();
    ValidationReport { checks }
}

fn num(e: Error) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn solve(model: &DragModel, h: f64) -> std::result::Result<SeriesSolution, String> {
    let frame = BipolarFrame::from_gap(h).map_err(num)?;
    SeriesSolution::new(frame, 1.0, model.truncation()).map_err(num)
}

fn roundtrip(_: &DragModel, _: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &h in &[0.01, 0.5, 2.0] {
        let f = BipolarFrame::from_gap(h).map_err(num)?;
        for i in 0..10 {
            for j in 0..10 {
                let p =
                    AxisymPoint::new(0.05 + 0.4 * i as f64, 0.02 + 0.37 * j as f64).map_err(num)?;
                let back = f.from_bipolar(f.to_bipolar(p).map_err(num)?).map_err(num)?;
                let err =
                    (back.rho - p.rho).abs().max((back.z - p.z).abs()) / p.rho.max(p.z).max(1.0);
                worst = worst.max(err);
            }
        }
    }
    ensure(worst < 1e-10, || format!("worst roundtrip error {worst:e}"))?;
    Ok(format!("max error {worst:.2e} on 300 points"))
}

fn sphere_surface(_: &DragModel, _: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &h in &[0.01, 0.5, 3.0] {
        let f = BipolarFrame::from_gap(h).map_err(num)?;
        for k in 0..50 {
            let eta = PI * k as f64 / 49.0;
            let p = f
                .from_bipolar(BipolarPoint {
                    zeta: f.alpha(),
                    eta,
                })
                .map_err(num)?;
            let r = p.rho.hypot(p.z - f.sphere_center());
            worst = worst.max((r - 1.0).abs());
        }
    }
    ensure(worst < 1e-10, || {
        format!("distance to unit sphere off by {worst:e}")
    })?;
    Ok(format!("max |r - 1| = {worst:.2e}"))
}

fn legendre_rodrigues(_: &DragModel, _: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let x = -1.0 + 0.05 * i as f64;
        let p = legendre_p(10, x).map_err(num)?;
        for (n, pn) in p.iter().enumerate() {
            worst = worst.max((pn - legendre_explicit(n, x)).abs());
        }
    }
    ensure(worst < 1e-12, || {
        format!("recurrence vs explicit differ by {worst:e}")
    })?;
    Ok(format!("max difference {worst:.2e}, n <= 10"))
}

fn dual_formula(model: &DragModel, fault: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &h in &[0.01, 0.1, 0.5] {
        let s = solve(model, h)?;
        let alpha = s.frame().alpha();
        for n in 1..=50.min(s.n_modes()) {
            for k in 1..=8 {
                let xi = alpha * k as f64 / 8.0;
                let direct = s.u_n(n, xi).map_err(num)?;
                let dual = s.u_n_gm_form_scaled(n, xi, fault.gm()).map_err(num)?;
                worst = worst.max(rel(dual, direct));
            }
        }
    }
    ensure(worst < 1e-9, || {
        format!("U_n forms differ by {worst:e} relative")
    })?;
    Ok(format!("max relative difference {worst:.2e}"))
}

const CHAIN_GAPS: [f64; 3] = [0.01, 0.1, 1.0];
const CHAIN_LAMBDAS: [f64; 3] = [0.1, 1.0, 5.0];

fn positivity_chain(model: &DragModel, _: Fault) -> CheckResult {
    let mut min_uz = f64::INFINITY;
    for &h in &CHAIN_GAPS {
        let s = solve(model, h)?;
        let frame = *s.frame();
        let alpha = frame.alpha();
        for n in 1..=50.min(s.n_modes()) {
            let gm = g_m(&frame, n).map_err(num)?;
            ensure(gm > 0.0, || format!("G_m = {gm} at h = {h}, n = {n}"))?;
            let m = n as f64 + 0.5;
            for k in 1..10 {
                let xi = alpha * k as f64 / 10.0;
                let br = positivity_bracket(m, xi, alpha);
                ensure(br < 0.0, || {
                    format!("bracket {br} at h = {h}, n = {n}, xi = {xi}")
                })?;
            }
        }
        for &lambda in &CHAIN_LAMBDAS {
            let z0 = flagellum_tip(h, lambda);
            let zeta0 = frame.axis_zeta(z0).map_err(num)?;
            for n in 1..=s.n_modes() {
                let u = s.u_n(n, zeta0).map_err(num)?;
                let strict = n <= 50;
                ensure(u > 0.0 || (!strict && u == 0.0), || {
                    format!("U_{n}(zeta0) = {u:e} at h = {h}, lambda = {lambda}")
                })?;
            }
            let uz = s.axis_velocity_uz(z0).map_err(num)?;
            let w = swim_contribution_w(h, lambda, 1.0, model.truncation()).map_err(num)?;
            ensure(uz > 0.0 && w < 0.0, || {
                format!("axis velocity {uz:e}, W = {w:e} at h = {h}, lambda = {lambda}")
            })?;
            min_uz = min_uz.min(uz);
        }
    }
    Ok(format!(
        "chain holds on 3x3 grid, min axis velocity {min_uz:.4e}"
    ))
}

/// Axial points `(h, distance behind the rear pole)`.
const ORACLE_POINTS: [(f64, f64); 10] = [
    (0.05, 0.01),
    (0.05, 0.1),
    (0.05, 0.5),
    (0.05, 1.0),
    (0.05, 3.0),
    (0.5, 0.01),
    (0.5, 0.1),
    (0.5, 0.5),
    (0.5, 1.0),
    (0.5, 3.0),
];

/// `2 psi / rho^2` at `(rho, z0)`, which tends to `(1/rho) dpsi/drho` on the axis.
fn psi_quotient(
    s: &SeriesSolution,
    rho: f64,
    z0: f64,
    scale: f64,
) -> std::result::Result<f64, String> {
    let q = s
        .frame()
        .to_bipolar(AxisymPoint::new(rho, z0).map_err(num)?)
        .map_err(num)?;
    Ok(2.0 * s.stream_psi_with(q, scale).map_err(num)? / (rho * rho))
}

fn psi_axis_oracle(model: &DragModel, fault: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &(h, behind) in &ORACLE_POINTS {
        let s = solve(model, h)?;
        let z0 = 2.0 + h + behind;
        let rho = 1e-3;
        let coarse = psi_quotient(&s, rho, z0, fault.gegenbauer())?;
        let fine = psi_quotient(&s, 0.5 * rho, z0, fault.gegenbauer())?;
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let direct = s.axis_velocity_uz(z0).map_err(num)?;
        worst = worst.max(rel(extrapolated, direct));
    }
    ensure(worst < 1e-6, || {
        format!("stream-function derivative off by {worst:e} relative")
    })?;
    Ok(format!(
        "max relative difference {worst:.2e} at 10 axis points"
    ))
}

fn kappa_pass_limits(model: &DragModel, _: Fault) -> CheckResult {
    let bc = BoundaryCondition::NoSlip;
    let mut prev = f64::INFINITY;
    let mut prev_hk = 0.0;
    let mut contact = f64::NAN;
    for k in 0..=24 {
        let h = 10f64.powf(-4.0 + k as f64 / 4.0);
        let kappa = model.kappa_pass(h, bc).map_err(num)?;
        ensure(kappa < prev, || {
            format!("kappa_pass not decreasing at h = {h}")
        })?;
        prev = kappa;
        if h <= 1.0 {
            // h kappa rises from its contact value 3pi/2
            ensure(h * kappa > prev_hk, || {
                format!("h kappa_pass not increasing at h = {h}")
            })?;
            prev_hk = h * kappa;
        }
        if k == 0 {
            contact = h * kappa / (1.5 * PI);
        }
    }
    let far = prev / (6.0 * PI);
    ensure((far - 1.0).abs() < 0.02, || {
        format!("kappa_pass(100)/6pi = {far}")
    })?;
    ensure((contact - 1.0).abs() < 0.01, || {
        format!("h kappa_pass / (3pi/2) = {contact} at h = 1e-4")
    })?;
    Ok(format!(
        "monotone on [1e-4, 100], kappa(100)/6pi = {far:.5}, h kappa/(3pi/2) = {contact:.5} at 1e-4"
    ))
}

fn swim_w_consistency(model: &DragModel, _: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    let f_p = 1.7;
    for &h in &CHAIN_GAPS {
        for &lambda in &CHAIN_LAMBDAS {
            let kp = model
                .kappa_prop(h, lambda, BoundaryCondition::NoSlip)
                .map_err(num)?;
            let ka = model
                .kappa_pass(h, BoundaryCondition::NoSlip)
                .map_err(num)?;
            let w = swim_contribution_w(h, lambda, f_p, model.truncation()).map_err(num)?;
            worst = worst.max(rel(-f_p * kp / ka, w));
        }
    }
    ensure(worst < 1e-8, || format!("W routes differ by {worst:e}"))?;
    Ok(format!("max relative difference {worst:.2e}"))
}

fn truncation_robustness(model: &DragModel, _: Fault) -> CheckResult {
    let tol = model.truncation().tail_tol;
    let mut worst: f64 = 0.0;
    for &h in &CHAIN_GAPS {
        let base = solve(model, h)?;
        let doubled = SeriesTruncation::new(2 * base.n_modes(), tol).map_err(num)?;
        let wide = SeriesSolution::new(*base.frame(), 1.0, doubled).map_err(num)?;
        worst = worst.max(rel(wide.drag_force(), base.drag_force()));
        for &lambda in &CHAIN_LAMBDAS {
            let z0 = flagellum_tip(h, lambda);
            worst = worst.max(rel(
                wide.axis_velocity_uz(z0).map_err(num)?,
                base.axis_velocity_uz(z0).map_err(num)?,
            ));
        }
    }
    ensure(worst < tol, || {
        format!("doubling n_max moves a scalar by {worst:e} > {tol:e}")
    })?;
    Ok(format!("max relative change {worst:.2e}"))
}

fn stokeslet_divergence(_: &DragModel, _: Fault) -> CheckResult {
    let pair = StokesletPair::new(1.0, 1.0, 0.5).map_err(num)?;
    let triple = StokesletPair::new(3.0, 1.0, 0.5).map_err(num)?;
    let step = 1e-5;
    let mut worst_div: f64 = 0.0;
    let mut worst_lin: f64 = 0.0;
    for i in 0..20 {
        let t = i as f64;
        let x = Vector3::new(0.3 + 0.1 * t, (0.7 * t).sin(), -4.0 + 0.4 * t);
        let mut div = 0.0;
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = step;
            let up = pair.ambient_field(&(x + e)).map_err(num)?;
            let down = pair.ambient_field(&(x - e)).map_err(num)?;
            div += (up[k] - down[k]) / (2.0 * step);
        }
        worst_div = worst_div.max(div.abs());
        let u = pair.ambient_field(&x).map_err(num)?;
        let u3 = triple.ambient_field(&x).map_err(num)?;
        worst_lin = worst_lin.max((u3 - 3.0 * u).norm() / u.norm());
    }
    ensure(worst_div < 1e-6, || format!("divergence {worst_div:e}"))?;
    ensure(worst_lin < 1e-14, || {
        format!("linearity error {worst_lin:e}")
    })?;
    Ok(format!(
        "max |div u| = {worst_div:.2e}, linearity {worst_lin:.2e}"
    ))
}

fn navier_log_bounds(model: &DragModel, _: Fault) -> CheckResult {
    let beta = 0.1;
    let bc = BoundaryCondition::navier(beta).map_err(num)?;
    let limit = beta * model.navier_log_slope(beta).map_err(num)?;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..=20 {
        let h = beta / 10.0 * 10f64.powf(-0.5 * k as f64);
        let r = model.kappa_pass(h, bc).map_err(num)? * beta / (1.0 / h).ln();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    ensure(lo > 0.5 * limit && hi < 2.0 * limit, || {
        format!("kappa beta / ln(1/h) in [{lo}, {hi}], limit {limit}")
    })?;
    Ok(format!(
        "kappa beta / ln(1/h) in [{lo:.4}, {hi:.4}] on h <= beta/10"
    ))
}

fn regime_continuity(model: &DragModel, _: Fault) -> CheckResult {
    let tiny = BoundaryCondition::navier(1e-8).map_err(num)?;
    let mut worst: f64 = 0.0;
    for k in 0..=10 {
        let h = 10f64.powf(-3.0 + 0.5 * k as f64);
        let a = model
            .kappa_pass(h, BoundaryCondition::NoSlip)
            .map_err(num)?;
        let b = model.kappa_pass(h, tiny).map_err(num)?;
        worst = worst.max(rel(b, a));
    }
    let beta = 0.1;
    let bc = BoundaryCondition::navier(beta).map_err(num)?;
    let below = model.kappa_pass(beta * (1.0 - 1e-12), bc).map_err(num)?;
    let at = model.kappa_pass(beta, bc).map_err(num)?;
    let jump = rel(below, at);
    ensure(worst < 1e-8, || {
        format!("small-slip limit differs by {worst:e}")
    })?;
    ensure(jump < 1e-9, || {
        format!("Navier law jumps by {jump:e} at h = beta")
    })?;
    Ok(format!(
        "slip -> 0 difference {worst:.2e}, jump at beta {jump:.2e}"
    ))
}

fn provenance(model: &DragModel, _: Fault) -> CheckResult {
    let nav = BoundaryCondition::navier(0.1).map_err(num)?;
    let cases = [
        (0.5, BoundaryCondition::NoSlip, Provenance::ExactSeries),
        (1e-5, BoundaryCondition::NoSlip, Provenance::ExactSeries),
        (
            0.5 * KAPPA_PROP_MIN_GAP,
            BoundaryCondition::NoSlip,
            Provenance::AsymptoticModel,
        ),
        (0.5, nav, Provenance::AsymptoticModel),
        (0.01, nav, Provenance::AsymptoticModel),
    ];
    for (h, bc, expected) in cases {
        let c = model.coefficients(h, 1.0, bc).map_err(num)?;
        ensure(c.provenance == expected, || {
            format!(
                "h = {h}, {bc}: got {:?}, expected {expected:?}",
                c.provenance
            )
        })?;
    }
    let (_, pass_prov) = model.kappa_pass_with_provenance(0.5, nav).map_err(num)?;
    ensure(pass_prov == Provenance::ExactSeries, || {
        "Navier drag above beta is not series".into()
    })?;
    let (_, pass_prov) = model.kappa_pass_with_provenance(0.05, nav).map_err(num)?;
    ensure(pass_prov == Provenance::AsymptoticModel, || {
        "Navier drag below beta is not the log law".into()
    })?;
    Ok(format!("{} cases", cases.len() + 2))
}

fn cache_transparency(model: &DragModel, _: Fault) -> CheckResult {
    for &h in &[0.003, 0.07, 1.3] {
        let cached = model
            .kappa_prop(h, 0.8, BoundaryCondition::NoSlip)
            .map_err(num)?;
        let again = model
            .kappa_prop(h, 0.8, BoundaryCondition::NoSlip)
            .map_err(num)?;
        let fresh = solve(model, h)?
            .axis_velocity_uz(flagellum_tip(h, 0.8))
            .map_err(num)?;
        ensure(cached == fresh && again == fresh, || {
            format!("cache differs at h = {h}")
        })?;
        let pass = model
            .kappa_pass(h, BoundaryCondition::NoSlip)
            .map_err(num)?;
        ensure(pass == solve(model, h)?.drag_force(), || {
            format!("drag cache differs at h = {h}")
        })?;
    }
    Ok("cached values are bit-identical".into())
}

/// Ten `(h, lambda)` points shared by the decomposition check.
pub const DECOMPOSITION_POINTS: [(f64, f64); 10] = [
    (0.001, 1.0),
    (0.01, 0.1),
    (0.01, 1.0),
    (0.05, 2.0),
    (0.1, 0.5),
    (0.3, 1.0),
    (0.5, 0.05),
    (1.0, 1.0),
    (2.0, 3.0),
    (5.0, 0.7),
];

/// Largest relative gap between `-h'` from the force balance and `V + W`.
pub fn decomposition_residual(model: &DragModel, f_p: f64) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for &(h, lambda) in &DECOMPOSITION_POINTS {
        let sc = SwimmerScenario::active(h, 0.0, f_p, lambda, BoundaryCondition::NoSlip);
        let (hdot, _) = sc.rhs(model, h, 0.0)?;
        let v = f_p / model.kappa_pass(h, BoundaryCondition::NoSlip)?;
        let w = swim_contribution_w(h, lambda, f_p, model.truncation())?;
        worst = worst.max(rel(v + w, -hdot));
    }
    Ok(worst)
}

fn decomposition(model: &DragModel, _: Fault) -> CheckResult {
    let worst = decomposition_residual(model, 1.0).map_err(num)?;
    ensure(worst < 1e-8, || {
        format!("V + W differs from -h' by {worst:e}")
    })?;
    Ok(format!("max relative difference {worst:.2e} at 10 points"))
}

fn drag_decelerates(model: &DragModel, _: Fault) -> CheckResult {
    let opts = IntegratorOptions::default();
    let sc = SwimmerScenario::active(0.5, 2.0, 0.0, 1.0, BoundaryCondition::NoSlip).with_speed(0.3);
    let traj = simulate(model, &sc, 5.0, 1e-7, &opts).map_err(num)?;
    for w in traj.points.windows(2) {
        ensure(
            w[1].hdot.abs() <= w[0].hdot.abs() + 10.0 * opts.atol,
            || format!("speed grows at t = {}", w[1].t),
        )?;
    }
    Ok(format!(
        "speed non-increasing over {} points",
        traj.points.len()
    ))
}

fn navier_massless(beta: f64, h0: f64) -> std::result::Result<SwimmerScenario, String> {
    let bc = BoundaryCondition::navier(beta).map_err(num)?;
    Ok(SwimmerScenario::active(h0, 0.0, 1.0, 1.0, bc))
}

fn determinism(model: &DragModel, _: Fault) -> CheckResult {
    let sc = navier_massless(0.1, 0.5)?;
    let opts = IntegratorOptions::default();
    let a = simulate(model, &sc, 1e4, 1e-9, &opts).map_err(num)?;
    let b = simulate(&DragModel::new(model.truncation()), &sc, 1e4, 1e-9, &opts).map_err(num)?;
    ensure(a == b, || "repeated runs differ".into())?;
    Ok(format!("{} points identical", a.points.len()))
}

fn event_localization(model: &DragModel, _: Fault) -> CheckResult {
    let sc = navier_massless(0.1, 0.5)?;
    let traj = simulate(model, &sc, 1e4, 1e-9, &IntegratorOptions::default()).map_err(num)?;
    ensure(traj.termination.collision_time().is_some(), || {
        "no collision".into()
    })?;
    let miss = (traj.last().h - 1e-9).abs();
    ensure(miss < 1e-10, || format!("|h(T) - h_floor| = {miss:e}"))?;
    Ok(format!("|h(T) - h_floor| = {miss:.2e}"))
}

fn refinement(model: &DragModel, _: Fault) -> CheckResult {
    let sc = navier_massless(0.1, 0.5)?;
    let opts = IntegratorOptions::default();
    let coarse = simulate(model, &sc, 1e4, 1e-9, &opts).map_err(num)?;
    let fine = simulate(model, &sc, 1e4, 1e-10, &opts.refined(10.0)).map_err(num)?;
    let (a, b) = match (coarse.termination, fine.termination) {
        (Termination::Collision(a), Termination::Collision(b)) => (a, b),
        other => return Err(format!("terminations {other:?}")),
    };
    let change = rel(b, a);
    ensure(change < 1e-3, || format!("T_coll moves by {change:e}"))?;
    Ok(format!(
        "T_coll {a:.10} -> {b:.10}, relative change {change:.2e}"
    ))
}

fn noslip_lower_bound(model: &DragModel, _: Fault) -> CheckResult {
    let sc = SwimmerScenario::active(0.5, 0.0, 1.0, 1.0, BoundaryCondition::NoSlip);
    let traj = simulate(model, &sc, 200.0, 1e-7, &IntegratorOptions::default()).map_err(num)?;
    ensure(traj.termination == Termination::HorizonReached, || {
        format!("termination {:?}", traj.termination)
    })?;
    let fit = noslip_lower_bound_fit(&traj).map_err(num)?;
    ensure(fit.holds_on(&traj), || format!("bound {fit:?} violated"))?;
    Ok(format!(
        "min h {:.4e}, C1 = {:.6}, C2 = {:.6}",
        traj.min_h(),
        fit.c1,
        fit.c2
    ))
}

fn passive_noslip_bound(model: &DragModel, _: Fault) -> CheckResult {
    let f_ext = 1.0;
    let sc = SwimmerScenario::passive(0.5, 0.0, f_ext, BoundaryCondition::NoSlip);
    let traj = simulate(model, &sc, 60.0, 1e-7, &IntegratorOptions::default()).map_err(num)?;
    ensure(traj.termination == Termination::HorizonReached, || {
        format!("termination {:?}", traj.termination)
    })?;
    // h' / h = -f_ext / (h kappa) >= -f_ext / min(h kappa)
    let min_hk = traj
        .points
        .iter()
        .map(|p| p.h * p.kappa_pass)
        .fold(f64::INFINITY, f64::min);
    let c = 1.0 / min_hk;
    let h0 = sc.h0;
    for p in &traj.points[1..] {
        let bound = h0 * (-c * f_ext * p.t).exp();
        ensure(p.h > bound, || {
            format!("h({}) = {:e} below {bound:e}", p.t, p.h)
        })?;
    }
    Ok(format!(
        "h(t) > h0 exp(-{c:.5} f_ext t) on {} points",
        traj.points.len()
    ))
}

fn navier_collision(model: &DragModel, _: Fault) -> CheckResult {
    let bc = BoundaryCondition::navier(0.1).map_err(num)?;
    let sc = SwimmerScenario::active(0.5, 0.1, 1.0, 1.0, bc).with_speed(1.0);
    let traj = simulate(model, &sc, 1e4, 1e-9, &IntegratorOptions::default()).map_err(num)?;
    match traj.termination {
        Termination::Collision(t) if t.is_finite() => Ok(format!("T_coll = {t:.8}")),
        other => Err(format!("termination {other:?}")),
    }
}

fn quadrature_vs_event(model: &DragModel, _: Fault) -> CheckResult {
    let mut worst: f64 = 0.0;
    for (beta, h0) in [(0.1, 0.5), (0.05, 0.3), (0.2, 1.0)] {
        let sc = navier_massless(beta, h0)?;
        let q = collision_time_quadrature(model, &sc).map_err(num)?;
        let traj = simulate(model, &sc, 1e5, 1e-9, &IntegratorOptions::default()).map_err(num)?;
        let t = traj
            .termination
            .collision_time()
            .ok_or_else(|| format!("no collision for beta = {beta}"))?;
        worst = worst.max(rel(q.t_coll, t));
    }
    ensure(worst < 0.02, || {
        format!("quadrature and event differ by {worst:e}")
    })?;
    Ok(format!("max relative difference {worst:.2e}"))
}

fn noslip_divergence(model: &DragModel, _: Fault) -> CheckResult {
    let sc = SwimmerScenario::active(0.5, 0.0, 1.0, 1.0, BoundaryCondition::NoSlip);
    match collision_time_quadrature(model, &sc) {
        Err(Error::Divergence(msg)) => Ok(msg),
        other => Err(format!("expected divergence, got {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: &str) -> bool {
        matches!(
            name,
            "dual-formula" | "psi-axis-oracle" | "legendre-rodrigues"
        )
    }

    #[test]
    fn clean_quick_checks_pass() {
        let report = run_selected(&DragModel::default(), Fault::None, quick);
        assert_eq!(report.checks.len(), 3);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn faults_are_detected() {
        let model = DragModel::default();
        let r = run_selected(&model, Fault::GmScale(1.01), quick);
        assert!(!r.get("dual-formula").unwrap().passed);
        assert!(r.get("psi-axis-oracle").unwrap().passed);
        let r = run_selected(&model, Fault::GegenbauerScale(1.01), quick);
        assert!(r.get("dual-formula").unwrap().passed);
        assert!(!r.get("psi-axis-oracle").unwrap().passed);
    }

    #[test]
    fn names_unique() {
        let mut names: Vec<_> = check_names().collect();
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
