//! Exact series solution for two no-slip unit spheres approaching each other
//! along their line of centers.
//!
//! The upper sphere (`zeta = alpha`) moves with velocity `-W e_z` and its mirror
//! image moves with `+W e_z`, so `W > 0` means the spheres approach each other
//! with speed `W`. The stream function is
//!
//! ```text
//! psi = (cosh zeta - cos eta)^(-3/2) Σ_{n>=1} U_n(zeta) C_{n+1}^{-1/2}(cos eta)
//! U_n(zeta) = b_n sinh((n - 1/2) zeta) + d_n sinh((n + 3/2) zeta)
//! ```
//!
//! with `u_z = -(1/rho) dpsi/drho` and `u_rho = (1/rho) dpsi/dz`. The flow is odd in
//! `z`, which is why both radial functions are sinh. Coefficient formulas are
//! rearranged so that no quantity overflows for large `(2n+1) alpha` and no
//! leading-order cancellation occurs for small `alpha`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{legendre_dp, AxisymPoint, BipolarFrame, BipolarPoint};

/// Hard cap on retained modes.
pub const MAX_MODES: usize = 1 << 17;

/// Smallest half-gap the series is asked to resolve.
pub const MIN_SERIES_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTruncation {
    /// Initial number of retained modes; doubled until the tail test passes.
    pub n_max: usize,
    /// Relative tail bound on `Σ |U_n(alpha)|`.
    pub tail_tol: f64,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        Self {
            n_max: 20,
            tail_tol: 1e-10,
        }
    }
}

impl SeriesTruncation {
    pub fn new(n_max: usize, tail_tol: f64) -> Result<Self> {
        let t = Self { n_max, tail_tol };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::Domain("n_max must be >= 1".into()));
        }
        ensure_positive("tail_tol", self.tail_tol)?;
        Ok(())
    }
}

/// Which normalization of `G_m` satisfies the nonpenetration relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GmNormalization {
    /// `b_n = W G_m - d_n sinh((m+1)α)/sinh((m-1)α)`
    WScaled,
    /// `b_n = G_m - d_n sinh((m+1)α)/sinh((m-1)α)`
    Unscaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonpenetrationReport {
    /// Relative residual per mode for the W-scaled variant, index 0 is `n = 1`.
    pub w_scaled: Vec<f64>,
    pub unscaled: Vec<f64>,
    pub max_w_scaled: f64,
    pub max_unscaled: f64,
    pub winner: GmNormalization,
}

impl NonpenetrationReport {
    pub fn winning_residual(&self) -> f64 {
        match self.winner {
            GmNormalization::WScaled => self.max_w_scaled,
            GmNormalization::Unscaled => self.max_unscaled,
        }
    }
}

/// Truncated coefficient arrays for the approach flow.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    frame: BipolarFrame,
    w_bc: f64,
    b: Vec<f64>,
    d: Vec<f64>,
    truncation: SeriesTruncation,
    tail: f64,
}

/// Per-frame constants shared by every mode.
struct ModeConsts {
    alpha: f64,
    c: f64,
    sinh_a: f64,
    cosh_a: f64,
    sinh_2a: f64,
}

impl ModeConsts {
    fn new(frame: &BipolarFrame) -> Self {
        let alpha = frame.alpha();
        Self {
            alpha,
            c: frame.c(),
            sinh_a: alpha.sinh(),
            cosh_a: alpha.cosh(),
            sinh_2a: (2.0 * alpha).sinh(),
        }
    }

    /// `2 sinh((2n+1)α) - (2n+1) sinh(2α)`, scaled by `e^{-(2n+1)α}`.
    fn scaled_denominator(&self, n: usize) -> f64 {
        let alpha = self.alpha;
        let k = (2 * n + 1) as f64;
        let x = k * alpha;
        let e = (-x).exp();
        if x < 1.0 {
            // odd Taylor terms of 2 sinh(kα) - k sinh(2α); the linear terms cancel
            let mut sum = 0.0;
            let mut tx = x; // x^j / j!
            let mut t2 = 2.0 * alpha; // (2α)^j / j!
            let mut j = 1.0;
            loop {
                tx *= x * x / ((j + 1.0) * (j + 2.0));
                t2 *= 4.0 * alpha * alpha / ((j + 1.0) * (j + 2.0));
                j += 2.0;
                let term = 2.0 * tx - k * t2;
                sum += term;
                if term.abs() <= 1e-18 * sum.abs() {
                    break;
                }
            }
            sum * e
        } else {
            1.0 - e * e - k * self.sinh_2a * e
        }
    }

    /// `(b_n, d_n)` for unit boundary speed.
    fn unit_coefficients(&self, n: usize) -> (f64, f64) {
        let c = self.c;
        let nf = n as f64;
        let k = 2.0 * nf + 1.0;
        let e = (-k * self.alpha).exp();
        let den = self.scaled_denominator(n);
        let sh2a = 2.0 * c * self.cosh_a;
        let pre = c * c * nf * (nf + 1.0) / SQRT_2;
        let b = pre / (2.0 * nf - 1.0) * e * (2.0 + 2.0 * e + k * (2.0 * c * c + sh2a)) / den;
        let d = pre / (2.0 * nf + 3.0) * e * (-2.0 - 2.0 * e + k * (2.0 * c * c - sh2a)) / den;
        (b, d)
    }

    /// `|U_n(alpha)|` per unit boundary speed, in closed form from the surface data.
    fn boundary_mode(&self, n: usize) -> f64 {
        self.boundary_mode_with(n, (-(n as f64 + 0.5) * self.alpha).exp())
    }

    /// As [`Self::boundary_mode`] with `e^{-(n+1/2)α}` supplied.
    fn boundary_mode_with(&self, n: usize, decay: f64) -> f64 {
        let c = self.c;
        let m = n as f64 + 0.5;
        c * c / (2.0 * SQRT_2) * (m * m - 0.25) / (m * m - 1.0)
            * 2.0
            * decay
            * (m * self.sinh_a + self.cosh_a)
    }

    /// Geometric upper bound of the relative tail beyond `n_max` modes, given
    /// the partial sum of the first `n_max` boundary modes.
    fn relative_tail(&self, n_max: usize, partial: f64) -> f64 {
        let g1 = self.boundary_mode(n_max + 1);
        let g2 = self.boundary_mode(n_max + 2);
        if g1 == 0.0 {
            return 0.0;
        }
        let q = g2 / g1;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        g1 / (1.0 - q) / partial
    }
}

#[cfg(test)]
fn unit_coefficients(frame: &BipolarFrame, n: usize) -> (f64, f64) {
    ModeConsts::new(frame).unit_coefficients(n)
}

#[cfg(test)]
fn boundary_mode(frame: &BipolarFrame, n: usize) -> f64 {
    ModeConsts::new(frame).boundary_mode(n)
}

/// `sinh((m+1)α) / sinh((m-1)α)` without overflow.
fn sinh_ratio(m: f64, alpha: f64) -> f64 {
    let a = -2.0 * (m + 1.0) * alpha;
    let b = -2.0 * (m - 1.0) * alpha;
    (2.0 * alpha).exp() * a.exp_m1() / b.exp_m1()
}

/// `sinh(a) * sinh(b)` computed as `e^{a+b}`-scaled when both are large.
fn sinh_times(coef: f64, arg: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else if arg < 20.0 {
        coef * arg.sinh()
    } else {
        let sign = coef.signum();
        sign * (coef.abs().ln() + arg - std::f64::consts::LN_2).exp() * (-(-2.0 * arg).exp_m1())
    }
}

/// `G_m`, `m = n + 1/2`, as printed (no factor of the boundary speed).
pub fn g_m(frame: &BipolarFrame, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("G_m needs n >= 1".into()));
    }
    let alpha = frame.alpha();
    let c = frame.c();
    let m = n as f64 + 0.5;
    // [(m+1)e^{-(m-1)α} - (m-1)e^{-(m+1)α}] / sinh((m-1)α)
    //   = 2 e^{-mα}(m sinh α + cosh α) / sinh((m-1)α)
    let bracket = 4.0 * (-(2.0 * m - 1.0) * alpha).exp() * (m * alpha.sinh() + alpha.cosh())
        / -(-2.0 * (m - 1.0) * alpha).exp_m1();
    Ok(c * c / (2.0 * SQRT_2) * (m * m - 0.25) / (m * m - 1.0) * bracket)
}

/// `f(ξ) = sinh((m+1)ξ) sinh((m-1)α) - sinh((m-1)ξ) sinh((m+1)α)`; vanishes at 0 and α.
pub fn positivity_bracket(m: f64, xi: f64, alpha: f64) -> f64 {
    ((m + 1.0) * xi).sinh() * ((m - 1.0) * alpha).sinh()
        - ((m - 1.0) * xi).sinh() * ((m + 1.0) * alpha).sinh()
}

impl SeriesSolution {
    /// Coefficients for boundary speed `w_bc`, with the mode count grown until
    /// the relative tail of `Σ |U_n(alpha)|` is below `trunc.tail_tol`.
    pub fn new(frame: BipolarFrame, w_bc: f64, trunc: SeriesTruncation) -> Result<Self> {
        trunc.validate()?;
        if !w_bc.is_finite() {
            return Err(Error::Domain(format!(
                "boundary speed must be finite, got {w_bc}"
            )));
        }
        if frame.h() < MIN_SERIES_GAP {
            return Err(Error::Domain(format!(
                "h = {:e} below the series range {MIN_SERIES_GAP:e}",
                frame.h()
            )));
        }
        let consts = ModeConsts::new(&frame);
        let mut n_max = trunc.n_max.min(MAX_MODES);
        let mut partial = 0.0;
        let mut summed = 0;
        // e^{-(n+1/2)α} by recurrence, reseeded every 64 modes to bound rounding drift
        let step = (-consts.alpha).exp();
        let mut decay = 1.0;
        let tail = loop {
            while summed < n_max {
                summed += 1;
                decay = if summed % 64 == 1 {
                    (-(summed as f64 + 0.5) * consts.alpha).exp()
                } else {
                    decay * step
                };
                partial += consts.boundary_mode_with(summed, decay);
            }
            let tail = consts.relative_tail(n_max, partial);
            if tail < trunc.tail_tol {
                break tail;
            }
            if n_max >= MAX_MODES {
                return Err(Error::Truncation {
                    modes: n_max,
                    achieved: tail,
                    requested: trunc.tail_tol,
                });
            }
            n_max = (2 * n_max).min(MAX_MODES);
        };
        // modes whose boundary value underflows carry nothing
        while n_max > 1 && consts.boundary_mode(n_max) == 0.0 {
            n_max -= 1;
        }
        let (b, d) = (1..=n_max)
            .map(|n| {
                let (b, d) = consts.unit_coefficients(n);
                (w_bc * b, w_bc * d)
            })
            .unzip();
        Ok(Self {
            frame,
            w_bc,
            b,
            d,
            truncation: SeriesTruncation {
                n_max,
                tail_tol: trunc.tail_tol,
            },
            tail,
        })
    }

    pub fn frame(&self) -> &BipolarFrame {
        &self.frame
    }

    pub fn w_bc(&self) -> f64 {
        self.w_bc
    }

    /// `b_n`, index 0 is `n = 1`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `d_n`, index 0 is `n = 1`.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Truncation actually used (`n_max` is the retained mode count).
    pub fn truncation(&self) -> SeriesTruncation {
        self.truncation
    }

    pub fn n_modes(&self) -> usize {
        self.b.len()
    }

    /// Relative tail bound achieved at the retained mode count.
    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    fn check_mode(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.n_modes() {
            Err(Error::Domain(format!(
                "mode {n} outside retained range 1..={}",
                self.n_modes()
            )))
        } else {
            Ok(())
        }
    }

    fn check_xi(&self, xi: f64) -> Result<()> {
        if xi > 0.0 && xi <= self.frame.alpha() * (1.0 + 1e-15) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "xi = {xi} outside (0, alpha = {}]",
                self.frame.alpha()
            )))
        }
    }

    /// `U_n(ξ) = b_n sinh((n-1/2)ξ) + d_n sinh((n+3/2)ξ)`.
    pub fn u_n(&self, n: usize, xi: f64) -> Result<f64> {
        self.check_mode(n)?;
        self.check_xi(xi)?;
        Ok(self.u_n_unchecked(n, xi))
    }

    fn u_n_unchecked(&self, n: usize, xi: f64) -> f64 {
        let m = n as f64 + 0.5;
        sinh_times(self.b[n - 1], (m - 1.0) * xi) + sinh_times(self.d[n - 1], (m + 1.0) * xi)
    }

    /// `U_n(ξ)` through the nonpenetration form
    /// `[W G_m + d_n (sinh((m+1)ξ)/sinh((m-1)ξ) - sinh((m+1)α)/sinh((m-1)α))] sinh((m-1)ξ)`.
    pub fn u_n_gm_form(&self, n: usize, xi: f64) -> Result<f64> {
        self.u_n_gm_form_scaled(n, xi, 1.0)
    }

    /// As [`Self::u_n_gm_form`] with `G_m` multiplied by `gm_scale` (fault injection).
    pub fn u_n_gm_form_scaled(&self, n: usize, xi: f64, gm_scale: f64) -> Result<f64> {
        self.check_mode(n)?;
        self.check_xi(xi)?;
        let alpha = self.frame.alpha();
        let m = n as f64 + 0.5;
        let gm = gm_scale * self.w_bc * g_m(&self.frame, n)?;
        let bracket = sinh_ratio_at(m, xi) - sinh_ratio(m, alpha);
        Ok((gm + self.d[n - 1] * bracket) * ((m - 1.0) * xi).sinh())
    }

    /// Residuals of the nonpenetration relation for both `G_m` normalizations.
    pub fn check_nonpenetration(&self) -> NonpenetrationReport {
        let alpha = self.frame.alpha();
        let mut w_scaled = Vec::with_capacity(self.n_modes());
        let mut unscaled = Vec::with_capacity(self.n_modes());
        for n in 1..=self.n_modes() {
            let m = n as f64 + 0.5;
            let gm = g_m(&self.frame, n).expect("n >= 1");
            let ratio = sinh_ratio(m, alpha);
            let (b, d) = (self.b[n - 1], self.d[n - 1]);
            let scale = b.abs().max(f64::MIN_POSITIVE);
            let rw = (b - self.w_bc * gm + d * ratio).abs();
            let ru = (b - gm + d * ratio).abs();
            // W = 0 makes every coefficient vanish; report absolute residuals then
            if b == 0.0 {
                w_scaled.push(rw);
                unscaled.push(ru);
            } else {
                w_scaled.push(rw / scale);
                unscaled.push(ru / scale);
            }
        }
        let max_w_scaled = w_scaled.iter().copied().fold(0.0, f64::max);
        let max_unscaled = unscaled.iter().copied().fold(0.0, f64::max);
        let winner = if max_w_scaled <= max_unscaled {
            GmNormalization::WScaled
        } else {
            GmNormalization::Unscaled
        };
        NonpenetrationReport {
            w_scaled,
            unscaled,
            max_w_scaled,
            max_unscaled,
            winner,
        }
    }

    /// Stream function at a fluid point (`zeta <= alpha`).
    pub fn stream_psi(&self, q: BipolarPoint) -> Result<f64> {
        self.stream_psi_with(q, 1.0)
    }

    /// Stream function with the angular kernel multiplied by `kernel_scale`.
    /// Only fault-injection checks pass anything other than 1.
    pub fn stream_psi_with(&self, q: BipolarPoint, kernel_scale: f64) -> Result<f64> {
        let alpha = self.frame.alpha();
        if q.zeta > alpha * (1.0 + 1e-15) {
            return Err(Error::Domain(format!(
                "zeta = {} > alpha = {alpha}: point lies inside the sphere",
                q.zeta
            )));
        }
        if !(0.0..=PI).contains(&q.eta) || q.zeta < 0.0 {
            return Err(Error::Domain(format!("invalid bipolar point {q:?}")));
        }
        let den = q.zeta.cosh() - q.eta.cos();
        if den <= 0.0 {
            return Err(Error::Singularity("point at infinity".into()));
        }
        let kernel = gegenbauer_on_angle(self.n_modes(), q.eta);
        let sum: f64 = (1..=self.n_modes())
            .map(|n| self.u_n_unchecked(n, q.zeta) * kernel[n - 1])
            .sum();
        Ok(kernel_scale * sum / den.powf(1.5))
    }

    /// Stream function at cylindrical coordinates `(rho, z)`, `z >= 0`.
    pub fn stream_psi_at(&self, p: AxisymPoint) -> Result<f64> {
        self.stream_psi(self.frame.to_bipolar(p)?)
    }

    /// `Σ U_n(ζ₀)` at an on-axis point `z0` behind the upper sphere.
    pub fn axis_mode_sum(&self, z0: f64) -> Result<f64> {
        let zeta0 = self.axis_zeta_behind(z0)?;
        Ok(self.mode_sum(zeta0))
    }

    /// `Σ U_n(ξ)`. Mode `n` uses `sinh((n-1/2)ξ)` and `sinh((n+3/2)ξ)`, so each
    /// sine is shared with mode `n+2` while it is still cheap to tabulate.
    fn mode_sum(&self, xi: f64) -> f64 {
        let n_modes = self.n_modes();
        let mut sh = Vec::with_capacity(n_modes + 2);
        for j in 1..=n_modes + 2 {
            let arg = (j as f64 - 0.5) * xi;
            if arg >= 20.0 {
                break;
            }
            sh.push(arg.sinh());
        }
        (1..=n_modes)
            .map(|n| {
                if n + 2 <= sh.len() {
                    self.b[n - 1] * sh[n - 1] + self.d[n - 1] * sh[n + 1]
                } else {
                    self.u_n_unchecked(n, xi)
                }
            })
            .sum()
    }

    fn axis_zeta_behind(&self, z0: f64) -> Result<f64> {
        let rear = 2.0 + self.frame.h();
        if !(z0.is_finite() && z0 > rear) {
            return Err(Error::Domain(format!(
                "axis point z0 = {z0} is not behind the sphere (needs z0 > {rear})"
            )));
        }
        self.frame.axis_zeta(z0)
    }

    /// Axial fluid velocity on the line of centers at distance `z0` from the
    /// midplane behind one sphere, measured along that sphere's direction of
    /// travel. Equals `(1/rho) dpsi/drho` as `rho -> 0` at `(0, z0)`, i.e. the
    /// mirror image of `-u_z(0, 0, z0)`.
    ///
    /// Closed form: `sqrt(cosh ζ₀ - 1) / c² · Σ U_n(ζ₀)`, from
    /// `C_{n+1}^{-1/2}(cos η) ≈ η²/2` and `η ≈ rho (cosh ζ₀ - 1)/c` near the axis.
    pub fn axis_velocity_uz(&self, z0: f64) -> Result<f64> {
        let zeta0 = self.axis_zeta_behind(z0)?;
        let c = self.frame.c();
        let s = self.mode_sum(zeta0);
        let root = SQRT_2 * (0.5 * zeta0).sinh();
        Ok(root * s / (c * c))
    }

    /// Drag on each sphere opposing the approach, `(2√2 π / c) Σ (b_n + d_n)`.
    pub fn drag_force(&self) -> f64 {
        let s: f64 = self.b.iter().zip(&self.d).map(|(b, d)| b + d).sum();
        2.0 * SQRT_2 * PI / self.frame.c() * s
    }
}

fn sinh_ratio_at(m: f64, xi: f64) -> f64 {
    sinh_ratio(m, xi)
}

/// `C_{n+1}^{-1/2}(cos η)` for `n = 1..=n_max` via `sin²η P'_n(cos η) / (n(n+1))`,
/// which keeps full relative precision near the axis.
pub fn gegenbauer_on_angle(n_max: usize, eta: f64) -> Vec<f64> {
    let s2 = eta.sin().powi(2);
    let dp = legendre_dp(n_max, eta.cos()).expect("cos is in [-1, 1]");
    (1..=n_max)
        .map(|n| s2 * dp[n] / (n * (n + 1)) as f64)
        .collect()
}

/// Drag per sphere for unit approach speed; tends to `6π` far apart and to
/// `3π/(2h)` in contact.
pub fn kappa_pass_noslip(h: f64, trunc: SeriesTruncation) -> Result<f64> {
    let sol = SeriesSolution::new(BipolarFrame::from_gap(h)?, 1.0, trunc)?;
    Ok(sol.drag_force())
}

/// Flagellum tip position on the axis for half-gap `h` and flagellum length `lambda`.
pub fn flagellum_tip(h: f64, lambda: f64) -> f64 {
    2.0 + h + lambda
}

/// Drag on a held sphere per unit propulsion force, via the reciprocal theorem:
/// the normalized axial velocity of the unit approach flow at the flagellum tip.
pub fn kappa_prop_noslip(h: f64, lambda: f64, trunc: SeriesTruncation) -> Result<f64> {
    let lambda = ensure_positive("flagellum length lambda", lambda)?;
    let sol = SeriesSolution::new(BipolarFrame::from_gap(h)?, 1.0, trunc)?;
    sol.axis_velocity_uz(flagellum_tip(h, lambda))
}

/// Approach speed contributed by the propulsion singularities with the spheres
/// force-free: `W = -f_p u_z(x_p) / F_drag(u)` for any translation flow `u`.
pub fn swim_contribution_w(h: f64, lambda: f64, f_p: f64, trunc: SeriesTruncation) -> Result<f64> {
    let lambda = ensure_positive("flagellum length lambda", lambda)?;
    let f_p = ensure_positive("propulsion f_p", f_p)?;
    // boundary speed is arbitrary; the ratio is homogeneous of degree zero in it
    let sol = SeriesSolution::new(BipolarFrame::from_gap(h)?, 2.5, trunc)?;
    let uz = sol.axis_velocity_uz(flagellum_tip(h, lambda))?;
    Ok(-f_p * uz / sol.drag_force())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol(h: f64) -> SeriesSolution {
        SeriesSolution::new(
            BipolarFrame::from_gap(h).unwrap(),
            1.0,
            SeriesTruncation::default(),
        )
        .unwrap()
    }

    /// b_n, d_n exactly as printed, evaluated naively.
    fn printed(frame: &BipolarFrame, w: f64, n: usize) -> (f64, f64) {
        let a = frame.alpha();
        let nf = n as f64;
        let m = nf + 0.5;
        let s2 = a.sinh().powi(2);
        let den = 2.0 * ((2.0 * nf + 1.0) * a).sinh() - (2.0 * nf + 1.0) * (2.0 * a).sinh();
        let c2 = (m * a).cosh().powi(2);
        let pre = w * s2 * nf * (nf + 1.0) / SQRT_2;
        let b = pre / (2.0 * nf - 1.0) * ((4.0 * c2 + 2.0 * (2.0 * nf + 1.0) * s2) / den - 1.0);
        let d = pre / (2.0 * nf + 3.0) * (1.0 - (4.0 * c2 - 2.0 * (2.0 * nf + 1.0) * s2) / den);
        (b, d)
    }

    #[test]
    fn stable_coefficients_match_printed_form() {
        for &h in &[0.05, 0.5, 2.0] {
            let s = sol(h);
            for n in (1..=12).filter(|&n| ((2 * n + 1) as f64) * s.frame().alpha() < 25.0) {
                let (b, d) = printed(s.frame(), 1.0, n);
                // the printed form loses ~e^{(2n+1)α} ulps to cancellation
                let tol = 1e-14 * ((2 * n + 1) as f64 * s.frame().alpha()).exp() + 1e-13;
                assert!((s.b()[n - 1] - b).abs() < tol * b.abs(), "h={h} n={n}");
                assert!(
                    (s.d()[n - 1] - d).abs() < tol * d.abs(),
                    "h={h} n={n} {} {d}",
                    s.d()[n - 1]
                );
            }
        }
    }

    #[test]
    fn coefficients_reference_values() {
        // 2x2 boundary solve in 30-digit arithmetic (mpmath), h = 0.5, W = 1
        let s = sol(0.5);
        let expected = [
            (4.443849879507233, -0.21113904872250827),
            (0.5207234589975899, -0.04484326850826902),
            (0.1112563128348135, -0.011477221801108332),
            (0.024027608959737816, -0.0027085124948488877),
            (0.004944096790190035, -0.0005874494615946715),
        ];
        for (i, (b, d)) in expected.iter().enumerate() {
            assert!((s.b()[i] - b).abs() < 1e-13 * b.abs());
            assert!((s.d()[i] - d).abs() < 1e-13 * d.abs());
        }
    }

    #[test]
    fn zero_and_linear_in_w() {
        let f = BipolarFrame::from_gap(0.3).unwrap();
        let t = SeriesTruncation::default();
        let zero = SeriesSolution::new(f, 0.0, t).unwrap();
        assert!(zero.b().iter().chain(zero.d()).all(|&v| v == 0.0));
        let one = SeriesSolution::new(f, 1.0, t).unwrap();
        let two = SeriesSolution::new(f, 2.0, t).unwrap();
        for i in 0..one.n_modes() {
            assert_eq!(two.b()[i], 2.0 * one.b()[i]);
            assert_eq!(two.d()[i], 2.0 * one.d()[i]);
        }
    }

    #[test]
    fn self_convergence_of_boundary_sum() {
        let f = BipolarFrame::from_gap(0.5).unwrap();
        let t40 = SeriesTruncation::new(40, 1e-30).unwrap();
        // the tail rule would grow n_max; compare fixed partial sums instead
        let partial = |n: usize| -> f64 {
            (1..=n)
                .map(|k| {
                    let (b, d) = unit_coefficients(&f, k);
                    let m = k as f64 + 0.5;
                    b * ((m - 1.0) * f.alpha()).sinh() + d * ((m + 1.0) * f.alpha()).sinh()
                })
                .sum()
        };
        let s40 = partial(40);
        let s60 = partial(60);
        assert!(((s40 - s60) / s60).abs() < 1e-12);
        assert!(t40.validate().is_ok());
    }

    #[test]
    fn truncation_errors() {
        assert!(SeriesTruncation::new(0, 1e-10).is_err());
        assert!(SeriesTruncation::new(10, 0.0).is_err());
        let f = BipolarFrame::from_gap(1e-7).unwrap();
        let t = SeriesTruncation::new(20, 1e-300).unwrap();
        match SeriesSolution::new(f, 1.0, t) {
            Err(Error::Truncation {
                modes, achieved, ..
            }) => {
                assert_eq!(modes, MAX_MODES);
                assert!(achieved > 1e-300);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        let tiny = BipolarFrame::from_gap(1e-9).unwrap();
        assert!(matches!(
            SeriesSolution::new(tiny, 1.0, SeriesTruncation::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn boundary_mode_is_u_n_at_alpha() {
        let s = sol(0.2);
        for n in 1..=15 {
            let u = s.u_n(n, s.frame().alpha()).unwrap();
            let g = boundary_mode(s.frame(), n);
            assert!((u - g).abs() < 1e-10 * g, "n={n}: {u} vs {g}");
        }
    }

    #[test]
    fn g_m_positive_and_identity() {
        for &h in &[0.01, 0.1, 1.0] {
            let f = BipolarFrame::from_gap(h).unwrap();
            let a = f.alpha();
            for &n in &[1usize, 5, 20] {
                assert!(g_m(&f, n).unwrap() > 0.0);
                let m = n as f64 + 0.5;
                let lhs = (m + 1.0) * (-(m - 1.0) * a).exp() - (m - 1.0) * (-(m + 1.0) * a).exp();
                let rhs = 2.0 * (-m * a).exp() * (m * a.sinh() + a.cosh());
                assert!(((lhs - rhs) / rhs).abs() < 1e-12);
            }
        }
        let f = BipolarFrame::from_gap(0.1).unwrap();
        assert!(g_m(&f, 0).is_err());
    }

    #[test]
    fn g_m_decays() {
        let f = BipolarFrame::from_gap(0.1).unwrap();
        let mut prev = g_m(&f, 10).unwrap();
        for n in 11..=100 {
            let g = g_m(&f, n).unwrap();
            assert!(g < prev);
            prev = g;
        }
        assert!(prev < 1e-10 * g_m(&f, 10).unwrap());
    }

    #[test]
    fn nonpenetration_variants() {
        let f = BipolarFrame::from_gap(0.5).unwrap();
        let t = SeriesTruncation::new(30, 1e-10).unwrap();
        let one = SeriesSolution::new(f, 1.0, t).unwrap();
        let rep = one.check_nonpenetration();
        assert!(rep.winning_residual() < 1e-8);
        let two = SeriesSolution::new(f, 2.0, t).unwrap();
        let rep2 = two.check_nonpenetration();
        assert_eq!(rep2.winner, GmNormalization::WScaled);
        assert!(rep2.max_w_scaled < 1e-12);
        assert!(rep2.max_unscaled > 0.1);
        // same relative residuals under joint scaling of (b, d, W)
        for (a, b) in rep.w_scaled.iter().zip(&rep2.w_scaled) {
            assert!((a - b).abs() < 1e-14);
        }
        let zero = SeriesSolution::new(f, 0.0, t).unwrap();
        assert_eq!(zero.check_nonpenetration().max_w_scaled, 0.0);
    }

    #[test]
    fn dual_forms_agree() {
        let s = sol(0.2);
        let xi = 0.5 * s.frame().alpha();
        for n in 1..=20 {
            let a = s.u_n(n, xi).unwrap();
            let b = s.u_n_gm_form(n, xi).unwrap();
            assert!(((a - b) / a).abs() < 1e-9, "n={n}");
        }
        assert!(s.u_n(0, xi).is_err());
        assert!(s.u_n(s.n_modes() + 1, xi).is_err());
        assert!(s.u_n(1, 0.0).is_err());
        assert!(s.u_n(1, 2.0 * s.frame().alpha()).is_err());
    }

    #[test]
    fn bracket_nonpositive() {
        for &h in &[0.01, 0.5] {
            let a = BipolarFrame::from_gap(h).unwrap().alpha();
            for n in 1..=30 {
                let m = n as f64 + 0.5;
                assert_eq!(positivity_bracket(m, 0.0, a), 0.0);
                assert!(positivity_bracket(m, a, a).abs() < 1e-12 * ((m + 1.0) * a).sinh().powi(2));
                for k in 1..50 {
                    let xi = a * k as f64 / 50.0;
                    assert!(positivity_bracket(m, xi, a) <= 0.0);
                }
            }
        }
    }

    #[test]
    fn psi_vanishes_on_axis() {
        let s = sol(0.5);
        let q = BipolarPoint::new(0.3, 0.0).unwrap();
        assert_eq!(s.stream_psi(q).unwrap(), 0.0);
        let inside = BipolarPoint::new(2.0 * s.frame().alpha(), 1.0).unwrap();
        assert!(matches!(s.stream_psi(inside), Err(Error::Domain(_))));
    }

    #[test]
    fn psi_matches_rigid_motion_on_sphere() {
        // on the sphere psi = W rho^2 / 2 (sphere velocity -W e_z)
        let s = sol(0.3);
        for k in 1..20 {
            let eta = std::f64::consts::PI * k as f64 / 20.0;
            let q = BipolarPoint::new(s.frame().alpha(), eta).unwrap();
            let p = s.frame().from_bipolar(q).unwrap();
            let psi = s.stream_psi(q).unwrap();
            assert!((psi - 0.5 * p.rho * p.rho).abs() < 1e-9, "eta={eta}");
        }
    }

    #[test]
    fn psi_self_convergence() {
        let f = BipolarFrame::from_gap(0.5).unwrap();
        let q = BipolarPoint::new(0.5 * f.alpha(), std::f64::consts::FRAC_PI_2).unwrap();
        let a = SeriesSolution::new(f, 1.0, SeriesTruncation::new(40, 1e-10).unwrap()).unwrap();
        let b = SeriesSolution::new(f, 1.0, SeriesTruncation::new(80, 1e-10).unwrap()).unwrap();
        let (pa, pb) = (a.stream_psi(q).unwrap(), b.stream_psi(q).unwrap());
        assert!(((pa - pb) / pb).abs() < 1e-10);
        assert_eq!(a.stream_psi(q).unwrap(), pa);
    }

    #[test]
    fn axis_velocity_behind_sphere_only() {
        let s = sol(0.5);
        assert!(s.axis_velocity_uz(2.5).is_err());
        assert!(s.axis_velocity_uz(1.0).is_err());
        assert!(s.axis_velocity_uz(2.6).unwrap() > 0.0);
    }

    #[test]
    fn axis_velocity_limits() {
        let s = sol(0.1);
        // at the rear pole the fluid moves with the sphere
        let near = s.axis_velocity_uz(2.1 + 1e-9).unwrap();
        assert!((near - 1.0).abs() < 1e-6);
        let mut prev = near;
        for k in 1..60 {
            let v = s.axis_velocity_uz(2.1 + k as f64).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn drag_limits() {
        let far = kappa_pass_noslip(100.0, SeriesTruncation::default()).unwrap();
        assert!((far / (6.0 * PI) - 1.0).abs() < 0.02);
        // reference 30-digit evaluation of the same sum
        let mid = kappa_pass_noslip(1.0, SeriesTruncation::default()).unwrap();
        assert!((mid - 30.09674663841334).abs() < 1e-8 * mid);
        let near = kappa_pass_noslip(1e-4, SeriesTruncation::default()).unwrap();
        assert!((near * 1e-4 / (1.5 * PI) - 1.0).abs() < 3e-3);
    }

    #[test]
    fn reciprocal_quantities() {
        let t = SeriesTruncation::default();
        let kp = kappa_prop_noslip(0.01, 1.0, t).unwrap();
        // 30-digit reference
        assert!((kp - 0.6116092787203362).abs() < 1e-9);
        let w = swim_contribution_w(0.01, 1.0, 1.0, t).unwrap();
        let kpass = kappa_pass_noslip(0.01, t).unwrap();
        assert!(((w + kp / kpass) / w).abs() < 1e-12);
        assert!(swim_contribution_w(0.01, 1.0, 0.0, t).is_err());
        assert!(kappa_prop_noslip(0.01, 0.0, t).is_err());
    }
}
