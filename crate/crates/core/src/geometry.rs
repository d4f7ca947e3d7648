//! Bipolar (bispherical) coordinates for two unit spheres separated by a gap `2h`.
//!
//! The sphere centered at `(0, 0, 1 + h)` is the coordinate surface `zeta = alpha`
//! with `cosh(alpha) = 1 + h`. The foci sit at `z = ±c`, `c = sinh(alpha)`. Only
//! the `z >= 0` half-space is mapped; the other sphere follows by mirror symmetry.

use crate::error::{ensure_positive, Error, Result};

/// Frame induced by the half-gap `h` (sphere radius 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipolarFrame {
    h: f64,
    alpha: f64,
    c: f64,
}

/// Point in cylindrical coordinates about the line of centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisymPoint {
    pub rho: f64,
    pub z: f64,
}

/// Point in bipolar coordinates, `zeta >= 0`, `eta ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipolarPoint {
    pub zeta: f64,
    pub eta: f64,
}

impl AxisymPoint {
    pub fn new(rho: f64, z: f64) -> Result<Self> {
        if !(rho.is_finite() && z.is_finite()) || rho < 0.0 {
            return Err(Error::Domain(format!(
                "invalid axisymmetric point rho={rho}, z={z}"
            )));
        }
        Ok(Self { rho, z })
    }
}

impl BipolarPoint {
    pub fn new(zeta: f64, eta: f64) -> Result<Self> {
        if !(zeta.is_finite() && eta.is_finite())
            || zeta < 0.0
            || !(0.0..=std::f64::consts::PI).contains(&eta)
        {
            return Err(Error::Domain(format!(
                "invalid bipolar point zeta={zeta}, eta={eta}"
            )));
        }
        Ok(Self { zeta, eta })
    }
}

impl BipolarFrame {
    /// Builds the frame for half-gap `h > 0`.
    pub fn from_gap(h: f64) -> Result<Self> {
        let h = ensure_positive("half-gap h", h)?;
        // acosh(1 + h) = ln(1 + h + sqrt(h(2 + h))), written to keep precision as h -> 0
        let c = (h * (2.0 + h)).sqrt();
        let alpha = (h + c).ln_1p();
        Ok(Self { h, alpha, c })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Focal distance `c = sinh(alpha)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Center of the upper sphere on the axis.
    pub fn sphere_center(&self) -> f64 {
        1.0 + self.h
    }

    pub fn to_bipolar(&self, p: AxisymPoint) -> Result<BipolarPoint> {
        let AxisymPoint { rho, z } = p;
        if z < 0.0 {
            return Err(Error::UnsupportedRegion(format!(
                "z = {z} < 0; only the upper half-space is mapped"
            )));
        }
        let c = self.c;
        let num = rho * rho + (z + c) * (z + c);
        let den = rho * rho + (z - c) * (z - c);
        if den == 0.0 {
            return Err(Error::Singularity(format!(
                "point (rho=0, z={z}) is a focus"
            )));
        }
        let zeta = 0.5 * (num / den).ln();
        // arg of (rho^2 + z^2 - c^2) + 2i c rho
        let eta = (2.0 * c * rho).atan2(rho * rho + z * z - c * c);
        Ok(BipolarPoint {
            zeta: zeta.max(0.0),
            eta,
        })
    }

    pub fn from_bipolar(&self, q: BipolarPoint) -> Result<AxisymPoint> {
        let BipolarPoint { zeta, eta } = q;
        let den = zeta.cosh() - eta.cos();
        if den <= 0.0 {
            return Err(Error::Singularity(
                "(zeta, eta) = (0, 0) is the point at infinity".into(),
            ));
        }
        Ok(AxisymPoint {
            rho: self.c * eta.sin() / den,
            z: self.c * zeta.sinh() / den,
        })
    }

    /// Bipolar `zeta` of an on-axis point `z0 > c`.
    pub fn axis_zeta(&self, z0: f64) -> Result<f64> {
        if z0.is_nan() || z0 <= self.c {
            return Err(Error::Domain(format!(
                "axis point z0 = {z0} not beyond the focus {}",
                self.c
            )));
        }
        Ok(((z0 + self.c) / (z0 - self.c)).ln())
    }
}

/// Legendre polynomials `P_0..=P_{n_max}` at `x` by upward recurrence.
pub fn legendre_p(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_unit_interval(x)?;
    let mut p = Vec::with_capacity(n_max + 1);
    p.push(1.0);
    if n_max >= 1 {
        p.push(x);
    }
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    Ok(p)
}

/// Derivatives `P'_0..=P'_{n_max}` via `P'_{n+1} = P'_{n-1} + (2n+1) P_n`.
pub fn legendre_dp(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let p = legendre_p(n_max, x)?;
    let mut dp = vec![0.0; n_max + 1];
    if n_max >= 1 {
        dp[1] = 1.0;
    }
    for n in 1..n_max {
        dp[n + 1] = dp[n - 1] + (2 * n + 1) as f64 * p[n];
    }
    Ok(dp)
}

/// `P_n(x)` from the expanded Rodrigues formula
/// `2^-n Σ_k (-1)^k C(n,k) C(2n-2k, n) x^(n-2k)`. Loses accuracy past n ≈ 20.
pub fn legendre_explicit(n: usize, x: f64) -> f64 {
    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let mut s = 0.0;
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binom(n, k) * binom(2 * n - 2 * k, n) * x.powi((n - 2 * k) as i32);
    }
    s / 2f64.powi(n as i32)
}

/// `P'_n(1) = n(n+1)/2`.
pub fn legendre_dp_at_one(n: usize) -> f64 {
    (n * (n + 1)) as f64 / 2.0
}

/// Gegenbauer function `C_{n+1}^{-1/2}(x) = (P_{n-1}(x) - P_{n+1}(x)) / (2n+1)`, `n >= 1`.
pub fn gegenbauer_cm12(n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("C_{n+1}^{-1/2} needs n >= 1".into()));
    }
    let p = legendre_p(n + 1, x)?;
    Ok((p[n - 1] - p[n + 1]) / (2 * n + 1) as f64)
}

/// `C_{n+1}^{-1/2}(x)` for `n = 1..=n_max`; index 0 of the result is `n = 1`.
pub fn gegenbauer_cm12_all(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let p = legendre_p(n_max + 1, x)?;
    Ok((1..=n_max)
        .map(|n| (p[n - 1] - p[n + 1]) / (2 * n + 1) as f64)
        .collect())
}

fn check_unit_interval(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("|x| must be <= 1, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn frame_relations() {
        for &h in &[1e-8, 1e-4, 0.01, 0.5, 1.0, 100.0] {
            let f = BipolarFrame::from_gap(h).unwrap();
            assert!(((f.alpha().cosh() - (1.0 + h)) / (1.0 + h)).abs() < 1e-12);
            assert!(((f.c() * f.c() - h * (2.0 + h)) / (h * (2.0 + h))).abs() < 1e-12);
            assert!(((f.c() - f.alpha().sinh()) / f.c()).abs() < 1e-12);
            assert!(f.alpha() > 0.0 && f.c() > 0.0);
        }
    }

    #[test]
    fn frame_half() {
        // sqrt(0.5 * 2.5) and acosh(1.5) evaluated with mpmath at 30 digits
        let f = BipolarFrame::from_gap(0.5).unwrap();
        assert!((f.c() - 1.118033988749895).abs() < 1e-15);
        assert!((f.alpha() - 0.9624236501192069).abs() < 1e-15);
    }

    #[test]
    fn frame_small_gap_monotone() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for k in 0..12 {
            let f = BipolarFrame::from_gap(10f64.powi(-k)).unwrap();
            assert!(f.alpha() < prev.0 && f.c() < prev.1);
            prev = (f.alpha(), f.c());
        }
        assert!(prev.0 < 1e-5);
    }

    #[test]
    fn frame_rejects_bad_gap() {
        assert!(matches!(BipolarFrame::from_gap(0.0), Err(Error::Domain(_))));
        assert!(matches!(
            BipolarFrame::from_gap(-1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BipolarFrame::from_gap(f64::NAN),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            BipolarFrame::from_gap(f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn axis_point_maps_to_log_ratio() {
        let f = BipolarFrame::from_gap(0.3).unwrap();
        let z0 = 3.7;
        let q = f.to_bipolar(AxisymPoint { rho: 0.0, z: z0 }).unwrap();
        let expected = ((z0 + f.c()) / (z0 - f.c())).ln();
        assert!((q.zeta - expected).abs() < 1e-14);
        assert_eq!(q.eta, 0.0);
        assert!((f.axis_zeta(z0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn singular_inputs() {
        let f = BipolarFrame::from_gap(0.5).unwrap();
        let focus = AxisymPoint { rho: 0.0, z: f.c() };
        assert!(matches!(f.to_bipolar(focus), Err(Error::Singularity(_))));
        let below = AxisymPoint { rho: 1.0, z: -0.1 };
        assert!(matches!(
            f.to_bipolar(below),
            Err(Error::UnsupportedRegion(_))
        ));
        let inf = BipolarPoint {
            zeta: 0.0,
            eta: 0.0,
        };
        assert!(matches!(f.from_bipolar(inf), Err(Error::Singularity(_))));
    }

    #[test]
    fn near_gap_pole() {
        let f = BipolarFrame::from_gap(0.4).unwrap();
        let p = f
            .from_bipolar(BipolarPoint {
                zeta: f.alpha(),
                eta: PI,
            })
            .unwrap();
        let expected = f.c() * f.alpha().sinh() / (f.alpha().cosh() + 1.0);
        assert!((p.z - expected).abs() < 1e-14);
        // near pole of the upper sphere is z = h
        assert!((p.z - 0.4).abs() < 1e-12);
        assert!(p.rho.abs() < 1e-15);
    }

    #[test]
    fn equator_substitution() {
        let f = BipolarFrame::from_gap(0.7).unwrap();
        let zeta = 0.3;
        let p = f
            .from_bipolar(BipolarPoint {
                zeta,
                eta: PI / 2.0,
            })
            .unwrap();
        let den = zeta.cosh() - (PI / 2.0).cos();
        assert!((p.z - f.c() * zeta.sinh() / den).abs() < 1e-14);
        assert!((p.rho - f.c() / den).abs() < 1e-14);
    }

    #[test]
    fn roundtrip_grid() {
        let f = BipolarFrame::from_gap(0.25).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let rho = 0.05 + 0.4 * i as f64;
                let z = 0.02 + 0.37 * j as f64;
                let p = AxisymPoint { rho, z };
                let back = f.from_bipolar(f.to_bipolar(p).unwrap()).unwrap();
                assert!((back.rho - rho).abs() <= 1e-10 * rho.max(1.0), "{rho} {z}");
                assert!((back.z - z).abs() <= 1e-10 * z.max(1.0), "{rho} {z}");
            }
        }
    }

    #[test]
    fn sphere_surface() {
        for &h in &[0.01, 0.5, 3.0] {
            let f = BipolarFrame::from_gap(h).unwrap();
            for k in 0..50 {
                let eta = PI * k as f64 / 49.0;
                let p = f
                    .from_bipolar(BipolarPoint {
                        zeta: f.alpha(),
                        eta,
                    })
                    .unwrap();
                let r = (p.rho * p.rho + (p.z - 1.0 - h).powi(2)).sqrt();
                assert!((r - 1.0).abs() < 1e-10);
                // coordinate-sphere identity
                let lhs = (p.z - f.c() / f.alpha().tanh()).powi(2) + p.rho * p.rho;
                let rhs = (f.c() / f.alpha().sinh()).powi(2);
                assert!((lhs - rhs).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn legendre_base_and_closed_form() {
        for &x in &[-1.0, -0.3, 0.0, 0.5, 1.0] {
            let p = legendre_p(3, x).unwrap();
            assert_eq!(p[0], 1.0);
            assert_eq!(p[1], x);
        }
        assert!((legendre_p(2, 0.5).unwrap()[2] + 0.125).abs() < 1e-16);
        assert_eq!(legendre_p(0, 0.2).unwrap(), vec![1.0]);
        assert!(matches!(legendre_p(4, 1.0001), Err(Error::Domain(_))));
    }

    #[test]
    fn legendre_at_one() {
        let p = legendre_p(50, 1.0).unwrap();
        let dp = legendre_dp(50, 1.0).unwrap();
        for n in 0..=50 {
            assert!((p[n] - 1.0).abs() < 1e-13);
            assert!((dp[n] - legendre_dp_at_one(n)).abs() < 1e-10 * legendre_dp_at_one(n).max(1.0));
        }
    }

    #[test]
    fn legendre_matches_rodrigues() {
        for i in 0..=20 {
            let x = -1.0 + 0.1 * i as f64;
            let p = legendre_p(10, x).unwrap();
            for (n, pn) in p.iter().enumerate() {
                assert!((pn - legendre_explicit(n, x)).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn gegenbauer_values() {
        for n in 1..30 {
            assert!(gegenbauer_cm12(n, 1.0).unwrap().abs() < 1e-14);
            assert!(gegenbauer_cm12(n, -1.0).unwrap().abs() < 1e-14);
        }
        for &x in &[-0.8, 0.1, 0.6] {
            let expected = (1.0 - (3.0 * x * x - 1.0) / 2.0) / 3.0;
            assert!((gegenbauer_cm12(1, x).unwrap() - expected).abs() < 1e-15);
        }
        assert!(matches!(gegenbauer_cm12(0, 0.3), Err(Error::Domain(_))));
        let all = gegenbauer_cm12_all(12, 0.37).unwrap();
        for n in 1..=12 {
            assert_eq!(all[n - 1], gegenbauer_cm12(n, 0.37).unwrap());
        }
    }
}
