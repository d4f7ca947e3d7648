//! Free-space Stokes singularities: the Oseen tensor and the ambient field of
//! the two opposed propulsion stokeslets.
//!
//! The ambient field is diagnostic only. Dynamics never integrates it; the
//! propulsion drag comes from the reciprocal-theorem route in [`crate::series`].

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::error::{ensure_positive, Error, Result};
use crate::series::flagellum_tip;

/// `G(x) = (1/8π) (I/|x| + x xᵀ/|x|³)`.
pub fn oseen_tensor(x: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let r = x.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(Error::Singularity(format!("Oseen tensor at |x| = {r}")));
    }
    Ok((Matrix3::identity() / r + x * x.transpose() / (r * r * r)) / (8.0 * PI))
}

/// Two axial point forces of strength `f_p` at the flagellum tips, each
/// pointing toward its own sphere and so toward the midplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesletPair {
    f_p: f64,
    lambda: f64,
    h: f64,
}

impl StokesletPair {
    pub fn new(f_p: f64, lambda: f64, h: f64) -> Result<Self> {
        Ok(Self {
            f_p: ensure_positive("propulsion f_p", f_p)?,
            lambda: ensure_positive("flagellum length lambda", lambda)?,
            h: ensure_positive("half-gap h", h)?,
        })
    }

    pub fn f_p(&self) -> f64 {
        self.f_p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Tip behind the lower sphere, `(0, 0, -(2 + h + λ))`.
    pub fn x_p1(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -flagellum_tip(self.h, self.lambda))
    }

    pub fn x_p2(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, flagellum_tip(self.h, self.lambda))
    }

    pub fn d1(&self) -> Vector3<f64> {
        Vector3::z()
    }

    pub fn d2(&self) -> Vector3<f64> {
        -Vector3::z()
    }

    /// `f_p [G(x - x_p1) d1 + G(x - x_p2) d2]`.
    pub fn ambient_field(&self, x: &Vector3<f64>) -> Result<Vector3<f64>> {
        let g1 = oseen_tensor(&(x - self.x_p1()))?;
        let g2 = oseen_tensor(&(x - self.x_p2()))?;
        Ok(self.f_p * (g1 * self.d1() + g2 * self.d2()))
    }
}
