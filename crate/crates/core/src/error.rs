use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular point: {0}")]
    Singularity(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    /// The series tail did not drop below the requested tolerance before the mode cap.
    #[error("series not converged with {modes} modes: relative tail {achieved:e} > {requested:e}")]
    Truncation {
        modes: usize,
        achieved: f64,
        requested: f64,
    },

    /// Step size collapsed away from the terminating event.
    #[error("step size underflow at t = {t}, h = {h}, hdot = {hdot}, dt = {dt:e}")]
    Stiffness { t: f64, h: f64, hdot: f64, dt: f64 },

    /// Approach speed is not positive somewhere on the integration range.
    #[error("no collision: approach speed {speed:e} at h = {h:e}")]
    NoCollision { h: f64, speed: f64 },

    /// The collision-time integral grows without bound as `h -> 0`.
    #[error("collision-time integral diverges: {0}")]
    Divergence(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}
