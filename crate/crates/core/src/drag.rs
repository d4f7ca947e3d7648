//! Drag coefficients `κ_pass(h)` and `κ_prop(h, λ)` for both boundary conditions.
//!
//! No-slip values come from the exact series. For Navier slip with length `β`
//! the passive drag follows the series for `h >= β` and the logarithmic law
//! `κ(β) + (A/β) ln(β/h)`, `A = β κ(β)`, below it; the two branches meet at
//! `h = β`. The propulsion drag defaults to the no-slip reciprocal value for
//! both conditions and is replaceable through [`PropulsionDrag`].

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::BipolarFrame;
use crate::series::{flagellum_tip, SeriesSolution, SeriesTruncation, MIN_SERIES_GAP};

/// Below this gap `κ_prop` is held at its value here; it has converged to its
/// contact limit to ~1e-8 relative.
pub const KAPPA_PROP_MIN_GAP: f64 = 1e-6;

const CACHE_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCondition {
    NoSlip,
    Navier { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcKind {
    NoSlip,
    Navier,
}

impl BoundaryCondition {
    /// Navier condition with slip length `beta`; `beta = 0` is no-slip.
    pub fn navier(beta: f64) -> Result<Self> {
        if beta == 0.0 {
            return Ok(Self::NoSlip);
        }
        let beta = ensure_positive("slip length beta", beta)?;
        if beta < MIN_SERIES_GAP {
            return Err(Error::Domain(format!(
                "slip length {beta:e} below {MIN_SERIES_GAP:e} is indistinguishable from no-slip"
            )));
        }
        Ok(Self::Navier { beta })
    }

    pub fn kind(&self) -> BcKind {
        match self {
            Self::NoSlip => BcKind::NoSlip,
            Self::Navier { .. } => BcKind::Navier,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Self::NoSlip => 0.0,
            Self::Navier { beta } => beta,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSlip => write!(f, "no-slip"),
            Self::Navier { beta } => write!(f, "navier(beta={beta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ExactSeries,
    AsymptoticModel,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactSeries => "exact-series",
            Self::AsymptoticModel => "asymptotic-model",
        }
    }

    fn and(self, other: Self) -> Self {
        if self == Self::ExactSeries && other == Self::ExactSeries {
            Self::ExactSeries
        } else {
            Self::AsymptoticModel
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragCoefficients {
    pub h: f64,
    pub kappa_pass: f64,
    pub kappa_prop: f64,
    pub provenance: Provenance,
}

/// Source of the propulsion drag coefficient.
pub trait PropulsionDrag: Send + Sync + fmt::Debug {
    fn kappa_prop(
        &self,
        series: &SeriesCache,
        h: f64,
        lambda: f64,
        bc: BoundaryCondition,
    ) -> Result<(f64, Provenance)>;
}

/// No-slip reciprocal-theorem value, used for either boundary condition.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReciprocalNoSlip;

impl PropulsionDrag for ReciprocalNoSlip {
    fn kappa_prop(
        &self,
        series: &SeriesCache,
        h: f64,
        lambda: f64,
        bc: BoundaryCondition,
    ) -> Result<(f64, Provenance)> {
        let clamped = h.max(KAPPA_PROP_MIN_GAP);
        let value = series.kappa_prop(clamped, lambda)?;
        let provenance = if clamped == h && bc == BoundaryCondition::NoSlip {
            Provenance::ExactSeries
        } else {
            Provenance::AsymptoticModel
        };
        Ok((value, provenance))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct PropKey {
    h: u64,
    lambda: u64,
}

/// Memoized series evaluations keyed by exact bit patterns of the inputs.
/// Cached values are identical to fresh evaluations.
#[derive(Debug)]
pub struct SeriesCache {
    truncation: SeriesTruncation,
    pass: Mutex<HashMap<u64, f64>>,
    prop: Mutex<HashMap<PropKey, f64>>,
}

impl SeriesCache {
    pub fn new(truncation: SeriesTruncation) -> Self {
        Self {
            truncation,
            pass: Mutex::new(HashMap::new()),
            prop: Mutex::new(HashMap::new()),
        }
    }

    pub fn truncation(&self) -> SeriesTruncation {
        self.truncation
    }

    fn solve(&self, h: f64) -> Result<SeriesSolution> {
        SeriesSolution::new(BipolarFrame::from_gap(h)?, 1.0, self.truncation)
    }

    /// Exact no-slip `κ_pass(h)`.
    pub fn kappa_pass(&self, h: f64) -> Result<f64> {
        let key = h.to_bits();
        if let Some(&v) = self.pass.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let sol = self.solve(h)?;
        let v = sol.drag_force();
        insert_bounded(&self.pass, key, v);
        Ok(v)
    }

    /// Exact no-slip `κ_prop(h, λ)`.
    pub fn kappa_prop(&self, h: f64, lambda: f64) -> Result<f64> {
        let lambda = ensure_positive("flagellum length lambda", lambda)?;
        let key = PropKey {
            h: h.to_bits(),
            lambda: lambda.to_bits(),
        };
        if let Some(&v) = self.prop.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let sol = self.solve(h)?;
        let v = sol.axis_velocity_uz(flagellum_tip(h, lambda))?;
        insert_bounded(&self.prop, key, v);
        insert_bounded(&self.pass, h.to_bits(), sol.drag_force());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.pass.lock().unwrap().len() + self.prop.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn insert_bounded<K: std::hash::Hash + Eq, V>(map: &Mutex<HashMap<K, V>>, key: K, value: V) {
    let mut map = map.lock().unwrap();
    if map.len() >= CACHE_LIMIT {
        map.clear();
    }
    map.insert(key, value);
}

/// Drag coefficient provider shared by the dynamics and the CLI.
#[derive(Debug, Clone)]
pub struct DragModel {
    cache: Arc<SeriesCache>,
    propulsion: Arc<dyn PropulsionDrag>,
}

impl Default for DragModel {
    fn default() -> Self {
        Self::new(SeriesTruncation::default())
    }
}

impl DragModel {
    pub fn new(truncation: SeriesTruncation) -> Self {
        Self {
            cache: Arc::new(SeriesCache::new(truncation)),
            propulsion: Arc::new(ReciprocalNoSlip),
        }
    }

    pub fn with_propulsion(mut self, model: Arc<dyn PropulsionDrag>) -> Self {
        self.propulsion = model;
        self
    }

    pub fn truncation(&self) -> SeriesTruncation {
        self.cache.truncation()
    }

    pub fn cache(&self) -> &SeriesCache {
        &self.cache
    }

    pub fn kappa_pass(&self, h: f64, bc: BoundaryCondition) -> Result<f64> {
        self.kappa_pass_with_provenance(h, bc).map(|(v, _)| v)
    }

    pub fn kappa_pass_with_provenance(
        &self,
        h: f64,
        bc: BoundaryCondition,
    ) -> Result<(f64, Provenance)> {
        let h = ensure_positive("half-gap h", h)?;
        match bc {
            BoundaryCondition::NoSlip => Ok((self.cache.kappa_pass(h)?, Provenance::ExactSeries)),
            BoundaryCondition::Navier { beta } if h >= beta => {
                Ok((self.cache.kappa_pass(h)?, Provenance::ExactSeries))
            }
            BoundaryCondition::Navier { beta } => {
                let at_beta = self.cache.kappa_pass(beta)?;
                Ok((
                    at_beta + self.navier_log_slope(beta)? * (beta / h).ln(),
                    Provenance::AsymptoticModel,
                ))
            }
        }
    }

    /// `A/β` of the logarithmic Navier law; `A = β κ(β)` by continuity.
    pub fn navier_log_slope(&self, beta: f64) -> Result<f64> {
        let beta = ensure_positive("slip length beta", beta)?;
        let a = beta * self.cache.kappa_pass(beta)?;
        Ok(a / beta)
    }

    pub fn kappa_prop(&self, h: f64, lambda: f64, bc: BoundaryCondition) -> Result<f64> {
        let h = ensure_positive("half-gap h", h)?;
        self.propulsion
            .kappa_prop(&self.cache, h, lambda, bc)
            .map(|(v, _)| v)
    }

    pub fn coefficients(
        &self,
        h: f64,
        lambda: f64,
        bc: BoundaryCondition,
    ) -> Result<DragCoefficients> {
        let h = ensure_positive("half-gap h", h)?;
        let (kappa_prop, p_prop) = self.propulsion.kappa_prop(&self.cache, h, lambda, bc)?;
        let (kappa_pass, p_pass) = self.kappa_pass_with_provenance(h, bc)?;
        Ok(DragCoefficients {
            h,
            kappa_pass,
            kappa_prop,
            provenance: p_pass.and(p_prop),
        })
    }

    /// `f_p (1 - κ_prop)`: the propulsion left after the backward pull.
    pub fn net_propulsion(
        &self,
        h: f64,
        lambda: f64,
        f_p: f64,
        bc: BoundaryCondition,
    ) -> Result<f64> {
        if !(f_p.is_finite() && f_p >= 0.0) {
            return Err(Error::Domain(format!("propulsion must be >= 0, got {f_p}")));
        }
        if f_p == 0.0 {
            return Ok(0.0);
        }
        Ok(f_p * (1.0 - self.kappa_prop(h, lambda, bc)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn beta_zero_is_no_slip() {
        assert_eq!(
            BoundaryCondition::navier(0.0).unwrap(),
            BoundaryCondition::NoSlip
        );
        assert!(BoundaryCondition::navier(-0.1).is_err());
        assert!(BoundaryCondition::navier(1e-12).is_err());
        let bc = BoundaryCondition::navier(0.1).unwrap();
        assert_eq!(bc.kind(), BcKind::Navier);
        assert_eq!(bc.beta(), 0.1);
        assert_eq!(BoundaryCondition::NoSlip.beta(), 0.0);
    }

    #[test]
    fn navier_continuity_at_beta() {
        let m = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        let right = m.kappa_pass(0.1, bc).unwrap();
        let left = m.kappa_pass(0.1 * (1.0 - 1e-13), bc).unwrap();
        assert!(((left - right) / right).abs() < 1e-10);
        assert_eq!(
            m.kappa_pass_with_provenance(0.05, bc).unwrap().1,
            Provenance::AsymptoticModel
        );
        assert_eq!(
            m.kappa_pass_with_provenance(0.5, bc).unwrap().1,
            Provenance::ExactSeries
        );
    }

    #[test]
    fn navier_small_gap_closed_form() {
        let m = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        let k = m.kappa_pass(1e-12, bc).unwrap();
        let slope = m.navier_log_slope(0.1).unwrap();
        let expected = m.kappa_pass(0.1, bc).unwrap() + slope * (0.1f64 / 1e-12).ln();
        assert!((k - expected).abs() < 1e-9 * k);
    }

    #[test]
    fn no_slip_rejects_below_series_range() {
        let m = DragModel::default();
        assert!(m.kappa_pass(1e-9, BoundaryCondition::NoSlip).is_err());
        assert!(m.kappa_pass(0.0, BoundaryCondition::NoSlip).is_err());
    }

    #[test]
    fn cache_is_transparent() {
        let m = DragModel::default();
        let fresh = DragModel::default();
        let a = m
            .coefficients(0.03, 1.0, BoundaryCondition::NoSlip)
            .unwrap();
        let b = m
            .coefficients(0.03, 1.0, BoundaryCondition::NoSlip)
            .unwrap();
        let c = fresh.kappa_pass(0.03, BoundaryCondition::NoSlip).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.kappa_pass, c);
        assert!(!m.cache().is_empty());
    }

    #[test]
    fn cache_concurrent_access() {
        let m = DragModel::default();
        let reference: Vec<f64> = (1..=8)
            .map(|i| {
                DragModel::default()
                    .kappa_prop(0.01 * i as f64, 0.5, BoundaryCondition::NoSlip)
                    .unwrap()
            })
            .collect();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for (i, r) in reference.iter().enumerate() {
                        let v = m
                            .kappa_prop(0.01 * (i + 1) as f64, 0.5, BoundaryCondition::NoSlip)
                            .unwrap();
                        assert_eq!(v, *r);
                    }
                });
            }
        });
    }

    #[test]
    fn net_propulsion_basics() {
        let m = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        assert_eq!(m.net_propulsion(0.01, 1.0, 0.0, bc).unwrap(), 0.0);
        let one = m.net_propulsion(0.01, 1.0, 1.0, bc).unwrap();
        let three = m.net_propulsion(0.01, 1.0, 3.0, bc).unwrap();
        assert!(one > 0.0);
        assert!((three - 3.0 * one).abs() < 1e-14);
        assert!(m.net_propulsion(0.01, 1.0, -1.0, bc).is_err());
    }

    #[test]
    fn prop_clamped_below_min_gap() {
        let m = DragModel::default();
        let bc = BoundaryCondition::navier(0.1).unwrap();
        let a = m.coefficients(1e-9, 1.0, bc).unwrap();
        let b = m.kappa_prop(KAPPA_PROP_MIN_GAP, 1.0, bc).unwrap();
        assert_eq!(a.kappa_prop, b);
        assert_eq!(a.provenance, Provenance::AsymptoticModel);
        let exact = m.coefficients(0.2, 1.0, BoundaryCondition::NoSlip).unwrap();
        assert_eq!(exact.provenance, Provenance::ExactSeries);
        assert!(exact.kappa_pass > 6.0 * PI);
    }

    #[derive(Debug)]
    struct Constant(f64);

    impl PropulsionDrag for Constant {
        fn kappa_prop(
            &self,
            _: &SeriesCache,
            _: f64,
            _: f64,
            _: BoundaryCondition,
        ) -> Result<(f64, Provenance)> {
            Ok((self.0, Provenance::AsymptoticModel))
        }
    }

    #[test]
    fn pluggable_propulsion_model() {
        let m = DragModel::default().with_propulsion(Arc::new(Constant(0.25)));
        let bc = BoundaryCondition::navier(0.1).unwrap();
        assert_eq!(m.kappa_prop(0.3, 1.0, bc).unwrap(), 0.25);
        assert!((m.net_propulsion(0.3, 1.0, 2.0, bc).unwrap() - 1.5).abs() < 1e-15);
    }
}
