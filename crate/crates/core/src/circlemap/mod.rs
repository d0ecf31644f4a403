//! Lifts of analytic circle maps and their critical orbits.
//!
//! A lift `F: R -> R` satisfies `F(x + 1) = F(x) + 1`. Critical lifts have
//! their critical point at the integers and are normalised so that
//! `0 < F(0) < 1`. Orbits are tracked as an integer winding count plus a
//! position in `[0, 1)`, which keeps absolute precision near `1e-16` for
//! orbits of any length.

mod family;
mod returns;
pub(crate) mod validate;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

pub use family::{FamilyRegistry, FamilySpec, ResolvedFamily};
pub use returns::{
    closest_returns, rotation_number, ClosestReturn, ClosestReturns, EstimateMethod, ReturnStatus,
    RotationEstimate,
};
pub use validate::{central_derivative, fit_critical_exponent, nearest_odd, validate, Diagnostics};

/// Evaluation contract for the lift of a degree-one circle map.
pub trait CircleLift: Send + Sync + fmt::Debug {
    /// `F(x)` for real `x`.
    fn lift(&self, x: f64) -> f64;

    /// Odd local degree of the critical point at 0, or `None` for a
    /// diffeomorphism.
    fn exponent(&self) -> Option<u32>;

    /// `F(x) - F(0)` for small `|x|`. Implementations with structure near the
    /// critical point override this to avoid cancellation.
    fn critical_offset(&self, x: f64) -> f64 {
        self.lift(x) - self.lift(0.0)
    }

    /// Short human-readable label.
    fn label(&self) -> String {
        format!("{self:?}")
    }
}

impl<T: CircleLift + ?Sized> CircleLift for Arc<T> {
    fn lift(&self, x: f64) -> f64 {
        (**self).lift(x)
    }
    fn exponent(&self) -> Option<u32> {
        (**self).exponent()
    }
    fn critical_offset(&self, x: f64) -> f64 {
        (**self).critical_offset(x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<L: CircleLift + ?Sized> CircleLift for &L {
    fn lift(&self, x: f64) -> f64 {
        (**self).lift(x)
    }
    fn exponent(&self) -> Option<u32> {
        (**self).exponent()
    }
    fn critical_offset(&self, x: f64) -> f64 {
        (**self).critical_offset(x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// A point of an orbit on the line, stored as `wraps + pos` with
/// `pos` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub wraps: i64,
    pub pos: f64,
}

impl OrbitPoint {
    pub const ORIGIN: OrbitPoint = OrbitPoint { wraps: 0, pos: 0.0 };

    pub fn from_real(x: f64) -> Self {
        let w = x.floor();
        Self::normalized(w as i64, x - w)
    }

    fn normalized(mut wraps: i64, mut pos: f64) -> Self {
        if pos >= 1.0 {
            pos -= 1.0;
            wraps += 1;
        }
        Self { wraps, pos }
    }

    /// Image under one application of the lift.
    #[inline]
    pub fn step(self, map: &dyn CircleLift) -> Self {
        let y = map.lift(self.pos);
        let w = y.floor();
        Self::normalized(self.wraps + w as i64, y - w)
    }

    /// `x - p` as a real number.
    #[inline]
    pub fn minus(self, p: i64) -> f64 {
        (self.wraps - p) as f64 + self.pos
    }

    pub fn to_real(self) -> f64 {
        self.minus(0)
    }
}

/// `F^count(x) - shift`, iterating in winding-count form.
pub fn iterate(map: &dyn CircleLift, x: f64, count: u64, shift: i64) -> f64 {
    let mut pt = OrbitPoint::from_real(x);
    for _ in 0..count {
        pt = pt.step(map);
    }
    pt.minus(shift)
}

/// Forward orbit of 0 with random access to non-decreasing indices.
pub(crate) struct Orbit<'a> {
    map: &'a dyn CircleLift,
    index: u64,
    point: OrbitPoint,
}

impl<'a> Orbit<'a> {
    pub(crate) fn new(map: &'a dyn CircleLift) -> Self {
        Self { map, index: 0, point: OrbitPoint::ORIGIN }
    }

    /// `F^k(0)`; `k` must not be smaller than any index requested before.
    pub(crate) fn at(&mut self, k: u64) -> OrbitPoint {
        assert!(k >= self.index, "orbit indices must be requested in order");
        while self.index < k {
            self.point = self.point.step(self.map);
            self.index += 1;
        }
        self.point
    }
}

/// Truncation reason attached to orbit listings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OrbitFlag {
    Complete,
    /// The orbit returned to the critical point within the precision floor.
    CollapsedToCritical,
}

/// `F^k(0)` for `k = 1..=length`.
///
/// The listing stops early, flagged, if an iterate lands within the
/// precision floor of an integer other than at the start (the orbit has
/// collapsed onto the critical point and later values carry no information
/// beyond periodicity).
pub fn orbit_of_zero(map: &dyn CircleLift, length: usize) -> (Vec<f64>, OrbitFlag) {
    let mut pt = OrbitPoint::ORIGIN;
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        pt = pt.step(map);
        out.push(pt.to_real());
        let gap = pt.pos.min(1.0 - pt.pos);
        if gap <= crate::PRECISION_FLOOR && out.len() < length {
            return (out, OrbitFlag::CollapsedToCritical);
        }
    }
    (out, OrbitFlag::Complete)
}

/// Rigid rotation `x -> x + rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidRotation {
    pub rho: f64,
}

impl RigidRotation {
    /// The translation is reduced into `[0, 1)`.
    pub fn new(rho: f64) -> Self {
        Self { rho: rho - rho.floor() }
    }
}

impl CircleLift for RigidRotation {
    fn lift(&self, x: f64) -> f64 {
        x + self.rho
    }
    fn exponent(&self) -> Option<u32> {
        None
    }
    fn critical_offset(&self, x: f64) -> f64 {
        x
    }
    fn label(&self) -> String {
        format!("rigid(rho={})", self.rho)
    }
}

/// `x -> x + omega + amplitude * sin(2 pi x)`; a diffeomorphism when
/// `2 pi |amplitude| < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SineFamily {
    pub omega: f64,
    pub amplitude: f64,
}

impl CircleLift for SineFamily {
    fn lift(&self, x: f64) -> f64 {
        x + self.omega + self.amplitude * (TAU * x).sin()
    }
    fn exponent(&self) -> Option<u32> {
        None
    }
    fn label(&self) -> String {
        format!("sine(omega={}, amplitude={})", self.omega, self.amplitude)
    }
}

/// The critical Arnold family `x -> x + theta - sin(2 pi x) / (2 pi)`, with a
/// cubic critical point at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArnoldFamily {
    pub theta: f64,
}

impl ArnoldFamily {
    fn offset(x: f64) -> f64 {
        let t = TAU * x;
        if t.abs() < 0.1 {
            // t - sin t without cancellation
            let t2 = t * t;
            t * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0))) / TAU
        } else {
            (t - t.sin()) / TAU
        }
    }
}

impl CircleLift for ArnoldFamily {
    fn lift(&self, x: f64) -> f64 {
        let k = x.floor();
        self.theta + k + Self::offset(x - k)
    }
    fn exponent(&self) -> Option<u32> {
        Some(3)
    }
    fn critical_offset(&self, x: f64) -> f64 {
        Self::offset(x)
    }
    fn label(&self) -> String {
        format!("arnold(theta={})", self.theta)
    }
}

/// `x -> base(x) + shift`: the rotated family `R_shift o base`.
#[derive(Clone, Debug)]
pub struct Shifted<L> {
    pub base: L,
    pub shift: f64,
}

impl<L: CircleLift> CircleLift for Shifted<L> {
    fn lift(&self, x: f64) -> f64 {
        self.base.lift(x) + self.shift
    }
    fn exponent(&self) -> Option<u32> {
        self.base.exponent()
    }
    fn critical_offset(&self, x: f64) -> f64 {
        self.base.critical_offset(x)
    }
    fn label(&self) -> String {
        format!("{} + {}", self.base.label(), self.shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn rigid_orbit() {
        let f = RigidRotation::new(GOLDEN);
        let (orbit, flag) = orbit_of_zero(&f, 3);
        assert_eq!(flag, OrbitFlag::Complete);
        for (k, x) in orbit.iter().enumerate() {
            assert!((x - (k + 1) as f64 * GOLDEN).abs() < 1e-14);
        }
    }

    #[test]
    fn first_iterate_is_normalized() {
        let f = ArnoldFamily { theta: 0.3 };
        let (orbit, _) = orbit_of_zero(&f, 1);
        assert!(orbit[0] > 0.0 && orbit[0] < 1.0);
    }

    #[test]
    fn collapsed_orbit_is_flagged() {
        let f = RigidRotation::new(0.5);
        let (orbit, flag) = orbit_of_zero(&f, 10);
        assert_eq!(flag, OrbitFlag::CollapsedToCritical);
        assert_eq!(orbit.len(), 2);
    }

    #[test]
    fn winding_form_keeps_precision_on_long_orbits() {
        let f = RigidRotation::new(GOLDEN);
        let k = 1_000_000u64;
        let x = iterate(&f, 0.0, k, 0);
        let exact_frac = {
            // k * golden mod 1 evaluated with a compensated product
            let prod = k as f64 * GOLDEN;
            let err = (k as f64).mul_add(GOLDEN, -prod);
            (prod - prod.floor()) + err
        };
        assert!(((x - x.floor()) - exact_frac).abs() < 1e-9);
    }

    #[test]
    fn arnold_offset_series_matches_direct_formula() {
        for &x in &[0.0159, 0.0158, 0.01, 0.001] {
            let direct = (TAU * x - (TAU * x).sin()) / TAU;
            let rel = (ArnoldFamily::offset(x) - direct).abs() / direct;
            assert!(rel < 1e-7, "x={x} rel={rel}");
        }
    }

    #[test]
    fn from_real_handles_tiny_negatives() {
        let p = OrbitPoint::from_real(-1e-20);
        assert!(p.pos >= 0.0 && p.pos < 1.0);
        assert!(p.to_real().abs() < 1e-15);
    }
}
