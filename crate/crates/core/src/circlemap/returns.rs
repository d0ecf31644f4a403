//! Closest returns of the critical orbit and rotation numbers.
//!
//! Closest returns are extracted combinatorially. Given consecutive levels
//! `q_{m-1}, q_m` whose displacements `F^{q}(0) - p` have opposite signs,
//! the points `F^{q_{m-1} + j q_m}(0) - (p_{m-1} + j p_m)` approach 0 from the
//! side of level `m-1`; the last `j` before they cross 0 is the partial
//! quotient `r_m`, and `q_{m+1} = q_{m-1} + r_m q_m`. Only signs are compared,
//! so the extraction never relies on metric comparisons across 0.

use serde::{Deserialize, Serialize};

use super::{CircleLift, Orbit};
use crate::contfrac::ContinuedFraction;
use crate::PRECISION_FLOOR;

/// One closest return: `F^q(0) - p = distance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosestReturn {
    pub level: usize,
    pub q: u64,
    pub p: i64,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnStatus {
    /// The requested number of levels (or the tolerance) was reached.
    Complete,
    /// The orbit budget ran out first.
    Budget,
    /// The rotation number is rational: either an iterate landed on the
    /// critical point within the precision floor, or the approach stalled at
    /// a periodic orbit.
    Rational,
    /// Signs did not follow the pattern of a circle homeomorphism.
    Inconsistent,
}

/// Output of [`closest_returns`].
///
/// `levels[0]` is the seed `q_0 = 1, p_0 = 0`; `levels[m]` for `m >= 1`
/// holds the closest return at time `q_m` with `p_m/q_m = [r_0, ..., r_{m-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosestReturns {
    pub levels: Vec<ClosestReturn>,
    pub terms: Vec<u64>,
    pub status: ReturnStatus,
    /// `(p, q)` when the rotation number was found to be rational.
    pub rational: Option<(i64, u64)>,
    /// Number of extra `q_M` steps from level `M-1` confirmed not to cross 0
    /// when extraction stopped mid-level.
    pub partial_steps: u64,
    /// Largest orbit index evaluated.
    pub orbit_used: u64,
}

impl ClosestReturns {
    pub fn deepest(&self) -> &ClosestReturn {
        self.levels.last().expect("level 0 is always present")
    }

    /// Partial quotients found so far; exhausted when the rotation number is
    /// known to be rational.
    pub fn cf(&self) -> ContinuedFraction {
        ContinuedFraction::from_parts(self.terms.clone(), self.rational.is_some())
    }

    /// Signs of consecutive displacements alternate at every level.
    pub fn alternates(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| w[1].distance == 0.0 || w[0].distance.signum() != w[1].distance.signum())
    }

    /// Rigorous bracket for the rotation number: `(lo, hi)`, valid when at
    /// least one level beyond the seed is known.
    fn bracket(&self) -> Option<(f64, f64, f64)> {
        if let Some((p, q)) = self.rational {
            let v = p as f64 / q as f64;
            return Some((v, v, 0.0));
        }
        let m = self.levels.len() - 1;
        if m == 0 {
            return None;
        }
        let cur = &self.levels[m];
        let prev = &self.levels[m - 1];
        let j = self.partial_steps as i128;
        let q_mid = prev.q as i128 + j * cur.q as i128;
        let p_mid = prev.p as i128 + j * cur.p as i128;
        let a = cur.p as f64 / cur.q as f64;
        let b = p_mid as f64 / q_mid as f64;
        // Farey neighbours: the gap is exactly 1/(q q')
        let width = 1.0 / (cur.q as f64 * q_mid as f64);
        Some((a.min(b), a.max(b), width))
    }
}

/// Closest returns of 0 through `levels` levels (or fewer, flagged).
pub fn closest_returns(map: &dyn CircleLift, levels: usize, max_orbit: u64) -> ClosestReturns {
    extract(map, levels, max_orbit, None)
}

fn extract(map: &dyn CircleLift, levels: usize, max_orbit: u64, tol: Option<f64>) -> ClosestReturns {
    let mut orbit = Orbit::new(map);
    let x1 = orbit.at(1);
    let d0 = x1.minus(0);
    let mut out = ClosestReturns {
        levels: vec![ClosestReturn { level: 0, q: 1, p: 0, distance: d0 }],
        terms: Vec::new(),
        status: ReturnStatus::Complete,
        rational: None,
        partial_steps: 0,
        orbit_used: 1,
    };
    if d0.abs() <= PRECISION_FLOOR {
        out.status = ReturnStatus::Rational;
        out.rational = Some((0, 1));
        return out;
    }
    if d0 < 0.0 || d0 >= 1.0 {
        out.status = ReturnStatus::Inconsistent;
        return out;
    }

    // level -1 is the virtual point F^0(0) - 1 = -1
    let (mut q_prev, mut p_prev, mut d_prev) = (0u64, 1i64, -1.0f64);
    let (mut q_cur, mut p_cur) = (1u64, 0i64);
    let mut level = 0usize;
    while level < levels {
        if let Some(tol) = tol {
            if level >= 1 && 1.0 / (q_cur as f64 * q_prev as f64) < tol {
                break;
            }
        }
        let mut j = 1u64;
        let mut last = d_prev;
        loop {
            let k = q_cur.checked_mul(j).and_then(|v| v.checked_add(q_prev));
            let Some(k) = k.filter(|&k| k <= max_orbit) else {
                out.status = ReturnStatus::Budget;
                out.partial_steps = j - 1;
                return out;
            };
            let p = p_prev + j as i64 * p_cur;
            let y = orbit.at(k).minus(p);
            out.orbit_used = k;
            if y.abs() <= PRECISION_FLOOR {
                out.terms.push(j);
                out.levels.push(ClosestReturn { level: level + 1, q: k, p, distance: y });
                out.status = ReturnStatus::Rational;
                out.rational = Some((p, k));
                return out;
            }
            if (y > 0.0) == (d_prev > 0.0) {
                if j >= 2 && (y - last).abs() <= PRECISION_FLOOR {
                    // F^{q_cur} - p_cur has a fixed point: rho = p_cur / q_cur
                    out.status = ReturnStatus::Rational;
                    out.rational = Some((p_cur, q_cur));
                    out.partial_steps = j - 1;
                    return out;
                }
                last = y;
                j += 1;
                continue;
            }
            break;
        }
        let r = j - 1;
        if r == 0 {
            out.status = ReturnStatus::Inconsistent;
            return out;
        }
        let q_next = q_prev + r * q_cur;
        let p_next = p_prev + r as i64 * p_cur;
        out.terms.push(r);
        out.levels.push(ClosestReturn { level: level + 1, q: q_next, p: p_next, distance: last });
        let d_cur = out.levels[level].distance;
        (q_prev, p_prev, d_prev) = (q_cur, p_cur, d_cur);
        (q_cur, p_cur) = (q_next, p_next);
        level += 1;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateMethod {
    ClosestReturns,
    Birkhoff,
}

/// Rotation number with a rigorous error bound under the monotone
/// circle-map assumption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub rho: f64,
    pub error_bound: f64,
    pub cf_prefix: ContinuedFraction,
    pub orbit_length: u64,
    pub method: EstimateMethod,
    /// Whether `error_bound <= tol` was achieved.
    pub tol_reached: bool,
}

/// Rotation number of `map` to within `tol`, using at most `max_orbit`
/// iterates of the critical point.
///
/// The estimate is `p_M / q_M` at the deepest closest-return level, with the
/// error bound given by the bracket between it and the last intermediate
/// fraction confirmed on the other side. When no level beyond the seed fits
/// in the budget, falls back to the Birkhoff average `F^k(0)/k` with bound
/// `1/k`.
pub fn rotation_number(map: &dyn CircleLift, tol: f64, max_orbit: u64) -> RotationEstimate {
    let cr = extract(map, usize::MAX, max_orbit, Some(tol));
    if let Some((lo, hi, width)) = cr.bracket() {
        let deepest = cr.deepest();
        let rho = match cr.rational {
            Some((p, q)) => p as f64 / q as f64,
            None => deepest.p as f64 / deepest.q as f64,
        };
        debug_assert!(rho >= lo - 1e-15 && rho <= hi + 1e-15);
        return RotationEstimate {
            rho,
            error_bound: width,
            cf_prefix: cr.cf(),
            orbit_length: cr.orbit_used,
            method: EstimateMethod::ClosestReturns,
            tol_reached: width <= tol,
        };
    }
    let k = max_orbit.max(1);
    let mut orbit = Orbit::new(map);
    let x = orbit.at(k).to_real();
    let bound = 1.0 / k as f64;
    RotationEstimate {
        rho: x / k as f64,
        error_bound: bound,
        cf_prefix: cr.cf(),
        orbit_length: k,
        method: EstimateMethod::Birkhoff,
        tol_reached: bound <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::{RigidRotation, SineFamily};
    use crate::contfrac::{cf_of_real, DEFAULT_FLOOR_EPS};

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn golden_rigid_returns_are_fibonacci() {
        let cr = closest_returns(&RigidRotation::new(GOLDEN), 8, 1_000_000);
        assert_eq!(cr.status, ReturnStatus::Complete);
        let q: Vec<u64> = cr.levels[1..].iter().map(|c| c.q).collect();
        let p: Vec<i64> = cr.levels[1..].iter().map(|c| c.p).collect();
        assert_eq!(q, vec![1, 2, 3, 5, 8, 13, 21, 34]);
        assert_eq!(p, vec![1, 1, 2, 3, 5, 8, 13, 21]);
        assert!(cr.alternates());
        assert!(cr.terms.iter().all(|&t| t == 1));
    }

    #[test]
    fn closest_returns_match_arc_definition() {
        // Brute force: f^k(0) is a two-sided record of circle distance for a
        // rigid rotation exactly at the convergent denominators.
        let rho = 0.414_213_562_373_095_1;
        let cr = closest_returns(&RigidRotation::new(rho), 6, 100_000);
        let mut best = f64::INFINITY;
        let mut records = Vec::new();
        for k in 1..=cr.deepest().q {
            let x = k as f64 * rho;
            let dist = (x - x.round()).abs();
            if dist < best {
                best = dist;
                records.push(k);
            }
        }
        let qs: Vec<u64> = cr.levels.iter().map(|c| c.q).collect();
        assert_eq!(records, qs);
        assert_eq!(cr.terms, vec![2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn rational_lock_in() {
        let half = closest_returns(&RigidRotation::new(0.5), 10, 1000);
        assert_eq!(half.status, ReturnStatus::Rational);
        assert_eq!(half.rational, Some((1, 2)));
        assert_eq!(half.levels.last().unwrap().q, 2);

        let est = rotation_number(&RigidRotation::new(2.0 / 3.0), 1e-12, 1000);
        assert_eq!(est.rho, 2.0 / 3.0);
        assert_eq!(est.error_bound, 0.0);
        assert_eq!(est.cf_prefix, ContinuedFraction::from_terms(&[1, 2]).unwrap());
    }

    #[test]
    fn locked_sine_map_reports_rational() {
        // omega inside the 0/1 tongue: a fixed point exists
        let f = SineFamily { omega: 0.05, amplitude: 0.1 };
        let est = rotation_number(&f, 1e-10, 10_000);
        assert_eq!(est.rho, 0.0);
        assert!(est.cf_prefix.is_exhausted());
    }

    #[test]
    fn rigid_golden_to_tolerance() {
        let est = rotation_number(&RigidRotation::new(GOLDEN), 1e-9, 100_000);
        assert!(est.tol_reached);
        assert!((est.rho - GOLDEN).abs() <= est.error_bound);
        assert!((est.rho - GOLDEN).abs() < 1e-9);
        let reference = cf_of_real(est.rho, 40, DEFAULT_FLOOR_EPS).unwrap();
        assert!(est.cf_prefix.agrees_with(&reference) || reference.common_prefix(&est.cf_prefix) >= 10);
    }

    #[test]
    fn birkhoff_fallback_on_tiny_budget() {
        let est = rotation_number(&RigidRotation::new(0.01), 1e-12, 5);
        assert_eq!(est.method, EstimateMethod::Birkhoff);
        assert!((est.rho - 0.01).abs() <= est.error_bound);
        assert!(!est.tol_reached);
    }

    #[test]
    fn budget_is_flagged() {
        let cr = closest_returns(&RigidRotation::new(GOLDEN), 40, 100);
        assert_eq!(cr.status, ReturnStatus::Budget);
        assert!(cr.deepest().q <= 100);
    }
}
