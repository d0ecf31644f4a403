//! Phase tuning in rotated families `x -> F(x) + theta`.
//!
//! The rotation number is non-decreasing in `theta`, and for an irrational
//! target there is a unique `theta` realising it. Bisection decides each
//! candidate by signs only: for the target's convergents `p_k/q_k` the
//! displacement `F^{q_k}(0) - p_k` of the tuned map must be positive for even
//! `k` and negative for odd `k`. The first level with the wrong sign tells
//! on which side of the target the candidate's rotation number lies.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::BlaschkeFraction;
use crate::circlemap::{
    closest_returns, iterate, rotation_number, CircleLift, Orbit, RotationEstimate, Shifted,
};
use crate::contfrac::{ContinuedFraction, Convergent};
use crate::error::{Error, Result};
use crate::PRECISION_FLOOR;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    /// Stop once the bracket is narrower than this.
    pub tol_theta: f64,
    /// The target must supply at least this many terms.
    pub min_depth: usize,
    /// Longest orbit used for a single sign test.
    pub max_orbit: u64,
    /// Tolerance requested from the independent rotation-number estimate.
    pub rho_tol: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self { tol_theta: 1e-10, min_depth: 1, max_orbit: 2_000_000, rho_tol: 1e-12 }
    }
}

/// Outcome of comparing one candidate phase with the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Rotation number below the target: increase theta.
    Below,
    /// Rotation number above the target: decrease theta.
    Above,
    /// Signs agree at every level that could be tested.
    Undecided(TuneLimit),
}

/// Why bisection stopped before reaching `tol_theta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TuneLimit {
    /// Every available target term (or the orbit budget) was consumed.
    DepthExhausted { level: usize },
    /// A displacement fell under the precision floor.
    PrecisionFloor { level: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub theta: f64,
    pub bracket: (f64, f64),
    pub bisection_steps: usize,
    /// Leading terms of the tuned map's closest-return expansion that agree
    /// with the target.
    pub certified_levels: usize,
    pub limit: Option<TuneLimit>,
    pub achieved: RotationEstimate,
}

pub(crate) fn compare(
    base: &dyn CircleLift,
    theta: f64,
    convergents: &[Convergent],
    max_orbit: u64,
) -> Side {
    let f = Shifted { base, shift: theta };
    let mut orbit = Orbit::new(&f);
    for c in convergents {
        let q = c.q as u64;
        if q > max_orbit {
            return Side::Undecided(TuneLimit::DepthExhausted { level: c.index });
        }
        let d = orbit.at(q).minus(c.p as i64);
        let target_above = c.index % 2 == 0;
        if d.abs() <= PRECISION_FLOOR || (d > 0.0) != target_above {
            return if target_above { Side::Below } else { Side::Above };
        }
    }
    Side::Undecided(TuneLimit::DepthExhausted { level: convergents.len() })
}

fn check_target(target: &ContinuedFraction, min_depth: usize) -> Result<()> {
    if target.is_rational() {
        return Err(Error::Domain(
            "target rotation number is rational: the phase is not unique".into(),
        ));
    }
    if target.len() < min_depth {
        return Err(Error::InsufficientTerms { requested: min_depth, available: target.len() });
    }
    Ok(())
}

/// Finds the phase at which `base + theta` has rotation number `target`.
pub fn tune_phase(
    base: &dyn CircleLift,
    target: &ContinuedFraction,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    check_target(target, opts.min_depth)?;
    let conv = target.convergents(target.len())?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 0;
    let mut limit = None;
    while hi - lo > opts.tol_theta {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        steps += 1;
        match compare(base, mid, &conv.items, opts.max_orbit) {
            Side::Below => lo = mid,
            Side::Above => hi = mid,
            Side::Undecided(l) => {
                limit = Some(l);
                break;
            }
        }
    }
    let theta = 0.5 * (lo + hi);
    let tuned = Shifted { base, shift: theta };
    let cr = closest_returns(&tuned, target.len(), opts.max_orbit);
    let certified_levels = target.common_prefix(&cr.cf());
    let achieved = rotation_number(&tuned, opts.rho_tol, opts.max_orbit);
    Ok(TuneResult { theta, bracket: (lo, hi), bisection_steps: steps, certified_levels, limit, achieved })
}

/// Tunes the rotated model `e^{2 pi i theta} B_n` to `target`.
///
/// `depth` is the minimum number of target terms; every available term is
/// used for the sign tests.
pub fn tune_theta(
    n: u32,
    target: &ContinuedFraction,
    tol_theta: f64,
    depth: usize,
) -> Result<(TuneResult, Arc<super::BlaschkeLift>)> {
    let lift = BlaschkeFraction::build(n)?.circle_lift()?;
    let opts = TuneOptions { tol_theta, min_depth: depth, ..TuneOptions::default() };
    let res = tune_phase(&lift, target, &opts)?;
    let tuned = Arc::new(lift.with_theta(res.theta));
    Ok((res, tuned))
}

/// A phase where the critical point is periodic with the given combinatorics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicRoot {
    pub theta: f64,
    pub q: u64,
    pub p: i64,
    /// `|F_theta^q(0) - p|` at the returned phase.
    pub residual: f64,
}

const ROOT_RESIDUAL: f64 = 1e-12;

/// Solves `(base + theta)^q(0) = p` for `theta` in `[0, 1]` by bisection; the
/// left side is increasing in `theta`.
pub fn solve_periodic_phase(base: &dyn CircleLift, q: u64, p: i64) -> Result<PeriodicRoot> {
    let residual = |theta: f64| iterate(&Shifted { base, shift: theta }, 0.0, q, p);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut f_lo, mut f_hi) = (residual(lo), residual(hi));
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::NotBracketed { lo, hi });
    }
    while f_lo != 0.0 && f_hi != 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = residual(mid);
        if f_mid < 0.0 {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
    }
    let (theta, r) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    Ok(PeriodicRoot { theta, q, p, residual: r.abs() })
}

/// Phase `theta_m` of the model `B_n` at which the critical point has period
/// `q_m` with rotation `p_m/q_m`, the `m`-th convergent of `target`.
///
/// Refused with [`Error::PrecisionFloor`] when the best double-precision
/// root leaves a residual above `1e-12`.
pub fn solve_theta_periodic(n: u32, target: &ContinuedFraction, m: usize) -> Result<PeriodicRoot> {
    let lift = BlaschkeFraction::build(n)?.circle_lift()?;
    periodic_root_for_level(&lift, target, m)
}

pub(crate) fn periodic_root_for_level(
    base: &dyn CircleLift,
    target: &ContinuedFraction,
    m: usize,
) -> Result<PeriodicRoot> {
    if m == 0 {
        return Err(Error::Domain("periodic phases are indexed from level 1".into()));
    }
    let conv = target.convergents(m)?;
    let c = conv.items.last().ok_or(Error::InsufficientTerms { requested: m, available: 0 })?;
    let root = solve_periodic_phase(base, c.q as u64, c.p as i64)?;
    if root.residual > ROOT_RESIDUAL {
        return Err(Error::PrecisionFloor { level: m });
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::RigidRotation;

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    #[test]
    fn rigid_family_tunes_to_target() {
        let base = RigidRotation::new(0.0);
        let opts = TuneOptions { tol_theta: 1e-12, ..TuneOptions::default() };
        let res = tune_phase(&base, &ContinuedFraction::golden(60), &opts).unwrap();
        assert!((res.theta - GOLDEN).abs() < 1e-11);
    }

    #[test]
    fn rational_target_rejected() {
        let base = RigidRotation::new(0.0);
        let target = ContinuedFraction::from_terms(&[1, 2]).unwrap();
        assert!(matches!(
            tune_phase(&base, &target, &TuneOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn short_target_rejected() {
        let base = RigidRotation::new(0.0);
        let opts = TuneOptions { min_depth: 12, ..TuneOptions::default() };
        assert_eq!(
            tune_phase(&base, &ContinuedFraction::golden(5), &opts),
            Err(Error::InsufficientTerms { requested: 12, available: 5 })
        );
    }

    #[test]
    fn shallow_target_limits_bracket() {
        let base = RigidRotation::new(0.0);
        let opts = TuneOptions { tol_theta: 1e-12, ..TuneOptions::default() };
        let res = tune_phase(&base, &ContinuedFraction::golden(6), &opts).unwrap();
        assert!(matches!(res.limit, Some(TuneLimit::DepthExhausted { .. })));
        assert!(res.bracket.1 - res.bracket.0 > 1e-12);
        assert!(res.bracket.0 <= GOLDEN && GOLDEN <= res.bracket.1);
    }

    #[test]
    fn compare_sides() {
        let base = RigidRotation::new(0.0);
        let conv = ContinuedFraction::golden(20).convergents(20).unwrap();
        assert_eq!(compare(&base, 0.5, &conv.items, 1000), Side::Below);
        assert_eq!(compare(&base, 0.7, &conv.items, 1000), Side::Above);
    }

    #[test]
    fn rigid_periodic_phase_is_the_fraction() {
        let base = RigidRotation::new(0.0);
        let root = solve_periodic_phase(&base, 5, 3).unwrap();
        assert!((root.theta - 0.6).abs() < 1e-15);
        assert!(root.residual < 1e-12);
        assert!(matches!(solve_periodic_phase(&base, 2, 3), Err(Error::NotBracketed { .. })));
    }

    #[test]
    fn first_cubic_periodic_phase() {
        // q = 1, p = 1: F_theta(0) = theta = 1
        let root = solve_theta_periodic(3, &ContinuedFraction::golden(5), 1).unwrap();
        assert_eq!(root.theta, 1.0);
        assert_eq!(root.residual, 0.0);
    }
}
