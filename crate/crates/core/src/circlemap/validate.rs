use serde::{Deserialize, Serialize};

use super::CircleLift;

/// Result of [`validate`]. A map whose `passes` is false should not be used
/// for closest-return or renormalization work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub grid: usize,
    /// Largest `|F(x+1) - F(x) - 1| / max(1, |F(x)|)` on the grid.
    pub periodicity_residual: f64,
    /// Smallest derivative on the grid outside the critical neighbourhood.
    pub min_derivative: f64,
    pub min_derivative_at: f64,
    /// Smallest derivative anywhere on the grid (should be `>= 0` up to noise).
    pub min_derivative_overall: f64,
    pub fitted_exponent: Option<f64>,
    pub declared_exponent: Option<u32>,
    pub noncritical: bool,
    /// `0 < F(0) < 1`.
    pub normalized: bool,
    pub periodic_ok: bool,
    pub monotone_ok: bool,
    pub exponent_ok: bool,
    pub passes: bool,
}

/// Half-width of the neighbourhood of each integer excluded from the strict
/// positivity test of the derivative.
pub const CRITICAL_EXCLUSION: f64 = 1e-3;

const PERIODICITY_TOL: f64 = 1e-12;
const EXPONENT_TOL: f64 = 0.1;

/// Central difference with step `eps^(1/3) * max(1, |x|)`.
///
/// Near an integer the difference is taken on [`CircleLift::critical_offset`]
/// so that the tiny increments at a high-order critical point are resolved.
pub fn central_derivative(map: &dyn CircleLift, x: f64) -> f64 {
    let h = f64::EPSILON.cbrt() * x.abs().max(1.0);
    let k = x.round();
    let local = x - k;
    if local.abs() < 0.05 {
        let hl = f64::EPSILON.cbrt();
        (map.critical_offset(local + hl) - map.critical_offset(local - hl)) / (2.0 * hl)
    } else {
        (map.lift(x + h) - map.lift(x - h)) / (2.0 * h)
    }
}

/// Least-squares slope of `log|F(x) - F(0)|` against `log|x|` over
/// `x = ±1e-2, ±1e-3, ±1e-4`.
pub fn fit_critical_exponent(map: &dyn CircleLift) -> f64 {
    let mut pts = Vec::with_capacity(6);
    for &x in &[1e-2, 1e-3, 1e-4] {
        for s in [1.0, -1.0] {
            let dy = map.critical_offset(s * x).abs();
            if dy > 0.0 {
                pts.push(((x as f64).ln(), dy.ln()));
            }
        }
    }
    least_squares_slope(&pts)
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Checks periodicity, monotonicity and the critical exponent on a grid of
/// `grid` points in `[0, 1)`.
pub fn validate(map: &dyn CircleLift, grid: usize) -> Diagnostics {
    assert!(grid >= 64, "validation grid must have at least 64 points");
    let declared = map.exponent();
    let mut periodicity_residual = 0.0f64;
    let mut min_derivative = f64::INFINITY;
    let mut min_derivative_at = 0.0;
    let mut min_overall = f64::INFINITY;
    for i in 0..grid {
        let x = i as f64 / grid as f64;
        let fx = map.lift(x);
        let r = (map.lift(x + 1.0) - fx - 1.0).abs() / fx.abs().max(1.0);
        let r_back = (map.lift(x - 1.0) - fx + 1.0).abs() / fx.abs().max(1.0);
        periodicity_residual = periodicity_residual.max(r).max(r_back);

        let d = central_derivative(map, x);
        min_overall = min_overall.min(d);
        let near_integer = (x - x.round()).abs() < CRITICAL_EXCLUSION;
        if declared.is_none() || !near_integer {
            if d < min_derivative {
                min_derivative = d;
                min_derivative_at = x;
            }
        }
    }
    let f0 = map.lift(0.0);
    let fitted = declared.map(|_| fit_critical_exponent(map));
    let periodic_ok = periodicity_residual <= PERIODICITY_TOL;
    // noise allowance for the derivative inside the critical neighbourhood
    let monotone_ok = min_derivative > 0.0 && min_overall > -1e-6;
    let exponent_ok = match (declared, fitted) {
        (Some(n), Some(s)) => (s - n as f64).abs() <= EXPONENT_TOL,
        (None, _) => true,
        _ => false,
    };
    Diagnostics {
        grid,
        periodicity_residual,
        min_derivative,
        min_derivative_at,
        min_derivative_overall: min_overall,
        fitted_exponent: fitted,
        declared_exponent: declared,
        noncritical: declared.is_none(),
        normalized: f0 > 0.0 && f0 < 1.0,
        periodic_ok,
        monotone_ok,
        exponent_ok,
        passes: periodic_ok && monotone_ok && exponent_ok,
    }
}

/// Nearest odd integer, for comparing a fitted slope with a declared exponent.
pub fn nearest_odd(x: f64) -> i64 {
    let k = ((x - 1.0) / 2.0).round();
    (2.0 * k + 1.0) as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::{ArnoldFamily, RigidRotation, SineFamily};

    #[test]
    fn rigid_rotation_is_noncritical() {
        let d = validate(&RigidRotation::new(0.3), 128);
        assert!(d.periodicity_residual < 1e-15);
        assert!((d.min_derivative - 1.0).abs() < 1e-9);
        assert!(d.noncritical);
        assert!(d.fitted_exponent.is_none());
        assert!(d.passes);
    }

    #[test]
    fn small_sine_perturbation_passes() {
        // derivative 1 + 0.2 pi cos(2 pi x) >= 1 - 0.2 pi > 0.37
        let d = validate(&SineFamily { omega: 0.5, amplitude: 0.1 }, 256);
        assert!(d.passes);
        assert!(d.min_derivative > 1.0 - 0.2 * std::f64::consts::PI - 1e-6);
        assert!(d.noncritical);
    }

    #[test]
    fn large_sine_perturbation_fails_monotonicity() {
        // derivative dips to 1 - 0.4 pi < 0
        let d = validate(&SineFamily { omega: 0.5, amplitude: 0.2 }, 256);
        assert!(!d.monotone_ok);
        assert!(!d.passes);
    }

    #[test]
    fn arnold_family_is_cubic() {
        let d = validate(&ArnoldFamily { theta: 0.4 }, 256);
        assert!(d.passes, "{d:?}");
        let s = d.fitted_exponent.unwrap();
        assert!((s - 3.0).abs() < 0.1);
        assert_eq!(nearest_odd(s), 3);
    }

    #[test]
    fn odd_rounding() {
        assert_eq!(nearest_odd(2.95), 3);
        assert_eq!(nearest_odd(4.2), 5);
        assert_eq!(nearest_odd(1.1), 1);
    }

    #[test]
    #[should_panic]
    fn tiny_grid_rejected() {
        validate(&RigidRotation::new(0.3), 10);
    }
}
