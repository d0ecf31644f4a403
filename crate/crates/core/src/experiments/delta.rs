//! Parameter scaling of the periodic phases `theta_m`.

use serde::{Deserialize, Serialize};

use crate::blaschke::tuning::{periodic_root_for_level, tune_phase, PeriodicRoot, TuneOptions};
use crate::blaschke::BlaschkeFraction;
use crate::contfrac::ContinuedFraction;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::PRECISION_FLOOR;

/// Successive ratios closer than this (relative) count as stabilized.
pub const STABILIZATION_TOL: f64 = 0.01;

/// Longest period solved for; each bisection step iterates this many times.
pub const MAX_PERIOD: u64 = 2_000_000;

/// Levels solved together; the search stops after the first batch with a
/// failure.
const BATCH: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRatio {
    pub m: usize,
    /// `(theta_m - theta_(m-1)) / (theta_(m+1) - theta_m)`.
    pub d: f64,
    /// `|d_m - d_(m-1)| / |d_m|`.
    pub relative_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub n: u32,
    pub target: ContinuedFraction,
    /// `theta_1, theta_2, ...` as far as they could be resolved.
    pub roots: Vec<PeriodicRoot>,
    pub ratios: Vec<DeltaRatio>,
    /// First `m` from which every relative change is under
    /// [`STABILIZATION_TOL`].
    pub stabilized_at: Option<usize>,
    /// Phase tuned to the target itself.
    pub theta_star: f64,
    /// `theta_m - theta_star` changes sign at every step.
    pub alternates: bool,
    /// `|theta_m - theta_star|` decreases at every step.
    pub approaches: bool,
    pub stopped: Option<String>,
}

/// Periodic phases `theta_1..theta_depth` of `B_n` along the convergents of
/// `target`, and the ratios of their successive differences.
pub fn delta_estimate(n: u32, target: &ContinuedFraction, depth: usize, exec: Exec) -> Result<DeltaReport> {
    let lift = BlaschkeFraction::build(n)?.circle_lift()?;
    let opts = TuneOptions { tol_theta: 0.0, ..TuneOptions::default() };
    let theta_star = tune_phase(&lift, target, &opts)?.theta;
    let conv = target.convergents(depth.min(target.len()))?;
    let solve = |m: usize| -> Result<PeriodicRoot> {
        match conv.items.get(m - 1) {
            Some(c) if c.q as u64 > MAX_PERIOD => Err(Error::Budget { budget: MAX_PERIOD, level: m }),
            _ => periodic_root_for_level(&lift, target, m),
        }
    };
    let mut roots = Vec::new();
    let mut stopped = None;
    let mut next = 1;
    while next <= depth && stopped.is_none() {
        let batch: Vec<usize> = (next..=depth.min(next + BATCH - 1)).collect();
        next += batch.len();
        for r in exec.map(batch, solve) {
            match r {
                Ok(root) => roots.push(root),
                Err(e) => {
                    stopped = Some(e.to_string());
                    break;
                }
            }
        }
    }
    let th: Vec<f64> = roots.iter().map(|r| r.theta).collect();
    let mut ratios: Vec<DeltaRatio> = Vec::new();
    for i in 1..th.len().saturating_sub(1) {
        let (before, after) = (th[i] - th[i - 1], th[i + 1] - th[i]);
        if before.abs() <= PRECISION_FLOOR || after.abs() <= PRECISION_FLOOR {
            stopped.get_or_insert_with(|| format!("phase differences reach the precision floor at m = {}", i + 1));
            break;
        }
        let d = before / after;
        let relative_change = ratios.last().map(|p| (d - p.d).abs() / d.abs());
        ratios.push(DeltaRatio { m: i + 1, d, relative_change });
    }
    let stabilized_at = ratios
        .iter()
        .rposition(|r| r.relative_change.map_or(true, |c| c >= STABILIZATION_TOL))
        .map_or(ratios.first().map(|r| r.m), |k| ratios.get(k + 1).map(|r| r.m));
    let offsets: Vec<f64> = th.iter().map(|t| t - theta_star).collect();
    let alternates = offsets.windows(2).all(|w| w[0] * w[1] < 0.0);
    let approaches = offsets.windows(2).all(|w| w[1].abs() < w[0].abs());
    Ok(DeltaReport { n, target: target.clone(), roots, ratios, stabilized_at, theta_star, alternates, approaches, stopped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_golden_phases() {
        let r = delta_estimate(3, &ContinuedFraction::golden(64), 10, Exec::Sequential).unwrap();
        assert_eq!(r.roots.len(), 10);
        assert_eq!(r.roots[0].theta, 1.0);
        assert!(r.alternates && r.approaches);
        // successive differences alternate in sign
        assert!(r.ratios.iter().all(|d| d.d < 0.0));
    }

    #[test]
    fn rational_target_rejected() {
        let t = ContinuedFraction::from_terms(&[1, 1, 2]).unwrap();
        assert!(delta_estimate(3, &t, 3, Exec::Sequential).is_err());
    }
}
