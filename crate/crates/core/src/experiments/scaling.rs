//! Scaling ratios of closest returns, cross-family comparison and
//! convergence of renormalizations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circlemap::{closest_returns, CircleLift, ResolvedFamily};
use crate::contfrac::ContinuedFraction;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pairs::{c0_distance, CommutingPair, C0_SAMPLES};
use crate::PRECISION_FLOOR;

/// A ratio counts as determined by the tuning while the two ends of the
/// tuning bracket move it by less than this relative amount.
pub const RATIO_RESOLUTION: f64 = 1e-3;

/// A distance counts as determined while the tuning uncertainty stays below
/// this fraction of it.
pub const DISTANCE_RESOLUTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRatios {
    /// `s_1, s_2, ...` with `s_m = |I_(m+1)| / |I_m|`.
    pub ratios: Vec<f64>,
    /// Why fewer ratios than requested were produced.
    pub stopped: Option<String>,
}

/// `s_m = |F^(q_(m+1))(0) - p_(m+1)| / |F^(q_m)(0) - p_m|` for
/// `m = 1..=depth`, stopping where an interval falls under the precision
/// floor or the orbit budget runs out.
pub fn scaling_ratios(map: &dyn CircleLift, depth: usize, max_orbit: u64) -> ScalingRatios {
    let cr = closest_returns(map, depth + 1, max_orbit);
    let lens: Vec<f64> = cr
        .levels
        .iter()
        .map(|c| c.distance.abs())
        .take_while(|&d| d > PRECISION_FLOOR)
        .collect();
    let ratios: Vec<f64> = (1..=depth).take_while(|&m| m + 1 < lens.len()).map(|m| lens[m + 1] / lens[m]).collect();
    let stopped = (ratios.len() < depth).then(|| {
        if lens.len() < cr.levels.len() {
            Error::PrecisionFloor { level: lens.len() }.to_string()
        } else {
            format!("closest returns stopped at level {} ({:?})", cr.levels.len() - 1, cr.status)
        }
    });
    ScalingRatios { ratios, stopped }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRatios {
    pub label: String,
    pub ratios: Vec<f64>,
    /// Leading closest-return terms that agree with the target.
    pub combinatorics_depth: usize,
    /// Number of leading ratios that are certified.
    pub certified: usize,
    pub stopped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub exponent: Option<u32>,
    pub target: ContinuedFraction,
    pub families: Vec<FamilyRatios>,
    /// `(max - min) / min` of the ratios across families, by level, on the
    /// commonly certified range.
    pub discrepancy: Vec<f64>,
    /// Number of levels certified for every family.
    pub certified_depth: usize,
    /// C0 distance between the level-`m` pairs of the first family and each
    /// other family, on the certified range.
    pub pair_distances: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniversalityOptions {
    pub depth: usize,
    pub max_orbit: u64,
    /// Grid for the pair distances; 0 skips them.
    pub samples: usize,
}

impl Default for UniversalityOptions {
    fn default() -> Self {
        Self { depth: 20, max_orbit: 2_000_000, samples: C0_SAMPLES }
    }
}

/// Ratios of one family with their certified range.
pub fn family_ratios(
    family: &ResolvedFamily,
    target: &ContinuedFraction,
    depth: usize,
    max_orbit: u64,
) -> FamilyRatios {
    let main = scaling_ratios(family.map.as_ref(), depth, max_orbit);
    let combinatorics_depth =
        target.common_prefix(&closest_returns(family.map.as_ref(), depth + 1, max_orbit).cf());
    // s_m involves levels m and m+1, i.e. the terms up to r_m
    let mut certified = main.ratios.len().min(combinatorics_depth.saturating_sub(1));
    if let Some([lo, hi]) = &family.bracket {
        let a = scaling_ratios(lo.as_ref(), depth, max_orbit).ratios;
        let b = scaling_ratios(hi.as_ref(), depth, max_orbit).ratios;
        let resolved = main
            .ratios
            .iter()
            .zip(a.iter().zip(&b))
            .take_while(|(s, (x, y))| (*x - *y).abs() <= RATIO_RESOLUTION * **s)
            .count();
        certified = certified.min(resolved);
    }
    FamilyRatios {
        label: family.label(),
        ratios: main.ratios,
        combinatorics_depth,
        certified,
        stopped: main.stopped,
    }
}

/// Relative spread `(max - min) / min` of the ratios across families at each
/// level shared by all of them. No exponent or certification checks.
pub fn discrepancy_by_level(families: &[FamilyRatios], levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|m| {
            let vals = families.iter().filter_map(|f| f.ratios.get(m).copied());
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            (hi - lo) / lo
        })
        .collect()
}

/// Compares scaling ratios and level pairs of several families tuned to the
/// same target.
pub fn universality_compare(
    families: &[ResolvedFamily],
    target: &ContinuedFraction,
    opts: &UniversalityOptions,
    exec: Exec,
) -> Result<UniversalityReport> {
    if families.len() < 2 {
        return Err(Error::Domain("universality needs at least two families".into()));
    }
    let exponent = families[0].map.exponent();
    if let Some(f) = families.iter().find(|f| f.map.exponent() != exponent) {
        return Err(Error::Domain(format!(
            "critical exponents differ: {:?} for {} and {:?} for {}",
            exponent,
            families[0].label(),
            f.map.exponent(),
            f.label()
        )));
    }
    let rows = exec.map(families.iter().collect(), |f| family_ratios(f, target, opts.depth, opts.max_orbit));
    let certified_depth = rows.iter().map(|r| r.certified).min().unwrap_or(0);
    let discrepancy = discrepancy_by_level(&rows, certified_depth);
    let pair_distances = if opts.samples == 0 {
        Vec::new()
    } else {
        families[1..]
            .iter()
            .map(|other| level_distances(&families[0].map, &other.map, certified_depth, opts, exec))
            .collect::<Result<_>>()?
    };
    Ok(UniversalityReport { exponent, target: target.clone(), families: rows, discrepancy, certified_depth, pair_distances })
}

fn level_distances(
    a: &Arc<dyn CircleLift>,
    b: &Arc<dyn CircleLift>,
    levels: usize,
    opts: &UniversalityOptions,
    exec: Exec,
) -> Result<Vec<f64>> {
    (0..levels)
        .map(|m| {
            let pa = CommutingPair::from_circle_map(a.clone(), m, opts.max_orbit)?;
            let pb = CommutingPair::from_circle_map(b.clone(), m, opts.max_orbit)?;
            Ok(c0_distance(&pa, &pb, opts.samples, exec))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub depth: usize,
    pub samples: usize,
    pub max_orbit: u64,
    /// Stop after the first level whose distance the tuning does not
    /// determine.
    pub stop_when_unresolved: bool,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { depth: 30, samples: C0_SAMPLES, max_orbit: 2_000_000, stop_when_unresolved: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub height: u64,
    pub distance: f64,
    /// Distance between the renormalizations of the bracket ends, summed over
    /// both families.
    pub uncertainty: f64,
    pub resolved: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Last level of the leading run of resolved levels.
    pub certified_depth: Option<usize>,
    pub stopped: Option<String>,
}

impl ConvergenceReport {
    pub fn distances(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.distance).collect()
    }
}

/// Renormalization orbit of the level-0 pair of a map and, when tuned, of
/// its bracket ends.
struct Orbits {
    pairs: Vec<CommutingPair>,
}

impl Orbits {
    fn new(family: &ResolvedFamily, max_orbit: u64) -> Result<Self> {
        let mut maps = vec![family.map.clone()];
        if let Some([lo, hi]) = &family.bracket {
            maps.push(lo.clone());
            maps.push(hi.clone());
        }
        let pairs = maps
            .into_iter()
            .map(|m| CommutingPair::from_circle_map(m, 0, max_orbit))
            .collect::<Result<_>>()?;
        Ok(Self { pairs })
    }

    fn height(&self) -> Result<u64> {
        let p = &self.pairs[0];
        p.height(p.height_cap())?.finite().ok_or(Error::NotRenormalizable)
    }

    fn advance(&mut self) -> Result<()> {
        self.pairs = self.pairs.iter().map(|p| p.renormalize()).collect::<Result<_>>()?;
        Ok(())
    }

    fn uncertainty(&self, samples: usize, exec: Exec) -> f64 {
        match &self.pairs[..] {
            [_, lo, hi] => c0_distance(lo, hi, samples, exec),
            _ => 0.0,
        }
    }
}

/// `c0_distance(R^m a, R^m b)` along the renormalization orbits of the
/// level-0 pairs of two maps.
pub fn renorm_convergence(
    a: &ResolvedFamily,
    b: &ResolvedFamily,
    opts: &ConvergenceOptions,
    exec: Exec,
) -> Result<ConvergenceReport> {
    if a.map.exponent() != b.map.exponent() {
        return Err(Error::Domain(format!(
            "critical exponents differ: {:?} and {:?}",
            a.map.exponent(),
            b.map.exponent()
        )));
    }
    let mut oa = Orbits::new(a, opts.max_orbit)?;
    let mut ob = Orbits::new(b, opts.max_orbit)?;
    let mut levels = Vec::new();
    let mut certified_depth = None;
    let mut stopped = None;
    for m in 0..=opts.depth {
        if m > 0 {
            if let Err(e) = oa.advance().and_then(|_| ob.advance()) {
                stopped = Some(e.to_string());
                break;
            }
        }
        let height = match (oa.height(), ob.height()) {
            (Ok(x), Ok(y)) if x == y => x,
            (Ok(x), Ok(y)) => {
                stopped = Some(format!("heights differ at level {m}: {x} and {y}"));
                break;
            }
            (Err(e), _) | (_, Err(e)) => {
                stopped = Some(e.to_string());
                break;
            }
        };
        let distance = c0_distance(&oa.pairs[0], &ob.pairs[0], opts.samples, exec);
        let uncertainty = oa.uncertainty(opts.samples, exec) + ob.uncertainty(opts.samples, exec);
        let resolved = distance == 0.0 || uncertainty <= DISTANCE_RESOLUTION * distance;
        if resolved && certified_depth == m.checked_sub(1) {
            certified_depth = Some(m);
        }
        levels.push(ConvergenceLevel { level: m, height, distance, uncertainty, resolved });
        if !resolved && opts.stop_when_unresolved {
            stopped = Some(format!("level {m} is not resolved by the tuning"));
            break;
        }
    }
    Ok(ConvergenceReport { levels, certified_depth, stopped })
}
