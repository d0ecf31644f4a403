//! Critical commuting pairs and their renormalization.
//!
//! A pair `(eta, xi)` lives on `I_eta = [0, xi(0)]` and `I_xi = [eta(0), 0]`,
//! where `xi(0)` and `eta(0)` have opposite signs. Intervals are unordered,
//! so pairs read off a circle map at odd levels (where `xi(0) < 0`) are valid
//! as they stand. Renormalization rescales by `1/xi(0)` of the
//! pre-renormalized pair, so every renormalized pair has `xi(0) = 1` and
//! `eta(0) < 0`.
//!
//! The maps are expression trees over one base lift. Iterates compose as
//! `(F^a - s) o (F^b - t) = F^(a+b) - (s+t)` and rescalings by the same
//! factor commute with composition, so the trees built by renormalization
//! collapse to a single rescaled iterate with exact integer combinatorics.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circlemap::{closest_returns, iterate, CircleLift, ReturnStatus};
use crate::circlemap::validate::least_squares_slope;
use crate::contfrac::ContinuedFraction;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::PRECISION_FLOOR;

/// Composition tree of iterates of base lifts.
#[derive(Clone)]
pub enum MapExpr {
    /// `x -> F^count(x) - shift`.
    Iterate { base: Arc<dyn CircleLift>, count: u64, shift: i64 },
    /// `outer o inner`.
    Compose { outer: Box<MapExpr>, inner: Box<MapExpr> },
    /// `x -> factor * inner(x / factor)`.
    Rescale { factor: f64, inner: Box<MapExpr> },
}

impl fmt::Debug for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapExpr::Iterate { base, count, shift } => {
                write!(f, "[{}]^{count} - {shift}", base.label())
            }
            MapExpr::Compose { outer, inner } => write!(f, "({outer:?}) o ({inner:?})"),
            MapExpr::Rescale { factor, inner } => write!(f, "rescale[{factor}]({inner:?})"),
        }
    }
}

fn same_base(a: &Arc<dyn CircleLift>, b: &Arc<dyn CircleLift>) -> bool {
    std::ptr::eq(Arc::as_ptr(a) as *const (), Arc::as_ptr(b) as *const ())
}

impl MapExpr {
    pub fn iterate(base: Arc<dyn CircleLift>, count: u64, shift: i64) -> Self {
        MapExpr::Iterate { base, count, shift }
    }

    /// `outer o inner`, collapsing iterates of a shared base and matching
    /// rescalings.
    pub fn compose(outer: &MapExpr, inner: &MapExpr) -> Self {
        match (outer, inner) {
            (
                MapExpr::Iterate { base: b1, count: c1, shift: s1 },
                MapExpr::Iterate { base: b2, count: c2, shift: s2 },
            ) if same_base(b1, b2) => {
                MapExpr::Iterate { base: b1.clone(), count: c1 + c2, shift: s1 + s2 }
            }
            (
                MapExpr::Rescale { factor: f1, inner: a },
                MapExpr::Rescale { factor: f2, inner: b },
            ) if f1 == f2 => MapExpr::Rescale { factor: *f1, inner: Box::new(MapExpr::compose(a, b)) },
            _ => MapExpr::Compose { outer: Box::new(outer.clone()), inner: Box::new(inner.clone()) },
        }
    }

    /// `self` composed with itself `r` times (`r >= 1`).
    pub fn power(&self, r: u64) -> Self {
        assert!(r >= 1);
        let mut acc = self.clone();
        for _ in 1..r {
            acc = MapExpr::compose(self, &acc);
        }
        acc
    }

    /// Conjugation by `x -> factor * x`.
    pub fn rescaled(&self, factor: f64) -> Self {
        match self {
            MapExpr::Rescale { factor: f, inner } => {
                MapExpr::Rescale { factor: f * factor, inner: inner.clone() }
            }
            other => MapExpr::Rescale { factor, inner: Box::new(other.clone()) },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MapExpr::Iterate { base, count, shift } => iterate(base.as_ref(), x, *count, *shift),
            MapExpr::Compose { outer, inner } => outer.eval(inner.eval(x)),
            MapExpr::Rescale { factor, inner } => factor * inner.eval(x / factor),
        }
    }

    /// Total number of base-map evaluations per call.
    pub fn total_iterates(&self) -> u64 {
        match self {
            MapExpr::Iterate { count, .. } => *count,
            MapExpr::Compose { outer, inner } => outer.total_iterates() + inner.total_iterates(),
            MapExpr::Rescale { inner, .. } => inner.total_iterates(),
        }
    }

    /// `(count, shift, factor)` when the tree is a single, possibly rescaled,
    /// iterate.
    pub fn as_iterate(&self) -> Option<(u64, i64, f64)> {
        match self {
            MapExpr::Iterate { count, shift, .. } => Some((*count, *shift, 1.0)),
            MapExpr::Rescale { factor, inner } => {
                inner.as_iterate().map(|(c, s, f)| (c, s, f * factor))
            }
            MapExpr::Compose { .. } => None,
        }
    }
}

/// A map together with its closed domain `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct IntervalMap {
    pub expr: MapExpr,
    pub domain: (f64, f64),
}

impl IntervalMap {
    pub fn new(expr: MapExpr, a: f64, b: f64) -> Self {
        Self { expr, domain: (a.min(b), a.max(b)) }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.expr.eval(x)
    }

    pub fn len(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0.0
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.domain.0 - slack && x <= self.domain.1 + slack
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// Closest-return level the pair was read off at.
    pub level: usize,
    /// Renormalizations applied since.
    pub renormalizations: usize,
}

#[derive(Clone, Debug)]
pub struct CommutingPair {
    pub eta: IntervalMap,
    pub xi: IntervalMap,
    /// `None` for the noncritical pairs of rigid rotations.
    pub exponent: Option<u32>,
    pub provenance: Provenance,
    /// Product of the rescaling factors applied since extraction; lengths
    /// divided by `|scale|` are lengths on the original line.
    pub scale: f64,
    /// Largest total iterate count allowed for a map produced by
    /// pre-renormalization.
    pub iterate_budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Height {
    Finite(u64),
    /// `eta` has a fixed point in `I_eta`; the pair is not renormalizable.
    Infinite { fixed_point: f64 },
}

impl Height {
    pub fn finite(self) -> Option<u64> {
        match self {
            Height::Finite(r) => Some(r),
            Height::Infinite { .. } => None,
        }
    }
}

/// Numerical check of the defining properties of a commuting pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    /// `xi(0)` and `eta(0)` are nonzero with opposite signs.
    pub domains_ok: bool,
    /// `max |eta(xi(x)) - xi(eta(x))|` near 0, relative to the domain scale.
    pub commutation_residual: f64,
    pub commutation_ok: bool,
    /// `xi(eta(0))` lies in `I_eta`.
    pub return_ok: bool,
    pub min_derivative: f64,
    pub derivative_ok: bool,
    pub fitted_exponent_eta: Option<f64>,
    pub fitted_exponent_xi: Option<f64>,
    pub criticality_ok: bool,
    pub passes: bool,
}

const COMMUTATION_TOL: f64 = 1e-10;
const PAIR_EXPONENT_TOL: f64 = 0.25;
/// Base-map evaluations allowed for one height computation.
pub const HEIGHT_BUDGET: u64 = 20_000_000;
/// Default for [`CommutingPair::iterate_budget`]: base-map evaluations per
/// call of a pair map built by renormalization.
pub const PAIR_ITERATE_BUDGET: u64 = 20_000_000;
/// Default sample count of the C0 distance.
pub const C0_SAMPLES: usize = 1024;

impl CommutingPair {
    /// Pair from explicit maps; domains follow from `xi(0)` and `eta(0)`.
    pub fn new(eta: MapExpr, xi: MapExpr, exponent: Option<u32>, provenance: Provenance) -> Self {
        let xi0 = xi.eval(0.0);
        let eta0 = eta.eval(0.0);
        Self {
            eta: IntervalMap::new(eta, 0.0, xi0),
            xi: IntervalMap::new(xi, eta0, 0.0),
            exponent,
            provenance,
            scale: 1.0,
            iterate_budget: PAIR_ITERATE_BUDGET,
        }
    }

    /// Same pair with a different bound on the cost of its renormalizations.
    pub fn with_iterate_budget(mut self, budget: u64) -> Self {
        self.iterate_budget = budget;
        self
    }

    /// `(f^{q_{m+1}} - p_{m+1} on I_m, f^{q_m} - p_m on I_{m+1})`.
    pub fn from_circle_map(map: Arc<dyn CircleLift>, level: usize, max_orbit: u64) -> Result<Self> {
        let cr = closest_returns(map.as_ref(), level + 1, max_orbit);
        let certified = cr
            .levels
            .iter()
            .take_while(|c| c.distance.abs() > PRECISION_FLOOR)
            .count();
        if certified < level + 2 {
            let deepest = certified.saturating_sub(2);
            return Err(match cr.status {
                ReturnStatus::Budget => Error::Budget { budget: max_orbit, level: deepest },
                ReturnStatus::Inconsistent => Error::Combinatorics { level: cr.levels.len() },
                _ => Error::PrecisionFloor { level: deepest },
            });
        }
        let outer = cr.levels[level + 1];
        let inner = cr.levels[level];
        let exponent = map.exponent();
        let source = map.label();
        let eta = MapExpr::iterate(map.clone(), outer.q, outer.p);
        let xi = MapExpr::iterate(map, inner.q, inner.p);
        Ok(Self::new(eta, xi, exponent, Provenance { source, level, renormalizations: 0 }))
    }

    pub fn eta0(&self) -> f64 {
        self.eta.eval(0.0)
    }

    pub fn xi0(&self) -> f64 {
        self.xi.eval(0.0)
    }

    fn scale(&self) -> f64 {
        self.eta.len().max(self.xi.len())
    }

    /// Length of the shorter interval measured on the original line.
    pub fn absolute_len(&self) -> f64 {
        self.eta.len().min(self.xi.len()) / self.scale.abs()
    }

    /// Iteration cap for [`CommutingPair::height`] that keeps the work under
    /// [`HEIGHT_BUDGET`] base-map evaluations.
    pub fn height_cap(&self) -> usize {
        (HEIGHT_BUDGET / self.eta.expr.total_iterates().max(1)).max(2) as usize
    }

    /// Smallest `r >= 1` with `0` between `eta^r(xi(0))` and `eta^(r+1)(xi(0))`.
    pub fn height(&self, cap: usize) -> Result<Height> {
        let start = self.xi0();
        let side = start > 0.0;
        let tie = PRECISION_FLOOR * start.abs();
        let mut y = start;
        for r in 0..cap {
            let next = self.eta.eval(y);
            if next.abs() <= tie {
                return Err(Error::HeightUndetermined { iterations: r + 1 });
            }
            if (next > 0.0) != side {
                if r == 0 {
                    return Err(Error::Domain("eta(xi(0)) already lies across 0".into()));
                }
                return Ok(Height::Finite(r as u64));
            }
            if (next - y).abs() <= tie {
                break;
            }
            y = next;
        }
        match self.fixed_point_of_eta() {
            Some(fixed_point) => Ok(Height::Infinite { fixed_point }),
            None => Err(Error::HeightUndetermined { iterations: cap }),
        }
    }

    /// Fixed point of `eta` in `I_eta`, located by a sign change of
    /// `eta(x) - x` against its sign at 0.
    fn fixed_point_of_eta(&self) -> Option<f64> {
        let g = |x: f64| self.eta.eval(x) - x;
        let end = self.xi0();
        let g0 = g(0.0);
        let samples = 512;
        let mut prev = 0.0;
        for k in 1..=samples {
            let x = end * k as f64 / samples as f64;
            let gx = g(x);
            if gx == 0.0 {
                return Some(x);
            }
            if (gx > 0.0) != (g0 > 0.0) {
                let (mut a, mut b) = (prev, x);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid == a || mid == b {
                        break;
                    }
                    if (g(mid) > 0.0) == (g0 > 0.0) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return Some(0.5 * (a + b));
            }
            prev = x;
        }
        None
    }

    /// `(eta^r o xi on I_xi, eta on [0, eta^r(xi(0))])` with `r` the height.
    pub fn prerenormalize(&self) -> Result<Self> {
        self.prerenormalize_with(self.height(self.height_cap())?)
    }

    fn prerenormalize_with(&self, height: Height) -> Result<Self> {
        let r = height.finite().ok_or(Error::NotRenormalizable)?;
        let cost = r
            .checked_mul(self.eta.expr.total_iterates())
            .and_then(|c| c.checked_add(self.xi.expr.total_iterates()));
        if cost.map_or(true, |c| c > self.iterate_budget) {
            return Err(Error::Budget {
                budget: self.iterate_budget,
                level: self.provenance.level + self.provenance.renormalizations,
            });
        }
        let first = MapExpr::compose(&self.eta.expr.power(r), &self.xi.expr);
        let second = self.eta.expr.clone();
        let mut out = Self::new(first, second, self.exponent, self.provenance.clone());
        out.scale = self.scale;
        out.iterate_budget = self.iterate_budget;
        Ok(out)
    }

    /// Pre-renormalization conjugated by `x -> x / xi'(0)`, where `xi'` is the
    /// second map of the pre-renormalized pair.
    pub fn renormalize(&self) -> Result<Self> {
        self.renormalize_with(self.height(self.height_cap())?)
    }

    fn renormalize_with(&self, height: Height) -> Result<Self> {
        let pre = self.prerenormalize_with(height)?;
        let lambda = 1.0 / pre.xi0();
        if !lambda.is_finite() || lambda.abs() > 1.0 / PRECISION_FLOOR {
            return Err(Error::RescaleOverflow(lambda));
        }
        let mut out = pre.rescaled(lambda);
        out.provenance.renormalizations += 1;
        if out.absolute_len() <= PRECISION_FLOOR {
            return Err(Error::PrecisionFloor {
                level: out.provenance.level + out.provenance.renormalizations,
            });
        }
        if !(out.xi0() > 0.0 && out.eta0() < 0.0) {
            return Err(Error::Domain(format!(
                "renormalized pair violates orientation: xi(0) = {}, eta(0) = {}",
                out.xi0(),
                out.eta0()
            )));
        }
        Ok(out)
    }

    /// Both maps conjugated by `x -> factor * x`.
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut out = Self::new(
            self.eta.expr.rescaled(factor),
            self.xi.expr.rescaled(factor),
            self.exponent,
            self.provenance.clone(),
        );
        out.scale = self.scale * factor;
        out.iterate_budget = self.iterate_budget;
        out
    }

    /// Rescaled so that `xi(0) = 1`.
    pub fn normalized(&self) -> Self {
        self.rescaled(1.0 / self.xi0())
    }

    /// `[chi(R^0), chi(R^1), ...]` for up to `depth` levels.
    pub fn rotation_number(&self, depth: usize) -> PairRotation {
        let mut terms = Vec::new();
        let mut pair = self.clone();
        for _ in 0..depth {
            match pair.height(pair.height_cap()) {
                Ok(Height::Finite(r)) => {
                    terms.push(r);
                    if terms.len() == depth {
                        break;
                    }
                    match pair.renormalize_with(Height::Finite(r)) {
                        Ok(next) => pair = next,
                        Err(e) => return PairRotation::truncated(terms, e),
                    }
                }
                Ok(Height::Infinite { .. }) => {
                    return PairRotation { cf: ContinuedFraction::from_parts(terms, true), stopped: None }
                }
                Err(e) => return PairRotation::truncated(terms, e),
            }
        }
        PairRotation { cf: ContinuedFraction::from_parts(terms, false), stopped: None }
    }

    /// Numerical check of the commuting-pair axioms.
    pub fn check(&self) -> PairCheck {
        let xi0 = self.xi0();
        let eta0 = self.eta0();
        let scale = self.scale();
        let domains_ok = xi0 != 0.0 && eta0 != 0.0 && (xi0 > 0.0) != (eta0 > 0.0);

        let delta = 0.1 * self.eta.len().min(self.xi.len());
        let commutation_residual = (0..=32)
            .map(|k| {
                let x = -delta + 2.0 * delta * k as f64 / 32.0;
                (self.eta.eval(self.xi.eval(x)) - self.xi.eval(self.eta.eval(x))).abs()
            })
            .fold(0.0, f64::max)
            / scale;
        let commutation_ok = commutation_residual < COMMUTATION_TOL;

        let return_ok = self.eta.contains(self.xi.eval(eta0), PRECISION_FLOOR * scale);

        let mut min_derivative = f64::INFINITY;
        for map in [&self.eta, &self.xi] {
            let h = f64::EPSILON.cbrt() * map.len();
            for k in 1..=64 {
                let x = map.domain.0 + map.len() * k as f64 / 65.0;
                if x.abs() < 1e-3 * map.len() {
                    continue;
                }
                let d = (map.eval(x + h) - map.eval(x - h)) / (2.0 * h);
                min_derivative = min_derivative.min(d);
            }
        }
        let derivative_ok = min_derivative > 0.0;

        let (fe, fx, criticality_ok) = match self.exponent {
            None => (None, None, true),
            Some(n) => {
                let fe = fit_exponent(&self.eta);
                let fx = fit_exponent(&self.xi);
                let ok = [fe, fx].iter().all(|s| (s - n as f64).abs() <= PAIR_EXPONENT_TOL);
                (Some(fe), Some(fx), ok)
            }
        };
        PairCheck {
            domains_ok,
            commutation_residual,
            commutation_ok,
            return_ok,
            min_derivative,
            derivative_ok,
            fitted_exponent_eta: fe,
            fitted_exponent_xi: fx,
            criticality_ok,
            passes: domains_ok && commutation_ok && return_ok && derivative_ok && criticality_ok,
        }
    }

    /// Coordinates of the C0 embedding at `x` in `[0, 1]`:
    /// `(eta(xi(0) x)/xi(0), xi(eta(0) x)/eta(0))`.
    fn embedding(&self, xi0: f64, eta0: f64, x: f64) -> (f64, f64) {
        (self.eta.eval(xi0 * x) / xi0, self.xi.eval(eta0 * x) / eta0)
    }
}

/// Slope of `log|g(x) - g(0)|` against `log|x|` at a few small offsets on both
/// sides of 0, relative to the domain length.
fn fit_exponent(map: &IntervalMap) -> f64 {
    let g0 = map.eval(0.0);
    let len = map.len();
    let resolvable = 1e-13 * (g0.abs().max(len));
    let mut pts = Vec::new();
    for &rel in &[0.03, 0.01, 0.003] {
        for s in [1.0, -1.0] {
            let x = s * rel * len;
            let dy = (map.eval(x) - g0).abs();
            if dy > resolvable {
                pts.push((x.abs().ln(), dy.ln()));
            }
        }
    }
    if pts.len() < 3 {
        return f64::NAN;
    }
    least_squares_slope(&pts)
}

/// Rotation number of a pair read off its heights.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRotation {
    pub cf: ContinuedFraction,
    /// Why the expansion stopped short of the requested depth, if it did.
    pub stopped: Option<Error>,
}

impl PairRotation {
    fn truncated(terms: Vec<u64>, e: Error) -> Self {
        Self { cf: ContinuedFraction::from_parts(terms, false), stopped: Some(e) }
    }
}

/// Distance in the C0 embedding
/// `(eta, xi) -> (eta(xi(0) x)/xi(0), xi(eta(0) x)/eta(0), |eta(0)/xi(0)|)`:
/// the larger of the two sup differences on a uniform grid of `samples`
/// points in `[0, 1]`, plus the difference of the ratio coordinates.
pub fn c0_distance(a: &CommutingPair, b: &CommutingPair, samples: usize, exec: Exec) -> f64 {
    assert!(samples >= 2);
    let (axi, aeta) = (a.xi0(), a.eta0());
    let (bxi, beta) = (b.xi0(), b.eta0());
    let sup = exec.max_range(samples, |i| {
        let x = i as f64 / (samples - 1) as f64;
        let (ua, va) = a.embedding(axi, aeta, x);
        let (ub, vb) = b.embedding(bxi, beta, x);
        (ua - ub).abs().max((va - vb).abs())
    });
    let ratio = ((aeta / axi).abs() - (beta / bxi).abs()).abs();
    sup + ratio
}

/// One level of a renormalization orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenormRecord {
    pub level: usize,
    /// `None` encodes an infinite height.
    pub height: Option<u64>,
    pub xi0: f64,
    /// Domain lengths measured on the original line, i.e. undoing the
    /// rescalings.
    pub eta_len: f64,
    pub xi_len: f64,
    /// `|I_xi| / |I_eta|`.
    pub ratio: f64,
    pub c0_distance: Option<f64>,
}

impl RenormRecord {
    pub const CSV_HEADER: &'static str = "level,height,eta_len,xi_len,ratio,c0_distance";

    pub fn csv_row(&self) -> String {
        let h = self.height.map_or_else(|| "inf".to_string(), |h| h.to_string());
        let d = self.c0_distance.map_or_else(String::new, |d| format!("{d:e}"));
        format!(
            "{},{},{:e},{:e},{:e},{}",
            self.level, h, self.eta_len, self.xi_len, self.ratio, d
        )
    }
}

/// Renormalization orbit of a pair with one record per level.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormOrbit {
    pub records: Vec<RenormRecord>,
    pub stopped: Option<Error>,
}

/// Renormalizes `pair` up to `depth` times, logging each level. Levels are
/// numbered from `first_level`; interval lengths are on the line of the
/// pair as given, so they shrink along the orbit. With
/// `distances = Some((samples, exec))` each record after the first carries
/// the C0 distance to the previous level.
pub fn renorm_orbit(
    pair: &CommutingPair,
    depth: usize,
    first_level: usize,
    distances: Option<(usize, Exec)>,
) -> RenormOrbit {
    let mut records: Vec<RenormRecord> = Vec::new();
    let mut current = pair.clone();
    let mut previous: Option<CommutingPair> = None;
    for k in 0..=depth {
        let height = match current.height(current.height_cap()) {
            Ok(h) => h,
            Err(e) => return RenormOrbit { records, stopped: Some(e) },
        };
        records.push(RenormRecord {
            level: first_level + k,
            height: height.finite(),
            xi0: current.xi0(),
            eta_len: current.eta.len() / current.scale.abs(),
            xi_len: current.xi.len() / current.scale.abs(),
            ratio: current.xi.len() / current.eta.len(),
            c0_distance: match (&previous, distances) {
                (Some(prev), Some((samples, exec))) => Some(c0_distance(prev, &current, samples, exec)),
                _ => None,
            },
        });
        if k == depth {
            break;
        }
        match current.renormalize_with(height) {
            Ok(next) => previous = Some(std::mem::replace(&mut current, next)),
            Err(e) => return RenormOrbit { records, stopped: Some(e) },
        }
    }
    RenormOrbit { records, stopped: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circlemap::{RigidRotation, SineFamily};

    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    const SILVER: f64 = 0.414_213_562_373_095_1;

    fn rigid(rho: f64) -> Arc<dyn CircleLift> {
        Arc::new(RigidRotation::new(rho))
    }

    #[test]
    fn rigid_golden_level_one_maps_are_translations() {
        let pair = CommutingPair::from_circle_map(rigid(GOLDEN), 1, 1000).unwrap();
        for &x in &[-0.1, 0.0, 0.2] {
            assert!((pair.eta.eval(x) - (x + 2.0 * GOLDEN - 1.0)).abs() < 1e-15);
            assert!((pair.xi.eval(x) - (x + GOLDEN - 1.0)).abs() < 1e-15);
        }
        assert_eq!(pair.eta.expr.as_iterate(), Some((2, 1, 1.0)));
        assert_eq!(pair.xi.expr.as_iterate(), Some((1, 1, 1.0)));
        assert!(pair.exponent.is_none());
        let check = pair.check();
        assert!(check.passes, "{check:?}");
    }

    #[test]
    fn level_zero_intervals_are_orbit_points() {
        let map = rigid(GOLDEN);
        let pair = CommutingPair::from_circle_map(map.clone(), 0, 1000).unwrap();
        let x1 = map.lift(0.0);
        assert_eq!(pair.eta.domain, (0.0, x1));
        assert_eq!(pair.xi.domain, (x1 - 1.0, 0.0));
    }

    #[test]
    fn rigid_heights_are_brute_force_counts() {
        // Brute force: count translations of xi(0) by eta(0) until the sign flips.
        fn brute(eta0: f64, xi0: f64) -> u64 {
            let mut y = xi0;
            let mut r = 0;
            while (y + eta0 > 0.0) == (xi0 > 0.0) {
                y += eta0;
                r += 1;
            }
            r
        }
        for (rho, expected) in [(GOLDEN, 1), (SILVER, 2)] {
            for level in 0..6 {
                let pair = CommutingPair::from_circle_map(rigid(rho), level, 10_000).unwrap();
                let h = pair.height(pair.height_cap()).unwrap();
                assert_eq!(h, Height::Finite(brute(pair.eta0(), pair.xi0())));
                assert_eq!(h, Height::Finite(expected));
            }
        }
    }

    #[test]
    fn fixed_point_gives_infinite_height() {
        let eta = MapExpr::iterate(Arc::new(SineFamily { omega: -0.05, amplitude: 0.1 }), 1, 0);
        let xi = MapExpr::iterate(rigid(0.45), 1, 0);
        let pair = CommutingPair::new(eta, xi, None, Provenance {
            source: "oracle".into(),
            level: 0,
            renormalizations: 0,
        });
        match pair.height(pair.height_cap()).unwrap() {
            Height::Infinite { fixed_point } => {
                assert!((fixed_point - 5.0 / 12.0).abs() < 1e-9 || (fixed_point - 1.0 / 12.0).abs() < 1e-9)
            }
            h => panic!("expected infinite height, got {h:?}"),
        }
        assert_eq!(pair.prerenormalize().err(), Some(Error::NotRenormalizable));
        let rot = pair.rotation_number(5);
        assert!(rot.cf.is_empty() && rot.cf.is_exhausted());
    }

    #[test]
    fn prerenormalization_bookkeeping() {
        let pair = CommutingPair::from_circle_map(rigid(SILVER), 1, 10_000).unwrap();
        let (qe, pe, _) = pair.eta.expr.as_iterate().unwrap();
        let (qx, px, _) = pair.xi.expr.as_iterate().unwrap();
        let r = pair.height(pair.height_cap()).unwrap().finite().unwrap();
        let pre = pair.prerenormalize().unwrap();
        assert_eq!(pre.eta.expr.as_iterate(), Some((r * qe + qx, r as i64 * pe + px, 1.0)));
        assert_eq!(pre.xi.expr.as_iterate(), Some((qe, pe, 1.0)));
        let next = CommutingPair::from_circle_map(rigid(SILVER), 2, 10_000).unwrap();
        for k in 0..16 {
            let x = pre.eta.domain.0 + pre.eta.len() * k as f64 / 15.0;
            assert!((pre.eta.eval(x) - next.eta.eval(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn renormalization_normalizes_orientation() {
        let pair = CommutingPair::from_circle_map(rigid(GOLDEN), 2, 10_000).unwrap();
        let r = pair.renormalize().unwrap();
        assert_eq!(r.xi0(), 1.0);
        assert!(r.eta0() < 0.0);
        assert!((r.eta0() + GOLDEN).abs() < 1e-12);
        assert_eq!(r.provenance.renormalizations, 1);
        assert!(r.check().passes);
    }

    #[test]
    fn rigid_rotation_numbers_from_heights() {
        let pair = CommutingPair::from_circle_map(rigid(GOLDEN), 0, 1_000_000).unwrap();
        let rot = pair.rotation_number(12);
        assert_eq!(rot.cf.terms(), &[1; 12]);
        assert!(rot.stopped.is_none());
        let pair = CommutingPair::from_circle_map(rigid(SILVER), 0, 1_000_000).unwrap();
        assert_eq!(pair.rotation_number(8).cf.terms(), &[2; 8]);
    }

    #[test]
    fn c0_distance_properties() {
        let a = CommutingPair::from_circle_map(rigid(GOLDEN), 0, 100).unwrap();
        let b = CommutingPair::from_circle_map(rigid(GOLDEN + 1e-6), 0, 100).unwrap();
        assert_eq!(c0_distance(&a, &a, C0_SAMPLES, Exec::Sequential), 0.0);
        let d = c0_distance(&a, &b, C0_SAMPLES, Exec::Sequential);
        assert!(d > 0.0 && d < 1e-4);
        assert_eq!(d, c0_distance(&b, &a, C0_SAMPLES, Exec::Sequential));
        assert_eq!(d, c0_distance(&a, &b, C0_SAMPLES, Exec::Parallel));
    }

    #[test]
    fn power_collapses_iterates() {
        let e = MapExpr::iterate(rigid(0.3), 2, 1).rescaled(0.5);
        let p = e.power(3);
        assert_eq!(p.as_iterate(), Some((6, 3, 0.5)));
        assert_eq!(p.total_iterates(), 6);
        let mixed = MapExpr::compose(&MapExpr::iterate(rigid(0.3), 1, 0), &MapExpr::iterate(rigid(0.3), 1, 0));
        // distinct base allocations do not merge
        assert!(mixed.as_iterate().is_none());
        assert!((mixed.eval(0.1) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn orbit_records_and_budget() {
        let pair = CommutingPair::from_circle_map(rigid(GOLDEN), 0, 1000).unwrap();
        let orbit = renorm_orbit(&pair, 5, 0, Some((64, Exec::Sequential)));
        assert_eq!(orbit.records.len(), 6);
        assert!(orbit.records[0].c0_distance.is_none());
        // renormalized rigid golden pairs are all the same pair
        assert!(orbit.records[2..].iter().all(|r| r.c0_distance.unwrap() < 1e-12));
        assert!(orbit.records.iter().all(|r| r.height == Some(1)));
        assert!(orbit.records.windows(2).all(|w| w[1].xi_len < w[0].xi_len && w[1].eta_len < w[0].eta_len));
        let deep = renorm_orbit(&pair, 200, 0, None);
        assert!(matches!(deep.stopped, Some(Error::Budget { .. })), "{:?}", deep.stopped);
        let short = renorm_orbit(&pair.with_iterate_budget(100), 200, 0, None);
        assert!(matches!(short.stopped, Some(Error::Budget { budget: 100, .. })));
        assert!(short.records.len() < deep.records.len());
    }

    #[test]
    fn record_csv_row() {
        let rec = RenormRecord {
            level: 3,
            height: None,
            xi0: 1.0,
            eta_len: 1.0,
            xi_len: 0.5,
            ratio: 0.5,
            c0_distance: None,
        };
        assert_eq!(rec.csv_row(), "3,inf,1e0,5e-1,5e-1,");
    }
}
