//! Continued fractions `[r0, r1, r2, ...] = 1/(r0 + 1/(r1 + 1/(r2 + ...)))`
//! with positive integer terms, representing numbers in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite prefix of a continued fraction expansion.
///
/// `exhausted` marks a complete expansion (the value is the rational number
/// the terms spell out). A non-exhausted fraction is a truncation: only its
/// terms are known, and comparisons against it bind on shared prefixes only.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContinuedFraction {
    terms: Vec<u64>,
    exhausted: bool,
}

/// A convergent `p/q = [r0, ..., r_{index-1}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Convergent {
    pub p: i128,
    pub q: i128,
    pub index: usize,
}

impl Convergent {
    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Convergents for levels `1..=m`, possibly cut short when the next
/// denominator would overflow `i128`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergents {
    pub items: Vec<Convergent>,
    pub capped: bool,
}

impl ContinuedFraction {
    /// A complete expansion from explicit terms.
    pub fn from_terms(terms: &[i64]) -> Result<Self> {
        let terms = validate_terms(terms)?;
        Ok(Self { terms, exhausted: true })
    }

    /// A truncated expansion: the listed terms are a prefix of a longer
    /// (possibly infinite) expansion.
    pub fn truncated(terms: &[i64]) -> Result<Self> {
        let terms = validate_terms(terms)?;
        Ok(Self { terms, exhausted: false })
    }

    pub(crate) fn from_parts(terms: Vec<u64>, exhausted: bool) -> Self {
        debug_assert!(terms.iter().all(|&t| t >= 1));
        Self { terms, exhausted }
    }

    /// `len` terms of the eventually periodic expansion repeating `period`.
    pub fn periodic(period: &[u64], len: usize) -> Self {
        assert!(!period.is_empty() && period.iter().all(|&t| t >= 1));
        let terms = period.iter().copied().cycle().take(len).collect();
        Self { terms, exhausted: false }
    }

    /// The golden mean `(sqrt(5) - 1) / 2 = [1, 1, 1, ...]`, truncated.
    pub fn golden(len: usize) -> Self {
        Self::periodic(&[1], len)
    }

    /// The silver mean `sqrt(2) - 1 = [2, 2, 2, ...]`, truncated.
    pub fn silver(len: usize) -> Self {
        Self::periodic(&[2], len)
    }

    pub fn terms(&self) -> &[u64] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Rational complete expansions, including the empty one (value 0).
    pub fn is_rational(&self) -> bool {
        self.exhausted
    }

    /// Value of the truncation to the first `depth` terms.
    pub fn value(&self, depth: usize) -> Result<f64> {
        if depth > self.terms.len() {
            return Err(Error::InsufficientTerms { requested: depth, available: self.terms.len() });
        }
        Ok(self.terms[..depth].iter().rev().fold(0.0, |acc, &t| 1.0 / (t as f64 + acc)))
    }

    /// Value using every available term.
    pub fn approx_value(&self) -> f64 {
        self.terms.iter().rev().fold(0.0, |acc, &t| 1.0 / (t as f64 + acc))
    }

    /// Convergents `p_k/q_k` for `k = 1..=m` from the recurrence
    /// `q_{k+1} = r_k q_k + q_{k-1}` seeded with `p_{-1}/q_{-1} = 1/0`,
    /// `p_0/q_0 = 0/1`.
    pub fn convergents(&self, m: usize) -> Result<Convergents> {
        if m > self.terms.len() {
            return Err(Error::InsufficientTerms { requested: m, available: self.terms.len() });
        }
        let (mut p_prev, mut q_prev) = (1i128, 0i128);
        let (mut p, mut q) = (0i128, 1i128);
        let mut items = Vec::with_capacity(m);
        for (k, &r) in self.terms[..m].iter().enumerate() {
            let r = r as i128;
            let next = r
                .checked_mul(p)
                .and_then(|v| v.checked_add(p_prev))
                .zip(r.checked_mul(q).and_then(|v| v.checked_add(q_prev)));
            let Some((p_next, q_next)) = next else {
                return Ok(Convergents { items, capped: true });
            };
            (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
            items.push(Convergent { p, q, index: k + 1 });
        }
        Ok(Convergents { items, capped: false })
    }

    /// Gauss shift: drops the leading term, `G(rho) = {1/rho}`.
    pub fn gauss_shift(&self) -> Result<Self> {
        if self.terms.is_empty() {
            return Err(Error::EmptyExpansion);
        }
        Ok(Self { terms: self.terms[1..].to_vec(), exhausted: self.exhausted })
    }

    /// Length of the longest common prefix of the two term lists.
    pub fn common_prefix(&self, other: &Self) -> usize {
        self.terms.iter().zip(&other.terms).take_while(|(a, b)| a == b).count()
    }

    /// Whether the two expansions agree on every term both of them know.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let shared = self.len().min(other.len());
        self.common_prefix(other) == shared
            && (!(self.exhausted && other.exhausted) || self.len() == other.len())
    }
}

fn validate_terms(terms: &[i64]) -> Result<Vec<u64>> {
    terms
        .iter()
        .enumerate()
        .map(|(index, &t)| if t >= 1 { Ok(t as u64) } else { Err(Error::InvalidTerm { index, term: t }) })
        .collect()
}

/// Default residual floor for expanding binary64 inputs.
pub const DEFAULT_FLOOR_EPS: f64 = 1e-12;

/// Expansion of `x` in `(0, 1)` by iterating `x -> {1/x}`.
///
/// Stops with `exhausted = true` once `1/x` lies within `floor_eps` of an
/// integer (the residual is treated as noise), or with `exhausted = false`
/// after `max_terms` terms.
pub fn cf_of_real(x: f64, max_terms: usize, floor_eps: f64) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("{x} is not in (0, 1)")));
    }
    let mut terms = Vec::new();
    let mut y = x;
    while terms.len() < max_terms {
        let inv = 1.0 / y;
        let whole = inv.floor();
        let residual = inv - whole;
        if residual < floor_eps {
            terms.push(whole as u64);
            return Ok(ContinuedFraction::from_parts(terms, true));
        }
        if 1.0 - residual < floor_eps {
            terms.push(whole as u64 + 1);
            return Ok(ContinuedFraction::from_parts(terms, true));
        }
        terms.push(whole as u64);
        y = residual;
    }
    Ok(ContinuedFraction::from_parts(terms, false))
}

/// Fractional part `{x} = x - floor(x)`.
pub fn frac(x: f64) -> f64 {
    x - x.floor()
}
