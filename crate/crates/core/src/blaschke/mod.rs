//! The degree-`n` Blaschke model with a critical point of order `n` at 1.
//!
//! For `n = 2m + 1` the model is `B_n = P/Q` with
//! `P(z) = sum_{k=0}^{m} (-1)^k C(n, k) z^{n-k}` and `Q(z) = z^n P(1/z)`, so
//! that `P - Q = (z - 1)^n` exactly. `B_n` fixes 0, 1 and infinity, has
//! critical points only at 0, 1 and infinity, and restricts to a
//! homeomorphism of the unit circle. The rotated family is
//! `z -> e^{2 pi i theta} B_n(z)`.

mod poly;
pub mod tuning;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use poly::{binomial, Poly};
pub use tuning::{
    solve_periodic_phase, solve_theta_periodic, tune_phase, tune_theta, PeriodicRoot, Side,
    TuneLimit, TuneOptions, TuneResult,
};

use crate::circlemap::CircleLift;
use crate::error::{Error, Result};

/// Largest degree whose coefficient arithmetic fits comfortably in `i128`.
pub const MAX_DEGREE: u32 = 41;

#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeFraction {
    n: u32,
    p: Poly,
    q: Poly,
    theta: f64,
}

/// Exact and sampled invariant checks of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// `P - Q = (z - 1)^n`, with `(z - 1)^n` expanded by repeated multiplication.
    pub identity: bool,
    /// `Q(z) = z^n P(1/z)`.
    pub reflection: bool,
    pub q_at_one: i64,
    /// `P'Q - PQ' = c z^m (z - 1)^(n-1)` for the reported nonzero `c`.
    pub derivative_form: bool,
    pub derivative_constant: i64,
    /// Largest `| |B(z)| - 1 |` over sampled points of the unit circle.
    pub circle_residual: f64,
    pub all_passed: bool,
}

/// JSON form of a model: coefficients in descending powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub n: u32,
    #[serde(rename = "P")]
    pub p: Vec<i64>,
    #[serde(rename = "Q")]
    pub q: Vec<i64>,
    pub theta: f64,
}

impl BlaschkeFraction {
    /// Builds `B_n` with `theta = 0`.
    ///
    /// Panics if the algebraic identity `P - Q = (z - 1)^n` fails, which can
    /// only happen through a construction bug.
    pub fn build(n: u32) -> Result<Self> {
        if n < 3 || n % 2 == 0 {
            return Err(Error::Domain(format!("n must be odd and at least 3, got {n}")));
        }
        if n > MAX_DEGREE {
            return Err(Error::Domain(format!("n = {n} exceeds the supported maximum {MAX_DEGREE}")));
        }
        let m = (n - 1) / 2;
        let mut coeffs = vec![0i128; n as usize + 1];
        for k in 0..=m {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            coeffs[(n - k) as usize] = sign * binomial(n, k);
        }
        let p = Poly::new(coeffs);
        let q = p.reciprocal(n as usize);
        let model = Self { n, p, q, theta: 0.0 };
        assert!(
            model.identity_holds(),
            "P - Q != (z - 1)^{n}: Blaschke construction is broken"
        );
        Ok(model)
    }

    /// Same model rotated by `e^{2 pi i theta}`; `theta` is reduced mod 1.
    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta: theta - theta.floor(), ..self.clone() }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        (self.n - 1) / 2
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn numerator(&self) -> &Poly {
        &self.p
    }

    pub fn denominator(&self) -> &Poly {
        &self.q
    }

    fn identity_holds(&self) -> bool {
        &self.p - &self.q == Poly::linear_power(-1, self.n)
    }

    /// `P'Q - PQ'`.
    pub fn derivative_numerator(&self) -> Poly {
        &(&self.p.derivative() * &self.q) - &(&self.p * &self.q.derivative())
    }

    pub fn check_invariants(&self) -> InvariantReport {
        let n = self.n as usize;
        let identity = self.identity_holds();
        let reflection = self.q == self.p.reciprocal(n);
        let q_at_one: i128 = self.q.coeffs().iter().sum();

        let num = self.derivative_numerator();
        let shape = &Poly::monomial(1, self.m() as usize) * &Poly::linear_power(-1, self.n - 1);
        let c = num.leading();
        let derivative_form = c != 0 && num == shape.scale(c);

        let samples = 1000;
        let circle_residual = (0..samples)
            .map(|k| {
                let z = Complex64::from_polar(1.0, TAU * (k as f64 + 0.5) / samples as f64);
                (self.eval(z).map(|w| w.norm()).unwrap_or(f64::INFINITY) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let all_passed =
            identity && reflection && q_at_one != 0 && derivative_form && circle_residual < 1e-12;
        InvariantReport {
            identity,
            reflection,
            q_at_one: q_at_one as i64,
            derivative_form,
            derivative_constant: c as i64,
            circle_residual,
            all_passed,
        }
    }

    fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.theta)
    }

    /// `e^{2 pi i theta} P(z)/Q(z)`; an exact zero of `Q` is a pole error.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let den = self.q.eval(z);
        if den == Complex64::new(0.0, 0.0) {
            return Err(Error::Pole);
        }
        Ok(self.rotation() * self.p.eval(z) / den)
    }

    /// Whether `z` is close enough to a root of `Q` that the value is
    /// dominated by rounding.
    pub fn near_pole(&self, z: Complex64) -> bool {
        let scale: f64 = self.q.coeffs().iter().map(|&c| (c as f64).abs()).sum::<f64>()
            * z.norm().max(1.0).powi(self.m() as i32);
        self.q.eval(z).norm() < 1e-12 * scale
    }

    pub fn to_json(&self) -> ModelJson {
        let desc = |p: &Poly| p.coeffs().iter().rev().map(|&c| c as i64).collect();
        ModelJson { n: self.n, p: desc(&self.p), q: desc(&self.q), theta: self.theta }
    }

    /// Rebuilds a model from JSON, checking the coefficients against the
    /// construction.
    pub fn from_json(json: &ModelJson) -> Result<Self> {
        let model = Self::build(json.n)?.with_theta(json.theta);
        if model.to_json().p != json.p || model.to_json().q != json.q {
            return Err(Error::Domain("coefficients do not match the degree-n model".into()));
        }
        Ok(model)
    }

    /// Circle lift of this model.
    pub fn circle_lift(&self) -> Result<BlaschkeLift> {
        BlaschkeLift::new(self.clone(), None)
    }

    /// Circle lift of `z -> e^{2 pi i theta} B(h_a(z))` with
    /// `h_a(z) = (z + a)/(1 + a z)`.
    pub fn precomposed_lift(&self, a: f64) -> Result<BlaschkeLift> {
        if !(a > -1.0 && a < 1.0) {
            return Err(Error::Domain(format!("precomposition parameter {a} must lie in (-1, 1)")));
        }
        BlaschkeLift::new(self.clone(), Some(a))
    }
}

/// Base grid for unwrapping the argument along the circle.
const BASE_GRID: usize = 4096;
const MAX_GRID: usize = 1 << 20;
/// Largest argument change allowed between neighbouring grid nodes, in turns.
const MAX_STEP: f64 = 0.125;

/// Lift `t -> theta + (1/2 pi) arg B(e^{2 pi i t})` of the model's circle
/// restriction, optionally precomposed with the circle diffeomorphism
/// `h_a`. The critical point sits at `t = 0` (the point `z = 1`) and the lift
/// satisfies `F(0) = theta`.
#[derive(Clone, Debug)]
pub struct BlaschkeLift {
    model: BlaschkeFraction,
    precompose: Option<f64>,
    /// Unwrapped values of the phase-free lift at `k / (nodes.len() - 1)`.
    nodes: Vec<f64>,
}

impl BlaschkeLift {
    fn new(model: BlaschkeFraction, precompose: Option<f64>) -> Result<Self> {
        let mut lift = Self { model, precompose, nodes: Vec::new() };
        let mut size = BASE_GRID;
        loop {
            let mut nodes = Vec::with_capacity(size + 1);
            nodes.push(lift.principal(0.0));
            let mut max_step = 0.0f64;
            for k in 1..=size {
                let a = lift.principal(k as f64 / size as f64);
                let prev = nodes[k - 1];
                let v = a + (prev - a).round();
                max_step = max_step.max((v - prev).abs());
                nodes.push(v);
            }
            if max_step <= MAX_STEP {
                let total = nodes[size] - nodes[0];
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Lift(format!("circle map has degree {total}, expected 1")));
                }
                lift.nodes = nodes;
                return Ok(lift);
            }
            if size >= MAX_GRID {
                return Err(Error::Lift(format!(
                    "argument step {max_step} still exceeds {MAX_STEP} turns at {size} nodes"
                )));
            }
            size *= 2;
        }
    }

    pub fn model(&self) -> &BlaschkeFraction {
        &self.model
    }

    pub fn theta(&self) -> f64 {
        self.model.theta
    }

    pub fn precompose(&self) -> Option<f64> {
        self.precompose
    }

    pub fn grid_size(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Same map with a different phase; the unwrapping grid is reused.
    pub fn with_theta(&self, theta: f64) -> Self {
        Self { model: self.model.with_theta(theta), ..self.clone() }
    }

    /// `z - 1` for `z = e^{2 pi i t}`, accurate near `t = 0`, transported
    /// through `h_a` when present.
    fn displacement(&self, t: f64) -> Complex64 {
        let (s, c) = (PI * t).sin_cos();
        let e = Complex64::new(-2.0 * s * s, 2.0 * s * c);
        match self.precompose {
            None => e,
            // h_a(z) - 1 = (z - 1)(1 - a)/(1 + a z)
            Some(a) => e * (1.0 - a) / (1.0 + a * (1.0 + e)),
        }
    }

    /// Principal value of `(1/2 pi) arg B(.)` without the phase, computed as
    /// `arg(1 + w)` with `w = (z - 1)^n / Q(z)`.
    fn principal(&self, t: f64) -> f64 {
        let e = self.displacement(t);
        let w = e.powu(self.model.n) / self.model.q.eval(1.0 + e);
        w.im.atan2(1.0 + w.re) / TAU
    }

    /// Phase-free unwrapped lift on `[0, 1)`.
    fn unwrapped(&self, s: f64) -> f64 {
        let size = self.nodes.len() - 1;
        let pos = s * size as f64;
        let k = (pos as usize).min(size - 1);
        let frac = pos - k as f64;
        let guess = self.nodes[k] + (self.nodes[k + 1] - self.nodes[k]) * frac;
        let a = self.principal(s);
        a + (guess - a).round()
    }
}

impl CircleLift for BlaschkeLift {
    fn lift(&self, x: f64) -> f64 {
        let k = x.floor();
        self.model.theta + k + self.unwrapped(x - k)
    }

    fn exponent(&self) -> Option<u32> {
        Some(self.model.n)
    }

    fn critical_offset(&self, x: f64) -> f64 {
        if x.abs() <= 0.1 {
            self.principal(x)
        } else {
            self.lift(x) - self.lift(0.0)
        }
    }

    fn label(&self) -> String {
        match self.precompose {
            None => format!("blaschke(n={}, theta={})", self.model.n, self.model.theta),
            Some(a) => format!(
                "blaschke-precomposed(n={}, theta={}, a={a})",
                self.model.n, self.model.theta
            ),
        }
    }
}
