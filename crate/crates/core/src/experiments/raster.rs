//! Escape-time classification of the superattracting basins of `0` and
//! `infinity` for the rotated models.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blaschke::BlaschkeFraction;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::SCHEMA_VERSION;

pub const DEFAULT_R_IN: f64 = 1e-6;
pub const DEFAULT_R_OUT: f64 = 1e6;
pub const DEFAULT_MAX_ITER: u32 = 1000;

/// Axis-aligned rectangle `[re_min, re_max] x [im_min, im_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let w = Self { re_min, re_max, im_min, im_max };
        if !(re_min < re_max && im_min < im_max) || ![re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("degenerate window {w:?}")));
        }
        Ok(w)
    }

    /// Parses `re_min,re_max,im_min,im_max`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Domain(format!("window `{s}` is not four numbers")))?;
        match v[..] {
            [a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::Domain(format!("window `{s}` is not four numbers"))),
        }
    }

    /// Centre of pixel `(col, row)`, with row 0 at the top.
    pub fn pixel_center(&self, col: usize, row: usize, width: usize, height: usize) -> Complex64 {
        let dx = (self.re_max - self.re_min) / width as f64;
        let dy = (self.im_max - self.im_min) / height as f64;
        Complex64::new(
            self.re_min + (col as f64 + 0.5) * dx,
            self.im_max - (row as f64 + 0.5) * dy,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelClass {
    BasinZero,
    BasinInfinity,
    Undecided,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterParams {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub max_iter: u32,
    pub r_in: f64,
    pub r_out: f64,
}

impl RasterParams {
    pub fn new(window: Window, width: usize, height: usize) -> Self {
        Self { window, width, height, max_iter: DEFAULT_MAX_ITER, r_in: DEFAULT_R_IN, r_out: DEFAULT_R_OUT }
    }

    fn check(&self) -> Result<()> {
        if !(self.r_in > 0.0 && self.r_in < 1.0 && self.r_out > 1.0) {
            return Err(Error::Domain(format!(
                "radii must satisfy 0 < r_in < 1 < r_out, got {} and {}",
                self.r_in, self.r_out
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Domain("raster resolution must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    pub params: RasterParams,
    pub n: u32,
    pub theta: f64,
    /// Row-major, row 0 at the top.
    pub classes: Vec<PixelClass>,
    pub iterations: Vec<u32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub basin_zero: usize,
    pub basin_infinity: usize,
    pub undecided: usize,
}

/// The model with coefficients in floating point and the rotation factor
/// precomputed.
struct Evaluator {
    p: Vec<f64>,
    q: Vec<f64>,
    rotation: Complex64,
}

impl Evaluator {
    fn new(model: &BlaschkeFraction) -> Self {
        let f = |c: &[i128]| c.iter().rev().map(|&v| v as f64).collect();
        Self {
            p: f(model.numerator().coeffs()),
            q: f(model.denominator().coeffs()),
            rotation: Complex64::from_polar(1.0, std::f64::consts::TAU * model.theta()),
        }
    }

    fn horner(c: &[f64], z: Complex64) -> Complex64 {
        c.iter().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z + v)
    }

    fn eval(&self, z: Complex64) -> Option<Complex64> {
        let den = Self::horner(&self.q, z);
        if den == Complex64::new(0.0, 0.0) {
            return None;
        }
        Some(self.rotation * Self::horner(&self.p, z) / den)
    }
}

/// Iterates the model from `z` until it enters `|z| < r_in` or `|z| > r_out`,
/// or `max_iter` steps pass. A pole counts as escape.
pub fn classify_point(model: &BlaschkeFraction, z: Complex64, max_iter: u32, r_in: f64, r_out: f64) -> (PixelClass, u32) {
    classify_with(&Evaluator::new(model), z, max_iter, r_in, r_out)
}

fn classify_with(model: &Evaluator, z: Complex64, max_iter: u32, r_in: f64, r_out: f64) -> (PixelClass, u32) {
    let mut z = z;
    for k in 0..=max_iter {
        let r = z.norm();
        if r < r_in {
            return (PixelClass::BasinZero, k);
        }
        if r > r_out || !r.is_finite() {
            return (PixelClass::BasinInfinity, k);
        }
        if k == max_iter {
            break;
        }
        z = match model.eval(z) {
            Some(w) => w,
            None => return (PixelClass::BasinInfinity, k + 1),
        };
    }
    (PixelClass::Undecided, max_iter)
}

/// Classifies every pixel centre of the window; rows are independent.
pub fn julia_raster(model: &BlaschkeFraction, params: &RasterParams, exec: Exec) -> Result<RasterImage> {
    params.check()?;
    let p = *params;
    let eval = Evaluator::new(model);
    let rows = exec.map_range(p.height, |row| {
        (0..p.width)
            .map(|col| {
                let z = p.window.pixel_center(col, row, p.width, p.height);
                classify_with(&eval, z, p.max_iter, p.r_in, p.r_out)
            })
            .collect::<Vec<_>>()
    });
    let (classes, iterations) = rows.into_iter().flatten().unzip();
    Ok(RasterImage { params: p, n: model.n(), theta: model.theta(), classes, iterations })
}

impl RasterImage {
    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for class in &self.classes {
            match class {
                PixelClass::BasinZero => c.basin_zero += 1,
                PixelClass::BasinInfinity => c.basin_infinity += 1,
                PixelClass::Undecided => c.undecided += 1,
            }
        }
        c
    }

    /// Fraction of pixels assigned to a basin.
    pub fn classified_fraction(&self) -> f64 {
        let c = self.counts();
        (c.basin_zero + c.basin_infinity) as f64 / self.classes.len() as f64
    }

    fn rgb(class: PixelClass, iter: u32) -> [u8; 3] {
        // brightness falls off with escape time
        let shade = (255.0 / (1.0 + 0.15 * iter as f64)) as u8;
        match class {
            PixelClass::BasinZero => [shade / 4, shade / 2, shade],
            PixelClass::BasinInfinity => [shade, shade / 2, shade / 6],
            PixelClass::Undecided => [0, 0, 0],
        }
    }

    /// Binary portable pixmap.
    pub fn write_ppm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.params.width, self.params.height)?;
        let mut buf = Vec::with_capacity(self.classes.len() * 3);
        for (c, &k) in self.classes.iter().zip(&self.iterations) {
            buf.extend_from_slice(&Self::rgb(*c, k));
        }
        out.write_all(&buf)?;
        Ok(())
    }

    /// Sidecar description of the raster.
    pub fn sidecar(&self) -> RasterSidecar {
        RasterSidecar {
            schema_version: SCHEMA_VERSION,
            n: self.n,
            theta: self.theta,
            params: self.params,
            counts: self.counts(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterSidecar {
    pub schema_version: u32,
    pub n: u32,
    pub theta: f64,
    pub params: RasterParams,
    pub counts: ClassCounts,
}
