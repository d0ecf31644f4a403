//! Dense integer polynomials, coefficients in ascending order.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly(Vec<i128>);

impl Poly {
    pub fn new(mut coeffs: Vec<i128>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        Self(coeffs)
    }

    pub fn monomial(coeff: i128, degree: usize) -> Self {
        let mut c = vec![0; degree + 1];
        c[degree] = coeff;
        Self::new(c)
    }

    /// `(z + root_shift)^k` by repeated multiplication.
    pub fn linear_power(root_shift: i128, k: u32) -> Self {
        let factor = Poly::new(vec![root_shift, 1]);
        (0..k).fold(Poly::new(vec![1]), |acc, _| &acc * &factor)
    }

    pub fn coeffs(&self) -> &[i128] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0]
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn leading(&self) -> i128 {
        *self.0.last().unwrap()
    }

    /// Multiplicity of the root at `z = 0`.
    pub fn low_order(&self) -> usize {
        self.0.iter().take_while(|&&c| c == 0).count()
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() == 1 {
            return Poly::new(vec![0]);
        }
        Poly::new(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as i128 * c).collect())
    }

    /// `z^n * self(1/z)` for `n >= degree`.
    pub fn reciprocal(&self, n: usize) -> Self {
        assert!(n >= self.degree());
        let mut c = vec![0; n + 1];
        for (k, &a) in self.0.iter().enumerate() {
            c[n - k] = a;
        }
        Poly::new(c)
    }

    pub fn scale(&self, s: i128) -> Self {
        Poly::new(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c as f64)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.0.len().max(rhs.0.len());
        Poly::new(
            (0..len)
                .map(|k| self.0.get(k).copied().unwrap_or(0) + rhs.0.get(k).copied().unwrap_or(0))
                .collect(),
        )
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut c = vec![0i128; self.0.len() + rhs.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

/// `C(n, k)` in exact arithmetic.
pub fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 4), 126);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn power_of_linear() {
        assert_eq!(Poly::linear_power(-1, 3).coeffs(), &[-1, 3, -3, 1]);
    }

    #[test]
    fn arithmetic() {
        let a = Poly::new(vec![1, 2]);
        let b = Poly::new(vec![0, 0, 3]);
        assert_eq!((&a * &b).coeffs(), &[0, 0, 3, 6]);
        assert_eq!((&a - &a).coeffs(), &[0]);
        assert!((&a - &a).is_zero());
        assert_eq!(b.derivative().coeffs(), &[0, 6]);
        assert_eq!(a.reciprocal(3).coeffs(), &[0, 0, 2, 1]);
        assert_eq!(b.low_order(), 2);
    }
}
