//! Polynomials in the time parameter `t` with exact rational coefficients.
//!
//! These are genuine polynomials, not truncated series: the flow recursion
//! only ever produces polynomial entries because the linear part is nilpotent.

use crate::rat::{rat_int, Rat};
use num::Zero;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct TimePolynomial {
    /// Constant term first; trailing zeros trimmed so degree is well-defined.
    coeffs: Vec<Rat>,
}

impl TimePolynomial {
    pub fn zero() -> Self {
        TimePolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(coeffs: Vec<Rat>) -> Self {
        let mut p = TimePolynomial { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|v| v * c).collect())
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat_int(k as i64))
            .collect();
        Self::from_coeffs(coeffs)
    }

    /// `∫_0^t p`, the antiderivative vanishing at `t = 0`.
    pub fn integral(&self) -> Self {
        let mut coeffs = vec![Rat::zero()];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / rat_int((k + 1) as i64));
        }
        Self::from_coeffs(coeffs)
    }

    pub fn eval(&self, t: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }
}

impl Add for &TimePolynomial {
    type Output = TimePolynomial;
    fn add(self, other: &TimePolynomial) -> TimePolynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        TimePolynomial::from_coeffs(coeffs)
    }
}

impl Sub for &TimePolynomial {
    type Output = TimePolynomial;
    fn sub(self, other: &TimePolynomial) -> TimePolynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        TimePolynomial::from_coeffs(coeffs)
    }
}

impl Mul for &TimePolynomial {
    type Output = TimePolynomial;
    fn mul(self, other: &TimePolynomial) -> TimePolynomial {
        if self.is_zero() || other.is_zero() {
            return TimePolynomial::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        TimePolynomial::from_coeffs(coeffs)
    }
}

impl Neg for &TimePolynomial {
    type Output = TimePolynomial;
    fn neg(self) -> TimePolynomial {
        TimePolynomial::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Debug for TimePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({c})t^{k}")?;
            first = false;
        }
        Ok(())
    }
}
