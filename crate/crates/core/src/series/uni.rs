//! Truncated univariate formal power series over the rationals.

use crate::order::Order;
use crate::rat::{rat_int, Rat};
use crate::series::bi::BiSeries;
use num::{Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct UniSeries {
    trunc: usize,
    /// `coeffs[j]` is the coefficient of `x^j`; always `trunc + 1` entries.
    coeffs: Vec<Rat>,
}

impl UniSeries {
    pub fn zero(trunc: usize) -> Self {
        UniSeries {
            trunc,
            coeffs: vec![Rat::zero(); trunc + 1],
        }
    }

    pub fn monomial(trunc: usize, j: usize, c: Rat) -> Self {
        let mut s = Self::zero(trunc);
        s.set(j, c);
        s
    }

    pub(crate) fn from_coeffs(trunc: usize, mut coeffs: Vec<Rat>) -> Self {
        coeffs.resize(trunc + 1, Rat::zero());
        UniSeries { trunc, coeffs }
    }

    pub fn from_terms(trunc: usize, terms: &[(usize, Rat)]) -> Self {
        let mut s = Self::zero(trunc);
        for (j, c) in terms {
            assert!(*j <= trunc, "term beyond truncation");
            let v = s.get(*j) + c;
            s.set(*j, v);
        }
        s
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn get(&self, j: usize) -> Rat {
        if j > self.trunc {
            Rat::zero()
        } else {
            self.coeffs[j].clone()
        }
    }

    pub fn coeff_ref(&self, j: usize) -> Option<&Rat> {
        self.coeffs.get(j)
    }

    pub fn set(&mut self, j: usize, c: Rat) {
        assert!(j <= self.trunc, "term beyond truncation");
        self.coeffs[j] = c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Rat)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn ord(&self) -> Order {
        match self.coeffs.iter().position(|c| !c.is_zero()) {
            Some(j) => Order::Finite(j),
            None => Order::Infinite,
        }
    }

    pub fn with_truncation(&self, trunc: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(trunc + 1, Rat::zero());
        coeffs.truncate(trunc + 1);
        UniSeries { trunc, coeffs }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        UniSeries {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        UniSeries {
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let trunc = self.trunc.saturating_sub(1);
        let mut out = Self::zero(trunc);
        for j in 1..=self.trunc {
            if !self.coeffs[j].is_zero() {
                out.coeffs[j - 1] = &self.coeffs[j] * rat_int(j as i64);
            }
        }
        out
    }

    /// Embeds as a bivariate series in `x` alone.
    pub fn embed_x(&self, trunc: usize) -> BiSeries {
        let mut out = BiSeries::zero(trunc);
        for (j, c) in self.terms() {
            if j <= trunc {
                out.set(j, 0, c.clone());
            }
        }
        out
    }

    /// Horner substitution `r(A)` for a bivariate `A` without constant term.
    pub fn compose_bi(&self, arg: &BiSeries) -> BiSeries {
        assert!(
            arg.get(0, 0).is_zero(),
            "composition argument has a constant term"
        );
        // Coefficients of degree > trunc only feed terms beyond the common
        // truncation (ord arg >= 1), so the Horner loop can start at trunc.
        let trunc = self.trunc.min(arg.truncation());
        let arg = arg.with_truncation(trunc);
        let mut acc = BiSeries::zero(trunc);
        for j in (0..=trunc).rev() {
            if !acc.is_zero() {
                acc = acc.mul(&arg);
            }
            if !self.coeffs[j].is_zero() {
                acc = &acc + &BiSeries::monomial(trunc, 0, 0, self.coeffs[j].clone());
            }
        }
        acc
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for j in (0..=self.trunc).rev() {
            acc = acc * x + &self.coeffs[j];
        }
        acc
    }

    fn add_impl(&self, other: &Self, negate: bool) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero(trunc);
        for j in 0..=trunc {
            out.coeffs[j] = if negate {
                &self.coeffs[j] - &other.coeffs[j]
            } else {
                &self.coeffs[j] + &other.coeffs[j]
            };
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero(trunc);
        for (i, a) in self.coeffs.iter().enumerate().take(trunc + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(trunc + 1 - i) {
                if !b.is_zero() {
                    out.coeffs[i + j] += a * b;
                }
            }
        }
        out
    }
}

impl Add for &UniSeries {
    type Output = UniSeries;
    fn add(self, other: &UniSeries) -> UniSeries {
        self.add_impl(other, false)
    }
}

impl Sub for &UniSeries {
    type Output = UniSeries;
    fn sub(self, other: &UniSeries) -> UniSeries {
        self.add_impl(other, true)
    }
}

impl Mul for &UniSeries {
    type Output = UniSeries;
    fn mul(self, other: &UniSeries) -> UniSeries {
        UniSeries::mul(self, other)
    }
}

impl Neg for &UniSeries {
    type Output = UniSeries;
    fn neg(self) -> UniSeries {
        self.scale(&-Rat::from_integer(1.into()))
    }
}

impl fmt::Debug for UniSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UniSeries[N={}](", self.trunc)?;
        let mut first = true;
        for (j, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({c}) x^{j}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}
