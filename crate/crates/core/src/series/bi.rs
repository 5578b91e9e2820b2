//! Truncated bivariate formal power series with exact rational coefficients.
//!
//! Storage is dense and graded: one coefficient row per total degree, indexed
//! by the `x`-exponent. All arithmetic is exact; binary operations truncate to
//! the minimum of the operand truncations, and callers pad deliberately via
//! [`BiSeries::with_truncation`] when they can argue higher-degree terms are
//! still exact.

use crate::error::{EngineError, Result};
use crate::order::Order;
use crate::rat::{rat_int, Rat};
use crate::series::uni::UniSeries;
use num::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq)]
pub struct BiSeries {
    trunc: usize,
    /// `levels[d][alpha]` is the coefficient of `x^alpha y^(d-alpha)`.
    levels: Vec<Vec<Rat>>,
}

impl BiSeries {
    pub fn zero(trunc: usize) -> Self {
        let levels = (0..=trunc).map(|d| vec![Rat::zero(); d + 1]).collect();
        BiSeries { trunc, levels }
    }

    pub fn one(trunc: usize) -> Self {
        Self::monomial(trunc, 0, 0, Rat::one())
    }

    pub fn var_x(trunc: usize) -> Self {
        Self::monomial(trunc, 1, 0, Rat::one())
    }

    pub fn var_y(trunc: usize) -> Self {
        Self::monomial(trunc, 0, 1, Rat::one())
    }

    /// `c * x^alpha y^beta`. Panics if `alpha + beta > trunc`.
    pub fn monomial(trunc: usize, alpha: usize, beta: usize, c: Rat) -> Self {
        let mut s = Self::zero(trunc);
        s.set(alpha, beta, c);
        s
    }

    pub fn from_terms(trunc: usize, terms: &[(usize, usize, Rat)]) -> Result<Self> {
        let mut s = Self::zero(trunc);
        for (a, b, c) in terms {
            if a + b > trunc {
                return Err(EngineError::Precondition(format!(
                    "term x^{a} y^{b} exceeds truncation {trunc}"
                )));
            }
            let v = s.get(*a, *b) + c;
            s.set(*a, *b, v);
        }
        Ok(s)
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn get(&self, alpha: usize, beta: usize) -> Rat {
        let d = alpha + beta;
        if d > self.trunc {
            Rat::zero()
        } else {
            self.levels[d][alpha].clone()
        }
    }

    pub fn coeff_ref(&self, alpha: usize, beta: usize) -> Option<&Rat> {
        let d = alpha + beta;
        if d > self.trunc {
            None
        } else {
            Some(&self.levels[d][alpha])
        }
    }

    pub fn set(&mut self, alpha: usize, beta: usize, c: Rat) {
        let d = alpha + beta;
        assert!(d <= self.trunc, "term beyond truncation");
        self.levels[d][alpha] = c;
    }

    /// Iterates nonzero terms as `(alpha, beta, &coeff)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, &Rat)> {
        self.levels.iter().enumerate().flat_map(|(d, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(move |(a, c)| (a, d - a, c))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|row| row.iter().all(|c| c.is_zero()))
    }

    /// Smallest total degree with a nonzero coefficient; `Infinite` for the
    /// zero series.
    pub fn ord(&self) -> Order {
        for (d, row) in self.levels.iter().enumerate() {
            if row.iter().any(|c| !c.is_zero()) {
                return Order::Finite(d);
            }
        }
        Order::Infinite
    }

    /// Re-truncates. Raising the truncation marks the new degrees as zero; the
    /// caller is responsible for arguing those degrees really are exact.
    pub fn with_truncation(&self, trunc: usize) -> Self {
        let mut out = Self::zero(trunc);
        for d in 0..=trunc.min(self.trunc) {
            out.levels[d] = self.levels[d].clone();
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero(self.trunc);
        }
        let levels = self
            .levels
            .iter()
            .map(|row| row.iter().map(|v| v * c).collect())
            .collect();
        BiSeries {
            trunc: self.trunc,
            levels,
        }
    }

    /// Coefficient-wise absolute value (the hat series `p̂`).
    pub fn abs(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|row| row.iter().map(|v| v.abs()).collect())
            .collect();
        BiSeries {
            trunc: self.trunc,
            levels,
        }
    }

    fn add_impl(&self, other: &Self, negate: bool) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = Self::zero(trunc);
        for d in 0..=trunc {
            for a in 0..=d {
                out.levels[d][a] = if negate {
                    &self.levels[d][a] - &other.levels[d][a]
                } else {
                    &self.levels[d][a] + &other.levels[d][a]
                };
            }
        }
        out
    }

    /// Truncated Cauchy product at `min` truncation.
    ///
    /// Runs over integers: each factor is scaled by the lcm of its
    /// denominators, the convolution accumulates gcd-free `BigInt`s, and each
    /// output coefficient is reduced exactly once. Same exact result as the
    /// naive rational convolution, much cheaper on dense operands.
    pub fn mul(&self, other: &Self) -> Self {
        use num::BigInt;
        use num::Integer;
        let trunc = self.trunc.min(other.trunc);

        let to_int = |s: &Self| -> (Vec<Vec<BigInt>>, BigInt) {
            let mut den = BigInt::one();
            for row in s.levels.iter().take(trunc + 1) {
                for c in row {
                    if !c.is_zero() {
                        den = den.lcm(c.denom());
                    }
                }
            }
            let ints = s
                .levels
                .iter()
                .take(trunc + 1)
                .map(|row| {
                    row.iter()
                        .map(|c| {
                            if c.is_zero() {
                                BigInt::zero()
                            } else {
                                c.numer() * (&den / c.denom())
                            }
                        })
                        .collect()
                })
                .collect();
            (ints, den)
        };
        let (lhs, den1) = to_int(self);
        let (rhs, den2) = to_int(other);
        let den = den1 * den2;

        let mut acc: Vec<Vec<BigInt>> = (0..=trunc).map(|d| vec![BigInt::zero(); d + 1]).collect();
        for (d1, row1) in lhs.iter().enumerate() {
            if row1.iter().all(|c| c.is_zero()) {
                continue;
            }
            for (d2, row2) in rhs.iter().enumerate().take(trunc + 1 - d1) {
                let d = d1 + d2;
                for (a1, c1) in row1.iter().enumerate() {
                    if c1.is_zero() {
                        continue;
                    }
                    for (a2, c2) in row2.iter().enumerate() {
                        if c2.is_zero() {
                            continue;
                        }
                        acc[d][a1 + a2] += c1 * c2;
                    }
                }
            }
        }
        let mut out = Self::zero(trunc);
        for (d, row) in acc.into_iter().enumerate() {
            for (a, n) in row.into_iter().enumerate() {
                if !n.is_zero() {
                    out.levels[d][a] = Rat::new(n, den.clone());
                }
            }
        }
        out
    }

    /// The projection Π: keeps exactly the terms with `beta >= 1`, i.e.
    /// `p - p(x, 0)`.
    pub fn project_pi(&self) -> Self {
        let mut out = self.clone();
        for d in 0..=out.trunc {
            out.levels[d][d] = Rat::zero();
        }
        out
    }

    /// `p(x, 0)` as a univariate series in `x`.
    pub fn restrict_y0(&self) -> UniSeries {
        let coeffs = (0..=self.trunc).map(|d| self.levels[d][d].clone()).collect();
        UniSeries::from_coeffs(self.trunc, coeffs)
    }

    pub fn partial_x(&self) -> Self {
        let trunc = self.trunc.saturating_sub(1);
        let mut out = Self::zero(trunc);
        for d in 1..=self.trunc {
            for a in 1..=d {
                if !self.levels[d][a].is_zero() {
                    out.levels[d - 1][a - 1] = &self.levels[d][a] * rat_int(a as i64);
                }
            }
        }
        out
    }

    pub fn partial_y(&self) -> Self {
        let trunc = self.trunc.saturating_sub(1);
        let mut out = Self::zero(trunc);
        for d in 1..=self.trunc {
            for a in 0..d {
                let b = d - a;
                if !self.levels[d][a].is_zero() {
                    out.levels[d - 1][a] = &self.levels[d][a] * rat_int(b as i64);
                }
            }
        }
        out
    }

    /// General substitution `p(a, b)` for arguments without constant term.
    ///
    /// Exact through `min` of all three truncations; graded because
    /// `ord a, ord b >= 1` makes high-degree terms of `p` irrelevant below the
    /// truncation.
    pub fn compose(&self, a: &Self, b: &Self) -> Result<Self> {
        for (name, arg) in [("first", a), ("second", b)] {
            if !arg.get(0, 0).is_zero() {
                let _ = name;
                return Err(EngineError::CompositionConstantTerm);
            }
        }
        let trunc = self.trunc.min(a.trunc).min(b.trunc);
        let a = a.with_truncation(trunc);
        let b = b.with_truncation(trunc);
        // Powers of `a`; a^k has order >= k so the table stops paying for
        // itself past the truncation.
        let mut pow_a = Vec::with_capacity(trunc + 1);
        pow_a.push(Self::one(trunc));
        for k in 1..=trunc {
            pow_a.push(pow_a[k - 1].mul(&a));
        }
        // Group by beta: S_beta = sum_alpha p_{alpha,beta} a^alpha needs only
        // scalar multiples; one series product per beta afterwards.
        let mut out = Self::zero(trunc);
        let mut pow_b = Self::one(trunc);
        for beta in 0..=trunc {
            let mut s_beta = Self::zero(trunc);
            let mut any = false;
            for alpha in 0..=trunc.min(self.trunc.saturating_sub(beta)) {
                if alpha + beta > self.trunc {
                    break;
                }
                let c = &self.levels[alpha + beta][alpha];
                if !c.is_zero() {
                    s_beta = s_beta.add_impl(&pow_a[alpha].scale(c), false);
                    any = true;
                }
            }
            if any {
                out = out.add_impl(&s_beta.mul(&pow_b), false);
            }
            if beta < trunc {
                pow_b = pow_b.mul(&b);
            }
        }
        Ok(out)
    }

    /// Near-identity substitution `p(x + c, y + d)` with `ord c, ord d >= 2`,
    /// evaluated as a Taylor shift. Much cheaper than `compose` when the
    /// perturbations have high order.
    pub fn compose_shift(&self, c: &Self, d: &Self) -> Result<Self> {
        for (ctx, arg) in [("shift c", c), ("shift d", d)] {
            if !arg.ord().at_least(2) {
                return Err(EngineError::OrderTooLow {
                    context: if ctx == "shift c" {
                        "compose_shift first perturbation"
                    } else {
                        "compose_shift second perturbation"
                    },
                    expected: 2,
                    actual: arg.ord(),
                });
            }
        }
        let trunc = self.trunc.min(c.trunc).min(d.trunc);
        let ord_c = c.ord().finite().unwrap_or(trunc + 1).max(2);
        let ord_d = d.ord().finite().unwrap_or(trunc + 1).max(2);
        let c = c.with_truncation(trunc);
        let d = d.with_truncation(trunc);

        let mut out = self.with_truncation(trunc);
        // row_i = (1/i!) d^i/dx^i p, built incrementally; within a row the
        // scaled y-derivatives are built the same way.
        let mut row = self.with_truncation(trunc);
        let mut pow_c = Self::one(trunc);
        let max_i = trunc / ord_c;
        for i in 0..=max_i {
            if i > 0 {
                row = row.partial_x().scale(&Rat::new(1.into(), (i as i64).into()));
                pow_c = pow_c.mul(&c);
                if pow_c.is_zero() {
                    break;
                }
            }
            let mut term = row.clone();
            let mut pow = pow_c.clone();
            let max_j = (trunc.saturating_sub(i * ord_c)) / ord_d;
            for j in 0..=max_j {
                if j > 0 {
                    term = term
                        .partial_y()
                        .scale(&Rat::new(1.into(), (j as i64).into()));
                    pow = pow.mul(&d);
                    if pow.is_zero() {
                        break;
                    }
                }
                if i == 0 && j == 0 {
                    continue; // identity term already in `out`
                }
                out = out.add_impl(&term.with_truncation(trunc).mul(&pow), false);
            }
        }
        Ok(out)
    }
}

/// Inverts the near-identity map `(x, y) -> (x + u, y + v)` with
/// `ord u, ord v >= 2`, returning `(ũ, ṽ)` such that composing either way is
/// the identity through the common truncation.
///
/// Solved degree by degree from the fixed-point form
/// `ũ = -u(x + ũ, y + ṽ)`, `ṽ = -v(x + ũ, y + ṽ)`.
pub fn invert_near_identity(u: &BiSeries, v: &BiSeries) -> Result<(BiSeries, BiSeries)> {
    for (ctx, s) in [("invert u", u), ("invert v", v)] {
        if !s.ord().at_least(2) {
            return Err(EngineError::OrderTooLow {
                context: if ctx == "invert u" {
                    "invert_near_identity u"
                } else {
                    "invert_near_identity v"
                },
                expected: 2,
                actual: s.ord(),
            });
        }
    }
    let trunc = u.truncation().min(v.truncation());
    let mut iu = BiSeries::zero(trunc);
    let mut iv = BiSeries::zero(trunc);
    for n in 2..=trunc {
        // Degree-n output depends only on degrees < n of the inverse.
        let cu = u.with_truncation(n).compose_shift(&iu.with_truncation(n), &iv.with_truncation(n))?;
        let cv = v.with_truncation(n).compose_shift(&iu.with_truncation(n), &iv.with_truncation(n))?;
        for a in 0..=n {
            let b = n - a;
            iu.set(a, b, -cu.get(a, b));
            iv.set(a, b, -cv.get(a, b));
        }
    }
    Ok((iu, iv))
}

impl Add for &BiSeries {
    type Output = BiSeries;
    fn add(self, other: &BiSeries) -> BiSeries {
        self.add_impl(other, false)
    }
}

impl Sub for &BiSeries {
    type Output = BiSeries;
    fn sub(self, other: &BiSeries) -> BiSeries {
        self.add_impl(other, true)
    }
}

impl Mul for &BiSeries {
    type Output = BiSeries;
    fn mul(self, other: &BiSeries) -> BiSeries {
        BiSeries::mul(self, other)
    }
}

impl Neg for &BiSeries {
    type Output = BiSeries;
    fn neg(self) -> BiSeries {
        self.scale(&-Rat::one())
    }
}

impl fmt::Debug for BiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiSeries[N={}](", self.trunc)?;
        let mut first = true;
        for (a, b, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "({c}) x^{a} y^{b}")?;
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}
