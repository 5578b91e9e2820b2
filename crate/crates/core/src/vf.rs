//! Planar vector fields with nilpotent linear part and the group of
//! normalized near-identity transformations.

use crate::error::{EngineError, Result};
use crate::series::{invert_near_identity, BiSeries};
use num::Zero;

/// The system `dx/dt = y + f(x,y)`, `dy/dt = g(x,y)` with `ord f, ord g >= 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarVectorField {
    f: BiSeries,
    g: BiSeries,
}

impl PlanarVectorField {
    pub fn new(f: BiSeries, g: BiSeries) -> Result<Self> {
        for (name, s) in [("f", &f), ("g", &g)] {
            if !s.ord().at_least(2) {
                return Err(EngineError::OrderTooLow {
                    context: if name == "f" {
                        "vector field component f"
                    } else {
                        "vector field component g"
                    },
                    expected: 2,
                    actual: s.ord(),
                });
            }
        }
        Ok(PlanarVectorField { f, g })
    }

    pub fn linear(trunc: usize) -> Self {
        PlanarVectorField {
            f: BiSeries::zero(trunc),
            g: BiSeries::zero(trunc),
        }
    }

    pub fn f(&self) -> &BiSeries {
        &self.f
    }

    pub fn g(&self) -> &BiSeries {
        &self.g
    }

    pub fn truncation(&self) -> usize {
        self.f.truncation().min(self.g.truncation())
    }

    pub fn with_truncation(&self, trunc: usize) -> Self {
        PlanarVectorField {
            f: self.f.with_truncation(trunc),
            g: self.g.with_truncation(trunc),
        }
    }

    /// Full components `(y + f, g)`.
    pub fn components(&self) -> (BiSeries, BiSeries) {
        let n = self.truncation();
        (
            &BiSeries::var_y(n) + &self.f.with_truncation(n),
            self.g.with_truncation(n),
        )
    }
}

/// Near-identity map `x' = x + u, y' = y + v` with `ord u, ord v >= 2` and
/// the normalizing condition `u(0,y) = v(0,y) = 0`: it preserves the y-axis
/// pointwise, which is what makes the Takens normalization unique. These maps
/// form a group under composition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedTransformation {
    u: BiSeries,
    v: BiSeries,
}

impl NormalizedTransformation {
    pub fn new(u: BiSeries, v: BiSeries) -> Result<Self> {
        for (name, s) in [("u", &u), ("v", &v)] {
            if !s.ord().at_least(2) {
                return Err(EngineError::OrderTooLow {
                    context: if name == "u" {
                        "transformation component u"
                    } else {
                        "transformation component v"
                    },
                    expected: 2,
                    actual: s.ord(),
                });
            }
            for b in 0..=s.truncation() {
                if !s.get(0, b).is_zero() {
                    return Err(EngineError::NotNormalized(format!(
                        "{name}(0, y) has a nonzero y^{b} coefficient"
                    )));
                }
            }
        }
        Ok(NormalizedTransformation { u, v })
    }

    pub fn identity(trunc: usize) -> Self {
        NormalizedTransformation {
            u: BiSeries::zero(trunc),
            v: BiSeries::zero(trunc),
        }
    }

    pub fn u(&self) -> &BiSeries {
        &self.u
    }

    pub fn v(&self) -> &BiSeries {
        &self.v
    }

    pub fn truncation(&self) -> usize {
        self.u.truncation().min(self.v.truncation())
    }

    pub fn is_identity(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    /// The map as a component pair `(x + u, y + v)`.
    pub fn as_map(&self) -> (BiSeries, BiSeries) {
        let n = self.truncation();
        (
            &BiSeries::var_x(n) + &self.u.with_truncation(n),
            &BiSeries::var_y(n) + &self.v.with_truncation(n),
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let cu = &other.u.with_truncation(self.truncation().min(other.truncation()))
            + &self.u.compose_shift(&other.u, &other.v)?;
        let cv = &other.v.with_truncation(self.truncation().min(other.truncation()))
            + &self.v.compose_shift(&other.u, &other.v)?;
        NormalizedTransformation::new(cu, cv)
    }

    pub fn inverse(&self) -> Result<Self> {
        let (iu, iv) = invert_near_identity(&self.u, &self.v)?;
        NormalizedTransformation::new(iu, iv)
    }

    /// Pushforward `Φ_* v = (DΦ · v) ∘ Φ^{-1}` of a planar field, again a
    /// field of the same shape (the linear part `(y, 0)` is preserved).
    pub fn pushforward(&self, vf: &PlanarVectorField) -> Result<PlanarVectorField> {
        let n = self.truncation().min(vf.truncation());
        let u = self.u.with_truncation(n);
        let v = self.v.with_truncation(n);
        let f = vf.f().with_truncation(n);
        let g = vf.g().with_truncation(n);
        let y_plus_f = &BiSeries::var_y(n) + &f;
        // DΦ·(y+f, g): derivatives are exact through n-1, but every product
        // pairs them with ord >= 1 factors, so padding back to n is exact.
        let comp1 = &(&y_plus_f + &u.partial_x().with_truncation(n).mul(&y_plus_f))
            + &u.partial_y().with_truncation(n).mul(&g);
        let comp2 = &(&g + &v.partial_x().with_truncation(n).mul(&y_plus_f))
            + &v.partial_y().with_truncation(n).mul(&g);
        let (iu, iv) = invert_near_identity(&u, &v)?;
        let new1 = comp1.compose_shift(&iu, &iv)?;
        let new2 = comp2.compose_shift(&iu, &iv)?;
        let new_f = &new1 - &BiSeries::var_y(n);
        PlanarVectorField::new(new_f, new2)
    }
}
