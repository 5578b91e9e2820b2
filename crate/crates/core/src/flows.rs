//! Formal flows of the planar fields: the time-t map has the form
//! `phi_t = e^{At} x + sum B_I(t) x^I` with every `B_I` a polynomial in `t`
//! (the linear part is nilpotent), computed degree by degree from
//! `B_I(t) = e^{At} int_0^t e^{-As} b_I(s) ds`. On top sit the time-1 map,
//! embeddability and nonlinearity certificates, and the transfer of formal
//! linearization to the time-1 map of a parabolic map.

use crate::error::{EngineError, Result};
use crate::order::Order;
use crate::rat::{rat_int, Rat};
use crate::series::{BiSeries, TimePolynomial};
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use num::{One, Zero};
use std::collections::BTreeMap;

/// Scalar series in `(x, y)` with polynomial-in-`t` coefficients, truncated
/// by total degree; the working representation of a flow component.
#[derive(Clone, Debug, PartialEq, Eq)]
struct TSeries {
    trunc: usize,
    terms: BTreeMap<(usize, usize), TimePolynomial>,
}

impl TSeries {
    fn zero(trunc: usize) -> Self {
        TSeries {
            trunc,
            terms: BTreeMap::new(),
        }
    }

    fn get(&self, a: usize, b: usize) -> TimePolynomial {
        self.terms
            .get(&(a, b))
            .cloned()
            .unwrap_or_else(TimePolynomial::zero)
    }

    fn set(&mut self, a: usize, b: usize, p: TimePolynomial) {
        assert!(a + b <= self.trunc);
        if p.is_zero() {
            self.terms.remove(&(a, b));
        } else {
            self.terms.insert((a, b), p);
        }
    }

    fn with_truncation(&self, trunc: usize) -> Self {
        let mut out = TSeries::zero(trunc);
        for (&(a, b), p) in &self.terms {
            if a + b <= trunc {
                out.terms.insert((a, b), p.clone());
            }
        }
        out
    }

    fn add(&self, other: &Self) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = self.with_truncation(trunc);
        for (&(a, b), p) in &other.terms {
            if a + b <= trunc {
                let q = &out.get(a, b) + p;
                out.set(a, b, q);
            }
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let trunc = self.trunc.min(other.trunc);
        let mut out = TSeries::zero(trunc);
        for (&(a1, b1), p1) in &self.terms {
            if a1 + b1 > trunc {
                continue;
            }
            for (&(a2, b2), p2) in &other.terms {
                let (a, b) = (a1 + a2, b1 + b2);
                if a + b <= trunc {
                    let q = &out.get(a, b) + &(p1 * p2);
                    out.set(a, b, q);
                }
            }
        }
        out
    }

    fn scale(&self, c: &Rat) -> Self {
        let mut out = TSeries::zero(self.trunc);
        for (&(a, b), p) in &self.terms {
            out.set(a, b, p.scale(c));
        }
        out
    }

    /// Termwise d/dt.
    fn dt(&self) -> Self {
        let mut out = TSeries::zero(self.trunc);
        for (&(a, b), p) in &self.terms {
            out.set(a, b, p.derivative());
        }
        out
    }

    /// Termwise integral from 0 in `t`.
    fn integral(&self) -> Self {
        let mut out = TSeries::zero(self.trunc);
        for (&(a, b), p) in &self.terms {
            out.set(a, b, p.integral());
        }
        out
    }

    fn eval(&self, t0: &Rat) -> BiSeries {
        let mut out = BiSeries::zero(self.trunc);
        for (&(a, b), p) in &self.terms {
            out.set(a, b, p.eval(t0));
        }
        out
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Substitutes the two components into the nonlinear parts `(f, g)` of a
/// field, truncated at `trunc`: the degree-`d` output slice only consumes
/// input coefficients of degree `< d` beyond the linear part.
fn substitute(vf: &PlanarVectorField, c1: &TSeries, c2: &TSeries, trunc: usize) -> (TSeries, TSeries) {
    let a1 = c1.with_truncation(trunc);
    let a2 = c2.with_truncation(trunc);
    // power tables
    let max_pow = trunc;
    let mut pows1: Vec<TSeries> = vec![TSeries::zero(trunc)];
    pows1[0].set(0, 0, TimePolynomial::constant(Rat::one()));
    let mut pows2 = pows1.clone();
    for k in 1..=max_pow {
        pows1.push(pows1[k - 1].mul(&a1));
        pows2.push(pows2[k - 1].mul(&a2));
    }
    let assemble = |s: &BiSeries| {
        let mut acc = TSeries::zero(trunc);
        for (a, b, c) in s.terms() {
            if a + b > trunc {
                continue;
            }
            acc = acc.add(&pows1[a].mul(&pows2[b]).scale(c));
        }
        acc
    };
    (assemble(vf.f()), assemble(vf.g()))
}

/// The formal flow: linear part `e^{At} = [[1, t], [0, 1]]` plus the
/// polynomial-in-`t` coefficients `B_I` for `2 <= |I| <= truncation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowMap {
    trunc: usize,
    /// `(alpha, beta) -> (B_I component 1, component 2)`.
    terms: BTreeMap<(usize, usize), (TimePolynomial, TimePolynomial)>,
}

impl FlowMap {
    pub fn truncation(&self) -> usize {
        self.trunc
    }

    pub fn coefficient(&self, alpha: usize, beta: usize) -> (TimePolynomial, TimePolynomial) {
        self.terms
            .get(&(alpha, beta))
            .cloned()
            .unwrap_or_else(|| (TimePolynomial::zero(), TimePolynomial::zero()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &(TimePolynomial, TimePolynomial))> {
        self.terms.iter()
    }

    fn components(&self) -> (TSeries, TSeries) {
        let n = self.trunc;
        let mut c1 = TSeries::zero(n);
        c1.set(1, 0, TimePolynomial::constant(Rat::one()));
        c1.set(0, 1, TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::one()]));
        let mut c2 = TSeries::zero(n);
        c2.set(0, 1, TimePolynomial::constant(Rat::one()));
        for (&(a, b), (p1, p2)) in &self.terms {
            let q1 = &c1.get(a, b) + p1;
            c1.set(a, b, q1);
            let q2 = &c2.get(a, b) + p2;
            c2.set(a, b, q2);
        }
        (c1, c2)
    }
}

/// Computes the flow through total degree `n_max`: per degree the forcing
/// `b_I` is the `x^I` coefficient of `(f, g)` composed with the flow known
/// so far, and `B_I = e^{At} int_0^t e^{-As} b_I ds` integrates it.
pub fn flow_map(vf: &PlanarVectorField, n_max: usize) -> FlowMap {
    let vf = vf.with_truncation(n_max);
    let mut flow = FlowMap {
        trunc: n_max,
        terms: BTreeMap::new(),
    };
    let t = TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::one()]);
    for d in 2..=n_max {
        let (c1, c2) = flow.components();
        let (p1, p2) = substitute(&vf, &c1, &c2, d);
        for alpha in 0..=d {
            let beta = d - alpha;
            let b1 = p1.get(alpha, beta);
            let b2 = p2.get(alpha, beta);
            if b1.is_zero() && b2.is_zero() {
                continue;
            }
            // e^{-As} b = (b1 - s b2, b2); integrate; apply e^{At}
            let i2 = b2.integral();
            let big1 = &(&b1 - &(&t * &b2)).integral() + &(&t * &i2);
            // degree guard for the recursion's bookkeeping: the coefficients
            // of x-degree k carry t-degree at most 3k - 2 (each linear-part
            // factor contributes a power of t, and forming B_I from b_I adds
            // two more; tight already at degree 2 via the (ty)^2 term)
            for p in [&big1, &i2] {
                assert!(
                    p.degree().unwrap_or(0) <= 3 * d - 2,
                    "B coefficient at ({alpha}, {beta}) has t-degree {:?} beyond 3*{d} - 2",
                    p.degree()
                );
            }
            flow.terms.insert((alpha, beta), (big1, i2));
        }
    }
    flow
}

/// Independent construction of the same flow by Picard iteration:
/// `phi <- id + int_0^t F(phi(s)) ds` starting from the identity, run to a
/// fixed point (the joint (x, t)-degree filtration is finite at a fixed
/// truncation, so the iteration stabilizes). Shares only the raw series
/// arithmetic with `flow_map`, none of the degree-by-degree recursion.
pub fn picard_flow(vf: &PlanarVectorField, n_max: usize) -> FlowMap {
    let vf = vf.with_truncation(n_max);
    let mut id1 = TSeries::zero(n_max);
    id1.set(1, 0, TimePolynomial::constant(Rat::one()));
    let mut id2 = TSeries::zero(n_max);
    id2.set(0, 1, TimePolynomial::constant(Rat::one()));
    let (mut c1, mut c2) = (id1.clone(), id2.clone());
    // each pass extends the range of exact t-degrees, which is bounded by
    // the guard in flow_map plus the linear part's degree
    for _ in 0..(3 * n_max + 3) {
        let (p1, p2) = substitute(&vf, &c1, &c2, n_max);
        let n1 = id1.add(&c2.add(&p1).integral());
        let n2 = id2.add(&p2.integral());
        if n1 == c1 && n2 == c2 {
            break;
        }
        c1 = n1;
        c2 = n2;
    }
    // peel off the linear part, which must be e^{At}
    let t = TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::one()]);
    assert_eq!(c1.get(1, 0), TimePolynomial::constant(Rat::one()));
    assert_eq!(c1.get(0, 1), t);
    assert_eq!(c2.get(0, 1), TimePolynomial::constant(Rat::one()));
    assert!(c2.get(1, 0).is_zero());
    let mut flow = FlowMap {
        trunc: n_max,
        terms: BTreeMap::new(),
    };
    for d in 2..=n_max {
        for alpha in 0..=d {
            let beta = d - alpha;
            let b1 = c1.get(alpha, beta);
            let b2 = c2.get(alpha, beta);
            if !b1.is_zero() || !b2.is_zero() {
                flow.terms.insert((alpha, beta), (b1, b2));
            }
        }
    }
    flow
}

/// The flow evaluated at an exact time `t0`, as a pair of series; the
/// linear part is `(x + t0 y, y)`.
pub fn evaluate_flow(flow: &FlowMap, t0: &Rat) -> (BiSeries, BiSeries) {
    let (c1, c2) = flow.components();
    (c1.eval(t0), c2.eval(t0))
}

/// `d/dt phi_t - F o phi_t` through the truncation; exactly zero certifies
/// the flow against its defining equation.
pub fn flow_derivative_residual(flow: &FlowMap, vf: &PlanarVectorField) -> bool {
    let n = flow.trunc.min(vf.truncation());
    let (c1, c2) = flow.components();
    let (c1, c2) = (c1.with_truncation(n), c2.with_truncation(n));
    let (p1, p2) = substitute(&vf.with_truncation(n), &c1, &c2, n);
    // F o phi = A phi + nonlinear = (phi_2 + f(phi), g(phi))
    let rhs1 = c2.add(&p1);
    let rhs2 = p2;
    let z1 = c1.dt().add(&rhs1.scale(&rat_int(-1)));
    let z2 = c2.dt().add(&rhs2.scale(&rat_int(-1)));
    z1.is_zero() && z2.is_zero()
}

/// General composition of transformation pairs (no constant terms).
pub fn compose_pair(
    outer: &(BiSeries, BiSeries),
    inner: &(BiSeries, BiSeries),
) -> Result<(BiSeries, BiSeries)> {
    Ok((
        outer.0.compose(&inner.0, &inner.1)?,
        outer.1.compose(&inner.0, &inner.1)?,
    ))
}

/// `phi_{s0} o phi_{t0} - phi_{s0 + t0}` through degree `n`; zero certifies
/// the one-parameter group law at the truncation.
pub fn group_law_residual(
    flow: &FlowMap,
    s0: &Rat,
    t0: &Rat,
    n: usize,
) -> Result<(BiSeries, BiSeries)> {
    let at_s = evaluate_flow(flow, s0);
    let at_t = evaluate_flow(flow, t0);
    let at_sum = evaluate_flow(flow, &(s0 + t0));
    let comp = compose_pair(&at_s, &at_t)?;
    Ok((
        (&comp.0 - &at_sum.0).with_truncation(n),
        (&comp.1 - &at_sum.1).with_truncation(n),
    ))
}

/// Witness that the time-`t0` map is not linear: the lowest-order nonlinear
/// coefficient of the field (ties broken by the largest x-exponent) forces
/// `B_{I0}(t0) = [[t0, t0^2/2], [0, t0]] F_{I0} != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonlinearityCertificate {
    Linear,
    Witness {
        index: (usize, usize),
        value: (Rat, Rat),
    },
}

pub fn nonlinearity_certificate(
    vf: &PlanarVectorField,
    t0: &Rat,
    n_max: usize,
) -> Result<NonlinearityCertificate> {
    if t0.is_zero() {
        return Err(EngineError::Precondition(
            "nonlinearity witnesses need t0 != 0".into(),
        ));
    }
    let vf = vf.with_truncation(n_max);
    // the selection: minimal |I| with (f_I, g_I) != 0, then maximal alpha
    let mut i0: Option<(usize, usize)> = None;
    for d in 2..=n_max {
        for alpha in (0..=d).rev() {
            let beta = d - alpha;
            if !vf.f().get(alpha, beta).is_zero() || !vf.g().get(alpha, beta).is_zero() {
                i0 = Some((alpha, beta));
                break;
            }
        }
        if i0.is_some() {
            break;
        }
    }
    let Some((alpha, beta)) = i0 else {
        return Ok(NonlinearityCertificate::Linear);
    };
    let f1 = vf.f().get(alpha, beta);
    let f2 = vf.g().get(alpha, beta);
    let half_t2 = t0 * t0 / rat_int(2);
    let value = (t0 * &f1 + &half_t2 * &f2, t0 * &f2);
    // the flow's own coefficient must match the closed form
    let flow = flow_map(&vf, alpha + beta);
    let (b1, b2) = flow.coefficient(alpha, beta);
    if (b1.eval(t0), b2.eval(t0)) != value {
        return Err(EngineError::Certificate(
            "flow coefficient disagrees with the leading-witness closed form".into(),
        ));
    }
    if value.0.is_zero() && value.1.is_zero() {
        return Err(EngineError::Certificate(
            "leading nonlinearity witness evaluated to zero".into(),
        ));
    }
    Ok(NonlinearityCertificate::Witness {
        index: (alpha, beta),
        value,
    })
}

/// A planar map with linear part `T(x, y) = (x + y, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicMap {
    c1: BiSeries,
    c2: BiSeries,
}

impl ParabolicMap {
    pub fn new(c1: BiSeries, c2: BiSeries) -> Result<Self> {
        let lin1 = &(&c1 - &BiSeries::var_x(c1.truncation())) - &BiSeries::var_y(c1.truncation());
        let lin2 = &c2 - &BiSeries::var_y(c2.truncation());
        if !c1.get(0, 0).is_zero()
            || !c2.get(0, 0).is_zero()
            || !lin1.ord().at_least(2)
            || !lin2.ord().at_least(2)
        {
            return Err(EngineError::Precondition(
                "parabolic maps must have linear part (x + y, y)".into(),
            ));
        }
        Ok(ParabolicMap { c1, c2 })
    }

    pub fn t_map(trunc: usize) -> Self {
        ParabolicMap {
            c1: &BiSeries::var_x(trunc) + &BiSeries::var_y(trunc),
            c2: BiSeries::var_y(trunc),
        }
    }

    pub fn components(&self) -> (&BiSeries, &BiSeries) {
        (&self.c1, &self.c2)
    }

    pub fn truncation(&self) -> usize {
        self.c1.truncation().min(self.c2.truncation())
    }
}

/// Time-1 map of the flow as a parabolic map.
pub fn time_one(flow: &FlowMap) -> Result<ParabolicMap> {
    let (c1, c2) = evaluate_flow(flow, &Rat::one());
    ParabolicMap::new(c1, c2)
}

/// Whether `map` is the time-1 map of `vf` through degree `n`, with the
/// residual pair as evidence either way.
pub fn embed_check(
    map: &ParabolicMap,
    vf: &PlanarVectorField,
    n: usize,
) -> Result<(bool, (BiSeries, BiSeries))> {
    let flow = flow_map(vf, n);
    let phi1 = time_one(&flow)?;
    let r1 = (&map.c1 - &phi1.c1).with_truncation(n);
    let r2 = (&map.c2 - &phi1.c2).with_truncation(n);
    Ok((r1.is_zero() && r2.is_zero(), (r1, r2)))
}

/// Outcome of the linearization-transfer implication.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransferOutcome {
    /// The pushforward is linear through the truncation and the conjugated
    /// time-1 map equals `T` — the implication verified on both sides.
    Verified,
    /// The hypothesis fails: the pushforward keeps a nonlinear term at this
    /// order, so the implication is vacuous here.
    NotLinear { obstruction_order: Order },
}

/// Checks: if `Phi_* v` is linear through degree `n`, then
/// `Phi o phi_1 o Phi^{-1} = T` through degree `n`.
pub fn linearization_transfer_check(
    vf: &PlanarVectorField,
    phi: &NormalizedTransformation,
    n: usize,
) -> Result<TransferOutcome> {
    let pushed = phi.pushforward(&vf.with_truncation(n))?;
    let obstruction = pushed.f().ord().min(pushed.g().ord());
    if let Order::Finite(k) = obstruction {
        if k <= n {
            return Ok(TransferOutcome::NotLinear {
                obstruction_order: obstruction,
            });
        }
    }
    let flow = flow_map(vf, n);
    let phi1 = evaluate_flow(&flow, &Rat::one());
    let inv = phi.inverse()?;
    let conj = compose_pair(&phi.as_map(), &compose_pair(&phi1, &inv.as_map())?)?;
    let t = ParabolicMap::t_map(n);
    let ok = (&conj.0 - &t.c1).with_truncation(n).is_zero()
        && (&conj.1 - &t.c2).with_truncation(n).is_zero();
    if ok {
        Ok(TransferOutcome::Verified)
    } else {
        Err(EngineError::Certificate(
            "pushforward is linear but the conjugated time-1 map is not T".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use num::Zero;

    fn field(n: usize, f: &[(usize, usize, i64)], g: &[(usize, usize, i64)]) -> PlanarVectorField {
        let conv = |terms: &[(usize, usize, i64)]| {
            BiSeries::from_terms(
                n,
                &terms
                    .iter()
                    .map(|&(a, b, c)| (a, b, rat_int(c)))
                    .collect::<Vec<_>>(),
            )
            .unwrap()
        };
        PlanarVectorField::new(conv(f), conv(g)).unwrap()
    }

    #[test]
    fn linear_flow() {
        let flow = flow_map(&PlanarVectorField::linear(6), 6);
        assert!(flow.terms.is_empty());
        let (c1, c2) = evaluate_flow(&flow, &rat_int(1));
        assert_eq!(c1, &BiSeries::var_x(6) + &BiSeries::var_y(6));
        assert_eq!(c2, BiSeries::var_y(6));
        assert!(flow_derivative_residual(&flow, &PlanarVectorField::linear(6)));
    }

    #[test]
    fn quadratic_coefficient_closed_form() {
        // vf = (y, x^2): B_{(2,0)}(t) = (t^2/2, t)
        let vf = field(6, &[], &[(2, 0, 1)]);
        let flow = flow_map(&vf, 6);
        let (b1, b2) = flow.coefficient(2, 0);
        assert_eq!(
            b1,
            TimePolynomial::from_coeffs(vec![Rat::zero(), Rat::zero(), rat(1, 2)])
        );
        assert_eq!(b2, TimePolynomial::from_coeffs(vec![Rat::zero(), rat_int(1)]));
        // every B_I vanishes at t = 0; t = 0 evaluates to the identity
        for (_, (p1, p2)) in flow.terms() {
            assert!(p1.eval(&Rat::zero()).is_zero());
            assert!(p2.eval(&Rat::zero()).is_zero());
        }
        let (c1, c2) = evaluate_flow(&flow, &Rat::zero());
        assert_eq!(c1, BiSeries::var_x(6));
        assert_eq!(c2, BiSeries::var_y(6));
        assert!(flow_derivative_residual(&flow, &vf));
        // time-1 y-component picks up the x^2 coefficient 1
        let phi1 = time_one(&flow).unwrap();
        assert_eq!(phi1.components().1.get(2, 0), rat_int(1));
    }

    #[test]
    fn picard_matches_recursion() {
        let vf = field(5, &[(2, 0, 1), (1, 1, -1)], &[(2, 0, 1), (0, 3, 1)]);
        assert_eq!(picard_flow(&vf, 5), flow_map(&vf, 5));
        let lin = PlanarVectorField::linear(5);
        assert_eq!(picard_flow(&lin, 5), flow_map(&lin, 5));
    }

    #[test]
    fn group_law() {
        let vf = field(6, &[], &[(2, 0, 1)]);
        let flow = flow_map(&vf, 6);
        for (s0, t0) in [
            (rat_int(0), rat_int(0)),
            (rat_int(1), rat_int(-1)),
            (rat(1, 2), rat(1, 3)),
        ] {
            let (r1, r2) = group_law_residual(&flow, &s0, &t0, 6).unwrap();
            assert!(r1.is_zero() && r2.is_zero(), "failed at ({s0}, {t0})");
        }
    }

    #[test]
    fn nonlinearity_witnesses() {
        let lin = nonlinearity_certificate(&PlanarVectorField::linear(6), &rat_int(1), 6).unwrap();
        assert_eq!(lin, NonlinearityCertificate::Linear);
        let vf = field(6, &[], &[(2, 0, 1)]);
        let w = nonlinearity_certificate(&vf, &rat_int(1), 6).unwrap();
        assert_eq!(
            w,
            NonlinearityCertificate::Witness {
                index: (2, 0),
                value: (rat(1, 2), rat_int(1)),
            }
        );
        let w = nonlinearity_certificate(&vf, &rat(1, 3), 6).unwrap();
        assert_eq!(
            w,
            NonlinearityCertificate::Witness {
                index: (2, 0),
                value: (rat(1, 18), rat(1, 3)),
            }
        );
        assert!(nonlinearity_certificate(&vf, &Rat::zero(), 6).is_err());
    }

    #[test]
    fn embed_examples() {
        // T embeds the linear field
        let (ok, _) = embed_check(&ParabolicMap::t_map(6), &PlanarVectorField::linear(6), 6).unwrap();
        assert!(ok);
        // self-consistency for (y, x^2)
        let vf = field(6, &[], &[(2, 0, 1)]);
        let phi1 = time_one(&flow_map(&vf, 6)).unwrap();
        let (ok, _) = embed_check(&phi1, &vf, 6).unwrap();
        assert!(ok);
        // T is not the time-1 map of (y, x^2): residual witnesses (1/2, 1) x^2
        let (ok, (r1, r2)) = embed_check(&ParabolicMap::t_map(6), &vf, 6).unwrap();
        assert!(!ok);
        assert_eq!(r1.get(2, 0), rat(-1, 2));
        assert_eq!(r2.get(2, 0), rat_int(-1));
    }

    #[test]
    fn naturality_under_pushforward() {
        // flow of psi_* v = psi o phi_t o psi^{-1}
        let n = 8;
        let base = field(n, &[(2, 0, 1)], &[(1, 1, 1)]);
        let u = BiSeries::from_terms(n, &[(2, 0, rat_int(1))]).unwrap();
        let v = BiSeries::from_terms(n, &[(1, 1, rat(-1, 2))]).unwrap();
        let psi = NormalizedTransformation::new(u, v).unwrap();
        let pushed = psi.pushforward(&base).unwrap();
        let flow_base = flow_map(&base, n);
        let flow_pushed = flow_map(&pushed, n);
        let inv = psi.inverse().unwrap();
        for t0 in [rat_int(1), rat(-2, 3)] {
            let direct = evaluate_flow(&flow_pushed, &t0);
            let via = compose_pair(
                &psi.as_map(),
                &compose_pair(&evaluate_flow(&flow_base, &t0), &inv.as_map()).unwrap(),
            )
            .unwrap();
            assert_eq!(direct.0, via.0, "t = {t0}");
            assert_eq!(direct.1, via.1, "t = {t0}");
        }
    }

    #[test]
    fn transfer_check_examples() {
        let n = 8;
        assert_eq!(
            linearization_transfer_check(
                &PlanarVectorField::linear(n),
                &NormalizedTransformation::identity(n),
                n
            )
            .unwrap(),
            TransferOutcome::Verified
        );
        // constructed linearizable pair: v = psi_*(y, 0), Phi = psi^{-1}
        let u = BiSeries::from_terms(n, &[(1, 1, rat(1, 2))]).unwrap();
        let v = BiSeries::from_terms(n, &[(2, 0, rat_int(1))]).unwrap();
        let psi = NormalizedTransformation::new(u, v).unwrap();
        let vf = psi.pushforward(&PlanarVectorField::linear(n)).unwrap();
        let phi = psi.inverse().unwrap();
        assert_eq!(
            linearization_transfer_check(&vf, &phi, n).unwrap(),
            TransferOutcome::Verified
        );
        // (y, x^2) is obstructed at order 2 for any candidate
        let vf = field(n, &[], &[(2, 0, 1)]);
        assert_eq!(
            linearization_transfer_check(&vf, &NormalizedTransformation::identity(n), n).unwrap(),
            TransferOutcome::NotLinear {
                obstruction_order: Order::Finite(2)
            }
        );
    }
}
