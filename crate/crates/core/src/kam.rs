//! Iterative normalization with order doubling: each step solves the
//! approximate linearized equations, pushes the field forward, and at least
//! doubles the order of the non-normalized part when the field has a
//! non-singular formal integral. The series layer stays exact; floating
//! point enters only through the majorant-norm surrogates in the trace.

use crate::error::{EngineError, Result};
use crate::order::Order;
use crate::rat::{rat, rat_int, rat_to_f64, Rat};
use crate::series::{BiSeries, UniSeries};
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use num::{One, Signed};

/// Solution of the approximate equations
/// `-y u_x + f0~ = f + f0 u_x - f0' u - v` and `-y v_x + g0~ = g + f0 v_x`
/// under the normalization `u(0,y) = v(0,y) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximateSolution {
    pub u: BiSeries,
    pub v: BiSeries,
    pub f0_tilde: UniSeries,
    pub g0_tilde: UniSeries,
}

/// The order of the non-normalized part: `min(ord f1, ord g)` where
/// `f = f0(x) + f1` with `f1` in the ideal `(y)`.
pub fn defect_order(vf: &PlanarVectorField) -> Order {
    vf.f().project_pi().ord().min(vf.g().ord())
}

/// Solves the approximate equations exactly through degree `n_max`, degree
/// by degree: the products with `f0` (order >= 2) only consume
/// lower-degree unknowns, so each coefficient is forced.
pub fn approximate_solve(vf: &PlanarVectorField, n_max: usize) -> Result<ApproximateSolution> {
    let f = vf.f().with_truncation(n_max);
    let g = vf.g().with_truncation(n_max);
    let f0 = f.restrict_y0();
    let f0_bi = f0.embed_x(n_max);
    let f0p_bi = f0.derivative().embed_x(n_max);

    let mut v = BiSeries::zero(n_max);
    for d in 2..=n_max {
        let prod = f0_bi
            .with_truncation(d)
            .mul(&v.partial_x().with_truncation(d));
        for a in 1..=d {
            let b = d - a;
            let val = -(&g.get(a - 1, b + 1) + &prod.get(a - 1, b + 1)) / rat_int(a as i64);
            v.set(a, b, val);
        }
    }
    let g0_tilde = (&g + &f0_bi.mul(&v.partial_x().with_truncation(n_max))).restrict_y0();

    let mut u = BiSeries::zero(n_max);
    for d in 2..=n_max {
        // rhs = f + f0 u_x - f0' u - v at truncation d
        let rhs = &(&f.with_truncation(d)
            + &f0_bi
                .with_truncation(d)
                .mul(&u.partial_x().with_truncation(d)))
            - &(&f0p_bi.with_truncation(d).mul(&u.with_truncation(d)) + &v.with_truncation(d));
        for a in 1..=d {
            let b = d - a;
            let val = -&rhs.get(a - 1, b + 1) / rat_int(a as i64);
            u.set(a, b, val);
        }
    }
    let f0_tilde = (&(&f + &f0_bi.mul(&u.partial_x().with_truncation(n_max)))
        - &(&f0p_bi.mul(&u.with_truncation(n_max)) + &v))
        .restrict_y0();

    Ok(ApproximateSolution {
        u,
        v,
        f0_tilde,
        g0_tilde,
    })
}

/// Residual pair of the approximate equations; exactly zero certifies the
/// solution.
pub fn approximate_residual(
    vf: &PlanarVectorField,
    sol: &ApproximateSolution,
    n: usize,
) -> (BiSeries, BiSeries) {
    let f = vf.f().with_truncation(n);
    let g = vf.g().with_truncation(n);
    let f0 = f.restrict_y0();
    let f0_bi = f0.embed_x(n);
    let f0p_bi = f0.derivative().embed_x(n);
    let u = sol.u.with_truncation(n);
    let v = sol.v.with_truncation(n);
    let y = BiSeries::var_y(n);
    let r1 = &(&(&y.scale(&rat_int(-1)).mul(&u.partial_x().with_truncation(n))
        + &sol.f0_tilde.embed_x(n))
        - &(&f + &f0_bi.mul(&u.partial_x().with_truncation(n))))
        + &(&f0p_bi.mul(&u) + &v);
    let r2 = &(&y.scale(&rat_int(-1)).mul(&v.partial_x().with_truncation(n))
        + &sol.g0_tilde.embed_x(n))
        - &(&g + &f0_bi.mul(&v.partial_x().with_truncation(n)));
    (r1, r2)
}

/// One iteration step: solve the approximate equations, transform by
/// `x' = x + u, y' = y + v` via the exact identities
/// `p o phi = f + (y+f)u_x + g u_y - v`, `q o phi = g + (y+f)v_x + g v_y`,
/// and return the transformation with the new field.
pub fn kam_step(
    vf: &PlanarVectorField,
    n_max: usize,
) -> Result<(NormalizedTransformation, PlanarVectorField)> {
    let sol = approximate_solve(vf, n_max)?;
    let phi = NormalizedTransformation::new(sol.u.clone(), sol.v.clone())?;
    let f = vf.f().with_truncation(n_max);
    let g = vf.g().with_truncation(n_max);
    let y_plus_f = &BiSeries::var_y(n_max) + &f;
    let p_at_phi = &(&(&f + &y_plus_f.mul(&sol.u.partial_x().with_truncation(n_max)))
        + &g.mul(&sol.u.partial_y().with_truncation(n_max)))
        - &sol.v;
    let q_at_phi = &(&g + &y_plus_f.mul(&sol.v.partial_x().with_truncation(n_max)))
        + &g.mul(&sol.v.partial_y().with_truncation(n_max));
    let inv = phi.inverse()?;
    let p = p_at_phi.compose_shift(inv.u(), inv.v())?;
    let q = q_at_phi.compose_shift(inv.u(), inv.v())?;
    Ok((phi, PlanarVectorField::new(p, q)?))
}

/// One row of the iteration trace.
#[derive(Clone, Debug)]
pub struct KamStepRecord {
    pub n: usize,
    /// Defect order of the field entering this step.
    pub d: Order,
    pub r: Rat,
    pub theta: Rat,
    /// Majorant norm of the pure-x part `f0` at radius `r`.
    pub a_hat: f64,
    /// Majorant norm of the non-normalized part (`f1` and `g`) at radius `r`.
    pub b_hat: f64,
    /// `ord(Phi^{-1}_n - Phi^{-1}_{n-1})`; `None` on the first row.
    pub ord_diff: Option<Order>,
}

#[derive(Clone, Debug, Default)]
pub struct KamTrace {
    pub rows: Vec<KamStepRecord>,
}

/// Radius/control schedule: `r_n = (1 + 1/(n+1)) r0 / 2`,
/// `theta_n = 1/(5(n+2)^2)`; satisfies `r_{n+1} = (1 - 5 theta_n) r_n`.
pub fn schedule(n: usize, r0: &Rat) -> (Rat, Rat) {
    let np1 = rat_int(n as i64 + 1);
    let r = r0 * &(&(Rat::one() + Rat::one() / &np1) / &rat_int(2));
    let np2 = n as i64 + 2;
    let theta = rat(1, 5 * np2 * np2);
    (r, theta)
}

/// `sum |c| * radius^{degree}`: a computable upper bound for the sup norm on
/// the polydisc of that radius.
pub fn majorant_norm(p: &BiSeries, radius: &Rat) -> f64 {
    let r = rat_to_f64(radius);
    let mut acc = 0.0;
    for (a, b, c) in p.terms() {
        acc += rat_to_f64(&c.abs()) * r.powi((a + b) as i32);
    }
    acc
}

pub fn majorant_norm_uni(p: &UniSeries, radius: &Rat) -> f64 {
    let r = rat_to_f64(radius);
    let mut acc = 0.0;
    for (j, c) in p.terms() {
        acc += rat_to_f64(&c.abs()) * r.powi(j as i32);
    }
    acc
}

fn b_hat_of(vf: &PlanarVectorField, radius: &Rat) -> f64 {
    majorant_norm(&vf.f().project_pi(), radius).max(majorant_norm(vf.g(), radius))
}

/// Order of the componentwise difference of two transformations.
pub fn transformation_diff_order(a: &NormalizedTransformation, b: &NormalizedTransformation) -> Order {
    (&a.u().with_truncation(a.truncation().min(b.truncation())) - &b.u().with_truncation(a.truncation().min(b.truncation())))
        .ord()
        .min(
            (&a.v().with_truncation(a.truncation().min(b.truncation()))
                - &b.v().with_truncation(a.truncation().min(b.truncation())))
                .ord(),
        )
}

/// Runs `steps` iterations, recording the trace and composing the inverse
/// transformations. When `integrable` is set, failure of the doubling law
/// `d_{n+1} >= 2 d_n - 1` (observable below the truncation) aborts: either
/// the engine or the flag is wrong.
pub fn kam_iterate(
    vf: &PlanarVectorField,
    n_max: usize,
    steps: usize,
    r0: &Rat,
    integrable: bool,
) -> Result<(KamTrace, NormalizedTransformation, PlanarVectorField)> {
    let mut current = vf.with_truncation(n_max);
    let mut inv_total = NormalizedTransformation::identity(n_max);
    let mut trace = KamTrace::default();
    let mut prev_d = defect_order(&current);
    for n in 0..=steps {
        let (r, theta) = schedule(n, r0);
        let d = defect_order(&current);
        if n > 0 && integrable {
            // observable part of d_n >= 2 d_{n-1} - 1
            if let (Order::Finite(dn), Order::Finite(dp)) = (d, prev_d) {
                if 2 * dp - 1 <= n_max && dn < 2 * dp - 1 {
                    return Err(EngineError::Certificate(format!(
                        "order doubling failed at step {n}: d = {dn} after d = {dp}"
                    )));
                }
            }
        }
        trace.rows.push(KamStepRecord {
            n,
            d,
            r: r.clone(),
            theta,
            a_hat: majorant_norm_uni(&current.f().restrict_y0(), &r),
            b_hat: b_hat_of(&current, &r),
            ord_diff: None,
        });
        if n == steps {
            break;
        }
        let (phi, next) = kam_step(&current, n_max)?;
        let phi_inv = phi.inverse()?;
        let new_inv = inv_total.compose(&phi_inv)?;
        let diff = transformation_diff_order(&new_inv, &inv_total);
        trace.rows.last_mut().unwrap().ord_diff = Some(diff);
        if integrable && !diff.at_least(d.finite().unwrap_or(n_max + 1).min(n_max + 1)) {
            return Err(EngineError::Certificate(format!(
                "inverse transformation moved below the defect order at step {n}: {diff} < {d}"
            )));
        }
        inv_total = new_inv;
        prev_d = d;
        current = next;
    }
    Ok((trace, inv_total, current))
}

/// One row of the observational decay report.
#[derive(Clone, Debug)]
pub struct DecayRow {
    pub n: usize,
    pub b_hat: f64,
    /// `B_{n+1} / (B_n (1-theta_n)^{d_{n+1}} / theta_n^3)`: the factor by
    /// which the observed decay beats the one-step bound shape.
    pub bound_ratio: Option<f64>,
}

/// Observational check of the super-exponential decay shape; no proof
/// constants are estimated.
pub fn decay_report(trace: &KamTrace) -> Vec<DecayRow> {
    let mut out = Vec::new();
    for (i, row) in trace.rows.iter().enumerate() {
        let bound_ratio = trace.rows.get(i + 1).map(|next| {
            let theta = rat_to_f64(&row.theta);
            let d_next = next.d.finite().unwrap_or(usize::MAX.min(1 << 20)) as i32;
            let bound = row.b_hat * (1.0 - theta).powi(d_next) / theta.powi(3);
            if bound == 0.0 {
                0.0
            } else {
                next.b_hat / bound
            }
        });
        out.push(DecayRow {
            n: row.n,
            b_hat: row.b_hat,
            bound_ratio,
        });
    }
    out
}

/// Exact coefficientwise majorant dominations for the approximate solution:
/// with `a_k = |f_{k+1,0}|` (k >= 1), `b_k = max |f|,|g| coefficients of
/// degree k inside the ideal (y)`, `nu_k`/`mu_k` the largest `|v|`/`|u|`
/// coefficients of degree k, the recursions force `nu <= b/(1-a)` and
/// `mu <= 2b/(1-2a)^2` term by term.
pub fn majorant_domination_check(vf: &PlanarVectorField, n_max: usize) -> Result<bool> {
    let sol = approximate_solve(vf, n_max)?;
    let f = vf.f().with_truncation(n_max);
    let g = vf.g().with_truncation(n_max);

    let mut a = UniSeries::zero(n_max);
    for (alpha, beta, c) in f.terms() {
        if beta == 0 && alpha >= 2 {
            a.set(alpha - 1, c.abs());
        }
    }
    let mut b = UniSeries::zero(n_max);
    let mut bump = |deg: usize, c: &Rat| {
        let v = c.abs();
        if v > b.get(deg) {
            b.set(deg, v);
        }
    };
    for (alpha, beta, c) in f.terms() {
        if beta >= 1 {
            bump(alpha + beta, c);
        }
    }
    for (alpha, beta, c) in g.terms() {
        bump(alpha + beta, c);
    }
    let coeff_max = |s: &BiSeries| {
        let mut m = UniSeries::zero(n_max);
        for (alpha, beta, c) in s.terms() {
            if alpha >= 1 {
                let v = c.abs();
                if v > m.get(alpha + beta) {
                    m.set(alpha + beta, v);
                }
            }
        }
        m
    };
    let nu = coeff_max(&sol.v);
    let mu = coeff_max(&sol.u);

    // geometric expansions of 1/(1-a) and 1/(1-2a)^2 as exact series
    let geom = |s: &UniSeries| {
        let mut acc = UniSeries::monomial(n_max, 0, Rat::one());
        let mut pw = UniSeries::monomial(n_max, 0, Rat::one());
        for _ in 0..n_max {
            pw = pw.mul(s);
            if pw.is_zero() {
                break;
            }
            acc = &acc + &pw;
        }
        acc
    };
    let dom_nu = b.mul(&geom(&a));
    let two_a = a.scale(&rat_int(2));
    let inv = geom(&two_a);
    let dom_mu = b.scale(&rat_int(2)).mul(&inv).mul(&inv);
    let le = |lhs: &UniSeries, rhs: &UniSeries| (0..=n_max).all(|k| lhs.get(k) <= rhs.get(k));
    Ok(le(&nu, &dom_nu) && le(&mu, &dom_mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use crate::takens::takens_normalize;

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
    fn approximate_solve_examples() {
        // zero field: everything zero
        let sol = approximate_solve(&PlanarVectorField::linear(8), 8).unwrap();
        assert!(sol.u.is_zero() && sol.v.is_zero());
        assert!(sol.f0_tilde.is_zero() && sol.g0_tilde.is_zero());
        // g = x^2: pure-x defect is absorbed by g0~ alone
        let vf = field(8, &[], &[(2, 0, 1)]);
        let sol = approximate_solve(&vf, 8).unwrap();
        assert!(sol.u.is_zero() && sol.v.is_zero());
        assert!(sol.f0_tilde.is_zero());
        assert_eq!(sol.g0_tilde, UniSeries::monomial(8, 2, rat_int(1)));
        let (r1, r2) = approximate_residual(&vf, &sol, 8);
        assert!(r1.is_zero() && r2.is_zero());
        // shear pushforward: residuals vanish, orders respect the defect
        let vf = field(10, &[(2, 0, -1)], &[(1, 1, 2), (3, 0, -2)]);
        let sol = approximate_solve(&vf, 10).unwrap();
        let (r1, r2) = approximate_residual(&vf, &sol, 10);
        assert!(r1.is_zero() && r2.is_zero());
        assert!(sol.u.ord().at_least(2) && sol.v.ord().at_least(2));
        // ord(f0~ - f0) >= d0
        let d0 = defect_order(&vf).finite().unwrap();
        let diff = &sol.f0_tilde - &vf.f().restrict_y0();
        assert!(diff.ord().at_least(d0));
    }

    #[test]
    fn kam_step_is_the_pushforward() {
        let vf = field(10, &[(2, 0, -1), (1, 1, 1)], &[(1, 1, 2), (3, 0, -2), (2, 1, 1)]);
        let (phi, next) = kam_step(&vf, 10).unwrap();
        let pushed = phi.pushforward(&vf).unwrap();
        assert_eq!(next, pushed);
    }

    #[test]
    fn doubling_on_integrable_fixture() {
        // pushforward of (y + x^2, 0): d0 = 2, so d1 >= 3, d2 >= 5 ...
        let n = 17;
        let r = UniSeries::monomial(n, 2, rat_int(1));
        let base = PlanarVectorField::new(r.embed_x(n), BiSeries::zero(n)).unwrap();
        let u = BiSeries::from_terms(n, &[(1, 1, rat(1, 2))]).unwrap();
        let v = BiSeries::from_terms(n, &[(2, 0, rat_int(1)), (1, 1, rat(-1, 3))]).unwrap();
        let psi = NormalizedTransformation::new(u, v).unwrap();
        let vf = psi.pushforward(&base).unwrap();
        let (trace, _, _) = kam_iterate(&vf, n, 3, &rat(1, 2), true).unwrap();
        let mut lower = 2usize;
        for row in &trace.rows {
            assert!(row.d.at_least(lower.min(n)), "step {}: d = {}", row.n, row.d);
            lower = 2 * lower - 1;
        }
    }

    #[test]
    fn linear_field_trace_is_trivial() {
        let (trace, inv, last) = kam_iterate(&PlanarVectorField::linear(8), 8, 2, &rat(1, 2), true).unwrap();
        assert!(inv.is_identity());
        assert!(last.f().is_zero() && last.g().is_zero());
        for row in &trace.rows {
            assert!(row.d.is_infinite());
            assert_eq!(row.b_hat, 0.0);
        }
    }

    #[test]
    fn iterate_agrees_with_full_normalization() {
        let n = 12;
        let r = UniSeries::monomial(n, 2, rat_int(1));
        let base = PlanarVectorField::new(r.embed_x(n), BiSeries::zero(n)).unwrap();
        let v = BiSeries::from_terms(n, &[(2, 0, rat_int(1))]).unwrap();
        let psi = NormalizedTransformation::new(BiSeries::zero(n), v).unwrap();
        let vf = psi.pushforward(&base).unwrap();
        let (trace, inv_total, _) = kam_iterate(&vf, n, 3, &rat(1, 2), true).unwrap();
        let (phi, _) = takens_normalize(&vf, n).unwrap();
        let d_last = trace.rows.last().unwrap().d;
        let agree_to = d_last.finite().unwrap_or(n).min(n);
        let diff = transformation_diff_order(&inv_total, &phi.inverse().unwrap());
        assert!(diff.at_least(agree_to), "diff order {diff} < {agree_to}");
    }

    #[test]
    fn schedule_identity() {
        let r0 = rat(1, 2);
        let (r_0, theta_0) = schedule(0, &r0);
        assert_eq!(r_0, r0);
        assert_eq!(theta_0, rat(1, 20));
        for n in 0..=20 {
            let (rn, theta) = schedule(n, &r0);
            let (rn1, _) = schedule(n + 1, &r0);
            assert_eq!(rn1, (Rat::one() - rat_int(5) * theta) * rn.clone());
            assert!(rn >= &r0 / &rat_int(2));
        }
    }

    #[test]
    fn majorant_norm_examples() {
        let n = 4;
        let x2 = BiSeries::monomial(n, 2, 0, rat_int(1));
        assert_eq!(majorant_norm(&x2, &rat(1, 2)), 0.25);
        let xpy = &BiSeries::var_x(n) + &BiSeries::var_y(n);
        assert_eq!(majorant_norm(&xpy, &rat(1, 2)), 1.0);
    }

    #[test]
    fn majorant_domination_holds() {
        for vf in [
            field(12, &[(2, 0, -1)], &[(1, 1, 2), (3, 0, -2)]),
            field(12, &[(2, 0, 3), (1, 1, -2)], &[(2, 0, 1), (0, 2, 1)]),
            field(12, &[], &[(2, 0, 1)]),
        ] {
            assert!(majorant_domination_check(&vf, 12).unwrap());
        }
    }
}
