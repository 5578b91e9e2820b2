//! Takens normalization of planar fields with nilpotent linear part, and the
//! integrability invariants attached to it.
//!
//! The normalization takes `dx/dt = y + f, dy/dt = g` into
//! `dx/dt = y + r(x), dy/dt = s(x)` through the unique normalized
//! transformation; `tau = ord s` is the obstruction order to having a
//! non-singular formal integral, and its vanishing through the truncation is
//! equivalent to the singular locus being a curve.

use crate::error::{EngineError, Result};
use crate::linsolve::solve_consistent;
use crate::order::Order;
use crate::rat::{rat_int, Rat};
use crate::series::{BiSeries, UniSeries};
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use num::{One, Zero};
use serde::{Deserialize, Serialize};

/// The target system `dx/dt = y + r(x), dy/dt = s(x)` together with its two
/// order invariants `tau = ord s` and `sigma = ord r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TakensNormalForm {
    pub r: UniSeries,
    pub s: UniSeries,
    pub tau: Order,
    pub sigma: Order,
}

impl TakensNormalForm {
    pub fn new(r: UniSeries, s: UniSeries) -> Self {
        let tau = s.ord();
        let sigma = r.ord();
        TakensNormalForm { r, s, tau, sigma }
    }
}

/// Integrability order at finite truncation: either the exact obstruction
/// order `tau < N`, or the honest statement that `s` vanishes through `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegrabilityOrder {
    Finite(usize),
    AtLeast(usize),
}

impl std::fmt::Display for IntegrabilityOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IntegrabilityOrder::Finite(t) => write!(f, "{t}"),
            IntegrabilityOrder::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// Degree-`n` slice of `E_2 = s(x+U) - s(x) - f V_x - g V_y` (or of its
/// `E_1 = r(x+U) - r(x) - f U_x - g U_y` sibling: pass `U` as `deriv_arg`),
/// computed from scratch at truncation `n`. The degree-`n` coefficients only
/// involve unknowns of lower order, so the partially filled `r, s, U, V`
/// give exact values.
fn e_term(
    rs: &UniSeries,
    shift_arg: &BiSeries,
    deriv_arg: &BiSeries,
    f: &BiSeries,
    g: &BiSeries,
    n: usize,
) -> BiSeries {
    let xn = BiSeries::var_x(n);
    let shift = &xn + &shift_arg.with_truncation(n);
    let composed = rs.compose_bi(&shift);
    let direct = rs.with_truncation(n).embed_x(n);
    let dx = deriv_arg.partial_x().with_truncation(n);
    let dy = deriv_arg.partial_y().with_truncation(n);
    let a = &composed - &direct;
    let b = &f.with_truncation(n).mul(&dx) + &g.with_truncation(n).mul(&dy);
    &a - &b
}

/// Computes the unique normalized transformation and Takens normal form of
/// `vf` through total degree `n_max`, degree by degree.
pub fn takens_normalize(
    vf: &PlanarVectorField,
    n_max: usize,
) -> Result<(NormalizedTransformation, TakensNormalForm)> {
    if n_max > vf.truncation() {
        return Err(EngineError::Precondition(format!(
            "requested order {n_max} exceeds the input truncation {}",
            vf.truncation()
        )));
    }
    let f = vf.f().with_truncation(n_max);
    let g = vf.g().with_truncation(n_max);
    let mut r = UniSeries::zero(n_max);
    let mut s = UniSeries::zero(n_max);
    let mut u = BiSeries::zero(n_max);
    let mut v = BiSeries::zero(n_max);

    for n in 2..=n_max {
        // V and s_n first: E_2 at degree n is a polynomial in lower-order data.
        let e2 = e_term(&s, &u, &v, &f, &g, n);
        for alpha in 1..=n {
            let beta = n - alpha;
            let val = (&e2.get(alpha - 1, beta + 1) - &g.get(alpha - 1, beta + 1))
                / rat_int(alpha as i64);
            v.set(alpha, beta, val);
        }
        s.set(n, &g.get(n, 0) - &e2.get(n, 0));
        // Then U and r_n, which consume the degree-n V just computed.
        let e1 = e_term(&r, &u, &u, &f, &g, n);
        for alpha in 1..=n {
            let beta = n - alpha;
            let val = (&(&v.get(alpha - 1, beta + 1) - &f.get(alpha - 1, beta + 1))
                + &e1.get(alpha - 1, beta + 1))
                / rat_int(alpha as i64);
            u.set(alpha, beta, val);
        }
        r.set(n, &(&f.get(n, 0) - &e1.get(n, 0)) - &v.get(n, 0));
    }

    let phi = NormalizedTransformation::new(u, v)?;
    Ok((phi, TakensNormalForm::new(r, s)))
}

/// Residual of the conjugacy identity
/// `DΦ·(y+f, g)^T - (y'+r(x'), s(x'))^T ∘ Φ` through degree `n`.
/// An exactly zero pair certifies that `Φ` transforms the field into the
/// normal form.
pub fn conjugacy_residual(
    vf: &PlanarVectorField,
    phi: &NormalizedTransformation,
    nf: &TakensNormalForm,
    n: usize,
) -> (BiSeries, BiSeries) {
    let f = vf.f().with_truncation(n);
    let g = vf.g().with_truncation(n);
    let u = phi.u().with_truncation(n);
    let v = phi.v().with_truncation(n);
    let y_plus_f = &BiSeries::var_y(n) + &f;
    // Derivatives are exact through n-1; each product pairs them with an
    // ord >= 1 factor so padding to n keeps degree-n terms exact.
    let lhs1 = &(&y_plus_f + &u.partial_x().with_truncation(n).mul(&y_plus_f))
        + &u.partial_y().with_truncation(n).mul(&g);
    let lhs2 = &(&g + &v.partial_x().with_truncation(n).mul(&y_plus_f))
        + &v.partial_y().with_truncation(n).mul(&g);
    let shift = &BiSeries::var_x(n) + &u;
    let rhs1 = &(&BiSeries::var_y(n) + &v) + &nf.r.compose_bi(&shift);
    let rhs2 = nf.s.compose_bi(&shift);
    (&lhs1 - &rhs1, &lhs2 - &rhs2)
}

/// `tau` when it is visible below `n`, or the marker `>= n` when `s`
/// vanishes through the truncation (finite data cannot certify `s ≡ 0`).
pub fn integrability_order(vf: &PlanarVectorField, n: usize) -> Result<IntegrabilityOrder> {
    let (_, nf) = takens_normalize(vf, n)?;
    Ok(match nf.tau {
        Order::Finite(t) => IntegrabilityOrder::Finite(t),
        Order::Infinite => IntegrabilityOrder::AtLeast(n),
    })
}

/// Brute-force linear-algebra search for a polynomial `H` of degree <= `k`
/// with `dH(0) != 0` and `ord <v, grad H> >= k`.
///
/// Independent oracle for `tau`: returns true exactly when `k <= tau`.
/// Gauge: the `y`-coefficient of `H` is fixed to 1 (for `k >= 2` any valid
/// `H` must have a nonzero one, because the `y`-coefficient of `<v, grad H>`
/// equals the `x`-coefficient of `H`); the pure-`y` coefficients
/// `H_{0,j}, j >= 2` are the remaining free unknowns.
pub fn obstruction_order_oracle(vf: &PlanarVectorField, k: usize) -> bool {
    if k <= 1 {
        return true; // H = y gives ord >= 2
    }
    let f = vf.f().with_truncation(k);
    let g = vf.g().with_truncation(k);

    // One triangular run per assignment of the free pure-y coefficients:
    // every slot x^a y^b (b >= 1) of <v, grad H> of degree < k forces a
    // coefficient of H, leaving the pure-x slots as affine constraints.
    let run = |free: &[Rat]| -> Vec<Rat> {
        let mut h = BiSeries::zero(k);
        h.set(0, 1, Rat::one());
        for (j, c) in free.iter().enumerate() {
            h.set(0, j + 2, c.clone());
        }
        for deg in 2..=k {
            // slots of degree deg-1 determine H at degree deg
            let w = &f
                .with_truncation(deg - 1)
                .mul(&h.partial_x().with_truncation(deg - 1))
                + &g
                    .with_truncation(deg - 1)
                    .mul(&h.partial_y().with_truncation(deg - 1));
            for a in 0..deg - 1 {
                let b = deg - 1 - a;
                // (a+1) H_{a+1,b-1} + w_{a,b} = 0
                let val = -&w.get(a, b) / rat_int((a + 1) as i64);
                h.set(a + 1, b - 1, val);
            }
        }
        // residual pure-x constraints of degree < k
        let w = &f
            .with_truncation(k - 1)
            .mul(&h.partial_x().with_truncation(k - 1))
            + &g
                .with_truncation(k - 1)
                .mul(&h.partial_y().with_truncation(k - 1));
        (1..k).map(|m| w.get(m, 0)).collect()
    };

    let n_free = k - 1; // H_{0,2} .. H_{0,k}
    let base = run(&vec![Rat::zero(); n_free]);
    let mut matrix = vec![vec![Rat::zero(); n_free]; base.len()];
    for j in 0..n_free {
        let mut e = vec![Rat::zero(); n_free];
        e[j] = Rat::one();
        let col = run(&e);
        for (row, (c, b)) in col.iter().zip(base.iter()).enumerate() {
            matrix[row][j] = c - b;
        }
    }
    let rhs: Vec<Rat> = base.iter().map(|b| -b).collect();
    solve_consistent(matrix, rhs).is_some()
}

/// Whether the singular locus of the field is a curve through the origin,
/// i.e. whether `g` is divisible by `y + f` through degree `n`. Division
/// proceeds degree by degree; the divisor's linear part is exactly `y`, so
/// each step is forced and the only failures are nonzero pure-`x` residues.
pub fn singular_locus_is_curve(vf: &PlanarVectorField, n: usize) -> bool {
    divide_by_y_plus_f(vf, n).is_some()
}

/// The witness quotient `a` with `g = a (y + f)` through degree `n`, if one
/// exists.
pub fn divide_by_y_plus_f(vf: &PlanarVectorField, n: usize) -> Option<BiSeries> {
    let f = vf.f().with_truncation(n);
    let g = vf.g().with_truncation(n);
    let mut a = BiSeries::zero(n);
    for m in 0..=n {
        // degree-m slice of g - a*f uses a of degree <= m-2 only
        let p = a.with_truncation(m).mul(&f.with_truncation(m));
        for alpha in 0..=m {
            let beta = m - alpha;
            let res = &g.get(alpha, beta) - &p.get(alpha, beta);
            if beta == 0 {
                if !res.is_zero() {
                    return None;
                }
            } else {
                a.set(alpha, beta - 1, res);
            }
        }
    }
    Some(a)
}

/// The non-singular formal integral `H = y ∘ Φ = y + V` with
/// `ord <v, grad H> >= n`, available exactly when `s` vanishes through `n`.
pub fn formal_integral(vf: &PlanarVectorField, n: usize) -> Result<BiSeries> {
    let (phi, nf) = takens_normalize(vf, n)?;
    if let Order::Finite(tau) = nf.tau {
        return Err(EngineError::NotIntegrable { tau });
    }
    Ok(&BiSeries::var_y(n) + &phi.v().with_truncation(n))
}

/// `<v, grad H> = (y+f) H_x + g H_y`, padded so degree-`n` terms are exact.
pub fn field_derivative(vf: &PlanarVectorField, h: &BiSeries, n: usize) -> BiSeries {
    let f = vf.f().with_truncation(n);
    let g = vf.g().with_truncation(n);
    let y_plus_f = &BiSeries::var_y(n) + &f;
    &y_plus_f.mul(&h.partial_x().with_truncation(n))
        + &g.mul(&h.partial_y().with_truncation(n))
}

/// Necessary condition `ord g_0 >= ord g_1` for solvability with `s ≡ 0`
/// (orders compared with the infinite sentinel, so `g ≡ 0` passes).
pub fn check_order_condition(vf: &PlanarVectorField) -> bool {
    let g0 = vf.g().restrict_y0().ord();
    let g1 = vf.g().project_pi().ord();
    g0 >= g1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

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
    fn linear_field_normalizes_to_itself() {
        let vf = PlanarVectorField::linear(8);
        let (phi, nf) = takens_normalize(&vf, 8).unwrap();
        assert!(phi.is_identity());
        assert!(nf.r.is_zero() && nf.s.is_zero());
        assert_eq!(nf.tau, Order::Infinite);
        let (r1, r2) = conjugacy_residual(&vf, &phi, &nf, 8);
        assert!(r1.is_zero() && r2.is_zero());
    }

    #[test]
    fn paper_example_y_x_squared() {
        // dx/dt = y, dy/dt = x^2 is already in normal form: tau = 2.
        let vf = field(8, &[], &[(2, 0, 1)]);
        let (phi, nf) = takens_normalize(&vf, 8).unwrap();
        assert!(phi.is_identity());
        assert!(nf.r.is_zero());
        assert_eq!(nf.s, UniSeries::monomial(8, 2, rat_int(1)));
        assert_eq!(nf.tau, Order::Finite(2));
        assert_eq!(
            integrability_order(&vf, 8).unwrap(),
            IntegrabilityOrder::Finite(2)
        );
    }

    #[test]
    fn shear_pushforward_normalizes_back() {
        // The pushforward of (y, 0) under (x, y+x^2): U = 0, V = -x^2,
        // r = s = 0.
        let vf = field(8, &[(2, 0, -1)], &[(1, 1, 2), (3, 0, -2)]);
        let (phi, nf) = takens_normalize(&vf, 8).unwrap();
        assert!(phi.u().is_zero());
        assert_eq!(phi.v(), &BiSeries::monomial(8, 2, 0, rat_int(-1)));
        assert!(nf.r.is_zero() && nf.s.is_zero());
        let (r1, r2) = conjugacy_residual(&vf, &phi, &nf, 8);
        assert!(r1.is_zero() && r2.is_zero());
    }

    #[test]
    fn residual_detects_wrong_certificate() {
        let vf = field(6, &[(2, 0, 1)], &[]);
        let id = NormalizedTransformation::identity(6);
        let trivial = TakensNormalForm::new(UniSeries::zero(6), UniSeries::zero(6));
        let (r1, r2) = conjugacy_residual(&vf, &id, &trivial, 6);
        // DΦ·(y+f,g) - (y', s') ∘ Φ leaves the unexplained f = x^2 behind
        assert_eq!(r1, BiSeries::monomial(6, 2, 0, rat_int(1)));
        assert!(r2.is_zero());
    }

    #[test]
    fn obstruction_oracle_on_paper_example() {
        let vf = field(8, &[], &[(2, 0, 1)]);
        assert!(obstruction_order_oracle(&vf, 1));
        assert!(obstruction_order_oracle(&vf, 2)); // H = y works
        assert!(!obstruction_order_oracle(&vf, 3)); // tau = 2 blocks k = 3
    }

    #[test]
    fn singular_locus_examples() {
        // g = 0: a = 0 works
        assert!(singular_locus_is_curve(&PlanarVectorField::linear(6), 6));
        // isolated singular point of the paper's remark
        assert!(!singular_locus_is_curve(&field(6, &[], &[(2, 0, 1)]), 6));
        // explicit factorization g = 2x(y - x^2) = 2x(y + f)
        let vf = field(8, &[(2, 0, -1)], &[(1, 1, 2), (3, 0, -2)]);
        let a = divide_by_y_plus_f(&vf, 8).unwrap();
        assert_eq!(a, BiSeries::monomial(8, 1, 0, rat_int(2)));
    }

    #[test]
    fn formal_integral_examples() {
        // (y, 0) has H = y
        let h = formal_integral(&PlanarVectorField::linear(8), 8).unwrap();
        assert_eq!(h, BiSeries::var_y(8));
        // the shear pushforward has H = y - x^2, annihilated exactly
        let vf = field(10, &[(2, 0, -1)], &[(1, 1, 2), (3, 0, -2)]);
        let h = formal_integral(&vf, 10).unwrap();
        let expected = &BiSeries::var_y(10) - &BiSeries::monomial(10, 2, 0, rat_int(1));
        assert_eq!(h, expected);
        let lie = field_derivative(&vf, &h, 10);
        assert!(lie.is_zero());
        // (y, x^2): integral exists but is singular; rejected with tau = 2
        match formal_integral(&field(8, &[], &[(2, 0, 1)]), 8) {
            Err(EngineError::NotIntegrable { tau }) => assert_eq!(tau, 2),
            other => panic!("expected NotIntegrable, got {other:?}"),
        }
    }

    #[test]
    fn order_condition_examples() {
        // g = 2xy - 2x^3: ord g0 = 3 >= ord g1 = 2
        assert!(check_order_condition(&field(6, &[], &[(1, 1, 2), (3, 0, -2)])));
        // g = x^2: 2 >= infinity fails
        assert!(!check_order_condition(&field(6, &[], &[(2, 0, 1)])));
        // g = 0: infinity >= infinity
        assert!(check_order_condition(&PlanarVectorField::linear(6)));
    }

    #[test]
    fn degree_five_normal_form_already_normal() {
        let vf = field(9, &[], &[(5, 0, 1)]);
        assert_eq!(
            integrability_order(&vf, 9).unwrap(),
            IntegrabilityOrder::Finite(5)
        );
    }

    #[test]
    fn normalize_recovers_generating_transformation() {
        // vf = psi_*(y + r(x), 0) must normalize through psi^{-1} with the
        // generating r and s = 0 (uniqueness of the normalized solution).
        let n = 10;
        let r = UniSeries::from_terms(n, &[(2, rat_int(1)), (4, rat(1, 2))]);
        let u = BiSeries::from_terms(n, &[(2, 0, rat_int(1)), (1, 1, rat(-1, 3))]).unwrap();
        let v = BiSeries::from_terms(n, &[(1, 1, rat_int(1)), (2, 1, rat(2, 5))]).unwrap();
        let psi = NormalizedTransformation::new(u, v).unwrap();
        let base = PlanarVectorField::new(r.embed_x(n), BiSeries::zero(n)).unwrap();
        let vf = psi.pushforward(&base).unwrap();
        let (phi, nf) = takens_normalize(&vf, n).unwrap();
        assert_eq!(&phi, &psi.inverse().unwrap());
        assert_eq!(nf.r, r);
        assert!(nf.s.is_zero());
        let (r1, r2) = conjugacy_residual(&vf, &phi, &nf, n);
        assert!(r1.is_zero() && r2.is_zero());
    }
}
