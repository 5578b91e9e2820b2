//! Property tests for the structural laws the engine relies on: the series
//! ring axioms, the transformation group, invariance of the obstruction
//! order, and the flow group law.

use nilnorm::flows::{evaluate_flow, flow_map, group_law_residual};
use nilnorm::rat::{format_rat, parse_rat, rat};
use nilnorm::series::{invert_near_identity, BiSeries};
use nilnorm::takens::takens_normalize;
use nilnorm::vf::{NormalizedTransformation, PlanarVectorField};
use proptest::prelude::*;

const N: usize = 7;

fn arb_rat() -> impl Strategy<Value = nilnorm::Rat> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

/// Sparse series at truncation `N` with up to 4 terms of degree >= `min_deg`;
/// terms with zero x-exponent are dropped when `axis_clean` is set (the
/// normalized-transformation condition).
fn arb_series(min_deg: usize, axis_clean: bool) -> impl Strategy<Value = BiSeries> {
    proptest::collection::vec(((0usize..=N, 0usize..=N), arb_rat()), 0..4).prop_map(
        move |terms| {
            let mut s = BiSeries::zero(N);
            for ((a, b), c) in terms {
                if a + b > N || a + b < min_deg || (axis_clean && a == 0) {
                    continue;
                }
                let cur = s.get(a, b) + c;
                s.set(a, b, cur);
            }
            s
        },
    )
}

fn arb_vf() -> impl Strategy<Value = PlanarVectorField> {
    (arb_series(2, false), arb_series(2, false))
        .prop_map(|(f, g)| PlanarVectorField::new(f, g).unwrap())
}

fn arb_transformation() -> impl Strategy<Value = NormalizedTransformation> {
    (arb_series(2, true), arb_series(2, true))
        .prop_map(|(u, v)| NormalizedTransformation::new(u, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn series_ring_laws(a in arb_series(0, false), b in arb_series(0, false), c in arb_series(0, false)) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&(&b + &c)), &a.mul(&b) + &a.mul(&c));
    }

    #[test]
    fn shift_composition_matches_general_composition(
        p in arb_series(0, false),
        c in arb_series(2, false),
        d in arb_series(2, false),
    ) {
        let via_shift = p.compose_shift(&c, &d).unwrap();
        let shift_x = &BiSeries::var_x(N) + &c;
        let shift_y = &BiSeries::var_y(N) + &d;
        let via_general = p.compose(&shift_x, &shift_y).unwrap();
        prop_assert_eq!(via_shift, via_general);
    }

    #[test]
    fn near_identity_inverse_roundtrip(t in arb_transformation()) {
        let (iu, iv) = invert_near_identity(t.u(), t.v()).unwrap();
        let inv = NormalizedTransformation::new(iu, iv).unwrap();
        prop_assert!(t.compose(&inv).unwrap().is_identity());
        prop_assert!(inv.compose(&t).unwrap().is_identity());
    }

    #[test]
    fn normalization_conjugates_exactly(vf in arb_vf()) {
        let (phi, nf) = takens_normalize(&vf, N).unwrap();
        let (r1, r2) = nilnorm::takens::conjugacy_residual(&vf, &phi, &nf, N);
        prop_assert!(r1.is_zero() && r2.is_zero());
    }

    #[test]
    fn obstruction_order_is_a_conjugacy_invariant(vf in arb_vf(), psi in arb_transformation()) {
        let tau = takens_normalize(&vf, N).unwrap().1.tau;
        let conj = psi.pushforward(&vf).unwrap();
        prop_assert_eq!(takens_normalize(&conj, N).unwrap().1.tau, tau);
    }

    #[test]
    fn flow_group_law(vf in arb_vf(), s0 in arb_rat(), t0 in arb_rat()) {
        let flow = flow_map(&vf, 5);
        let (g1, g2) = group_law_residual(&flow, &s0, &t0, 5).unwrap();
        prop_assert!(g1.is_zero() && g2.is_zero());
        // t = 0 is the identity
        let (c1, c2) = evaluate_flow(&flow, &rat(0, 1));
        prop_assert_eq!(c1, BiSeries::var_x(5));
        prop_assert_eq!(c2, BiSeries::var_y(5));
    }

    #[test]
    fn rational_wire_format_roundtrip(n in -1000i64..1000, d in 1i64..1000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rat(&format_rat(&r)).unwrap(), r);
    }
}
