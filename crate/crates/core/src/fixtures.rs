//! Seeded fixture corpus.
//!
//! Two families, both deterministic in the seed:
//! - *integrable*: pushforwards of `(y + r(x), 0)` under random normalized
//!   transformations, carrying the generating `r` and transformation as
//!   ground truth;
//! - *generic*: random sparse fields, which have a finite obstruction order
//!   with probability one (and observed always, for the seeds used here).

use crate::rat::{rat, Rat};
use crate::series::{BiSeries, UniSeries};
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use num::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct GroundTruth {
    /// The generating normal form `(y + r(x), 0)`.
    pub r: UniSeries,
    /// The transformation whose pushforward produced the fixture.
    pub psi: NormalizedTransformation,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub vf: PlanarVectorField,
    /// Present exactly for the integrable family.
    pub ground_truth: Option<GroundTruth>,
}

/// Small nonzero rational: numerator in ±1..=4, denominator in 1..=3.
fn small_rat<R: Rng>(rng: &mut R) -> Rat {
    let n = rng.gen_range(1..=4i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
    let d = rng.gen_range(1..=3i64);
    rat(n, d)
}

/// Random univariate `r` with `ord >= 2` and a handful of low-degree terms.
pub fn random_r<R: Rng>(rng: &mut R, trunc: usize) -> UniSeries {
    assert!(trunc >= 2);
    let hi = trunc.min(6);
    let mut r = UniSeries::zero(trunc);
    let n_terms = rng.gen_range(1..=3usize);
    for _ in 0..n_terms {
        let j = rng.gen_range(2..=hi);
        r.set(j, small_rat(rng));
    }
    if r.is_zero() {
        r.set(2, small_rat(rng));
    }
    r
}

/// Random univariate `r` of exact leading degree `sigma`, for the weighted
/// secondary normalization.
pub fn random_r_with_sigma<R: Rng>(rng: &mut R, sigma: usize, trunc: usize) -> UniSeries {
    let mut r = random_r(rng, trunc);
    for j in 0..sigma {
        r.set(j, Rat::zero());
    }
    if r.get(sigma).is_zero() {
        r.set(sigma, small_rat(rng));
    }
    r
}

/// Random normalized transformation: sparse `u`, `v` with `ord >= 2` and no
/// pure-`y` terms, so the normalizing condition holds by construction.
pub fn random_transformation<R: Rng>(rng: &mut R, trunc: usize) -> NormalizedTransformation {
    let hi = trunc.min(5);
    let mut comps = Vec::with_capacity(2);
    for _ in 0..2 {
        let mut s = BiSeries::zero(trunc);
        let n_terms = rng.gen_range(1..=3usize);
        for _ in 0..n_terms {
            let total = rng.gen_range(2..=hi);
            let a = rng.gen_range(1..=total);
            s.set(a, total - a, small_rat(rng));
        }
        comps.push(s);
    }
    let v = comps.pop().unwrap();
    let u = comps.pop().unwrap();
    NormalizedTransformation::new(u, v).expect("construction keeps the normalizing condition")
}

/// Random sparse field; `g` always receives a pure-`x` term, which makes a
/// finite obstruction order overwhelmingly likely.
pub fn random_generic_field<R: Rng>(rng: &mut R, trunc: usize) -> PlanarVectorField {
    let hi = trunc.min(5);
    let mut f = BiSeries::zero(trunc);
    let mut g = BiSeries::zero(trunc);
    for s in [&mut f, &mut g] {
        let n_terms = rng.gen_range(1..=3usize);
        for _ in 0..n_terms {
            let total = rng.gen_range(2..=hi);
            let a = rng.gen_range(0..=total);
            s.set(a, total - a, small_rat(rng));
        }
    }
    g.set(rng.gen_range(2..=hi), 0, small_rat(rng));
    PlanarVectorField::new(f, g).expect("generated terms all have total degree >= 2")
}

pub fn integrable_fixture<R: Rng>(rng: &mut R, trunc: usize, name: String) -> Fixture {
    let r = random_r(rng, trunc);
    let psi = random_transformation(rng, trunc);
    let base = PlanarVectorField::new(r.embed_x(trunc), BiSeries::zero(trunc))
        .expect("ord r >= 2");
    let vf = psi.pushforward(&base).expect("pushforward of a valid field");
    Fixture {
        name,
        vf,
        ground_truth: Some(GroundTruth { r, psi }),
    }
}

pub fn generic_fixture<R: Rng>(rng: &mut R, trunc: usize, name: String) -> Fixture {
    Fixture {
        name,
        vf: random_generic_field(rng, trunc),
        ground_truth: None,
    }
}

/// Integrable fixtures tuned for high truncations: sparse generators with
/// unit coefficients, so the exact arithmetic of deep iteration runs stays
/// within reasonable numerator sizes.
pub fn deep_corpus(seed: u64, k: usize, trunc: usize) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut r = UniSeries::zero(trunc);
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        r.set(rng.gen_range(2..=4usize), rat(sign, 1));
        if rng.gen_bool(0.5) {
            r.set(rng.gen_range(3..=5usize), rat(-sign, 1));
        }
        let unit = |rng: &mut ChaCha8Rng, s: &mut BiSeries| {
            let total = rng.gen_range(2..=3usize);
            let a = rng.gen_range(1..=total);
            let c = if rng.gen_bool(0.5) { 1 } else { -1 };
            s.set(a, total - a, rat(c, 1));
        };
        let mut u = BiSeries::zero(trunc);
        let mut v = BiSeries::zero(trunc);
        unit(&mut rng, &mut u);
        unit(&mut rng, &mut v);
        if rng.gen_bool(0.5) {
            unit(&mut rng, &mut v);
        }
        let psi = NormalizedTransformation::new(u, v).expect("unit terms keep normalization");
        let base = PlanarVectorField::new(r.embed_x(trunc), BiSeries::zero(trunc))
            .expect("ord r >= 2");
        let vf = psi.pushforward(&base).expect("pushforward of a valid field");
        out.push(Fixture {
            name: format!("deep-{i:02}"),
            vf,
            ground_truth: Some(GroundTruth { r, psi }),
        });
    }
    out
}

/// The standard corpus: `k` integrable then `k` generic fixtures at
/// truncation `trunc`, fully determined by `seed`.
pub fn corpus(seed: u64, k: usize, trunc: usize) -> Vec<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * k);
    for i in 0..k {
        out.push(integrable_fixture(&mut rng, trunc, format!("integrable-{i:02}")));
    }
    for i in 0..k {
        out.push(generic_fixture(&mut rng, trunc, format!("generic-{i:02}")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::takens::takens_normalize;

    #[test]
    fn corpus_is_deterministic() {
        let a = corpus(1, 5, 10);
        let b = corpus(1, 5, 10);
        assert_eq!(a.len(), 10);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.vf, y.vf);
        }
    }

    #[test]
    fn integrable_fixtures_normalize_to_zero_s() {
        for fix in corpus(7, 3, 10).into_iter().take(3) {
            let (_, nf) = takens_normalize(&fix.vf, 10).unwrap();
            assert!(nf.s.is_zero(), "{}: s = {:?}", fix.name, nf.s);
            assert_eq!(nf.r, fix.ground_truth.unwrap().r.with_truncation(10));
        }
    }

    #[test]
    fn generic_fixtures_have_finite_tau() {
        use crate::takens::{integrability_order, IntegrabilityOrder};
        for fix in corpus(7, 4, 10).into_iter().skip(4) {
            match integrability_order(&fix.vf, 10).unwrap() {
                IntegrabilityOrder::Finite(_) => {}
                other => panic!("{}: expected finite tau, got {other:?}", fix.name),
            }
        }
    }
}
