//! Exact rational scalars.
//!
//! Every coefficient in the engine is a `BigRational` kept in lowest terms
//! with a positive denominator (the `num` crate maintains both invariants).

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, Zero};

pub type Rat = BigRational;

/// `n/d` as an exact rational. Panics on `d == 0`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

/// Renders in the wire format: `"p/q"` in lowest terms, `"p"` when `q == 1`.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the wire format accepted by `format_rat`. Rejects zero denominators.
pub fn parse_rat(s: &str) -> Result<Rat, String> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = num
        .trim()
        .parse()
        .map_err(|_| format!("invalid integer {num:?}"))?;
    let d: BigInt = den
        .trim()
        .parse()
        .map_err(|_| format!("invalid integer {den:?}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rat::new(n, d))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // Good enough for norm surrogates: exact for desk-scale coefficients,
    // graceful for the occasional huge numerator/denominator pair.
    let n = r.numer();
    let d = r.denom();
    match (n.to_string().parse::<f64>(), d.to_string().parse::<f64>()) {
        (Ok(nf), Ok(df)) if nf.is_finite() && df.is_finite() && df != 0.0 => nf / df,
        _ => {
            let bits = (n.bits().max(d.bits()) as i64 - 500).max(0) as u64;
            let scale = BigInt::one() << bits;
            let nf: f64 = (n / &scale).to_string().parse().unwrap_or(f64::NAN);
            let df: f64 = (d / &scale).to_string().parse().unwrap_or(f64::NAN);
            nf / df
        }
    }
}

/// Exact `n`-th root of a non-negative integer, if one exists.
fn int_nth_root(x: &BigInt, n: u32) -> Option<BigInt> {
    let root = x.nth_root(n);
    if num::pow::pow(root.clone(), n as usize) == *x {
        Some(root)
    } else {
        None
    }
}

/// Exact rational `n`-th root of `x`, if one exists over the rationals.
///
/// For odd `n` negative inputs yield the negative root; for even `n`
/// negative inputs have no rational root.
pub fn rational_nth_root(x: &Rat, n: u32) -> Option<Rat> {
    assert!(n >= 1);
    if x.is_zero() {
        return Some(Rat::zero());
    }
    let negative = x.numer().sign() == Sign::Minus;
    if negative && n % 2 == 0 {
        return None;
    }
    let num_root = int_nth_root(&x.numer().abs(), n)?;
    let den_root = int_nth_root(x.denom(), n)?;
    let mut root = Rat::new(num_root, den_root);
    if negative {
        root = -root;
    }
    Some(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3/4", "-7/2", "5", "0", "-1"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn nth_roots() {
        assert_eq!(rational_nth_root(&rat(4, 9), 2), Some(rat(2, 3)));
        assert_eq!(rational_nth_root(&rat(-8, 27), 3), Some(rat(-2, 3)));
        assert_eq!(rational_nth_root(&rat(2, 1), 2), None);
        assert_eq!(rational_nth_root(&rat(-4, 1), 2), None);
        assert_eq!(rational_nth_root(&rat(1, 1), 7), Some(rat(1, 1)));
    }
}
