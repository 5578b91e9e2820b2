//! Wire formats: JSON for series, fields, normal forms, invariants and
//! flows; CSV for iteration traces. All rationals travel as exact `"p/q"`
//! strings (just `"p"` for integers); every emitted series re-parses to an
//! equal value.

use crate::error::{EngineError, Result};
use crate::flows::FlowMap;
use crate::kam::KamTrace;
use crate::order::Order;
use crate::rat::{format_rat, parse_rat, rat_to_f64};
use crate::series::{BiSeries, TimePolynomial, UniSeries};
use crate::stage2::{InvariantCoeff, InvariantTuple, Stage2NormalForm};
use crate::takens::TakensNormalForm;
use crate::vf::{NormalizedTransformation, PlanarVectorField};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
pub struct SeriesDto {
    pub truncation: usize,
    /// `[alpha, beta, "p/q"]` triples; univariate series use `beta = 0`.
    pub terms: Vec<(usize, usize, String)>,
}

pub fn bi_to_dto(s: &BiSeries) -> SeriesDto {
    SeriesDto {
        truncation: s.truncation(),
        terms: s
            .terms()
            .map(|(a, b, c)| (a, b, format_rat(c)))
            .collect(),
    }
}

pub fn bi_from_dto(dto: &SeriesDto) -> Result<BiSeries> {
    let mut out = BiSeries::zero(dto.truncation);
    for (a, b, c) in &dto.terms {
        if a + b > dto.truncation {
            return Err(EngineError::Parse(format!(
                "term x^{a} y^{b} exceeds the declared truncation {}",
                dto.truncation
            )));
        }
        let val = parse_rat(c)
            .map_err(|e| EngineError::Parse(format!("term x^{a} y^{b}: {e}")))?;
        let cur = out.get(*a, *b) + val;
        out.set(*a, *b, cur);
    }
    Ok(out)
}

pub fn uni_to_dto(s: &UniSeries) -> SeriesDto {
    SeriesDto {
        truncation: s.truncation(),
        terms: s.terms().map(|(j, c)| (j, 0, format_rat(c))).collect(),
    }
}

pub fn uni_from_dto(dto: &SeriesDto) -> Result<UniSeries> {
    let mut out = UniSeries::zero(dto.truncation);
    for (j, b, c) in &dto.terms {
        if *b != 0 {
            return Err(EngineError::Parse(format!(
                "univariate series has a y^{b} term"
            )));
        }
        if *j > dto.truncation {
            return Err(EngineError::Parse(format!(
                "term x^{j} exceeds the declared truncation {}",
                dto.truncation
            )));
        }
        let val = parse_rat(c).map_err(|e| EngineError::Parse(format!("term x^{j}: {e}")))?;
        let cur = out.get(*j) + val;
        out.set(*j, cur);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
pub struct VectorFieldDto {
    pub truncation: usize,
    pub f: SeriesDto,
    pub g: SeriesDto,
}

pub fn vf_to_dto(vf: &PlanarVectorField) -> VectorFieldDto {
    VectorFieldDto {
        truncation: vf.truncation(),
        f: bi_to_dto(vf.f()),
        g: bi_to_dto(vf.g()),
    }
}

pub fn vf_from_dto(dto: &VectorFieldDto) -> Result<PlanarVectorField> {
    let f = bi_from_dto(&dto.f)?.with_truncation(dto.truncation);
    let g = bi_from_dto(&dto.g)?.with_truncation(dto.truncation);
    PlanarVectorField::new(f, g)
}

pub fn vf_from_json(text: &str) -> Result<PlanarVectorField> {
    let dto: VectorFieldDto =
        serde_json::from_str(text).map_err(|e| EngineError::Parse(e.to_string()))?;
    vf_from_dto(&dto)
}

pub fn vf_to_json(vf: &PlanarVectorField) -> String {
    serde_json::to_string_pretty(&vf_to_dto(vf)).expect("serialization cannot fail")
}

fn order_str(o: Order) -> String {
    match o {
        Order::Finite(k) => k.to_string(),
        Order::Infinite => "inf".into(),
    }
}

#[derive(Serialize)]
pub struct NormalFormDto {
    pub truncation: usize,
    pub r: SeriesDto,
    pub s: SeriesDto,
    pub tau: String,
    pub sigma: String,
    pub u: SeriesDto,
    pub v: SeriesDto,
    pub residual_is_zero: bool,
}

pub fn normal_form_to_json(
    nf: &TakensNormalForm,
    phi: &NormalizedTransformation,
    residual_is_zero: bool,
) -> String {
    let dto = NormalFormDto {
        truncation: phi.truncation(),
        r: uni_to_dto(&nf.r),
        s: uni_to_dto(&nf.s),
        tau: order_str(nf.tau),
        sigma: order_str(nf.sigma),
        u: bi_to_dto(phi.u()),
        v: bi_to_dto(phi.v()),
        residual_is_zero,
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

#[derive(Serialize)]
pub struct Stage2Dto {
    pub sigma: usize,
    pub epsilon: i64,
    /// Invariant window coefficients keyed by the exponent `j`; values are
    /// `"p/q"` or `"p/q * rho^k"` in the symbolic-scale case.
    pub invariants: std::collections::BTreeMap<usize, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub root_condition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rstar: Option<SeriesDto>,
}

pub fn stage2_to_json(tuple: &InvariantTuple, nf: Option<&Stage2NormalForm>) -> String {
    let invariants = tuple
        .window
        .iter()
        .map(|(j, c)| {
            let text = match c {
                InvariantCoeff::Rational(v) => format_rat(v),
                InvariantCoeff::ScaledRoot { coeff, power } => {
                    format!("{} * rho^{power}", format_rat(coeff))
                }
            };
            (*j, text)
        })
        .collect();
    let dto = Stage2Dto {
        sigma: tuple.sigma,
        epsilon: tuple.epsilon,
        invariants,
        root_condition: tuple
            .root_rhs
            .as_ref()
            .map(|r| format!("rho^{} = {}", tuple.sigma - 1, format_rat(r))),
        rstar: nf.map(|n| uni_to_dto(&n.rstar)),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

#[derive(Serialize, Deserialize)]
pub struct FlowTermDto {
    #[serde(rename = "I")]
    pub index: (usize, usize),
    #[serde(rename = "B")]
    pub b: (Vec<String>, Vec<String>),
}

#[derive(Serialize, Deserialize)]
pub struct FlowDto {
    pub truncation: usize,
    pub terms: Vec<FlowTermDto>,
}

fn tpoly_strings(p: &TimePolynomial) -> Vec<String> {
    p.coeffs().iter().map(format_rat).collect()
}

pub fn flow_to_json(flow: &FlowMap) -> String {
    let dto = FlowDto {
        truncation: flow.truncation(),
        terms: flow
            .terms()
            .map(|(&index, (p1, p2))| FlowTermDto {
                index,
                b: (tpoly_strings(p1), tpoly_strings(p2)),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("serialization cannot fail")
}

/// 17-significant-digit decimal rendering of an exact rational.
fn decimal17(r: &crate::rat::Rat) -> String {
    format!("{:.16e}", rat_to_f64(r))
}

/// CSV trace: decimal surrogates for quick reading plus the exact rationals.
pub fn kam_trace_to_csv(trace: &KamTrace) -> String {
    let mut out = String::from(
        "n,d_n,r_n,r_n_exact,theta_n,theta_n_exact,A_hat,B_hat,ord_diff\n",
    );
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.16e},{:.16e},{}\n",
            row.n,
            order_str(row.d),
            decimal17(&row.r),
            format_rat(&row.r),
            decimal17(&row.theta),
            format_rat(&row.theta),
            row.a_hat,
            row.b_hat,
            row.ord_diff.map(order_str).unwrap_or_default(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    #[test]
    fn series_roundtrip() {
        let s = BiSeries::from_terms(
            6,
            &[(2, 0, rat_int(1)), (1, 1, rat(-3, 7)), (0, 4, rat(22, 5))],
        )
        .unwrap();
        let json = serde_json::to_string(&bi_to_dto(&s)).unwrap();
        let back = bi_from_dto(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn vf_roundtrip_and_errors() {
        let f = BiSeries::from_terms(5, &[(2, 0, rat(1, 2))]).unwrap();
        let g = BiSeries::from_terms(5, &[(1, 1, rat_int(-2))]).unwrap();
        let vf = PlanarVectorField::new(f, g).unwrap();
        let back = vf_from_json(&vf_to_json(&vf)).unwrap();
        assert_eq!(back, vf);
        // malformed rational names the term
        let bad = r#"{"truncation":4,"f":{"truncation":4,"terms":[[2,0,"1/0"]]},"g":{"truncation":4,"terms":[]}}"#;
        match vf_from_json(bad) {
            Err(EngineError::Parse(msg)) => assert!(msg.contains("x^2 y^0"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        // linear term in f violates the field shape
        let low = r#"{"truncation":4,"f":{"truncation":4,"terms":[[1,0,"1"]]},"g":{"truncation":4,"terms":[]}}"#;
        assert!(vf_from_json(low).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        use crate::kam::{kam_iterate, };
        let (trace, _, _) = kam_iterate(
            &PlanarVectorField::linear(6),
            6,
            1,
            &rat(1, 2),
            true,
        )
        .unwrap();
        let csv = kam_trace_to_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,d_n,r_n,r_n_exact,theta_n,theta_n_exact,A_hat,B_hat,ord_diff");
        assert!(lines[1].starts_with("0,inf,"));
        assert!(lines[1].contains("1/2"));
    }
}
