//! JSON data formats: field elements are decimal coefficient lists over the
//! prime field (ascending degree), polynomials are lists of such lists, and
//! the composite records build on those verbatim.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use elldlog_core::curvefn::{CurveFn, CurveRef};
use elldlog_core::descent::{Certificate, FunctionShape, Pgl2Elem, StepOutcome, StepRecord};
use elldlog_core::divisors::{Divisor, DivisorKind, IrreducibleDivisor, TrapSet};
use elldlog_core::ec::{CurvePoint, WeierstrassCurve};
use elldlog_core::error::{Error, Result};
use elldlog_core::ff::{Field, FieldDesc, FieldElement, FieldOps, Polynomial};
use elldlog_core::presentation::EllipticPresentation;

pub type ElemJson = Vec<u64>;
pub type PolyJson = Vec<ElemJson>;

pub fn elem_to_json(e: &FieldElement) -> ElemJson {
    e.coeffs().to_vec()
}

pub fn elem_from_json(field: &Field, v: &[u64]) -> FieldElement {
    field.from_coeffs(v.to_vec())
}

pub fn poly_to_json(f: &Polynomial) -> PolyJson {
    f.coeffs().iter().map(elem_to_json).collect()
}

pub fn poly_from_json(field: &Field, v: &[ElemJson]) -> Polynomial {
    let coeffs = v.iter().map(|c| elem_from_json(field, c)).collect();
    Polynomial::new(field, coeffs)
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum PointJson {
    Infinity { inf: bool },
    Affine { x: ElemJson, y: ElemJson },
}

pub fn point_to_json(p: &CurvePoint) -> PointJson {
    match p {
        CurvePoint::Infinity => PointJson::Infinity { inf: true },
        CurvePoint::Affine(x, y) => PointJson::Affine {
            x: elem_to_json(x),
            y: elem_to_json(y),
        },
    }
}

pub fn point_from_json(field: &Field, p: &PointJson) -> CurvePoint {
    match p {
        PointJson::Infinity { .. } => CurvePoint::Infinity,
        PointJson::Affine { x, y } => {
            CurvePoint::Affine(elem_from_json(field, x), elem_from_json(field, y))
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CurveJson {
    pub a1: ElemJson,
    pub a2: ElemJson,
    pub a3: ElemJson,
    pub a4: ElemJson,
    pub a6: ElemJson,
}

pub fn curve_to_json(c: &WeierstrassCurve) -> CurveJson {
    let a = c.coefficients();
    CurveJson {
        a1: elem_to_json(&a[0]),
        a2: elem_to_json(&a[1]),
        a3: elem_to_json(&a[2]),
        a4: elem_to_json(&a[3]),
        a6: elem_to_json(&a[4]),
    }
}

pub fn curve_from_json(field: &Field, c: &CurveJson) -> Result<WeierstrassCurve> {
    WeierstrassCurve::new(
        field,
        [
            elem_from_json(field, &c.a1),
            elem_from_json(field, &c.a2),
            elem_from_json(field, &c.a3),
            elem_from_json(field, &c.a4),
            elem_from_json(field, &c.a6),
        ],
    )
}

/// `{p, n, q, curve, P0, mu, lambda}`; `lambda` is the y-ascending list of
/// x-polynomials `[-b, 1]`, and the base field is the canonical `F_q`.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct PresentationJson {
    pub p: u64,
    pub n: u64,
    pub q: u64,
    pub curve: CurveJson,
    #[serde(rename = "P0")]
    pub p0: PointJson,
    pub mu: PolyJson,
    pub lambda: Vec<PolyJson>,
}

pub fn presentation_to_json(pres: &EllipticPresentation) -> PresentationJson {
    PresentationJson {
        p: pres.field().p(),
        n: pres.n(),
        q: pres.q(),
        curve: curve_to_json(pres.curve()),
        p0: point_to_json(pres.p0()),
        mu: poly_to_json(pres.mu()),
        lambda: vec![
            poly_to_json(&pres.lambda_b().neg()),
            poly_to_json(&Polynomial::one(pres.field())),
        ],
    }
}

pub fn presentation_from_json(j: &PresentationJson) -> Result<EllipticPresentation> {
    let s = degree_of(j.p, j.q)?;
    let field = FieldDesc::gf(j.p, s)?;
    let curve = Arc::new(curve_from_json(&field, &j.curve)?);
    let p0 = point_from_json(&field, &j.p0);
    let mu = poly_from_json(&field, &j.mu);
    if j.lambda.len() != 2 {
        return Err(Error::domain("lambda must be linear in y"));
    }
    let lead = poly_from_json(&field, &j.lambda[1]);
    if lead != Polynomial::one(&field) {
        return Err(Error::domain("lambda must be monic in y"));
    }
    let b = poly_from_json(&field, &j.lambda[0]).neg().rem(&mu)?;
    EllipticPresentation::from_parts(curve, p0, j.n, mu, b)
}

fn degree_of(p: u64, q: u64) -> Result<usize> {
    let mut s = 0usize;
    let mut acc = 1u64;
    while acc < q {
        acc = acc
            .checked_mul(p)
            .ok_or_else(|| Error::domain("q is not a power of p"))?;
        s += 1;
    }
    if acc != q || s == 0 {
        return Err(Error::domain("q is not a power of p"));
    }
    Ok(s)
}

/// Divisor terms: `{a, b | "W" | "INF", mult}`.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct DivisorTermJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<PolyJson>,
    pub b: serde_json::Value,
    pub mult: i64,
}

pub fn divisor_to_json(d: &Divisor) -> Vec<DivisorTermJson> {
    d.terms()
        .iter()
        .map(|(t, m)| match t.kind() {
            DivisorKind::Infinity => DivisorTermJson {
                a: None,
                b: serde_json::Value::String("INF".into()),
                mult: *m,
            },
            DivisorKind::Above { a, b } => DivisorTermJson {
                a: Some(poly_to_json(a)),
                b: serde_json::to_value(poly_to_json(b)).unwrap(),
                mult: *m,
            },
            DivisorKind::Whole { a } => DivisorTermJson {
                a: Some(poly_to_json(a)),
                b: serde_json::Value::String("W".into()),
                mult: *m,
            },
        })
        .collect()
}

pub fn divisor_from_json(
    curve: &CurveRef,
    terms: &[DivisorTermJson],
) -> Result<Divisor> {
    let field = curve.field().clone();
    let mut d = Divisor::zero(&field);
    for t in terms {
        let div = match (&t.a, &t.b) {
            (None, serde_json::Value::String(s)) if s == "INF" => {
                IrreducibleDivisor::infinity(&field)
            }
            (Some(a), serde_json::Value::String(s)) if s == "W" => {
                IrreducibleDivisor::whole(curve, poly_from_json(&field, a))?
            }
            (Some(a), b) => {
                let b: PolyJson = serde_json::from_value(b.clone())
                    .map_err(|e| Error::domain(format!("bad branch polynomial: {e}")))?;
                IrreducibleDivisor::above(
                    curve,
                    poly_from_json(&field, a),
                    poly_from_json(&field, &b),
                )?
            }
            _ => return Err(Error::domain("bad divisor term")),
        };
        d.add_term(div, t.mult);
    }
    Ok(d)
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct MatrixJson {
    pub a: ElemJson,
    pub b: ElemJson,
    pub c: ElemJson,
    pub d: ElemJson,
}

pub fn matrix_to_json(m: &Pgl2Elem) -> MatrixJson {
    MatrixJson {
        a: elem_to_json(&m.a),
        b: elem_to_json(&m.b),
        c: elem_to_json(&m.c),
        d: elem_to_json(&m.d),
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct FunctionJson {
    pub u: PolyJson,
    pub v: PolyJson,
    pub den: PolyJson,
}

pub fn function_to_json(f: &CurveFn) -> FunctionJson {
    FunctionJson {
        u: poly_to_json(f.u()),
        v: poly_to_json(f.v()),
        den: poly_to_json(f.den()),
    }
}

#[derive(Serialize, Clone, Debug)]
#[serde(tag = "kind")]
pub enum ShapeJson {
    #[serde(rename = "chord")]
    Chord { p: PointJson },
    #[serde(rename = "pencil")]
    Pencil {
        alpha: ElemJson,
        beta: ElemJson,
        s: PointJson,
        s_tilde: PointJson,
    },
}

#[derive(Serialize, Clone, Debug)]
pub struct CertificateJson {
    pub shape: ShapeJson,
    pub matrix: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<ElemJson>,
    pub strict_curve_condition: bool,
}

pub fn certificate_to_json(c: &Certificate) -> CertificateJson {
    CertificateJson {
        shape: match &c.shape {
            FunctionShape::Chord { p } => ShapeJson::Chord {
                p: point_to_json(p),
            },
            FunctionShape::Pencil {
                alpha,
                beta,
                s,
                s_tilde,
            } => ShapeJson::Pencil {
                alpha: elem_to_json(alpha),
                beta: elem_to_json(beta),
                s: point_to_json(s),
                s_tilde: point_to_json(s_tilde),
            },
        },
        matrix: matrix_to_json(&c.matrix),
        z: c.z_witness.as_ref().map(elem_to_json),
        strict_curve_condition: c.strict_curve_condition,
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct StepOutcomeJson {
    pub g_num: FunctionJson,
    pub g_den: FunctionJson,
    pub d_prime: Vec<DivisorTermJson>,
    pub certificate: CertificateJson,
}

pub fn outcome_to_json(o: &StepOutcome) -> StepOutcomeJson {
    StepOutcomeJson {
        g_num: function_to_json(&o.g_num),
        g_den: function_to_json(&o.g_den),
        d_prime: divisor_to_json(&o.d_prime),
        certificate: certificate_to_json(&o.certificate),
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct StepRecordJson {
    pub level: usize,
    pub input: DivisorTermJson,
    pub outcome: StepOutcomeJson,
}

pub fn record_to_json(r: &StepRecord) -> StepRecordJson {
    let single = Divisor::from_terms(r.input.base(), vec![(r.input.clone(), 1)]);
    StepRecordJson {
        level: r.level,
        input: divisor_to_json(&single).remove(0),
        outcome: outcome_to_json(&r.outcome),
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct TrapSetJson {
    pub divisors: Vec<DivisorTermJson>,
    pub conditions: Vec<u8>,
    pub point_count: u64,
    pub bound: u64,
}

pub fn traps_to_json(t: &TrapSet, q: u64) -> TrapSetJson {
    let mut divisors = Vec::new();
    let mut conditions = Vec::new();
    for (d, cond) in t.divisors() {
        let single = Divisor::from_terms(d.base(), vec![(d.clone(), 1)]);
        divisors.push(divisor_to_json(&single).remove(0));
        conditions.push(*cond);
    }
    TrapSetJson {
        divisors,
        conditions,
        point_count: t.point_count(),
        bound: 15 * q.pow(4),
    }
}
