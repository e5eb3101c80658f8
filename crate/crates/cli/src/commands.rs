//! Command implementations shared by the binary and the self-test driver.

use std::fs;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::json;

use elldlog_core::descent::DescentEngine;
use elldlog_core::divisors::{absdeg, essdeg};
use elldlog_core::dlog::{check_generator, Solver};
use elldlog_core::error::{Error, Result};
use elldlog_core::ff::{FieldDesc, FieldOps, Polynomial};
use elldlog_core::oracle;
use elldlog_core::presentation::{
    construct_presentation, verify_presentation, EllipticPresentation,
};
use num_bigint::BigUint;
use num_traits::Num;

use crate::config::RunConfig;
use crate::json::*;

pub fn load_presentation(path: &Path) -> Result<EllipticPresentation> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::domain(format!("cannot read {}: {e}", path.display())))?;
    let j: PresentationJson = serde_json::from_str(&text)
        .map_err(|e| Error::domain(format!("bad presentation JSON: {e}")))?;
    presentation_from_json(&j)
}

pub fn cmd_present(p: u64, n: u64, cfg: &RunConfig) -> Result<serde_json::Value> {
    let pres = construct_presentation(p, n, cfg.enum_cap)?;
    let v = verify_presentation(&pres);
    if !v.ok {
        return Err(Error::domain(v.reason.unwrap_or_default()));
    }
    Ok(serde_json::to_value(presentation_to_json(&pres)).unwrap())
}

/// Presentation for a hand-picked curve over `F_{p^ext}` and base point;
/// the degree is the order of the point.
pub fn cmd_present_custom(
    p: u64,
    ext: usize,
    curve_text: &str,
    p0_text: &str,
    cfg: &RunConfig,
) -> Result<serde_json::Value> {
    use std::sync::Arc;
    let field = FieldDesc::gf(p, ext)?;
    let curve_json: CurveJson = serde_json::from_str(curve_text)
        .map_err(|e| Error::domain(format!("bad curve JSON: {e}")))?;
    let curve = Arc::new(curve_from_json(&field, &curve_json)?);
    let p0_json: PointJson = serde_json::from_str(p0_text)
        .map_err(|e| Error::domain(format!("bad point JSON: {e}")))?;
    let p0 = point_from_json(&field, &p0_json);
    let pres = elldlog_core::presentation::presentation_for_curve(&curve, &p0, cfg.enum_cap)?;
    Ok(serde_json::to_value(presentation_to_json(&pres)).unwrap())
}

pub fn cmd_traps(pres_path: &Path, cfg: &RunConfig) -> Result<serde_json::Value> {
    let pres = load_presentation(pres_path)?;
    let engine = DescentEngine::new(pres.clone(), cfg.descent_config())?;
    let json = traps_to_json(engine.traps(), pres.q());
    if json.point_count >= json.bound {
        return Err(Error::domain("trap count reached the structural bound"));
    }
    Ok(serde_json::to_value(json).unwrap())
}

pub fn cmd_descend(
    pres_path: &Path,
    divisor_path: &Path,
    level: usize,
    cfg: &RunConfig,
) -> Result<serde_json::Value> {
    let pres = load_presentation(pres_path)?;
    let text = fs::read_to_string(divisor_path)
        .map_err(|e| Error::domain(format!("cannot read divisor file: {e}")))?;
    let terms: Vec<DivisorTermJson> = serde_json::from_str(&text)
        .map_err(|e| Error::domain(format!("bad divisor JSON: {e}")))?;
    let mut engine = DescentEngine::new(pres.clone(), cfg.descent_config())?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    if level > 1 {
        // a single orbit divisor over k = F_{q^level}: run one step
        let ctx = engine.level(level)?;
        let d = divisor_from_json(&ctx.curve_k, &terms)?;
        let mut it = d.terms().iter();
        let (term, mult) = it
            .next()
            .ok_or_else(|| Error::domain("empty divisor"))?;
        if it.next().is_some() || *mult != 1 {
            return Err(Error::domain(
                "step descent expects a single irreducible divisor with multiplicity 1",
            ));
        }
        let term = term.clone();
        drop(d);
        let outcome = match term.degree() {
            3 => engine.descend_3to2(level, &term, &mut rng)?,
            4 => engine.descend_4to3(level, &term, &mut rng)?,
            d => {
                return Err(Error::domain(format!(
                    "step descent needs degree 3 or 4, got {d}"
                )))
            }
        };
        return Ok(serde_json::to_value(outcome_to_json(&outcome)).unwrap());
    }

    let d = divisor_from_json(pres.curve(), &terms)?;
    let before = essdeg(&d, engine.traps().keys());
    let (out, records) = engine.full_descent_with_records(&d, &mut rng)?;
    Ok(json!({
        "essdeg_in": before,
        "essdeg_out": essdeg(&out, engine.traps().keys()),
        "absdeg_out": absdeg(&out),
        "d_prime": divisor_to_json(&out),
        "records": records.iter().map(record_to_json).collect::<Vec<_>>(),
    }))
}

pub fn parse_poly_arg(pres: &EllipticPresentation, text: &str) -> Result<Polynomial> {
    let coeffs: PolyJson = serde_json::from_str(text)
        .map_err(|e| Error::domain(format!("polynomial must be JSON like [[0],[1]]: {e}")))?;
    Ok(poly_from_json(pres.field(), &coeffs))
}

pub fn cmd_solve(
    pres_path: &Path,
    g_text: &str,
    h_text: &str,
    cfg: &RunConfig,
) -> Result<serde_json::Value> {
    let pres = load_presentation(pres_path)?;
    let g = parse_poly_arg(&pres, g_text)?;
    let h = parse_poly_arg(&pres, h_text)?;
    let engine = DescentEngine::new(pres.clone(), cfg.descent_config())?;
    let mut solver = Solver::new(engine, cfg.solve_config())?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let out = solver.solve_quotient_dlog(&g, &h, &mut rng)?;
    Ok(json!({
        "z": out.z.to_string(),
        "modulus": out.modulus.to_string(),
        "gamma": elem_to_json(&out.gamma),
        "relations_used": out.relations_used,
        "trials": out.trials,
    }))
}

pub fn cmd_verify(
    pres_path: &Path,
    g_text: &str,
    h_text: &str,
    z_text: &str,
) -> Result<serde_json::Value> {
    let pres = load_presentation(pres_path)?;
    let g = parse_poly_arg(&pres, g_text)?;
    let h = parse_poly_arg(&pres, h_text)?;
    let z = BigUint::from_str_radix(z_text, 10)
        .map_err(|e| Error::domain(format!("bad exponent: {e}")))?;
    let ok = oracle::verify_log(&pres, &g, &h, &z)?;
    Ok(json!({ "valid": ok }))
}

/// A fast property battery (quick) or the full acceptance run (full).
pub fn cmd_selftest(level: &str, cfg: &RunConfig) -> Result<serde_json::Value> {
    match level {
        "quick" => {
            let mut lines = Vec::new();
            lines.push(crate::accept::quick_field_and_curve_properties(cfg)?);
            lines.push(crate::accept::quick_descent_probe(cfg)?);
            Ok(json!({ "level": "quick", "checks": lines }))
        }
        "full" => {
            let lines = crate::accept::run_all(cfg)?;
            Ok(json!({ "level": "full", "checks": lines }))
        }
        other => Err(Error::domain(format!(
            "self-test level must be quick or full, got {other}"
        ))),
    }
}

/// Exit code mapping: 0 success, 2 domain, 3 resource, 4 search failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::NotFound(_) => 2,
        Error::Resource(_) => 3,
        Error::SearchFailure(_) => 4,
    }
}

/// Deterministic generator search for convenience paths: the first monic
/// polynomial in counter order that generates the quotient group.
pub fn find_generator(pres: &EllipticPresentation) -> Result<Polynomial> {
    let field = pres.field().clone();
    let q = field
        .order_u64()
        .ok_or_else(|| Error::resource("field too large"))?;
    let n = pres.n() as usize;
    let total = (q as u128).pow(n as u32);
    let mut counter: u128 = 1;
    while counter < total {
        let mut c = counter;
        let mut coeffs = Vec::with_capacity(n);
        for _ in 0..n {
            coeffs.push(field.element_from_index((c % q as u128) as u64));
            c /= q as u128;
        }
        let cand = Polynomial::new(&field, coeffs);
        if !cand.is_zero() && check_generator(pres, &cand)? {
            return Ok(cand);
        }
        counter += 1;
    }
    Err(Error::not_found("no generator found"))
}

pub fn output_json(value: &serde_json::Value, cfg: &RunConfig) -> Result<()> {
    let text = serde_json::to_string_pretty(value).unwrap();
    match &cfg.output {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, text + "\n")
            .map_err(|e| Error::domain(format!("cannot write output: {e}"))),
    }
}

/// Build a small deterministic toy presentation (used by self-tests).
pub fn toy_presentation() -> Result<EllipticPresentation> {
    use elldlog_core::ec::{CurvePoint, WeierstrassCurve};
    use elldlog_core::ff::FieldOps;
    use std::sync::Arc;
    let f3 = FieldDesc::prime(3)?;
    let curve = Arc::new(WeierstrassCurve::from_u64(&f3, [0, 0, 0, 1, 0])?);
    let p0 = CurvePoint::Affine(f3.from_u64(2), f3.from_u64(1));
    elldlog_core::presentation::presentation_for_curve(&curve, &p0, 10_000_000)
}
