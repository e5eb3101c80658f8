//! The acceptance battery: property-based checks with small quantitative
//! budgets, one function per criterion. Each returns a one-line summary on
//! success and an error describing the first violated property otherwise.

use std::sync::Arc;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::Rng as _;

use elldlog_core::curvefn::{CurveFn, P1Value};
use elldlog_core::descent::{
    cross_ratio, kummer_z_criterion, matrix_from_three_pairs, splits_completely, DescentEngine,
    Pgl2Elem, StepRecord,
};
use elldlog_core::divisors::{
    absdeg, divisor_group_sum, divisor_of_function, essdeg, function_with_divisor,
    materialize_divisor, point_fq_divisor, trap_divisors, Divisor, IrreducibleDivisor,
};
use elldlog_core::dlog::{check_generator, linear_solve, Solver};
use elldlog_core::ec::{CurvePoint, WeierstrassCurve};
use elldlog_core::error::{Error, Result};
use elldlog_core::ff::{
    build_extension, frobenius_power, Embedding, FieldDesc, FieldElement, FieldOps, Polynomial,
};
use elldlog_core::oracle;
use elldlog_core::presentation::{
    construct_presentation, verify_presentation,
};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::config::RunConfig;

fn ensure(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(format!("check failed: {msg}")))
    }
}

/// Presentation construction for (3, 5) and (5, 7): verification, the
/// translation relation at the materialized point, and the size bounds.
pub fn criterion_presentations(cfg: &RunConfig) -> Result<String> {
    let mut parts = Vec::new();
    for (p, n) in [(3u64, 5u64), (5, 7)] {
        let t0 = Instant::now();
        let pres = construct_presentation(p, n, cfg.enum_cap)?;
        ensure(verify_presentation(&pres).ok, "presentation verifies")?;
        let (big_curve, emb, p1) = pres.p1_in_extension()?;
        let lhs = big_curve.frobenius_point(&p1, pres.q());
        let rhs = big_curve.point_add(&p1, &pres.p0().embed(&emb))?;
        ensure(lhs == rhs, "phi(P1) = P1 + P0 in F_{q^n}")?;
        // size bounds: q <= (ln #K')^4 and ln #K' <= 13 ln(#K) ln ln(#K)
        let ln_kprime = (pres.n() as f64) * (pres.q() as f64).ln();
        ensure(
            (pres.q() as f64) <= ln_kprime.powi(4),
            "q <= log(#K')^4",
        )?;
        let ln_k = (n as f64) * (p as f64).ln();
        ensure(
            ln_kprime <= 13.0 * ln_k * ln_k.ln(),
            "log #K' <= 13 log(#K) loglog(#K)",
        )?;
        let dt = t0.elapsed();
        ensure(dt.as_secs() < 60, "presentation under 60 s")?;
        parts.push(format!("({p},{n}): q={} in {:.1}s", pres.q(), dt.as_secs_f64()));
    }
    Ok(format!("presentations verified [{}]", parts.join("; ")))
}

/// Deterministic toy curve over F_9 with extremal trace, small fibers and a
/// 4-torsion base point.
fn f9_toy() -> Result<(Arc<WeierstrassCurve>, CurvePoint)> {
    let f9 = FieldDesc::gf(3, 2)?;
    for idx in 0..6561u64 {
        let a4 = f9.element_from_index(idx % 81);
        let a6 = f9.element_from_index(idx / 81);
        let Ok(curve) = WeierstrassCurve::new(
            &f9,
            [f9.zero(), f9.zero(), f9.zero(), a4, a6],
        ) else {
            continue;
        };
        if curve.trace(10_000)? != 6 {
            continue;
        }
        let pts = curve.enumerate_points(10_000)?;
        let order = pts.len() as u64;
        for p in pts.iter().skip(1) {
            if curve.point_order(p, order) == 4 {
                return Ok((Arc::new(curve), p.clone()));
            }
        }
    }
    Err(Error::not_found("no F_9 toy curve with the wanted shape"))
}

/// Trap enumeration terminates for q in {3, 9}, stays under 15 q^4, and
/// every enumerated point satisfies its defining condition when checked in
/// the residue field of its prime.
pub fn criterion_traps(cfg: &RunConfig) -> Result<String> {
    let t0 = Instant::now();
    let mut parts = Vec::new();

    // q = 3 toy
    let f3 = FieldDesc::prime(3)?;
    let c3 = Arc::new(WeierstrassCurve::from_u64(&f3, [0, 0, 0, 1, 0])?);
    let p03 = CurvePoint::Affine(f3.from_u64(2), f3.from_u64(1));
    let traps3 = trap_divisors(&c3, &p03, cfg.enum_cap, cfg.degree_cap)?;
    ensure(traps3.point_count() < 15 * 81, "q=3 count below 15 q^4")?;
    parts.push(format!("q=3: {} points", traps3.point_count()));

    // q = 9 toy
    let (c9, p09) = f9_toy()?;
    let traps9 = trap_divisors(&c9, &p09, cfg.enum_cap, cfg.degree_cap)?;
    ensure(
        traps9.point_count() < 15 * 9u64.pow(4),
        "q=9 count below 15 q^4",
    )?;
    parts.push(format!("q=9: {} points", traps9.point_count()));

    // independent materialized validation for every divisor of modest degree
    for (curve, p0, traps, q) in [
        (&c3, &p03, &traps3, 3u64),
        (&c9, &p09, &traps9, 9u64),
    ] {
        let base = curve.field().clone();
        let mut checked = 0usize;
        for (div, cond) in traps.divisors() {
            let rel_deg = div.degree();
            if rel_deg * base.degree() > 24 {
                continue;
            }
            let single = Divisor::from_terms(&base, vec![(div.clone(), 1)]);
            let mat = materialize_divisor(curve, &single, 1, 64)?;
            let p0_big = p0.embed(&mat.emb);
            for (pt, _) in &mat.points {
                ensure(
                    trap_condition_concrete(&mat.curve, q, *cond, pt, &p0_big)?,
                    "materialized trap point satisfies its condition",
                )?;
                checked += 1;
            }
        }
        ensure(checked > 0, "materialized at least one trap orbit")?;
    }
    let dt = t0.elapsed();
    ensure(dt.as_secs() < 300, "trap enumeration under 5 minutes")?;
    Ok(format!(
        "traps enumerated [{}] in {:.1}s",
        parts.join("; "),
        dt.as_secs_f64()
    ))
}

/// The defining conditions, evaluated with plain point arithmetic.
fn trap_condition_concrete(
    curve: &Arc<WeierstrassCurve>,
    q: u64,
    cond: u8,
    p: &CurvePoint,
    p0: &CurvePoint,
) -> Result<bool> {
    let phi = |x: &CurvePoint| curve.frobenius_point(x, q);
    let add = |a: &CurvePoint, b: &CurvePoint| curve.add_points(a, b);
    let neg = |a: &CurvePoint| curve.neg_point(a);
    let mul = |k: i64, a: &CurvePoint| curve.scalar_mul_i64(k, a);
    Ok(match cond {
        1 => mul(2, p).is_infinity(),
        2 => {
            let u = add(&add(&phi(&phi(p)), &neg(&phi(p))), p);
            add(&mul(2, &phi(&u)), &neg(&u)) == *p0
        }
        3 => {
            let u = add(&phi(p), p);
            add(&mul(2, &phi(&u)), &neg(&u)) == mul(2, p0)
        }
        4 => {
            let p4 = phi(&phi(&phi(&phi(p))));
            add(&p4, &neg(p)) == mul(4, p0)
        }
        5 => {
            let p3 = phi(&phi(&phi(p)));
            mul(2, &add(&p3, &neg(p))) == mul(6, p0)
        }
        6 => {
            let u = add(&phi(p), &neg(p));
            add(&mul(2, &phi(&u)), &u) == mul(2, p0)
        }
        _ => return Err(Error::domain("unknown condition")),
    })
}

/// The two splitting criteria agree on 500 admissible tuples.
pub fn criterion_splitting(_cfg: &RunConfig) -> Result<String> {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0003);
    let q = 3u64;
    let mut done = 0u64;
    for d in [1usize, 2, 3, 4].iter().cycle() {
        if done >= 500 {
            break;
        }
        let k = FieldDesc::gf(3, *d)?;
        let a = k.random_element(&mut rng);
        let b = k.random_element(&mut rng);
        let c = k.random_element(&mut rng);
        let dd = k.random_element(&mut rng);
        if a.mul(&dd).sub(&b.mul(&c)).is_zero() {
            continue;
        }
        if frobenius_power(&a, q, 1)
            .mul(&c)
            .sub(&dd.mul(&frobenius_power(&c, q, 1)))
            .is_zero()
        {
            continue;
        }
        if frobenius_power(&dd, q, 1)
            .mul(&c)
            .sub(&a.mul(&frobenius_power(&c, q, 1)))
            .is_zero()
        {
            continue;
        }
        let (split, _) = splits_completely(&a, &b, &c, &dd, q)?;
        let kummer = kummer_z_criterion(&a, &b, &c, &dd, q)?;
        ensure(split == kummer, "splitting criteria agree")?;
        done += 1;
    }
    let dt = t0.elapsed();
    ensure(dt.as_secs() < 120, "splitting battery under 2 minutes")?;
    Ok(format!(
        "splitting criteria agreed on {done} admissible tuples in {:.1}s",
        dt.as_secs_f64()
    ))
}

/// Interpolation matrices, cross-ratio invariance, determinant identity.
pub fn criterion_pgl2(_cfg: &RunConfig) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0004);
    let k = FieldDesc::gf(3, 4)?;
    let q = 3u64;
    let mut done = 0;
    while done < 200 {
        let u: Vec<FieldElement> = (0..3).map(|_| k.random_element(&mut rng)).collect();
        let w: Vec<FieldElement> = (0..3).map(|_| k.random_element(&mut rng)).collect();
        let distinct = u[0] != u[1]
            && u[1] != u[2]
            && u[0] != u[2]
            && w[0] != w[1]
            && w[1] != w[2]
            && w[0] != w[2];
        if !distinct {
            continue;
        }
        let m = matrix_from_three_pairs(
            &[u[0].clone(), u[1].clone(), u[2].clone()],
            &[w[0].clone(), w[1].clone(), w[2].clone()],
            q,
        )?;
        for i in 0..3 {
            ensure(
                m.apply(&P1Value::Finite(u[i].clone()))
                    == P1Value::Finite(frobenius_power(&w[i], q, 1)),
                "matrix interpolates u_i -> w_i^q",
            )?;
        }
        let det_expected = u[0]
            .sub(&u[1])
            .mul(&u[1].sub(&u[2]))
            .mul(&u[0].sub(&u[2]))
            .mul(&frobenius_power(&w[0].sub(&w[1]), q, 1))
            .mul(&frobenius_power(&w[1].sub(&w[2]), q, 1))
            .mul(&frobenius_power(&w[0].sub(&w[2]), q, 1));
        ensure(m.det() == det_expected, "determinant product identity")?;
        done += 1;
    }
    // cross-ratio invariance
    let mut inv_done = 0;
    while inv_done < 200 {
        let Ok(m) = Pgl2Elem::new(
            k.random_element(&mut rng),
            k.random_element(&mut rng),
            k.random_element(&mut rng),
            k.random_element(&mut rng),
        ) else {
            continue;
        };
        let tuple: Vec<P1Value> = (0..4)
            .map(|_| {
                if rng.next_u64() % 9 == 0 {
                    P1Value::Infinity
                } else {
                    P1Value::Finite(k.random_element(&mut rng))
                }
            })
            .collect();
        let arr: [P1Value; 4] = [
            tuple[0].clone(),
            tuple[1].clone(),
            tuple[2].clone(),
            tuple[3].clone(),
        ];
        let Ok(cr) = cross_ratio(&arr) else { continue };
        let mapped: [P1Value; 4] = [
            m.apply(&arr[0]),
            m.apply(&arr[1]),
            m.apply(&arr[2]),
            m.apply(&arr[3]),
        ];
        let Ok(cr2) = cross_ratio(&mapped) else { continue };
        ensure(cr == cr2, "cross-ratio invariance")?;
        inv_done += 1;
    }
    Ok("interpolation, determinant and cross-ratio identities held (200 + 200 samples)".into())
}

/// Descent-step soundness on toy parameters: at least 10 successful 3-to-2
/// and 5 successful 4-to-3 runs with every certificate re-verified.
pub fn criterion_descent_steps(cfg: &RunConfig) -> Result<String> {
    let t0 = Instant::now();
    let pres = crate::commands::toy_presentation()?;
    let mut engine = DescentEngine::new(pres, cfg.descent_config())?;
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0005);
    let q = 3u64;
    let mut ok32 = 0u64;
    let mut ok43 = 0u64;
    let mut failures = 0u64;
    let mut level = [4usize, 5, 6].iter().cycle();
    while (ok32 < 10 || ok43 < 5) && t0.elapsed().as_secs() < 540 {
        let l = *level.next().unwrap();
        for eps in [3usize, 4] {
            if (eps == 3 && ok32 >= 10) || (eps == 4 && ok43 >= 5) {
                continue;
            }
            let div = sample_orbit_divisor(&mut engine, l, eps, &mut rng)?;
            let d_in = Divisor::from_terms(div.base(), vec![(div.clone(), 1)]);
            let res = if eps == 3 {
                engine.descend_3to2(l, &div, &mut rng)
            } else {
                engine.descend_4to3(l, &div, &mut rng)
            };
            let out = match res {
                Ok(o) => o,
                Err(Error::SearchFailure(_)) => {
                    failures += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            // div(g) = D - D' recomputed from the emitted function
            let div_g = divisor_of_function(&out.g_num)?
                .sub(&divisor_of_function(&out.g_den)?);
            ensure(div_g == d_in.sub(&out.d_prime), "div(g) = D - D'")?;
            // g = 1 on the translate fiber, via independent record checking
            let rec = StepRecord {
                level: l,
                input: div.clone(),
                outcome: out.clone(),
            };
            ensure(
                engine.verify_record(&rec)?,
                "g takes value 1 on the whole translate fiber",
            )?;
            // essential-degree and absolute-degree contracts
            let ctx = engine.level(l)?;
            for (t, _) in out.d_prime.terms() {
                if ctx.trap_keys_k.contains(t) {
                    continue;
                }
                if eps == 3 {
                    ensure(t.degree() <= 2, "essdeg(D') | 2")?;
                } else {
                    ensure(t.degree() <= 3, "components divide 3 or 2")?;
                }
            }
            ensure(
                absdeg(&out.d_prime) <= 2 * q * eps as u64,
                "absdeg(D') <= 2q absdeg(D)",
            )?;
            if eps == 3 {
                ok32 += 1;
            } else {
                ok43 += 1;
            }
        }
    }
    let dt = t0.elapsed();
    ensure(ok32 >= 10, "at least 10 successful 3-to-2 runs")?;
    ensure(ok43 >= 5, "at least 5 successful 4-to-3 runs")?;
    ensure(dt.as_secs() < 600, "descent battery under 10 minutes")?;
    Ok(format!(
        "descent steps sound: {ok32} x 3-to-2, {ok43} x 4-to-3, {failures} reported failures, {:.1}s",
        dt.as_secs_f64()
    ))
}

fn sample_orbit_divisor(
    engine: &mut DescentEngine,
    l: usize,
    eps: usize,
    rng: &mut ChaCha12Rng,
) -> Result<IrreducibleDivisor> {
    let ctx = engine.level(l)?;
    let kq = ctx
        .k
        .order_u64()
        .ok_or_else(|| Error::resource("level field too large"))?;
    let ext = build_extension(&ctx.k, eps)?;
    let big = Arc::new(ctx.curve_k.base_change(&ext.embed_base)?);
    loop {
        let pt = big.random_affine_point(rng);
        let (x, _) = pt.xy().unwrap();
        let mut exact = frobenius_power(x, kq, 1) != *x;
        if eps == 4 {
            exact = exact && frobenius_power(x, kq, 2) != *x;
        }
        if !exact {
            continue;
        }
        let div = point_fq_divisor(&ctx.curve_k, &ext.embed_base, &pt)?;
        if div.degree() != eps
            || ctx.trap_keys_k.contains(&div)
            || ctx.p1_keys_k.contains(&div)
        {
            continue;
        }
        return Ok(div);
    }
}

/// Kernel vectors of 100 random relation matrices are primitive and vanish
/// modulo N c.
pub fn criterion_linear_algebra(_cfg: &RunConfig) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0006);
    // modulus shaped like N * c for the toy parameters
    let modulus = BigInt::from(40 * 4);
    for trial in 0..100u64 {
        let t = 3 + (rng.next_u64() % 8) as usize;
        let rows = t + 1;
        let vs: Vec<Vec<i64>> = (0..rows)
            .map(|_| (0..t).map(|_| (rng.next_u64() % 25) as i64 - 12).collect())
            .collect();
        let d = linear_solve(&vs, &modulus)?;
        let mut g = BigInt::zero();
        for x in &d {
            g = g.gcd(x);
        }
        ensure(g == BigInt::one(), "gcd(d) = 1")?;
        for col in 0..t {
            let mut acc = BigInt::zero();
            for (j, v) in vs.iter().enumerate() {
                acc += &d[j] * BigInt::from(v[col]);
            }
            ensure(
                acc.mod_floor(&modulus).is_zero(),
                "sum d_j v_j = 0 (mod N c)",
            )?;
        }
        let _ = trial;
    }
    Ok("100 random relation matrices solved with primitive kernel vectors".into())
}

/// End-to-end logarithms on the toy configuration, cross-checked against
/// the baby-step giant-step oracle. Zero wrong answers tolerated.
pub fn criterion_end_to_end(cfg: &RunConfig) -> Result<String> {
    let t0 = Instant::now();
    let pres = crate::commands::toy_presentation()?;
    let mu = pres.mu().clone();
    let f3 = pres.field().clone();
    let n_mod = pres.quotient_order();
    ensure(
        n_mod <= BigUint::from(1_000_000u64),
        "quotient group within 10^6",
    )?;
    let mut run_cfg = cfg.clone();
    run_cfg.fb_bound = 2;
    run_cfg.descent_floor = 2;
    run_cfg.heuristic_mode = true;
    run_cfg.m_override = Some(3);
    let engine = DescentEngine::new(pres.clone(), run_cfg.descent_config())?;
    let mut solver = Solver::new(engine, run_cfg.solve_config())?;
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0007);
    let mut instances = 0u64;
    while instances < 20 {
        // random generator and random target
        let g = loop {
            let cand = Polynomial::new(
                &f3,
                (0..4).map(|_| f3.random_element(&mut rng)).collect(),
            );
            if !cand.rem(&mu)?.is_zero() && check_generator(&pres, &cand)? {
                break cand;
            }
        };
        let h = loop {
            let cand = Polynomial::new(
                &f3,
                (0..4).map(|_| f3.random_element(&mut rng)).collect(),
            );
            if !cand.rem(&mu)?.is_zero() {
                break cand;
            }
        };
        let out = solver.solve_quotient_dlog(&g, &h, &mut rng)?;
        ensure(
            oracle::verify_log(&pres, &g, &h, &out.z)?,
            "g^z = gamma h verifies",
        )?;
        let reference = oracle::bsgs_quotient(&mu, &g, &h, &n_mod, cfg.memory_cap)?;
        ensure(
            reference == Some(out.z.clone()),
            "solver answer equals the oracle answer",
        )?;
        instances += 1;
    }
    let dt = t0.elapsed();
    ensure(dt.as_secs() < 900, "end-to-end battery under 15 minutes")?;
    Ok(format!(
        "{instances} quotient logarithms matched the oracle (N = {n_mod}) in {:.1}s",
        dt.as_secs_f64()
    ))
}

/// Divisor calculus conservation and reconstruction round trips.
pub fn criterion_divisors(_cfg: &RunConfig) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0008);
    let f9 = FieldDesc::gf(3, 2)?;
    let curve = Arc::new(WeierstrassCurve::from_u64(&f9, [0, 1, 0, 2, 1])?);
    let field = curve.field().clone();
    let mut conserved = 0u64;
    while conserved < 50 {
        let u: Vec<FieldElement> = (0..3).map(|_| field.random_element(&mut rng)).collect();
        let v: Vec<FieldElement> = (0..2).map(|_| field.random_element(&mut rng)).collect();
        let f = CurveFn::new(
            &curve,
            Polynomial::new(&field, u),
            Polynomial::new(&field, v),
            Polynomial::one(&field),
        )?;
        if f.is_zero() {
            continue;
        }
        let d = divisor_of_function(&f)?;
        ensure(d.degree() == 0, "function divisors have degree 0")?;
        let mat = materialize_divisor(&curve, &d, 1, 64)?;
        ensure(
            divisor_group_sum(&mat).is_infinity(),
            "function divisors sum to the identity",
        )?;
        conserved += 1;
    }
    // reconstruction round trip
    let mut rebuilt = 0u64;
    while rebuilt < 10 {
        let u: Vec<FieldElement> = (0..3).map(|_| field.random_element(&mut rng)).collect();
        let v: Vec<FieldElement> = (0..2).map(|_| field.random_element(&mut rng)).collect();
        let f = CurveFn::new(
            &curve,
            Polynomial::new(&field, u),
            Polynomial::new(&field, v),
            Polynomial::one(&field),
        )?;
        if f.is_zero() {
            continue;
        }
        let d = divisor_of_function(&f)?;
        let result = function_with_divisor(
            &curve,
            &d,
            5,
            |emb| {
                let sub = FieldDesc::gf(3, 10)?;
                let sub_emb = Embedding::new(&field, &sub)?;
                let curve_sub = Arc::new(curve.base_change(&sub_emb)?);
                let mut rng2 = ChaCha12Rng::seed_from_u64(99);
                let up = Embedding::new(&sub, emb.dst())?;
                loop {
                    let cand = curve_sub.random_affine_point(&mut rng2);
                    let (x, _) = cand.xy().unwrap();
                    if frobenius_power(x, 9, 1) != *x {
                        return Ok(cand.embed(&up));
                    }
                }
            },
            256,
        );
        let Ok(h) = result else { continue };
        let d2 = divisor_of_function(&h)?;
        let emb = Embedding::new(&field, h.curve().field())?;
        let expected = elldlog_core::divisors::decompose_over(&d, &emb, h.curve())?;
        ensure(d2 == expected, "reconstructed function has the same divisor")?;
        rebuilt += 1;
    }
    // absolute and essential degree unit cases
    let f3 = FieldDesc::prime(3)?;
    let c3 = Arc::new(WeierstrassCurve::from_u64(&f3, [0, 0, 0, 1, 0])?);
    let p0 = CurvePoint::Affine(f3.from_u64(2), f3.from_u64(1));
    let traps = trap_divisors(&c3, &p0, 10_000_000, 200_000)?;
    let zero = Divisor::zero(&f3);
    ensure(absdeg(&zero) == 0, "absdeg of zero divisor")?;
    let some_trap = traps.keys().iter().next().unwrap().clone();
    let mut trap_only = Divisor::zero(&f3);
    trap_only.add_term(some_trap, 7);
    ensure(
        essdeg(&trap_only, traps.keys()) == 1,
        "trap-supported divisors have essential degree 1",
    )?;
    // mixed degrees 2 and 3 -> lcm 6
    let mut mixed = Divisor::zero(&f3);
    for deg in [2usize, 3] {
        let a = elldlog_core::ff::first_irreducible(&f3, deg)?;
        let term = match elldlog_core::divisors::branch_split(&c3, &a)? {
            elldlog_core::divisors::BranchSplit::Split(b, _) => {
                IrreducibleDivisor::above(&c3, a, b)?
            }
            elldlog_core::divisors::BranchSplit::Ramified(b) => {
                IrreducibleDivisor::above(&c3, a, b)?
            }
            elldlog_core::divisors::BranchSplit::Inert => {
                // use the inert divisor of half the degree instead
                continue;
            }
        };
        if !traps.contains(&term) {
            mixed.add_term(term, 1);
        }
    }
    if mixed.terms().len() == 2 {
        ensure(essdeg(&mixed, traps.keys()) == 6, "essdeg lcm of 2 and 3")?;
    }
    Ok(format!(
        "divisor calculus conserved on {conserved} functions, {rebuilt} reconstructions"
    ))
}

/// Quick property battery for `selftest quick`.
pub fn quick_field_and_curve_properties(_cfg: &RunConfig) -> Result<String> {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5E1F);
    for field in [FieldDesc::gf(3, 2)?, FieldDesc::gf(3, 4)?, FieldDesc::gf(5, 3)?] {
        for _ in 0..50 {
            let a = field.random_element(&mut rng);
            let b = field.random_element(&mut rng);
            ensure(a.add(&b) == b.add(&a), "addition commutes")?;
            if !a.is_zero() {
                ensure(a.mul(&a.inv()?).is_one(), "inverses")?;
            }
        }
    }
    let f3 = FieldDesc::prime(3)?;
    let curve = Arc::new(WeierstrassCurve::from_u64(&f3, [0, 0, 0, 1, 0])?);
    let pts = curve.enumerate_points(1000)?;
    ensure(pts.len() == 4, "toy curve has 4 points")?;
    Ok("field axioms and toy curve enumeration passed".into())
}

/// One descent step as a smoke probe for `selftest quick`.
pub fn quick_descent_probe(cfg: &RunConfig) -> Result<String> {
    let pres = crate::commands::toy_presentation()?;
    let mut engine = DescentEngine::new(pres, cfg.descent_config())?;
    let mut rng = ChaCha12Rng::seed_from_u64(0x5E1F + 1);
    let div = sample_orbit_divisor(&mut engine, 4, 3, &mut rng)?;
    let out = engine.descend_3to2(4, &div, &mut rng)?;
    let rec = StepRecord {
        level: 4,
        input: div,
        outcome: out,
    };
    ensure(engine.verify_record(&rec)?, "probe step verifies")?;
    Ok("one 3-to-2 step succeeded and re-verified".into())
}

/// The full battery, in criterion order.
pub fn run_all(cfg: &RunConfig) -> Result<Vec<String>> {
    let checks: Vec<(&str, fn(&RunConfig) -> Result<String>)> = vec![
        ("presentations", criterion_presentations),
        ("traps", criterion_traps),
        ("splitting", criterion_splitting),
        ("pgl2", criterion_pgl2),
        ("descent-steps", criterion_descent_steps),
        ("linear-algebra", criterion_linear_algebra),
        ("end-to-end", criterion_end_to_end),
        ("divisors", criterion_divisors),
    ];
    let mut out = Vec::new();
    for (name, f) in checks {
        match f(cfg) {
            Ok(line) => {
                let msg = format!("{name}: PASS - {line}");
                eprintln!("{msg}");
                out.push(msg);
            }
            Err(e) => {
                eprintln!("{name}: FAIL - {e}");
                return Err(e);
            }
        }
    }
    Ok(out)
}
