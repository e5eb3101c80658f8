//! The index-calculus driver: factor base, zig-zag relation collection,
//! integer linear algebra modulo `(q^n - 1)/(q - 1) * #E(F_q)`, and the
//! final logarithm extraction in `K^x / F_q^x` and `K^x`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand_core::Rng;

use crate::descent::{random_exponent, DescentEngine, StepRecord};
use crate::divisors::{divisor_of_x_poly, essdeg, IrreducibleDivisor};
use crate::error::{Error, Result};
use crate::ff::{
    first_irreducible, poly_is_irreducible, random_irreducible_lift, Field, FieldElement,
    FieldOps, Polynomial,
};
use crate::oracle::factor_biguint;
use crate::presentation::EllipticPresentation;

// ---------------------------------------------------------------------------
// factor base
// ---------------------------------------------------------------------------

/// Ordered list of the irreducible divisors the descent lands on: everything
/// of degree dividing the bound, plus the trap divisors, minus the divisor
/// cut out by the presentation ideal.
pub struct FactorBase {
    entries: Vec<IrreducibleDivisor>,
    index: BTreeMap<IrreducibleDivisor, usize>,
    bound: u64,
}

impl FactorBase {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn entries(&self) -> &[IrreducibleDivisor] {
        &self.entries
    }

    pub fn index_of(&self, d: &IrreducibleDivisor) -> Option<usize> {
        self.index.get(d).copied()
    }
}

/// Enumerate all monic irreducibles of each degree dividing the bound and
/// attach their sheet data; include every trap divisor; drop entries
/// containing `P1`.
pub fn build_factor_base(
    engine: &DescentEngine,
    bound: u64,
    cap: u64,
) -> Result<FactorBase> {
    let pres = engine.pres();
    let field = pres.field().clone();
    let curve = pres.curve().clone();
    let q = field
        .order_u64()
        .ok_or_else(|| Error::resource("base field too large"))?;
    let p1_key = pres.p1_divisor()?;

    let mut set: alloc::collections::BTreeSet<IrreducibleDivisor> =
        alloc::collections::BTreeSet::new();
    set.insert(IrreducibleDivisor::infinity(&field));
    // divisors of degree dividing the bound
    for d in 1..=bound as usize {
        if bound % d as u64 != 0 {
            continue;
        }
        // enumeration cost q^d
        let mut size = 1u64;
        let mut too_big = false;
        for _ in 0..d {
            size = match size.checked_mul(q) {
                Some(s) if s <= cap => s,
                _ => {
                    too_big = true;
                    break;
                }
            };
        }
        if too_big {
            return Err(Error::resource(alloc::format!(
                "factor base bound {bound} needs q^{d} enumeration beyond the cap"
            )));
        }
        for a in monic_irreducibles(&field, d)? {
            match crate::divisors::branch_split(&curve, &a)? {
                crate::divisors::BranchSplit::Ramified(b0) => {
                    set.insert(IrreducibleDivisor::above(&curve, a.clone(), b0)?);
                }
                crate::divisors::BranchSplit::Split(b1, b2) => {
                    set.insert(IrreducibleDivisor::above(&curve, a.clone(), b1)?);
                    set.insert(IrreducibleDivisor::above(&curve, a.clone(), b2)?);
                }
                crate::divisors::BranchSplit::Inert => {
                    // divisor degree 2d must divide the bound
                    if bound % (2 * d as u64) == 0 {
                        set.insert(IrreducibleDivisor::whole(&curve, a.clone())?);
                    }
                }
            }
        }
    }
    for (d, _) in engine.traps().divisors() {
        set.insert(d.clone());
    }
    set.remove(&p1_key);
    let entries: Vec<IrreducibleDivisor> = set.into_iter().collect();
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, d)| (d.clone(), i))
        .collect();
    Ok(FactorBase {
        entries,
        index,
        bound,
    })
}

/// All monic irreducibles of exact degree `d`, in counter order.
fn monic_irreducibles(field: &Field, d: usize) -> Result<Vec<Polynomial>> {
    let q = field
        .order_u64()
        .ok_or_else(|| Error::resource("field too large"))?;
    let mut out = Vec::new();
    if d == 0 {
        return Ok(out);
    }
    let total = (q as u128).pow(d as u32);
    let mut counter: u128 = 0;
    while counter < total {
        let mut c = counter;
        let mut coeffs = Vec::with_capacity(d + 1);
        for _ in 0..d {
            coeffs.push(field.element_from_index((c % q as u128) as u64));
            c /= q as u128;
        }
        coeffs.push(field.one());
        let cand = Polynomial::new(field, coeffs);
        if poly_is_irreducible(&cand)? {
            out.push(cand);
        }
        counter += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// relations
// ---------------------------------------------------------------------------

/// One zig-zag relation: `alpha log g + beta log h = sum v_i log D_i`.
#[derive(Clone, Debug)]
pub struct Relation {
    pub alpha: BigUint,
    pub beta: BigUint,
    pub v: Vec<i64>,
    /// Descent transcript, for independent re-verification.
    pub records: Vec<StepRecord>,
    /// The lifted irreducible polynomial whose divisor was descended.
    pub lifted: Polynomial,
}

/// Tunables of the solver.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub fb_bound: u64,
    /// `None` uses the prescribed `ceil(log2 n) + 3`.
    pub m_override: Option<u32>,
    /// Cap on restarts of the collect/solve cycle (step 5 loop).
    pub max_restarts: u64,
    /// Retries per relation when a descent search fails.
    pub relation_retries: u64,
    pub lift_budget: Option<u64>,
    pub enum_cap: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            fb_bound: 2,
            m_override: None,
            max_restarts: 64,
            relation_retries: 24,
            lift_budget: None,
            enum_cap: crate::ec::DEFAULT_ENUM_CAP,
        }
    }
}

/// Outcome of a quotient-group solve.
#[derive(Clone, Debug)]
pub struct SolveOutput {
    pub z: BigUint,
    pub modulus: BigUint,
    /// The unit with `g^z = gamma h` in `K^x`.
    pub gamma: FieldElement,
    pub relations_used: u64,
    pub trials: u64,
}

/// Index-calculus state: engine, factor base and the step-1 scalars.
pub struct Solver {
    engine: DescentEngine,
    fb: FactorBase,
    cfg: SolveConfig,
    /// `(q^n - 1)/(q - 1)`.
    modulus: BigUint,
    /// `#E(F_q)`.
    curve_order: u64,
    /// Lift degree exponent: polynomials of degree `2^m`.
    m: u32,
}

impl Solver {
    pub fn new(engine: DescentEngine, cfg: SolveConfig) -> Result<Solver> {
        let pres = engine.pres();
        let n = pres.n();
        let modulus = pres.quotient_order();
        let curve_order = pres.curve_order(cfg.enum_cap)?;
        let m = cfg.m_override.unwrap_or_else(|| {
            let mut m = 0u32;
            while (1u64 << m) < n {
                m += 1;
            }
            m + 3
        });
        if (1u64 << m) < n {
            return Err(Error::domain("2^m must be at least deg(mu)"));
        }
        if engine.cfg().floor > cfg.fb_bound {
            return Err(Error::domain(
                "descent floor exceeds the factor-base bound",
            ));
        }
        let fb = build_factor_base(&engine, cfg.fb_bound, cfg.enum_cap)?;
        Ok(Solver {
            engine,
            fb,
            cfg,
            modulus,
            curve_order,
            m,
        })
    }

    pub fn factor_base(&self) -> &FactorBase {
        &self.fb
    }

    pub fn engine(&self) -> &DescentEngine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut DescentEngine {
        &mut self.engine
    }

    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn curve_order(&self) -> u64 {
        self.curve_order
    }

    pub fn lift_degree(&self) -> u64 {
        1u64 << self.m
    }

    /// One zig-zag relation for `g~^alpha h~^beta`.
    pub fn collect_relation(
        &mut self,
        g: &Polynomial,
        h: &Polynomial,
        rng: &mut dyn Rng,
    ) -> Result<Relation> {
        let mu = self.engine.pres().mu().clone();
        let alpha = random_exponent(&self.modulus, rng);
        let beta = random_exponent(&self.modulus, rng);
        let residue = g
            .pow_mod(&alpha, &mu)?
            .mul(&h.pow_mod(&beta, &mu)?)
            .rem(&mu)?;
        if residue.is_zero() {
            return Err(Error::domain("g or h vanishes modulo mu"));
        }
        let f = random_irreducible_lift(&residue, &mu, self.m, rng, self.cfg.lift_budget)?;
        debug_assert_eq!(f.rem(&mu)?, residue);
        let d = divisor_of_x_poly(self.engine.pres().curve(), &f)?;
        let (d_final, records) = self.engine.full_descent_with_records(&d, rng)?;
        // essential degree must now divide the factor-base bound
        debug_assert!(
            self.cfg.fb_bound % essdeg(&d_final, self.engine.traps().keys()) == 0
        );
        let mut v = vec![0i64; self.fb.len()];
        for (t, mult) in d_final.terms() {
            let Some(i) = self.fb.index_of(t) else {
                return Err(Error::domain(alloc::format!(
                    "descended divisor misses the factor base: {:?}",
                    t
                )));
            };
            v[i] = v[i]
                .checked_add(*mult)
                .ok_or_else(|| Error::resource("relation coefficient overflow"))?;
        }
        Ok(Relation {
            alpha,
            beta,
            v,
            records,
            lifted: f,
        })
    }

    /// Discrete logarithm of `h` in base `g` within `K^x / F_q^x`.
    pub fn solve_quotient_dlog(
        &mut self,
        g: &Polynomial,
        h: &Polynomial,
        rng: &mut dyn Rng,
    ) -> Result<SolveOutput> {
        let mu = self.engine.pres().mu().clone();
        let g = g.rem(&mu)?;
        let h = h.rem(&mu)?;
        if g.is_zero() || h.is_zero() {
            return Err(Error::domain("g and h must be nonzero modulo mu"));
        }
        if !check_generator(self.engine.pres(), &g)? {
            return Err(Error::domain("g does not generate the quotient group"));
        }
        let n_mod = self.modulus.clone();
        let big_mod = BigInt::from(n_mod.clone()) * BigInt::from(self.curve_order);
        let t = self.fb.len();
        let mut trials = 0u64;
        let mut relations: Vec<Relation> = Vec::new();
        // grow the relation set in batches; every batch yields a pool of
        // kernel vectors, each a fresh chance at an invertible b
        let mut target = (t + 1).min(32);
        for _round in 0..self.cfg.max_restarts {
            while relations.len() < target {
                trials += 1;
                match self.collect_relation(&g, &h, rng) {
                    Ok(r) => relations.push(r),
                    Err(Error::SearchFailure(_)) => {
                        if trials > self.cfg.relation_retries * (t as u64 + 1) {
                            return Err(Error::search(String::from(
                                "too many failed relation attempts",
                            )));
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
            let vs: Vec<Vec<i64>> = relations.iter().map(|r| r.v.clone()).collect();
            let candidates = match kernel_candidates(&vs, &big_mod, 32) {
                Ok(c) => c,
                Err(Error::SearchFailure(_)) => {
                    target = (relations.len() + 8).min(2 * (t + 1) + 64);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let n_int = BigInt::from(n_mod.clone());
            for d in candidates {
                let mut a = BigInt::zero();
                let mut b = BigInt::zero();
                for (j, rel) in relations.iter().enumerate() {
                    a += &d[j] * BigInt::from(rel.alpha.clone());
                    b += &d[j] * BigInt::from(rel.beta.clone());
                }
                let b_red = b.mod_floor(&n_int);
                if b_red.gcd(&n_int) != BigInt::one() {
                    continue; // step 5: b not invertible
                }
                let b_inv = mod_inverse(&b_red, &n_int)
                    .ok_or_else(|| Error::domain("b inverse vanished despite gcd check"))?;
                let z = (-(a.clone()) * b_inv).mod_floor(&n_int);
                let z = z.to_biguint().unwrap();
                // unconditional final check (Las Vegas: retries, never wrong)
                if let Some(gamma) = quotient_log_witness(self.engine.pres(), &g, &h, &z)? {
                    return Ok(SolveOutput {
                        z,
                        modulus: n_mod,
                        gamma,
                        relations_used: relations.len() as u64,
                        trials,
                    });
                }
            }
            // all candidate vectors failed: widen the relation set
            target = (relations.len() + 8).min(2 * (t + 1) + 64);
            if target <= relations.len() {
                break;
            }
        }
        Err(Error::search(String::from(
            "quotient logarithm not found within the restart budget",
        )))
    }

    /// Logarithm in the full group `K^x` through the exact sequence
    /// `1 -> F_q^x -> K^x -> K^x/F_q^x -> 1`.
    pub fn solve_full_dlog(
        &mut self,
        g: &Polynomial,
        h: &Polynomial,
        rng: &mut dyn Rng,
    ) -> Result<Option<(BigUint, BigUint)>> {
        let pres = self.engine.pres().clone();
        let mu = pres.mu().clone();
        let quotient = self.solve_quotient_dlog(g, h, rng)?;
        let z0 = quotient.z;
        // gamma = h * g^{-z0} in F_q^x
        let g_z0 = g.pow_mod(&z0, &mu)?;
        let gamma = poly_mod_div(&h.rem(&mu)?, &g_z0, &mu)?;
        let gamma_c = constant_of(&gamma)
            .ok_or_else(|| Error::domain("quotient log witness is not a unit"))?;
        // g^N lands in F_q^x; solve the small logarithm there
        let g_n = g.pow_mod(&self.modulus, &mu)?;
        let g_n_c = constant_of(&g_n).ok_or_else(|| {
            Error::domain("g^N fell outside the prime subgroup; inconsistent state")
        })?;
        let q_minus_1 = BigUint::from(pres.q() - 1);
        let Some(w) = crate::oracle::bsgs_field(&g_n_c, &gamma_c, &q_minus_1, 1 << 22)? else {
            return Ok(None); // h is not in <g>
        };
        let z = z0 + &self.modulus * w;
        let ord_g = &self.modulus * g_n_c.mult_order()?;
        let z = z % &ord_g;
        // round trip, always
        let lhs = g.pow_mod(&z, &mu)?;
        if lhs != h.rem(&mu)? {
            return Err(Error::domain("full logarithm failed its final check"));
        }
        Ok(Some((z, ord_g)))
    }
}

/// `h1 / h2` modulo `mu`.
fn poly_mod_div(h1: &Polynomial, h2: &Polynomial, mu: &Polynomial) -> Result<Polynomial> {
    let inv = h2.inv_mod(mu)?;
    h1.mul(&inv).rem(mu)
}

/// The constant value of a polynomial that lies in the base field.
fn constant_of(f: &Polynomial) -> Option<FieldElement> {
    match f.degree() {
        None => None,
        Some(0) => Some(f.coeff(0)),
        Some(_) => None,
    }
}

/// Does `g~` generate `K^x / F_q^x`? Checked prime by prime on the quotient
/// order.
pub fn check_generator(pres: &EllipticPresentation, g: &Polynomial) -> Result<bool> {
    let mu = pres.mu();
    let g = g.rem(mu)?;
    if g.is_zero() {
        return Ok(false);
    }
    let n_mod = pres.quotient_order();
    for (ell, _) in factor_biguint(&n_mod) {
        let e = &n_mod / &ell;
        let p = g.pow_mod(&e, mu)?;
        if p.degree().map_or(true, |d| d == 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verify `g^z = gamma h (mod mu)` for some unit `gamma`; returns the unit.
pub fn quotient_log_witness(
    pres: &EllipticPresentation,
    g: &Polynomial,
    h: &Polynomial,
    z: &BigUint,
) -> Result<Option<FieldElement>> {
    let mu = pres.mu();
    let gz = g.pow_mod(z, mu)?;
    let ratio = poly_mod_div(&gz, &h.rem(mu)?, mu)?;
    Ok(constant_of(&ratio).filter(|c| !c.is_zero()))
}

// ---------------------------------------------------------------------------
// integer linear algebra
// ---------------------------------------------------------------------------

/// Find `d` with `gcd(d_1, .., d_{t+1}) = 1` and `sum d_j v_j = 0 (mod M)`,
/// through the integer kernel of the stacked matrix `[V | M I]`.
pub fn linear_solve(vs: &[Vec<i64>], modulus: &BigInt) -> Result<Vec<BigInt>> {
    kernel_candidates(vs, modulus, 1)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::search(String::from("no primitive kernel vector found")))
}

/// Primitive kernel vectors of the relation matrix modulo `M`, several of
/// them so the caller can retry the invertibility of `b` cheaply.
pub fn kernel_candidates(
    vs: &[Vec<i64>],
    modulus: &BigInt,
    want: usize,
) -> Result<Vec<Vec<BigInt>>> {
    let rows = vs.len();
    if rows == 0 {
        return Err(Error::domain("no relations"));
    }
    let t = vs[0].len();
    if vs.iter().any(|v| v.len() != t) {
        return Err(Error::domain("ragged relation matrix"));
    }
    // B: t x (rows + t), columns = relation vectors then M e_i
    // kernel of x -> B x, computed from the row HNF of B^T with its
    // transformation matrix
    let ncols = rows + t;
    let mut bt: Vec<Vec<BigInt>> = Vec::with_capacity(ncols);
    for v in vs {
        bt.push(v.iter().map(|&x| BigInt::from(x)).collect());
    }
    for i in 0..t {
        let mut row = vec![BigInt::zero(); t];
        row[i] = modulus.clone();
        bt.push(row);
    }
    let mut u: Vec<Vec<BigInt>> = (0..ncols)
        .map(|i| {
            let mut row = vec![BigInt::zero(); ncols];
            row[i] = BigInt::one();
            row
        })
        .collect();
    // row HNF via Euclidean elimination, tracking U with U * B^T = H
    let mut pivot_row = 0usize;
    for col in 0..t {
        // find a nonzero entry at or below pivot_row
        let Some(mut best) = (pivot_row..ncols).find(|&r| !bt[r][col].is_zero()) else {
            continue;
        };
        loop {
            // reduce all other rows by the smallest nonzero pivot
            for r in pivot_row..ncols {
                if r == best || bt[r][col].is_zero() {
                    continue;
                }
                let quot = div_round(&bt[r][col], &bt[best][col]);
                if !quot.is_zero() {
                    for c in 0..t {
                        let delta = &quot * &bt[best][c];
                        bt[r][c] -= delta;
                    }
                    for c in 0..ncols {
                        let delta = &quot * &u[best][c];
                        u[r][c] -= delta;
                    }
                }
            }
            // pick the new minimal nonzero entry
            let mut min_row = None;
            for r in pivot_row..ncols {
                if bt[r][col].is_zero() {
                    continue;
                }
                if min_row.map_or(true, |m: usize| {
                    bt[r][col].abs() < bt[m][col].abs()
                }) {
                    min_row = Some(r);
                }
            }
            let m = min_row.expect("column had a nonzero entry");
            // done when all other entries vanished
            if (pivot_row..ncols).all(|r| r == m || bt[r][col].is_zero()) {
                best = m;
                break;
            }
            best = m;
        }
        bt.swap(pivot_row, best);
        u.swap(pivot_row, best);
        pivot_row += 1;
        if pivot_row == ncols {
            break;
        }
    }
    // rows of U beyond the rank are the kernel of B^T's rows, i.e. vectors x
    // with x * B^T = 0, equivalently B x^T = 0
    let mut kernel: Vec<Vec<BigInt>> = Vec::new();
    for r in 0..ncols {
        if bt[r].iter().all(|x| x.is_zero()) {
            kernel.push(u[r][0..rows].to_vec());
        }
    }
    if kernel.is_empty() {
        return Err(Error::search(String::from(
            "no kernel vector found; collect more relations",
        )));
    }
    let reduce = |v: &mut Vec<BigInt>| {
        for x in v.iter_mut() {
            *x = x.mod_floor(modulus);
            if &*x + x.clone() > *modulus {
                *x -= modulus;
            }
        }
    };
    let content = |v: &[BigInt]| -> BigInt {
        let mut g = BigInt::zero();
        for x in v {
            g = g.gcd(x);
        }
        g
    };
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    let push_candidate = |cand: Vec<BigInt>, out: &mut Vec<Vec<BigInt>>| {
        if cand.iter().all(|x| x.is_zero()) {
            return;
        }
        if content(&cand) == BigInt::one() && !out.contains(&cand) {
            out.push(cand);
        }
    };
    for cand in kernel.iter() {
        let mut c = cand.clone();
        reduce(&mut c);
        push_candidate(c, &mut out);
        if out.len() >= want {
            return Ok(out);
        }
    }
    // pairwise sums widen the pool when single vectors are imprimitive or
    // more candidates were requested
    'outer: for i in 0..kernel.len() {
        for j in (i + 1)..kernel.len() {
            let mut c: Vec<BigInt> = kernel[i]
                .iter()
                .zip(kernel[j].iter())
                .map(|(a, b)| a + b)
                .collect();
            reduce(&mut c);
            push_candidate(c, &mut out);
            if out.len() >= want {
                break 'outer;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::search(String::from(
            "no primitive kernel vector found",
        )));
    }
    Ok(out)
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    // nearest-integer division keeps HNF entries small
    let (q, r) = a.div_mod_floor(b);
    let two_r = &r + &r;
    if two_r.abs() > b.abs() {
        q + BigInt::one()
    } else {
        q
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.extended_gcd(m);
    if e.gcd != BigInt::one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

/// The ratio `phi(N)/N` used by the generator-rate property test.
pub fn totient_ratio(n: &BigUint) -> (BigUint, BigUint) {
    let mut num = n.clone();
    for (p, _) in factor_biguint(n) {
        num = num / &p * (&p - BigUint::one());
    }
    (num, n.clone())
}

/// First monic irreducible of the field, kept for CLI defaults.
pub fn default_generator_candidate(field: &Field, n: usize) -> Result<Polynomial> {
    first_irreducible(field, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::{DescentConfig, DescentEngine};
    use crate::ec::{CurvePoint, WeierstrassCurve};
    use crate::ff::FieldDesc;
    use crate::presentation::presentation_for_curve;
    use alloc::sync::Arc;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_core::Rng as _;

    fn toy_solver() -> Solver {
        let f3 = FieldDesc::prime(3).unwrap();
        let curve = Arc::new(WeierstrassCurve::from_u64(&f3, [0, 0, 0, 1, 0]).unwrap());
        let p0 = CurvePoint::Affine(f3.from_u64(2), f3.from_u64(1));
        let pres = presentation_for_curve(&curve, &p0, 1_000_000).unwrap();
        let engine = DescentEngine::new(pres, DescentConfig::default()).unwrap();
        let cfg = SolveConfig {
            fb_bound: 2,
            m_override: Some(3),
            ..Default::default()
        };
        Solver::new(engine, cfg).unwrap()
    }

    #[test]
    fn factor_base_shape() {
        let solver = toy_solver();
        let fb = solver.factor_base();
        let pres = solver.engine().pres();
        // infinity is present (it is a trap)
        let inf = IrreducibleDivisor::infinity(pres.field());
        assert!(fb.index_of(&inf).is_some());
        // no entry contains P1
        let p1_div = pres.p1_divisor().unwrap();
        assert!(fb.index_of(&p1_div).is_none());
        // every non-trap entry has degree dividing the bound
        for e in fb.entries() {
            if !solver.engine().traps().contains(e) {
                assert!(fb.bound() % e.degree() as u64 == 0);
            }
        }
    }

    #[test]
    fn linear_solve_duplicate_rows() {
        let m = BigInt::from(160);
        let vs = vec![vec![3i64, -1, 4], vec![3, -1, 4], vec![0, 2, 5]];
        let d = linear_solve(&vs, &m).unwrap();
        // gcd 1 and the combination vanishes mod M
        let mut g = BigInt::zero();
        for x in &d {
            g = g.gcd(x);
        }
        assert_eq!(g, BigInt::one());
        for col in 0..3 {
            let mut acc = BigInt::zero();
            for (j, v) in vs.iter().enumerate() {
                acc += &d[j] * BigInt::from(v[col]);
            }
            assert!(acc.mod_floor(&m).is_zero());
        }
    }

    #[test]
    fn linear_solve_zero_rows() {
        let m = BigInt::from(40);
        let vs = vec![vec![0i64; 4], vec![0; 4]];
        let d = linear_solve(&vs, &m).unwrap();
        let mut g = BigInt::zero();
        for x in &d {
            g = g.gcd(x);
        }
        assert_eq!(g, BigInt::one());
    }

    #[test]
    fn linear_solve_random_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(51);
        for trial in 0..100 {
            let t = 3 + (rng.next_u64() % 6) as usize;
            let rows = t + 1;
            let m = BigInt::from(40 + (rng.next_u64() % 1000) as i64);
            let vs: Vec<Vec<i64>> = (0..rows)
                .map(|_| {
                    (0..t)
                        .map(|_| (rng.next_u64() % 19) as i64 - 9)
                        .collect()
                })
                .collect();
            let d = linear_solve(&vs, &m).unwrap();
            let mut g = BigInt::zero();
            for x in &d {
                g = g.gcd(x);
            }
            assert_eq!(g, BigInt::one(), "trial {trial}");
            for col in 0..t {
                let mut acc = BigInt::zero();
                for (j, v) in vs.iter().enumerate() {
                    acc += &d[j] * BigInt::from(v[col]);
                }
                assert!(acc.mod_floor(&m).is_zero(), "trial {trial} col {col}");
            }
        }
    }

    #[test]
    fn generator_check_cases() {
        let solver = toy_solver();
        let pres = solver.engine().pres();
        let f3 = pres.field().clone();
        // constants never generate
        let one = Polynomial::one(&f3);
        assert!(!check_generator(pres, &one).unwrap());
        // exhaustively count generators and compare with phi(N)/N
        let n_mod = pres.quotient_order();
        let (phi, total) = totient_ratio(&n_mod);
        let mut generators = 0u64;
        let mut nonzero = 0u64;
        let mu = pres.mu();
        for idx in 0..81u64 {
            let coeffs = [idx % 3, (idx / 3) % 3, (idx / 9) % 3, (idx / 27) % 3];
            let cand = Polynomial::from_u64_coeffs(&f3, &coeffs);
            if cand.rem(mu).unwrap().is_zero() {
                continue;
            }
            nonzero += 1;
            if check_generator(pres, &cand).unwrap() {
                generators += 1;
            }
        }
        // each coset has q - 1 = 2 representatives among the 80 nonzero
        // polynomials of degree < 4; generator count = 2 * phi(N)
        let expected = 2 * u64::try_from(&phi).unwrap();
        assert_eq!(generators, expected);
        assert_eq!(nonzero, 80);
        let _ = total;
    }

    #[test]
    fn full_group_logarithms_round_trip() {
        let mut solver = toy_solver();
        let mut rng = ChaCha12Rng::seed_from_u64(53);
        let f3 = solver.engine().pres().field().clone();
        let mu = solver.engine().pres().mu().clone();
        // a generator of the full group K^x (order 80): full quotient order
        // and full unit order
        let g = {
            let mut found = None;
            for idx in 2..200u64 {
                let cand = Polynomial::from_u64_coeffs(
                    &f3,
                    &[idx % 3, (idx / 3) % 3, (idx / 9) % 3, 1],
                );
                let mut ok = true;
                for div in [2u64, 5] {
                    let e = BigUint::from(80u64 / div);
                    if cand.pow_mod(&e, &mu).unwrap() == Polynomial::one(&f3) {
                        ok = false;
                        break;
                    }
                }
                if ok && check_generator(solver.engine().pres(), &cand).unwrap() {
                    found = Some(cand);
                    break;
                }
            }
            found.expect("full-group generator")
        };
        // h = gamma in F_q^x: quotient log 0, correction from the unit part
        let h_const = Polynomial::from_u64_coeffs(&f3, &[2]);
        let (z, ord) = solver
            .solve_full_dlog(&g, &h_const, &mut rng)
            .unwrap()
            .expect("h is a power of g");
        assert_eq!(ord, BigUint::from(80u64));
        assert_eq!(g.pow_mod(&z, &mu).unwrap(), h_const);
        // a random exponent round-trips
        for _ in 0..1 {
            let z0 = BigUint::from(rng.next_u64() % 80);
            let h = g.pow_mod(&z0, &mu).unwrap();
            let (z, _) = solver
                .solve_full_dlog(&g, &h, &mut rng)
                .unwrap()
                .expect("in the cyclic group");
            assert_eq!(z, z0);
        }
    }

    #[test]
    fn collect_relation_recheck() {
        let mut solver = toy_solver();
        let mut rng = ChaCha12Rng::seed_from_u64(52);
        let f3 = solver.engine().pres().field().clone();
        let mu = solver.engine().pres().mu().clone();
        let g = Polynomial::from_u64_coeffs(&f3, &[0, 2, 0, 1]);
        let h = Polynomial::from_u64_coeffs(&f3, &[1, 1, 2, 0]);
        let mut got = 0;
        while got < 3 {
            let Ok(rel) = solver.collect_relation(&g, &h, &mut rng) else {
                continue;
            };
            got += 1;
            // f = g^alpha h^beta (mod mu), rechecked here
            let expected = g
                .pow_mod(&rel.alpha, &mu)
                .unwrap()
                .mul(&h.pow_mod(&rel.beta, &mu).unwrap())
                .rem(&mu)
                .unwrap();
            assert_eq!(rel.lifted.rem(&mu).unwrap(), expected);
            assert!(crate::ff::poly_is_irreducible(&rel.lifted).unwrap());
            assert_eq!(rel.lifted.deg() as u64, solver.lift_degree());
            // every record re-verifies independently
            for rec in &rel.records {
                assert!(solver.engine_mut().verify_record(rec).unwrap());
            }
        }
    }
}
