//! Weierstrass curves in long form over any supported field: group law,
//! Frobenius action and preimages, exhaustive point enumeration, group
//! structure, and the deterministic search for a curve with prescribed
//! cyclic group order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use rand_core::Rng;

use crate::error::{Error, Result};
use crate::ff::{poly_factor, Embedding, Field, FieldElement, FieldOps, Polynomial};

/// Default cap on exhaustive point enumeration.
pub const DEFAULT_ENUM_CAP: u64 = 10_000_000;

/// A nonsingular curve `y^2 + a1 x y + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    field: Field,
    a: [FieldElement; 5],
}

/// Affine point or the point at infinity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurvePoint {
    Infinity,
    Affine(FieldElement, FieldElement),
}

impl fmt::Debug for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Infinity => write!(f, "O"),
            CurvePoint::Affine(x, y) => write!(f, "({x}, {y})"),
        }
    }
}

impl fmt::Debug for WeierstrassCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "E[a1={}, a2={}, a3={}, a4={}, a6={}]",
            self.a[0], self.a[1], self.a[2], self.a[3], self.a[4]
        )
    }
}

impl CurvePoint {
    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    pub fn xy(&self) -> Option<(&FieldElement, &FieldElement)> {
        match self {
            CurvePoint::Infinity => None,
            CurvePoint::Affine(x, y) => Some((x, y)),
        }
    }

    /// Map coordinates through an embedding (curve base change companion).
    pub fn embed(&self, emb: &Embedding) -> CurvePoint {
        match self {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine(x, y) => CurvePoint::Affine(emb.apply(x), emb.apply(y)),
        }
    }
}

impl WeierstrassCurve {
    /// Construct and reject singular equations.
    pub fn new(field: &Field, a: [FieldElement; 5]) -> Result<WeierstrassCurve> {
        let curve = WeierstrassCurve {
            field: field.clone(),
            a,
        };
        if curve.discriminant().is_zero() {
            return Err(Error::domain("singular Weierstrass equation"));
        }
        Ok(curve)
    }

    pub fn from_u64(field: &Field, a: [u64; 5]) -> Result<WeierstrassCurve> {
        let coeffs = [
            field.from_u64(a[0]),
            field.from_u64(a[1]),
            field.from_u64(a[2]),
            field.from_u64(a[3]),
            field.from_u64(a[4]),
        ];
        WeierstrassCurve::new(field, coeffs)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// `a1, a2, a3, a4, a6` in that order.
    pub fn coefficients(&self) -> &[FieldElement; 5] {
        &self.a
    }

    pub fn a1(&self) -> &FieldElement {
        &self.a[0]
    }
    pub fn a2(&self) -> &FieldElement {
        &self.a[1]
    }
    pub fn a3(&self) -> &FieldElement {
        &self.a[2]
    }
    pub fn a4(&self) -> &FieldElement {
        &self.a[3]
    }
    pub fn a6(&self) -> &FieldElement {
        &self.a[4]
    }

    fn scl(&self, e: &FieldElement, c: u64) -> FieldElement {
        e.mul(&self.field.from_u64(c))
    }

    pub fn discriminant(&self) -> FieldElement {
        let [a1, a2, a3, a4, a6] = &self.a;
        let b2 = a1.mul(a1).add(&self.scl(a2, 4));
        let b4 = self.scl(a4, 2).add(&a1.mul(a3));
        let b6 = a3.mul(a3).add(&self.scl(a6, 4));
        let b8 = a1
            .mul(a1)
            .mul(a6)
            .add(&self.scl(&a2.mul(a6), 4))
            .sub(&a1.mul(a3).mul(a4))
            .add(&a2.mul(&a3.mul(a3)))
            .sub(&a4.mul(a4));
        // -b2^2 b8 - 8 b4^3 - 27 b6^2 + 9 b2 b4 b6
        let t1 = b2.mul(&b2).mul(&b8).neg();
        let t2 = self.scl(&b4.mul(&b4).mul(&b4), 8).neg();
        let t3 = self.scl(&b6.mul(&b6), 27).neg();
        let t4 = self.scl(&b2.mul(&b4).mul(&b6), 9);
        t1.add(&t2).add(&t3).add(&t4)
    }

    /// The same equation over a larger field.
    pub fn base_change(&self, emb: &Embedding) -> Result<WeierstrassCurve> {
        let a = [
            emb.apply(&self.a[0]),
            emb.apply(&self.a[1]),
            emb.apply(&self.a[2]),
            emb.apply(&self.a[3]),
            emb.apply(&self.a[4]),
        ];
        WeierstrassCurve::new(emb.dst(), a)
    }

    /// Right-hand side `x^3 + a2 x^2 + a4 x + a6`.
    pub fn rhs_at(&self, x: &FieldElement) -> FieldElement {
        let x2 = x.mul(x);
        x2.mul(x)
            .add(&self.a[1].mul(&x2))
            .add(&self.a[3].mul(x))
            .add(&self.a[4])
    }

    pub fn is_on_curve(&self, point: &CurvePoint) -> bool {
        match point {
            CurvePoint::Infinity => true,
            CurvePoint::Affine(x, y) => {
                let lhs = y
                    .mul(y)
                    .add(&self.a[0].mul(x).mul(y))
                    .add(&self.a[2].mul(y));
                lhs == self.rhs_at(x)
            }
        }
    }

    pub fn neg_point(&self, point: &CurvePoint) -> CurvePoint {
        match point {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine(x, y) => {
                let ny = y.neg().sub(&self.a[0].mul(x)).sub(&self.a[2]);
                CurvePoint::Affine(x.clone(), ny)
            }
        }
    }

    /// Group law; points must lie on the curve.
    pub fn point_add(&self, p: &CurvePoint, q: &CurvePoint) -> Result<CurvePoint> {
        if !self.is_on_curve(p) || !self.is_on_curve(q) {
            return Err(Error::domain("point not on curve"));
        }
        Ok(self.add_raw(p, q))
    }

    /// Group law assuming both points already lie on the curve.
    pub fn add_points(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        debug_assert!(self.is_on_curve(p) && self.is_on_curve(q));
        self.add_raw(p, q)
    }

    /// Group law without the membership check (internal hot path).
    pub(crate) fn add_raw(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        let (x1, y1) = match p {
            CurvePoint::Infinity => return q.clone(),
            CurvePoint::Affine(x, y) => (x, y),
        };
        let (x2, y2) = match q {
            CurvePoint::Infinity => return p.clone(),
            CurvePoint::Affine(x, y) => (x, y),
        };
        let [a1, a2, a3, a4, _] = &self.a;
        let lambda = if x1 == x2 {
            // inverse pair or doubling
            let neg_y2 = y2.neg().sub(&a1.mul(x2)).sub(a3);
            if *y1 == neg_y2 {
                return CurvePoint::Infinity;
            }
            // tangent slope: (3x^2 + 2 a2 x + a4 - a1 y) / (2y + a1 x + a3)
            let num = self
                .scl(&x1.mul(x1), 3)
                .add(&self.scl(&a2.mul(x1), 2))
                .add(a4)
                .sub(&a1.mul(y1));
            let den = self.scl(y1, 2).add(&a1.mul(x1)).add(a3);
            num.div(&den)
                .expect("tangent denominator vanishes only for inverse pairs")
        } else {
            y2.sub(y1).div(&x2.sub(x1)).unwrap()
        };
        let nu = y1.sub(&lambda.mul(x1));
        // x3 = lambda^2 + a1 lambda - a2 - x1 - x2
        let x3 = lambda
            .mul(&lambda)
            .add(&a1.mul(&lambda))
            .sub(a2)
            .sub(x1)
            .sub(x2);
        // y3 = -(lambda + a1) x3 - nu - a3
        let y3 = lambda.add(a1).mul(&x3).neg().sub(&nu).sub(a3);
        CurvePoint::Affine(x3, y3)
    }

    pub fn sub_points(&self, p: &CurvePoint, q: &CurvePoint) -> CurvePoint {
        self.add_raw(p, &self.neg_point(q))
    }

    /// `n * P` by double-and-add; negative `n` negates the point.
    pub fn scalar_mul(&self, n: &BigInt, p: &CurvePoint) -> CurvePoint {
        let mag: BigUint = n.magnitude().clone();
        let base = if n.sign() == Sign::Minus {
            self.neg_point(p)
        } else {
            p.clone()
        };
        let mut acc = CurvePoint::Infinity;
        for i in (0..mag.bits()).rev() {
            acc = self.add_raw(&acc, &acc);
            if mag.bit(i) {
                acc = self.add_raw(&acc, &base);
            }
        }
        acc
    }

    pub fn scalar_mul_i64(&self, n: i64, p: &CurvePoint) -> CurvePoint {
        self.scalar_mul(&BigInt::from(n), p)
    }

    /// Coordinatewise `q`-power Frobenius.
    pub fn frobenius_point(&self, p: &CurvePoint, q: u64) -> CurvePoint {
        match p {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine(x, y) => CurvePoint::Affine(
                crate::ff::frobenius_power(x, q, 1),
                crate::ff::frobenius_power(y, q, 1),
            ),
        }
    }

    /// The unique `R` with `phi(R) = P` for `P` over `F_{q^d}`: coordinates
    /// are raised to the power `q^(d-1)`.
    pub fn frobenius_preimage(&self, p: &CurvePoint, q: u64) -> Result<CurvePoint> {
        match p {
            CurvePoint::Infinity => Ok(CurvePoint::Infinity),
            CurvePoint::Affine(x, y) => {
                let s = subfield_degree(x.field(), q)?;
                let d = (x.field().degree() / s) as u64;
                Ok(CurvePoint::Affine(
                    crate::ff::frobenius_power(x, q, d - 1),
                    crate::ff::frobenius_power(y, q, d - 1),
                ))
            }
        }
    }

    /// Both `y` values over a given `x`, ascending (one entry if ramified).
    pub fn solve_y(&self, x: &FieldElement) -> Result<Vec<FieldElement>> {
        let field = x.field().clone();
        let a1x = crate::ff::embed(&self.a[0], &field)
            .unwrap_or_else(|_| self.a[0].clone())
            .mul(x);
        // When x lives in an extension the curve coefficients embed along.
        let same = **x.field() == **self.field();
        let (lin, rhs) = if same {
            (
                self.a[0].mul(x).add(&self.a[2]),
                self.rhs_at(x),
            )
        } else {
            let emb = Embedding::new(&self.field, &field)?;
            let big = self.base_change(&emb)?;
            (big.a[0].mul(x).add(&big.a[2]), big.rhs_at(x))
        };
        let _ = a1x;
        let poly = Polynomial::new(&field, vec![rhs.neg(), lin, field.one()]);
        let mut roots = Vec::new();
        for (fac, _) in poly_factor(&poly)? {
            if fac.deg() == 1 {
                roots.push(fac.coeff(0).neg());
            }
        }
        roots.sort();
        roots.dedup();
        Ok(roots)
    }

    /// Uniform-enough random affine point: random `x` until the fiber is
    /// nonempty, then a random branch.
    pub fn random_affine_point(&self, rng: &mut dyn Rng) -> CurvePoint {
        loop {
            let x = self.field.random_element(rng);
            let ys = match self.solve_y(&x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            if ys.is_empty() {
                continue;
            }
            let pick = crate::rand_util::uniform_u64(rng, ys.len() as u64) as usize;
            return CurvePoint::Affine(x, ys[pick].clone());
        }
    }

    /// All points over the base field: infinity first, then ascending by
    /// (x, y) in element order. Errors if the field exceeds `cap`.
    pub fn enumerate_points(&self, cap: u64) -> Result<Vec<CurvePoint>> {
        self.field
            .order_u64()
            .filter(|&n| n <= cap)
            .ok_or_else(|| Error::resource("field too large for point enumeration"))?;
        let sqrt_table = self.square_root_table();
        let mut pts = vec![CurvePoint::Infinity];
        let two_inv = self.field.from_u64(2).inv().unwrap();
        for x in self.field.elements() {
            let h = self.a[0].mul(&x).add(&self.a[2]).mul(&two_inv);
            let d = self.rhs_at(&x).add(&h.mul(&h));
            if d.is_zero() {
                pts.push(CurvePoint::Affine(x, h.neg()));
            } else if let Some(r) = sqrt_table.get(&d) {
                let y1 = r.sub(&h);
                let y2 = r.neg().sub(&h);
                let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
                pts.push(CurvePoint::Affine(x.clone(), lo));
                pts.push(CurvePoint::Affine(x, hi));
            }
        }
        Ok(pts)
    }

    /// Point count by x-scan, no materialization.
    pub fn count_points(&self, cap: u64) -> Result<u64> {
        self.field
            .order_u64()
            .filter(|&n| n <= cap)
            .ok_or_else(|| Error::resource("field too large for point counting"))?;
        let squares: BTreeSet<FieldElement> = self
            .field
            .elements()
            .filter(|e| !e.is_zero())
            .map(|e| e.mul(&e))
            .collect();
        let two_inv = self.field.from_u64(2).inv().unwrap();
        let mut count = 1u64;
        for x in self.field.elements() {
            let h = self.a[0].mul(&x).add(&self.a[2]).mul(&two_inv);
            let d = self.rhs_at(&x).add(&h.mul(&h));
            if d.is_zero() {
                count += 1;
            } else if squares.contains(&d) {
                count += 2;
            }
        }
        Ok(count)
    }

    fn square_root_table(&self) -> BTreeMap<FieldElement, FieldElement> {
        let mut table = BTreeMap::new();
        for e in self.field.elements() {
            if e.is_zero() {
                continue;
            }
            let sq = e.mul(&e);
            table.entry(sq).or_insert(e);
        }
        table
    }

    /// Frobenius trace `t = q + 1 - #E(F_q)` over the base field.
    pub fn trace(&self, cap: u64) -> Result<i64> {
        let q = self
            .field
            .order_u64()
            .ok_or_else(|| Error::resource("field too large"))?;
        let n = self.count_points(cap)?;
        Ok(q as i64 + 1 - n as i64)
    }

    /// Exact order of a point in a group of known size.
    pub fn point_order(&self, p: &CurvePoint, group_order: u64) -> u64 {
        if p.is_infinity() {
            return 1;
        }
        let mut ord = group_order;
        for (prime, _) in factor_u64(group_order) {
            while ord % prime == 0 {
                let cand = ord / prime;
                if self.scalar_mul(&BigInt::from(cand), p).is_infinity() {
                    ord = cand;
                } else {
                    break;
                }
            }
        }
        ord
    }

    /// Group order, cyclicity flag and generator(s).
    pub fn group_structure(&self, cap: u64) -> Result<GroupStructure> {
        let pts = self.enumerate_points(cap)?;
        let order = pts.len() as u64;
        let mut exponent = 1u64;
        for p in pts.iter().skip(1) {
            let o = self.point_order(p, order);
            if o == order {
                return Ok(GroupStructure {
                    order,
                    cyclic: true,
                    generators: vec![p.clone()],
                    exponent: order,
                });
            }
            exponent = num_integer::lcm(exponent, o);
        }
        // non-cyclic: E = Z/n1 x Z/n2 with n1 | n2 = exponent
        let n2 = exponent;
        let n1 = order / n2;
        let gen1 = pts
            .iter()
            .skip(1)
            .find(|p| self.point_order(p, order) == n2)
            .cloned()
            .ok_or_else(|| Error::domain("no point of exponent order"))?;
        let mut sub = BTreeSet::new();
        let mut acc = CurvePoint::Infinity;
        for _ in 0..n2 {
            sub.insert(acc.clone());
            acc = self.add_raw(&acc, &gen1);
        }
        let mut gen2 = None;
        'outer: for p in pts.iter().skip(1) {
            let mut acc = p.clone();
            for j in 1..=n1 {
                if sub.contains(&acc) {
                    if j == n1 {
                        gen2 = Some(p.clone());
                        break 'outer;
                    }
                    continue 'outer;
                }
                acc = self.add_raw(&acc, p);
            }
        }
        let gen2 = gen2.ok_or_else(|| Error::domain("no independent second generator"))?;
        Ok(GroupStructure {
            order,
            cyclic: false,
            generators: vec![gen1, gen2],
            exponent: n2,
        })
    }
}

/// Result of [`WeierstrassCurve::group_structure`].
#[derive(Clone, Debug)]
pub struct GroupStructure {
    pub order: u64,
    pub cyclic: bool,
    pub generators: Vec<CurvePoint>,
    pub exponent: u64,
}

/// `s` with `p^s = q`: the degree of `F_q` over the prime field, checked
/// against the given field's tower.
pub fn subfield_degree(field: &Field, q: u64) -> Result<usize> {
    let p = field.p();
    let mut s = 0usize;
    let mut acc = 1u64;
    while acc < q {
        acc = acc
            .checked_mul(p)
            .ok_or_else(|| Error::domain("q is not a power of the characteristic"))?;
        s += 1;
    }
    if acc != q || s == 0 {
        return Err(Error::domain("q is not a power of the characteristic"));
    }
    if field.degree() % s != 0 {
        return Err(Error::domain("F_q is not a subfield of the given field"));
    }
    Ok(s)
}

/// Trial-division factorization for group-order sized integers.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut m = 0;
            while n % d == 0 {
                n /= d;
                m += 1;
            }
            out.push((d, m));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// First curve in coefficient-counter order whose rational point group is
/// cyclic of order exactly `n2`, together with its first generator.
pub fn find_cyclic_curve(
    field: &Field,
    n2: u64,
    cap: u64,
) -> Result<(WeierstrassCurve, CurvePoint)> {
    let q = field
        .order_u64()
        .ok_or_else(|| Error::resource("field too large for curve search"))?;
    let sqrt_ceil = {
        let r = q.isqrt();
        if r * r == q { r } else { r + 1 }
    };
    let lo = (q + 1).saturating_sub(2 * sqrt_ceil);
    let hi = q + 1 + 2 * sqrt_ceil;
    if n2 < lo || n2 > hi {
        return Err(Error::not_found(alloc::format!(
            "{n2} lies outside the Hasse interval for q={q}"
        )));
    }
    // index tables make the scan allocation-free: elements are their
    // counter-order ranks, with precomputed add/mul tables
    let nq = q as usize;
    let elems: Vec<FieldElement> = field.elements().collect();
    let mut mul_t = vec![0u32; nq * nq];
    let mut add_t = vec![0u32; nq * nq];
    for i in 0..nq {
        for j in i..nq {
            let m = elems[i].mul(&elems[j]).index_u64().unwrap() as u32;
            let a = elems[i].add(&elems[j]).index_u64().unwrap() as u32;
            mul_t[i * nq + j] = m;
            mul_t[j * nq + i] = m;
            add_t[i * nq + j] = a;
            add_t[j * nq + i] = a;
        }
    }
    let mut is_sq = vec![false; nq];
    for i in 1..nq {
        is_sq[mul_t[i * nq + i] as usize] = true;
    }
    let mul = |a: u32, b: u32| mul_t[a as usize * nq + b as usize];
    let add = |a: u32, b: u32| add_t[a as usize * nq + b as usize];
    let p = field.p();
    let cidx = |c: u64| (c % p) as u32; // prime-field constants rank as themselves
    let neg = |a: u32| mul(a, cidx(p - 1));
    let inv2 = field.from_u64(2).inv().unwrap().index_u64().unwrap() as u32;

    let mut odometer = [0u32; 5];
    loop {
        let [a1, a2, a3, a4, a6] = odometer;
        // discriminant through the tables
        let b2 = add(mul(a1, a1), mul(cidx(4), a2));
        let b4 = add(mul(cidx(2), a4), mul(a1, a3));
        let b6 = add(mul(a3, a3), mul(cidx(4), a6));
        let b8 = add(
            add(mul(mul(a1, a1), a6), mul(cidx(4), mul(a2, a6))),
            add(
                add(neg(mul(mul(a1, a3), a4)), mul(a2, mul(a3, a3))),
                neg(mul(a4, a4)),
            ),
        );
        let disc = add(
            add(neg(mul(mul(b2, b2), b8)), neg(mul(cidx(8), mul(b4, mul(b4, b4))))),
            add(neg(mul(cidx(27), mul(b6, b6))), mul(cidx(9), mul(b2, mul(b4, b6)))),
        );
        if disc != 0 {
            let mut count = 1u64;
            for ix in 0..nq as u32 {
                let x2 = mul(ix, ix);
                let rhs = add(
                    add(mul(x2, ix), mul(a2, x2)),
                    add(mul(a4, ix), a6),
                );
                let h = mul(inv2, add(mul(a1, ix), a3));
                let d = add(rhs, mul(h, h));
                if d == 0 {
                    count += 1;
                } else if is_sq[d as usize] {
                    count += 2;
                }
                if count > n2 {
                    break;
                }
            }
            if count == n2 {
                let curve = WeierstrassCurve {
                    field: field.clone(),
                    a: [
                        field.element_from_index(a1 as u64),
                        field.element_from_index(a2 as u64),
                        field.element_from_index(a3 as u64),
                        field.element_from_index(a4 as u64),
                        field.element_from_index(a6 as u64),
                    ],
                };
                let gs = curve.group_structure(cap)?;
                if gs.cyclic {
                    let gen = gs.generators[0].clone();
                    debug_assert_eq!(curve.point_order(&gen, n2), n2);
                    return Ok((curve, gen));
                }
            }
        }
        // advance odometer over (a1, a2, a3, a4, a6), a6 fastest
        let mut i = 4usize;
        loop {
            odometer[i] += 1;
            if (odometer[i] as u64) < q {
                break;
            }
            odometer[i] = 0;
            if i == 0 {
                return Err(Error::not_found(alloc::format!(
                    "no curve over F_{q} with cyclic group of order {n2}"
                )));
            }
            i -= 1;
        }
    }
}
