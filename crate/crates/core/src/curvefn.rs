//! Rational functions on a Weierstrass curve in the normal form
//! `(u(x) + v(x) y) / den(x)`, plus symbolic point arithmetic used to write
//! endomorphism equations as polynomial systems.
//!
//! Every function on the curve admits this form because `y^2` reduces along
//! the curve equation. Zeros and poles are recovered from the norm
//! `N(u + v y) = u^2 - u v (a1 x + a3) - v^2 (x^3 + a2 x^2 + a4 x + a6)`,
//! which is a plain polynomial in `x`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ec::{CurvePoint, WeierstrassCurve};
use crate::error::{Error, Result};
use crate::ff::{Embedding, FieldElement, FieldOps, Polynomial};

/// Shared handle to the curve a function lives on.
pub type CurveRef = Arc<WeierstrassCurve>;

/// `(u + v y) / den` with `den` monic and `gcd(u, v, den) = 1`.
#[derive(Clone)]
pub struct CurveFn {
    curve: CurveRef,
    u: Polynomial,
    v: Polynomial,
    den: Polynomial,
}

/// A value on the projective line.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum P1Value {
    Finite(FieldElement),
    Infinity,
}

impl P1Value {
    pub fn finite(&self) -> Option<&FieldElement> {
        match self {
            P1Value::Finite(e) => Some(e),
            P1Value::Infinity => None,
        }
    }
}

impl fmt::Debug for CurveFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?} + ({:?})y)/({:?})", self.u, self.v, self.den)
    }
}

impl PartialEq for CurveFn {
    fn eq(&self, other: &Self) -> bool {
        self.u == other.u && self.v == other.v && self.den == other.den
    }
}
impl Eq for CurveFn {}

impl CurveFn {
    pub fn new(
        curve: &CurveRef,
        u: Polynomial,
        v: Polynomial,
        den: Polynomial,
    ) -> Result<CurveFn> {
        if den.is_zero() {
            return Err(Error::domain("zero denominator"));
        }
        let mut f = CurveFn {
            curve: curve.clone(),
            u,
            v,
            den,
        };
        f.normalize()?;
        Ok(f)
    }

    pub fn zero(curve: &CurveRef) -> CurveFn {
        let field = curve.field();
        CurveFn {
            curve: curve.clone(),
            u: Polynomial::zero(field),
            v: Polynomial::zero(field),
            den: Polynomial::one(field),
        }
    }

    pub fn one(curve: &CurveRef) -> CurveFn {
        CurveFn::constant(curve, curve.field().one())
    }

    pub fn constant(curve: &CurveRef, c: FieldElement) -> CurveFn {
        let field = curve.field();
        CurveFn {
            curve: curve.clone(),
            u: Polynomial::constant(c),
            v: Polynomial::zero(field),
            den: Polynomial::one(field),
        }
    }

    /// The coordinate function `x`.
    pub fn x_fn(curve: &CurveRef) -> CurveFn {
        let field = curve.field();
        CurveFn {
            curve: curve.clone(),
            u: Polynomial::x(field),
            v: Polynomial::zero(field),
            den: Polynomial::one(field),
        }
    }

    /// The coordinate function `y`.
    pub fn y_fn(curve: &CurveRef) -> CurveFn {
        let field = curve.field();
        CurveFn {
            curve: curve.clone(),
            u: Polynomial::zero(field),
            v: Polynomial::one(field),
            den: Polynomial::one(field),
        }
    }

    pub fn from_x_poly(curve: &CurveRef, f: Polynomial) -> CurveFn {
        let field = curve.field();
        CurveFn {
            curve: curve.clone(),
            u: f,
            v: Polynomial::zero(field),
            den: Polynomial::one(field),
        }
    }

    pub fn curve(&self) -> &CurveRef {
        &self.curve
    }

    pub fn u(&self) -> &Polynomial {
        &self.u
    }

    pub fn v(&self) -> &Polynomial {
        &self.v
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    fn normalize(&mut self) -> Result<()> {
        if self.u.is_zero() && self.v.is_zero() {
            self.den = Polynomial::one(self.curve.field());
            return Ok(());
        }
        let g = self.u.gcd(&self.v)?;
        let g = if g.is_zero() {
            self.den.clone()
        } else {
            g.gcd(&self.den)?
        };
        if g.degree().map_or(false, |d| d > 0) {
            self.u = self.u.div_exact(&g)?;
            self.v = self.v.div_exact(&g)?;
            self.den = self.den.div_exact(&g)?;
        }
        let lc = self.den.leading_coeff().inv()?;
        self.den = self.den.scale(&lc);
        self.u = self.u.scale(&lc);
        self.v = self.v.scale(&lc);
        Ok(())
    }

    /// `x^3 + a2 x^2 + a4 x + a6` as a polynomial.
    fn rhs_poly(curve: &WeierstrassCurve) -> Polynomial {
        let field = curve.field();
        Polynomial::new(
            field,
            vec![
                curve.a6().clone(),
                curve.a4().clone(),
                curve.a2().clone(),
                field.one(),
            ],
        )
    }

    /// `a1 x + a3` as a polynomial.
    fn a1x_a3(curve: &WeierstrassCurve) -> Polynomial {
        let field = curve.field();
        Polynomial::new(field, vec![curve.a3().clone(), curve.a1().clone()])
    }

    pub fn add(&self, other: &CurveFn) -> CurveFn {
        let u = self.u.mul(&other.den).add(&other.u.mul(&self.den));
        let v = self.v.mul(&other.den).add(&other.v.mul(&self.den));
        let den = self.den.mul(&other.den);
        CurveFn::new(&self.curve, u, v, den).expect("nonzero denominator")
    }

    pub fn sub(&self, other: &CurveFn) -> CurveFn {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> CurveFn {
        CurveFn {
            curve: self.curve.clone(),
            u: self.u.neg(),
            v: self.v.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &CurveFn) -> CurveFn {
        // (u1 + v1 y)(u2 + v2 y) with y^2 = s - (a1 x + a3) y
        let s = Self::rhs_poly(&self.curve);
        let lin = Self::a1x_a3(&self.curve);
        let uu = self.u.mul(&other.u);
        let vv = self.v.mul(&other.v);
        let cross = self.u.mul(&other.v).add(&self.v.mul(&other.u));
        let u = uu.add(&vv.mul(&s));
        let v = cross.sub(&vv.mul(&lin));
        let den = self.den.mul(&other.den);
        CurveFn::new(&self.curve, u, v, den).expect("nonzero denominator")
    }

    /// Hyperelliptic conjugate: `y -> -y - a1 x - a3`.
    pub fn conj(&self) -> CurveFn {
        let lin = Self::a1x_a3(&self.curve);
        CurveFn {
            curve: self.curve.clone(),
            u: self.u.sub(&self.v.mul(&lin)),
            v: self.v.neg(),
            den: self.den.clone(),
        }
    }

    /// Norm of the numerator `u + v y` as a polynomial in `x`.
    pub fn norm_numerator(&self) -> Polynomial {
        let s = Self::rhs_poly(&self.curve);
        let lin = Self::a1x_a3(&self.curve);
        self.u
            .mul(&self.u)
            .sub(&self.u.mul(&self.v).mul(&lin))
            .sub(&self.v.mul(&self.v).mul(&s))
    }

    pub fn inv(&self) -> Result<CurveFn> {
        if self.is_zero() {
            return Err(Error::domain("inverse of the zero function"));
        }
        let norm = self.norm_numerator();
        let conj = self.conj();
        // 1/f = den * conj(num) / norm(num)
        CurveFn::new(
            &self.curve,
            self.den.mul(&conj.u),
            self.den.mul(&conj.v),
            norm,
        )
    }

    pub fn div(&self, other: &CurveFn) -> Result<CurveFn> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_u64(&self, mut e: u64) -> CurveFn {
        let mut base = self.clone();
        let mut acc = CurveFn::one(&self.curve);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Apply the q-power Frobenius to every coefficient.
    pub fn coeff_frobenius(&self, q: u64) -> CurveFn {
        CurveFn {
            curve: self.curve.clone(),
            u: self.u.coeff_frobenius(q),
            v: self.v.coeff_frobenius(q),
            den: self.den.coeff_frobenius(q),
        }
    }

    /// Move the function to a curve over a larger field.
    pub fn embed_coeffs(&self, emb: &Embedding, big_curve: &CurveRef) -> CurveFn {
        CurveFn {
            curve: big_curve.clone(),
            u: emb.apply_poly(&self.u),
            v: emb.apply_poly(&self.v),
            den: emb.apply_poly(&self.den),
        }
    }

    /// Substitute coordinate maps: `f(x, y) -> f(X, Y)`.
    pub fn subst(&self, x_map: &CurveFn, y_map: &CurveFn) -> Result<CurveFn> {
        let horner = |p: &Polynomial| -> CurveFn {
            let mut acc = CurveFn::zero(&self.curve);
            for c in p.coeffs().iter().rev() {
                acc = acc
                    .mul(x_map)
                    .add(&CurveFn::constant(&self.curve, c.clone()));
            }
            acc
        };
        let num = horner(&self.u).add(&horner(&self.v).mul(y_map));
        num.div(&horner(&self.den))
    }

    /// Evaluate at an affine point with coordinates in the coefficient field.
    /// Returns a projective value; indeterminate `0/0` is a domain error.
    pub fn eval(&self, point: &CurvePoint) -> Result<P1Value> {
        let (x, y) = point
            .xy()
            .ok_or_else(|| Error::domain("cannot evaluate at infinity in affine form"))?;
        let num = self.u.eval(x).add(&self.v.eval(x).mul(y));
        let den = self.den.eval(x);
        if den.is_zero() {
            if num.is_zero() {
                // multiply through by the numerator conjugate, turning the
                // numerator into its norm (a pure x-polynomial)
                let norm = self.norm_numerator();
                let conj = self.conj();
                let cval = conj.u.eval(x).add(&conj.v.eval(x).mul(y));
                let nval = norm.eval(x);
                let dval = den.mul(&cval);
                if dval.is_zero() {
                    if nval.is_zero() {
                        return Err(Error::domain("indeterminate evaluation"));
                    }
                    return Ok(P1Value::Infinity);
                }
                return Ok(P1Value::Finite(nval.div(&dval)?));
            }
            return Ok(P1Value::Infinity);
        }
        Ok(P1Value::Finite(num.div(&den)?))
    }
}

// ---------------------------------------------------------------------------
// symbolic points
// ---------------------------------------------------------------------------

/// A point of the curve whose coordinates are rational functions of a generic
/// point, i.e. the image of `(x, y)` under some composite map.
#[derive(Clone, Debug)]
pub struct SymPoint {
    pub x: CurveFn,
    pub y: CurveFn,
}

/// Collects the x-loci where a symbolic formula degenerates (division by a
/// function that vanishes, or points sent to infinity). Candidate solutions
/// lost to such degeneracies are recovered from these polynomials.
#[derive(Default, Debug)]
pub struct DegeneracyLog {
    polys: Vec<Polynomial>,
}

impl DegeneracyLog {
    pub fn new() -> Self {
        DegeneracyLog { polys: Vec::new() }
    }

    fn record_fn(&mut self, f: &CurveFn) {
        let n = f.norm_numerator();
        if n.degree().map_or(false, |d| d > 0) {
            self.polys.push(n);
        }
        if f.den.degree().map_or(false, |d| d > 0) {
            self.polys.push(f.den.clone());
        }
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }
}

impl SymPoint {
    /// The generic point `(x, y)`.
    pub fn generic(curve: &CurveRef) -> SymPoint {
        SymPoint {
            x: CurveFn::x_fn(curve),
            y: CurveFn::y_fn(curve),
        }
    }

    /// Image of the generic point under the q-power Frobenius: `(x^q, y^q)`,
    /// with `y^q` reduced along the curve.
    pub fn frobenius(curve: &CurveRef, q: u64) -> SymPoint {
        let field = curve.field();
        let mut xq = vec![field.zero(); q as usize + 1];
        xq[q as usize] = field.one();
        let x = CurveFn::from_x_poly(curve, Polynomial::new(field, xq));
        let y = CurveFn::y_fn(curve).pow_u64(q);
        SymPoint { x, y }
    }

    pub fn constant(curve: &CurveRef, point: &CurvePoint) -> Result<SymPoint> {
        let (x, y) = point
            .xy()
            .ok_or_else(|| Error::domain("cannot represent infinity symbolically"))?;
        Ok(SymPoint {
            x: CurveFn::constant(curve, x.clone()),
            y: CurveFn::constant(curve, y.clone()),
        })
    }

    pub fn neg(&self, curve: &CurveRef) -> SymPoint {
        // (x, -y - a1 x - a3)
        let a1 = CurveFn::constant(curve, curve.a1().clone());
        let a3 = CurveFn::constant(curve, curve.a3().clone());
        SymPoint {
            x: self.x.clone(),
            y: self.y.neg().sub(&a1.mul(&self.x)).sub(&a3),
        }
    }

    /// Evaluate the coordinate maps at a concrete point.
    pub fn eval(&self, point: &CurvePoint) -> Result<CurvePoint> {
        let xv = self.x.eval(point)?;
        let yv = self.y.eval(point)?;
        match (xv, yv) {
            (P1Value::Finite(x), P1Value::Finite(y)) => Ok(CurvePoint::Affine(x, y)),
            _ => Ok(CurvePoint::Infinity),
        }
    }
}

fn chord_lambda(a: &SymPoint, b: &SymPoint, log: &mut DegeneracyLog) -> Result<CurveFn> {
    let dx = b.x.sub(&a.x);
    log.record_fn(&dx);
    b.y.sub(&a.y).div(&dx)
}

fn tangent_lambda(
    curve: &CurveRef,
    a: &SymPoint,
    log: &mut DegeneracyLog,
) -> Result<CurveFn> {
    let field = curve.field();
    let c2 = CurveFn::constant(curve, field.from_u64(2));
    let c3 = CurveFn::constant(curve, field.from_u64(3));
    let a1 = CurveFn::constant(curve, curve.a1().clone());
    let a2 = CurveFn::constant(curve, curve.a2().clone());
    let a3 = CurveFn::constant(curve, curve.a3().clone());
    let a4 = CurveFn::constant(curve, curve.a4().clone());
    let num = c3
        .mul(&a.x)
        .mul(&a.x)
        .add(&c2.mul(&a2).mul(&a.x))
        .add(&a4)
        .sub(&a1.mul(&a.y));
    let den = c2.mul(&a.y).add(&a1.mul(&a.x)).add(&a3);
    log.record_fn(&den);
    num.div(&den)
}

fn finish_add(curve: &CurveRef, a: &SymPoint, b: &SymPoint, lambda: &CurveFn) -> SymPoint {
    let a1 = CurveFn::constant(curve, curve.a1().clone());
    let a2 = CurveFn::constant(curve, curve.a2().clone());
    let a3 = CurveFn::constant(curve, curve.a3().clone());
    let nu = a.y.sub(&lambda.mul(&a.x));
    let x3 = lambda
        .mul(lambda)
        .add(&a1.mul(lambda))
        .sub(&a2)
        .sub(&a.x)
        .sub(&b.x);
    let y3 = lambda.add(&a1).mul(&x3).neg().sub(&nu).sub(&a3);
    SymPoint { x: x3, y: y3 }
}

/// Symbolic group law. Fails only when the sum is identically infinity.
pub fn sym_add(
    curve: &CurveRef,
    a: &SymPoint,
    b: &SymPoint,
    log: &mut DegeneracyLog,
) -> Result<SymPoint> {
    if a.x == b.x {
        if a.y == b.y {
            return sym_double(curve, a, log);
        }
        return Err(Error::domain("symbolic sum is identically infinity"));
    }
    let lambda = chord_lambda(a, b, log)?;
    Ok(finish_add(curve, a, b, &lambda))
}

pub fn sym_double(
    curve: &CurveRef,
    a: &SymPoint,
    log: &mut DegeneracyLog,
) -> Result<SymPoint> {
    let lambda = tangent_lambda(curve, a, log)?;
    Ok(finish_add(curve, a, a, &lambda))
}

/// `[m]` applied to a symbolic point, `m != 0`, by double-and-add.
pub fn sym_scalar_mul(
    curve: &CurveRef,
    m: i64,
    a: &SymPoint,
    log: &mut DegeneracyLog,
) -> Result<SymPoint> {
    if m == 0 {
        return Err(Error::domain("symbolic [0] map is identically infinity"));
    }
    let base = if m < 0 { a.neg(curve) } else { a.clone() };
    let mag = m.unsigned_abs();
    let mut acc: Option<SymPoint> = None;
    for i in (0..64 - mag.leading_zeros()).rev() {
        if let Some(cur) = acc.take() {
            acc = Some(sym_double(curve, &cur, log)?);
        }
        if (mag >> i) & 1 == 1 {
            acc = Some(match acc.take() {
                None => base.clone(),
                Some(cur) => sym_add(curve, &cur, &base, log)?,
            });
        }
    }
    Ok(acc.expect("m != 0"))
}

/// Coordinate maps of the translation `P -> P + t` for a fixed rational
/// point `t`, as generic chord formulas.
pub fn translation_maps(curve: &CurveRef, t: &CurvePoint) -> Result<(CurveFn, CurveFn)> {
    let sym = SymPoint::constant(curve, t)?;
    let mut log = DegeneracyLog::new();
    let sum = sym_add(curve, &SymPoint::generic(curve), &sym, &mut log)?;
    Ok((sum.x, sum.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ec::WeierstrassCurve;
    use crate::ff::{build_extension, Field, FieldDesc};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f3() -> Field {
        FieldDesc::prime(3).unwrap()
    }

    fn toy() -> CurveRef {
        Arc::new(WeierstrassCurve::from_u64(&f3(), [0, 0, 0, 1, 0]).unwrap())
    }

    /// y^2 + xy = x^3 + 2x + 1 over F_5 keeps the long-form terms honest.
    fn long_form() -> CurveRef {
        let f5 = FieldDesc::prime(5).unwrap();
        Arc::new(WeierstrassCurve::from_u64(&f5, [1, 0, 0, 2, 1]).unwrap())
    }

    fn eval_ok(f: &CurveFn, p: &CurvePoint) -> FieldElement {
        match f.eval(p).unwrap() {
            P1Value::Finite(v) => v,
            P1Value::Infinity => panic!("unexpected pole"),
        }
    }

    #[test]
    fn field_ops_consistent_with_evaluation() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for curve in [toy(), long_form()] {
            let ext = build_extension(curve.field(), 3).unwrap();
            let big = Arc::new(curve.base_change(&ext.embed_base).unwrap());
            let x = CurveFn::x_fn(&big);
            let y = CurveFn::y_fn(&big);
            let f = x.mul(&x).add(&y.mul(&x)).sub(&CurveFn::one(&big));
            let g = y
                .sub(&x)
                .add(&CurveFn::constant(&big, big.field().from_u64(2)));
            for _ in 0..40 {
                let p = big.random_affine_point(&mut rng);
                let fv = eval_ok(&f, &p);
                let gv = eval_ok(&g, &p);
                assert_eq!(eval_ok(&f.add(&g), &p), fv.add(&gv));
                assert_eq!(eval_ok(&f.mul(&g), &p), fv.mul(&gv));
                assert_eq!(eval_ok(&f.sub(&g), &p), fv.sub(&gv));
                if !gv.is_zero() {
                    // the quotient's normal form can be indeterminate at p
                    // (conjugate-branch zeros); skip those, the value is
                    // checked wherever the representation stays readable
                    if let Ok(P1Value::Finite(v)) = f.div(&g).unwrap().eval(&p) {
                        assert_eq!(v, fv.div(&gv).unwrap());
                    }
                }
                if !fv.is_zero() {
                    if let Ok(P1Value::Finite(v)) = f.mul(&f.inv().unwrap()).eval(&p) {
                        assert!(v.is_one());
                    }
                }
            }
        }
    }

    #[test]
    fn norm_vanishes_exactly_under_zeros() {
        let mut rng = ChaCha12Rng::seed_from_u64(22);
        let curve = long_form();
        let field = curve.field().clone();
        for _ in 0..30 {
            let rand_poly = |rng: &mut ChaCha12Rng, d: usize| {
                let coeffs: Vec<FieldElement> =
                    (0..=d).map(|_| field.random_element(rng)).collect();
                Polynomial::new(&field, coeffs)
            };
            let f = CurveFn::new(
                &curve,
                rand_poly(&mut rng, 2),
                rand_poly(&mut rng, 1),
                Polynomial::one(&field),
            )
            .unwrap();
            if f.is_zero() {
                continue;
            }
            let norm = f.norm_numerator();
            // at every rational point, f vanishes iff x is a norm root
            for p in curve.enumerate_points(100).unwrap() {
                let Some((x, _)) = p.xy() else { continue };
                let val = f.eval(&p).unwrap();
                if val == P1Value::Finite(field.zero()) {
                    assert!(norm.eval(x).is_zero());
                }
            }
        }
    }

    #[test]
    fn translation_matches_group_law() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for curve in [toy(), long_form()] {
            let ext = build_extension(curve.field(), 2).unwrap();
            let big = Arc::new(curve.base_change(&ext.embed_base).unwrap());
            let rat = curve.enumerate_points(1000).unwrap();
            let t0 = rat
                .iter()
                .find(|p| !p.is_infinity())
                .unwrap()
                .embed(&ext.embed_base);
            let (xt, yt) = translation_maps(&big, &t0).unwrap();
            for _ in 0..40 {
                let p = big.random_affine_point(&mut rng);
                // the generic chord formula degenerates on the fiber over x(t0)
                if p.xy().map(|(x, _)| x) == t0.xy().map(|(x, _)| x) {
                    continue;
                }
                let expected = big.point_add(&p, &t0).unwrap();
                let xv = xt.eval(&p).unwrap();
                let yv = yt.eval(&p).unwrap();
                match expected {
                    CurvePoint::Infinity => assert_eq!(xv, P1Value::Infinity),
                    CurvePoint::Affine(ex, ey) => {
                        assert_eq!(xv, P1Value::Finite(ex));
                        assert_eq!(yv, P1Value::Finite(ey));
                    }
                }
            }
        }
    }

    #[test]
    fn symbolic_scalar_maps_match_scalar_mul() {
        let mut rng = ChaCha12Rng::seed_from_u64(24);
        for curve in [toy(), long_form()] {
            let ext = build_extension(curve.field(), 3).unwrap();
            let big = Arc::new(curve.base_change(&ext.embed_base).unwrap());
            for m in [2i64, 3, 5, -4] {
                let mut log = DegeneracyLog::new();
                let map = sym_scalar_mul(&big, m, &SymPoint::generic(&big), &mut log).unwrap();
                let mut checked = 0;
                let mut guard = 0;
                while checked < 25 && guard < 2000 {
                    guard += 1;
                    let p = big.random_affine_point(&mut rng);
                    let expected = big.scalar_mul_i64(m, &p);
                    let (px, _) = p.xy().unwrap();
                    let degenerate =
                        log.polys().iter().any(|f| f.eval(px).is_zero());
                    if degenerate {
                        continue;
                    }
                    let got = map.eval(&p).unwrap();
                    assert_eq!(got, expected, "m={m}");
                    assert!(big.is_on_curve(&got));
                    checked += 1;
                }
                assert!(checked >= 20, "not enough non-degenerate samples");
            }
        }
    }

    #[test]
    fn symbolic_frobenius_evaluates() {
        let mut rng = ChaCha12Rng::seed_from_u64(25);
        let curve = toy();
        let ext = build_extension(curve.field(), 2).unwrap();
        let big = Arc::new(curve.base_change(&ext.embed_base).unwrap());
        let frob = SymPoint::frobenius(&big, 3);
        for _ in 0..30 {
            let p = big.random_affine_point(&mut rng);
            assert_eq!(frob.eval(&p).unwrap(), big.frobenius_point(&p, 3));
        }
    }

    #[test]
    fn substitution_composes() {
        let mut rng = ChaCha12Rng::seed_from_u64(26);
        let curve = toy();
        let ext = build_extension(curve.field(), 2).unwrap();
        let big = Arc::new(curve.base_change(&ext.embed_base).unwrap());
        let rat = curve.enumerate_points(100).unwrap();
        let t0 = rat
            .iter()
            .find(|p| !p.is_infinity())
            .unwrap()
            .embed(&ext.embed_base);
        let (xt, yt) = translation_maps(&big, &t0).unwrap();
        // f = x - x(t0); composing with the translation shifts the fiber
        let x = CurveFn::x_fn(&big);
        let c = CurveFn::constant(&big, t0.xy().unwrap().0.clone());
        let f = x.sub(&c);
        let composed = f.subst(&xt, &yt).unwrap();
        for _ in 0..30 {
            let p = big.random_affine_point(&mut rng);
            if p.xy().unwrap().0 == t0.xy().unwrap().0 {
                continue;
            }
            let shifted = big.point_add(&p, &t0).unwrap();
            let CurvePoint::Affine(_, _) = shifted else {
                continue;
            };
            let direct = eval_ok(&f, &shifted);
            assert_eq!(eval_ok(&composed, &p), direct);
        }
    }
}
