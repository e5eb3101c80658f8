//! Prime fields, extension towers and univariate polynomials, all exact.
//!
//! Every extension is represented in a single step over its prime field:
//! `F_{p^k} = F_p[T]/(m)` with `m` the first monic irreducible of degree `k`
//! in the documented enumeration order. Relative extensions are handled by
//! [`Embedding`] maps between such single-step fields.
//!
//! Ordering convention used everywhere (element enumeration, modulus choice,
//! root choice): a coefficient sequence `(c_0, .., c_{k-1})` over `F_p` is
//! ranked by its counter value `c_0 + c_1 p + .. + c_{k-1} p^{k-1}`, ascending.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::Rng;

use crate::error::{Error, Result};
use crate::rand_util::uniform_u64;

// ---------------------------------------------------------------------------
// scalar arithmetic mod p
// ---------------------------------------------------------------------------

#[inline]
fn addm(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    r
}

fn invm(a: u64, p: u64) -> u64 {
    // p prime, a != 0
    powm(a, p - 2, p)
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).map_or(false, |dd| dd <= n) {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// ---------------------------------------------------------------------------
// raw polynomials over F_p (coefficient vectors, ascending degree)
// ---------------------------------------------------------------------------

fn raw_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn raw_add(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        out[i] = addm(x, y, p);
    }
    raw_trim(&mut out);
    out
}

fn raw_sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; n];
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        out[i] = subm(x, y, p);
    }
    raw_trim(&mut out);
    out
}

const KARATSUBA_CUTOFF: usize = 32;

fn raw_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if a.len().min(b.len()) < KARATSUBA_CUTOFF {
        return raw_mul_school(a, b, p);
    }
    raw_mul_karatsuba(a, b, p)
}

fn raw_mul_school(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    // accumulate in u128 lazily to cut reductions
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            if bj == 0 {
                continue;
            }
            out[i + j] = (out[i + j] + mulm(ai, bj, p)) % p;
        }
    }
    raw_trim(&mut out);
    out
}

fn raw_mul_karatsuba(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let m = a.len().max(b.len()).div_ceil(2);
    if a.len() <= m || b.len() <= m {
        // unbalanced split: fall back to blocking on the longer operand
        let (lo, hi) = if a.len() > b.len() {
            (a, b)
        } else {
            (b, a)
        };
        let mut out = vec![0u64; a.len() + b.len() - 1];
        let mut off = 0;
        while off < lo.len() {
            let end = (off + m).min(lo.len());
            let part = raw_mul(&lo[off..end], hi, p);
            for (i, c) in part.iter().enumerate() {
                out[off + i] = addm(out[off + i], *c, p);
            }
            off = end;
        }
        raw_trim(&mut out);
        return out;
    }
    let (a0, a1) = a.split_at(m);
    let (b0, b1) = b.split_at(m);
    let z0 = raw_mul(a0, b0, p);
    let z2 = raw_mul(a1, b1, p);
    let sa = raw_add(a0, a1, p);
    let sb = raw_add(b0, b1, p);
    let mut z1 = raw_mul(&sa, &sb, p);
    z1 = raw_sub(&z1, &z0, p);
    z1 = raw_sub(&z1, &z2, p);
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, c) in z0.iter().enumerate() {
        out[i] = addm(out[i], *c, p);
    }
    for (i, c) in z1.iter().enumerate() {
        out[m + i] = addm(out[m + i], *c, p);
    }
    for (i, c) in z2.iter().enumerate() {
        out[2 * m + i] = addm(out[2 * m + i], *c, p);
    }
    raw_trim(&mut out);
    out
}

/// Remainder of `a` modulo monic `m`.
fn raw_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    debug_assert!(m.last() == Some(&1), "modulus must be monic");
    let dm = m.len() - 1;
    let mut r: Vec<u64> = a.to_vec();
    raw_trim(&mut r);
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for i in 0..dm {
                let t = mulm(lead, m[i], p);
                r[shift + i] = subm(r[shift + i], t, p);
            }
        }
        r.pop();
        raw_trim(&mut r);
    }
    r
}

// ---------------------------------------------------------------------------
// field descriptors
// ---------------------------------------------------------------------------

/// A finite field `F_p[T]/(modulus)`, single step over its prime field.
#[derive(Debug)]
pub struct FieldDesc {
    p: u64,
    modulus: Vec<u64>,
}

/// Shared handle to a field descriptor. Cheap to clone, immutable.
pub type Field = Arc<FieldDesc>;

impl PartialEq for FieldDesc {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.modulus == other.modulus
    }
}
impl Eq for FieldDesc {}

impl PartialOrd for FieldDesc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FieldDesc {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.p, &self.modulus).cmp(&(other.p, &other.modulus))
    }
}

impl FieldDesc {
    /// The prime field `F_p`, presented with modulus `x`.
    pub fn prime(p: u64) -> Result<Field> {
        if !is_prime_u64(p) {
            return Err(Error::domain(alloc::format!("{p} is not prime")));
        }
        if p == 2 {
            return Err(Error::domain("characteristic 2 is not supported"));
        }
        if p >= 1 << 31 {
            return Err(Error::domain("prime modulus too large"));
        }
        Ok(Arc::new(FieldDesc {
            p,
            modulus: vec![0, 1],
        }))
    }

    /// Build a field from an explicit monic irreducible modulus over `F_p`.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Field> {
        let prime = FieldDesc::prime(p)?;
        if modulus.len() < 2 || modulus.last() != Some(&1) {
            return Err(Error::domain("modulus must be monic of degree >= 1"));
        }
        if modulus.iter().any(|&c| c >= p) {
            return Err(Error::domain("modulus coefficients not reduced mod p"));
        }
        if modulus.len() > 2 {
            let lifted = Polynomial::from_u64_coeffs(&prime, &modulus);
            if !poly_is_irreducible(&lifted)? {
                return Err(Error::domain("modulus is reducible"));
            }
        }
        Ok(Arc::new(FieldDesc { p, modulus }))
    }

    /// The canonical `F_{p^k}`: modulus is the first monic irreducible of
    /// degree `k` in counter order. Deterministic across runs.
    pub fn gf(p: u64, k: usize) -> Result<Field> {
        let prime = FieldDesc::prime(p)?;
        if k == 0 {
            return Err(Error::domain("extension degree must be positive"));
        }
        if k == 1 {
            return Ok(prime);
        }
        let modulus = first_irreducible(&prime, k)?;
        let coeffs: Vec<u64> = modulus.coeffs.iter().map(|c| c.as_u64_const()).collect();
        Ok(Arc::new(FieldDesc { p, modulus: coeffs }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Extension degree over the prime field.
    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.degree() == 1
    }

    /// Field cardinality `p^degree`.
    pub fn order(&self) -> BigUint {
        BigUint::from(self.p).pow(self.degree() as u32)
    }

    /// Cardinality when it fits in a `u64`.
    pub fn order_u64(&self) -> Option<u64> {
        let mut acc: u64 = 1;
        for _ in 0..self.degree() {
            acc = acc.checked_mul(self.p)?;
        }
        Some(acc)
    }
}

/// Element constructors live on the shared handle so elements can hold it.
pub trait FieldOps {
    fn zero(&self) -> FieldElement;
    fn one(&self) -> FieldElement;
    fn from_u64(&self, c: u64) -> FieldElement;
    fn from_coeffs(&self, coeffs: Vec<u64>) -> FieldElement;
    fn element_from_index(&self, index: u64) -> FieldElement;
    fn random_element(&self, rng: &mut dyn Rng) -> FieldElement;
    fn elements(&self) -> ElementIter;
    /// Image of the residue class of `T`, the field's own generator.
    fn gen(&self) -> FieldElement;
}

impl FieldOps for Field {
    fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            coeffs: Vec::new(),
        }
    }

    fn one(&self) -> FieldElement {
        self.from_u64(1)
    }

    fn from_u64(&self, c: u64) -> FieldElement {
        let c = c % self.p;
        let coeffs = if c == 0 { Vec::new() } else { vec![c] };
        FieldElement {
            field: self.clone(),
            coeffs,
        }
    }

    fn from_coeffs(&self, mut coeffs: Vec<u64>) -> FieldElement {
        for c in coeffs.iter_mut() {
            *c %= self.p;
        }
        let mut r = raw_rem(&coeffs, &self.modulus, self.p);
        raw_trim(&mut r);
        FieldElement {
            field: self.clone(),
            coeffs: r,
        }
    }

    fn element_from_index(&self, mut index: u64) -> FieldElement {
        let mut coeffs = Vec::new();
        while index > 0 {
            coeffs.push(index % self.p);
            index /= self.p;
        }
        assert!(coeffs.len() <= self.degree(), "index out of field range");
        FieldElement {
            field: self.clone(),
            coeffs,
        }
    }

    fn random_element(&self, rng: &mut dyn Rng) -> FieldElement {
        let mut coeffs = vec![0u64; self.degree()];
        for c in coeffs.iter_mut() {
            *c = uniform_u64(rng, self.p);
        }
        raw_trim(&mut coeffs);
        FieldElement {
            field: self.clone(),
            coeffs,
        }
    }

    fn elements(&self) -> ElementIter {
        ElementIter {
            field: self.clone(),
            odometer: vec![0u64; self.degree()],
            done: false,
        }
    }

    fn gen(&self) -> FieldElement {
        if self.degree() == 1 {
            // T is a root of the degree-1 modulus x, i.e. zero
            self.zero()
        } else {
            self.from_coeffs(vec![0, 1])
        }
    }
}

/// Iterates all field elements in counter order.
pub struct ElementIter {
    field: Field,
    odometer: Vec<u64>,
    done: bool,
}

impl Iterator for ElementIter {
    type Item = FieldElement;
    fn next(&mut self) -> Option<FieldElement> {
        if self.done {
            return None;
        }
        let mut coeffs = self.odometer.clone();
        raw_trim(&mut coeffs);
        let item = FieldElement {
            field: self.field.clone(),
            coeffs,
        };
        // increment
        let p = self.field.p;
        let mut i = 0;
        loop {
            if i == self.odometer.len() {
                self.done = true;
                break;
            }
            self.odometer[i] += 1;
            if self.odometer[i] < p {
                break;
            }
            self.odometer[i] = 0;
            i += 1;
        }
        Some(item)
    }
}

// ---------------------------------------------------------------------------
// field elements
// ---------------------------------------------------------------------------

/// An element of a [`Field`], stored as a reduced coefficient vector with no
/// trailing zeros.
#[derive(Clone)]
pub struct FieldElement {
    field: Field,
    coeffs: Vec<u64>,
}

impl FieldElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// True when the element lies in the prime field.
    pub fn is_prime_field(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// The value as a prime-field constant; panics if not constant.
    pub fn as_u64_const(&self) -> u64 {
        assert!(self.is_prime_field(), "element is not in the prime field");
        self.coeffs.first().copied().unwrap_or(0)
    }

    /// Counter-order rank of the element, when it fits.
    pub fn index_u64(&self) -> Option<u64> {
        let mut acc: u64 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc.checked_mul(self.field.p)?.checked_add(c)?;
        }
        Some(acc)
    }

    fn same_field(&self, other: &FieldElement) {
        debug_assert!(
            Arc::ptr_eq(&self.field, &other.field) || *self.field == *other.field,
            "elements of different fields"
        );
    }

    pub fn add(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        FieldElement {
            field: self.field.clone(),
            coeffs: raw_add(&self.coeffs, &other.coeffs, self.field.p),
        }
    }

    pub fn sub(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        FieldElement {
            field: self.field.clone(),
            coeffs: raw_sub(&self.coeffs, &other.coeffs, self.field.p),
        }
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            coeffs: raw_sub(&[], &self.coeffs, self.field.p),
        }
    }

    pub fn mul(&self, other: &FieldElement) -> FieldElement {
        self.same_field(other);
        let prod = raw_mul(&self.coeffs, &other.coeffs, self.field.p);
        let r = raw_rem(&prod, &self.field.modulus, self.field.p);
        FieldElement {
            field: self.field.clone(),
            coeffs: r,
        }
    }

    pub fn square(&self) -> FieldElement {
        self.mul(self)
    }

    /// Multiplicative inverse; domain error on zero.
    pub fn inv(&self) -> Result<FieldElement> {
        if self.is_zero() {
            return Err(Error::domain("inverse of zero"));
        }
        let p = self.field.p;
        // extended Euclid in F_p[T] against the modulus
        let mut r0 = self.field.modulus.clone();
        let mut r1 = self.coeffs.clone();
        let mut s0: Vec<u64> = Vec::new();
        let mut s1: Vec<u64> = vec![1];
        while !r1.is_empty() {
            let (q, r) = raw_divrem(&r0, &r1, p);
            let qs1 = raw_mul(&q, &s1, p);
            let s2 = raw_sub(&s0, &qs1, p);
            r0 = core::mem::replace(&mut r1, r);
            s0 = core::mem::replace(&mut s1, s2);
        }
        // r0 = gcd (a nonzero constant since modulus is irreducible)
        debug_assert_eq!(r0.len(), 1);
        let c = invm(r0[0], p);
        let mut out: Vec<u64> = s0.iter().map(|&x| mulm(x, c, p)).collect();
        out = raw_rem(&out, &self.field.modulus, p);
        Ok(FieldElement {
            field: self.field.clone(),
            coeffs: out,
        })
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_u64(&self, mut e: u64) -> FieldElement {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.square();
            e >>= 1;
        }
        acc
    }

    pub fn pow(&self, e: &BigUint) -> FieldElement {
        let mut acc = self.field.one();
        let bits = e.bits();
        for i in (0..bits).rev() {
            acc = acc.square();
            if e.bit(i) {
                acc = acc.mul(self);
            }
        }
        acc
    }

    /// Multiplicative order; the element must be nonzero.
    pub fn mult_order(&self) -> Result<BigUint> {
        if self.is_zero() {
            return Err(Error::domain("order of zero"));
        }
        let group = self.field.order() - BigUint::one();
        let factors = crate::oracle::factor_biguint(&group);
        let mut ord = group.clone();
        for (prime, _) in &factors {
            while (&ord % prime).is_zero() {
                let cand = &ord / prime;
                if self.pow(&cand).is_one() {
                    ord = cand;
                } else {
                    break;
                }
            }
        }
        Ok(ord)
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.same_field(other);
        self.coeffs == other.coeffs
    }
}
impl Eq for FieldElement {}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FieldElement {
    /// Counter order within a field; fields themselves compare first.
    fn cmp(&self, other: &Self) -> Ordering {
        let f = (self.field.p, &self.field.modulus).cmp(&(other.field.p, &other.field.modulus));
        if f != Ordering::Equal {
            return f;
        }
        match self.coeffs.len().cmp(&other.coeffs.len()) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in (0..self.coeffs.len()).rev() {
            match self.coeffs[i].cmp(&other.coeffs[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl core::hash::Hash for FieldElement {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

fn fmt_element(coeffs: &[u64], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if coeffs.is_empty() {
        return write!(f, "0");
    }
    let mut first = true;
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0 {
            continue;
        }
        if !first {
            write!(f, "+")?;
        }
        first = false;
        match i {
            0 => write!(f, "{c}")?,
            1 if c == 1 => write!(f, "t")?,
            1 => write!(f, "{c}t")?,
            _ if c == 1 => write!(f, "t^{i}")?,
            _ => write!(f, "{c}t^{i}")?,
        }
    }
    Ok(())
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_element(&self.coeffs, f)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_element(&self.coeffs, f)
    }
}

/// Raw division with remainder over `F_p`, divisor need not be monic.
fn raw_divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    assert!(!b.is_empty(), "division by zero polynomial");
    let db = b.len() - 1;
    let inv_lead = invm(b[db], p);
    let mut r = a.to_vec();
    raw_trim(&mut r);
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut q = vec![0u64; r.len() - db];
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        let c = mulm(lead, inv_lead, p);
        q[shift] = c;
        if c != 0 {
            for i in 0..db {
                let t = mulm(c, b[i], p);
                r[shift + i] = subm(r[shift + i], t, p);
            }
        }
        r.pop();
        raw_trim(&mut r);
    }
    raw_trim(&mut q);
    (q, r)
}

// ---------------------------------------------------------------------------
// polynomials over an arbitrary field
// ---------------------------------------------------------------------------

/// Univariate polynomial with [`FieldElement`] coefficients, ascending degree,
/// no trailing zero coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    field: Field,
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(field: &Field, mut coeffs: Vec<FieldElement>) -> Polynomial {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial {
            field: field.clone(),
            coeffs,
        }
    }

    pub fn zero(field: &Field) -> Polynomial {
        Polynomial {
            field: field.clone(),
            coeffs: Vec::new(),
        }
    }

    pub fn one(field: &Field) -> Polynomial {
        Polynomial::constant(field.one())
    }

    pub fn constant(c: FieldElement) -> Polynomial {
        let field = c.field().clone();
        Polynomial::new(&field, vec![c])
    }

    pub fn x(field: &Field) -> Polynomial {
        Polynomial::new(field, vec![field.zero(), field.one()])
    }

    /// Build from prime-field constants (each reduced mod p).
    pub fn from_u64_coeffs(field: &Field, coeffs: &[u64]) -> Polynomial {
        let elems = coeffs.iter().map(|&c| field.from_u64(c)).collect();
        Polynomial::new(field, elems)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    /// Degree with the convention `deg 0 = 0` for constants; panics on zero.
    pub fn deg(&self) -> usize {
        self.degree().expect("degree of the zero polynomial")
    }

    pub fn leading_coeff(&self) -> FieldElement {
        self.coeffs
            .last()
            .cloned()
            .unwrap_or_else(|| self.field.zero())
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().map_or(false, |c| c.is_one())
    }

    pub fn monic(&self) -> Result<Polynomial> {
        if self.is_zero() {
            return Err(Error::domain("cannot normalize the zero polynomial"));
        }
        if self.is_monic() {
            return Ok(self.clone());
        }
        let inv = self.leading_coeff().inv()?;
        Ok(self.scale(&inv))
    }

    pub fn scale(&self, c: &FieldElement) -> Polynomial {
        Polynomial::new(
            &self.field,
            self.coeffs.iter().map(|a| a.mul(c)).collect(),
        )
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        Polynomial::new(&self.field, out)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).sub(&other.coeff(i)));
        }
        Polynomial::new(&self.field, out)
    }

    pub fn neg(&self) -> Polynomial {
        Polynomial::new(&self.field, self.coeffs.iter().map(|c| c.neg()).collect())
    }

    /// Raw prime-field coefficient image, when applicable.
    fn as_raw(&self) -> Option<Vec<u64>> {
        if !self.field.is_prime_field() {
            return None;
        }
        Some(
            self.coeffs
                .iter()
                .map(|c| c.coeffs().first().copied().unwrap_or(0))
                .collect(),
        )
    }

    fn from_raw(field: &Field, raw: Vec<u64>) -> Polynomial {
        Polynomial {
            field: field.clone(),
            coeffs: raw.into_iter().map(|c| field.from_u64(c)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero(&self.field);
        }
        // prime-field coefficients: work on packed u64 vectors
        if self.coeffs.len().min(other.coeffs.len()) >= 8 {
            if let (Some(a), Some(b)) = (self.as_raw(), other.as_raw()) {
                let out = raw_mul(&a, &b, self.field.p());
                return Polynomial::from_raw(&self.field, out);
            }
        }
        if self.coeffs.len().min(other.coeffs.len()) >= KARATSUBA_CUTOFF {
            return self.mul_karatsuba(other);
        }
        let mut out = vec![self.field.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        Polynomial::new(&self.field, out)
    }

    fn mul_karatsuba(&self, other: &Polynomial) -> Polynomial {
        let m = self.coeffs.len().max(other.coeffs.len()).div_ceil(2);
        let split = |p: &Polynomial| -> (Polynomial, Polynomial) {
            if p.coeffs.len() <= m {
                (p.clone(), Polynomial::zero(&self.field))
            } else {
                (
                    Polynomial::new(&self.field, p.coeffs[..m].to_vec()),
                    Polynomial::new(&self.field, p.coeffs[m..].to_vec()),
                )
            }
        };
        let (a0, a1) = split(self);
        let (b0, b1) = split(other);
        let z0 = a0.mul(&b0);
        let z2 = a1.mul(&b1);
        let z1 = a0.add(&a1).mul(&b0.add(&b1)).sub(&z0).sub(&z2);
        z0.add(&z1.shift(m)).add(&z2.shift(2 * m))
    }

    pub fn shift(&self, k: usize) -> Polynomial {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = vec![self.field.zero(); k];
        out.extend(self.coeffs.iter().cloned());
        Polynomial::new(&self.field, out)
    }

    pub fn divrem(&self, other: &Polynomial) -> Result<(Polynomial, Polynomial)> {
        if other.is_zero() {
            return Err(Error::domain("division by the zero polynomial"));
        }
        if self.coeffs.len() >= 16 {
            if let (Some(a), Some(b)) = (self.as_raw(), other.as_raw()) {
                let (q, r) = raw_divrem(&a, &b, self.field.p());
                return Ok((
                    Polynomial::from_raw(&self.field, q),
                    Polynomial::from_raw(&self.field, r),
                ));
            }
        }
        let db = other.deg();
        let inv_lead = other.leading_coeff().inv()?;
        let mut rem = self.coeffs.clone();
        while rem.last().map_or(false, |c| c.is_zero()) {
            rem.pop();
        }
        if rem.len() <= db {
            return Ok((Polynomial::zero(&self.field), Polynomial::new(&self.field, rem)));
        }
        let mut quot = vec![self.field.zero(); rem.len() - db];
        while rem.len() > db {
            let lead = rem.last().unwrap().clone();
            let shift = rem.len() - 1 - db;
            if !lead.is_zero() {
                let c = lead.mul(&inv_lead);
                quot[shift] = c.clone();
                for i in 0..db {
                    let t = c.mul(&other.coeffs[i]);
                    rem[shift + i] = rem[shift + i].sub(&t);
                }
            }
            rem.pop();
            while rem.last().map_or(false, |c| c.is_zero()) {
                rem.pop();
            }
        }
        Ok((
            Polynomial::new(&self.field, quot),
            Polynomial::new(&self.field, rem),
        ))
    }

    pub fn rem(&self, other: &Polynomial) -> Result<Polynomial> {
        Ok(self.divrem(other)?.1)
    }

    pub fn div_exact(&self, other: &Polynomial) -> Result<Polynomial> {
        let (q, r) = self.divrem(other)?;
        if !r.is_zero() {
            return Err(Error::domain("inexact polynomial division"));
        }
        Ok(q)
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Polynomial) -> Result<Polynomial> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            Ok(a)
        } else {
            a.monic()
        }
    }

    /// Extended gcd: returns (g, s, t) with `g = s*self + t*other`, g monic.
    pub fn xgcd(&self, other: &Polynomial) -> Result<(Polynomial, Polynomial, Polynomial)> {
        let mut r0 = self.clone();
        let mut r1 = other.clone();
        let mut s0 = Polynomial::one(&self.field);
        let mut s1 = Polynomial::zero(&self.field);
        let mut t0 = Polynomial::zero(&self.field);
        let mut t1 = Polynomial::one(&self.field);
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1)?;
            let s2 = s0.sub(&q.mul(&s1));
            let t2 = t0.sub(&q.mul(&t1));
            r0 = core::mem::replace(&mut r1, r);
            s0 = core::mem::replace(&mut s1, s2);
            t0 = core::mem::replace(&mut t1, t2);
        }
        if r0.is_zero() {
            return Ok((r0, s0, t0));
        }
        let c = r0.leading_coeff().inv()?;
        Ok((r0.scale(&c), s0.scale(&c), t0.scale(&c)))
    }

    /// Inverse of `self` modulo `m`; they must be coprime.
    pub fn inv_mod(&self, m: &Polynomial) -> Result<Polynomial> {
        let (g, s, _) = self.xgcd(m)?;
        if g.degree() != Some(0) {
            return Err(Error::domain("polynomial not invertible modulo m"));
        }
        s.rem(m)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero(&self.field);
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            let k = self.field.from_u64((i as u64) % self.field.p());
            out.push(c.mul(&k));
        }
        Polynomial::new(&self.field, out)
    }

    pub fn eval(&self, x: &FieldElement) -> FieldElement {
        let mut acc = x.field().zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Evaluate after mapping coefficients through `embed` (for arguments in
    /// a larger field).
    pub fn eval_embedded(&self, emb: &Embedding, x: &FieldElement) -> FieldElement {
        let mut acc = x.field().zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(&emb.apply(c));
        }
        acc
    }

    /// Map every coefficient through the q-power Frobenius.
    pub fn coeff_frobenius(&self, q: u64) -> Polynomial {
        Polynomial::new(
            &self.field,
            self.coeffs
                .iter()
                .map(|c| frobenius_power(c, q, 1))
                .collect(),
        )
    }

    pub fn pow_mod(&self, e: &BigUint, m: &Polynomial) -> Result<Polynomial> {
        let mut acc = Polynomial::one(&self.field);
        let base = self.rem(m)?;
        let bits = e.bits();
        for i in (0..bits).rev() {
            acc = acc.mul(&acc).rem(m)?;
            if e.bit(i) {
                acc = acc.mul(&base).rem(m)?;
            }
        }
        Ok(acc)
    }

    /// All roots in the coefficient field, ascending in element order.
    pub fn roots(&self) -> Result<Vec<FieldElement>> {
        let mut out = Vec::new();
        for (f, _) in poly_factor(self)? {
            if f.deg() == 1 {
                // monic x + c  =>  root -c
                out.push(f.coeff(0).neg());
            }
        }
        out.sort();
        Ok(out)
    }

    /// Deterministic total order: by degree, then coefficients from the top.
    fn cmp_key(&self, other: &Polynomial) -> Ordering {
        match self.coeffs.len().cmp(&other.coeffs.len()) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in (0..self.coeffs.len()).rev() {
            match self.coeffs[i].cmp(&other.coeffs[i]) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Polynomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Polynomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})x")?,
                _ => write!(f, "({c})x^{i}")?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// irreducibility and factoring
// ---------------------------------------------------------------------------

/// Rabin's test: `f` is irreducible over its coefficient field iff
/// `x^(Q^n) = x (mod f)` and `gcd(x^(Q^(n/r)) - x, f) = 1` for primes `r | n`.
pub fn poly_is_irreducible(f: &Polynomial) -> Result<bool> {
    let n = match f.degree() {
        None | Some(0) => {
            return Err(Error::domain("irreducibility needs degree >= 1"));
        }
        Some(n) => n,
    };
    if n == 1 {
        return Ok(true);
    }
    let f = f.monic()?;
    let field = f.field().clone();
    let q = field.order();
    let x = Polynomial::x(&field);

    // distinct prime divisors of n
    let mut primes = Vec::new();
    let mut m = n;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            primes.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        primes.push(m);
    }

    for r in primes {
        let e = q.pow((n / r) as u32);
        let xe = x.pow_mod(&e, &f)?;
        let g = xe.sub(&x).gcd(&f)?;
        if g.degree() != Some(0) {
            return Ok(false);
        }
    }
    let e = q.pow(n as u32);
    let xe = x.pow_mod(&e, &f)?;
    Ok(xe == x)
}

/// Full factorization into monic irreducibles with multiplicities, sorted in
/// the deterministic polynomial order. Las Vegas (internal randomness only
/// affects running time); uses a fixed internal seed so results are stable.
pub fn poly_factor(f: &Polynomial) -> Result<Vec<(Polynomial, usize)>> {
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x9d1c_37a7_1f2b_4d01);
    poly_factor_with(f, &mut rng)
}

pub fn poly_factor_with(
    f: &Polynomial,
    rng: &mut dyn Rng,
) -> Result<Vec<(Polynomial, usize)>> {
    if f.is_zero() {
        return Err(Error::domain("cannot factor the zero polynomial"));
    }
    if f.deg() == 0 {
        return Ok(Vec::new());
    }
    let f = f.monic()?;
    let mut out: Vec<(Polynomial, usize)> = Vec::new();
    for (part, mult) in squarefree_decomposition(&f)? {
        for (g, d) in distinct_degree_split(&part)? {
            let pieces = equal_degree_split(&g, d, rng)?;
            for piece in pieces {
                out.push((piece, mult));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Pairwise-coprime squarefree parts with multiplicities (char p aware).
fn squarefree_decomposition(f: &Polynomial) -> Result<Vec<(Polynomial, usize)>> {
    let field = f.field().clone();
    let p = field.p() as usize;
    let deriv = f.derivative();
    if deriv.is_zero() {
        // f = h(x^p); take p-th roots of the coefficients
        let h = pth_root_poly(f)?;
        let inner = squarefree_decomposition(&h)?;
        return Ok(inner.into_iter().map(|(g, m)| (g, m * p)).collect());
    }
    let mut out = Vec::new();
    let mut c = f.gcd(&deriv)?;
    let mut w = f.div_exact(&c)?;
    let mut i = 1usize;
    while w.deg() > 0 {
        let y = w.gcd(&c)?;
        let z = w.div_exact(&y)?;
        if z.deg() > 0 {
            out.push((z, i));
        }
        i += 1;
        w = y;
        c = c.div_exact(&w)?;
    }
    if c.deg() > 0 {
        let h = pth_root_poly(&c)?;
        for (g, m) in squarefree_decomposition(&h)? {
            out.push((g, m * p));
        }
    }
    Ok(out)
}

/// For `f = h(x^p)`, recover `h` by taking p-th roots of coefficients.
fn pth_root_poly(f: &Polynomial) -> Result<Polynomial> {
    let field = f.field().clone();
    let p = field.p();
    let k = field.degree();
    let mut coeffs = Vec::new();
    for (i, c) in f.coeffs().iter().enumerate() {
        if i % (p as usize) == 0 {
            // c^(p^(k-1)) is the p-th root in F_{p^k}
            coeffs.push(frobenius_power(c, p, (k - 1) as u64));
        } else if !c.is_zero() {
            return Err(Error::domain("polynomial is not a p-th power"));
        }
    }
    Ok(Polynomial::new(&field, coeffs))
}

/// Distinct-degree split of a squarefree monic polynomial:
/// returns (product of degree-d factors, d) pairs.
fn distinct_degree_split(f: &Polynomial) -> Result<Vec<(Polynomial, usize)>> {
    let field = f.field().clone();
    let q = field.order();
    let x = Polynomial::x(&field);
    let mut out = Vec::new();
    let mut rest = f.clone();
    let mut h = x.clone();
    let mut d = 0usize;
    while rest.deg() >= 2 * (d + 1) {
        d += 1;
        h = h.pow_mod(&q, &rest)?;
        let g = h.sub(&x).gcd(&rest)?;
        if g.deg() > 0 {
            out.push((g.clone(), d));
            rest = rest.div_exact(&g)?;
            h = h.rem(&rest)?;
        }
    }
    if rest.deg() > 0 {
        let d = rest.deg();
        out.push((rest, d));
    }
    Ok(out)
}

/// Cantor–Zassenhaus equal-degree splitting (odd q always holds here).
fn equal_degree_split(
    g: &Polynomial,
    d: usize,
    rng: &mut dyn Rng,
) -> Result<Vec<Polynomial>> {
    let field = g.field().clone();
    if g.deg() == d {
        return Ok(vec![g.clone()]);
    }
    let e = (field.order().pow(d as u32) - BigUint::one()) >> 1;
    loop {
        let mut coeffs = Vec::with_capacity(g.deg());
        for _ in 0..g.deg() {
            coeffs.push(field.random_element(rng));
        }
        let r = Polynomial::new(&field, coeffs);
        if r.is_zero() {
            continue;
        }
        let mut split = r.gcd(g)?;
        if split.degree() == Some(0) || split.deg() == g.deg() {
            let s = r.pow_mod(&e, g)?;
            let s1 = s.sub(&Polynomial::one(&field));
            split = s1.gcd(g)?;
        }
        let dg = split.degree();
        if dg == Some(0) || dg == g.degree() {
            continue;
        }
        let other = g.div_exact(&split)?;
        let mut out = equal_degree_split(&split, d, rng)?;
        out.extend(equal_degree_split(&other, d, rng)?);
        return Ok(out);
    }
}

/// First monic irreducible of degree `d` in counter order over `field`.
pub fn first_irreducible(field: &Field, d: usize) -> Result<Polynomial> {
    if d == 0 {
        return Err(Error::domain("degree must be positive"));
    }
    let x = Polynomial::x(field);
    if d == 1 {
        return Ok(x);
    }
    let order = field
        .order_u64()
        .ok_or_else(|| Error::resource("field too large for modulus enumeration"))?;
    // lower coefficients run through counter order; an irreducible shows up
    // within a few multiples of d in practice
    let mut counter: u128 = 0;
    let limit: u128 = (order as u128).saturating_pow(d as u32);
    while counter < limit {
        let mut c = counter;
        let mut coeffs = Vec::with_capacity(d + 1);
        for _ in 0..d {
            coeffs.push(field.element_from_index((c % order as u128) as u64));
            c /= order as u128;
        }
        coeffs.push(field.one());
        let cand = Polynomial::new(field, coeffs);
        if poly_is_irreducible(&cand)? {
            return Ok(cand);
        }
        counter += 1;
    }
    Err(Error::not_found("no irreducible of requested degree"))
}

/// Square root of `d` in the field `F[x]/(a)` (`a` monic irreducible), by
/// Cipolla's method in the quadratic cheat extension. Returns `None` when `d`
/// is a non-square.
pub fn sqrt_mod(d: &Polynomial, a: &Polynomial) -> Result<Option<Polynomial>> {
    let field = a.field().clone();
    let d = d.rem(a)?;
    if d.is_zero() {
        return Ok(Some(Polynomial::zero(&field)));
    }
    let order = field.order().pow(a.deg() as u32);
    let half: BigUint = (&order - BigUint::one()) >> 1;
    let legendre = d.pow_mod(&half, a)?;
    if legendre != Polynomial::one(&field) {
        // for irreducible a the only other value is -1
        return Ok(None);
    }
    // find r with r^2 - d a non-square, deterministically through counter order
    let mut trial = 0u64;
    let (r, w) = loop {
        let r = poly_from_counter(&field, a.deg(), trial);
        trial += 1;
        let w = r.mul(&r).sub(&d).rem(a)?;
        if w.is_zero() {
            continue;
        }
        let l = w.pow_mod(&half, a)?;
        if l != Polynomial::one(&field) {
            break (r, w);
        }
        if trial > 10_000 {
            return Err(Error::search("no Cipolla witness found"));
        }
    };
    // compute (r + Z)^((#L+1)/2) in L[Z]/(Z^2 - w), components mod a
    let e: BigUint = (&order + BigUint::one()) >> 1;
    let mut acc = (Polynomial::one(&field), Polynomial::zero(&field));
    let base = (r, Polynomial::one(&field));
    let mulp = |x: &(Polynomial, Polynomial),
                y: &(Polynomial, Polynomial)|
     -> Result<(Polynomial, Polynomial)> {
        let c0 = x.0.mul(&y.0).add(&x.1.mul(&y.1).mul(&w)).rem(a)?;
        let c1 = x.0.mul(&y.1).add(&x.1.mul(&y.0)).rem(a)?;
        Ok((c0, c1))
    };
    for i in (0..e.bits()).rev() {
        acc = mulp(&acc, &acc)?;
        if e.bit(i) {
            acc = mulp(&acc, &base)?;
        }
    }
    debug_assert!(acc.1.is_zero(), "Cipolla result not in the base");
    let root = acc.0;
    debug_assert_eq!(root.mul(&root).rem(a)?, d);
    Ok(Some(root))
}

fn poly_from_counter(field: &Field, max_deg: usize, mut counter: u64) -> Polynomial {
    let order = field.order_u64().unwrap_or(u64::MAX);
    let mut coeffs = Vec::new();
    for _ in 0..max_deg {
        coeffs.push(field.element_from_index(counter % order));
        counter /= order;
        if counter == 0 {
            break;
        }
    }
    Polynomial::new(field, coeffs)
}

// ---------------------------------------------------------------------------
// extensions and embeddings
// ---------------------------------------------------------------------------

/// A relative extension: the new single-step field plus the embedding of the
/// base into it.
#[derive(Clone, Debug)]
pub struct ExtensionOf {
    pub field: Field,
    pub embed_base: Embedding,
}

/// `base ⊂ F_{(#base)^d}`, with the canonical modulus for the composite
/// degree over the prime field.
pub fn build_extension(base: &Field, d: usize) -> Result<ExtensionOf> {
    if d == 0 {
        return Err(Error::domain("extension degree must be positive"));
    }
    let total = base.degree() * d;
    let field = FieldDesc::gf(base.p(), total)?;
    let embed_base = Embedding::new(base, &field)?;
    Ok(ExtensionOf { field, embed_base })
}

/// A fixed ring embedding between two fields with the same characteristic.
/// The generator of the source maps to the first root (element order) of the
/// source modulus in the target, so embeddings are reproducible.
#[derive(Clone)]
pub struct Embedding {
    src: Field,
    dst: Field,
    /// powers 1, r, r^2, .., r^(deg_src - 1) of the generator image
    gen_pows: Vec<FieldElement>,
    /// row-reduced solver for preimages (built lazily on demand)
    preimage_rows: Option<Arc<PreimageSolver>>,
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Embedding(F_{}^{} -> F_{}^{})",
            self.src.p(),
            self.src.degree(),
            self.dst.p(),
            self.dst.degree()
        )
    }
}

impl Embedding {
    pub fn new(src: &Field, dst: &Field) -> Result<Embedding> {
        if src.p() != dst.p() {
            return Err(Error::domain("embedding requires equal characteristic"));
        }
        if dst.degree() % src.degree() != 0 {
            return Err(Error::domain(
                "source degree does not divide target degree",
            ));
        }
        let root = if src.degree() == 1 {
            // generator of the prime field presentation is 0
            dst.zero()
        } else if **src == **dst {
            dst.gen()
        } else {
            let modulus = Polynomial::from_u64_coeffs(dst, src.modulus());
            let roots = modulus.roots()?;
            roots
                .into_iter()
                .next()
                .ok_or_else(|| Error::domain("source modulus has no root in target"))?
        };
        let mut gen_pows = Vec::with_capacity(src.degree());
        let mut acc = dst.one();
        for _ in 0..src.degree() {
            gen_pows.push(acc.clone());
            acc = acc.mul(&root);
        }
        Ok(Embedding {
            src: src.clone(),
            dst: dst.clone(),
            gen_pows,
            preimage_rows: None,
        })
    }

    /// Identity embedding of a field into itself.
    pub fn identity(field: &Field) -> Embedding {
        Embedding {
            src: field.clone(),
            dst: field.clone(),
            gen_pows: {
                let mut v = vec![field.one()];
                let g = field.gen();
                let mut acc = g.clone();
                for _ in 1..field.degree() {
                    v.push(acc.clone());
                    acc = acc.mul(&g);
                }
                v
            },
            preimage_rows: None,
        }
    }

    pub fn src(&self) -> &Field {
        &self.src
    }

    pub fn dst(&self) -> &Field {
        &self.dst
    }

    pub fn apply(&self, e: &FieldElement) -> FieldElement {
        debug_assert!(**e.field() == *self.src);
        let mut acc = self.dst.zero();
        for (i, &c) in e.coeffs().iter().enumerate() {
            if c == 0 {
                continue;
            }
            let term = self.gen_pows[i].scale_u64(c);
            acc = acc.add(&term);
        }
        acc
    }

    pub fn apply_poly(&self, f: &Polynomial) -> Polynomial {
        Polynomial::new(
            &self.dst,
            f.coeffs().iter().map(|c| self.apply(c)).collect(),
        )
    }

    /// Build the preimage solver once; returns a new embedding carrying it.
    pub fn with_preimages(mut self) -> Result<Embedding> {
        if self.preimage_rows.is_none() {
            self.preimage_rows = Some(Arc::new(PreimageSolver::build(&self)?));
        }
        Ok(self)
    }

    /// Does `e` lie in the image subfield? Cheap Frobenius-fix test.
    pub fn contains(&self, e: &FieldElement) -> bool {
        let sub_order_exp = self.src.degree() as u64;
        let fixed = frobenius_power(e, self.src.p(), sub_order_exp);
        fixed == *e
    }

    /// Preimage as an element of the source field, if it exists.
    pub fn preimage(&self, e: &FieldElement) -> Result<Option<FieldElement>> {
        let solver = self
            .preimage_rows
            .as_ref()
            .ok_or_else(|| Error::domain("embedding built without preimage solver"))?;
        Ok(solver.solve(&self.src, e))
    }
}

impl FieldElement {
    fn scale_u64(&self, c: u64) -> FieldElement {
        let p = self.field.p();
        let c = c % p;
        FieldElement {
            field: self.field.clone(),
            coeffs: {
                let mut v: Vec<u64> = self.coeffs.iter().map(|&a| mulm(a, c, p)).collect();
                raw_trim(&mut v);
                v
            },
        }
    }
}

/// Linear system for pulling elements back along an embedding. Holds the
/// basis-image matrix; elimination runs per query (preimages are rare).
struct PreimageSolver {
    p: u64,
    dst_deg: usize,
    src_deg: usize,
    /// dst_deg rows x src_deg cols: column j is the image of gen^j
    basis: Vec<Vec<u64>>,
}

impl fmt::Debug for PreimageSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PreimageSolver({}x{})", self.dst_deg, self.src_deg)
    }
}

impl PreimageSolver {
    fn build(emb: &Embedding) -> Result<PreimageSolver> {
        let src_deg = emb.src.degree();
        let dst_deg = emb.dst.degree();
        let mut basis = vec![vec![0u64; src_deg]; dst_deg];
        for (c, pow) in emb.gen_pows.iter().enumerate() {
            for r in 0..dst_deg {
                basis[r][c] = pow.coeffs().get(r).copied().unwrap_or(0);
            }
        }
        Ok(PreimageSolver {
            p: emb.src.p(),
            dst_deg,
            src_deg,
            basis,
        })
    }

    fn solve(&self, src: &Field, e: &FieldElement) -> Option<FieldElement> {
        let p = self.p;
        let mut aug: Vec<Vec<u64>> = Vec::with_capacity(self.dst_deg);
        for r in 0..self.dst_deg {
            let mut row = self.basis[r].clone();
            row.push(e.coeffs().get(r).copied().unwrap_or(0));
            aug.push(row);
        }
        let mut rank = 0usize;
        let mut where_col = vec![usize::MAX; self.src_deg];
        for col in 0..self.src_deg {
            let Some(r) = (rank..self.dst_deg).find(|&r| aug[r][col] != 0) else {
                continue;
            };
            aug.swap(rank, r);
            let inv = invm(aug[rank][col], p);
            for v in aug[rank].iter_mut() {
                *v = mulm(*v, inv, p);
            }
            let prow = aug[rank].clone();
            for (rr, row) in aug.iter_mut().enumerate() {
                if rr != rank && row[col] != 0 {
                    let c = row[col];
                    for (v, pv) in row.iter_mut().zip(prow.iter()) {
                        *v = subm(*v, mulm(c, *pv, p), p);
                    }
                }
            }
            where_col[col] = rank;
            rank += 1;
        }
        for row in aug.iter().skip(rank) {
            if row[self.src_deg] != 0 {
                return None;
            }
        }
        let mut coeffs = vec![0u64; self.src_deg];
        for col in 0..self.src_deg {
            if where_col[col] != usize::MAX {
                coeffs[col] = aug[where_col[col]][self.src_deg];
            }
        }
        Some(src.from_coeffs(coeffs))
    }
}

// ---------------------------------------------------------------------------
// spec operations
// ---------------------------------------------------------------------------

/// `e^(q^i)` where `q` is the cardinality of a subfield of `e`'s field.
pub fn frobenius_power(e: &FieldElement, q: u64, i: u64) -> FieldElement {
    let mut acc = e.clone();
    for _ in 0..i {
        acc = acc.pow(&BigUint::from(q));
    }
    acc
}

/// Convenience wrapper: embed `e` into `target` with a freshly computed
/// (but deterministic) embedding.
pub fn embed(e: &FieldElement, target: &Field) -> Result<FieldElement> {
    let emb = Embedding::new(e.field(), target)?;
    Ok(emb.apply(e))
}

/// Monic irreducible lift of a residue: finds irreducible `f` of degree
/// `2^m` with `f = r (mod mu)`, as `f = r + mu*s` for random `s`.
pub fn random_irreducible_lift(
    r: &Polynomial,
    mu: &Polynomial,
    m: u32,
    rng: &mut dyn Rng,
    max_trials: Option<u64>,
) -> Result<Polynomial> {
    let field = mu.field().clone();
    let n = mu.deg();
    let target = 1usize << m;
    if n > target {
        return Err(Error::domain("2^m is smaller than deg(mu)"));
    }
    if r.degree().map_or(false, |d| d >= n) {
        return Err(Error::domain("residue is not reduced mod mu"));
    }
    let budget = max_trials.unwrap_or(1u64 << (m + 6));
    let sdeg = target - n;
    for _ in 0..budget {
        // random s of degree exactly 2^m - n, leading coefficient forced so
        // that f = r + mu*s is monic (mu monic => lc(s) = 1)
        let mut coeffs = Vec::with_capacity(sdeg + 1);
        for _ in 0..sdeg {
            coeffs.push(field.random_element(rng));
        }
        coeffs.push(field.one());
        let s = Polynomial::new(&field, coeffs);
        let f = r.add(&mu.mul(&s));
        debug_assert!(f.is_monic() && f.deg() == target);
        if poly_is_irreducible(&f)? {
            debug_assert_eq!(f.rem(mu).unwrap(), *r);
            return Ok(f);
        }
    }
    Err(Error::search(String::from(
        "no irreducible lift found within the trial budget",
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f3() -> Field {
        FieldDesc::prime(3).unwrap()
    }

    fn f9() -> Field {
        FieldDesc::gf(3, 2).unwrap()
    }

    #[test]
    fn modulus_of_canonical_extensions() {
        assert_eq!(f3().modulus(), &[0, 1]);
        // exhaustive counter-order scan over monic quadratics
        let f3 = f3();
        let mut expected = None;
        'outer: for c1c0 in 0u64..9 {
            let c0 = c1c0 % 3;
            let c1 = c1c0 / 3;
            let cand = Polynomial::from_u64_coeffs(&f3, &[c0, c1, 1]);
            // trial check by scanning for roots
            for r in 0..3u64 {
                if cand.eval(&f3.from_u64(r)).is_zero() {
                    continue 'outer;
                }
            }
            expected = Some([c0, c1, 1]);
            break;
        }
        assert_eq!(f9().modulus(), expected.unwrap());
        assert_eq!(f9().modulus(), &[1, 0, 1]); // x^2 + 1

        let f81 = FieldDesc::gf(3, 4).unwrap();
        assert_eq!(f81.order_u64(), Some(81));
    }

    #[test]
    fn field_axioms_random_samples() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for field in [f3(), f9(), FieldDesc::gf(3, 4).unwrap(), FieldDesc::gf(5, 3).unwrap()] {
            for _ in 0..200 {
                let a = field.random_element(&mut rng);
                let b = field.random_element(&mut rng);
                let c = field.random_element(&mut rng);
                assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
                assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                assert_eq!(a.add(&b), b.add(&a));
                if !a.is_zero() {
                    assert!(a.mul(&a.inv().unwrap()).is_one());
                }
            }
        }
    }

    #[test]
    fn frobenius_fixes_exactly_the_subfield() {
        for k in 2usize..=6 {
            let field = FieldDesc::gf(3, k).unwrap();
            for d in 1..=k {
                if k % d != 0 {
                    continue;
                }
                let q = 3u64.pow(d as u32);
                let fixed = field
                    .elements()
                    .filter(|e| frobenius_power(e, q, 1) == *e)
                    .count() as u64;
                assert_eq!(fixed, q, "k={k} d={d}");
            }
        }
    }

    #[test]
    fn frobenius_power_basics() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let field = FieldDesc::gf(3, 4).unwrap();
        let e = field.random_element(&mut rng);
        assert_eq!(frobenius_power(&e, 9, 0), e);
        assert_eq!(frobenius_power(&e, 9, 2), e); // full orbit closes (q = 9, n = 2)
        let sub = f3().from_u64(2);
        let img = embed(&sub, &field).unwrap();
        assert_eq!(frobenius_power(&img, 3, 1), img);
        // automorphism on sums and products
        let a = field.random_element(&mut rng);
        let b = field.random_element(&mut rng);
        assert_eq!(
            frobenius_power(&a.add(&b), 3, 1),
            frobenius_power(&a, 3, 1).add(&frobenius_power(&b, 3, 1))
        );
    }

    #[test]
    fn irreducibility_small_cases() {
        let f3 = f3();
        let x2p1 = Polynomial::from_u64_coeffs(&f3, &[1, 0, 1]);
        let x2m1 = Polynomial::from_u64_coeffs(&f3, &[2, 0, 1]);
        assert!(poly_is_irreducible(&x2p1).unwrap());
        assert!(!poly_is_irreducible(&x2m1).unwrap());
        let c = Polynomial::from_u64_coeffs(&f3, &[2]);
        assert!(poly_is_irreducible(&c).is_err());
    }

    #[test]
    fn irreducibility_agrees_with_factoring() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let f9 = f9();
        for _ in 0..20 {
            let mut coeffs: Vec<FieldElement> =
                (0..8).map(|_| f9.random_element(&mut rng)).collect();
            coeffs.push(f9.one());
            let f = Polynomial::new(&f9, coeffs);
            let is_irr = poly_is_irreducible(&f).unwrap();
            let factors = poly_factor(&f).unwrap();
            let single = factors.len() == 1 && factors[0].1 == 1 && factors[0].0.deg() == 8;
            assert_eq!(is_irr, single);
        }
    }

    #[test]
    fn factor_small_cases() {
        let f3 = f3();
        let x2m1 = Polynomial::from_u64_coeffs(&f3, &[2, 0, 1]);
        let fs = poly_factor(&x2m1).unwrap();
        assert_eq!(fs.len(), 2);
        assert_eq!(fs[0].0, Polynomial::from_u64_coeffs(&f3, &[1, 1])); // x + 1
        assert_eq!(fs[1].0, Polynomial::from_u64_coeffs(&f3, &[2, 1])); // x + 2
        assert!(fs.iter().all(|(_, m)| *m == 1));

        let xp1 = Polynomial::from_u64_coeffs(&f3, &[1, 1]);
        let cube = xp1.mul(&xp1).mul(&xp1);
        let fs = poly_factor(&cube).unwrap();
        assert_eq!(fs, vec![(xp1, 3)]);
    }

    #[test]
    fn factor_recombines_random_degree_12() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let f3 = f3();
        for _ in 0..20 {
            let mut coeffs: Vec<FieldElement> =
                (0..12).map(|_| f3.random_element(&mut rng)).collect();
            coeffs.push(f3.random_element(&mut rng));
            let f = Polynomial::new(&f3, coeffs);
            if f.is_zero() || f.deg() == 0 {
                continue;
            }
            let fs = poly_factor(&f).unwrap();
            let mut acc = Polynomial::constant(f.leading_coeff());
            for (g, m) in &fs {
                assert!(poly_is_irreducible(g).unwrap());
                for _ in 0..*m {
                    acc = acc.mul(g);
                }
            }
            assert_eq!(acc, f);
        }
    }

    #[test]
    fn build_extension_cases() {
        let ext = build_extension(&f3(), 1).unwrap();
        assert_eq!(ext.field.modulus(), &[0, 1]);
        let ext = build_extension(&f3(), 2).unwrap();
        assert_eq!(ext.field.modulus(), &[1, 0, 1]);
        let ext = build_extension(&f3(), 4).unwrap();
        assert_eq!(ext.field.order_u64(), Some(81));
        // relative extension of F_9
        let ext = build_extension(&f9(), 2).unwrap();
        assert_eq!(ext.field.order_u64(), Some(81));
        // embedding is a ring hom
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = f9().random_element(&mut rng);
            let b = f9().random_element(&mut rng);
            assert_eq!(
                ext.embed_base.apply(&a.mul(&b)),
                ext.embed_base.apply(&a).mul(&ext.embed_base.apply(&b))
            );
            assert_eq!(
                ext.embed_base.apply(&a.add(&b)),
                ext.embed_base.apply(&a).add(&ext.embed_base.apply(&b))
            );
        }
    }

    #[test]
    fn embed_generator_order() {
        // a generator of F_9^x has order 8; its image in F_81 keeps order 8
        let f9 = f9();
        let f81 = FieldDesc::gf(3, 4).unwrap();
        let gen = f9
            .elements()
            .find(|e| {
                !e.is_zero() && {
                    // exhaustive order check
                    let mut pow = e.clone();
                    let mut ord = 1;
                    while !pow.is_one() {
                        pow = pow.mul(e);
                        ord += 1;
                    }
                    ord == 8
                }
            })
            .unwrap();
        let img = embed(&gen, &f81).unwrap();
        let mut pow = img.clone();
        let mut ord = 1;
        while !pow.is_one() {
            pow = pow.mul(&img);
            ord += 1;
            assert!(ord <= 80);
        }
        assert_eq!(ord, 8);
    }

    #[test]
    fn embedding_preimage_roundtrip() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let f9 = f9();
        let f81 = FieldDesc::gf(3, 4).unwrap();
        let emb = Embedding::new(&f9, &f81).unwrap().with_preimages().unwrap();
        for _ in 0..50 {
            let a = f9.random_element(&mut rng);
            let img = emb.apply(&a);
            assert!(emb.contains(&img));
            assert_eq!(emb.preimage(&img).unwrap(), Some(a));
        }
        // elements outside the subfield have no preimage
        let outside = f81
            .elements()
            .find(|e| !emb.contains(e))
            .unwrap();
        assert_eq!(emb.preimage(&outside).unwrap(), None);
    }

    #[test]
    fn lift_zero_residue_fails() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let f3 = f3();
        let mu = Polynomial::from_u64_coeffs(&f3, &[1, 0, 1]);
        let r = Polynomial::zero(&f3);
        // f = mu*s is always divisible by mu, never irreducible at degree 4
        assert!(matches!(
            random_irreducible_lift(&r, &mu, 2, &mut rng, Some(200)),
            Err(Error::SearchFailure(_))
        ));
    }

    #[test]
    fn lift_matches_exhaustive_scan() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let f3 = f3();
        let mu = Polynomial::from_u64_coeffs(&f3, &[1, 0, 1]);
        let r = Polynomial::x(&f3);
        // oracle: all s of degree <= 2 with monic f = r + mu*s of degree 4
        let mut good = Vec::new();
        for idx in 0..27u64 {
            let coeffs = [idx % 3, (idx / 3) % 3, (idx / 9) % 3];
            let s = Polynomial::from_u64_coeffs(&f3, &coeffs);
            let f = r.add(&mu.mul(&s));
            if f.degree() == Some(4)
                && f.is_monic()
                && poly_is_irreducible(&f).unwrap()
            {
                assert_eq!(f.rem(&mu).unwrap(), r);
                good.push(f);
            }
        }
        assert!(!good.is_empty());
        for _ in 0..10 {
            let f = random_irreducible_lift(&r, &mu, 2, &mut rng, None).unwrap();
            assert!(good.contains(&f));
            assert_eq!(f.rem(&mu).unwrap(), r);
            assert!(f.is_monic());
            assert_eq!(f.deg(), 4);
        }
    }

    #[test]
    fn element_order_is_counter_order() {
        let f9 = f9();
        let all: Vec<FieldElement> = f9.elements().collect();
        assert_eq!(all.len(), 9);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(all[0].is_zero());
        assert!(all[1].is_one());
    }

    #[test]
    fn mult_order_in_f81() {
        let f81 = FieldDesc::gf(3, 4).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = f81.random_element(&mut rng);
            if a.is_zero() {
                continue;
            }
            let ord = a.mult_order().unwrap();
            assert!(a.pow(&ord).is_one());
            // exhaustive check of minimality
            let mut pow = a.clone();
            let mut k = BigUint::one();
            while !pow.is_one() {
                pow = pow.mul(&a);
                k += BigUint::one();
            }
            assert_eq!(k, ord);
        }
    }
}
