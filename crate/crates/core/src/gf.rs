//! Exact arithmetic in GF(p^e) for the small fields the code constructions
//! run over (q <= 256), including primitive-element discovery.
//!
//! Elements are kept in a canonical dense representation: the residue itself
//! for prime fields, and the coefficient vector of the reduced polynomial for
//! extension fields, encoded as the index `c_0 + c_1 p + ... + c_{e-1} p^{e-1}`.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u16),
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("extension degree must be >= 1")]
    BadDegree,
    #[error("field order {0} exceeds the supported maximum of 256")]
    OrderTooLarge(u32),
    #[error("modulus must be a monic polynomial of degree {expected} with coefficients < p")]
    BadModulus { expected: usize },
    #[error("modulus is reducible over GF({p})")]
    ReducibleModulus { p: u16 },
    #[error("element index {idx} out of range for field of order {q}")]
    ElementOutOfRange { idx: u32, q: u16 },
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("negative power of zero")]
    ZeroToNegativePower,
}

/// Description of a finite field GF(p^e), q = p^e.
///
/// For e = 1 the modulus is the fixed placeholder polynomial `x` and plays no
/// role in arithmetic. Two specs are equal iff they have the same p, e and
/// modulus, so elements of distinct-but-isomorphic constructions do not mix.
#[derive(Debug, Clone)]
pub struct FieldSpec {
    p: u16,
    e: usize,
    /// Monic modulus, little-endian coefficients, length e + 1.
    modulus: Vec<u16>,
    q: u16,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e == 1 {
            write!(f, "GF({})", self.p)
        } else {
            write!(f, "GF({}^{})", self.p, self.e)
        }
    }
}

fn is_prime(n: u16) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n as u32 {
        if (n as u32).is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Decompose q into (p, e) with p prime, or fail.
pub fn factor_prime_power(q: u32) -> Result<(u16, usize), FieldError> {
    if q < 2 {
        return Err(FieldError::NotPrimePower(q));
    }
    let mut p = 2u32;
    while p * p <= q {
        if q.is_multiple_of(p) {
            let mut rest = q;
            let mut e = 0usize;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            if rest != 1 {
                return Err(FieldError::NotPrimePower(q));
            }
            return Ok((p as u16, e));
        }
        p += 1;
    }
    // q itself is prime
    Ok((q as u16, 1))
}

// ---- polynomial helpers over GF(p), little-endian coefficient slices ----

fn poly_deg(a: &[u16]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

fn poly_mod_mul(a: &[u16], b: &[u16], p: u16) -> Vec<u16> {
    let mut out = vec![0u16; a.len() + b.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u32 + ai as u32 * bj as u32) % p as u32) as u16;
        }
    }
    out
}

/// Remainder of a modulo the monic polynomial m, over GF(p).
fn poly_rem(a: &[u16], m: &[u16], p: u16) -> Vec<u16> {
    let md = poly_deg(m).expect("modulus must be nonzero");
    let mut r: Vec<u16> = a.to_vec();
    while let Some(rd) = poly_deg(&r) {
        if rd < md {
            break;
        }
        // m is monic, so the elimination factor is just the leading coefficient of r
        let factor = r[rd];
        let shift = rd - md;
        for (j, &mj) in m.iter().enumerate().take(md + 1) {
            let idx = j + shift;
            let sub = (factor as u32 * mj as u32) % p as u32;
            r[idx] = ((r[idx] as u32 + p as u32 - sub % p as u32) % p as u32) as u16;
        }
    }
    r.truncate(md);
    r.resize(md, 0);
    r
}

/// Exhaustive trial division by every monic polynomial of degree 1..=deg/2.
fn poly_is_irreducible(m: &[u16], p: u16) -> bool {
    let deg = match poly_deg(m) {
        Some(d) if d >= 1 => d,
        _ => return false,
    };
    if deg == 1 {
        return true;
    }
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for n in 0..count {
            // candidate divisor: x^d + (digits of n)
            let mut cand = vec![0u16; d + 1];
            let mut rest = n;
            for c in cand.iter_mut().take(d) {
                *c = (rest % p as u64) as u16;
                rest /= p as u64;
            }
            cand[d] = 1;
            let rem = poly_rem(m, &cand, p);
            if poly_deg(&rem).is_none() {
                return false;
            }
        }
    }
    true
}

/// The canonical modulus for GF(p^e): the first monic irreducible polynomial
/// of degree e in ascending order of its non-leading coefficient index.
/// Reproduces x^2+x+1 for GF(4), x^3+x+1 for GF(8), x^2+1 for GF(9)
/// and x^4+x+1 for GF(16).
fn canonical_modulus(p: u16, e: usize) -> Vec<u16> {
    let count = (p as u64).pow(e as u32);
    for n in 0..count {
        let mut cand = vec![0u16; e + 1];
        let mut rest = n;
        for c in cand.iter_mut().take(e) {
            *c = (rest % p as u64) as u16;
            rest /= p as u64;
        }
        cand[e] = 1;
        if poly_is_irreducible(&cand, p) {
            return cand;
        }
    }
    unreachable!("an irreducible polynomial of every degree exists over GF(p)")
}

impl FieldSpec {
    /// The prime field GF(p).
    pub fn prime(p: u16) -> Result<Arc<Self>, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Arc::new(FieldSpec {
            p,
            e: 1,
            modulus: vec![0, 1],
            q: p,
        }))
    }

    /// GF(p^e) with the canonical modulus for that (p, e).
    pub fn extension(p: u16, e: usize) -> Result<Arc<Self>, FieldError> {
        if e == 0 {
            return Err(FieldError::BadDegree);
        }
        if e == 1 {
            return Self::prime(p);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let q = (p as u32).checked_pow(e as u32).unwrap_or(u32::MAX);
        if q > 256 {
            return Err(FieldError::OrderTooLarge(q));
        }
        Ok(Arc::new(FieldSpec {
            p,
            e,
            modulus: canonical_modulus(p, e),
            q: q as u16,
        }))
    }

    /// GF(p^e) with an explicit modulus (little-endian, monic, degree e).
    pub fn with_modulus(p: u16, e: usize, modulus: &[u16]) -> Result<Arc<Self>, FieldError> {
        if e == 0 {
            return Err(FieldError::BadDegree);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        let q = (p as u32).checked_pow(e as u32).unwrap_or(u32::MAX);
        if q > 256 {
            return Err(FieldError::OrderTooLarge(q));
        }
        if modulus.len() != e + 1 || modulus[e] != 1 || modulus.iter().any(|&c| c >= p) {
            return Err(FieldError::BadModulus { expected: e });
        }
        if e > 1 && !poly_is_irreducible(modulus, p) {
            return Err(FieldError::ReducibleModulus { p });
        }
        Ok(Arc::new(FieldSpec {
            p,
            e,
            modulus: modulus.to_vec(),
            q: q as u16,
        }))
    }

    /// The field of a given order, with the canonical modulus.
    pub fn of_order(q: u32) -> Result<Arc<Self>, FieldError> {
        if q > 256 {
            return Err(FieldError::OrderTooLarge(q));
        }
        let (p, e) = factor_prime_power(q)?;
        Self::extension(p, e)
    }

    pub fn characteristic(&self) -> u16 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.e
    }

    pub fn order(&self) -> u16 {
        self.q
    }

    pub fn modulus(&self) -> &[u16] {
        &self.modulus
    }

    pub fn has_odd_characteristic(&self) -> bool {
        self.p != 2
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        FieldElement {
            field: Arc::clone(self),
            val: 0,
        }
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        FieldElement {
            field: Arc::clone(self),
            val: 1,
        }
    }

    /// The element with the given canonical index.
    pub fn element(self: &Arc<Self>, idx: u32) -> Result<FieldElement, FieldError> {
        if idx >= self.q as u32 {
            return Err(FieldError::ElementOutOfRange { idx, q: self.q });
        }
        Ok(FieldElement {
            field: Arc::clone(self),
            val: idx as u16,
        })
    }

    /// The element with the given coefficient vector (little-endian, length e).
    pub fn element_from_coeffs(
        self: &Arc<Self>,
        coeffs: &[u16],
    ) -> Result<FieldElement, FieldError> {
        if coeffs.len() != self.e || coeffs.iter().any(|&c| c >= self.p) {
            return Err(FieldError::ElementOutOfRange {
                idx: u32::MAX,
                q: self.q,
            });
        }
        let mut val = 0u32;
        for &c in coeffs.iter().rev() {
            val = val * self.p as u32 + c as u32;
        }
        self.element(val)
    }

    /// All field elements in ascending canonical index order.
    pub fn elements(self: &Arc<Self>) -> impl Iterator<Item = FieldElement> + '_ {
        let field = Arc::clone(self);
        (0..self.q).map(move |v| FieldElement {
            field: Arc::clone(&field),
            val: v,
        })
    }

    /// The nonzero elements, ascending.
    pub fn nonzero_elements(self: &Arc<Self>) -> impl Iterator<Item = FieldElement> + '_ {
        self.elements().skip(1)
    }

    /// The first element in canonical enumeration order whose multiplicative
    /// order is exactly q - 1. Deterministic; GF(5) yields 2 and GF(2^2)
    /// yields the class of x. For GF(2) this is 1.
    pub fn primitive_element(self: &Arc<Self>) -> FieldElement {
        for cand in self.nonzero_elements() {
            if cand.multiplicative_order() == self.q as u32 - 1 {
                return cand;
            }
        }
        unreachable!("the multiplicative group of a finite field is cyclic")
    }
}

/// An element of a specific GF(p^e).
///
/// Arithmetic panics if the operands belong to different fields; callers mix
/// fields only through validated entry points.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<FieldSpec>,
    val: u16,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.val == other.val && self.same_field(other)
    }
}

impl Eq for FieldElement {}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.val.hash(state);
        self.field.p.hash(state);
        self.field.e.hash(state);
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.val, self.field)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.val)
    }
}

impl FieldElement {
    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    /// Canonical index in [0, q).
    pub fn index(&self) -> u16 {
        self.val
    }

    pub fn is_zero(&self) -> bool {
        self.val == 0
    }

    pub fn is_one(&self) -> bool {
        self.val == 1
    }

    /// Coefficient vector of length e, little-endian, each entry in [0, p).
    pub fn coeffs(&self) -> Vec<u16> {
        let p = self.field.p;
        let mut out = vec![0u16; self.field.e];
        let mut rest = self.val;
        for c in out.iter_mut() {
            *c = rest % p;
            rest /= p;
        }
        out
    }

    fn same_field(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.field, &other.field) || self.field == other.field
    }

    fn check_field(&self, other: &Self, op: &str) {
        assert!(
            self.same_field(other),
            "field mismatch in {op}: {} vs {}",
            self.field,
            other.field
        );
    }

    fn from_coeffs_reduced(field: &Arc<FieldSpec>, coeffs: &[u16]) -> FieldElement {
        let mut val = 0u32;
        for &c in coeffs.iter().rev() {
            val = val * field.p as u32 + c as u32;
        }
        FieldElement {
            field: Arc::clone(field),
            val: val as u16,
        }
    }

    pub fn add(&self, other: &Self) -> FieldElement {
        self.check_field(other, "add");
        let p = self.field.p as u32;
        if self.field.e == 1 {
            return FieldElement {
                field: Arc::clone(&self.field),
                val: ((self.val as u32 + other.val as u32) % p) as u16,
            };
        }
        let a = self.coeffs();
        let b = other.coeffs();
        let sum: Vec<u16> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| ((x as u32 + y as u32) % p) as u16)
            .collect();
        Self::from_coeffs_reduced(&self.field, &sum)
    }

    pub fn neg(&self) -> FieldElement {
        let p = self.field.p as u32;
        if self.field.e == 1 {
            return FieldElement {
                field: Arc::clone(&self.field),
                val: ((p - self.val as u32) % p) as u16,
            };
        }
        let negated: Vec<u16> = self
            .coeffs()
            .iter()
            .map(|&c| ((p - c as u32) % p) as u16)
            .collect();
        Self::from_coeffs_reduced(&self.field, &negated)
    }

    pub fn sub(&self, other: &Self) -> FieldElement {
        self.check_field(other, "sub");
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> FieldElement {
        self.check_field(other, "mul");
        let p = self.field.p;
        if self.field.e == 1 {
            return FieldElement {
                field: Arc::clone(&self.field),
                val: ((self.val as u32 * other.val as u32) % p as u32) as u16,
            };
        }
        let prod = poly_mod_mul(&self.coeffs(), &other.coeffs(), p);
        let reduced = poly_rem(&prod, &self.field.modulus, p);
        Self::from_coeffs_reduced(&self.field, &reduced)
    }

    /// Multiplicative inverse. Errors on zero.
    pub fn inv(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        // a^(q-2) = a^(-1) in GF(q)
        Ok(self.pow_unsigned(self.field.q as u32 - 2))
    }

    fn pow_unsigned(&self, mut n: u32) -> FieldElement {
        let mut base = self.clone();
        let mut acc = self.field.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        acc
    }

    /// a^n, with pow(a, 0) = 1. Negative exponents require a nonzero base.
    pub fn pow(&self, n: i64) -> Result<FieldElement, FieldError> {
        if n < 0 && self.is_zero() {
            return Err(FieldError::ZeroToNegativePower);
        }
        // a^(q-1) = 1 for nonzero a, so the exponent reduces mod q - 1
        let reduced = if self.is_zero() {
            n.clamp(0, 1) as u32
        } else {
            (n.unsigned_abs() % (self.field.q as u64 - 1).max(1)) as u32
        };
        let powered = self.pow_unsigned(reduced);
        if n < 0 {
            powered.inv()
        } else {
            Ok(powered)
        }
    }

    /// Order of the element in the multiplicative group; 0 has no order and
    /// reports 0.
    pub fn multiplicative_order(&self) -> u32 {
        if self.is_zero() {
            return 0;
        }
        let one = self.field.one();
        let mut acc = self.clone();
        let mut ord = 1u32;
        while acc != one {
            acc = acc.mul(self);
            ord += 1;
        }
        ord
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait for &FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: &FieldElement) -> FieldElement {
                FieldElement::$inner(self, rhs)
            }
        }
        impl std::ops::$trait for FieldElement {
            type Output = FieldElement;
            fn $method(self, rhs: FieldElement) -> FieldElement {
                FieldElement::$inner(&self, &rhs)
            }
        }
    };
}

forward_binop!(Add, add, add);
forward_binop!(Sub, sub, sub);
forward_binop!(Mul, mul, mul);

impl std::ops::Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(self)
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(&self)
    }
}
