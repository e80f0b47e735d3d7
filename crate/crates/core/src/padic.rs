//! Fixed-precision arithmetic in Z/ℓ^N and in unramified rings Z/ℓ^N[x]/(h).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision exponent must be at least 1")]
    ZeroPrecision,
    #[error("{ell}^{n} does not fit the 63-bit residue representation")]
    PrecisionOverflow { ell: u64, n: u32 },
    #[error("defining polynomial must be monic of degree at least 1")]
    NotMonic,
    #[error("defining polynomial is reducible modulo {0}")]
    Reducible(u64),
    #[error("operands belong to different coefficient rings")]
    RingMismatch,
    #[error("cannot raise precision from {from} to {to}")]
    PrecisionRaise { from: u32, to: u32 },
    #[error("{0} is not a unit")]
    NotUnit(u64),
}

/// ℓ-adic valuation at a finite precision. `AtLeast(N)` is the value of 0 mod ℓ^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(u32),
    AtLeast(u32),
}

impl Valuation {
    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }

    pub fn is_zero_sentinel(self) -> bool {
        matches!(self, Valuation::AtLeast(_))
    }

    /// True when the valuation is known to be at least `k`.
    pub fn at_least(self, k: u32) -> bool {
        match self {
            Valuation::Finite(v) => v >= k,
            Valuation::AtLeast(_) => true,
        }
    }

    /// Lower bound usable for comparisons; the sentinel maps to its precision.
    pub fn bound(self) -> u32 {
        match self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[inline]
pub(crate) fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    if m <= u32::MAX as u64 {
        (a * b) % m
    } else {
        ((a as u128 * b as u128) % m as u128) as u64
    }
}

#[inline]
pub(crate) fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
pub(crate) fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

/// Inverse modulo `m` of a residue coprime to `m`.
pub(crate) fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(m as i128) as u64)
}

/// The prime ℓ and the working precision N (arithmetic modulo ℓ^N).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    ell: u64,
    precision: u32,
    modulus: u64,
}

impl PrecisionContext {
    pub fn new(ell: u64, precision: u32) -> Result<Self, PadicError> {
        if !is_prime(ell) {
            return Err(PadicError::NotPrime(ell));
        }
        if precision == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        let mut modulus: u64 = 1;
        for _ in 0..precision {
            modulus = modulus
                .checked_mul(ell)
                .filter(|m| *m < (1u64 << 63))
                .ok_or(PadicError::PrecisionOverflow { ell, n: precision })?;
        }
        Ok(Self { ell, precision, modulus })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn reduce(&self, v: i64) -> u64 {
        (v as i128).rem_euclid(self.modulus as i128) as u64
    }

    pub fn add(&self, a: u64, b: u64) -> u64 {
        addmod(a, b, self.modulus)
    }

    pub fn sub(&self, a: u64, b: u64) -> u64 {
        submod(a, b, self.modulus)
    }

    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mulmod(a, b, self.modulus)
    }

    pub fn neg(&self, a: u64) -> u64 {
        submod(0, a, self.modulus)
    }

    pub fn inv(&self, a: u64) -> Result<u64, PadicError> {
        invmod(a, self.modulus).ok_or(PadicError::NotUnit(a))
    }

    pub fn valuation(&self, a: u64) -> Valuation {
        let mut a = a % self.modulus;
        if a == 0 {
            return Valuation::AtLeast(self.precision);
        }
        let mut v = 0;
        while a.is_multiple_of(self.ell) {
            a /= self.ell;
            v += 1;
        }
        Valuation::Finite(v)
    }

    /// Splits a nonzero residue into ℓ^v · u with u a unit.
    pub fn split_unit(&self, a: u64) -> Option<(u32, u64)> {
        let v = self.valuation(a).finite()?;
        Some((v, a / self.ell.pow(v)))
    }

    pub fn ell_pow(&self, k: u32) -> u64 {
        if k >= self.precision {
            0
        } else {
            self.ell.pow(k)
        }
    }
}

/// The coefficient ring Z/ℓ^N[x]/(h) with h monic and irreducible modulo ℓ.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoefRing {
    ctx: PrecisionContext,
    /// Little-endian residues of h; the last entry is 1.
    h: Vec<u64>,
}

impl CoefRing {
    /// Builds Z_φ from a little-endian integer polynomial h.
    pub fn new(ctx: PrecisionContext, h: &[i64]) -> Result<Arc<Self>, PadicError> {
        let h: Vec<u64> = h.iter().map(|&c| ctx.reduce(c)).collect();
        if h.len() < 2 || *h.last().unwrap() != 1 {
            return Err(PadicError::NotMonic);
        }
        let mod_ell: Vec<u64> = h.iter().map(|c| c % ctx.ell).collect();
        if !check_irreducible(ctx.ell, &mod_ell) {
            return Err(PadicError::Reducible(ctx.ell));
        }
        Ok(Arc::new(Self { ctx, h }))
    }

    /// Z/ℓ^N itself, realised with h = x.
    pub fn base(ctx: PrecisionContext) -> Arc<Self> {
        Arc::new(Self { ctx, h: vec![0, 1] })
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn ell(&self) -> u64 {
        self.ctx.ell
    }

    pub fn precision(&self) -> u32 {
        self.ctx.precision
    }

    pub fn modulus(&self) -> u64 {
        self.ctx.modulus
    }

    pub fn degree(&self) -> usize {
        self.h.len() - 1
    }

    pub fn defining_poly(&self) -> &[u64] {
        &self.h
    }

    /// Same h at a lower precision.
    pub fn with_precision(&self, precision: u32) -> Result<Arc<Self>, PadicError> {
        if precision > self.ctx.precision {
            return Err(PadicError::PrecisionRaise { from: self.ctx.precision, to: precision });
        }
        let ctx = PrecisionContext::new(self.ctx.ell, precision)?;
        let h = self.h.iter().map(|c| c % ctx.modulus).collect();
        Ok(Arc::new(Self { ctx, h }))
    }

    pub fn element(self: &Arc<Self>, coeffs: &[i64]) -> CoefElement {
        let mut c = vec![0u64; self.degree()];
        let mut x_pow = self.one_raw();
        for &a in coeffs {
            let a = self.ctx.reduce(a);
            for (ci, xi) in c.iter_mut().zip(&x_pow) {
                *ci = self.ctx.add(*ci, self.ctx.mul(a, *xi));
            }
            x_pow = self.mul_x_raw(&x_pow);
        }
        CoefElement { ring: Arc::clone(self), coeffs: c }
    }

    pub fn from_int(self: &Arc<Self>, v: i64) -> CoefElement {
        self.element(&[v])
    }

    pub fn zero(self: &Arc<Self>) -> CoefElement {
        CoefElement { ring: Arc::clone(self), coeffs: vec![0; self.degree()] }
    }

    pub fn one(self: &Arc<Self>) -> CoefElement {
        CoefElement { ring: Arc::clone(self), coeffs: self.one_raw() }
    }

    pub fn from_raw(self: &Arc<Self>, coeffs: Vec<u64>) -> CoefElement {
        assert_eq!(coeffs.len(), self.degree(), "coefficient vector length");
        let coeffs = coeffs.into_iter().map(|c| c % self.modulus()).collect();
        CoefElement { ring: Arc::clone(self), coeffs }
    }

    pub(crate) fn one_raw(&self) -> Vec<u64> {
        let mut v = vec![0; self.degree()];
        v[0] = 1 % self.modulus();
        v
    }

    pub(crate) fn add_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| self.ctx.add(*x, *y)).collect()
    }

    pub(crate) fn sub_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| self.ctx.sub(*x, *y)).collect()
    }

    pub(crate) fn scale_raw(&self, a: &[u64], s: u64) -> Vec<u64> {
        a.iter().map(|x| self.ctx.mul(*x, s)).collect()
    }

    /// Multiplication by x in the basis 1, x, ..., x^{d-1}.
    pub(crate) fn mul_x_raw(&self, a: &[u64]) -> Vec<u64> {
        let d = self.degree();
        let top = a[d - 1];
        let mut out = vec![0u64; d];
        for i in (1..d).rev() {
            out[i] = a[i - 1];
        }
        if top != 0 {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.ctx.sub(*o, self.ctx.mul(top, self.h[i]));
            }
        }
        out
    }

    pub(crate) fn mul_raw(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.degree();
        if d == 1 {
            return vec![self.ctx.mul(a[0], b[0])];
        }
        let m = self.ctx.modulus;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                prod[i + j] = addmod(prod[i + j], mulmod(ai, bj, m), m);
            }
        }
        for k in (d..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for i in 0..d {
                let t = k - d + i;
                prod[t] = submod(prod[t], mulmod(c, self.h[i], m), m);
            }
        }
        prod.truncate(d);
        prod
    }

    pub(crate) fn is_zero_raw(a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub(crate) fn valuation_raw(&self, a: &[u64]) -> Valuation {
        a.iter()
            .filter_map(|&c| self.ctx.valuation(c).finite())
            .min()
            .map(Valuation::Finite)
            .unwrap_or(Valuation::AtLeast(self.ctx.precision))
    }
}

impl fmt::Display for CoefRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}[x]/({})", self.ctx.ell, self.ctx.precision, poly_to_string(&self.h, "x"))
    }
}

pub(crate) fn poly_to_string(c: &[u64], var: &str) -> String {
    let mut terms = Vec::new();
    for (i, &a) in c.iter().enumerate().rev() {
        if a == 0 {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => var.to_string(),
            _ => format!("{var}^{i}"),
        };
        terms.push(match (a, i) {
            (_, 0) => a.to_string(),
            (1, _) => mono,
            _ => format!("{a}*{mono}"),
        });
    }
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Sub,
    Mul,
}

/// An element of Z_φ at precision N: d canonical residues.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoefElement {
    ring: Arc<CoefRing>,
    coeffs: Vec<u64>,
}

impl fmt::Debug for CoefElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", poly_to_string(&self.coeffs, "x"))
    }
}

impl fmt::Display for CoefElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", poly_to_string(&self.coeffs, "x"))
    }
}

fn same_ring(a: &Arc<CoefRing>, b: &Arc<CoefRing>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Checked ring operation; fails when the operands live in different rings.
pub fn ring_arith(a: &CoefElement, b: &CoefElement, op: RingOp) -> Result<CoefElement, PadicError> {
    if !same_ring(&a.ring, &b.ring) {
        return Err(PadicError::RingMismatch);
    }
    let r = &a.ring;
    let coeffs = match op {
        RingOp::Add => r.add_raw(&a.coeffs, &b.coeffs),
        RingOp::Sub => r.sub_raw(&a.coeffs, &b.coeffs),
        RingOp::Mul => r.mul_raw(&a.coeffs, &b.coeffs),
    };
    Ok(CoefElement { ring: Arc::clone(r), coeffs })
}

impl CoefElement {
    pub fn ring(&self) -> &Arc<CoefRing> {
        &self.ring
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        CoefRing::is_zero_raw(&self.coeffs)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == self.ring.one_raw()
    }

    pub fn valuation(&self) -> Valuation {
        self.ring.valuation_raw(&self.coeffs)
    }

    pub fn scale(&self, s: u64) -> CoefElement {
        CoefElement { ring: Arc::clone(&self.ring), coeffs: self.ring.scale_raw(&self.coeffs, s) }
    }

    /// Reduction to a lower precision ring with the same h.
    pub fn reduce_to(&self, ring: &Arc<CoefRing>) -> CoefElement {
        debug_assert_eq!(ring.degree(), self.ring.degree());
        ring.from_raw(self.coeffs.clone())
    }

    pub fn pow(&self, mut e: u64) -> CoefElement {
        let mut acc = self.ring.one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }
}

macro_rules! coef_binop {
    ($tr:ident, $f:ident, $op:expr) => {
        impl $tr for &CoefElement {
            type Output = CoefElement;
            /// Panics when the operands belong to different rings; use [`ring_arith`] for a checked variant.
            fn $f(self, rhs: &CoefElement) -> CoefElement {
                ring_arith(self, rhs, $op).expect("coefficient ring mismatch")
            }
        }
    };
}

coef_binop!(Add, add, RingOp::Add);
coef_binop!(Sub, sub, RingOp::Sub);
coef_binop!(Mul, mul, RingOp::Mul);

impl Neg for &CoefElement {
    type Output = CoefElement;
    fn neg(self) -> CoefElement {
        let coeffs = self.coeffs.iter().map(|&c| self.ring.ctx.neg(c)).collect();
        CoefElement { ring: Arc::clone(&self.ring), coeffs }
    }
}

// Polynomials over F_ℓ, little-endian, used for the irreducibility test.

fn fp_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn fp_rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    fp_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = invmod(b[db], p).expect("nonzero leading coefficient");
    while r.len() > db {
        let c = mulmod(*r.last().unwrap(), lead_inv, p);
        let shift = r.len() - 1 - db;
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = submod(r[shift + i], mulmod(c, bi, p), p);
        }
        fp_trim(&mut r);
    }
    r
}

fn fp_mulmod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = addmod(prod[i + j], mulmod(x, y, p), p);
        }
    }
    fp_rem(&prod, m, p)
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    fp_trim(&mut a);
    fp_trim(&mut b);
    while !b.is_empty() {
        let r = fp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Irreducibility over F_ℓ of a monic polynomial with residues in [0, ℓ),
/// by gcd(h, x^{ℓ^k} − x) = 1 for every k ≤ deg h / 2.
pub fn check_irreducible(ell: u64, h: &[u64]) -> bool {
    let mut h: Vec<u64> = h.iter().map(|c| c % ell).collect();
    fp_trim(&mut h);
    let deg = h.len().saturating_sub(1);
    if deg == 0 {
        return false;
    }
    let lead_inv = match invmod(h[deg], ell) {
        Some(i) => i,
        None => return false,
    };
    let h: Vec<u64> = h.iter().map(|c| mulmod(*c, lead_inv, ell)).collect();
    // x^{ℓ^k} is computed by repeated ℓ-th powering modulo h.
    let mut frob = fp_rem(&[0, 1], &h, ell);
    for _ in 1..=deg / 2 {
        frob = {
            let mut acc = vec![1u64];
            for _ in 0..ell {
                acc = fp_mulmod(&acc, &frob, &h, ell);
            }
            acc
        };
        let mut diff = frob.clone();
        diff.resize(diff.len().max(2), 0);
        diff[1] = submod(diff[1], 1, ell);
        fp_trim(&mut diff);
        let g = fp_gcd(&h, &diff, ell);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

/// The lexicographically first monic irreducible polynomial of the given degree over F_ℓ.
pub fn find_irreducible(ell: u64, degree: usize) -> Vec<u64> {
    assert!(degree >= 1);
    let count = ell.pow(degree as u32);
    for code in 0..count {
        let mut h = Vec::with_capacity(degree + 1);
        let mut c = code;
        for _ in 0..degree {
            h.push(c % ell);
            c /= ell;
        }
        h.push(1);
        if check_irreducible(ell, &h) {
            return h;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(ell: u64, n: u32) -> PrecisionContext {
        PrecisionContext::new(ell, n).unwrap()
    }

    #[test]
    fn base_ring_product() {
        let r = CoefRing::base(ctx(3, 2));
        let p = &r.from_int(4) * &r.from_int(7);
        assert_eq!(p.coeffs(), &[1]);
    }

    #[test]
    fn additive_identity() {
        let r = CoefRing::new(ctx(5, 3), &[2, 0, 1]).unwrap();
        let a = r.element(&[7, 11]);
        assert_eq!(&a + &r.zero(), a);
    }

    #[test]
    fn x_squared_is_minus_one() {
        let r = CoefRing::new(ctx(3, 3), &[1, 0, 1]).unwrap();
        let x = r.element(&[0, 1]);
        assert_eq!((&x * &x).coeffs(), &[26, 0]);
    }

    #[test]
    fn valuations() {
        let r = CoefRing::base(ctx(3, 4));
        assert_eq!(r.from_int(18).valuation(), Valuation::Finite(2));
        assert_eq!(r.zero().valuation(), Valuation::AtLeast(4));
        let r5 = CoefRing::new(ctx(5, 3), &[2, 0, 1]).unwrap();
        assert_eq!(r5.element(&[25, 5]).valuation(), Valuation::Finite(1));
    }

    #[test]
    fn irreducibility_examples() {
        assert!(check_irreducible(3, &[1, 0, 1]));
        assert!(!check_irreducible(5, &[1, 0, 1]));
        assert!(CoefRing::new(ctx(5, 2), &[1, 0, 1]).is_err());
    }

    #[test]
    fn mismatched_rings_are_rejected() {
        let a = CoefRing::base(ctx(3, 2)).from_int(1);
        let b = CoefRing::base(ctx(3, 3)).from_int(1);
        assert_eq!(ring_arith(&a, &b, RingOp::Add), Err(PadicError::RingMismatch));
    }

    #[test]
    fn context_validation() {
        assert_eq!(PrecisionContext::new(9, 2), Err(PadicError::NotPrime(9)));
        assert_eq!(PrecisionContext::new(3, 0), Err(PadicError::ZeroPrecision));
        assert!(PrecisionContext::new(3, 60).is_err());
    }

    #[test]
    fn first_irreducible_quartic_mod_three() {
        let h = find_irreducible(3, 4);
        assert_eq!(h.len(), 5);
        assert!(check_irreducible(3, &h));
    }
}
