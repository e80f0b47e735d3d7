//! Truncated Iwasawa algebra Λ_φ = Z_φ[[T]], T = γ − 1.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::padic::{CoefElement, CoefRing, PadicError, Valuation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IwasawaError {
    #[error("degree {needed} exceeds the configured cap {cap}")]
    DegreeCapExceeded { needed: usize, cap: usize },
    #[error("invalid range: n = {n} is smaller than m = {m}")]
    InvalidRange { n: u32, m: u32 },
    #[error("precision {have} is too low, at least {need} required")]
    PrecisionTooLow { have: u32, need: u32 },
    #[error("polynomial is not distinguished")]
    NotDistinguished,
    #[error(transparent)]
    Padic(#[from] PadicError),
}

/// Polynomial in T over Z_φ; coefficient of T^i at index i, trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LambdaElement {
    ring: Arc<CoefRing>,
    coeffs: Vec<CoefElement>,
}

impl LambdaElement {
    pub fn new(ring: &Arc<CoefRing>, mut coeffs: Vec<CoefElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { ring: Arc::clone(ring), coeffs }
    }

    /// Integer coefficients, little-endian in T, each embedded as a constant of Z_φ.
    pub fn from_ints(ring: &Arc<CoefRing>, coeffs: &[i64]) -> Self {
        Self::new(ring, coeffs.iter().map(|&c| ring.from_int(c)).collect())
    }

    /// Coefficients given as vectors over the basis 1, x, ..., x^{d-1} of Z_φ.
    pub fn from_coef_vectors(ring: &Arc<CoefRing>, coeffs: &[Vec<i64>]) -> Self {
        Self::new(ring, coeffs.iter().map(|c| ring.element(c)).collect())
    }

    pub fn zero(ring: &Arc<CoefRing>) -> Self {
        Self { ring: Arc::clone(ring), coeffs: Vec::new() }
    }

    pub fn one(ring: &Arc<CoefRing>) -> Self {
        Self::constant(ring.one())
    }

    pub fn constant(c: CoefElement) -> Self {
        let ring = Arc::clone(c.ring());
        Self::new(&ring, vec![c])
    }

    pub fn monomial(ring: &Arc<CoefRing>, degree: usize) -> Self {
        let mut coeffs = vec![ring.zero(); degree];
        coeffs.push(ring.one());
        Self { ring: Arc::clone(ring), coeffs }
    }

    pub fn ring(&self) -> &Arc<CoefRing> {
        &self.ring
    }

    pub fn coeffs(&self) -> &[CoefElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> CoefElement {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.ring.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn valuation(&self) -> Valuation {
        self.coeffs
            .iter()
            .filter_map(|c| c.valuation().finite())
            .min()
            .map(Valuation::Finite)
            .unwrap_or(Valuation::AtLeast(self.ring.precision()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) + &other.coeff(i)).collect();
        Self::new(&self.ring, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| &self.coeff(i) - &other.coeff(i)).collect();
        Self::new(&self.ring, coeffs)
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.ring, self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, c: &CoefElement) -> Self {
        Self::new(&self.ring, self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn scale_int(&self, s: i64) -> Self {
        self.scale(&self.ring.from_int(s))
    }

    /// Product without a degree check; see [`LambdaAlgebra::mul`] for the capped version.
    pub fn mul_unchecked(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(&self.ring);
        }
        let r = &self.ring;
        let d = r.degree();
        let mut raw = vec![vec![0u64; d]; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let p = r.mul_raw(a.coeffs(), b.coeffs());
                raw[i + j] = r.add_raw(&raw[i + j], &p);
            }
        }
        Self::new(r, raw.into_iter().map(|c| r.from_raw(c)).collect())
    }

    /// Same coefficients reduced into a lower-precision ring with the same h.
    pub fn reduce_to(&self, ring: &Arc<CoefRing>) -> Self {
        Self::new(ring, self.coeffs.iter().map(|c| c.reduce_to(ring)).collect())
    }

    /// Coefficient vectors over the basis of Z_φ, as canonical residues.
    pub fn to_raw(&self) -> Vec<Vec<u64>> {
        self.coeffs.iter().map(|c| c.coeffs().to_vec()).collect()
    }
}

impl fmt::Debug for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let scalar = if self.ring.degree() == 1 { c.to_string() } else { format!("({c})") };
            match (i, c.is_one()) {
                (0, _) => write!(f, "{scalar}")?,
                (1, true) => write!(f, "T")?,
                (1, false) => write!(f, "{scalar}*T")?,
                (_, true) => write!(f, "T^{i}")?,
                (_, false) => write!(f, "{scalar}*T^{i}")?,
            }
        }
        Ok(())
    }
}

/// A monic polynomial whose lower coefficients all lie in ℓZ_φ.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DistinguishedPoly(LambdaElement);

impl DistinguishedPoly {
    pub fn new(f: LambdaElement) -> Result<Self, IwasawaError> {
        if is_distinguished(&f) {
            Ok(Self(f))
        } else {
            Err(IwasawaError::NotDistinguished)
        }
    }

    pub fn poly(&self) -> &LambdaElement {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.degree().expect("distinguished polynomials are nonzero")
    }

    pub fn reduce_to(&self, ring: &Arc<CoefRing>) -> Self {
        Self(self.0.reduce_to(ring))
    }
}

impl fmt::Debug for DistinguishedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DistinguishedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_distinguished(f: &LambdaElement) -> bool {
    match f.coeffs.split_last() {
        Some((lead, lower)) => lead.is_one() && lower.iter().all(|c| c.valuation().at_least(1)),
        None => false,
    }
}

/// Division by a monic polynomial: g = q·f + r with deg r < deg f.
pub fn divmod_monic(g: &LambdaElement, f: &LambdaElement) -> (LambdaElement, LambdaElement) {
    let ring = &g.ring;
    let df = f.degree().expect("divisor must be nonzero");
    debug_assert!(f.coeffs[df].is_one());
    let mut rem: Vec<Vec<u64>> = g.to_raw();
    if rem.len() <= df {
        return (LambdaElement::zero(ring), g.clone());
    }
    let fr = f.to_raw();
    let mut quot = vec![vec![0u64; ring.degree()]; rem.len() - df];
    for k in (df..rem.len()).rev() {
        let c = std::mem::replace(&mut rem[k], vec![0; ring.degree()]);
        if CoefRing::is_zero_raw(&c) {
            continue;
        }
        for (i, fi) in fr.iter().enumerate().take(df) {
            let t = k - df + i;
            rem[t] = ring.sub_raw(&rem[t], &ring.mul_raw(&c, fi));
        }
        quot[k - df] = c;
    }
    rem.truncate(df);
    let q = LambdaElement::new(ring, quot.into_iter().map(|c| ring.from_raw(c)).collect());
    let r = LambdaElement::new(ring, rem.into_iter().map(|c| ring.from_raw(c)).collect());
    (q, r)
}

pub fn divmod_distinguished(g: &LambdaElement, f: &DistinguishedPoly) -> (LambdaElement, LambdaElement) {
    divmod_monic(g, &f.0)
}

/// Result of the ν(n+1,n) ≡ ℓ(1 + ℓ·a) mod f test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessOutcome {
    /// ν(n+1, n) = ℓ(1 + ℓ·a) + b·f at the working precision.
    Witness { a: LambdaElement, b: LambdaElement },
    NotYetStable,
}

/// Λ_φ together with the degree cap M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaAlgebra {
    ring: Arc<CoefRing>,
    degree_cap: usize,
}

impl LambdaAlgebra {
    pub fn new(ring: Arc<CoefRing>, degree_cap: usize) -> Self {
        Self { ring, degree_cap }
    }

    /// Cap ℓ^{n_max+1}.
    pub fn for_levels(ring: Arc<CoefRing>, n_max: u32) -> Self {
        let cap = (ring.ell() as usize).pow(n_max + 1);
        Self::new(ring, cap)
    }

    pub fn ring(&self) -> &Arc<CoefRing> {
        &self.ring
    }

    pub fn degree_cap(&self) -> usize {
        self.degree_cap
    }

    pub fn ell(&self) -> u64 {
        self.ring.ell()
    }

    /// Same cap over the ring reduced to a lower precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self, IwasawaError> {
        Ok(Self { ring: self.ring.with_precision(precision)?, degree_cap: self.degree_cap })
    }

    fn check_degree(&self, needed: usize) -> Result<(), IwasawaError> {
        if needed > self.degree_cap {
            Err(IwasawaError::DegreeCapExceeded { needed, cap: self.degree_cap })
        } else {
            Ok(())
        }
    }

    fn ell_pow(&self, n: u32) -> Result<usize, IwasawaError> {
        (self.ell() as usize)
            .checked_pow(n)
            .ok_or(IwasawaError::DegreeCapExceeded { needed: usize::MAX, cap: self.degree_cap })
    }

    pub fn mul(&self, a: &LambdaElement, b: &LambdaElement) -> Result<LambdaElement, IwasawaError> {
        if let (Some(da), Some(db)) = (a.degree(), b.degree()) {
            self.check_degree(da + db)?;
        }
        Ok(a.mul_unchecked(b))
    }

    /// ω_n = (1 + T)^{ℓ^n} − 1.
    pub fn omega(&self, n: u32) -> Result<LambdaElement, IwasawaError> {
        let top = self.ell_pow(n)?;
        self.check_degree(top)?;
        let ctx = *self.ring.ctx();
        let ell = ctx.ell();
        let mut coeffs = Vec::with_capacity(top + 1);
        coeffs.push(self.ring.zero());
        // binom(top, j) tracked as ℓ^v · unit to divide exactly modulo ℓ^N.
        let mut v: u32 = 0;
        let mut unit: u64 = 1;
        for j in 1..=top as u64 {
            let (mut num, mut den) = (top as u64 - j + 1, j);
            while num % ell == 0 {
                num /= ell;
                v += 1;
            }
            while den % ell == 0 {
                den /= ell;
                v -= 1;
            }
            unit = ctx.mul(ctx.mul(unit, num % ctx.modulus()), ctx.inv(den % ctx.modulus())?);
            let c = ctx.mul(unit, ctx.ell_pow(v));
            coeffs.push(self.ring.from_int(c as i64));
        }
        Ok(LambdaElement::new(&self.ring, coeffs))
    }

    /// ν(n, m) = ω_n / ω_m, an exact polynomial quotient.
    pub fn nu(&self, n: u32, m: u32) -> Result<LambdaElement, IwasawaError> {
        if n < m {
            return Err(IwasawaError::InvalidRange { n, m });
        }
        if n == m {
            return Ok(LambdaElement::one(&self.ring));
        }
        let (q, r) = divmod_monic(&self.omega(n)?, &self.omega(m)?);
        debug_assert!(r.is_zero());
        Ok(q)
    }

    pub fn divmod_distinguished(
        &self,
        g: &LambdaElement,
        f: &DistinguishedPoly,
    ) -> Result<(LambdaElement, LambdaElement), IwasawaError> {
        if let Some(dg) = g.degree() {
            self.check_degree(dg)?;
        }
        Ok(divmod_distinguished(g, f))
    }

    /// Tests whether ν(n+1, n) ≡ ℓ(1 + ℓ·a) modulo f and returns (a, b) when it is.
    pub fn factorization_witness(&self, f: &DistinguishedPoly, n: u32) -> Result<WitnessOutcome, IwasawaError> {
        let precision = self.ring.precision();
        if precision < 2 {
            return Err(IwasawaError::PrecisionTooLow { have: precision, need: 2 });
        }
        self.check_degree(self.ell_pow(n + 1)?)?;
        let ctx = *self.ring.ctx();
        let ell = ctx.ell();
        let ell_sq = ell * ell;
        let (b, r) = divmod_distinguished(&self.nu(n + 1, n)?, f);
        let mut a_coeffs = Vec::with_capacity(f.degree());
        for i in 0..f.degree() {
            let c = r.coeff(i);
            let mut out = Vec::with_capacity(self.ring.degree());
            for (j, &x) in c.coeffs().iter().enumerate() {
                let shifted = if i == 0 && j == 0 { ctx.sub(x, ell % ctx.modulus()) } else { x };
                if shifted % ell_sq != 0 {
                    return Ok(WitnessOutcome::NotYetStable);
                }
                out.push(shifted / ell_sq);
            }
            a_coeffs.push(self.ring.from_raw(out));
        }
        let a = LambdaElement::new(&self.ring, a_coeffs);
        Ok(WitnessOutcome::Witness { a, b })
    }
}
