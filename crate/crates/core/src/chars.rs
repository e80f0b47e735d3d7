//! ℓ-adic characters of a finite abelian group Δ of order prime to ℓ.
//!
//! Absolute characters are exponent tuples; the value of (e_i) on (g_i) is ζ_D^{Σ e_i g_i D/d_i}
//! with D the exponent of Δ. ℓ-adic irreducibles are orbits under χ ↦ χ^ℓ.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

use crate::padic::{find_irreducible, invmod, is_prime, mulmod, CoefElement, CoefRing, PrecisionContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharError {
    #[error("ell = {0} is not prime")]
    NotPrime(u64),
    #[error("cyclic orders must be at least 1")]
    BadOrder,
    #[error("|Δ| = {order} is not prime to ell = {ell}")]
    OrderNotCoprime { order: u64, ell: u64 },
    #[error("unknown irreducible character {0:?}")]
    UnknownIrreducible(String),
    #[error("malformed group element {0:?}")]
    NotASubgroup(Vec<u64>),
    #[error("the real/imaginary split needs an odd ell")]
    EllIsTwo,
    #[error("tau = {0:?} does not satisfy tau^2 = 1")]
    BadTau(Vec<u64>),
    #[error("omega is invalid: {0}")]
    BadOmega(String),
    #[error("coefficient {value} of {label} is not divisible by its degree {degree}")]
    NotDivisible { label: String, value: i64, degree: u64 },
    #[error("characters belong to different tables")]
    TableMismatch,
    #[error("splitting field F_{{ell^{degree}}} is too large")]
    FieldTooLarge { degree: u32 },
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Δ = Z/d_1 × ... × Z/d_r.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbelianGroup {
    orders: Vec<u64>,
    exponent: u64,
}

impl AbelianGroup {
    pub fn new(orders: &[u64]) -> Result<Self, CharError> {
        if orders.contains(&0) {
            return Err(CharError::BadOrder);
        }
        let exponent = orders.iter().fold(1, |a, &d| lcm(a, d));
        Ok(Self { orders: orders.to_vec(), exponent })
    }

    pub fn cyclic(d: u64) -> Result<Self, CharError> {
        Self::new(&[d])
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn order(&self) -> u64 {
        self.orders.iter().product()
    }

    /// lcm of the cyclic orders.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn identity(&self) -> Vec<u64> {
        vec![0; self.orders.len()]
    }

    pub fn is_element(&self, g: &[u64]) -> bool {
        g.len() == self.orders.len() && g.iter().zip(&self.orders).all(|(&x, &d)| x < d)
    }

    fn check(&self, g: &[u64]) -> Result<(), CharError> {
        if self.is_element(g) { Ok(()) } else { Err(CharError::NotASubgroup(g.to_vec())) }
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).zip(&self.orders).map(|((&x, &y), &d)| (x + y) % d).collect()
    }

    pub fn neg(&self, a: &[u64]) -> Vec<u64> {
        a.iter().zip(&self.orders).map(|(&x, &d)| (d - x % d) % d).collect()
    }

    pub fn scale(&self, a: &[u64], s: u64) -> Vec<u64> {
        a.iter().zip(&self.orders).map(|(&x, &d)| mulmod(x, s % d, d)).collect()
    }

    /// All elements in mixed-radix order (first coordinate fastest).
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = vec![self.identity()];
        for (i, &d) in self.orders.iter().enumerate() {
            let prev = std::mem::take(&mut out);
            for v in 0..d {
                for g in &prev {
                    let mut h = g.clone();
                    h[i] = v;
                    out.push(h);
                }
            }
        }
        out.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        out
    }

    /// Mixed-radix index of an element, matching `elements`.
    pub fn index_of(&self, g: &[u64]) -> usize {
        let mut idx = 0u64;
        for (&x, &d) in g.iter().zip(&self.orders).rev() {
            idx = idx * d + x;
        }
        idx as usize
    }

    /// Exponent k with χ_e(g) = ζ_D^k.
    pub fn pairing(&self, e: &[u64], g: &[u64]) -> u64 {
        let dd = self.exponent;
        e.iter()
            .zip(g)
            .zip(&self.orders)
            .fold(0, |acc, ((&ei, &gi), &di)| (acc + mulmod(mulmod(ei, gi, dd), dd / di, dd)) % dd)
    }

    /// The subgroup generated by `gens`.
    pub fn subgroup(&self, gens: &[Vec<u64>]) -> Result<BTreeSet<Vec<u64>>, CharError> {
        for g in gens {
            self.check(g)?;
        }
        let mut set = BTreeSet::from([self.identity()]);
        let mut frontier = vec![self.identity()];
        while let Some(h) = frontier.pop() {
            for g in gens {
                let k = self.add(&h, g);
                if set.insert(k.clone()) {
                    frontier.push(k);
                }
            }
        }
        Ok(set)
    }
}

/// An orbit of absolute characters under χ ↦ χ^ℓ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadicIrreducible {
    label: Vec<u64>,
    members: Vec<Vec<u64>>,
}

impl LadicIrreducible {
    /// Lexicographically minimal member.
    pub fn label(&self) -> &[u64] {
        &self.label
    }

    pub fn members(&self) -> &[Vec<u64>] {
        &self.members
    }

    pub fn degree(&self) -> usize {
        self.members.len()
    }

    /// "chi(1)", "chi(0,2)".
    pub fn name(&self) -> String {
        let inner: Vec<String> = self.label.iter().map(u64::to_string).collect();
        format!("chi({})", inner.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterTable {
    group: AbelianGroup,
    ell: u64,
    irreducibles: Vec<LadicIrreducible>,
    orbit_of: HashMap<Vec<u64>, usize>,
}

/// Partitions the absolute characters into Frobenius orbits, ordered by label.
pub fn enumerate_irreducibles(group: &AbelianGroup, ell: u64) -> Result<CharacterTable, CharError> {
    if !is_prime(ell) {
        return Err(CharError::NotPrime(ell));
    }
    if gcd(group.order(), ell) != 1 {
        return Err(CharError::OrderNotCoprime { order: group.order(), ell });
    }
    let mut orbit_of = HashMap::new();
    let mut irreducibles = Vec::new();
    let mut all = group.elements();
    all.sort();
    for e in all {
        if orbit_of.contains_key(&e) {
            continue;
        }
        let mut members = vec![e.clone()];
        let mut next = group.scale(&e, ell);
        while next != e {
            members.push(next.clone());
            next = group.scale(&next, ell);
        }
        members.sort();
        let idx = irreducibles.len();
        for m in &members {
            orbit_of.insert(m.clone(), idx);
        }
        irreducibles.push(LadicIrreducible { label: e, members });
    }
    Ok(CharacterTable { group: group.clone(), ell, irreducibles, orbit_of })
}

impl CharacterTable {
    pub fn group(&self) -> &AbelianGroup {
        &self.group
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn irreducibles(&self) -> &[LadicIrreducible] {
        &self.irreducibles
    }

    pub fn irreducible(&self, idx: usize) -> &LadicIrreducible {
        &self.irreducibles[idx]
    }

    pub fn len(&self) -> usize {
        self.irreducibles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreducibles.is_empty()
    }

    /// Index of the orbit containing an absolute character.
    pub fn orbit_index(&self, e: &[u64]) -> Result<usize, CharError> {
        self.orbit_of.get(e).copied().ok_or_else(|| CharError::UnknownIrreducible(format!("{e:?}")))
    }

    /// Accepts a name like "chi(0,1)", a bare tuple "0,1" or "1"; any orbit member names its orbit.
    pub fn lookup(&self, name: &str) -> Result<usize, CharError> {
        let unknown = || CharError::UnknownIrreducible(name.to_string());
        let s = name.trim();
        let s = s.strip_prefix("chi").unwrap_or(s);
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let tuple: Vec<u64> = s
            .split(',')
            .map(|p| p.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| unknown())?;
        self.orbit_index(&tuple).map_err(|_| unknown())
    }

    pub fn zero(&self) -> VirtualCharacter {
        VirtualCharacter { coeffs: vec![0; self.len()] }
    }

    pub fn basis(&self, idx: usize) -> VirtualCharacter {
        let mut v = self.zero();
        v.coeffs[idx] = 1;
        v
    }

    pub fn unit(&self) -> VirtualCharacter {
        self.basis(self.orbit_of[&self.group.identity()])
    }

    /// χ_reg = Σ φ: each ℓ-adic irreducible occurs once, so ⟨χ_reg, φ⟩ = deg φ.
    pub fn regular(&self) -> VirtualCharacter {
        VirtualCharacter { coeffs: vec![1; self.len()] }
    }

    /// Coefficient of φ in χ.
    pub fn inner(&self, chi: &VirtualCharacter, phi: &str) -> Result<i64, CharError> {
        self.check(chi)?;
        Ok(chi.coeffs[self.lookup(phi)?])
    }

    /// The usual pairing ⟨χ, φ⟩ = deg φ · (coefficient of φ).
    pub fn pairing(&self, chi: &VirtualCharacter, idx: usize) -> i64 {
        chi.coeffs[idx] * self.irreducibles[idx].degree() as i64
    }

    pub fn degree_of(&self, chi: &VirtualCharacter) -> i64 {
        (0..self.len()).map(|i| self.pairing(chi, i)).sum()
    }

    fn check(&self, chi: &VirtualCharacter) -> Result<(), CharError> {
        if chi.coeffs.len() == self.len() { Ok(()) } else { Err(CharError::TableMismatch) }
    }

    /// Σ of the irreducibles trivial on the subgroup generated by `gens`.
    pub fn induce_unit(&self, gens: &[Vec<u64>]) -> Result<VirtualCharacter, CharError> {
        for g in gens {
            self.group.check(g)?;
        }
        let coeffs = self
            .irreducibles
            .iter()
            .map(|phi| gens.iter().all(|g| self.group.pairing(&phi.label, g) == 0) as i64)
            .collect();
        Ok(VirtualCharacter { coeffs })
    }

    /// Whether every member of each orbit agrees on triviality over the subgroup.
    pub fn orbit_triviality_homogeneous(&self, gens: &[Vec<u64>]) -> bool {
        self.irreducibles.iter().all(|phi| {
            let t = |e: &Vec<u64>| gens.iter().all(|g| self.group.pairing(e, g) == 0);
            phi.members.iter().all(|m| t(m) == t(&phi.label))
        })
    }

    pub fn to_map(&self, chi: &VirtualCharacter) -> BTreeMap<String, i64> {
        chi.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (self.irreducibles[i].name(), c))
            .collect()
    }

    pub fn from_map(&self, map: &BTreeMap<String, i64>) -> Result<VirtualCharacter, CharError> {
        let mut v = self.zero();
        for (name, &c) in map {
            v.coeffs[self.lookup(name)?] += c;
        }
        Ok(v)
    }

    /// "2chi(0) - chi(1)", or "0".
    pub fn format(&self, chi: &VirtualCharacter) -> String {
        let mut out = String::new();
        for (i, &c) in chi.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let name = self.irreducibles[i].name();
            let mag = c.unsigned_abs();
            let term = if mag == 1 { name } else { format!("{mag}{name}") };
            if out.is_empty() {
                out = if c < 0 { format!("-{term}") } else { term };
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
                out.push_str(&term);
            }
        }
        if out.is_empty() { "0".into() } else { out }
    }
}

/// Integer combination of the irreducibles of one table, indexed like `CharacterTable::irreducibles`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VirtualCharacter {
    coeffs: Vec<i64>,
}

impl VirtualCharacter {
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coefficient(&self, idx: usize) -> i64 {
        self.coeffs[idx]
    }

    pub fn add_coefficient(&mut self, idx: usize, c: i64) {
        self.coeffs[idx] += c;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0)
    }

    fn zip(&self, other: &Self, f: impl Fn(i64, i64) -> i64) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len(), "characters from different tables");
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect() }
    }
}

impl Add for &VirtualCharacter {
    type Output = VirtualCharacter;
    fn add(self, rhs: Self) -> VirtualCharacter {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &VirtualCharacter {
    type Output = VirtualCharacter;
    fn sub(self, rhs: Self) -> VirtualCharacter {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Add for VirtualCharacter {
    type Output = VirtualCharacter;
    fn add(self, rhs: Self) -> VirtualCharacter {
        &self + &rhs
    }
}

impl Sub for VirtualCharacter {
    type Output = VirtualCharacter;
    fn sub(self, rhs: Self) -> VirtualCharacter {
        &self - &rhs
    }
}

impl AddAssign<&VirtualCharacter> for VirtualCharacter {
    fn add_assign(&mut self, rhs: &VirtualCharacter) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&VirtualCharacter> for VirtualCharacter {
    fn sub_assign(&mut self, rhs: &VirtualCharacter) {
        *self = &*self - rhs;
    }
}

impl Neg for &VirtualCharacter {
    type Output = VirtualCharacter;
    fn neg(self) -> VirtualCharacter {
        VirtualCharacter { coeffs: self.coeffs.iter().map(|&c| -c).collect() }
    }
}

impl Mul<&VirtualCharacter> for i64 {
    type Output = VirtualCharacter;
    fn mul(self, rhs: &VirtualCharacter) -> VirtualCharacter {
        VirtualCharacter { coeffs: rhs.coeffs.iter().map(|&c| self * c).collect() }
    }
}

impl fmt::Display for VirtualCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coeffs)
    }
}

/// Complex conjugation τ and the cyclotomic character ω.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorContext {
    tau: Vec<u64>,
    omega: Vec<u64>,
    omega_index: usize,
}

impl MirrorContext {
    /// Requires τ² = 1, a singleton orbit for ω, and ω(τ) = −1.
    pub fn new(table: &CharacterTable, tau: &[u64], omega: &[u64]) -> Result<Self, CharError> {
        let g = table.group();
        if !g.is_element(tau) || g.add(tau, tau) != g.identity() {
            return Err(CharError::BadTau(tau.to_vec()));
        }
        if !g.is_element(omega) {
            return Err(CharError::BadOmega(format!("{omega:?} is not a character")));
        }
        let omega_index = table.orbit_index(omega)?;
        if table.irreducible(omega_index).degree() != 1 {
            return Err(CharError::BadOmega("its orbit is not a singleton".into()));
        }
        let dd = g.exponent();
        if !dd.is_multiple_of(2) || g.pairing(omega, tau) != dd / 2 {
            return Err(CharError::BadOmega("omega(tau) is not -1".into()));
        }
        Ok(Self { tau: tau.to_vec(), omega: omega.to_vec(), omega_index })
    }

    pub fn tau(&self) -> &[u64] {
        &self.tau
    }

    pub fn omega(&self) -> &[u64] {
        &self.omega
    }

    pub fn omega_character(&self, table: &CharacterTable) -> VirtualCharacter {
        table.basis(self.omega_index)
    }

    /// True when φ(τ) = +1.
    pub fn is_real(&self, table: &CharacterTable, idx: usize) -> bool {
        table.group().pairing(table.irreducible(idx).label(), &self.tau) == 0
    }
}

/// (χ^⊕, χ^⊖).
pub fn split_real_imag(
    table: &CharacterTable,
    chi: &VirtualCharacter,
    ctx: &MirrorContext,
) -> Result<(VirtualCharacter, VirtualCharacter), CharError> {
    if table.ell() == 2 {
        return Err(CharError::EllIsTwo);
    }
    table.check(chi)?;
    let mut plus = table.zero();
    let mut minus = table.zero();
    for (i, &c) in chi.coeffs.iter().enumerate() {
        if ctx.is_real(table, i) {
            plus.coeffs[i] = c;
        } else {
            minus.coeffs[i] = c;
        }
    }
    Ok((plus, minus))
}

pub fn real_part(table: &CharacterTable, chi: &VirtualCharacter, ctx: &MirrorContext) -> Result<VirtualCharacter, CharError> {
    split_real_imag(table, chi, ctx).map(|p| p.0)
}

pub fn imag_part(table: &CharacterTable, chi: &VirtualCharacter, ctx: &MirrorContext) -> Result<VirtualCharacter, CharError> {
    split_real_imag(table, chi, ctx).map(|p| p.1)
}

/// ψ ↦ ωψ^{-1}, extended linearly.
pub fn mirror(table: &CharacterTable, chi: &VirtualCharacter, ctx: &MirrorContext) -> VirtualCharacter {
    let g = table.group();
    let mut out = table.zero();
    for (i, &c) in chi.coeffs.iter().enumerate() {
        if c != 0 {
            let image = g.add(&ctx.omega, &g.neg(table.irreducible(i).label()));
            out.coeffs[table.orbit_of[&image]] += c;
        }
    }
    out
}

/// Element of (Z/ℓ^N)[Δ], coefficients indexed by `AbelianGroup::index_of`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAlgebraElement {
    group: AbelianGroup,
    modulus: u64,
    coeffs: Vec<u64>,
}

impl GroupAlgebraElement {
    pub fn zero(group: &AbelianGroup, modulus: u64) -> Self {
        Self { group: group.clone(), modulus, coeffs: vec![0; group.order() as usize] }
    }

    pub fn one(group: &AbelianGroup, modulus: u64) -> Self {
        let mut e = Self::zero(group, modulus);
        e.coeffs[0] = 1 % modulus;
        e
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coefficient(&self, g: &[u64]) -> u64 {
        self.coeffs[self.group.index_of(g)]
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a + b) % self.modulus).collect();
        Self { coeffs, ..self.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let elems = self.group.elements();
        let mut out = Self::zero(&self.group, self.modulus);
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if *b == 0 {
                    continue;
                }
                let k = self.group.index_of(&self.group.add(&elems[i], &elems[j]));
                out.coeffs[k] = (out.coeffs[k] + mulmod(*a, *b, self.modulus)) % self.modulus;
            }
        }
        out
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A root of unity of order `order` in Z/ℓ^N[x]/(h), h of degree ord_order(ℓ), via a Teichmüller lift.
fn teichmuller_root(ell: u64, order: u64, precision: u32) -> Result<CoefElement, CharError> {
    let mut f = 1u32;
    let mut acc = ell % order;
    while acc != 1 % order {
        acc = mulmod(acc, ell, order);
        f += 1;
    }
    let q = ell.checked_pow(f).filter(|q| *q < 1 << 32).ok_or(CharError::FieldTooLarge { degree: f })?;
    let h: Vec<i64> = find_irreducible(ell, f as usize).iter().map(|&c| c as i64).collect();
    let residue = CoefRing::new(PrecisionContext::new(ell, 1).expect("prime"), &h).expect("irreducible");
    let lifted = CoefRing::new(PrecisionContext::new(ell, precision).map_err(|_| CharError::FieldTooLarge { degree: f })?, &h)
        .expect("irreducible");
    let factors = prime_factors(q - 1);
    let primitive = (1..q)
        .map(|code| {
            let mut c = code;
            let coeffs: Vec<u64> = (0..f)
                .map(|_| {
                    let d = c % ell;
                    c /= ell;
                    d
                })
                .collect();
            residue.from_raw(coeffs)
        })
        .find(|a| factors.iter().all(|&p| !a.pow((q - 1) / p).is_one()))
        .expect("F_q^* is cyclic");
    let root = primitive.pow((q - 1) / order);
    let mut t = lifted.from_raw(root.coeffs().to_vec());
    for _ in 1..precision {
        t = t.pow(q);
    }
    debug_assert!(t.pow(order).is_one());
    Ok(t)
}

/// e_φ = (1/|Δ|) Σ_g Tr_φ(g^{-1}) g with Tr_φ the sum over the orbit, in (Z/ℓ^N)[Δ].
pub fn idempotent(table: &CharacterTable, idx: usize, precision: u32) -> Result<GroupAlgebraElement, CharError> {
    let g = table.group();
    let dd = g.exponent();
    let zeta = teichmuller_root(table.ell(), dd, precision)?;
    let ring = zeta.ring().clone();
    let powers: Vec<CoefElement> = std::iter::successors(Some(ring.one()), |p| Some(p * &zeta)).take(dd as usize).collect();
    let modulus = ring.modulus();
    let inv_order = invmod(g.order() % modulus, modulus).expect("order prime to ell");
    let phi = table.irreducible(idx);
    let mut e = GroupAlgebraElement::zero(g, modulus);
    for elem in g.elements() {
        let inv = g.neg(&elem);
        let mut tr = ring.zero();
        for m in phi.members() {
            tr = &tr + &powers[g.pairing(m, &inv) as usize];
        }
        assert!(tr.coeffs()[1..].iter().all(|&c| c == 0), "orbit trace must lie in Z/ell^N");
        e.coeffs[g.index_of(&elem)] = mulmod(tr.coeffs()[0], inv_order, modulus);
    }
    Ok(e)
}
