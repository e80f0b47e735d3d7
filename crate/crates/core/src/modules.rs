//! Λ_φ-modules given by elementary data or by relation matrices, and the orders of
//! their finite quotients X/∇_{n,k}X with ∇_{n,k} = (ℓ^{n+k}, ω_n).

use std::sync::Arc;

use thiserror::Error;

use crate::iwasawa::{divmod_monic, DistinguishedPoly, IwasawaError, LambdaAlgebra, LambdaElement};
use crate::padic::CoefRing;
use crate::snf::{left_kernel, snf_run, LocalMatrix, PivotRule, SnfLocal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Iwasawa(#[from] IwasawaError),
    #[error("f_list is not a divisibility chain: entry {index} does not divide entry {}", index - 1)]
    NotAChain { index: usize },
    #[error("m_list must be non-increasing with entries >= 1")]
    BadExponents,
    #[error("relation row {row} has {got} entries, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },
    #[error("entry degree {degree} exceeds the degree cap {cap}")]
    EntryDegree { degree: usize, cap: usize },
    #[error("precision {have} is too low, at least {need} required")]
    PrecisionTooLow { have: u32, need: u32 },
    #[error("module has free summands; boundary submodules need a torsion module")]
    NotTorsion,
    #[error("summand Λ/ℓ^{m} is not finite modulo ℓ^N at level {n}; need n + 1 >= {m}")]
    UnboundedSummand { m: u32, n: u32 },
    #[error("parameter must be at least 1")]
    ZeroParameter,
    #[error("operands are defined over different rings")]
    RingMismatch,
}

/// Λ_φ^ρ ⊕ ⊕ Λ_φ/f_i ⊕ ⊕ Λ_φ/ℓ^{m_j}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryModuleSpec {
    algebra: LambdaAlgebra,
    rho: usize,
    f_list: Vec<DistinguishedPoly>,
    m_list: Vec<u32>,
}

impl ElementaryModuleSpec {
    /// Rejects f_list that is not a divisibility chain (f_{i+1} | f_i) and m_list that is not non-increasing.
    pub fn new(
        algebra: LambdaAlgebra,
        rho: usize,
        f_list: Vec<DistinguishedPoly>,
        m_list: Vec<u32>,
    ) -> Result<Self, ModuleError> {
        for i in 1..f_list.len() {
            let (_, r) = divmod_monic(f_list[i - 1].poly(), f_list[i].poly());
            if !r.is_zero() {
                return Err(ModuleError::NotAChain { index: i });
            }
        }
        if m_list.contains(&0) || m_list.windows(2).any(|w| w[1] > w[0]) {
            return Err(ModuleError::BadExponents);
        }
        Ok(Self { algebra, rho, f_list, m_list })
    }

    pub fn algebra(&self) -> &LambdaAlgebra {
        &self.algebra
    }

    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn f_list(&self) -> &[DistinguishedPoly] {
        &self.f_list
    }

    pub fn m_list(&self) -> &[u32] {
        &self.m_list
    }

    pub fn deg_phi(&self) -> usize {
        self.algebra.ring().degree()
    }
}

/// A Λ_φ-module with `generators` generators and one row per relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentedModule {
    algebra: LambdaAlgebra,
    generators: usize,
    relations: Vec<Vec<LambdaElement>>,
}

impl PresentedModule {
    pub fn new(
        algebra: LambdaAlgebra,
        generators: usize,
        relations: Vec<Vec<LambdaElement>>,
    ) -> Result<Self, ModuleError> {
        for (row, rel) in relations.iter().enumerate() {
            if rel.len() != generators {
                return Err(ModuleError::RowLength { row, got: rel.len(), expected: generators });
            }
            check_entries(&algebra, rel)?;
        }
        Ok(Self { algebra, generators, relations })
    }

    /// The zero module.
    pub fn zero(algebra: LambdaAlgebra) -> Self {
        Self { algebra, generators: 0, relations: Vec::new() }
    }

    pub fn algebra(&self) -> &LambdaAlgebra {
        &self.algebra
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn relations(&self) -> &[Vec<LambdaElement>] {
        &self.relations
    }

    pub fn add_relation(&mut self, row: Vec<LambdaElement>) -> Result<(), ModuleError> {
        if row.len() != self.generators {
            return Err(ModuleError::RowLength {
                row: self.relations.len(),
                got: row.len(),
                expected: self.generators,
            });
        }
        check_entries(&self.algebra, &row)?;
        self.relations.push(row);
        Ok(())
    }

    /// X ⊕ Y with block-diagonal relations.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, ModuleError> {
        if self.algebra.ring() != other.algebra.ring() {
            return Err(ModuleError::RingMismatch);
        }
        let ring = self.algebra.ring();
        let b = self.generators + other.generators;
        let zero = LambdaElement::zero(ring);
        let mut relations = Vec::with_capacity(self.relations.len() + other.relations.len());
        for rel in &self.relations {
            let mut row = rel.clone();
            row.resize(b, zero.clone());
            relations.push(row);
        }
        for rel in &other.relations {
            let mut row = vec![zero.clone(); self.generators];
            row.extend(rel.iter().cloned());
            relations.push(row);
        }
        let algebra = if self.algebra.degree_cap() >= other.algebra.degree_cap() {
            self.algebra.clone()
        } else {
            other.algebra.clone()
        };
        Ok(Self { algebra, generators: b, relations })
    }
}

fn check_entries(algebra: &LambdaAlgebra, row: &[LambdaElement]) -> Result<(), ModuleError> {
    for e in row {
        if e.ring() != algebra.ring() {
            return Err(ModuleError::RingMismatch);
        }
        if let Some(d) = e.degree() {
            if d > algebra.degree_cap() {
                return Err(ModuleError::EntryDegree { degree: d, cap: algebra.degree_cap() });
            }
        }
    }
    Ok(())
}

/// Block-diagonal presentation: free generators first, then Λ/f_i, then Λ/ℓ^{m_j}.
pub fn elementary_to_presentation(spec: &ElementaryModuleSpec) -> PresentedModule {
    let ring = spec.algebra.ring();
    let b = spec.rho + spec.f_list.len() + spec.m_list.len();
    let zero = LambdaElement::zero(ring);
    let ell = ring.ell() as i64;
    let mut relations = Vec::new();
    let torsion = spec
        .f_list
        .iter()
        .map(|f| f.poly().clone())
        .chain(spec.m_list.iter().map(|&m| LambdaElement::from_ints(ring, &[ell.pow(m)])));
    for (i, entry) in torsion.enumerate() {
        let mut row = vec![zero.clone(); b];
        row[spec.rho + i] = entry;
        relations.push(row);
    }
    PresentedModule { algebra: spec.algebra.clone(), generators: b, relations }
}

/// |X/∇_{n,k}X| = ℓ^{order_exponent}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteQuotientReport {
    pub n: u32,
    pub k: u32,
    pub order_exponent: u64,
    /// Exponents of the nontrivial cyclic factors, ascending.
    pub elementary_divisor_valuations: Vec<u32>,
    pub precision_used: u32,
}

/// The quotient (Z_φ/ℓ^p)[T]/(g) for a monic g, as a free Z/ℓ^p-module with basis T^j x^i.
struct MonicQuotient {
    ring: Arc<CoefRing>,
    /// Coefficients of g below its leading term.
    lower: Vec<Vec<u64>>,
}

impl MonicQuotient {
    fn new(ring: &Arc<CoefRing>, g: &LambdaElement) -> Self {
        let g = g.reduce_to(ring);
        let deg = g.degree().expect("monic modulus");
        let lower = (0..deg).map(|i| g.coeff(i).coeffs().to_vec()).collect();
        Self { ring: Arc::clone(ring), lower }
    }

    fn t_degree(&self) -> usize {
        self.lower.len()
    }

    fn rank(&self) -> usize {
        self.t_degree() * self.ring.degree()
    }

    fn reduce(&self, e: &LambdaElement) -> Vec<Vec<u64>> {
        let e = e.reduce_to(&self.ring);
        let mut g = self.lower.iter().map(|c| self.ring.from_raw(c.clone())).collect::<Vec<_>>();
        g.push(self.ring.one());
        let (_, r) = divmod_monic(&e, &LambdaElement::new(&self.ring, g));
        let mut out: Vec<Vec<u64>> = r.to_raw();
        out.resize(self.t_degree(), vec![0; self.ring.degree()]);
        out
    }

    fn mul_t(&self, v: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let n = self.t_degree();
        let d = self.ring.degree();
        let top = v[n - 1].clone();
        let mut out = Vec::with_capacity(n);
        out.push(vec![0; d]);
        out.extend(v[..n - 1].iter().cloned());
        if !CoefRing::is_zero_raw(&top) {
            for (o, g) in out.iter_mut().zip(&self.lower) {
                *o = self.ring.sub_raw(o, &self.ring.mul_raw(&top, g));
            }
        }
        out
    }

    fn mul(&self, a: &[Vec<u64>], b: &[Vec<u64>]) -> Vec<Vec<u64>> {
        let d = self.ring.degree();
        let mut acc = vec![vec![0u64; d]; self.t_degree()];
        let mut shifted = a.to_vec();
        for bj in b {
            if !CoefRing::is_zero_raw(bj) {
                for (x, s) in acc.iter_mut().zip(&shifted) {
                    *x = self.ring.add_raw(x, &self.ring.mul_raw(s, bj));
                }
            }
            shifted = self.mul_t(&shifted);
        }
        acc
    }

    /// Rows u·v for the basis elements u = T^j x^i, flattened as index j·d + i.
    fn multiplication_rows(&self, v: &[Vec<u64>]) -> Vec<Vec<Vec<u64>>> {
        let d = self.ring.degree();
        let mut out = Vec::with_capacity(self.rank());
        let mut t_pow = v.to_vec();
        for _ in 0..self.t_degree() {
            let mut x_pow = t_pow.clone();
            for _ in 0..d {
                out.push(x_pow.clone());
                x_pow = x_pow.iter().map(|c| self.ring.mul_x_raw(c)).collect();
            }
            t_pow = self.mul_t(&t_pow);
        }
        out
    }
}

fn flatten(v: &[Vec<u64>]) -> impl Iterator<Item = u64> + '_ {
    v.iter().flat_map(|c| c.iter().copied())
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Cokernel of the relation rows inside (Z_φ/ℓ^p)[T]/(ω_n)^b. Generators never linked by a relation
/// are handled without building a matrix; every linked block goes through the same SNF.
fn cokernel_over_level(
    algebra: &LambdaAlgebra,
    generators: usize,
    rows: &[Vec<LambdaElement>],
    n: u32,
    precision: u32,
    rule: PivotRule,
) -> Result<(u64, Vec<u32>), ModuleError> {
    let have = algebra.ring().precision();
    if precision > have {
        return Err(ModuleError::PrecisionTooLow { have, need: precision });
    }
    let level_alg = algebra.with_precision(precision)?;
    let omega = level_alg.omega(n)?;
    let quot = MonicQuotient::new(level_alg.ring(), &omega);
    let dim = quot.rank();
    let ell = algebra.ell();

    let mut uf = UnionFind::new(generators);
    let mut reduced: Vec<Vec<Option<Vec<Vec<u64>>>>> = Vec::with_capacity(rows.len());
    for row in rows {
        let red: Vec<Option<Vec<Vec<u64>>>> = row
            .iter()
            .map(|e| {
                let r = quot.reduce(e);
                r.iter().any(|c| !CoefRing::is_zero_raw(c)).then_some(r)
            })
            .collect();
        let support: Vec<usize> = (0..generators).filter(|&g| red[g].is_some()).collect();
        for w in support.windows(2) {
            uf.union(w[0], w[1]);
        }
        reduced.push(red);
    }

    let mut factors: Vec<u32> = Vec::new();
    let mut roots: Vec<usize> = (0..generators).map(|g| uf.find(g)).collect();
    roots.sort_unstable();
    roots.dedup();
    for root in roots {
        let block: Vec<usize> = (0..generators).filter(|&g| uf.find(g) == root).collect();
        let block_rows: Vec<&Vec<Option<Vec<Vec<u64>>>>> = reduced
            .iter()
            .filter(|red| block.iter().any(|&g| red[g].is_some()))
            .collect();
        if block_rows.is_empty() {
            factors.extend(std::iter::repeat_n(precision, dim * block.len()));
            continue;
        }
        let cols = dim * block.len();
        let mut mat = LocalMatrix::zeros(ell, precision, 0, cols);
        for red in block_rows {
            let per_gen: Vec<Option<Vec<Vec<Vec<u64>>>>> = block
                .iter()
                .map(|&g| red[g].as_ref().map(|v| quot.multiplication_rows(v)))
                .collect();
            for basis in 0..dim {
                let mut line = vec![0u64; cols];
                for (pos, rows_g) in per_gen.iter().enumerate() {
                    if let Some(rows_g) = rows_g {
                        for (off, val) in flatten(&rows_g[basis]).enumerate() {
                            line[pos * dim + off] = val;
                        }
                    }
                }
                mat.push_row(&line);
            }
        }
        let snf: SnfLocal = snf_run(mat, false, rule).result;
        factors.extend(snf.cokernel_factors());
    }
    factors.sort_unstable();
    let x = factors.iter().map(|&a| a as u64).sum();
    Ok((x, factors))
}

fn report(n: u32, k: u32, precision: u32, (x, factors): (u64, Vec<u32>)) -> FiniteQuotientReport {
    FiniteQuotientReport { n, k, order_exponent: x, elementary_divisor_valuations: factors, precision_used: precision }
}

/// Order of X/∇_nX, ∇_n = (ℓ^{n+1}, ω_n).
pub fn quotient_order(x: &PresentedModule, n: u32) -> Result<FiniteQuotientReport, ModuleError> {
    quotient_order_nk(x, n, 1)
}

/// Order of X/∇_{n,k}X, ∇_{n,k} = (ℓ^{n+k}, ω_n).
pub fn quotient_order_nk(x: &PresentedModule, n: u32, k: u32) -> Result<FiniteQuotientReport, ModuleError> {
    if k == 0 {
        return Err(ModuleError::ZeroParameter);
    }
    let p = n + k;
    let res = cokernel_over_level(&x.algebra, x.generators, &x.relations, n, p, PivotRule::MinValuation)?;
    Ok(report(n, k, p, res))
}

/// Same computation through a deliberately broken pivot rule, for the self-test fault injection.
pub(crate) fn quotient_order_faulty(x: &PresentedModule, n: u32) -> Result<FiniteQuotientReport, ModuleError> {
    let res = cokernel_over_level(&x.algebra, x.generators, &x.relations, n, n + 1, PivotRule::FirstNonzero)?;
    Ok(report(n, 1, n + 1, res))
}

/// Order of X/(∇_nX + ν(n,m)·Y) for Y generated by the given coordinate vectors.
pub fn quotient_order_with_y(
    x: &PresentedModule,
    y_gens: &[Vec<LambdaElement>],
    m: u32,
    n: u32,
) -> Result<FiniteQuotientReport, ModuleError> {
    let nu = x.algebra.nu(n, m)?;
    let mut rows = x.relations.clone();
    for (i, g) in y_gens.iter().enumerate() {
        if g.len() != x.generators {
            return Err(ModuleError::RowLength { row: x.relations.len() + i, got: g.len(), expected: x.generators });
        }
        check_entries(&x.algebra, g)?;
        // Products are reduced modulo ω_n later, so the cap only bounds the factors.
        rows.push(g.iter().map(|e| e.mul_unchecked(&nu)).collect());
    }
    let p = n + 1;
    let res = cokernel_over_level(&x.algebra, x.generators, &rows, n, p, PivotRule::MinValuation)?;
    Ok(report(n, 1, p, res))
}

/// Closed forms: free summands give (n+1)ℓ^n·deg φ, Λ/ℓ^m gives min(m, n+1)·ℓ^n·deg φ,
/// and Λ/f only contributes its slope deg f·deg φ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedFormOrder {
    /// Sum of the exactly known contributions (free and ℓ^m summands).
    pub x: u64,
    /// True when no Λ/f summand is present, so `x` is the full order exponent.
    pub exact: bool,
    /// Σ deg f_i · deg φ over the Λ/f summands.
    pub torsion_slope: u64,
}

pub fn closed_form_order(spec: &ElementaryModuleSpec, n: u32) -> ClosedFormOrder {
    let ell = spec.algebra.ell();
    let d = spec.deg_phi() as u64;
    let ln = ell.pow(n);
    let free = spec.rho as u64 * (n as u64 + 1) * ln * d;
    let mu: u64 = spec.m_list.iter().map(|&m| m.min(n + 1) as u64 * ln * d).sum();
    let slope: u64 = spec.f_list.iter().map(|f| f.degree() as u64 * d).sum();
    ClosedFormOrder { x: free + mu, exact: spec.f_list.is_empty(), torsion_slope: slope }
}

/// X ⊕ Λ/(ℓ^c, T^d): a finite summand of order ℓ^{c·d·deg φ}.
pub fn perturb_by_finite(x: &PresentedModule, c: u32, d: u32) -> Result<PresentedModule, ModuleError> {
    if c == 0 || d == 0 {
        return Err(ModuleError::ZeroParameter);
    }
    let ring = x.algebra.ring();
    let ell = ring.ell() as i64;
    let finite = PresentedModule::new(
        x.algebra.clone(),
        1,
        vec![
            vec![LambdaElement::from_ints(ring, &[ell.pow(c)])],
            vec![LambdaElement::monomial(ring, d as usize)],
        ],
    )?;
    x.direct_sum(&finite)
}

/// A Z/ℓ^N-submodule of (Z/ℓ^N)^rank given by generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySubmodule {
    pub ell: u64,
    pub precision: u32,
    pub ambient_rank: usize,
    pub generators: Vec<Vec<u64>>,
}

impl BoundarySubmodule {
    fn matrix(&self, extra: &[Vec<u64>]) -> LocalMatrix {
        let mut m = LocalMatrix::zeros(self.ell, self.precision, 0, self.ambient_rank);
        for g in self.generators.iter().chain(extra) {
            m.push_row(g);
        }
        m
    }

    /// log_ℓ of the submodule's order.
    pub fn order_exponent(&self) -> u64 {
        if self.generators.is_empty() || self.ambient_rank == 0 {
            return 0;
        }
        snf_run(self.matrix(&[]), false, PivotRule::MinValuation).result.image_exponent()
    }

    pub fn is_zero(&self) -> bool {
        self.generators.iter().all(|g| g.iter().all(|&v| v == 0))
    }

    pub fn contains(&self, other: &Self) -> bool {
        if other.is_zero() {
            return true;
        }
        let joined = snf_run(self.matrix(&other.generators), false, PivotRule::MinValuation).result;
        joined.image_exponent() == self.order_exponent()
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.contains(other) && other.contains(self)
    }

    /// ℓ · self.
    pub fn times_ell(&self) -> Self {
        let m = self.ell.pow(self.precision);
        let generators = self.generators.iter().map(|g| g.iter().map(|&v| v * self.ell % m).collect()).collect();
        Self { generators, ..self.clone() }
    }

    /// Brute-force membership, exposed for small oracle checks.
    pub fn elements(&self) -> std::collections::BTreeSet<Vec<u64>> {
        let m = self.ell.pow(self.precision);
        let mut set = std::collections::BTreeSet::new();
        set.insert(vec![0u64; self.ambient_rank]);
        let mut frontier: Vec<Vec<u64>> = vec![vec![0u64; self.ambient_rank]];
        while let Some(v) = frontier.pop() {
            for g in &self.generators {
                let w: Vec<u64> = v.iter().zip(g).map(|(a, b)| (a + b) % m).collect();
                if set.insert(w.clone()) {
                    frontier.push(w);
                }
            }
        }
        set
    }
}

/// ∂^nE = ℓ^{n+1}E ∩ ω_nE inside E/ℓ^N E for a torsion elementary module E.
/// Summands Λ/ℓ^m need n + 1 >= m, where they contribute nothing.
pub fn boundary_submodule(
    spec: &ElementaryModuleSpec,
    n: u32,
    precision: u32,
) -> Result<BoundarySubmodule, ModuleError> {
    if spec.rho > 0 {
        return Err(ModuleError::NotTorsion);
    }
    if precision < n + 2 {
        return Err(ModuleError::PrecisionTooLow { have: precision, need: n + 2 });
    }
    let have = spec.algebra.ring().precision();
    if precision > have {
        return Err(ModuleError::PrecisionTooLow { have, need: precision });
    }
    if let Some(&m) = spec.m_list.iter().find(|&&m| n + 1 < m) {
        return Err(ModuleError::UnboundedSummand { m, n });
    }
    let alg = spec.algebra.with_precision(precision)?;
    let ring = alg.ring();
    let ell = ring.ell();
    let omega = alg.omega(n)?;
    let blocks: Vec<MonicQuotient> = spec.f_list.iter().map(|f| MonicQuotient::new(ring, f.poly())).collect();
    let rank: usize = blocks.iter().map(MonicQuotient::rank).sum();
    if rank == 0 {
        return Ok(BoundarySubmodule { ell, precision, ambient_rank: 0, generators: Vec::new() });
    }
    // W: matrix of multiplication by ω_n on E/ℓ^N E (block diagonal).
    let mut w = LocalMatrix::zeros(ell, precision, 0, rank);
    let mut offset = 0;
    for q in &blocks {
        let om = q.reduce(&omega);
        for r in q.multiplication_rows(&om) {
            let mut line = vec![0u64; rank];
            for (i, v) in flatten(&r).enumerate() {
                line[offset + i] = v;
            }
            w.push_row(&line);
        }
        offset += q.rank();
    }
    // y·W ∈ ℓ^{n+1}E  ⇔  y·W ≡ 0 mod ℓ^{n+1}; solve over Z/ℓ^{n+1} and lift.
    let low = n + 1;
    let low_mod = ell.pow(low);
    let mut w_low = LocalMatrix::zeros(ell, low, 0, rank);
    for i in 0..w.rows() {
        let row: Vec<u64> = w.row(i).iter().map(|v| v % low_mod).collect();
        w_low.push_row(&row);
    }
    let mut ys = left_kernel(&w_low);
    for i in 0..rank {
        let mut e = vec![0u64; rank];
        e[i] = low_mod;
        ys.push(e);
    }
    let modulus = ell.pow(precision);
    let generators: Vec<Vec<u64>> = ys
        .iter()
        .map(|y| {
            (0..rank)
                .map(|j| {
                    (0..rank).fold(0u64, |acc, i| {
                        (acc + crate::padic::mulmod(y[i] % modulus, w.get(i, j), modulus)) % modulus
                    })
                })
                .collect()
        })
        .filter(|g: &Vec<u64>| g.iter().any(|&v| v != 0))
        .collect();
    Ok(BoundarySubmodule { ell, precision, ambient_rank: rank, generators })
}

/// Multiplication in (Z_φ/ℓ^p)[T]/(ω_n) exposed for tests of the regular representation.
pub fn level_product(
    algebra: &LambdaAlgebra,
    n: u32,
    precision: u32,
    a: &LambdaElement,
    b: &LambdaElement,
) -> Result<Vec<Vec<u64>>, ModuleError> {
    let alg = algebra.with_precision(precision)?;
    let q = MonicQuotient::new(alg.ring(), &alg.omega(n)?);
    Ok(q.mul(&q.reduce(a), &q.reduce(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrecisionContext;

    fn algebra(ell: u64, prec: u32) -> LambdaAlgebra {
        LambdaAlgebra::for_levels(CoefRing::base(PrecisionContext::new(ell, prec).unwrap()), prec)
    }

    fn dist(a: &LambdaAlgebra, c: &[i64]) -> DistinguishedPoly {
        DistinguishedPoly::new(LambdaElement::from_ints(a.ring(), c)).unwrap()
    }

    #[test]
    fn presentation_shapes() {
        let a = algebra(3, 6);
        let free = ElementaryModuleSpec::new(a.clone(), 1, vec![], vec![]).unwrap();
        let p = elementary_to_presentation(&free);
        assert_eq!((p.generators(), p.relations().len()), (1, 0));

        let tors = ElementaryModuleSpec::new(a.clone(), 0, vec![dist(&a, &[3, 0, 1])], vec![2]).unwrap();
        let p = elementary_to_presentation(&tors);
        assert_eq!(p.generators(), 2);
        assert_eq!(p.relations()[0][0], LambdaElement::from_ints(a.ring(), &[3, 0, 1]));
        assert_eq!(p.relations()[1][1], LambdaElement::from_ints(a.ring(), &[9]));
        assert!(p.relations()[0][1].is_zero() && p.relations()[1][0].is_zero());

        let mixed = ElementaryModuleSpec::new(a.clone(), 1, vec![dist(&a, &[0, 1])], vec![1]).unwrap();
        let p = elementary_to_presentation(&mixed);
        assert_eq!(p.generators(), 3);
        let t = LambdaElement::from_ints(a.ring(), &[0, 1]);
        let three = LambdaElement::from_ints(a.ring(), &[3]);
        let z = LambdaElement::zero(a.ring());
        assert_eq!(p.relations()[0], vec![z.clone(), t, z.clone()]);
        assert_eq!(p.relations()[1], vec![z.clone(), z, three]);
    }

    #[test]
    fn chain_and_exponent_validation() {
        let a = algebra(3, 6);
        let bad = ElementaryModuleSpec::new(a.clone(), 0, vec![dist(&a, &[3, 1]), dist(&a, &[3, 0, 1])], vec![]);
        assert_eq!(bad, Err(ModuleError::NotAChain { index: 1 }));
        let bad = ElementaryModuleSpec::new(a.clone(), 0, vec![], vec![1, 2]);
        assert_eq!(bad, Err(ModuleError::BadExponents));
    }

    #[test]
    fn closed_form_examples() {
        let ring = CoefRing::new(PrecisionContext::new(2, 6).unwrap(), &[1, 1, 1]).unwrap();
        let a2 = LambdaAlgebra::for_levels(ring, 5);
        let free = ElementaryModuleSpec::new(a2, 1, vec![], vec![]).unwrap();
        assert_eq!(closed_form_order(&free, 2), ClosedFormOrder { x: 24, exact: true, torsion_slope: 0 });
        let a3 = algebra(3, 6);
        let mu = ElementaryModuleSpec::new(a3.clone(), 0, vec![], vec![3]).unwrap();
        assert_eq!(closed_form_order(&mu, 4).x, 243);
        let lam = ElementaryModuleSpec::new(a3.clone(), 0, vec![dist(&a3, &[3, 0, 1])], vec![]).unwrap();
        let c = closed_form_order(&lam, 3);
        assert_eq!((c.exact, c.torsion_slope), (false, 2));
    }

    #[test]
    fn perturbation_adds_one_generator() {
        let a = algebra(3, 6);
        let x = elementary_to_presentation(&ElementaryModuleSpec::new(a.clone(), 1, vec![], vec![]).unwrap());
        let y = perturb_by_finite(&x, 1, 1).unwrap();
        assert_eq!(y.generators(), 2);
        assert_eq!(y.relations().len(), 2);
        assert_eq!(y.relations()[0][1], LambdaElement::from_ints(a.ring(), &[3]));
        assert_eq!(y.relations()[1][1], LambdaElement::from_ints(a.ring(), &[0, 1]));
    }

    #[test]
    fn boundary_of_annihilated_modules_is_zero() {
        let a = algebra(3, 6);
        let e = ElementaryModuleSpec::new(a.clone(), 0, vec![], vec![1]).unwrap();
        for n in 0..3 {
            assert!(boundary_submodule(&e, n, 5).unwrap().is_zero());
        }
        let e = ElementaryModuleSpec::new(a.clone(), 0, vec![dist(&a, &[0, 1])], vec![]).unwrap();
        for n in 0..3 {
            assert!(boundary_submodule(&e, n, 5).unwrap().is_zero());
        }
        assert_eq!(
            boundary_submodule(&e, 3, 4),
            Err(ModuleError::PrecisionTooLow { have: 4, need: 5 })
        );
    }
}
