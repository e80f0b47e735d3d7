//! Parameters ρ_S^T, μ_S^T, λ_S^T of a tower from place data and referent characters,
//! and the duality checks relating (S, T) to (T, S).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::chars::{imag_part, mirror, real_part, CharError, CharacterTable, MirrorContext, VirtualCharacter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error(transparent)]
    Char(#[from] CharError),
    #[error("unknown place {0:?}")]
    UnknownPlace(String),
    #[error("place {0:?} is listed twice")]
    DuplicatePlace(String),
    #[error("disjointness violated: place {0:?} is in both S and T")]
    NotDisjoint(String),
    #[error("place {0:?}: local_degree must be given exactly for wild places and be positive")]
    LocalDegree(String),
    #[error("place {0:?}: multiplicity must be at least 1")]
    ZeroMultiplicity(String),
    #[error("referent for {{{}}} is missing", .0.join(","))]
    MissingReferent(Vec<String>),
    #[error("referent for {{{}}} names a place that is not wild", .0.join(","))]
    ReferentNotWild(Vec<String>),
    #[error("lambda_plus of referent {{{}}} has an imaginary part", .0.join(","))]
    ReferentNotReal(Vec<String>),
    #[error("this formula holds under the Leopoldt conjecture; pass the assumption flag")]
    LeopoldtNotAssumed,
    #[error("S ∪ T must contain every wild place")]
    PreconditionSUnionT,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceSpec {
    pub id: String,
    /// Generators of the decomposition subgroup Δ_p.
    pub subgroup: Vec<Vec<u64>>,
    pub wild: bool,
    pub local_degree: Option<u64>,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TowerInput {
    table: Arc<CharacterTable>,
    ctx: MirrorContext,
    f_degree: u64,
    places: Vec<PlaceSpec>,
    s: BTreeSet<String>,
    t: BTreeSet<String>,
}

pub type PlaceSet = BTreeSet<String>;

impl TowerInput {
    pub fn new(
        table: Arc<CharacterTable>,
        ctx: MirrorContext,
        f_degree: u64,
        places: Vec<PlaceSpec>,
        s: PlaceSet,
        t: PlaceSet,
    ) -> Result<Self, ArithError> {
        if table.ell() == 2 {
            return Err(CharError::EllIsTwo.into());
        }
        let mut seen = BTreeSet::new();
        for p in &places {
            if !seen.insert(p.id.clone()) {
                return Err(ArithError::DuplicatePlace(p.id.clone()));
            }
            if p.wild != p.local_degree.is_some() || p.local_degree == Some(0) {
                return Err(ArithError::LocalDegree(p.id.clone()));
            }
            if p.multiplicity == 0 {
                return Err(ArithError::ZeroMultiplicity(p.id.clone()));
            }
            table.induce_unit(&p.subgroup)?;
        }
        let input = Self { table, ctx, f_degree, places, s: BTreeSet::new(), t: BTreeSet::new() };
        input.with_sets(s, t)
    }

    /// Same places with a different choice of S and T.
    pub fn with_sets(&self, s: PlaceSet, t: PlaceSet) -> Result<Self, ArithError> {
        for id in s.iter().chain(&t) {
            self.place(id)?;
        }
        if let Some(id) = s.intersection(&t).next() {
            return Err(ArithError::NotDisjoint(id.clone()));
        }
        Ok(Self { s, t, ..self.clone() })
    }

    /// (T, S).
    pub fn swapped(&self) -> Self {
        Self { s: self.t.clone(), t: self.s.clone(), ..self.clone() }
    }

    pub fn table(&self) -> &CharacterTable {
        &self.table
    }

    pub fn ctx(&self) -> &MirrorContext {
        &self.ctx
    }

    pub fn f_degree(&self) -> u64 {
        self.f_degree
    }

    pub fn places(&self) -> &[PlaceSpec] {
        &self.places
    }

    pub fn s(&self) -> &PlaceSet {
        &self.s
    }

    pub fn t(&self) -> &PlaceSet {
        &self.t
    }

    pub fn place(&self, id: &str) -> Result<&PlaceSpec, ArithError> {
        self.places.iter().find(|p| p.id == id).ok_or_else(|| ArithError::UnknownPlace(id.to_string()))
    }

    /// L, the wild places.
    pub fn wild(&self) -> PlaceSet {
        self.places.iter().filter(|p| p.wild).map(|p| p.id.clone()).collect()
    }

    pub fn wild_part(&self, set: &PlaceSet) -> PlaceSet {
        set.iter().filter(|id| self.place(id).is_ok_and(|p| p.wild)).cloned().collect()
    }

    pub fn tame_part(&self, set: &PlaceSet) -> PlaceSet {
        set.iter().filter(|id| self.place(id).is_ok_and(|p| !p.wild)).cloned().collect()
    }

    /// L ∖ T^ℓ.
    pub fn wild_complement(&self, set: &PlaceSet) -> PlaceSet {
        self.wild().difference(set).cloned().collect()
    }

    /// Non-fatal inconsistencies of the place data.
    pub fn warnings(&self) -> Vec<String> {
        let total: u64 = self.places.iter().filter_map(|p| p.local_degree.map(|d| d * p.multiplicity)).sum();
        if total == self.f_degree {
            Vec::new()
        } else {
            vec![format!(
                "wild local degrees sum to {total}, not F_degree = {}; the place list may be partial",
                self.f_degree
            )]
        }
    }

    /// χ_U = Σ multiplicity · Ind(1 from Δ_p).
    pub fn chi_of_set(&self, set: &PlaceSet) -> Result<VirtualCharacter, ArithError> {
        let mut acc = self.table.zero();
        for id in set {
            let p = self.place(id)?;
            acc += &(p.multiplicity as i64 * &self.table.induce_unit(&p.subgroup)?);
        }
        Ok(acc)
    }

    /// δ_U = (Σ wild local degrees in U) · χ_reg.
    pub fn delta_of_set(&self, set: &PlaceSet) -> Result<VirtualCharacter, ArithError> {
        let mut deg = 0i64;
        for id in set {
            let p = self.place(id)?;
            deg += (p.local_degree.unwrap_or(0) * p.multiplicity) as i64;
        }
        Ok(deg * &self.table.regular())
    }

    /// χ_∞ = [F:Q] · χ_reg^⊕.
    pub fn chi_infinity(&self) -> VirtualCharacter {
        self.f_degree as i64 * &self.real(&self.table.regular())
    }

    pub fn mirror(&self, chi: &VirtualCharacter) -> VirtualCharacter {
        mirror(&self.table, chi, &self.ctx)
    }

    pub fn real(&self, chi: &VirtualCharacter) -> VirtualCharacter {
        real_part(&self.table, chi, &self.ctx).expect("ell is odd")
    }

    pub fn imag(&self, chi: &VirtualCharacter) -> VirtualCharacter {
        imag_part(&self.table, chi, &self.ctx).expect("ell is odd")
    }

    /// ρ_S^T = δ_T^⊖.
    pub fn rho_st(&self) -> VirtualCharacter {
        self.imag(&self.delta_of_set(&self.t).expect("validated"))
    }

    /// μ_S^T = μ^{T^ℓ⊕} + (μ^{T̄^ℓ⊕})*.
    pub fn mu_st(&self, refs: &ReferentTable) -> Result<VirtualCharacter, ArithError> {
        let tw = self.wild_part(&self.t);
        let own = refs.get(&tw)?;
        let other = refs.get(&self.wild_complement(&tw))?;
        Ok(&self.real(&own.mu) + &self.mirror(&self.real(&other.mu)))
    }

    /// λ_S^T = λ^{T^ℓ⊕} + [λ^{T̄^ℓ⊕} + (χ_{T̄^ℓ}^⊕ − 1)]* + χ_{T⁰}* − χ_{S^ℓ}^⊖, plus the unit
    /// character in the special case S = ∅, T = L.
    pub fn lambda_st(&self, refs: &ReferentTable, assume_leopoldt: bool) -> Result<LambdaOutcome, ArithError> {
        if !assume_leopoldt {
            return Err(ArithError::LeopoldtNotAssumed);
        }
        let tw = self.wild_part(&self.t);
        let tbar = self.wild_complement(&tw);
        let own = refs.get(&tw)?;
        let other = refs.get(&tbar)?;
        let unit = self.table.unit();
        let chi_tbar_plus = self.real(&self.chi_of_set(&tbar)?);
        let reflected = self.mirror(&(&(&other.lambda_plus + &chi_tbar_plus) - &unit));
        let tame = self.mirror(&self.chi_of_set(&self.tame_part(&self.t))?);
        let wild_s = self.imag(&self.chi_of_set(&self.wild_part(&self.s))?);
        let base = &(&(&own.lambda_plus + &reflected) + &tame) - &wild_s;
        let special_case = self.is_special();
        let lambda = if special_case { &base + &unit } else { base.clone() };
        let fmt = |s: &PlaceSet| format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(","));
        let mut notes = vec![
            "computed under the Leopoldt conjecture".to_string(),
            format!("referents used: lambda_plus of {} and of {}", fmt(&tw), fmt(&tbar)),
            format!("tame places of T: {}", fmt(&self.tame_part(&self.t))),
            format!("wild places of S: {}", fmt(&self.wild_part(&self.s))),
        ];
        if special_case {
            notes.push("special case S = {} and T = L: unit character added".into());
        }
        Ok(LambdaOutcome { base, lambda, special_case, notes })
    }

    /// S = ∅ and T = L exactly.
    pub fn is_special(&self) -> bool {
        self.s.is_empty() && self.t == self.wild()
    }

    pub fn compute(&self, refs: &ReferentTable, assume_leopoldt: bool) -> Result<ParamResult, ArithError> {
        let rho = self.rho_st();
        let mu = self.mu_st(refs)?;
        let lam = self.lambda_st(refs, assume_leopoldt)?;
        let mut notes = self.warnings();
        notes.extend(lam.notes);
        Ok(ParamResult { rho, mu, lambda: lam.lambda, lambda_base: lam.base, special_case: lam.special_case, notes })
    }

    fn covers_wild(&self) -> bool {
        self.wild().iter().all(|id| self.s.contains(id) || self.t.contains(id))
    }

    /// The three reflection identities between (S, T) and (T, S), on the reported λ.
    pub fn check_mirror_identities(
        &self,
        refs: &ReferentTable,
        assume_leopoldt: bool,
    ) -> Result<MirrorReport, ArithError> {
        if !self.covers_wild() {
            return Err(ArithError::PreconditionSUnionT);
        }
        let rev = self.swapped();
        let chi_inf = self.chi_infinity();
        let unit = self.table.unit();
        let delta_s = self.delta_of_set(&self.s)?;
        let delta_t = self.delta_of_set(&self.t)?;

        let rho_lhs = &(&(2 * &self.rho_st()) + &chi_inf) + &delta_s;
        let rho_rhs = self.mirror(&(&(&(2 * &rev.rho_st()) + &chi_inf) + &delta_t));

        let mu_lhs = self.mu_st(refs)?;
        let mu_rhs = self.mirror(&rev.mu_st(refs)?);

        let lam = self.lambda_st(refs, assume_leopoldt)?.lambda;
        let lam_rev = rev.lambda_st(refs, assume_leopoldt)?.lambda;
        let lam_lhs = &(&lam + &self.chi_of_set(&self.s)?) - &unit;
        let lam_rhs = self.mirror(&(&(&lam_rev + &rev.chi_of_set(&rev.s)?) - &unit));

        Ok(MirrorReport {
            rho_doubled: IdentityCheck::new(rho_lhs, rho_rhs),
            mu: IdentityCheck::new(mu_lhs, mu_rhs),
            lambda: IdentityCheck::new(lam_lhs, lam_rhs),
        })
    }

    /// λ^{Ū⊖} = [λ^{U⊕} + (χ_U^⊕ − 1)]* for every partition U ⊔ Ū = L present in the table.
    /// Without an explicit lambda_minus, the imaginary part is rebuilt from the real referents
    /// (S = ∅, no tame places), which satisfies the identity by construction.
    pub fn check_lambda_duality(&self, refs: &ReferentTable) -> Result<Vec<DualityCheck>, ArithError> {
        let unit = self.table.unit();
        let mut out = Vec::new();
        for u in refs.entries.keys() {
            let ubar = self.wild_complement(u);
            let Ok(own) = refs.get(u) else { continue };
            let Ok(other) = refs.get(&ubar) else { continue };
            let chi_u_plus = self.real(&self.chi_of_set(u)?);
            let expected = self.mirror(&(&(&own.lambda_plus + &chi_u_plus) - &unit));
            let (actual, reconstructed) = match &other.lambda_minus {
                Some(m) => (m.clone(), false),
                None => (self.imag(&expected), true),
            };
            out.push(DualityCheck {
                subset: u.clone(),
                complement: ubar,
                holds: actual == expected,
                expected,
                actual,
                reconstructed,
            });
        }
        Ok(out)
    }

    /// mirror(μ_S^T) + μ_S^T ≤ μ^L + μ^∅ componentwise.
    pub fn check_mu_bound(&self, refs: &ReferentTable) -> Result<InequalityCheck, ArithError> {
        let mu = self.mu_st(refs)?;
        let lhs = &self.mirror(&mu) + &mu;
        let rhs = &refs.get(&self.wild())?.mu + &refs.get(&BTreeSet::new())?.mu;
        let first_violation = (0..self.table.len())
            .find(|&i| lhs.coefficient(i) > rhs.coefficient(i))
            .map(|i| self.table.irreducible(i).name());
        Ok(InequalityCheck {
            holds: first_violation.is_none(),
            lhs,
            rhs,
            first_violation,
            reading: "left side read as the mirror image of mu_S^T".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaOutcome {
    /// Value before the special-case adjustment.
    pub base: VirtualCharacter,
    pub lambda: VirtualCharacter,
    pub special_case: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamResult {
    pub rho: VirtualCharacter,
    pub mu: VirtualCharacter,
    pub lambda: VirtualCharacter,
    pub lambda_base: VirtualCharacter,
    pub special_case: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub lhs: VirtualCharacter,
    pub rhs: VirtualCharacter,
    pub holds: bool,
}

impl IdentityCheck {
    fn new(lhs: VirtualCharacter, rhs: VirtualCharacter) -> Self {
        Self { holds: lhs == rhs, lhs, rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorReport {
    /// (i) multiplied by two.
    pub rho_doubled: IdentityCheck,
    pub mu: IdentityCheck,
    pub lambda: IdentityCheck,
}

impl MirrorReport {
    pub fn all_hold(&self) -> bool {
        self.rho_doubled.holds && self.mu.holds && self.lambda.holds
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualityCheck {
    pub subset: PlaceSet,
    pub complement: PlaceSet,
    pub expected: VirtualCharacter,
    pub actual: VirtualCharacter,
    pub holds: bool,
    pub reconstructed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InequalityCheck {
    pub lhs: VirtualCharacter,
    pub rhs: VirtualCharacter,
    pub holds: bool,
    pub first_violation: Option<String>,
    pub reading: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Referent {
    pub mu: VirtualCharacter,
    pub lambda_plus: VirtualCharacter,
    pub lambda_minus: Option<VirtualCharacter>,
}

/// Referent characters μ^U, λ^{U⊕} keyed by subsets U of the wild places.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReferentTable {
    entries: BTreeMap<PlaceSet, Referent>,
}

impl ReferentTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates that U is wild and that λ^{U⊕} is real.
    pub fn insert(&mut self, input: &TowerInput, subset: PlaceSet, referent: Referent) -> Result<(), ArithError> {
        let ids = || subset.iter().cloned().collect::<Vec<_>>();
        if !subset.is_subset(&input.wild()) {
            return Err(ArithError::ReferentNotWild(ids()));
        }
        if !input.imag(&referent.lambda_plus).is_zero() {
            return Err(ArithError::ReferentNotReal(ids()));
        }
        self.entries.insert(subset, referent);
        Ok(())
    }

    /// All-zero referents for every subset of L.
    pub fn zeros(input: &TowerInput) -> Self {
        let mut t = Self::new();
        for u in subsets(&input.wild()) {
            let z = input.table().zero();
            t.entries.insert(u, Referent { mu: z.clone(), lambda_plus: z, lambda_minus: None });
        }
        t
    }

    pub fn get(&self, subset: &PlaceSet) -> Result<&Referent, ArithError> {
        self.entries
            .get(subset)
            .ok_or_else(|| ArithError::MissingReferent(subset.iter().cloned().collect()))
    }

    pub fn entries(&self) -> &BTreeMap<PlaceSet, Referent> {
        &self.entries
    }
}

/// Every subset of a place set, in a fixed order.
pub fn subsets(set: &PlaceSet) -> Vec<PlaceSet> {
    let items: Vec<&String> = set.iter().collect();
    (0..1u64 << items.len())
        .map(|mask| {
            items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| (*s).clone()).collect()
        })
        .collect()
}
