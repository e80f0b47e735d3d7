//! Built-in oracle suites behind `iwasawa selfcheck`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::arith::{PlaceSet, PlaceSpec, ReferentTable, TowerInput};
use crate::chars::{enumerate_irreducibles, idempotent, mirror, split_real_imag, AbelianGroup, GroupAlgebraElement, MirrorContext};
use crate::fit::{fit_sequence, predict, ParamFit};
use crate::iwasawa::{divmod_monic, DistinguishedPoly, LambdaAlgebra, LambdaElement, WitnessOutcome};
use crate::modules::{
    closed_form_order, elementary_to_presentation, quotient_order, quotient_order_faulty, ElementaryModuleSpec,
    FiniteQuotientReport, ModuleError, PresentedModule,
};
use crate::padic::{check_irreducible, CoefRing, PrecisionContext};
use crate::snf::{snf_local, LocalMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelfcheckOptions {
    /// Route the consistency suite through a broken SNF pivot rule.
    pub inject_snf_fault: bool,
}

type Check = Result<String, String>;

fn suite(name: &str, f: impl FnOnce() -> Check) -> SuiteResult {
    let (status, detail) = match f() {
        Ok(d) => (Status::Pass, d),
        Err(d) => (Status::Fail, d),
    };
    SuiteResult { name: name.into(), status, detail }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

pub fn run_selfcheck(opts: &SelfcheckOptions) -> Vec<SuiteResult> {
    vec![
        suite("padic", padic_suite),
        suite("snf", snf_suite),
        suite("iwasawa", iwasawa_suite),
        suite("free-module law", free_module_suite),
        suite("elementary consistency", || elementary_consistency_suite(opts.inject_snf_fault)),
        suite("quadratic torsion oracle", quadratic_torsion_suite),
        suite("fit round trip", fit_suite),
        suite("characters", characters_suite),
        suite("arith (ell=5)", arith_suite),
        SuiteResult {
            name: "arith (ell=2)".into(),
            status: Status::Skipped,
            detail: "ℓ odd required".into(),
        },
    ]
}

fn ring(ell: u64, precision: u32) -> Arc<CoefRing> {
    CoefRing::base(PrecisionContext::new(ell, precision).expect("valid context"))
}

/// Reducible over F_ℓ iff it has a root, for degree ≤ 3.
fn has_root(ell: u64, h: &[u64]) -> bool {
    (0..ell).any(|x| h.iter().rev().fold(0, |acc, &c| (acc * x + c) % ell) == 0)
}

fn padic_suite() -> Check {
    let mut count = 0;
    for ell in [2u64, 3, 5] {
        for deg in 2..=3usize {
            for code in 0..ell.pow(deg as u32) {
                let mut h: Vec<u64> = (0..deg).map(|i| code / ell.pow(i as u32) % ell).collect();
                h.push(1);
                ensure(check_irreducible(ell, &h) == !has_root(ell, &h), || {
                    format!("irreducibility disagrees for {h:?} mod {ell}")
                })?;
                count += 1;
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(11);
    let r = CoefRing::new(PrecisionContext::new(3, 4).unwrap(), &[1, 0, 1]).unwrap();
    for _ in 0..200 {
        let mut el = || r.element(&[rng.gen_range(0..81), rng.gen_range(0..81)]);
        let (a, b, c) = (el(), el(), el());
        ensure(&(&a * &b) * &c == &a * &(&b * &c), || "associativity fails".into())?;
        ensure(&a * &(&b + &c) == &(&a * &b) + &(&a * &c), || "distributivity fails".into())?;
        let (va, vb) = (a.valuation(), b.valuation());
        if let (Some(x), Some(y)) = (va.finite(), vb.finite()) {
            if x + y < 4 {
                ensure((&a * &b).valuation().finite() == Some(x + y), || "valuation is not additive".into())?;
            }
        }
    }
    Ok(format!("{count} irreducibility cases, 200 random triples"))
}

fn brute_span_size(m: &LocalMatrix) -> usize {
    let modulus = m.modulus();
    let mut set = BTreeSet::from([vec![0u64; m.cols()]]);
    let mut frontier = vec![vec![0u64; m.cols()]];
    while let Some(v) = frontier.pop() {
        for i in 0..m.rows() {
            let w: Vec<u64> = v.iter().zip(m.row(i)).map(|(a, b)| (a + b) % modulus).collect();
            if set.insert(w.clone()) {
                frontier.push(w);
            }
        }
    }
    set.len()
}

fn snf_suite() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    for trial in 0..60 {
        let rows: Vec<Vec<i64>> = (0..3).map(|_| (0..3).map(|_| rng.gen_range(0..9)).collect()).collect();
        let m = LocalMatrix::from_rows(3, 2, &rows);
        let s = snf_local(&m);
        let size = brute_span_size(&m);
        ensure(3usize.pow(s.image_exponent() as u32) == size, || {
            format!("trial {trial}: image of {rows:?} has {size} elements, SNF says 3^{}", s.image_exponent())
        })?;
        ensure(s.image_exponent() + s.cokernel_exponent() == 6, || format!("trial {trial}: orders do not add up"))?;
    }
    Ok("60 random 3x3 matrices over Z/9 against exhaustive spans".into())
}

fn iwasawa_suite() -> Check {
    for ell in [2u64, 3] {
        let alg = LambdaAlgebra::for_levels(ring(ell, 8), 4);
        for n in 0..=3u32 {
            let w = alg.omega(n).map_err(|e| e.to_string())?;
            let w_next = alg.omega(n + 1).map_err(|e| e.to_string())?;
            let mut pow = LambdaElement::one(alg.ring());
            for _ in 0..ell {
                pow = pow.mul_unchecked(&w);
            }
            let (q, r) = divmod_monic(&pow.sub(&w_next), &w);
            ensure(r.is_zero(), || format!("ell={ell} n={n}: omega_n does not divide the difference"))?;
            ensure(q.coeffs().iter().all(|c| c.valuation().bound() >= 1), || {
                format!("ell={ell} n={n}: quotient not divisible by ell")
            })?;
            for m in 0..=n {
                let nu = alg.nu(n, m).map_err(|e| e.to_string())?;
                ensure(nu.mul_unchecked(&alg.omega(m).unwrap()) == w, || format!("ell={ell}: nu({n},{m}) wrong"))?;
            }
        }
    }
    let alg = LambdaAlgebra::for_levels(ring(3, 6), 4);
    let f = DistinguishedPoly::new(LambdaElement::from_ints(alg.ring(), &[3, 0, 1])).unwrap();
    for n in 1..=3 {
        match alg.factorization_witness(&f, n).map_err(|e| e.to_string())? {
            WitnessOutcome::Witness { a, b } => {
                let ell = LambdaElement::from_ints(alg.ring(), &[3]);
                let lhs = ell.mul_unchecked(&LambdaElement::one(alg.ring()).add(&a.scale_int(3))).add(&b.mul_unchecked(f.poly()));
                ensure(lhs == alg.nu(n + 1, n).unwrap(), || format!("witness at n={n} does not multiply back"))?;
            }
            WitnessOutcome::NotYetStable => return Err(format!("no witness for T^2+3 at n={n}")),
        }
    }
    Ok("omega/nu identities for ell in {2,3}, witnesses for T^2+3".into())
}

fn free_module_suite() -> Check {
    for ell in [2u64, 3] {
        for h in [vec![0i64, 1], if ell == 2 { vec![1, 1, 1] } else { vec![1, 0, 1] }] {
            let r = CoefRing::new(PrecisionContext::new(ell, 5).unwrap(), &h).unwrap();
            let alg = LambdaAlgebra::for_levels(r.clone(), 4);
            let spec = ElementaryModuleSpec::new(alg, 1, vec![], vec![]).unwrap();
            let x = elementary_to_presentation(&spec);
            for n in 0..=3u32 {
                let got = quotient_order(&x, n).map_err(|e| e.to_string())?.order_exponent;
                let want = (n as u64 + 1) * ell.pow(n) * r.degree() as u64;
                ensure(got == want, || format!("ell={ell} deg={} n={n}: {got} != {want}", r.degree()))?;
            }
        }
    }
    Ok("(n+1)·ℓ^n·deg φ for n ≤ 3".into())
}

/// Relations R·U for an invertible U built from `ops` (col_j += c·col_i), an isomorphic module.
pub fn scramble(x: &PresentedModule, ops: &[(usize, usize, LambdaElement)]) -> Result<PresentedModule, ModuleError> {
    let mut rows: Vec<Vec<LambdaElement>> = x.relations().to_vec();
    for (i, j, c) in ops {
        for row in rows.iter_mut() {
            let add = row[*i].mul_unchecked(c);
            row[*j] = row[*j].add(&add);
        }
    }
    PresentedModule::new(x.algebra().clone(), x.generators(), rows)
}

fn elementary_consistency_suite(faulty: bool) -> Check {
    let order = |x: &PresentedModule, n: u32| -> Result<FiniteQuotientReport, ModuleError> {
        if faulty { quotient_order_faulty(x, n) } else { quotient_order(x, n) }
    };
    let mut rng = StdRng::seed_from_u64(5);
    let mut cases = 0;
    for ell in [2u64, 3] {
        let alg = LambdaAlgebra::for_levels(ring(ell, 5), 4);
        let r = alg.ring().clone();
        for _ in 0..6 {
            let rho = rng.gen_range(0..2usize);
            let mut m_list: Vec<u32> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(1..4)).collect();
            m_list.sort_unstable_by(|a, b| b.cmp(a));
            let spec = ElementaryModuleSpec::new(alg.clone(), rho, vec![], m_list.clone()).unwrap();
            let x = elementary_to_presentation(&spec);
            let b = x.generators();
            let mut ops = Vec::new();
            for _ in 0..3 {
                let i = rng.gen_range(0..b);
                let j = rng.gen_range(0..b);
                if i != j {
                    let c = match rng.gen_range(0..3) {
                        0 => LambdaElement::one(&r),
                        1 => LambdaElement::one(&r).neg(),
                        _ => LambdaElement::monomial(&r, 1),
                    };
                    ops.push((i, j, c));
                }
            }
            let y = scramble(&x, &ops).map_err(|e| e.to_string())?;
            // A redundant ℓ-multiple placed first must not change the module.
            let mut rows = vec![y.relations()[0].iter().map(|e| e.scale_int(ell as i64)).collect::<Vec<_>>()];
            rows.extend(y.relations().iter().cloned());
            let y = PresentedModule::new(alg.clone(), b, rows).map_err(|e| e.to_string())?;
            for n in 0..=2u32 {
                let want = closed_form_order(&spec, n).x;
                for (what, module) in [("elementary", &x), ("scrambled", &y)] {
                    let got = order(module, n).map_err(|e| e.to_string())?.order_exponent;
                    ensure(got == want, || {
                        format!("ell={ell} rho={rho} m={m_list:?} {what} n={n}: SNF {got}, closed form {want}")
                    })?;
                }
                cases += 1;
            }
        }
    }
    // A fixed presentation of Λ/ℓ² ⊕ Λ/ℓ whose first entry is not of minimal valuation.
    let alg = LambdaAlgebra::for_levels(ring(3, 5), 4);
    let r = alg.ring();
    let c = |v: i64| LambdaElement::from_ints(r, &[v]);
    let x = PresentedModule::new(alg.clone(), 2, vec![vec![c(9), c(0)], vec![c(-3), c(3)]]).unwrap();
    for n in 0..=2u32 {
        let got = order(&x, n).map_err(|e| e.to_string())?.order_exponent;
        let want = (2u64.min(n as u64 + 1) + 1) * 3u64.pow(n);
        ensure(got == want, || format!("fixed presentation n={n}: SNF {got}, closed form {want}"))?;
    }
    let redundant = PresentedModule::new(alg.clone(), 1, vec![vec![c(9)], vec![c(3)]]).unwrap();
    for n in 0..=2u32 {
        let got = order(&redundant, n).map_err(|e| e.to_string())?.order_exponent;
        let want = 3u64.pow(n);
        ensure(got == want, || format!("Λ/3 with a redundant relation, n={n}: SNF {got}, closed form {want}"))?;
    }
    Ok(format!("{cases} random cases plus two fixed presentations"))
}

/// x_n for Λ/(T² + 3) over ℓ = 3 from valuations in Z₃[π], π² = −3: min(v_π(ω_n(π)), 2n + 2).
pub fn quadratic_torsion_oracle(n: u32) -> u64 {
    let prec = n + 3;
    let m = 3i128.pow(prec);
    let mul = |(a, b): (i128, i128), (c, d): (i128, i128)| ((a * c - 3 * b * d).rem_euclid(m), (a * d + b * c).rem_euclid(m));
    let mut g = (1i128, 1i128);
    for _ in 0..n {
        let g2 = mul(g, g);
        g = mul(g2, g);
    }
    let w = ((g.0 - 1).rem_euclid(m), g.1);
    let v3 = |mut x: i128| {
        if x == 0 {
            return 2 * prec as u64 + 2;
        }
        let mut v = 0;
        while x % 3 == 0 {
            x /= 3;
            v += 1;
        }
        v
    };
    let v_pi = (2 * v3(w.0)).min(2 * v3(w.1) + 1);
    v_pi.min(2 * n as u64 + 2)
}

fn quadratic_torsion_suite() -> Check {
    let alg = LambdaAlgebra::for_levels(ring(3, 6), 4);
    let f = DistinguishedPoly::new(LambdaElement::from_ints(alg.ring(), &[3, 0, 1])).unwrap();
    let x = elementary_to_presentation(&ElementaryModuleSpec::new(alg, 0, vec![f], vec![]).unwrap());
    let mut seq = Vec::new();
    for n in 0..=5u32 {
        let got = quotient_order(&x, n).map_err(|e| e.to_string())?.order_exponent;
        let want = quadratic_torsion_oracle(n);
        ensure(got == want, || format!("n={n}: SNF {got}, π-adic oracle {want}"))?;
        seq.push((n, got as i64));
    }
    // x_0 = 1 sits below the linear law, so the fit starts at n = 1.
    let fit = fit_sequence(3, &seq[1..], 1).map_err(|e| e.to_string())?;
    ensure(fit.growth() == (0, 0, 2), || format!("fitted {:?}", fit))?;
    Ok(format!("x_n = {:?}", seq.iter().map(|p| p.1).collect::<Vec<_>>()))
}

fn fit_suite() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..100 {
        let ell = [2u64, 3, 5][rng.gen_range(0..3)];
        let rho = rng.gen_range(0..3);
        let mu = if rho == 0 { rng.gen_range(0..4) } else { rng.gen_range(-3..4) };
        let lambda = if rho == 0 && mu == 0 { rng.gen_range(0..5) } else { rng.gen_range(-4..5) };
        let truth = ParamFit { rho, mu, lambda, nu: rng.gen_range(-20..20), stable_from: 0 };
        let pts: Vec<(u32, i64)> = (0..8).map(|n| (n, predict(&truth, ell, n) as i64)).collect();
        let fit = fit_sequence(ell, &pts, 3).map_err(|e| format!("{truth:?}: {e}"))?;
        ensure(fit == truth, || format!("recovered {fit:?} from {truth:?}"))?;
    }
    Ok("100 random quadruples recovered from 8 points".into())
}

fn characters_suite() -> Check {
    for (orders, ell) in [(vec![4u64], 5u64), (vec![5], 3), (vec![2, 2], 3), (vec![3, 4], 7)] {
        let g = AbelianGroup::new(&orders).unwrap();
        let t = enumerate_irreducibles(&g, ell).map_err(|e| e.to_string())?;
        let total: usize = t.irreducibles().iter().map(|p| p.degree()).sum();
        ensure(total as u64 == g.order(), || format!("{orders:?}: degrees sum to {total}"))?;
        let modulus = ell.pow(4);
        let mut sum = GroupAlgebraElement::zero(&g, modulus);
        let es: Vec<GroupAlgebraElement> =
            (0..t.len()).map(|i| idempotent(&t, i, 4)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for (i, e) in es.iter().enumerate() {
            ensure(e.mul(e) == *e, || format!("{orders:?}: e_{i} is not idempotent"))?;
            for (j, f) in es.iter().enumerate().skip(i + 1) {
                ensure(e.mul(f) == GroupAlgebraElement::zero(&g, modulus), || format!("e_{i} e_{j} != 0"))?;
            }
            sum = sum.add(e);
        }
        ensure(sum == GroupAlgebraElement::one(&g, modulus), || format!("{orders:?}: idempotents do not sum to 1"))?;
    }
    let t = enumerate_irreducibles(&AbelianGroup::cyclic(4).unwrap(), 5).unwrap();
    let ctx = MirrorContext::new(&t, &[2], &[1]).unwrap();
    for i in 0..t.len() {
        let chi = t.basis(i);
        let m = mirror(&t, &chi, &ctx);
        ensure(mirror(&t, &m, &ctx) == chi, || "mirror is not an involution".into())?;
        let (plus, _) = split_real_imag(&t, &chi, &ctx).unwrap();
        let (pp, _) = split_real_imag(&t, &mirror(&t, &plus, &ctx), &ctx).unwrap();
        ensure(pp.is_zero(), || "mirror of a real character has a real part".into())?;
    }
    Ok("degrees, idempotents at N=4, mirror involution and parity swap".into())
}

fn c4_tower(rng: &mut StdRng) -> (TowerInput, PlaceSet, PlaceSet) {
    let t = Arc::new(enumerate_irreducibles(&AbelianGroup::cyclic(4).unwrap(), 5).unwrap());
    let ctx = MirrorContext::new(&t, &[2], &[1]).unwrap();
    let subgroups = [vec![], vec![vec![2]], vec![vec![1]]];
    let mut places = vec![PlaceSpec {
        id: "p".into(),
        subgroup: vec![vec![1]],
        wild: true,
        local_degree: Some(1),
        multiplicity: 1,
    }];
    for i in 0..rng.gen_range(1..4) {
        places.push(PlaceSpec {
            id: format!("q{i}"),
            subgroup: subgroups[rng.gen_range(0..3)].clone(),
            wild: false,
            local_degree: None,
            multiplicity: rng.gen_range(1..3),
        });
    }
    let mut s = PlaceSet::new();
    let mut tt = PlaceSet::new();
    for p in &places {
        match rng.gen_range(0..3) {
            0 => {
                s.insert(p.id.clone());
            }
            1 => {
                tt.insert(p.id.clone());
            }
            _ => {}
        }
    }
    let input = TowerInput::new(t, ctx, 1, places, s.clone(), tt.clone()).unwrap();
    (input, s, tt)
}

fn arith_suite() -> Check {
    let mut rng = StdRng::seed_from_u64(13);
    for trial in 0..20 {
        let (x, s, t) = c4_tower(&mut rng);
        let refs = ReferentTable::zeros(&x);
        let rho = x.rho_st();
        ensure(x.real(&rho).is_zero(), || format!("trial {trial}: rho has a real part"))?;
        let other_s = x.with_sets(BTreeSet::new(), t.clone()).unwrap();
        ensure(other_s.rho_st() == rho, || format!("trial {trial}: rho depends on S"))?;
        let mu = x.mu_st(&refs).map_err(|e| e.to_string())?;
        ensure(other_s.mu_st(&refs).unwrap() == mu, || format!("trial {trial}: mu depends on S"))?;
        let wild_t = x.wild_part(&t);
        let only_wild = x.with_sets(s.clone(), wild_t).unwrap();
        ensure(only_wild.mu_st(&refs).unwrap() == mu, || format!("trial {trial}: mu depends on tame T"))?;
        let covers = x.wild().iter().all(|p| s.contains(p) || t.contains(p));
        if covers {
            let r = x.check_mirror_identities(&refs, true).map_err(|e| e.to_string())?;
            ensure(r.rho_doubled.holds && r.mu.holds, || format!("trial {trial}: rho/mu mirror identity fails"))?;
        }
    }
    Ok("20 random place configurations on C4, ℓ=5".into())
}
