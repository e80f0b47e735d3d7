use iwasawa_params::iwasawa::{
    divmod_distinguished, divmod_monic, is_distinguished, DistinguishedPoly, IwasawaError, LambdaAlgebra, LambdaElement,
    WitnessOutcome,
};
use iwasawa_params::padic::{CoefRing, PrecisionContext};
use proptest::prelude::*;

fn algebra(ell: u64, precision: u32, n_max: u32) -> LambdaAlgebra {
    LambdaAlgebra::for_levels(CoefRing::base(PrecisionContext::new(ell, precision).unwrap()), n_max)
}

fn poly(alg: &LambdaAlgebra, c: &[i64]) -> LambdaElement {
    LambdaElement::from_ints(alg.ring(), c)
}

/// Z/m[T]/(f) for a monic integer f, used to evaluate γ^k = (1+T)^k without forming ν.
struct Quotient {
    f: Vec<i128>,
    m: i128,
}

impl Quotient {
    fn mul(&self, a: &[i128], b: &[i128]) -> Vec<i128> {
        let d = self.f.len() - 1;
        let mut p = vec![0i128; 2 * d];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                p[i + j] = (p[i + j] + x * y).rem_euclid(self.m);
            }
        }
        for k in (d..p.len()).rev() {
            let c = p[k];
            p[k] = 0;
            for i in 0..d {
                p[k - d + i] = (p[k - d + i] - c * self.f[i]).rem_euclid(self.m);
            }
        }
        p.truncate(d);
        p
    }

    fn gamma_pow(&self, mut e: u64) -> Vec<i128> {
        let d = self.f.len() - 1;
        let mut acc = vec![0i128; d];
        acc[0] = 1;
        let mut base = vec![0i128; d];
        base[0] = 1;
        if d > 1 {
            base[1] = 1;
        } else {
            base[0] = (1 - self.f[0]).rem_euclid(self.m);
        }
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// ν(n+1, n) mod f = Σ_{i<ℓ} γ^{i ℓ^n}.
    fn nu_residue(&self, ell: u64, n: u32) -> Vec<i128> {
        let step = ell.pow(n);
        let mut out = vec![0i128; self.f.len() - 1];
        for i in 0..ell {
            for (o, c) in out.iter_mut().zip(self.gamma_pow(i * step)) {
                *o = (*o + c).rem_euclid(self.m);
            }
        }
        out
    }
}

/// Expected witness a (as residues) or None, from the residue r: r ≡ ℓ + ℓ² a.
fn expected_witness(r: &[i128], ell: i128, m: i128) -> Option<Vec<u64>> {
    let mut a = Vec::new();
    for (i, &c) in r.iter().enumerate() {
        let shifted = if i == 0 { (c - ell).rem_euclid(m) } else { c };
        if shifted % (ell * ell) != 0 {
            return None;
        }
        a.push((shifted / (ell * ell)) as u64);
    }
    Some(a)
}

#[test]
fn omega_and_nu_examples() {
    let a2 = algebra(2, 6, 3);
    assert_eq!(a2.omega(1).unwrap(), poly(&a2, &[0, 2, 1]));
    assert_eq!(a2.nu(2, 1).unwrap(), poly(&a2, &[2, 2, 1]));
    let a3 = algebra(3, 6, 3);
    assert_eq!(a3.omega(0).unwrap(), poly(&a3, &[0, 1]));
    assert_eq!(a3.omega(1).unwrap(), poly(&a3, &[0, 3, 3, 1]));
    assert_eq!(a3.nu(1, 0).unwrap(), poly(&a3, &[3, 3, 1]));
    assert_eq!(a3.nu(2, 2).unwrap(), LambdaElement::one(a3.ring()));
}

#[test]
fn omega_identities() {
    for ell in [2u64, 3] {
        let alg = algebra(ell, 8, 4);
        for n in 0..=4u32 {
            let w = alg.omega(n).unwrap();
            assert!(is_distinguished(&w), "omega({n}) not distinguished");
            for m in 0..=n {
                assert_eq!(alg.nu(n, m).unwrap().mul_unchecked(&alg.omega(m).unwrap()), w, "nu({n},{m})");
            }
        }
        for n in 0..=3u32 {
            let w = alg.omega(n).unwrap();
            let mut pow = LambdaElement::one(alg.ring());
            for _ in 0..ell {
                pow = pow.mul_unchecked(&w);
            }
            let (q, r) = divmod_monic(&pow.sub(&alg.omega(n + 1).unwrap()), &w);
            assert!(r.is_zero());
            assert!(q.coeffs().iter().all(|c| c.valuation().at_least(1)), "ell={ell} n={n}");
        }
    }
}

#[test]
fn distinguished_examples() {
    let a = algebra(3, 4, 2);
    assert!(is_distinguished(&poly(&a, &[3, 0, 1])));
    assert!(!is_distinguished(&poly(&a, &[1, 1])));
    assert!(!is_distinguished(&poly(&a, &[3, 0, 2])));
    assert_eq!(DistinguishedPoly::new(poly(&a, &[1, 1])).unwrap_err(), IwasawaError::NotDistinguished);
}

#[test]
fn long_division_example() {
    let a = algebra(3, 4, 2);
    let f = DistinguishedPoly::new(poly(&a, &[3, 0, 1])).unwrap();
    let (q, r) = divmod_distinguished(&poly(&a, &[0, 0, 0, 1]), &f);
    assert_eq!(q, poly(&a, &[0, 1]));
    assert_eq!(r, poly(&a, &[0, -3]));
    let (q, r) = divmod_distinguished(f.poly(), &f);
    assert_eq!((q, r), (LambdaElement::one(a.ring()), LambdaElement::zero(a.ring())));
}

#[test]
fn degree_cap_is_enforced() {
    let a = algebra(3, 4, 1);
    assert_eq!(a.degree_cap(), 9);
    assert!(a.omega(2).is_ok());
    assert!(matches!(a.omega(3), Err(IwasawaError::DegreeCapExceeded { needed: 27, cap: 9 })));
    let big = poly(&a, &[0, 0, 0, 0, 0, 1]);
    assert!(matches!(a.mul(&big, &big), Err(IwasawaError::DegreeCapExceeded { .. })));
}

#[test]
fn witness_needs_precision_two() {
    let a = algebra(3, 1, 3);
    let f = DistinguishedPoly::new(poly(&a, &[0, 1])).unwrap();
    assert_eq!(a.factorization_witness(&f, 1), Err(IwasawaError::PrecisionTooLow { have: 1, need: 2 }));
}

#[test]
fn witnesses_match_direct_evaluation() {
    let alg = algebra(3, 6, 4);
    let m = 729i128;
    for coeffs in [vec![-3i64, 1], vec![3, 0, 1], vec![3, 3, 0, 1]] {
        let f = DistinguishedPoly::new(poly(&alg, &coeffs)).unwrap();
        let q = Quotient { f: coeffs.iter().map(|&c| c as i128).collect(), m };
        let mut first = None;
        for n in 0..=4u32 {
            let want = expected_witness(&q.nu_residue(3, n), 3, m);
            let got = alg.factorization_witness(&f, n).unwrap();
            match (&got, &want) {
                (WitnessOutcome::Witness { a, b }, Some(a_expected)) => {
                    let a_raw: Vec<u64> = (0..f.degree()).map(|i| a.coeff(i).coeffs()[0]).collect();
                    assert_eq!(&a_raw, a_expected, "f={coeffs:?} n={n}");
                    let three = poly(&alg, &[3]);
                    let rebuilt = three
                        .mul_unchecked(&LambdaElement::one(alg.ring()).add(&a.scale_int(3)))
                        .add(&b.mul_unchecked(f.poly()));
                    assert_eq!(rebuilt, alg.nu(n + 1, n).unwrap());
                    first.get_or_insert(n);
                }
                (WitnessOutcome::NotYetStable, None) => {
                    assert!(first.is_none(), "f={coeffs:?}: witness lost at n={n}");
                }
                _ => panic!("f={coeffs:?} n={n}: got {got:?}, oracle {want:?}"),
            }
        }
        assert!(first.is_some_and(|n0| n0 <= 2), "f={coeffs:?}: threshold {first:?}");
    }
}

#[test]
fn quadratic_witness_at_level_zero() {
    // ν(1,0) = T² + 3T + 3 ≡ 3T mod T² + 3, whose T-coefficient is not divisible by 9.
    let alg = algebra(3, 6, 4);
    let f = DistinguishedPoly::new(poly(&alg, &[3, 0, 1])).unwrap();
    assert_eq!(alg.factorization_witness(&f, 0).unwrap(), WitnessOutcome::NotYetStable);
}

fn lambda_strategy(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-500i64..500, 0..max_len)
}

proptest! {
    #[test]
    fn divmod_round_trip(g in lambda_strategy(12), tail in prop::collection::vec(-40i64..40, 0..4)) {
        let alg = algebra(3, 5, 2);
        let mut f: Vec<i64> = tail.iter().map(|c| 3 * c).collect();
        f.push(1);
        let g = poly(&alg, &g);
        let f = DistinguishedPoly::new(poly(&alg, &f)).unwrap();
        let (q, r) = divmod_distinguished(&g, &f);
        prop_assert_eq!(q.mul_unchecked(f.poly()).add(&r), g);
        prop_assert!(r.degree().is_none_or(|d| d < f.degree()));
    }

    #[test]
    fn multiplication_is_commutative_and_associative(a in lambda_strategy(5), b in lambda_strategy(5), c in lambda_strategy(5)) {
        let alg = algebra(5, 3, 2);
        let (a, b, c) = (poly(&alg, &a), poly(&alg, &b), poly(&alg, &c));
        prop_assert_eq!(alg.mul(&a, &b).unwrap(), alg.mul(&b, &a).unwrap());
        let left = alg.mul(&alg.mul(&a, &b).unwrap(), &c).unwrap();
        let right = alg.mul(&a, &alg.mul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!(alg.mul(&a, &b.add(&c)).unwrap(), alg.mul(&a, &b).unwrap().add(&alg.mul(&a, &c).unwrap()));
    }
}
