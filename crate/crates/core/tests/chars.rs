use std::collections::BTreeSet;

use iwasawa_params::chars::{
    enumerate_irreducibles, idempotent, imag_part, mirror, real_part, split_real_imag, AbelianGroup, CharError,
    CharacterTable, GroupAlgebraElement, MirrorContext, VirtualCharacter,
};
use proptest::prelude::*;

fn table(orders: &[u64], ell: u64) -> CharacterTable {
    enumerate_irreducibles(&AbelianGroup::new(orders).unwrap(), ell).unwrap()
}

fn chi(t: &CharacterTable, name: &str) -> VirtualCharacter {
    t.basis(t.lookup(name).unwrap())
}

/// Orbit sizes of exponent tuples under multiplication by ℓ, by direct closure.
fn orbit_sizes(orders: &[u64], ell: u64) -> Vec<usize> {
    let all: Vec<Vec<u64>> = AbelianGroup::new(orders).unwrap().elements();
    let mut seen = BTreeSet::new();
    let mut sizes = Vec::new();
    for e in all {
        if seen.contains(&e) {
            continue;
        }
        let mut orbit = BTreeSet::new();
        let mut cur = e.clone();
        while orbit.insert(cur.clone()) {
            cur = cur.iter().zip(orders).map(|(x, d)| x * ell % d).collect();
        }
        sizes.push(orbit.len());
        seen.extend(orbit);
    }
    sizes.sort_unstable();
    sizes
}

fn groups_up_to(max: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    for a in 1..=max {
        out.push(vec![a]);
        for b in 2..=max / a {
            if a == 1 || b % a != 0 {
                continue;
            }
            out.push(vec![a, b]);
        }
    }
    out.retain(|g| g.iter().product::<u64>() <= max && g.iter().all(|&d| d >= 1));
    out
}

#[test]
fn documented_tables() {
    let c4 = table(&[4], 5);
    assert_eq!(c4.len(), 4);
    assert!(c4.irreducibles().iter().all(|p| p.degree() == 1));
    let c1 = table(&[1], 3);
    assert_eq!(c1.len(), 1);
    assert_eq!(c1.unit(), c1.regular());
    let c5 = table(&[5], 3);
    let degrees: Vec<usize> = c5.irreducibles().iter().map(|p| p.degree()).collect();
    assert_eq!(degrees, vec![1, 4]);
    let members: BTreeSet<Vec<u64>> = c5.irreducible(1).members().iter().cloned().collect();
    assert_eq!(members, BTreeSet::from([vec![1], vec![2], vec![3], vec![4]]));
}

#[test]
fn orbit_sizes_match_direct_closure() {
    for ell in [3u64, 5, 7] {
        for orders in groups_up_to(20) {
            if orders.iter().product::<u64>() % ell == 0 {
                continue;
            }
            let t = table(&orders, ell);
            let mut degs: Vec<usize> = t.irreducibles().iter().map(|p| p.degree()).collect();
            degs.sort_unstable();
            assert_eq!(degs, orbit_sizes(&orders, ell), "{orders:?} ell={ell}");
            assert_eq!(degs.iter().sum::<usize>() as u64, orders.iter().product::<u64>());
        }
    }
}

#[test]
fn orbits_are_homogeneous() {
    for ell in [3u64, 5, 7] {
        for orders in groups_up_to(20) {
            let g = AbelianGroup::new(&orders).unwrap();
            if g.order().is_multiple_of(ell) {
                continue;
            }
            let t = enumerate_irreducibles(&g, ell).unwrap();
            for h in g.elements() {
                assert!(t.orbit_triviality_homogeneous(std::slice::from_ref(&h)), "{orders:?} ell={ell} h={h:?}");
                if g.add(&h, &h) == g.identity() {
                    for phi in t.irreducibles() {
                        let v: BTreeSet<u64> = phi.members().iter().map(|m| g.pairing(m, &h)).collect();
                        assert_eq!(v.len(), 1, "{orders:?}: orbit {} splits on an involution", phi.name());
                    }
                }
            }
        }
    }
}

#[test]
fn construction_errors() {
    assert_eq!(enumerate_irreducibles(&AbelianGroup::cyclic(6).unwrap(), 3).unwrap_err(), CharError::OrderNotCoprime { order: 6, ell: 3 });
    assert_eq!(enumerate_irreducibles(&AbelianGroup::cyclic(4).unwrap(), 6).unwrap_err(), CharError::NotPrime(6));
    let t = table(&[4], 5);
    assert!(matches!(MirrorContext::new(&t, &[1], &[1]), Err(CharError::BadTau(_))));
    assert!(matches!(MirrorContext::new(&t, &[2], &[2]), Err(CharError::BadOmega(_))));
    assert!(matches!(t.lookup("chi(9)"), Err(CharError::UnknownIrreducible(_))));
    let t2 = table(&[2], 3);
    let ctx = MirrorContext::new(&t2, &[1], &[1]).unwrap();
    assert!(split_real_imag(&t2, &t2.unit(), &ctx).is_ok());
}

#[test]
fn inner_products() {
    let t = table(&[4], 5);
    let x = &(3 * &chi(&t, "chi(1)")) - &chi(&t, "chi(2)");
    assert_eq!(t.inner(&x, "chi(1)").unwrap(), 3);
    assert_eq!(t.inner(&t.zero(), "chi(3)").unwrap(), 0);
    let t5 = table(&[5], 3);
    for i in 0..t5.len() {
        assert_eq!(t5.pairing(&t5.regular(), i), t5.irreducible(i).degree() as i64);
    }
}

#[test]
fn induced_units() {
    let t = table(&[4], 5);
    assert_eq!(t.induce_unit(&[vec![1]]).unwrap(), t.unit());
    assert_eq!(t.induce_unit(&[]).unwrap(), t.regular());
    assert_eq!(t.induce_unit(&[vec![2]]).unwrap(), &chi(&t, "chi(0)") + &chi(&t, "chi(2)"));
    assert_eq!(table(&[5], 3).induce_unit(&[]).unwrap(), table(&[5], 3).regular());
    for orders in [vec![4u64], vec![2, 4], vec![3, 3], vec![8]] {
        let g = AbelianGroup::new(&orders).unwrap();
        let t = enumerate_irreducibles(&g, 5).unwrap();
        for h in g.elements() {
            let sub = g.subgroup(std::slice::from_ref(&h)).unwrap();
            let ind = t.induce_unit(std::slice::from_ref(&h)).unwrap();
            assert_eq!(t.degree_of(&ind) as u64, g.order() / sub.len() as u64);
            assert_eq!(ind == t.unit(), sub.len() as u64 == g.order());
        }
    }
}

#[test]
fn real_imaginary_split() {
    let t = table(&[4], 5);
    let ctx = MirrorContext::new(&t, &[2], &[1]).unwrap();
    let (plus, minus) = split_real_imag(&t, &t.regular(), &ctx).unwrap();
    assert_eq!(plus, &chi(&t, "chi(0)") + &chi(&t, "chi(2)"));
    assert_eq!(minus, &chi(&t, "chi(1)") + &chi(&t, "chi(3)"));
    assert_eq!(split_real_imag(&t, &t.unit(), &ctx).unwrap(), (t.unit(), t.zero()));
    let omega = ctx.omega_character(&t);
    assert_eq!(split_real_imag(&t, &omega, &ctx).unwrap(), (t.zero(), omega.clone()));
    assert_eq!(mirror(&t, &t.unit(), &ctx), omega);
    assert_eq!(mirror(&t, &chi(&t, "chi(2)"), &ctx), chi(&t, "chi(3)"));
}

#[test]
fn documented_idempotents() {
    let c1 = AbelianGroup::cyclic(1).unwrap();
    let t1 = enumerate_irreducibles(&c1, 3).unwrap();
    assert_eq!(idempotent(&t1, 0, 3).unwrap(), GroupAlgebraElement::one(&c1, 27));
    let t2 = table(&[2], 3);
    let sign = t2.lookup("chi(1)").unwrap();
    assert_eq!(idempotent(&t2, sign, 2).unwrap().coeffs(), &[5, 4]);
    let c5 = AbelianGroup::cyclic(5).unwrap();
    let t5 = enumerate_irreducibles(&c5, 3).unwrap();
    let unit = idempotent(&t5, 0, 4).unwrap();
    let big = idempotent(&t5, 1, 4).unwrap();
    assert_eq!(unit.add(&big), GroupAlgebraElement::one(&c5, 81));
    assert_eq!(big.mul(&big), big);
}

/// e_φ is characterised by: idempotent, orthogonal to the others, coefficient of 1 equal to
/// deg φ / |Δ|, and invariant under translation by the common kernel of φ's members.
fn check_idempotents(orders: &[u64], ell: u64, precision: u32) {
    let g = AbelianGroup::new(orders).unwrap();
    let t = enumerate_irreducibles(&g, ell).unwrap();
    let m = ell.pow(precision);
    let inv_order = (1..m).find(|v| v * g.order() % m == 1).unwrap();
    let es: Vec<GroupAlgebraElement> = (0..t.len()).map(|i| idempotent(&t, i, precision).unwrap()).collect();
    let mut total = GroupAlgebraElement::zero(&g, m);
    for (i, e) in es.iter().enumerate() {
        let phi = t.irreducible(i);
        assert_eq!(e.mul(e), *e, "{orders:?}: {} not idempotent", phi.name());
        for f in &es[i + 1..] {
            assert_eq!(e.mul(f), GroupAlgebraElement::zero(&g, m));
        }
        assert_eq!(e.coefficient(&g.identity()), phi.degree() as u64 * inv_order % m);
        let kernel: Vec<Vec<u64>> =
            g.elements().into_iter().filter(|h| phi.members().iter().all(|c| g.pairing(c, h) == 0)).collect();
        for h in &kernel {
            for x in g.elements() {
                assert_eq!(e.coefficient(&x), e.coefficient(&g.add(&x, h)), "{orders:?} {}", phi.name());
            }
        }
        total = total.add(e);
    }
    assert_eq!(total, GroupAlgebraElement::one(&g, m));
}

#[test]
fn idempotent_characterisation() {
    check_idempotents(&[4], 5, 4);
    check_idempotents(&[5], 3, 4);
    check_idempotents(&[2, 2], 3, 3);
    check_idempotents(&[7], 2, 5);
    check_idempotents(&[3, 4], 7, 3);
    check_idempotents(&[8], 3, 3);
}

fn c4_table() -> (CharacterTable, MirrorContext) {
    let t = table(&[4], 5);
    let ctx = MirrorContext::new(&t, &[2], &[1]).unwrap();
    (t, ctx)
}

proptest! {
    #[test]
    fn mirror_is_a_degree_preserving_involution(coeffs in prop::collection::vec(-9i64..10, 4)) {
        let (t, ctx) = c4_table();
        let mut x = t.zero();
        for (i, c) in coeffs.iter().enumerate() {
            x.add_coefficient(i, *c);
        }
        let y = mirror(&t, &x, &ctx);
        prop_assert_eq!(mirror(&t, &y, &ctx), x.clone());
        prop_assert_eq!(t.degree_of(&y), t.degree_of(&x));
        let plus = real_part(&t, &x, &ctx).unwrap();
        prop_assert!(real_part(&t, &mirror(&t, &plus, &ctx), &ctx).unwrap().is_zero());
        let minus = imag_part(&t, &x, &ctx).unwrap();
        prop_assert!(imag_part(&t, &mirror(&t, &minus, &ctx), &ctx).unwrap().is_zero());
        prop_assert_eq!(&plus + &minus, x.clone());
    }

    #[test]
    fn map_round_trip(coeffs in prop::collection::vec(-9i64..10, 2)) {
        let t = table(&[5], 3);
        let mut x = t.zero();
        for (i, c) in coeffs.iter().enumerate() {
            x.add_coefficient(i, *c);
        }
        prop_assert_eq!(t.from_map(&t.to_map(&x)).unwrap(), x);
    }

    #[test]
    fn arithmetic_laws(a in prop::collection::vec(-9i64..10, 4), b in prop::collection::vec(-9i64..10, 4), k in -5i64..6) {
        let (t, _) = c4_table();
        let mk = |v: &[i64]| { let mut x = t.zero(); for (i, c) in v.iter().enumerate() { x.add_coefficient(i, *c); } x };
        let (x, y) = (mk(&a), mk(&b));
        prop_assert_eq!(&(&x + &y) - &y, x.clone());
        prop_assert_eq!(k * &(&x + &y), &(k * &x) + &(k * &y));
        prop_assert_eq!(x.is_effective(), a.iter().all(|&c| c >= 0));
    }
}
