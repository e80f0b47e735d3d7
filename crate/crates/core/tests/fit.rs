use std::collections::BTreeMap;

use iwasawa_params::chars::{enumerate_irreducibles, AbelianGroup, CharError};
use iwasawa_params::fit::{family_characters, fit_family, fit_sequence, predict, FitError, ParamFit};
use proptest::prelude::*;

fn pts(xs: &[i64]) -> Vec<(u32, i64)> {
    xs.iter().enumerate().map(|(n, &x)| (n as u32, x)).collect()
}

fn law(rho: i64, mu: i64, lambda: i64, nu: i64) -> ParamFit {
    ParamFit { rho, mu, lambda, nu, stable_from: 0 }
}

#[test]
fn documented_sequences() {
    let free: Vec<i64> = (0..7).map(|n| (n + 1) * 3i64.pow(n as u32)).collect();
    assert_eq!(fit_sequence(3, &pts(&free), 3).unwrap(), law(1, 0, 0, 0));
    let built: Vec<i64> = (0..7).map(|n| 2 * 3i64.pow(n as u32) + 4 * n + 7).collect();
    assert_eq!(fit_sequence(3, &pts(&built), 3).unwrap(), law(0, 2, 4, 7));
    assert_eq!(fit_sequence(3, &pts(&[2, 4, 6, 8, 10, 12]), 2).unwrap(), law(0, 0, 2, 2));
}

#[test]
fn level_zero_outlier_moves_stable_from() {
    let f = fit_sequence(3, &pts(&[1, 4, 6, 8, 10, 12, 14]), 2).unwrap();
    assert_eq!(f.growth(), (0, 0, 2));
    assert_eq!((f.nu, f.stable_from), (2, 1));
    assert!(matches!(fit_sequence(3, &pts(&[1, 4, 6, 8, 10, 12]), 2), Err(FitError::Unstable { .. })));
}

#[test]
fn refusals() {
    assert_eq!(fit_sequence(3, &pts(&[1, 2, 3, 4, 5]), 3), Err(FitError::TooFewPoints { have: 5, need: 7 }));
    assert_eq!(fit_sequence(3, &pts(&[1, 2, 3, 4, 5]), 0), Err(FitError::ZeroWindow));
    let non_integral = pts(&[0, 1, 1, 2, 2, 3, 3]);
    assert!(matches!(fit_sequence(2, &non_integral, 1), Err(FitError::Unstable { .. })));
    let negative_growth: Vec<i64> = (0..6).map(|n| -3 * n + 40).collect();
    assert!(matches!(fit_sequence(3, &pts(&negative_growth), 2), Err(FitError::Unstable { .. })));
}

#[test]
fn virtual_parameters_are_allowed_under_a_dominant_term() {
    // ρ > 0 lets μ and λ be negative.
    let truth = law(1, -1, -2, 5);
    let xs: Vec<(u32, i64)> = (0..8).map(|n| (n, predict(&truth, 3, n) as i64)).collect();
    assert_eq!(fit_sequence(3, &xs, 3).unwrap(), truth);
}

#[test]
fn family_assembles_characters() {
    let table = enumerate_irreducibles(&AbelianGroup::cyclic(4).unwrap(), 3).unwrap();
    // Over ℓ = 3 the four characters of C4 form orbits {0}, {2}, {1,3}.
    let pair = table.lookup("chi(1)").unwrap();
    assert_eq!(table.irreducible(pair).degree(), 2);
    let mut seqs = BTreeMap::new();
    seqs.insert("chi(0)".to_string(), (0..7).map(|n| (n, (n as i64 + 1) * 3i64.pow(n))).collect());
    seqs.insert("chi(1)".to_string(), (0..7).map(|n| (n, 4 * n as i64 + 2)).collect());
    let fits = fit_family(3, &seqs, 3).unwrap();
    let chars = family_characters(&table, &fits).unwrap();
    assert_eq!(chars.rho, table.basis(table.lookup("chi(0)").unwrap()));
    assert_eq!(chars.lambda, 2 * &table.basis(pair));
    assert_eq!(chars.nu, table.basis(pair));

    seqs.insert("chi(1)".to_string(), (0..7).map(|n| (n, 3 * n as i64)).collect());
    let fits = fit_family(3, &seqs, 3).unwrap();
    assert!(matches!(family_characters(&table, &fits), Err(CharError::NotDivisible { .. })));
}

#[test]
fn family_reports_the_failing_component() {
    let mut seqs = BTreeMap::new();
    seqs.insert("a".to_string(), pts(&[1, 2, 3, 4, 5, 6, 7]));
    seqs.insert("b".to_string(), pts(&[1, 2, 3]));
    let err = fit_family(3, &seqs, 3).unwrap_err();
    assert_eq!(err.label, "b");
    assert_eq!(err.error, FitError::TooFewPoints { have: 3, need: 7 });
}

fn valid_law() -> impl Strategy<Value = ParamFit> {
    (0i64..3, -4i64..5, -6i64..7, -30i64..30).prop_filter_map("sign constraints", |(rho, mu, lambda, nu)| {
        let ok = rho > 0 || (mu > 0) || (mu == 0 && lambda >= 0);
        ok.then_some(law(rho, mu, lambda, nu))
    })
}

proptest! {
    #[test]
    fn recovers_exact_laws(truth in valid_law(), ell in prop::sample::select(vec![2u64, 3, 5, 7]), window in 1usize..4) {
        let xs: Vec<(u32, i64)> = (0..(4 + window as u32 + 2)).map(|n| (n, predict(&truth, ell, n) as i64)).collect();
        prop_assert_eq!(fit_sequence(ell, &xs, window).unwrap(), truth);
    }

    #[test]
    fn early_noise_only_moves_stable_from(truth in valid_law(), ell in prop::sample::select(vec![2u64, 3, 5]), bump in 1i64..50, start in 1u32..3) {
        let mut xs: Vec<(u32, i64)> = (0..(start + 7)).map(|n| (n, predict(&truth, ell, n) as i64)).collect();
        xs[start as usize - 1].1 += bump;
        let f = fit_sequence(ell, &xs, 3).unwrap();
        prop_assert_eq!(f.growth(), truth.growth());
        prop_assert_eq!(f.nu, truth.nu);
        prop_assert_eq!(f.stable_from, start);
    }

    #[test]
    fn disagreement_in_the_window_is_refused(truth in valid_law(), ell in prop::sample::select(vec![2u64, 3, 5]), bump in 1i64..50, at in 0usize..3) {
        let mut xs: Vec<(u32, i64)> = (0..7).map(|n| (n, predict(&truth, ell, n) as i64)).collect();
        xs[at].1 += bump;
        let refused = matches!(fit_sequence(ell, &xs, 3), Err(FitError::Unstable { .. }));
        prop_assert!(refused);
    }

    #[test]
    fn order_of_points_does_not_matter(truth in valid_law(), seed in 0u64..1000) {
        let mut xs: Vec<(u32, i64)> = (0..8).map(|n| (n, predict(&truth, 3, n) as i64)).collect();
        let k = (seed % 8) as usize;
        xs.rotate_left(k);
        prop_assert_eq!(fit_sequence(3, &xs, 3).unwrap(), truth);
    }
}
