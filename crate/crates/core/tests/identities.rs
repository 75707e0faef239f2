use forkjoin::analytic::HarmonicCache;
use forkjoin::coeffs::{binomial, w_coefficient, w_table, WTable};
use forkjoin::oracle::{verify_lt_identity, DiscreteJointDistribution};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn closed_form(n: usize, k: usize, i: usize) -> BigInt {
    let sign = if (i - k).is_multiple_of(2) { BigInt::one() } else { -BigInt::one() };
    sign * binomial(i - 1, k - 1) * binomial(n, i)
}

#[test]
fn rows_sum_to_one_up_to_40() {
    for n in 1..=40 {
        let t = w_table(n).unwrap();
        for k in 1..=n {
            let sum: BigInt = t.row(k).unwrap().iter().sum();
            assert_eq!(sum, BigInt::one(), "n={n} k={k}");
            assert_eq!(t.get(k, k).unwrap(), &binomial(n, k));
        }
        for i in 1..=n {
            let expected = if i % 2 == 1 { binomial(n, i) } else { -binomial(n, i) };
            assert_eq!(t.get(1, i).unwrap(), &expected, "n={n} i={i}");
        }
    }
}

#[test]
fn harmonic_identity_up_to_20() {
    for n in 1..=20 {
        let t = w_table(n).unwrap();
        let h = HarmonicCache::up_to(n);
        for k in 1..=n {
            let lhs: BigRational = (k..=n).map(|i| BigRational::from_integer(t.get(k, i).unwrap().clone()) * h.h(i)).sum();
            assert_eq!(lhs, h.h(n) - h.h(n - k), "n={n} k={k}");
        }
    }
}

#[test]
fn whole_tables_match_closed_form_up_to_60() {
    for n in [45, 52, 60] {
        let t = w_table(n).unwrap();
        for (k, i, w) in t.entries() {
            assert_eq!(w, &closed_form(n, k, i), "n={n} k={k} i={i}");
        }
    }
}

/// Every permutation of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Spreads each weighted tuple evenly over its permutations.
fn symmetrize(n: usize, tuples: &[(Vec<u8>, u32)]) -> DiscreteJointDistribution {
    let perms = permutations(n);
    let total: u32 = tuples.iter().map(|(_, w)| w).sum();
    let share = BigRational::new(1.into(), (BigInt::from(total) * perms.len()).clone());
    let mut outcomes = Vec::new();
    for (t, w) in tuples {
        for p in &perms {
            let tuple = p.iter().map(|&j| BigRational::from_integer(t[j].into())).collect();
            outcomes.push((tuple, &share * BigRational::from_integer((*w).into())));
        }
    }
    DiscreteJointDistribution::from_outcomes(n, outcomes).unwrap()
}

fn weighted_tuples() -> impl Strategy<Value = (usize, Vec<(Vec<u8>, u32)>)> {
    (1usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec((prop::collection::vec(0u8..4, n), 1u32..6), 1..5)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_match_closed_form(n in 1usize..=70, a in 0usize..70, b in 0usize..70) {
        let k = 1 + a % n;
        let i = k + b % (n - k + 1);
        prop_assert_eq!(w_coefficient(n, k, i).unwrap(), closed_form(n, k, i));
    }

    #[test]
    fn identity_holds_for_random_exchangeable_laws((n, tuples) in weighted_tuples()) {
        let d = symmetrize(n, &tuples);
        let report = verify_lt_identity(&d, &w_table(n).unwrap()).unwrap();
        prop_assert!(report.passed(), "{}", report);
        for c in &report.checks {
            prop_assert!(c.residual().is_zero());
        }
    }

    #[test]
    fn table_text_round_trips(n in 1usize..=25) {
        let t = w_table(n).unwrap();
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        let back = WTable::read_from(&buf[..], std::path::Path::new("<memory>")).unwrap();
        prop_assert_eq!(back, t);
    }
}
