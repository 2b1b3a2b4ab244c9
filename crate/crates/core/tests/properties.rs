use std::collections::BTreeSet;

use itertools::Itertools;
use num_rational::Ratio;
use proptest::prelude::*;
use secure_regen::adversary::DEFAULT_STATE_BUDGET;
use secure_regen::*;

fn history(n: usize, k: usize, ell: usize, trace: &[usize], seed: u64) -> SystemHistory {
    let q = PrimeField::smallest_at_least((n * (n - 1) / 2) as u64)
        .unwrap()
        .modulus();
    let params = SystemParams::bandwidth_limited(n, k, ell, n - 1, q).unwrap();
    let code = NestedMdsCode::vandermonde(n, k, ell, q).unwrap();
    let secret: Vec<u64> = (0..code.params().r as u64)
        .map(|i| (i * 7 + seed) % q)
        .collect();
    let secret = code.field().vector(&secret);
    run_trace(
        params,
        code,
        PlacementMap::new(n).unwrap(),
        &secret,
        trace,
        seed,
    )
    .unwrap()
}

#[test]
fn rank_and_brute_force_agree_on_every_subset() {
    let code = NestedMdsCode::vandermonde(4, 2, 1, 7).unwrap();
    for size in 0..=6 {
        for subset in (1..=6).combinations(size) {
            let set: BTreeSet<usize> = subset.into_iter().collect();
            let rank = code.leakage_rank(&set).unwrap();
            let mi = brute_force_mutual_information(&code, &set, DEFAULT_STATE_BUDGET).unwrap();
            assert_eq!(mi, Ratio::from_integer(rank as u64), "{set:?}");
        }
    }
}

#[test]
fn brute_force_refuses_large_spaces() {
    let code = NestedMdsCode::vandermonde(5, 3, 1, 11).unwrap();
    let set: BTreeSet<usize> = [1].into();
    assert!(matches!(
        brute_force_mutual_information(&code, &set, DEFAULT_STATE_BUDGET),
        Err(AdversaryError::TooLargeForBruteForce { .. })
    ));
}

#[test]
fn sampled_sweep_is_labelled_and_deterministic() {
    let h = history(5, 3, 2, &[1, 2, 3, 4, 5, 1], 3);
    let a = sweep_sampled(&h, 2, 200, 9).unwrap();
    assert_eq!(a, sweep_sampled(&h, 2, 200, 9).unwrap());
    assert_eq!(a.mode, SweepMode::Sampled);
    assert_eq!(a.subsets_checked, 200);
    assert_eq!(a.max_leakage, 0);
    assert!(matches!(
        sweep_all_eves(&h, 2, 10),
        Err(AdversaryError::SweepTooLarge { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn repairs_are_exact_and_secure(
        n in 3usize..=6,
        trace_seed in any::<u64>(),
        len in 0usize..10,
    ) {
        let k = n - 1;
        let ell = k - 1;
        let trace: Vec<usize> = (0..len)
            .map(|i| (trace_seed.rotate_left(i as u32 * 7) % n as u64) as usize + 1)
            .collect();
        let h = history(n, k, ell, &trace, trace_seed);
        let fresh = history(n, k, ell, &[], trace_seed);
        prop_assert_eq!(h.alive_contents(), fresh.alive_contents());
        for node in h.nodes().iter().filter(|x| x.is_replacement(n)) {
            prop_assert_eq!(&node.downloaded, &node.stored);
        }
        let secret = fresh.collector_read(&(1..=k).collect::<Vec<_>>()).unwrap();
        for c in (1..=n).combinations(k) {
            prop_assert_eq!(&h.collector_read(&c).unwrap(), &secret);
        }
        if h.nodes().len() <= 12 {
            prop_assert_eq!(sweep_all_eves(&h, ell, 1_000_000).unwrap().max_leakage, 0);
        }
    }

    #[test]
    fn leakage_is_monotone_in_the_node_set(seed in any::<u64>(), extra in 1usize..=8) {
        let h = history(4, 3, 0, &[1, 2, 3, 4], seed);
        let small = eve_view_with_budget(&h, &[extra], None).unwrap();
        let big = eve_view_with_budget(&h, &[extra, (extra % 8) + 1], None).unwrap();
        prop_assert!(leakage(h.code(), &small).unwrap() <= leakage(h.code(), &big).unwrap());
    }

    #[test]
    fn snapshots_round_trip(n in 3usize..=5, seed in any::<u64>()) {
        let h = history(n, 2, 1, &[1, n, 2], seed);
        let back = SystemHistory::from_snapshot(&h.snapshot()).unwrap();
        prop_assert_eq!(back.alive_contents(), h.alive_contents());
        prop_assert_eq!(back.repairs(), h.repairs());
    }
}
