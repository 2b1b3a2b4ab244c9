//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any failed.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use itertools::Itertools;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secure_regen::adversary::DEFAULT_STATE_BUDGET;
use secure_regen::analysis::FlowTrace;
use secure_regen::*;

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn smallest_prime(lower: usize) -> u64 {
    PrimeField::smallest_at_least(lower as u64)
        .unwrap()
        .modulus()
}

fn secret_for(code: &NestedMdsCode, stripes: usize, seed: u64) -> Vec<FieldElement> {
    let field = code.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..code.params().r * stripes)
        .map(|_| field.elem(rng.gen_range(0..field.modulus())))
        .collect()
}

fn system(n: usize, k: usize, ell: usize, q: u64, seed: u64) -> SystemHistory {
    let params = SystemParams::bandwidth_limited(n, k, ell, n - 1, q).unwrap();
    let code = NestedMdsCode::vandermonde(n, k, ell, q).unwrap();
    let secret = secret_for(&code, 1, seed ^ 0xA5A5);
    init_system(params, code, PlacementMap::new(n).unwrap(), &secret, seed).unwrap()
}

// D(n, k) grid with d = n - 1, beta = 1, alpha = n - 1
fn grid() -> impl Iterator<Item = (usize, usize, usize)> {
    (3..=8).flat_map(|n| (1..n).flat_map(move |k| (0..k).map(move |ell| (n, k, ell))))
}

fn reproduction() -> Result<(), String> {
    for construction in [Construction::Vandermonde, Construction::SystematicParity] {
        let params = SystemParams::bandwidth_limited(4, 3, 2, 3, 7).map_err(|e| e.to_string())?;
        let code = NestedMdsCode::build(construction, 4, 3, 2, 7).map_err(|e| e.to_string())?;
        ensure(code.params().r == 1, || format!("R = {}", code.params().r))?;
        let secret = code.field().vector(&[5]);
        let h = run_trace(
            params,
            code,
            PlacementMap::new(4).unwrap(),
            &secret,
            &[4, 1, 2, 3, 4, 1],
            11,
        )
        .map_err(|e| e.to_string())?;
        let report = sweep_all_eves(&h, 2, 1_000).map_err(|e| e.to_string())?;
        ensure(report.subsets_checked == 45, || {
            format!("{construction:?}: {} subsets", report.subsets_checked)
        })?;
        ensure(report.max_leakage == 0, || {
            format!(
                "{construction:?}: leakage {} at {:?}",
                report.max_leakage, report.witness
            )
        })?;
        for c in (1..=4).combinations(3) {
            let got = h.collector_read(&c).map_err(|e| e.to_string())?;
            ensure(got == secret, || {
                format!("{construction:?}: collector {c:?} read {got:?}")
            })?;
        }
    }
    Ok(())
}

fn bound_consistency() -> Result<(), String> {
    let p = SystemParams::bandwidth_limited(4, 3, 2, 3, 7).unwrap();
    let b = secrecy_upper_bound(&p).map_err(|e| e.to_string())?;
    ensure(b == 1, || format!("D(4,3) bound {b}"))?;
    for (n, k, ell) in grid() {
        let q = smallest_prime(n * (n - 1) / 2);
        let h = system(n, k, ell, q, (n * 100 + k * 10 + ell) as u64);
        let thm1 = secrecy_upper_bound(h.params()).map_err(|e| e.to_string())?;
        let thm2 = bw_limited_capacity(n, k, ell, (n - 1) as u64).map_err(|e| e.to_string())?;
        let achieved = h.code().params().r * h.stripes();
        ensure(
            Ratio::from_integer(thm1) == thm2 && thm1 == achieved as u64,
            || format!("D({n},{k}) ell={ell}: thm1 {thm1}, thm2 {thm2}, achieved {achieved}"),
        )?;
    }
    Ok(())
}

fn rlnc_failure() -> Result<(), String> {
    let r = rlnc_trials(100, 65521, 2024).map_err(|e| e.to_string())?;
    ensure(r.full_recovery_count >= 99, || {
        format!(
            "full rank in {}/100, histogram {:?}",
            r.full_recovery_count, r.rank_histogram
        )
    })
}

fn oracle_equivalence() -> Result<(), String> {
    for (n, k, max_size) in [(3, 2, 3), (4, 2, 3)] {
        let code = NestedMdsCode::vandermonde(n, k, 1, 7).map_err(|e| e.to_string())?;
        let theta = code.params().theta;
        for size in 0..=max_size {
            for subset in (1..=theta).combinations(size) {
                let set: BTreeSet<usize> = subset.into_iter().collect();
                let rank = code.leakage_rank(&set).map_err(|e| e.to_string())?;
                let mi = brute_force_mutual_information(&code, &set, DEFAULT_STATE_BUDGET)
                    .map_err(|e| e.to_string())?;
                ensure(mi == Ratio::from_integer(rank as u64), || {
                    format!("n={n} {set:?}: rank {rank}, brute force {mi}")
                })?;
            }
        }
    }
    Ok(())
}

fn repair_invariance() -> Result<(), String> {
    let q = smallest_prime(10);
    for t in 0..50u64 {
        let mut h = system(5, 3, 1, q, t);
        let initial = h.alive_contents();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + t);
        for step in 0..20 {
            let v = rng.gen_range(1..=5);
            let tr = h.fail_and_repair(v).map_err(|e| e.to_string())?;
            ensure(tr.symbols_per_stripe(h.stripes()) == vec![4], || {
                format!(
                    "trace {t} step {step}: {:?}",
                    tr.symbols_per_stripe(h.stripes())
                )
            })?;
            ensure(h.alive_contents() == initial, || {
                format!("trace {t} step {step}: state drifted after repairing v{v}")
            })?;
        }
    }
    Ok(())
}

fn flow_graph() -> Result<(), String> {
    let fig = SystemParams::new(4, 2, 3, 1, 2, 0, 7).unwrap();
    let trace = FlowTrace::new(&fig).unwrap().fail_all_helpers(1);
    let (g, dc) = build_flow_graph(&trace, &[2, 4]).map_err(|e| e.to_string())?;
    let cut = min_cut(&g, dc);
    ensure(cut == 4, || format!("figure cut {cut}"))?;
    for (n, k, ell) in grid() {
        let p = SystemParams::bandwidth_limited(n, k, ell, n - 1, 7).unwrap();
        let expected_all: u64 = (1..=k).map(|i| (n - i) as u64).sum();
        let expected_secure: u64 = (ell + 1..=k).map(|i| (n - i).min(n - 1) as u64).sum();
        let trace = FlowTrace::worst_case(&p).map_err(|e| e.to_string())?;
        let newcomers: Vec<usize> = (1..=k).collect();
        let (g, dc) = build_flow_graph(&trace, &newcomers).map_err(|e| e.to_string())?;
        let all = min_cut(&g, dc);
        let secure = empirical_secrecy_bound(&p).map_err(|e| e.to_string())?;
        ensure(all == expected_all && secure == expected_secure, || {
            format!(
                "D({n},{k}) ell={ell}: cut {all}/{expected_all}, secure {secure}/{expected_secure}"
            )
        })?;
    }
    Ok(())
}

fn placement() -> Result<(), String> {
    for n in 2..=12 {
        let map = PlacementMap::new(n).map_err(|e| e.to_string())?;
        let theta = n * (n - 1) / 2;
        let mut holders = vec![0usize; theta + 1];
        for v in 1..=n {
            for s in map.node_symbols(v).map_err(|e| e.to_string())? {
                holders[s] += 1;
            }
        }
        ensure(holders[1..].iter().all(|&c| c == 2), || {
            format!("n={n}: holders {holders:?}")
        })?;
        for (u, v) in (1..=n).tuple_combinations() {
            let a: BTreeSet<usize> = map.node_symbols(u).unwrap().into_iter().collect();
            let b: BTreeSet<usize> = map.node_symbols(v).unwrap().into_iter().collect();
            ensure(a.intersection(&b).count() == 1, || {
                format!("n={n}: pair ({u},{v})")
            })?;
        }
        for k in 1..=n {
            let m: usize = (1..=k).map(|i| n - i).sum();
            for subset in (1..=n).combinations(k) {
                let union = map.union(&subset).map_err(|e| e.to_string())?;
                ensure(union.len() == m, || {
                    format!("n={n}: {subset:?} covers {} not {m}", union.len())
                })?;
            }
        }
    }
    Ok(())
}

fn negative_control() -> Result<(), String> {
    let h = system(4, 3, 0, 7, 8);
    ensure(h.code().params().r == h.code().params().m, || {
        "R != M".into()
    })?;
    let report = sweep_all_eves(&h, 2, 1_000).map_err(|e| e.to_string())?;
    ensure(report.max_leakage > 0, || {
        "insecure system reported zero leakage".into()
    })
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 8] = [
        (
            "1 D(4,3) reproduction: 45 pairs leak 0, 4 collectors decode",
            reproduction,
        ),
        (
            "2 bound consistency: thm1 = thm2 = achieved rate on n <= 8",
            bound_consistency,
        ),
        (
            "3 RLNC baseline: Eve on {v5, v6} gets rank 6 in >= 99/100",
            rlnc_failure,
        ),
        (
            "4 rank leakage equals brute-force mutual information",
            oracle_equivalence,
        ),
        (
            "5 exact repair: 50 traces x 20 repairs on D(5,3), 4 symbols each",
            repair_invariance,
        ),
        (
            "6 flow graph: figure cut 4, worst-case cuts match the sums",
            flow_graph,
        ),
        ("7 placement combinatorics for n <= 12", placement),
        (
            "8 negative control: R = M leaks under a budget of 2",
            negative_control,
        ),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(_) => Err("panicked".into()),
        };
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(()) => println!("acceptance {name} ... PASS ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("acceptance {name} ... FAIL ({ms} ms): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
