use std::collections::BTreeSet;

use itertools::Itertools;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secure_regen::adversary::{DEFAULT_STATE_BUDGET, DEFAULT_SWEEP_BUDGET};
use secure_regen::analysis::FlowTrace;
use secure_regen::coset_code::binomial;
use secure_regen::{
    brute_force_mutual_information, build_flow_graph, bw_limited_capacity, empirical_secrecy_bound,
    min_cut, secrecy_upper_bound, unsecure_capacity, PlacementMap,
};
use serde::Serialize;

use crate::commands::{all_subsets_up_to, auto_sweep};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, fail: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(fail())
    }
}

fn placement(c: &RunConfig) -> Outcome {
    let (n, k) = (c.params.n, c.params.k);
    let map = PlacementMap::new(n).map_err(|e| e.to_string())?;
    let sets: Vec<BTreeSet<usize>> = (1..=n)
        .map(|v| map.node_symbols(v).map(BTreeSet::from_iter))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for s in 1..=map.theta() {
        let holders = sets.iter().filter(|set| set.contains(&s)).count();
        ensure(holders == 2, || format!("symbol {s} on {holders} nodes"))?;
    }
    for (u, v) in (0..n).tuple_combinations() {
        let shared = sets[u].intersection(&sets[v]).count();
        ensure(shared == 1, || {
            format!("nodes {} and {} share {shared}", u + 1, v + 1)
        })?;
    }
    let m: usize = (1..=k).map(|i| n - i).sum();
    let subsets = binomial(n as u64, k as u64);
    if subsets > 100_000 {
        return Ok(format!(
            "theta = {}, k-unions skipped ({subsets} subsets)",
            map.theta()
        ));
    }
    for subset in (1..=n).combinations(k) {
        let size = map.union(&subset).map_err(|e| e.to_string())?.len();
        ensure(size == m, || format!("{subset:?} covers {size}, M = {m}"))?;
    }
    Ok(format!(
        "theta = {}, {subsets} k-unions of size {m}",
        map.theta()
    ))
}

fn mds(c: &RunConfig) -> Outcome {
    let code = c.code().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let r = code
        .verify_mds(100_000, 2_000, &mut rng)
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{} submatrices{}",
        r.subsets_checked,
        if r.sampled { " (sampled)" } else { "" }
    ))
}

fn collectors(c: &RunConfig) -> Outcome {
    let h = c.run().map_err(|e| e.to_string())?;
    let mut read = 0;
    for subset in (1..=c.params.n).combinations(c.params.k).take(10_000) {
        let got = h.collector_read(&subset).map_err(|e| e.to_string())?;
        ensure(got == c.secret, || format!("collector {subset:?} misread"))?;
        read += 1;
    }
    Ok(format!("{read} collectors decode"))
}

fn repair(c: &RunConfig, traces: usize) -> Outcome {
    let d = c.params.d;
    for t in 0..traces as u64 {
        let mut h = c.init().map_err(|e| e.to_string())?;
        let initial = h.alive_contents();
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(t));
        for _ in 0..20 {
            let v = rng.gen_range(1..=c.params.n);
            let tr = h.fail_and_repair(v).map_err(|e| e.to_string())?;
            let per_stripe = tr.symbols_per_stripe(h.stripes());
            ensure(per_stripe.iter().all(|&s| s == d), || {
                format!("trace {t}: repair of v{v} moved {per_stripe:?}")
            })?;
            ensure(h.alive_contents() == initial, || {
                format!("trace {t}: v{v} drifted")
            })?;
            for node in h.nodes().iter().filter(|x| x.is_replacement(c.params.n)) {
                ensure(node.downloaded == node.stored, || {
                    format!("trace {t}: v_{} kept more than it received", node.id)
                })?;
            }
        }
    }
    Ok(format!("{traces} traces of 20 repairs"))
}

fn sweep(c: &RunConfig) -> Outcome {
    let mut h = c.init().map_err(|e| e.to_string())?;
    let trace: Vec<usize> = if c.trace.is_empty() {
        (1..=c.params.n).collect()
    } else {
        c.trace.clone()
    };
    for &v in &trace {
        h.fail_and_repair(v).map_err(|e| e.to_string())?;
    }
    let r = auto_sweep(&h, c.params.ell, DEFAULT_SWEEP_BUDGET, 10_000, c.seed)
        .map_err(|e| e.to_string())?;
    ensure(r.max_leakage == 0, || {
        format!("leakage {} at {:?}", r.max_leakage, r.witness)
    })?;
    Ok(format!(
        "{} subsets ({}), leakage 0",
        r.subsets_checked,
        format!("{:?}", r.mode).to_lowercase()
    ))
}

fn bounds(c: &RunConfig) -> Outcome {
    let p = &c.params;
    let thm1 = secrecy_upper_bound(p).map_err(|e| e.to_string())?;
    let thm2 =
        bw_limited_capacity(p.n, p.k, p.ell, p.bandwidth_cap as u64).map_err(|e| e.to_string())?;
    let achieved = c.code().map_err(|e| e.to_string())?.params().r * c.stripes;
    ensure(
        Ratio::from_integer(thm1) == thm2 && thm1 == achieved as u64,
        || format!("thm1 {thm1}, thm2 {thm2}, stored {achieved}"),
    )?;
    Ok(format!("thm1 = thm2 = stored = {thm1}"))
}

fn flow(c: &RunConfig) -> Outcome {
    let p = &c.params;
    let trace = FlowTrace::worst_case(p).map_err(|e| e.to_string())?;
    let newcomers: Vec<usize> = (1..=p.k).collect();
    let (g, dc) = build_flow_graph(&trace, &newcomers).map_err(|e| e.to_string())?;
    let cut = min_cut(&g, dc);
    let capacity = unsecure_capacity(p).map_err(|e| e.to_string())?;
    ensure(cut == capacity, || {
        format!("cut {cut}, capacity {capacity}")
    })?;
    let secure = empirical_secrecy_bound(p).map_err(|e| e.to_string())?;
    let thm1 = secrecy_upper_bound(p).map_err(|e| e.to_string())?;
    ensure(secure == thm1, || {
        format!("cut difference {secure}, bound {thm1}")
    })?;
    Ok(format!("cut {cut}, secure part {secure}"))
}

fn oracle(c: &RunConfig) -> Outcome {
    let code = c.code().map_err(|e| e.to_string())?;
    let theta = code.params().theta;
    let max_size = if theta <= 10 { theta } else { 3 };
    let mut checked = 0;
    for set in all_subsets_up_to(theta, max_size) {
        let rank = code.leakage_rank(&set).map_err(|e| e.to_string())?;
        let mi = brute_force_mutual_information(&code, &set, DEFAULT_STATE_BUDGET)
            .map_err(|e| e.to_string())?;
        ensure(mi == Ratio::from_integer(rank as u64), || {
            format!("{set:?}: rank {rank}, brute force {mi}")
        })?;
        checked += 1;
    }
    Ok(format!("{checked} subsets of size <= {max_size}"))
}

pub fn cmd_verify(
    c: &RunConfig,
    traces: usize,
    bruteforce: bool,
) -> Result<VerifyReport, CliError> {
    if bruteforce {
        let m = secure_regen::CodeParams::new(c.params.n, c.params.k, c.params.ell)?.m;
        let states = (c.params.q as u128).saturating_pow(m as u32);
        if states > DEFAULT_STATE_BUDGET as u128 {
            return Err(CliError::Validation(format!(
                "instance too large for brute force: q^M = {states} > {DEFAULT_STATE_BUDGET}"
            )));
        }
    }
    let mut suites: Vec<(&'static str, Outcome)> = vec![
        ("placement", placement(c)),
        ("mds", mds(c)),
        ("collectors", collectors(c)),
        ("repair", repair(c, traces)),
        ("sweep", sweep(c)),
        ("bounds", bounds(c)),
        ("min_cut", flow(c)),
    ];
    if bruteforce {
        suites.push(("oracle_equivalence", oracle(c)));
    }
    let checks: Vec<CheckResult> = suites
        .into_iter()
        .map(|(name, outcome)| match outcome {
            Ok(detail) => CheckResult {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckResult {
                name,
                passed: false,
                detail,
            },
        })
        .collect();
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}
