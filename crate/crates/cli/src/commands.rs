use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use secure_regen::adversary::{DEFAULT_STATE_BUDGET, DEFAULT_SWEEP_BUDGET};
use secure_regen::{
    bounds_report, brute_force_mutual_information, eve_view_with_budget, leakage, rlnc_trials,
    sweep_all_eves, sweep_sampled, AdversaryError, HistorySnapshot, SweepReport, SystemHistory,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_ids, read_file, ParamArgs, RunArgs, RunConfig};
use crate::error::CliError;

pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialising output: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn ratio_json(r: Ratio<u64>) -> Value {
    if r.is_integer() {
        json!(r.to_integer())
    } else {
        json!(format!("{}/{}", r.numer(), r.denom()))
    }
}

pub fn cmd_params(args: &ParamArgs) -> Result<Value, CliError> {
    let params = args.resolve()?;
    Ok(serde_json::to_value(bounds_report(&params)?).expect("report serialises"))
}

pub fn cmd_build(args: &RunArgs) -> Result<Value, CliError> {
    let config = RunConfig::from_args(args)?;
    let code = config.code()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mds = code
        .verify_mds(100_000, 2_000, &mut rng)
        .map_err(|e| CliError::Property(e.to_string()))?;
    Ok(json!({ "code": code.summary(), "mds": mds }))
}

pub fn cmd_simulate(args: &RunArgs) -> Result<HistorySnapshot, CliError> {
    let config = RunConfig::from_args(args)?;
    let h = config.run()?;
    info!(
        "simulated {} repairs, {} physical nodes",
        h.repairs().len(),
        h.nodes().len()
    );
    Ok(h.snapshot())
}

/// History from `--history`, or simulated from the run flags.
pub fn load_history(history: Option<&PathBuf>, run: &RunArgs) -> Result<SystemHistory, CliError> {
    match history {
        Some(path) => {
            let snap: HistorySnapshot = serde_json::from_str(&read_file(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Ok(SystemHistory::from_snapshot(&snap)?)
        }
        None => RunConfig::from_args(run)?.run(),
    }
}

#[derive(Debug, Serialize)]
pub struct AttackReport {
    pub node_ids: Vec<usize>,
    pub observed_count: usize,
    pub leakage_qary: Value,
    pub oracle: &'static str,
    pub perfect_secrecy: bool,
}

pub fn cmd_attack(
    h: &SystemHistory,
    nodes: &str,
    budget: Option<usize>,
    bruteforce: bool,
) -> Result<AttackReport, CliError> {
    let ids = parse_ids(nodes)?;
    let view = eve_view_with_budget(h, &ids, Some(budget.unwrap_or(h.params().ell)))?;
    let rank = leakage(h.code(), &view)?;
    let (value, oracle) = if bruteforce {
        let mut total = Ratio::from_integer(0);
        for stripe in 0..view.observed.len() {
            total += brute_force_mutual_information(
                h.code(),
                &view.indices(stripe),
                DEFAULT_STATE_BUDGET,
            )?;
        }
        if total != Ratio::from_integer(rank as u64) {
            return Err(CliError::Property(format!(
                "brute force gives {total}, rank oracle gives {rank}"
            )));
        }
        (total, "bruteforce")
    } else {
        (Ratio::from_integer(rank as u64), "rank")
    };
    Ok(AttackReport {
        node_ids: view.node_ids.iter().copied().collect(),
        observed_count: view.observed_count(),
        leakage_qary: ratio_json(value),
        oracle,
        perfect_secrecy: rank == 0,
    })
}

/// Exhaustive when the subset count is within `limit`, sampled otherwise.
pub fn auto_sweep(
    h: &SystemHistory,
    budget: usize,
    limit: u64,
    samples: usize,
    seed: u64,
) -> Result<SweepReport, CliError> {
    match sweep_all_eves(h, budget, limit) {
        Err(AdversaryError::SweepTooLarge { subsets, .. }) => {
            info!("{subsets} subsets over the limit {limit}, sampling {samples}");
            Ok(sweep_sampled(h, budget, samples, seed)?)
        }
        other => Ok(other?),
    }
}

pub fn cmd_sweep(
    h: &SystemHistory,
    budget: Option<usize>,
    limit: Option<u64>,
    samples: usize,
    seed: u64,
) -> Result<SweepReport, CliError> {
    auto_sweep(
        h,
        budget.unwrap_or(h.params().ell),
        limit.unwrap_or(DEFAULT_SWEEP_BUDGET),
        samples,
        seed,
    )
}

pub fn cmd_rlnc(trials: usize, q: u64, seed: u64) -> Result<Value, CliError> {
    let report = rlnc_trials(trials, q, seed)?;
    Ok(serde_json::to_value(report).expect("report serialises"))
}

pub fn all_subsets_up_to(theta: usize, size: usize) -> impl Iterator<Item = BTreeSet<usize>> {
    use itertools::Itertools;
    (0..=size.min(theta)).flat_map(move |s| (1..=theta).combinations(s).map(BTreeSet::from_iter))
}
