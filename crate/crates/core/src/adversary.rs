//! Passive eavesdropper: picks up to `ℓ` physical nodes at any point of the
//! history and sees everything they stored and downloaded.
//!
//! Leakage is measured two ways. The rank oracle reduces mutual
//! information to `rank(G|_I) - rank(G_K|_I)`. The brute-force oracle
//! enumerates every `(K, S)` and tabulates the joint distribution of the
//! secret and the observed coordinates. Both report q-ary symbols.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use num_rational::Ratio;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coset_code::{binomial, CodeError, NestedMdsCode};
use crate::dss::{DssError, SystemHistory};
use crate::field::FieldElement;

/// Default cap on `q^M` for the brute-force oracle.
pub const DEFAULT_STATE_BUDGET: u64 = 10_000_000;

/// Default cap on the number of Eve subsets an exhaustive sweep visits.
pub const DEFAULT_SWEEP_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("{requested} nodes exceeds adversary budget ell = {budget}")]
    ExceedsBudget { requested: usize, budget: usize },
    #[error("instance too large for brute force: q^M = {states} > {budget}")]
    TooLargeForBruteForce { states: u128, budget: u64 },
    #[error("sweep over {subsets} subsets exceeds the limit {limit}; use sampling mode instead")]
    SweepTooLarge { subsets: u64, limit: u64 },
    #[error("conditional distribution is not uniform over a subspace")]
    NonUniform,
    #[error(transparent)]
    Dss(#[from] DssError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// What Eve sees: per stripe, the union of the stored and downloaded symbols
/// of the nodes she compromised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EveView {
    pub node_ids: BTreeSet<usize>,
    pub observed: Vec<BTreeMap<usize, FieldElement>>,
}

impl EveView {
    pub fn indices(&self, stripe: usize) -> BTreeSet<usize> {
        self.observed[stripe].keys().copied().collect()
    }

    /// Distinct symbols observed, summed over stripes.
    pub fn observed_count(&self) -> usize {
        self.observed.iter().map(BTreeMap::len).sum()
    }
}

/// Eve's view with the budget taken from the system's `ℓ`.
pub fn eve_view(history: &SystemHistory, node_ids: &[usize]) -> Result<EveView, AdversaryError> {
    eve_view_with_budget(history, node_ids, Some(history.params().ell))
}

/// Eve's view with an explicit budget; `None` lifts the limit.
pub fn eve_view_with_budget(
    history: &SystemHistory,
    node_ids: &[usize],
    budget: Option<usize>,
) -> Result<EveView, AdversaryError> {
    let ids: BTreeSet<usize> = node_ids.iter().copied().collect();
    if let Some(budget) = budget {
        if ids.len() > budget {
            return Err(AdversaryError::ExceedsBudget {
                requested: ids.len(),
                budget,
            });
        }
    }
    let mut observed = vec![BTreeMap::new(); history.stripes()];
    for &id in &ids {
        let node = history.node(id)?;
        for (stripe, seen) in observed.iter_mut().enumerate() {
            seen.extend(node.stored[stripe].iter().map(|(&i, &v)| (i, v)));
            seen.extend(node.downloaded[stripe].iter().map(|(&i, &v)| (i, v)));
        }
    }
    Ok(EveView {
        node_ids: ids,
        observed,
    })
}

/// Total leakage of a view in q-ary symbols: the rank gap summed over
/// stripes. Zero is perfect secrecy against this Eve.
pub fn leakage(code: &NestedMdsCode, view: &EveView) -> Result<usize, AdversaryError> {
    let mut total = 0;
    for stripe in 0..view.observed.len() {
        total += code.leakage_rank(&view.indices(stripe))?;
    }
    Ok(total)
}

/// Exact `I(S; X_I)` in q-ary units by enumerating all `q^M` equally likely
/// `(K, S)` pairs.
pub fn brute_force_mutual_information(
    code: &NestedMdsCode,
    indices: &BTreeSet<usize>,
    state_budget: u64,
) -> Result<Ratio<u64>, AdversaryError> {
    let p = code.params();
    let field = code.field();
    let q = field.modulus();
    let states = (q as u128).pow(p.m as u32);
    if states > state_budget as u128 {
        return Err(AdversaryError::TooLargeForBruteForce {
            states,
            budget: state_budget,
        });
    }
    let theta = p.theta;
    for &i in indices {
        if i == 0 || i > theta {
            return Err(CodeError::IndexOutOfRange { index: i, theta }.into());
        }
    }
    let g = code.generator();
    let cols: Vec<usize> = indices.iter().map(|i| i - 1).collect();
    let key_len = p.key_len();

    // observation -> (secret -> count)
    let mut joint: HashMap<Vec<u64>, HashMap<Vec<u64>, u64>> = HashMap::new();
    let mut secret_marginal: HashMap<Vec<u64>, u64> = HashMap::new();
    let mut message = vec![0u64; p.m];
    for _ in 0..states {
        let y: Vec<u64> = cols
            .iter()
            .map(|&c| {
                message
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (r, &m)| (acc + m * g.get(r, c).value()) % q)
            })
            .collect();
        let s = message[key_len..].to_vec();
        *secret_marginal.entry(s.clone()).or_default() += 1;
        *joint.entry(y).or_default().entry(s).or_default() += 1;
        // next message in mixed radix q
        for digit in message.iter_mut() {
            *digit += 1;
            if *digit < q {
                break;
            }
            *digit = 0;
        }
    }

    let total = states as u64;
    let h_secret = Ratio::from_integer(uniform_log_q(secret_marginal.values(), q)?);
    let mut h_cond = Ratio::from_integer(0u64);
    for cond in joint.values() {
        let weight: u64 = cond.values().sum();
        h_cond += Ratio::new(weight, total) * uniform_log_q(cond.values(), q)?;
    }
    if h_cond > h_secret {
        return Err(AdversaryError::NonUniform);
    }
    Ok(h_secret - h_cond)
}

/// Entropy, in log-q units, of a distribution given by counts. Only
/// distributions uniform over `q^j` outcomes have an exact rational value;
/// anything else is reported as `NonUniform`.
fn uniform_log_q<'a>(counts: impl Iterator<Item = &'a u64>, q: u64) -> Result<u64, AdversaryError> {
    let mut support = 0u64;
    let mut first = None;
    for &c in counts {
        match first {
            None => first = Some(c),
            Some(f) if f != c => return Err(AdversaryError::NonUniform),
            _ => {}
        }
        support += 1;
    }
    let mut j = 0;
    let mut size = 1u64;
    while size < support {
        size *= q;
        j += 1;
    }
    if size != support {
        return Err(AdversaryError::NonUniform);
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub max_leakage: usize,
    /// Lexicographically smallest node set attaining `max_leakage`.
    pub witness: Vec<usize>,
    pub subsets_checked: u64,
    pub mode: SweepMode,
    pub budget: usize,
}

/// Worst-case leakage over every `ℓ`-subset of all physical nodes that ever
/// existed. Fails with `SweepTooLarge` past `limit` subsets.
pub fn sweep_all_eves(
    history: &SystemHistory,
    budget: usize,
    limit: u64,
) -> Result<SweepReport, AdversaryError> {
    let population = history.nodes().len();
    let size = budget.min(population);
    let subsets = binomial(population as u64, size as u64);
    if subsets > limit {
        return Err(AdversaryError::SweepTooLarge { subsets, limit });
    }
    let candidates: Vec<Vec<usize>> = (1..=population).combinations(size).collect();
    let (max_leakage, witness) = worst_case(history, size, candidates)?;
    Ok(SweepReport {
        max_leakage,
        witness,
        subsets_checked: subsets,
        mode: SweepMode::Exhaustive,
        budget,
    })
}

/// Same as [`sweep_all_eves`] over `samples` uniformly random `ℓ`-subsets.
/// Never claims exhaustiveness.
pub fn sweep_sampled(
    history: &SystemHistory,
    budget: usize,
    samples: usize,
    seed: u64,
) -> Result<SweepReport, AdversaryError> {
    let population = history.nodes().len();
    let size = budget.min(population);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidates: Vec<Vec<usize>> = (0..samples)
        .map(|_| {
            let mut ids: Vec<usize> = sample(&mut rng, population, size)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    let (max_leakage, witness) = worst_case(history, size, candidates)?;
    Ok(SweepReport {
        max_leakage,
        witness,
        subsets_checked: samples as u64,
        mode: SweepMode::Sampled,
        budget,
    })
}

fn worst_case(
    history: &SystemHistory,
    size: usize,
    candidates: Vec<Vec<usize>>,
) -> Result<(usize, Vec<usize>), AdversaryError> {
    let code = history.code();
    let scored = candidates
        .into_par_iter()
        .map(|ids| {
            let view = eve_view_with_budget(history, &ids, Some(size))?;
            Ok((leakage(code, &view)?, ids))
        })
        .collect::<Result<Vec<_>, AdversaryError>>()?;
    // max leakage, ties to the lexicographically smallest witness
    Ok(scored
        .into_iter()
        .reduce(|best, cur| {
            if cur.0 > best.0 || (cur.0 == best.0 && cur.1 < best.1) {
                cur
            } else {
                best
            }
        })
        .unwrap_or((0, Vec::new())))
}
