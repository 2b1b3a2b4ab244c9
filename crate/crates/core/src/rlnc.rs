//! Insecure baseline: storage with random linear network coding and
//! functional repair. Every stored or transferred symbol is a random linear
//! combination of the file, tracked as its coefficient row.
//!
//! An eavesdropper on two successive replacements of one slot collects
//! `2·d·β` fresh combinations and, for a large field, the whole file.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, Matrix, PrimeField};

/// Prime used by default for the baseline.
pub const DEFAULT_RLNC_PRIME: u64 = 65521;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RlncError {
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("repair needs exactly d = {d} helpers, got {got}")]
    HelperCount { d: usize, got: usize },
    #[error("vertex {0} is unknown or not usable as a helper")]
    BadVertex(usize),
    #[error("unknown physical node v_{0}")]
    UnknownNode(usize),
    #[error("collector rows have rank {rank} < {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RlncParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub beta: usize,
    pub alpha: usize,
    pub q: u64,
    pub file_len: usize,
}

impl RlncParams {
    /// The compromised `D(4, 3)` of the baseline scenario: six file symbols,
    /// `d = 3`, `β = 1`, `α = 3`.
    pub fn baseline(q: u64) -> Self {
        RlncParams {
            n: 4,
            k: 3,
            d: 3,
            beta: 1,
            alpha: 3,
            q,
            file_len: 6,
        }
    }

    fn validate(&self) -> Result<(), RlncError> {
        let bad = |m: String| Err(RlncError::ParameterMismatch(m));
        if self.n < 2 || self.k == 0 || self.k > self.d || self.d > self.n - 1 {
            return bad(format!(
                "need 1 <= k <= d <= n - 1, got n = {}, k = {}, d = {}",
                self.n, self.k, self.d
            ));
        }
        if self.alpha == 0 || self.beta == 0 || self.file_len == 0 {
            return bad("alpha, beta and the file length must be positive".into());
        }
        if self.beta > self.alpha {
            return bad(format!(
                "a helper cannot send beta = {} > alpha = {} fresh combinations",
                self.beta, self.alpha
            ));
        }
        if self.alpha > self.d * self.beta {
            return bad(format!(
                "alpha = {} exceeds the repair download d * beta = {}",
                self.alpha,
                self.d * self.beta
            ));
        }
        Ok(())
    }
}

/// A coded symbol: its coefficients over the file and its value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedRow {
    pub coefficients: Vec<FieldElement>,
    pub value: FieldElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RlncNode {
    pub id: usize,
    pub vertex: usize,
    pub alive: bool,
    pub stored: Vec<CodedRow>,
    /// Received rows; for initial nodes, the stored rows.
    pub downloaded: Vec<CodedRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RlncTranscript {
    pub failed_id: usize,
    pub replacement_id: usize,
    pub vertex: usize,
    pub helpers: Vec<usize>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RlncState {
    params: RlncParams,
    field: PrimeField,
    nodes: Vec<RlncNode>,
    alive: Vec<usize>,
    repairs: Vec<RlncTranscript>,
}

fn random_combination<R: Rng>(
    field: PrimeField,
    rows: &[CodedRow],
    width: usize,
    rng: &mut R,
) -> CodedRow {
    let mut coefficients = vec![field.zero(); width];
    let mut value = field.zero();
    for row in rows {
        let c = field.elem(rng.gen_range(0..field.modulus()));
        for (acc, &x) in coefficients.iter_mut().zip(&row.coefficients) {
            *acc += c * x;
        }
        value += c * row.value;
    }
    CodedRow {
        coefficients,
        value,
    }
}

/// Each initial node stores `α` uniformly random combinations of `file`.
pub fn rlnc_init(
    params: RlncParams,
    file: &[FieldElement],
    seed: u64,
) -> Result<RlncState, RlncError> {
    params.validate()?;
    if file.len() != params.file_len {
        return Err(RlncError::ParameterMismatch(format!(
            "file of length {} but R_f = {}",
            file.len(),
            params.file_len
        )));
    }
    let field = PrimeField::new(params.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the file itself as the identity basis
    let basis: Vec<CodedRow> = file
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut coefficients = vec![field.zero(); params.file_len];
            coefficients[i] = field.one();
            CodedRow {
                coefficients,
                value: v,
            }
        })
        .collect();
    let nodes = (1..=params.n)
        .map(|v| {
            let stored: Vec<CodedRow> = (0..params.alpha)
                .map(|_| random_combination(field, &basis, params.file_len, &mut rng))
                .collect();
            RlncNode {
                id: v,
                vertex: v,
                alive: true,
                downloaded: stored.clone(),
                stored,
            }
        })
        .collect();
    Ok(RlncState {
        params,
        field,
        nodes,
        alive: (0..params.n).collect(),
        repairs: Vec::new(),
    })
}

impl RlncState {
    pub fn params(&self) -> &RlncParams {
        &self.params
    }

    pub fn nodes(&self) -> &[RlncNode] {
        &self.nodes
    }

    pub fn repairs(&self) -> &[RlncTranscript] {
        &self.repairs
    }

    pub fn node(&self, id: usize) -> Result<&RlncNode, RlncError> {
        self.nodes
            .get(id.wrapping_sub(1))
            .ok_or(RlncError::UnknownNode(id))
    }

    pub fn alive_at(&self, vertex: usize) -> Result<&RlncNode, RlncError> {
        if vertex == 0 || vertex > self.params.n {
            return Err(RlncError::BadVertex(vertex));
        }
        Ok(&self.nodes[self.alive[vertex - 1]])
    }

    /// Replaces the node at `failed_vertex`. Each helper sends `β` random
    /// combinations of its stored rows; the newcomer keeps all `d·β` when
    /// `α = d·β`, otherwise `α` random combinations of them.
    pub fn rlnc_repair(
        &mut self,
        failed_vertex: usize,
        helper_vertices: &[usize],
        seed: u64,
    ) -> Result<RlncTranscript, RlncError> {
        let p = self.params;
        let failed_idx = self.alive_at(failed_vertex)?.id - 1;
        let mut helpers = helper_vertices.to_vec();
        helpers.sort_unstable();
        helpers.dedup();
        if helpers.len() != p.d || helper_vertices.len() != p.d {
            return Err(RlncError::HelperCount {
                d: p.d,
                got: helper_vertices.len(),
            });
        }
        if let Some(&bad) = helpers
            .iter()
            .find(|&&h| h == failed_vertex || h == 0 || h > p.n)
        {
            return Err(RlncError::BadVertex(bad));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut downloaded = Vec::with_capacity(p.d * p.beta);
        let mut helper_ids = Vec::with_capacity(p.d);
        for &hv in &helpers {
            let helper = &self.nodes[self.alive[hv - 1]];
            helper_ids.push(helper.id);
            for _ in 0..p.beta {
                downloaded.push(random_combination(
                    self.field,
                    &helper.stored,
                    p.file_len,
                    &mut rng,
                ));
            }
        }
        let stored = if p.alpha == downloaded.len() {
            downloaded.clone()
        } else {
            (0..p.alpha)
                .map(|_| random_combination(self.field, &downloaded, p.file_len, &mut rng))
                .collect()
        };
        let replacement_id = self.nodes.len() + 1;
        self.nodes[failed_idx].alive = false;
        self.nodes.push(RlncNode {
            id: replacement_id,
            vertex: failed_vertex,
            alive: true,
            stored,
            downloaded,
        });
        self.alive[failed_vertex - 1] = replacement_id - 1;
        let t = RlncTranscript {
            failed_id: failed_idx + 1,
            replacement_id,
            vertex: failed_vertex,
            helpers: helper_ids,
            rows: p.d * p.beta,
        };
        self.repairs.push(t.clone());
        Ok(t)
    }

    fn stack(&self, rows: &[&CodedRow]) -> Matrix {
        let mut m = Matrix::zeros(self.field, rows.len(), self.params.file_len);
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.coefficients.iter().enumerate() {
                m.set(r, c, v);
            }
        }
        m
    }

    /// Rank of everything Eve sees on `eve_node_ids`: downloads of
    /// replacements, stored rows of initial nodes. Rank `R_f` means the
    /// whole file is exposed.
    pub fn rlnc_attack(&self, eve_node_ids: &[usize]) -> Result<usize, RlncError> {
        let mut rows = Vec::new();
        for &id in eve_node_ids {
            rows.extend(self.node(id)?.downloaded.iter());
        }
        if rows.is_empty() {
            return Ok(0);
        }
        Ok(self.stack(&rows).rank())
    }

    /// Decodes the file from the alive nodes at `vertices`.
    pub fn collector_decode(&self, vertices: &[usize]) -> Result<Vec<FieldElement>, RlncError> {
        let mut rows = Vec::new();
        for &v in vertices {
            rows.extend(self.alive_at(v)?.stored.iter());
        }
        let m = self.stack(&rows);
        let rank = m.rank();
        if rank < self.params.file_len {
            return Err(RlncError::RankDeficient {
                rank,
                needed: self.params.file_len,
            });
        }
        let y: Vec<FieldElement> = rows.iter().map(|r| r.value).collect();
        Ok(m.solve_full_column_rank(&y)?)
    }
}

/// Outcome of repeated baseline attacks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialReport {
    pub trials: usize,
    pub q: u64,
    pub full_recovery_count: usize,
    /// rank -> number of trials
    pub rank_histogram: BTreeMap<usize, usize>,
    /// Collector reads (over all k-subsets, every trial) whose rows were
    /// rank deficient or decoded to the wrong file.
    pub collector_failures: usize,
    pub collector_reads: usize,
}

/// Runs the two-replacement attack `trials` times: `v_4` fails and is
/// rebuilt from `v_1, v_2, v_3` as `v_5`, then `v_5` fails and is rebuilt
/// as `v_6`; Eve watches `v_5` and `v_6` during repair.
pub fn rlnc_trials(trials: usize, q: u64, seed: u64) -> Result<TrialReport, RlncError> {
    let params = RlncParams::baseline(q);
    let field = PrimeField::new(q)?;
    let mut rank_histogram = BTreeMap::new();
    let mut full_recovery_count = 0;
    let mut collector_failures = 0;
    let mut collector_reads = 0;
    for t in 0..trials as u64 {
        let trial_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let file: Vec<FieldElement> = (0..params.file_len)
            .map(|_| field.elem(rng.gen_range(0..q)))
            .collect();
        let mut state = rlnc_init(params, &file, rng.gen())?;
        state.rlnc_repair(4, &[1, 2, 3], rng.gen())?;
        state.rlnc_repair(4, &[1, 2, 3], rng.gen())?;
        let rank = state.rlnc_attack(&[5, 6])?;
        *rank_histogram.entry(rank).or_insert(0) += 1;
        if rank == params.file_len {
            full_recovery_count += 1;
        }
        for collector in itertools::Itertools::combinations(1..=params.n, params.k) {
            collector_reads += 1;
            match state.collector_decode(&collector) {
                Ok(decoded) if decoded == file => {}
                _ => collector_failures += 1,
            }
        }
    }
    Ok(TrialReport {
        trials,
        q,
        full_recovery_count,
        rank_histogram,
        collector_failures,
        collector_reads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline_state(seed: u64) -> (RlncState, Vec<FieldElement>) {
        let f = PrimeField::new(DEFAULT_RLNC_PRIME).unwrap();
        let file = f.vector(&[10, 20, 30, 40, 50, 60]);
        (
            rlnc_init(RlncParams::baseline(DEFAULT_RLNC_PRIME), &file, seed).unwrap(),
            file,
        )
    }

    #[test]
    fn init_shapes_and_determinism() {
        let (s, _) = baseline_state(1);
        assert_eq!(s.nodes().len(), 4);
        for n in s.nodes() {
            assert_eq!(n.stored.len(), 3);
            assert!(n.stored.iter().all(|r| r.coefficients.len() == 6));
        }
        assert_eq!(baseline_state(1).0, s);
        assert_ne!(baseline_state(2).0, s);
    }

    #[test]
    fn zero_file_has_zero_values() {
        let f = PrimeField::new(DEFAULT_RLNC_PRIME).unwrap();
        let s = rlnc_init(
            RlncParams::baseline(DEFAULT_RLNC_PRIME),
            &f.vector(&[0; 6]),
            3,
        )
        .unwrap();
        for n in s.nodes() {
            assert!(n.stored.iter().all(|r| r.value.is_zero()));
            assert!(n
                .stored
                .iter()
                .any(|r| r.coefficients.iter().any(|c| !c.is_zero())));
        }
    }

    #[test]
    fn init_errors() {
        let f = PrimeField::new(7).unwrap();
        assert!(matches!(
            rlnc_init(RlncParams::baseline(7), &f.vector(&[1, 2]), 0),
            Err(RlncError::ParameterMismatch(_))
        ));
        let mut p = RlncParams::baseline(7);
        p.alpha = 4;
        assert!(rlnc_init(p, &f.vector(&[0; 6]), 0).is_err());
        assert!(matches!(
            rlnc_init(RlncParams::baseline(8), &f.vector(&[0; 6]), 0),
            Err(RlncError::Field(FieldError::NotPrime(8)))
        ));
    }

    #[test]
    fn two_successive_repairs() {
        let (mut s, file) = baseline_state(5);
        let t = s.rlnc_repair(4, &[1, 2, 3], 11).unwrap();
        assert_eq!((t.failed_id, t.replacement_id, t.rows), (4, 5, 3));
        assert_eq!(s.node(5).unwrap().downloaded.len(), 3);
        let t = s.rlnc_repair(4, &[1, 2, 3], 12).unwrap();
        assert_eq!((t.failed_id, t.replacement_id), (5, 6));
        assert_eq!(s.node(6).unwrap().downloaded.len(), 3);
        assert_eq!(s.rlnc_attack(&[5, 6]).unwrap(), 6);
        assert_eq!(s.rlnc_attack(&[]).unwrap(), 0);
        assert!(s.rlnc_attack(&[1]).unwrap() <= 3);
        assert_eq!(s.collector_decode(&[1, 2, 4]).unwrap(), file);
    }

    #[test]
    fn repair_errors() {
        let (mut s, _) = baseline_state(5);
        assert_eq!(
            s.rlnc_repair(4, &[1, 2], 0),
            Err(RlncError::HelperCount { d: 3, got: 2 })
        );
        assert_eq!(
            s.rlnc_repair(4, &[1, 2, 2], 0),
            Err(RlncError::HelperCount { d: 3, got: 3 })
        );
        assert_eq!(
            s.rlnc_repair(4, &[1, 2, 4], 0),
            Err(RlncError::BadVertex(4))
        );
        assert_eq!(
            s.rlnc_repair(7, &[1, 2, 3], 0),
            Err(RlncError::BadVertex(7))
        );
        assert_eq!(s.rlnc_attack(&[9]), Err(RlncError::UnknownNode(9)));
    }

    #[test]
    fn storing_fewer_than_downloaded() {
        let f = PrimeField::new(DEFAULT_RLNC_PRIME).unwrap();
        let p = RlncParams {
            n: 5,
            k: 2,
            d: 4,
            beta: 1,
            alpha: 3,
            q: DEFAULT_RLNC_PRIME,
            file_len: 5,
        };
        let file = f.vector(&[1, 2, 3, 4, 5]);
        let mut s = rlnc_init(p, &file, 8).unwrap();
        s.rlnc_repair(2, &[1, 3, 4, 5], 9).unwrap();
        let v6 = s.node(6).unwrap();
        assert_eq!((v6.downloaded.len(), v6.stored.len()), (4, 3));
        assert!(s.rlnc_attack(&[6]).unwrap() <= 4);
        assert_eq!(s.collector_decode(&[2, 5]).unwrap(), file);
    }

    #[test]
    fn small_field_trials_report_failures_honestly() {
        let report = rlnc_trials(50, 2, 3).unwrap();
        assert_eq!(report.rank_histogram.values().sum::<usize>(), 50);
        assert!(report.full_recovery_count < 50);
        assert_eq!(report.collector_reads, 50 * 4);
    }
}
