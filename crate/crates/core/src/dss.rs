//! The dynamic storage system: `n` nodes holding the coset codeword through
//! the complete-graph placement, one failure at a time, exact repair from
//! all `n - 1` survivors, and data collectors reading any `k` nodes.
//!
//! Physical node ids are 1-based and never reused: the initial nodes are
//! `v_1..v_n`, the `i`-th replacement is `v_{n+i}`. Each physical node
//! occupies a logical vertex of `K_n`; a replacement inherits the vertex of
//! the node it replaces.
//!
//! Key sampling uses one ChaCha8 stream seeded with `seed_from_u64(seed)`:
//! keys are drawn stripe by stripe, each uniform on `0..q`.

use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coset_code::{CodeError, Construction, KeyVector, NestedMdsCode, SecretMessage};
use crate::field::{FieldElement, PrimeField};
use crate::placement::{PlacementError, PlacementMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DssError {
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("params/code mismatch: {0}")]
    CodeMismatch(String),
    #[error("secret length {len} is not a positive multiple of R = {r}")]
    SecretLength { len: usize, r: usize },
    #[error("secret splits into {stripes} stripes but beta = {beta}")]
    StripeMismatch { stripes: usize, beta: usize },
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("unknown physical node v_{0}")]
    UnknownNode(usize),
    #[error("physical node v_{0} is not alive")]
    DeadNode(usize),
    #[error("collector must contact exactly k = {k} distinct nodes, got {got}")]
    CollectorSize { k: usize, got: usize },
    #[error("exact repair violated at vertex {0}")]
    RepairMismatch(usize),
    #[error("corrupt snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
}

/// Scalar parameters of a `D(n, k)` system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub ell: usize,
    /// Symbols sent by each helper per repair.
    pub beta: usize,
    /// Per-node storage in symbols.
    pub alpha: usize,
    /// Repair bandwidth `d·β`.
    pub gamma: usize,
    /// Repair bandwidth cap.
    #[serde(rename = "Gamma")]
    pub bandwidth_cap: usize,
    pub q: u64,
}

impl SystemParams {
    /// General parameters; the bandwidth cap is set to `γ = d·β`.
    pub fn new(
        n: usize,
        k: usize,
        d: usize,
        beta: usize,
        alpha: usize,
        ell: usize,
        q: u64,
    ) -> Result<Self, DssError> {
        let p = SystemParams {
            n,
            k,
            d,
            ell,
            beta,
            alpha,
            gamma: d * beta,
            bandwidth_cap: d * beta,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    /// Bandwidth-limited operating point: `d = n - 1`, `α = Γ`,
    /// `β = Γ / (n - 1)`.
    pub fn bandwidth_limited(
        n: usize,
        k: usize,
        ell: usize,
        bandwidth_cap: usize,
        q: u64,
    ) -> Result<Self, DssError> {
        if n < 2 {
            return Err(DssError::ParameterViolation(format!(
                "need n >= 2, got {n}"
            )));
        }
        if bandwidth_cap == 0 || !bandwidth_cap.is_multiple_of(n - 1) {
            return Err(DssError::ParameterViolation(format!(
                "Gamma = {bandwidth_cap} must be a positive multiple of n - 1 = {}",
                n - 1
            )));
        }
        let p = SystemParams {
            n,
            k,
            d: n - 1,
            ell,
            beta: bandwidth_cap / (n - 1),
            alpha: bandwidth_cap,
            gamma: bandwidth_cap,
            bandwidth_cap,
            q,
        };
        p.validate()?;
        Ok(p)
    }

    /// `1 <= k <= d <= n - 1`, `ℓ < k`, `β, α >= 1`, `γ = dβ <= Γ`.
    pub fn validate(&self) -> Result<(), DssError> {
        let err = |m: String| Err(DssError::ParameterViolation(m));
        if self.n < 2 {
            return err(format!("need n >= 2, got {}", self.n));
        }
        if self.k == 0 || self.k > self.d || self.d > self.n - 1 {
            return err(format!(
                "need 1 <= k <= d <= n - 1, got n = {}, k = {}, d = {}",
                self.n, self.k, self.d
            ));
        }
        if self.ell >= self.k {
            return err(format!(
                "need ell < k, got ell = {}, k = {}",
                self.ell, self.k
            ));
        }
        if self.beta == 0 || self.alpha == 0 {
            return err("alpha and beta must be positive".into());
        }
        if self.gamma != self.d * self.beta {
            return err(format!("gamma = {} != d * beta", self.gamma));
        }
        if self.gamma > self.bandwidth_cap {
            return err(format!(
                "gamma = {} exceeds the bandwidth cap {}",
                self.gamma, self.bandwidth_cap
            ));
        }
        Ok(())
    }

    /// Conditions under which the coset + complete-graph construction
    /// applies: `d = n - 1` and `α = Γ = (n - 1)β`.
    pub fn check_secure_construction(&self) -> Result<(), DssError> {
        self.validate()?;
        if self.d != self.n - 1 {
            return Err(DssError::ParameterViolation(format!(
                "the construction needs d = n - 1, got d = {}",
                self.d
            )));
        }
        if self.alpha != self.bandwidth_cap || self.bandwidth_cap != (self.n - 1) * self.beta {
            return Err(DssError::ParameterViolation(format!(
                "the construction needs alpha = Gamma = (n - 1) * beta, got alpha = {}, Gamma = {}, beta = {}",
                self.alpha, self.bandwidth_cap, self.beta
            )));
        }
        Ok(())
    }
}

/// One stored or downloaded symbol map per stripe, keyed by symbol index.
pub type StripeMaps = Vec<BTreeMap<usize, FieldElement>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalNode {
    pub id: usize,
    pub vertex: usize,
    pub alive: bool,
    pub stored: StripeMaps,
    /// Everything received on the way in. For initial nodes this is defined
    /// as the stored content.
    pub downloaded: StripeMaps,
}

impl PhysicalNode {
    pub fn is_replacement(&self, n: usize) -> bool {
        self.id > n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Download {
    pub helper_id: usize,
    pub helper_vertex: usize,
    pub stripe: usize,
    pub index: usize,
    pub value: u64,
}

/// Record of one failure and its exact repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairTranscript {
    pub failed_id: usize,
    pub replacement_id: usize,
    pub vertex: usize,
    pub downloads: Vec<Download>,
}

impl RepairTranscript {
    pub fn symbols_per_stripe(&self, stripes: usize) -> Vec<usize> {
        let mut counts = vec![0; stripes];
        for d in &self.downloads {
            counts[d.stripe] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemHistory {
    params: SystemParams,
    code: NestedMdsCode,
    placement: PlacementMap,
    stripes: usize,
    seed: Option<u64>,
    nodes: Vec<PhysicalNode>,
    repairs: Vec<RepairTranscript>,
    // alive[vertex - 1] = index into `nodes`
    alive: Vec<usize>,
}

fn check_consistency(
    params: &SystemParams,
    code: &NestedMdsCode,
    placement: &PlacementMap,
) -> Result<(), DssError> {
    params.check_secure_construction()?;
    let cp = code.params();
    if (cp.n, cp.k, cp.ell) != (params.n, params.k, params.ell) {
        return Err(DssError::CodeMismatch(format!(
            "code built for (n, k, ell) = ({}, {}, {}), system has ({}, {}, {})",
            cp.n, cp.k, cp.ell, params.n, params.k, params.ell
        )));
    }
    if code.field().modulus() != params.q {
        return Err(DssError::CodeMismatch(format!(
            "code over F_{}, system over F_{}",
            code.field().modulus(),
            params.q
        )));
    }
    if placement.n() != params.n {
        return Err(DssError::CodeMismatch(format!(
            "placement for n = {}, system has n = {}",
            placement.n(),
            params.n
        )));
    }
    Ok(())
}

/// Stores `secret` on a fresh system, drawing keys from the seeded stream.
pub fn init_system(
    params: SystemParams,
    code: NestedMdsCode,
    placement: PlacementMap,
    secret: &[FieldElement],
    seed: u64,
) -> Result<SystemHistory, DssError> {
    check_consistency(&params, &code, &placement)?;
    let r = code.params().r;
    if secret.is_empty() || !secret.len().is_multiple_of(r) {
        return Err(DssError::SecretLength {
            len: secret.len(),
            r,
        });
    }
    let stripes = secret.len() / r;
    let field = code.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<KeyVector> = (0..stripes)
        .map(|_| {
            KeyVector(
                (0..code.params().key_len())
                    .map(|_| field.elem(rng.gen_range(0..field.modulus())))
                    .collect(),
            )
        })
        .collect();
    let mut h = init_system_with_keys(params, code, placement, secret, &keys)?;
    h.seed = Some(seed);
    Ok(h)
}

/// Stores `secret` using caller-supplied keys, one key vector per stripe.
pub fn init_system_with_keys(
    params: SystemParams,
    code: NestedMdsCode,
    placement: PlacementMap,
    secret: &[FieldElement],
    keys: &[KeyVector],
) -> Result<SystemHistory, DssError> {
    check_consistency(&params, &code, &placement)?;
    let r = code.params().r;
    if secret.is_empty() || !secret.len().is_multiple_of(r) {
        return Err(DssError::SecretLength {
            len: secret.len(),
            r,
        });
    }
    let stripes = secret.len() / r;
    if stripes != params.beta {
        return Err(DssError::StripeMismatch {
            stripes,
            beta: params.beta,
        });
    }
    if keys.len() != stripes {
        return Err(DssError::CodeMismatch(format!(
            "{} key vectors for {stripes} stripes",
            keys.len()
        )));
    }
    let n = params.n;
    let mut nodes: Vec<PhysicalNode> = (1..=n)
        .map(|v| PhysicalNode {
            id: v,
            vertex: v,
            alive: true,
            stored: vec![BTreeMap::new(); stripes],
            downloaded: Vec::new(),
        })
        .collect();
    for (stripe, (chunk, key)) in secret.chunks(r).zip(keys).enumerate() {
        let x = code.encode(&SecretMessage(chunk.to_vec()), key)?;
        for (e, &(i, j)) in placement.edges().iter().enumerate() {
            let value = x.0[e];
            nodes[i - 1].stored[stripe].insert(e + 1, value);
            nodes[j - 1].stored[stripe].insert(e + 1, value);
        }
    }
    for node in &mut nodes {
        node.downloaded = node.stored.clone();
    }
    debug!(
        "initialised D({}, {}) with {stripes} stripe(s)",
        n, params.k
    );
    Ok(SystemHistory {
        params,
        code,
        placement,
        stripes,
        seed: None,
        nodes,
        repairs: Vec::new(),
        alive: (0..n).collect(),
    })
}

/// Initialises a system and replays `trace` (logical vertices to fail).
pub fn run_trace(
    params: SystemParams,
    code: NestedMdsCode,
    placement: PlacementMap,
    secret: &[FieldElement],
    trace: &[usize],
    seed: u64,
) -> Result<SystemHistory, DssError> {
    let mut h = init_system(params, code, placement, secret, seed)?;
    for &v in trace {
        h.fail_and_repair(v)?;
    }
    Ok(h)
}

impl SystemHistory {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn code(&self) -> &NestedMdsCode {
        &self.code
    }

    pub fn placement(&self) -> &PlacementMap {
        &self.placement
    }

    pub fn stripes(&self) -> usize {
        self.stripes
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// All physical nodes ever created, dead ones included, by id.
    pub fn nodes(&self) -> &[PhysicalNode] {
        &self.nodes
    }

    pub fn repairs(&self) -> &[RepairTranscript] {
        &self.repairs
    }

    /// `(failed id, replacement id)` pairs in order.
    pub fn failure_trace(&self) -> Vec<(usize, usize)> {
        self.repairs
            .iter()
            .map(|r| (r.failed_id, r.replacement_id))
            .collect()
    }

    /// Logical vertices failed so far, in order.
    pub fn vertex_trace(&self) -> Vec<usize> {
        self.repairs.iter().map(|r| r.vertex).collect()
    }

    pub fn node(&self, id: usize) -> Result<&PhysicalNode, DssError> {
        self.nodes
            .get(id.wrapping_sub(1))
            .ok_or(DssError::UnknownNode(id))
    }

    pub fn alive_at(&self, vertex: usize) -> Result<&PhysicalNode, DssError> {
        if vertex == 0 || vertex > self.params.n {
            return Err(DssError::UnknownVertex(vertex));
        }
        Ok(&self.nodes[self.alive[vertex - 1]])
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = &PhysicalNode> {
        self.alive.iter().map(move |&i| &self.nodes[i])
    }

    /// Fails the node currently at `vertex` and regenerates it exactly from
    /// the `n - 1` survivors, each sending the one symbol per stripe it
    /// shares with the failed vertex.
    pub fn fail_and_repair(&mut self, vertex: usize) -> Result<RepairTranscript, DssError> {
        let failed_idx = self.alive_at(vertex)?.id - 1;
        let replacement_id = self.nodes.len() + 1;
        let mut downloads = Vec::with_capacity(self.params.d * self.stripes);
        let mut received: StripeMaps = vec![BTreeMap::new(); self.stripes];
        for helper_vertex in (1..=self.params.n).filter(|&u| u != vertex) {
            let helper = &self.nodes[self.alive[helper_vertex - 1]];
            let index = self.placement.shared(helper_vertex, vertex)?;
            for (stripe, slot) in received.iter_mut().enumerate() {
                let value = helper.stored[stripe][&index];
                slot.insert(index, value);
                downloads.push(Download {
                    helper_id: helper.id,
                    helper_vertex,
                    stripe,
                    index,
                    value: value.value(),
                });
            }
        }
        if received != self.nodes[failed_idx].stored {
            return Err(DssError::RepairMismatch(vertex));
        }
        self.nodes[failed_idx].alive = false;
        self.nodes.push(PhysicalNode {
            id: replacement_id,
            vertex,
            alive: true,
            stored: received.clone(),
            downloaded: received,
        });
        self.alive[vertex - 1] = replacement_id - 1;
        let transcript = RepairTranscript {
            failed_id: failed_idx + 1,
            replacement_id,
            vertex,
            downloads,
        };
        debug!(
            "v_{} failed at vertex {vertex}, replaced by v_{replacement_id}",
            failed_idx + 1
        );
        self.repairs.push(transcript.clone());
        Ok(transcript)
    }

    /// Decodes the secret from the nodes currently at `vertices`.
    pub fn collector_read(&self, vertices: &[usize]) -> Result<Vec<FieldElement>, DssError> {
        let distinct: BTreeSet<usize> = vertices.iter().copied().collect();
        if distinct.len() != self.params.k || vertices.len() != self.params.k {
            return Err(DssError::CollectorSize {
                k: self.params.k,
                got: distinct.len(),
            });
        }
        let ids = distinct
            .iter()
            .map(|&v| self.alive_at(v).map(|n| n.id))
            .collect::<Result<Vec<_>, _>>()?;
        self.collector_read_nodes(&ids)
    }

    /// Decodes from explicit physical nodes, which must all be alive.
    pub fn collector_read_nodes(&self, ids: &[usize]) -> Result<Vec<FieldElement>, DssError> {
        let distinct: BTreeSet<usize> = ids.iter().copied().collect();
        if distinct.len() != self.params.k || ids.len() != self.params.k {
            return Err(DssError::CollectorSize {
                k: self.params.k,
                got: distinct.len(),
            });
        }
        let nodes = distinct
            .iter()
            .map(|&id| {
                let node = self.node(id)?;
                if node.alive {
                    Ok(node)
                } else {
                    Err(DssError::DeadNode(id))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut secret = Vec::with_capacity(self.stripes * self.code.params().r);
        for stripe in 0..self.stripes {
            let observed: Vec<(usize, FieldElement)> = nodes
                .iter()
                .flat_map(|n| n.stored[stripe].iter().map(|(&i, &v)| (i, v)))
                .collect();
            secret.extend(self.code.decode_collector(&observed)?.0);
        }
        Ok(secret)
    }

    /// `vertex -> stored` over the alive nodes.
    pub fn alive_contents(&self) -> BTreeMap<usize, StripeMaps> {
        self.alive_nodes()
            .map(|n| (n.vertex, n.stored.clone()))
            .collect()
    }

    pub fn snapshot(&self) -> HistorySnapshot {
        let raw = |m: &StripeMaps| -> Vec<BTreeMap<usize, u64>> {
            m.iter()
                .map(|s| s.iter().map(|(&i, v)| (i, v.value())).collect())
                .collect()
        };
        HistorySnapshot {
            params: self.params,
            construction: self.code.construction(),
            seed: self.seed,
            trace: self.vertex_trace(),
            stripes: self.stripes,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSnapshot {
                    id: n.id,
                    vertex: n.vertex,
                    alive: n.alive,
                    stored: raw(&n.stored),
                    downloaded: raw(&n.downloaded),
                })
                .collect(),
            repairs: self.repairs.clone(),
        }
    }

    /// Rebuilds a history from its snapshot, re-deriving the code and
    /// placement and checking the structural invariants.
    pub fn from_snapshot(snap: &HistorySnapshot) -> Result<Self, DssError> {
        let params = snap.params;
        let code =
            NestedMdsCode::build(snap.construction, params.n, params.k, params.ell, params.q)?;
        let placement = PlacementMap::new(params.n)?;
        check_consistency(&params, &code, &placement)?;
        let field = PrimeField::new(params.q).map_err(CodeError::from)?;
        let bad = |m: String| DssError::Snapshot(m);
        let cook = |m: &[BTreeMap<usize, u64>]| -> Result<StripeMaps, DssError> {
            if m.len() != snap.stripes {
                return Err(bad(format!(
                    "{} stripe maps, expected {}",
                    m.len(),
                    snap.stripes
                )));
            }
            m.iter()
                .map(|s| {
                    s.iter()
                        .map(|(&i, &v)| {
                            if v >= params.q || i == 0 || i > placement.theta() {
                                Err(bad(format!("symbol {i} = {v} out of range")))
                            } else {
                                Ok((i, field.elem(v)))
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let mut nodes = Vec::with_capacity(snap.nodes.len());
        let mut alive = vec![usize::MAX; params.n];
        for (pos, ns) in snap.nodes.iter().enumerate() {
            if ns.id != pos + 1 {
                return Err(bad(format!(
                    "node ids must be 1..N in order, found v_{}",
                    ns.id
                )));
            }
            if ns.vertex == 0 || ns.vertex > params.n {
                return Err(DssError::UnknownVertex(ns.vertex));
            }
            if ns.alive {
                if alive[ns.vertex - 1] != usize::MAX {
                    return Err(bad(format!("two alive nodes at vertex {}", ns.vertex)));
                }
                alive[ns.vertex - 1] = pos;
            }
            nodes.push(PhysicalNode {
                id: ns.id,
                vertex: ns.vertex,
                alive: ns.alive,
                stored: cook(&ns.stored)?,
                downloaded: cook(&ns.downloaded)?,
            });
        }
        if alive.contains(&usize::MAX) {
            return Err(bad("some vertex has no alive node".into()));
        }
        if nodes.len() != params.n + snap.repairs.len() {
            return Err(bad(format!(
                "{} nodes but {} repairs",
                nodes.len(),
                snap.repairs.len()
            )));
        }
        Ok(SystemHistory {
            params,
            code,
            placement,
            stripes: snap.stripes,
            seed: snap.seed,
            nodes,
            repairs: snap.repairs.clone(),
            alive,
        })
    }
}

/// JSON form of a history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistorySnapshot {
    pub params: SystemParams,
    pub construction: Construction,
    pub seed: Option<u64>,
    pub trace: Vec<usize>,
    pub stripes: usize,
    pub nodes: Vec<NodeSnapshot>,
    pub repairs: Vec<RepairTranscript>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSnapshot {
    pub id: usize,
    pub vertex: usize,
    pub alive: bool,
    pub stored: Vec<BTreeMap<usize, u64>>,
    pub downloaded: Vec<BTreeMap<usize, u64>>,
}
