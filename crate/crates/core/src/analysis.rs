//! Capacity bounds and the information flow graph.
//!
//! Each storage node `v_i` becomes `x_in^i -> x_out^i` with capacity `α`;
//! a replacement's `x_in` receives one `β` edge from each helper's `x_out`.
//! The source feeds the initial `x_in` nodes and collectors drain `x_out`
//! nodes through edges of "infinite" capacity, encoded as one more than
//! the sum of all finite capacities.

use std::collections::BTreeSet;

use num_rational::Ratio;
use petgraph::algo::{dinics, is_cyclic_directed};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::coset_code::{CodeError, CodeParams};
use crate::dss::{DssError, SystemHistory, SystemParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("parameter violation: {0}")]
    ParameterViolation(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid collector: {0}")]
    InvalidCollector(String),
    #[error(transparent)]
    Dss(#[from] DssError),
    #[error(transparent)]
    Code(#[from] CodeError),
}

fn min_cut_sum(p: &SystemParams, from: usize) -> u64 {
    (from..=p.k)
        .map(|i| ((p.d - i + 1) * p.beta).min(p.alpha) as u64)
        .sum()
}

/// `Σ_{i=ℓ+1}^{k} min{(d - i + 1)β, α}`.
pub fn secrecy_upper_bound(params: &SystemParams) -> Result<u64, AnalysisError> {
    params.validate()?;
    Ok(min_cut_sum(params, params.ell + 1))
}

/// Capacity with no eavesdropper: `Σ_{i=1}^{k} min{(d - i + 1)β, α}`.
pub fn unsecure_capacity(params: &SystemParams) -> Result<u64, AnalysisError> {
    params.validate()?;
    Ok(min_cut_sum(params, 1))
}

/// Secrecy capacity of the bandwidth-limited regime at `d = n - 1`:
/// `Σ_{i=ℓ+1}^{k} (n - i) · Γ / (n - 1)`.
pub fn bw_limited_capacity(
    n: usize,
    k: usize,
    ell: usize,
    bandwidth_cap: u64,
) -> Result<Ratio<u64>, AnalysisError> {
    if n < 2 || k == 0 || k > n - 1 || ell >= k || bandwidth_cap == 0 {
        return Err(AnalysisError::ParameterViolation(format!(
            "need ell < k <= n - 1 and Gamma > 0, got n = {n}, k = {k}, ell = {ell}, Gamma = {bandwidth_cap}"
        )));
    }
    let symbols: u64 = (ell + 1..=k).map(|i| (n - i) as u64).sum();
    Ok(Ratio::new(symbols * bandwidth_cap, (n - 1) as u64))
}

/// Secrecy capacity of the failure-free system, `(k - ℓ)α`.
pub fn static_capacity(params: &SystemParams) -> Result<u64, AnalysisError> {
    params.validate()?;
    Ok(((params.k - params.ell) * params.alpha) as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowNode {
    Source,
    In(usize),
    Out(usize),
    Collector(usize),
}

/// One repair: the failed vertex and the vertices of its `d` helpers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRepair {
    pub failed_vertex: usize,
    pub helpers: Vec<usize>,
}

/// A failure pattern over `D(n, k)` with its storage and repair sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowTrace {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub alpha: u64,
    pub beta: u64,
    pub repairs: Vec<FlowRepair>,
}

impl FlowTrace {
    pub fn new(params: &SystemParams) -> Result<Self, AnalysisError> {
        params.validate()?;
        Ok(FlowTrace {
            n: params.n,
            k: params.k,
            d: params.d,
            alpha: params.alpha as u64,
            beta: params.beta as u64,
            repairs: Vec::new(),
        })
    }

    /// Fails `vertex` and repairs it from every other vertex (`d = n - 1`).
    pub fn fail_all_helpers(mut self, vertex: usize) -> Self {
        let helpers = (1..=self.n).filter(|&u| u != vertex).collect();
        self.repairs.push(FlowRepair {
            failed_vertex: vertex,
            helpers,
        });
        self
    }

    /// Flow trace of a simulated history: every repair used all survivors.
    pub fn from_history(history: &SystemHistory) -> Result<Self, AnalysisError> {
        let mut t = FlowTrace::new(history.params())?;
        for r in history.repairs() {
            let mut helpers: Vec<usize> = r.downloads.iter().map(|d| d.helper_vertex).collect();
            helpers.sort_unstable();
            helpers.dedup();
            t.repairs.push(FlowRepair {
                failed_vertex: r.vertex,
                helpers,
            });
        }
        Ok(t)
    }

    /// Vertices `1..=k` fail in turn. The `i`-th newcomer downloads from the
    /// `i - 1` earlier newcomers and from `d - i + 1` untouched vertices.
    pub fn worst_case(params: &SystemParams) -> Result<Self, AnalysisError> {
        let mut t = FlowTrace::new(params)?;
        for i in 1..=params.k {
            let mut helpers: Vec<usize> = (1..i).collect();
            helpers.extend((i + 1..=params.n).take(params.d - (i - 1)));
            t.repairs.push(FlowRepair {
                failed_vertex: i,
                helpers,
            });
        }
        Ok(t)
    }
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    graph: DiGraph<FlowNode, u64>,
    source: NodeIndex,
    // current physical id per vertex
    alive: Vec<usize>,
    // x_out index per physical id (1-based id -> idx - 1)
    outs: Vec<NodeIndex>,
    infinity: u64,
    collectors: usize,
    k: usize,
}

impl FlowGraph {
    pub fn build(trace: &FlowTrace) -> Result<Self, AnalysisError> {
        let n = trace.n;
        let bad = |m: String| Err(AnalysisError::InvalidTrace(m));
        if n < 2 || trace.d == 0 || trace.d > n - 1 {
            return bad(format!(
                "need 1 <= d <= n - 1, got n = {n}, d = {}",
                trace.d
            ));
        }
        let mut graph = DiGraph::new();
        let source = graph.add_node(FlowNode::Source);
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        let mut finite = Vec::new();
        for id in 1..=n {
            let i = graph.add_node(FlowNode::In(id));
            let o = graph.add_node(FlowNode::Out(id));
            finite.push((i, o, trace.alpha));
            ins.push(i);
            outs.push(o);
        }
        let mut alive: Vec<usize> = (1..=n).collect();
        for (step, rep) in trace.repairs.iter().enumerate() {
            let v = rep.failed_vertex;
            if v == 0 || v > n {
                return bad(format!("step {step}: vertex {v} out of range"));
            }
            let distinct: BTreeSet<usize> = rep.helpers.iter().copied().collect();
            if distinct.len() != trace.d || rep.helpers.len() != trace.d {
                return bad(format!(
                    "step {step}: need {} distinct helpers, got {:?}",
                    trace.d, rep.helpers
                ));
            }
            if let Some(&h) = distinct.iter().find(|&&h| h == v || h == 0 || h > n) {
                return bad(format!("step {step}: helper vertex {h} is invalid"));
            }
            let id = n + step + 1;
            let i = graph.add_node(FlowNode::In(id));
            let o = graph.add_node(FlowNode::Out(id));
            finite.push((i, o, trace.alpha));
            for &h in &distinct {
                finite.push((outs[alive[h - 1] - 1], i, trace.beta));
            }
            outs.push(o);
            alive[v - 1] = id;
        }
        let infinity = 1 + finite.iter().map(|e| e.2).sum::<u64>();
        for (a, b, c) in finite {
            graph.add_edge(a, b, c);
        }
        for &i in ins.iter().take(n) {
            graph.add_edge(source, i, infinity);
        }
        debug_assert!(!is_cyclic_directed(&graph));
        Ok(FlowGraph {
            graph,
            source,
            alive,
            outs,
            infinity,
            collectors: 0,
            k: trace.k,
        })
    }

    pub fn infinity(&self) -> u64 {
        self.infinity
    }

    pub fn graph(&self) -> &DiGraph<FlowNode, u64> {
        &self.graph
    }

    pub fn is_acyclic(&self) -> bool {
        !is_cyclic_directed(&self.graph)
    }

    /// Physical id currently alive at `vertex`.
    pub fn alive_at(&self, vertex: usize) -> Option<usize> {
        self.alive.get(vertex.wrapping_sub(1)).copied()
    }

    /// Capacities of the edges entering `x_in` of physical node `id`.
    pub fn in_edges(&self, id: usize) -> Vec<u64> {
        let Some(target) = self
            .graph
            .node_indices()
            .find(|&i| self.graph[i] == FlowNode::In(id))
        else {
            return Vec::new();
        };
        self.graph
            .edges_directed(target, petgraph::Direction::Incoming)
            .map(|e| *e.weight())
            .collect()
    }

    /// Adds a collector draining the given physical nodes (alive or not).
    pub fn add_collector_nodes(&mut self, ids: &[usize]) -> Result<NodeIndex, AnalysisError> {
        let distinct: BTreeSet<usize> = ids.iter().copied().collect();
        if let Some(&bad) = distinct.iter().find(|&&id| id == 0 || id > self.outs.len()) {
            return Err(AnalysisError::InvalidCollector(format!("no node v_{bad}")));
        }
        self.collectors += 1;
        let dc = self.graph.add_node(FlowNode::Collector(self.collectors));
        for &id in &distinct {
            self.graph.add_edge(self.outs[id - 1], dc, self.infinity);
        }
        Ok(dc)
    }

    /// Adds a collector on the nodes currently alive at `k` distinct vertices.
    pub fn add_collector(&mut self, vertices: &[usize]) -> Result<NodeIndex, AnalysisError> {
        let distinct: BTreeSet<usize> = vertices.iter().copied().collect();
        if distinct.len() != self.k || vertices.len() != self.k {
            return Err(AnalysisError::InvalidCollector(format!(
                "need {} distinct vertices, got {vertices:?}",
                self.k
            )));
        }
        let ids = distinct
            .iter()
            .map(|&v| {
                self.alive_at(v).ok_or_else(|| {
                    AnalysisError::InvalidCollector(format!("vertex {v} out of range"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.add_collector_nodes(&ids)
    }

    /// Exact max-flow from the source to `collector`.
    pub fn min_cut(&self, collector: NodeIndex) -> u64 {
        dinics(&self.graph, self.source, collector).0
    }

    /// Copy of the graph with one edge's capacity replaced.
    pub fn with_capacity(&self, edge: usize, capacity: u64) -> FlowGraph {
        let mut g = self.clone();
        let e = petgraph::graph::EdgeIndex::new(edge);
        g.graph[e] = capacity;
        g
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }
}

/// Graph for `trace` with a collector on the alive nodes at
/// `collector_vertices`.
pub fn build_flow_graph(
    trace: &FlowTrace,
    collector_vertices: &[usize],
) -> Result<(FlowGraph, NodeIndex), AnalysisError> {
    let mut g = FlowGraph::build(trace)?;
    let dc = g.add_collector(collector_vertices)?;
    Ok((g, dc))
}

pub fn min_cut(graph: &FlowGraph, collector: NodeIndex) -> u64 {
    graph.min_cut(collector)
}

/// The upper bound read off the worst-case flow graph: flow into all `k`
/// newcomers minus flow into the `ℓ` newcomers Eve watched.
pub fn empirical_secrecy_bound(params: &SystemParams) -> Result<u64, AnalysisError> {
    let trace = FlowTrace::worst_case(params)?;
    let mut g = FlowGraph::build(&trace)?;
    let n = params.n;
    let all: Vec<usize> = (n + 1..=n + params.k).collect();
    let watched: Vec<usize> = (n + 1..=n + params.ell).collect();
    let dc_all = g.add_collector_nodes(&all)?;
    let dc_eve = g.add_collector_nodes(&watched)?;
    Ok(g.min_cut(dc_all) - g.min_cut(dc_eve))
}

fn serialize_ratio<S: Serializer>(r: &Ratio<u64>, s: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        s.serialize_u64(r.to_integer())
    } else {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }
}

/// Bound summary for one operating point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub theta: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub mu: usize,
    pub thm1_bound: u64,
    #[serde(serialize_with = "serialize_ratio")]
    pub thm2_capacity: Ratio<u64>,
    pub unsecure_capacity: u64,
}

pub fn bounds_report(params: &SystemParams) -> Result<BoundsReport, AnalysisError> {
    let code = CodeParams::new(params.n, params.k, params.ell)?;
    Ok(BoundsReport {
        theta: code.theta,
        m: code.m,
        r: code.r,
        mu: code.mu,
        thm1_bound: secrecy_upper_bound(params)?,
        thm2_capacity: bw_limited_capacity(
            params.n,
            params.k,
            params.ell,
            params.bandwidth_cap as u64,
        )?,
        unsecure_capacity: unsecure_capacity(params)?,
    })
}
