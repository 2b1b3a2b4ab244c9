//! Secure exact-repair regenerating codes for distributed storage.
//!
//! A secret is padded with random keys through a nested MDS coset code,
//! spread over `n` nodes by the complete-graph repetition code, and kept
//! alive through failures by exact repair from all `n - 1` survivors. An
//! eavesdropper watching up to `ℓ` nodes, including newcomers during their
//! repair, learns nothing; any `k` live nodes recover the secret.
//!
//! Modules:
//! - [`field`]: `F_q` arithmetic, rank and solving.
//! - [`coset_code`]: the outer nested MDS code and its leakage measure.
//! - [`placement`]: symbol-to-node map over the edges of `K_n`.
//! - [`dss`]: the dynamic system, repairs and collectors.
//! - [`adversary`]: eavesdropper views, rank and brute-force oracles, sweeps.
//! - [`rlnc`]: random linear network coding baseline and its attack.
//! - [`analysis`]: capacity bounds and the information flow graph.

pub mod adversary;
pub mod analysis;
pub mod coset_code;
pub mod dss;
pub mod field;
pub mod placement;
pub mod rlnc;

pub use adversary::{
    brute_force_mutual_information, eve_view, eve_view_with_budget, leakage, sweep_all_eves,
    sweep_sampled, AdversaryError, EveView, SweepMode, SweepReport,
};
pub use analysis::{
    bounds_report, build_flow_graph, bw_limited_capacity, empirical_secrecy_bound, min_cut,
    secrecy_upper_bound, unsecure_capacity, AnalysisError, BoundsReport, FlowGraph, FlowTrace,
};
pub use coset_code::{
    build_nested_mds, CodeError, CodeParams, Codeword, Construction, KeyVector, NestedMdsCode,
    SecretMessage,
};
pub use dss::{
    init_system, init_system_with_keys, run_trace, DssError, HistorySnapshot, RepairTranscript,
    SystemHistory, SystemParams,
};
pub use field::{ff_inv, mat_rank, mat_solve, FieldElement, FieldError, Matrix, PrimeField};
pub use placement::{edge_index, node_symbols, shared_symbol, PlacementError, PlacementMap};
pub use rlnc::{rlnc_init, rlnc_trials, RlncError, RlncParams, RlncState, TrialReport};
