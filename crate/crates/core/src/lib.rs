//! Algorithms for distributed Nash-equilibrium seeking in aggregative games
//! over unbalanced directed networks.
//!
//! The crate provides the game model (costs, pseudo-gradients, a centralized
//! equilibrium oracle), the network layer (row-stochastic weights, Perron
//! vector, contraction diagnostics), the multi-round-communication seeking
//! algorithm, and its resilient extension that classifies malicious players
//! from stochastic trust observations and isolates them through a broadcast
//! of counters and iteration marks.
//!
//! Everything here is pure computation over value types; IO, configuration
//! files and the CLI live in the companion `neseek-cli` crate. The crate is
//! `no_std` (with `alloc`).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod broadcast;
pub mod fast;
pub mod game;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod resilient;
pub mod rng;
pub mod trust;

pub use broadcast::{broadcast_step, recompute_rank, BroadcastMessage, BroadcastState};
pub use fast::{
    gamma_matrix, gradient_update, mrc, run_fast, FastPlayerState, GammaMatrix, RoundsRule,
    RunOptions, Schedule, SigmaMode, StepRule,
};
pub use game::{
    aggregate, derive_game_constants, phev_cost, phev_gradient, project_box, solve_ne_oracle,
    CostKind, GameConstants, GameSpec, PhevParams, PhiKind, StrategyBox,
};
pub use metrics::{
    fit_geometric, fit_power, pre_plateau_window, squared_error, tail_window, RateFit, RateModel,
    Trace, TraceRow,
};
pub use network::{
    build_weights, contraction_factor, is_strongly_connected, min_rounds_for_corollary,
    perron_left_vector, Digraph, NodeLabel, SpectralDiagnostics, WeightMatrix,
};
pub use resilient::{
    monte_carlo, run_resilient, AdversaryPolicy, BroadcastAdversaryMode, ClassificationChange,
    MessagePolicy, ResilientRun, ResilientRunConfig, RunSummary, TrustConfig,
};
pub use rng::CounterRng;
pub use trust::{
    misclass_bound, observe_tf, sample_tau, tf_cumulative_tail_bound, tf_tail_bound,
    TrustEdgeModel, TrustLedger,
};
