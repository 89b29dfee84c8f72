//! Duopoly marketing over a social network.
//!
//! Consumers' opinions follow a consensus flow on an influence graph and jump
//! at campaign instants when two marketers spend on them. This crate provides
//! the graph model, the hybrid dynamics, the closed-form one-shot Nash
//! equilibrium of each campaign, multi-stage strategy profiles (repeated Nash
//! and coopetition) with their long-term utilities and sustainability
//! checks, and the experiment drivers behind the command-line tool.

pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod expm;
pub mod export;
pub mod graph;
pub mod stage_game;
pub mod strategy;

pub use dynamics::{
    flow, influence_power, jump, ActionVector, InfluencePower, OpinionVector, Player, Propagator, RhoMode,
};
pub use error::{Error, Result};
pub use expm::matrix_exponential;
pub use graph::{build_laplacian, cascading_benchmark, is_strongly_connected, Edge, GraphSpec, Laplacian};
pub use stage_game::{
    best_response, budget_threshold, eta, node_equilibrium, node_regime, one_shot_ne, stage_utilities,
    uniform_schedule, BudgetThreshold, Campaign, Costs, GameParameters, NodeRegime, RegimeTag, StageOutcome,
};
pub use strategy::{
    check_sustainability, contraction_trace, convergence_stage, long_term_utility, predict_equilibrium,
    prop1_certificate, run_profile, utility_gap, ConvergenceMetric, EquilibriumPrediction, EquilibriumRegime,
    History, Prop1Certificate, Simulator, StageRecord, Strategy, StrategyProfile, Sustainability,
};
