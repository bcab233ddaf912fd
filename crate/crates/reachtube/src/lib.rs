//! Guaranteed over-approximation of all trajectories of a neural-network
//! controlled discrete-time system, plus operational-profile reliability
//! assessment on top of the per-cell safety verdicts.
//!
//! The pipeline, bottom to top:
//!
//! - [`interval`], [`poly`], [`taylor`] — interval arithmetic, sparse
//!   multivariate polynomials, and Taylor-model arithmetic with conservative
//!   bound evaluation.
//! - [`bernstein`] — Bernstein-polynomial enclosures of activation functions
//!   with a sampled conservative error bound.
//! - [`network`] — loading a feedforward controller from a weight file and
//!   propagating Taylor models through it, with a three-case ReLU law that
//!   skips the Bernstein machinery for sign-definite neurons.
//! - [`scenario`], [`closedloop`] — polynomial plant dynamics, reach tubes
//!   over a step horizon, and safety checks against unsafe boxes.
//! - [`baseline`] — exact Monte Carlo rollouts, the point-based comparison
//!   method and the soundness oracle for tubes.
//! - [`opmodel`] — initial-state partitioning, empirical operational
//!   profiles, and the aggregated failure-probability estimate.

pub mod baseline;
pub mod bernstein;
pub mod closedloop;
pub mod interval;
pub mod network;
pub mod opmodel;
pub mod poly;
pub mod scenario;
pub mod taylor;

pub use baseline::{point_estimate, simulate_rollout, Rollout};
pub use bernstein::{Activation, BernsteinApprox};
pub use closedloop::{
    check_safety, dynamics_step, reach_trajectory, ReachTube, TubeStep, Verdict, VerdictKind,
};
pub use interval::Interval;
pub use network::{
    affine_step, network_reach, network_reach_stats, relu_propagate, Layer, Network, NetworkError,
    PropagationMode, PropagationOptions, PropagationStats,
};
pub use opmodel::{
    assess_reliability, assess_with_probabilities, convergence_curve, fit_op, kl_divergence,
    Cell, CellRecord, OpModelError, OperationalProfile, Partitioning, ReliabilityReport,
};
pub use poly::{Monomial, Polynomial};
pub use scenario::{
    DeadzoneSpec, DynamicsSpec, ReachOptions, SafetySpec, Scenario, ScenarioError, TransitionTerm,
};
pub use taylor::{poly_bounds, Domain, TaylorModel, TmError};
