//! Scenario files: polynomial plant dynamics, initial box, unsafe regions,
//! goal/deadzone, horizon, and numeric options.
//!
//! ```json
//! {
//!   "state_dim": 1,
//!   "action_dim": 1,
//!   "dynamics": [
//!     [ { "coefficient": 1.0, "state_exponents": [1], "action_exponents": [0] },
//!       { "coefficient": 0.1, "state_exponents": [0], "action_exponents": [1] } ]
//!   ],
//!   "initial_box": [[0.9, 1.1]],
//!   "unsafe_regions": [ [[2.0, 1.0e9]] ],
//!   "goal_region": [[0.0, 0.0]],
//!   "deadzone": [0.1],
//!   "steps": 60,
//!   "options": { "order": 2, "bernstein_order": 4, "bernstein_steps": 200,
//!                "reinit_period": 1, "noise_radius": 0.0 }
//! }
//! ```
//!
//! `dynamics[i]` lists the terms of the transition polynomial for state
//! variable `i`: `coefficient * prod(state^state_exponents) *
//! prod(action^action_exponents)`.

use std::fs;
use std::io;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::interval::Interval;
use crate::network::{PropagationMode, PropagationOptions};

/// Default cap on the total degree of a single transition term.
pub const DEFAULT_MAX_TERM_DEGREE: u32 = 3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to read scenario file: {0}")]
    Io(#[from] io::Error),
    #[error("failed to parse scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// One term of a transition polynomial.
#[derive(Debug, Clone, Deserialize)]
pub struct TransitionTerm {
    pub coefficient: f64,
    pub state_exponents: Vec<u32>,
    pub action_exponents: Vec<u32>,
}

impl TransitionTerm {
    pub fn total_degree(&self) -> u32 {
        self.state_exponents.iter().sum::<u32>() + self.action_exponents.iter().sum::<u32>()
    }
}

/// Discrete-time polynomial plant: one term list per state variable, applied
/// once per control period.
#[derive(Debug, Clone)]
pub struct DynamicsSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub transitions: Vec<Vec<TransitionTerm>>,
}

impl DynamicsSpec {
    pub fn validate(&self, max_term_degree: u32) -> Result<(), ScenarioError> {
        if self.transitions.len() != self.state_dim {
            return Err(invalid(format!(
                "dynamics lists {} transition polynomials for state_dim {}",
                self.transitions.len(),
                self.state_dim
            )));
        }
        for (var, terms) in self.transitions.iter().enumerate() {
            for (idx, term) in terms.iter().enumerate() {
                if term.state_exponents.len() != self.state_dim {
                    return Err(invalid(format!(
                        "dynamics[{var}][{idx}]: state exponent vector has length {}, expected {}",
                        term.state_exponents.len(),
                        self.state_dim
                    )));
                }
                if term.action_exponents.len() != self.action_dim {
                    return Err(invalid(format!(
                        "dynamics[{var}][{idx}]: action exponent vector has length {}, expected {}",
                        term.action_exponents.len(),
                        self.action_dim
                    )));
                }
                if !term.coefficient.is_finite() {
                    return Err(invalid(format!(
                        "dynamics[{var}][{idx}]: non-finite coefficient"
                    )));
                }
                if term.total_degree() > max_term_degree {
                    return Err(invalid(format!(
                        "dynamics[{var}][{idx}]: total degree {} exceeds the maximum {}",
                        term.total_degree(),
                        max_term_degree
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact next state for a point state/action pair.
    pub fn eval(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        debug_assert_eq!(state.len(), self.state_dim);
        debug_assert_eq!(action.len(), self.action_dim);
        self.transitions
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|t| {
                        let mut v = t.coefficient;
                        for (x, &e) in state.iter().zip(&t.state_exponents) {
                            if e > 0 {
                                v *= x.powi(e as i32);
                            }
                        }
                        for (a, &e) in action.iter().zip(&t.action_exponents) {
                            if e > 0 {
                                v *= a.powi(e as i32);
                            }
                        }
                        v
                    })
                    .sum()
            })
            .collect()
    }
}

/// Goal point and per-variable half-widths of the settling band. Once every
/// state variable is inside `goal ± half_width`, the system counts as
/// settled and dynamics are frozen.
#[derive(Debug, Clone)]
pub struct DeadzoneSpec {
    pub goal: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl DeadzoneSpec {
    pub fn band(&self, var: usize) -> Interval {
        Interval::new(
            self.goal[var] - self.half_widths[var],
            self.goal[var] + self.half_widths[var],
        )
    }

    pub fn contains_point(&self, state: &[f64]) -> bool {
        state
            .iter()
            .enumerate()
            .all(|(v, &x)| self.band(v).contains(x))
    }
}

/// Unsafe regions (axis-aligned boxes), optional goal region, and optional
/// per-variable deadzone half-widths.
#[derive(Debug, Clone, Default)]
pub struct SafetySpec {
    pub unsafe_regions: Vec<Vec<Interval>>,
    pub goal_region: Option<Vec<Interval>>,
    pub deadzone: Option<Vec<f64>>,
}

impl SafetySpec {
    pub fn validate(&self, state_dim: usize) -> Result<(), ScenarioError> {
        for (i, region) in self.unsafe_regions.iter().enumerate() {
            if region.len() != state_dim {
                return Err(invalid(format!(
                    "unsafe region {i} has {} dimensions, expected {state_dim}",
                    region.len()
                )));
            }
        }
        if let Some(goal) = &self.goal_region {
            if goal.len() != state_dim {
                return Err(invalid("goal region dimension mismatch"));
            }
        }
        if let Some(dz) = &self.deadzone {
            if dz.len() != state_dim {
                return Err(invalid("deadzone dimension mismatch"));
            }
            if dz.iter().any(|&w| !(w >= 0.0)) {
                return Err(invalid("deadzone half-widths must be non-negative"));
            }
            if self.goal_region.is_none() {
                return Err(invalid("deadzone requires a goal region"));
            }
        }
        Ok(())
    }

    /// The settling band, when both a goal and a deadzone are declared. The
    /// goal point is the center of the goal region.
    pub fn deadzone_spec(&self) -> Option<DeadzoneSpec> {
        let goal = self.goal_region.as_ref()?;
        let half_widths = self.deadzone.clone()?;
        Some(DeadzoneSpec {
            goal: goal.iter().map(Interval::center).collect(),
            half_widths,
        })
    }
}

/// Numeric options as they appear in a scenario file. Unset fields fall back
/// to defaults; the command line overrides both.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NumericOptions {
    pub order: Option<u32>,
    pub bernstein_order: Option<u32>,
    pub bernstein_steps: Option<u32>,
    pub reinit_period: Option<u32>,
    pub noise_radius: Option<NoiseRadius>,
}

/// Observation noise radius: one value for all state variables or one per
/// variable.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NoiseRadius {
    Scalar(f64),
    PerVariable(Vec<f64>),
}

impl NoiseRadius {
    fn resolve(&self, state_dim: usize) -> Result<Vec<f64>, ScenarioError> {
        let v = match self {
            NoiseRadius::Scalar(r) => vec![*r; state_dim],
            NoiseRadius::PerVariable(v) => v.clone(),
        };
        if v.len() != state_dim {
            return Err(invalid("noise_radius dimension mismatch"));
        }
        if v.iter().any(|&r| !(r >= 0.0)) {
            return Err(invalid("noise_radius must be non-negative"));
        }
        Ok(v)
    }
}

/// Fully resolved options driving one reach-tube computation.
#[derive(Debug, Clone)]
pub struct ReachOptions {
    /// Truncation order of the Taylor models (1..=6).
    pub truncation_order: u32,
    pub bernstein_order: u32,
    pub bernstein_steps: u32,
    /// Re-initialize state models from their bounds every this many steps;
    /// 0 never re-initializes.
    pub reinit_period: u32,
    /// Per-variable observation noise added to the controller input.
    pub noise_radius: Vec<f64>,
    pub mode: PropagationMode,
    pub deadzone: Option<DeadzoneSpec>,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            truncation_order: 2,
            bernstein_order: 4,
            bernstein_steps: 200,
            reinit_period: 1,
            noise_radius: Vec::new(),
            mode: PropagationMode::Optimized,
            deadzone: None,
        }
    }
}

impl ReachOptions {
    pub fn validate(&self, state_dim: usize) -> Result<(), ScenarioError> {
        if !(1..=6).contains(&self.truncation_order) {
            return Err(invalid("truncation order must be between 1 and 6"));
        }
        if self.bernstein_order < 1 {
            return Err(invalid("bernstein_order must be positive"));
        }
        if self.bernstein_steps < 1 {
            return Err(invalid("bernstein_steps must be positive"));
        }
        if !self.noise_radius.is_empty() && self.noise_radius.len() != state_dim {
            return Err(invalid("noise_radius dimension mismatch"));
        }
        Ok(())
    }

    pub fn propagation(&self) -> PropagationOptions {
        PropagationOptions {
            bernstein_order: self.bernstein_order,
            bernstein_steps: self.bernstein_steps,
            mode: self.mode,
        }
    }
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dynamics: DynamicsSpec,
    pub initial_box: Vec<Interval>,
    pub safety: SafetySpec,
    pub steps: usize,
    pub options: ReachOptions,
}

impl Scenario {
    pub fn from_json_str(doc: &str) -> Result<Self, ScenarioError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawScenario {
            state_dim: usize,
            action_dim: usize,
            dynamics: Vec<Vec<TransitionTerm>>,
            initial_box: Vec<Interval>,
            #[serde(default)]
            unsafe_regions: Vec<Vec<Interval>>,
            #[serde(default)]
            goal_region: Option<Vec<Interval>>,
            #[serde(default)]
            deadzone: Option<Vec<f64>>,
            steps: usize,
            #[serde(default)]
            options: NumericOptions,
            #[serde(default)]
            max_term_degree: Option<u32>,
        }

        let raw: RawScenario = serde_json::from_str(doc)?;
        if raw.state_dim == 0 {
            return Err(invalid("state_dim must be positive"));
        }
        if raw.initial_box.len() != raw.state_dim {
            return Err(invalid(format!(
                "initial_box has {} dimensions, expected {}",
                raw.initial_box.len(),
                raw.state_dim
            )));
        }
        let dynamics = DynamicsSpec {
            state_dim: raw.state_dim,
            action_dim: raw.action_dim,
            transitions: raw.dynamics,
        };
        dynamics.validate(raw.max_term_degree.unwrap_or(DEFAULT_MAX_TERM_DEGREE))?;
        let safety = SafetySpec {
            unsafe_regions: raw.unsafe_regions,
            goal_region: raw.goal_region,
            deadzone: raw.deadzone,
        };
        safety.validate(raw.state_dim)?;

        let defaults = ReachOptions::default();
        let options = ReachOptions {
            truncation_order: raw.options.order.unwrap_or(defaults.truncation_order),
            bernstein_order: raw
                .options
                .bernstein_order
                .unwrap_or(defaults.bernstein_order),
            bernstein_steps: raw
                .options
                .bernstein_steps
                .unwrap_or(defaults.bernstein_steps),
            reinit_period: raw.options.reinit_period.unwrap_or(defaults.reinit_period),
            noise_radius: match &raw.options.noise_radius {
                Some(n) => n.resolve(raw.state_dim)?,
                None => Vec::new(),
            },
            mode: PropagationMode::Optimized,
            deadzone: safety.deadzone_spec(),
        };
        options.validate(raw.state_dim)?;

        Ok(Scenario {
            dynamics,
            initial_box: raw.initial_box,
            safety,
            steps: raw.steps,
            options,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim
    }
}
