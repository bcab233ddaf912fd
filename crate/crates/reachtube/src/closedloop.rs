//! Reach tubes: the controller network composed with polynomial plant
//! dynamics over a step horizon, plus safety checks against unsafe boxes.
//!
//! Each step propagates the state models through the network, applies the
//! transition polynomials, and records conservative per-variable bounds. With
//! a deadzone configured, trajectories that have entered the settling band
//! stop moving; the tube tracks a hull of every band intersection seen so far
//! so that early-settled trajectories stay enclosed, and once the whole
//! enclosure is inside the band the tube is captured and repeats its bounds
//! for the remaining steps.

use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::interval::Interval;
use crate::network::{network_reach, Network};
use crate::scenario::{DynamicsSpec, ReachOptions, SafetySpec};
use crate::taylor::{Domain, TaylorModel, TmError};

/// Any bound beyond this magnitude marks the tube diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// One recorded step: the state models and their interval bounds.
#[derive(Debug, Clone)]
pub struct TubeStep {
    pub tms: Vec<TaylorModel>,
    pub bounds: Vec<Interval>,
}

/// Per-step enclosures of every trajectory from the initial box.
#[derive(Debug, Clone)]
pub struct ReachTube {
    pub steps: Vec<TubeStep>,
    /// Step at which bounds left the divergence limit; the tube is truncated
    /// there.
    pub diverged_at: Option<usize>,
    /// Step at which the whole enclosure entered the deadzone band.
    pub captured_at: Option<usize>,
    /// Options the tube was computed with.
    pub options: ReachOptions,
}

impl ReachTube {
    pub fn is_diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    pub fn state_dim(&self) -> usize {
        self.steps.first().map_or(0, |s| s.bounds.len())
    }

    /// Per-step bounds as CSV rows `step,var,lo,hi`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "step,var,lo,hi")?;
        for (t, step) in self.steps.iter().enumerate() {
            for (v, b) in step.bounds.iter().enumerate() {
                writeln!(w, "{t},{v},{},{}", b.lo(), b.hi())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    VerifiedSafe,
    PossiblyUnsafe,
    Diverged,
}

/// Outcome of checking a tube against a safety specification. Only
/// `verified_safe` is a proof; the other kinds are conservative.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub first_violation_step: Option<usize>,
    pub final_bounds: Vec<Interval>,
}

impl Verdict {
    pub fn is_safe(&self) -> bool {
        self.kind == VerdictKind::VerifiedSafe
    }
}

/// Apply the transition polynomials to state/action models, truncating every
/// product to order `k`.
pub fn dynamics_step(
    state_tms: &[TaylorModel],
    action_tms: &[TaylorModel],
    dynamics: &DynamicsSpec,
    k: u32,
) -> Result<Vec<TaylorModel>, TmError> {
    if state_tms.len() != dynamics.state_dim {
        return Err(TmError::DimensionMismatch {
            expected: dynamics.state_dim,
            found: state_tms.len(),
        });
    }
    if action_tms.len() != dynamics.action_dim {
        return Err(TmError::DimensionMismatch {
            expected: dynamics.action_dim,
            found: action_tms.len(),
        });
    }
    let domain = state_tms[0].domain();
    let mut next = Vec::with_capacity(dynamics.state_dim);
    for terms in &dynamics.transitions {
        let mut acc = TaylorModel::zero(domain, k);
        for term in terms {
            if term.coefficient == 0.0 {
                continue;
            }
            let mut factor = TaylorModel::constant(term.coefficient, domain, k);
            for (tm, &e) in state_tms.iter().zip(&term.state_exponents) {
                for _ in 0..e {
                    factor = factor.mul(tm, k)?;
                }
            }
            for (tm, &e) in action_tms.iter().zip(&term.action_exponents) {
                for _ in 0..e {
                    factor = factor.mul(tm, k)?;
                }
            }
            acc = acc.add(&factor)?;
        }
        next.push(acc);
    }
    Ok(next)
}

/// Compute the reach tube of the closed loop over `steps` control periods.
///
/// Every `reinit_period` steps each state model is replaced by the affine
/// re-initialization of its current bounds, which controls remainder blowup
/// at the cost of dropping inter-variable correlation. Observation noise, if
/// configured, widens the models the controller sees but not the plant state.
pub fn reach_trajectory(
    net: &Network,
    dynamics: &DynamicsSpec,
    init_box: &[Interval],
    steps: usize,
    opts: &ReachOptions,
) -> Result<ReachTube, TmError> {
    if init_box.len() != dynamics.state_dim {
        return Err(TmError::DimensionMismatch {
            expected: dynamics.state_dim,
            found: init_box.len(),
        });
    }
    if net.input_dim() != dynamics.state_dim {
        return Err(TmError::DimensionMismatch {
            expected: dynamics.state_dim,
            found: net.input_dim(),
        });
    }
    if net.output_dim() != dynamics.action_dim {
        return Err(TmError::DimensionMismatch {
            expected: dynamics.action_dim,
            found: net.output_dim(),
        });
    }

    let k = opts.truncation_order;
    let prop = opts.propagation();
    let domain = Arc::new(Domain::canonical(dynamics.state_dim));
    let mut tms: Vec<TaylorModel> = init_box
        .iter()
        .enumerate()
        .map(|(i, &iv)| TaylorModel::from_interval(iv, i, &domain, k))
        .collect::<Result<_, _>>()?;

    let mut tube = ReachTube {
        steps: vec![TubeStep {
            tms: tms.clone(),
            bounds: init_box.to_vec(),
        }],
        diverged_at: None,
        captured_at: None,
        options: opts.clone(),
    };

    let dz = opts.deadzone.as_ref();
    // Hull of every (bounds ∩ deadzone band) seen so far: a trajectory can
    // only be frozen at a point that was inside the band when it settled.
    let mut frozen_hull: Option<Vec<Interval>> = None;
    let absorb_frozen = |frozen: &mut Option<Vec<Interval>>, bounds: &[Interval]| {
        if let Some(dz) = dz {
            let inter: Option<Vec<Interval>> = bounds
                .iter()
                .enumerate()
                .map(|(v, b)| b.intersection(&dz.band(v)))
                .collect();
            if let Some(inter) = inter {
                *frozen = Some(match frozen.take() {
                    Some(prev) => prev.iter().zip(&inter).map(|(a, b)| a.hull(b)).collect(),
                    None => inter,
                });
            }
        }
    };
    let captured_now = |bounds: &[Interval]| {
        dz.map_or(false, |dz| {
            bounds
                .iter()
                .enumerate()
                .all(|(v, b)| dz.band(v).contains_interval(b))
        })
    };

    absorb_frozen(&mut frozen_hull, init_box);
    let mut captured = captured_now(init_box);
    if captured {
        tube.captured_at = Some(0);
    }

    for t in 1..=steps {
        if captured {
            let last = tube.steps.last().unwrap().clone();
            tube.steps.push(last);
            continue;
        }

        let step_result = (|| {
            let net_input: Vec<TaylorModel> = if opts.noise_radius.is_empty() {
                tms.clone()
            } else {
                tms.iter()
                    .zip(&opts.noise_radius)
                    .map(|(tm, &r)| if r > 0.0 { tm.inflate(r) } else { tm.clone() })
                    .collect()
            };
            let actions = network_reach(net, &net_input, &prop)?;
            dynamics_step(&tms, &actions, dynamics, k)
        })();
        let next = match step_result {
            Ok(next) => next,
            Err(TmError::NonFiniteBounds) => {
                tube.diverged_at = Some(t);
                break;
            }
            Err(e) => return Err(e),
        };

        let mut bounds: Vec<Interval> = next.iter().map(TaylorModel::bounds).collect();
        if bounds
            .iter()
            .any(|b| !b.is_finite() || b.max_abs() > DIVERGENCE_LIMIT)
        {
            tube.diverged_at = Some(t);
            break;
        }

        if let Some(frozen) = &frozen_hull {
            bounds = bounds.iter().zip(frozen).map(|(b, f)| b.hull(f)).collect();
        }
        absorb_frozen(&mut frozen_hull, &bounds);
        if captured_now(&bounds) {
            captured = true;
            tube.captured_at = Some(t);
        }

        tube.steps.push(TubeStep {
            tms: next.clone(),
            bounds: bounds.clone(),
        });

        tms = if opts.reinit_period > 0 && t as u32 % opts.reinit_period == 0 {
            bounds
                .iter()
                .enumerate()
                .map(|(i, &b)| TaylorModel::from_interval(b, i, &domain, k))
                .collect::<Result<_, _>>()?
        } else {
            next
        };
    }

    Ok(tube)
}

/// Safe iff every step's bounds are disjoint from every unsafe box. A
/// diverged tube that shows no concrete overlap still cannot be verified.
pub fn check_safety(tube: &ReachTube, safety: &SafetySpec) -> Verdict {
    let final_bounds = tube.steps.last().map(|s| s.bounds.clone()).unwrap_or_default();
    for (t, step) in tube.steps.iter().enumerate() {
        for region in &safety.unsafe_regions {
            debug_assert_eq!(region.len(), step.bounds.len());
            let overlaps = region
                .iter()
                .zip(&step.bounds)
                .all(|(r, b)| r.intersects(b));
            if overlaps {
                return Verdict {
                    kind: VerdictKind::PossiblyUnsafe,
                    first_violation_step: Some(t),
                    final_bounds,
                };
            }
        }
    }
    if tube.is_diverged() {
        return Verdict {
            kind: VerdictKind::Diverged,
            first_violation_step: None,
            final_bounds,
        };
    }
    Verdict {
        kind: VerdictKind::VerifiedSafe,
        first_violation_step: None,
        final_bounds,
    }
}
