//! Exact point-based rollouts: the soundness oracle for reach tubes and the
//! point-based comparison estimator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::interval::Interval;
use crate::network::Network;
use crate::opmodel::OperationalProfile;
use crate::scenario::{DynamicsSpec, SafetySpec};

/// One exact trajectory: `states[t+1] = dynamics(states[t], actions[t])`.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub safe: bool,
    pub violation_step: Option<usize>,
}

fn in_region(state: &[f64], region: &[Interval]) -> bool {
    state.iter().zip(region).all(|(&x, r)| r.contains(x))
}

fn in_any_unsafe(state: &[f64], safety: &SafetySpec) -> bool {
    safety.unsafe_regions.iter().any(|r| in_region(state, r))
}

/// Exact double-precision forward simulation with the same deadzone freeze
/// rule the tube uses: once every variable sits inside the settling band, the
/// state stops moving.
pub fn simulate_rollout(
    net: &Network,
    dynamics: &DynamicsSpec,
    x0: &[f64],
    steps: usize,
    safety: &SafetySpec,
) -> Rollout {
    assert_eq!(x0.len(), dynamics.state_dim, "initial state width");
    let deadzone = safety.deadzone_spec();
    let mut states = vec![x0.to_vec()];
    let mut actions = Vec::with_capacity(steps);
    let mut safe = true;
    let mut violation_step = None;
    if in_any_unsafe(x0, safety) {
        safe = false;
        violation_step = Some(0);
    }
    let mut frozen = false;
    for t in 1..=steps {
        let x = states.last().unwrap().clone();
        frozen = frozen || deadzone.as_ref().map_or(false, |dz| dz.contains_point(&x));
        let a = net.eval(&x);
        let next = if frozen { x } else { dynamics.eval(&x, &a) };
        actions.push(a);
        let finite = next.iter().all(|v| v.is_finite());
        states.push(next);
        if !finite {
            safe = false;
            if violation_step.is_none() {
                violation_step = Some(t);
            }
            break;
        }
        if violation_step.is_none() && in_any_unsafe(states.last().unwrap(), safety) {
            safe = false;
            violation_step = Some(t);
        }
    }
    Rollout {
        states,
        actions,
        safe,
        violation_step,
    }
}

/// Point-based failure estimate: uniform rollouts inside each cell, weighted
/// by the profile mass. Each cell draws from its own stream of the seeded
/// generator, so results do not depend on evaluation order.
pub fn point_estimate(
    net: &Network,
    dynamics: &DynamicsSpec,
    safety: &SafetySpec,
    profile: &OperationalProfile,
    steps: usize,
    rollouts_per_cell: u32,
    seed: u64,
) -> f64 {
    assert!(rollouts_per_cell >= 1);
    let mut estimate = 0.0;
    for cell in profile.partitioning.cells() {
        let mass = profile.mass[cell.index];
        if mass == 0.0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(cell.index as u64);
        let mut unsafe_count = 0u32;
        for _ in 0..rollouts_per_cell {
            let x0: Vec<f64> = cell
                .bounds
                .iter()
                .map(|b| {
                    if b.width() > 0.0 {
                        rng.gen_range(b.lo()..b.hi())
                    } else {
                        b.lo()
                    }
                })
                .collect();
            if !simulate_rollout(net, dynamics, &x0, steps, safety).safe {
                unsafe_count += 1;
            }
        }
        estimate += mass * f64::from(unsafe_count) / f64::from(rollouts_per_cell);
    }
    estimate
}
