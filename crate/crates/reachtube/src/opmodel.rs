//! Operational profiles over the initial-state space and the aggregated
//! failure-probability estimate.
//!
//! The initial-state box is tiled by a regular grid of cells. An empirical
//! profile assigns each cell the fraction of observed initial states falling
//! into it — within the per-cell categorical family this histogram is the
//! exact KL minimizer, so no iterative fitting is involved. Reliability
//! aggregation weights each cell's safety verdict by its mass: a verdict that
//! is not `verified_safe` counts as failure probability one (a Dirac
//! conversion of the Boolean answer); a hook accepting fractional per-cell
//! failure probabilities is kept for verifiers that emit them.

use serde::Serialize;
use thiserror::Error;

use crate::closedloop::{Verdict, VerdictKind};
use crate::interval::Interval;

#[derive(Debug, Error)]
pub enum OpModelError {
    #[error("cells_per_dim has {found} entries, expected {expected}")]
    CellsDimensionMismatch { expected: usize, found: usize },
    #[error("cell count must be positive in every dimension")]
    ZeroCellCount,
    #[error("sample {row} has {found} columns, expected {expected}")]
    SampleDimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("no samples fall inside the partition bounds")]
    AllSamplesOutOfBounds,
    #[error("cell {cell} has mass {mass} but no verdict")]
    MissingVerdict { cell: usize, mass: f64 },
    #[error("cell {cell}: failure probability {value} outside [0, 1]")]
    InvalidProbability { cell: usize, value: f64 },
    #[error("invalid masses: {0}")]
    InvalidMass(String),
    #[error("invalid checkpoints: {0}")]
    BadCheckpoints(String),
}

/// One grid cell with its box and central point.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub index: usize,
    pub bounds: Vec<Interval>,
    pub center: Vec<f64>,
}

/// Regular grid tiling of the initial-state bounds. Cells are ordered
/// row-major with the first dimension slowest.
#[derive(Debug, Clone, Serialize)]
pub struct Partitioning {
    pub bounds: Vec<Interval>,
    pub cells_per_dim: Vec<usize>,
    #[serde(skip_serializing)]
    edges: Vec<Vec<f64>>,
    #[serde(skip_serializing)]
    cells: Vec<Cell>,
}

fn edge(b: &Interval, i: usize, n: usize) -> f64 {
    if i == 0 {
        b.lo()
    } else if i == n {
        b.hi()
    } else {
        b.lo() + b.width() * (i as f64) / (n as f64)
    }
}

impl Partitioning {
    pub fn new(bounds: Vec<Interval>, cells_per_dim: Vec<usize>) -> Result<Self, OpModelError> {
        if cells_per_dim.len() != bounds.len() {
            return Err(OpModelError::CellsDimensionMismatch {
                expected: bounds.len(),
                found: cells_per_dim.len(),
            });
        }
        if cells_per_dim.iter().any(|&n| n == 0) {
            return Err(OpModelError::ZeroCellCount);
        }
        let edges: Vec<Vec<f64>> = bounds
            .iter()
            .zip(&cells_per_dim)
            .map(|(b, &n)| (0..=n).map(|i| edge(b, i, n)).collect())
            .collect();

        let total: usize = cells_per_dim.iter().product();
        let dim = bounds.len();
        let mut cells = Vec::with_capacity(total);
        for index in 0..total {
            // decode row-major index, first dimension slowest
            let mut rest = index;
            let mut idx = vec![0usize; dim];
            for d in (0..dim).rev() {
                idx[d] = rest % cells_per_dim[d];
                rest /= cells_per_dim[d];
            }
            let cell_bounds: Vec<Interval> = (0..dim)
                .map(|d| Interval::new(edges[d][idx[d]], edges[d][idx[d] + 1]))
                .collect();
            let center: Vec<f64> = cell_bounds.iter().map(Interval::center).collect();
            cells.push(Cell {
                index,
                bounds: cell_bounds,
                center,
            });
        }
        Ok(Partitioning {
            bounds,
            cells_per_dim,
            edges,
            cells,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Cell index containing `x`, or `None` when out of bounds. Cells own
    /// their lower edge; the last cell in each dimension also owns the upper
    /// bound.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        debug_assert_eq!(x.len(), self.dim());
        let mut index = 0usize;
        for d in 0..self.dim() {
            if !self.bounds[d].contains(x[d]) {
                return None;
            }
            let n = self.cells_per_dim[d];
            let inner = &self.edges[d][1..n];
            let j = inner.partition_point(|&e| e <= x[d]);
            index = index * n + j;
        }
        Some(index)
    }
}

/// Empirical distribution of initial states over a partitioning.
#[derive(Debug, Clone, Serialize)]
pub struct OperationalProfile {
    pub partitioning: Partitioning,
    pub mass: Vec<f64>,
    pub sample_count: usize,
    pub out_of_bounds: usize,
}

impl OperationalProfile {
    /// Build a profile from explicit masses (they must sum to one).
    pub fn from_masses(
        partitioning: Partitioning,
        mass: Vec<f64>,
        sample_count: usize,
    ) -> Result<Self, OpModelError> {
        if mass.len() != partitioning.cell_count() {
            return Err(OpModelError::InvalidMass(format!(
                "{} masses for {} cells",
                mass.len(),
                partitioning.cell_count()
            )));
        }
        if mass.iter().any(|&m| !(m >= 0.0)) {
            return Err(OpModelError::InvalidMass("negative mass".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(OpModelError::InvalidMass(format!("masses sum to {total}")));
        }
        Ok(OperationalProfile {
            partitioning,
            mass,
            sample_count,
            out_of_bounds: 0,
        })
    }
}

/// Fit the empirical histogram: cell mass is the fraction of in-bounds
/// samples landing in the cell. Out-of-bounds samples are counted and
/// excluded.
pub fn fit_op(samples: &[Vec<f64>], part: &Partitioning) -> Result<OperationalProfile, OpModelError> {
    let mut counts = vec![0usize; part.cell_count()];
    let mut out_of_bounds = 0usize;
    for (row, s) in samples.iter().enumerate() {
        if s.len() != part.dim() {
            return Err(OpModelError::SampleDimensionMismatch {
                row,
                expected: part.dim(),
                found: s.len(),
            });
        }
        match part.locate(s) {
            Some(i) => counts[i] += 1,
            None => out_of_bounds += 1,
        }
    }
    let in_bounds = samples.len() - out_of_bounds;
    if in_bounds == 0 {
        return Err(OpModelError::AllSamplesOutOfBounds);
    }
    let mass: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 / in_bounds as f64)
        .collect();
    Ok(OperationalProfile {
        partitioning: part.clone(),
        mass,
        sample_count: in_bounds,
        out_of_bounds,
    })
}

/// One row of a reliability report.
#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub cell: usize,
    pub mass: f64,
    pub failure_probability: f64,
    pub verdict: Option<VerdictKind>,
}

/// Per-cell outcomes and the operational-profile-weighted failure
/// probability. The aggregate is a probability of failure: zero means every
/// massive cell was verified safe.
#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityReport {
    pub per_cell: Vec<CellRecord>,
    pub failure_probability: f64,
    pub cells_verified: usize,
    pub convergence: Option<Vec<(usize, f64)>>,
}

/// Aggregate fractional per-cell failure probabilities. Cells with zero mass
/// may be skipped (`None`); a massive cell without an entry is an error.
pub fn assess_with_probabilities(
    profile: &OperationalProfile,
    failure: &[Option<f64>],
) -> Result<ReliabilityReport, OpModelError> {
    assert_eq!(failure.len(), profile.mass.len(), "one entry per cell");
    let mut per_cell = Vec::with_capacity(failure.len());
    let mut estimate = 0.0;
    let mut cells_verified = 0usize;
    for (cell, (&mass, f)) in profile.mass.iter().zip(failure).enumerate() {
        let p = match f {
            Some(p) => {
                if !(0.0..=1.0).contains(p) {
                    return Err(OpModelError::InvalidProbability { cell, value: *p });
                }
                cells_verified += 1;
                *p
            }
            None => {
                if mass > 0.0 {
                    return Err(OpModelError::MissingVerdict { cell, mass });
                }
                0.0
            }
        };
        estimate += mass * p;
        per_cell.push(CellRecord {
            cell,
            mass,
            failure_probability: p,
            verdict: None,
        });
    }
    Ok(ReliabilityReport {
        per_cell,
        failure_probability: estimate,
        cells_verified,
        convergence: None,
    })
}

/// Aggregate Boolean verdicts: `verified_safe` contributes zero, anything
/// else contributes its full cell mass.
pub fn assess_reliability(
    profile: &OperationalProfile,
    verdicts: &[Option<Verdict>],
) -> Result<ReliabilityReport, OpModelError> {
    let failure: Vec<Option<f64>> = verdicts
        .iter()
        .map(|v| v.as_ref().map(|v| if v.is_safe() { 0.0 } else { 1.0 }))
        .collect();
    let mut report = assess_with_probabilities(profile, &failure)?;
    for (record, v) in report.per_cell.iter_mut().zip(verdicts) {
        record.verdict = v.as_ref().map(|v| v.kind);
    }
    Ok(report)
}

/// Reliability estimates over growing sample prefixes, for convergence
/// plots. Verdicts are reused across checkpoints.
pub fn convergence_curve(
    samples: &[Vec<f64>],
    part: &Partitioning,
    verdicts: &[Option<Verdict>],
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>, OpModelError> {
    for (i, &n) in checkpoints.iter().enumerate() {
        if n == 0 || n > samples.len() {
            return Err(OpModelError::BadCheckpoints(format!(
                "checkpoint {n} outside 1..={}",
                samples.len()
            )));
        }
        if i > 0 && checkpoints[i - 1] >= n {
            return Err(OpModelError::BadCheckpoints(
                "checkpoints must be strictly increasing".into(),
            ));
        }
    }
    checkpoints
        .iter()
        .map(|&n| {
            let profile = fit_op(&samples[..n], part)?;
            let report = assess_reliability(&profile, verdicts)?;
            Ok((n, report.failure_probability))
        })
        .collect()
}

/// `KL(p || q)` for categorical distributions; infinite when `p` puts mass
/// where `q` has none.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    kl
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn verdict(kind: VerdictKind) -> Verdict {
        Verdict {
            kind,
            first_violation_step: None,
            final_bounds: Vec::new(),
        }
    }

    fn safe() -> Option<Verdict> {
        Some(verdict(VerdictKind::VerifiedSafe))
    }

    fn unsafe_() -> Option<Verdict> {
        Some(verdict(VerdictKind::PossiblyUnsafe))
    }

    #[test]
    fn unit_interval_four_cells() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![4]).unwrap();
        assert_eq!(part.cell_count(), 4);
        let expected = [(0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)];
        let centers = [0.125, 0.375, 0.625, 0.875];
        for (i, cell) in part.cells().iter().enumerate() {
            assert!((cell.bounds[0].lo() - expected[i].0).abs() < 1e-15);
            assert!((cell.bounds[0].hi() - expected[i].1).abs() < 1e-15);
            assert!((cell.center[0] - centers[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_grid() {
        let part = Partitioning::new(
            vec![Interval::new(0.0, 1.0), Interval::new(0.0, 2.0)],
            vec![2, 2],
        )
        .unwrap();
        assert_eq!(part.cell_count(), 4);
        // row-major, first dimension slowest
        assert_eq!(part.cells()[1].bounds[0], Interval::new(0.0, 0.5));
        assert_eq!(part.cells()[1].bounds[1], Interval::new(1.0, 2.0));
        assert_eq!(part.cells()[2].bounds[0], Interval::new(0.5, 1.0));
        assert_eq!(part.cells()[2].bounds[1], Interval::new(0.0, 1.0));
    }

    #[test]
    fn single_cell_is_the_bounds() {
        let part = Partitioning::new(vec![Interval::new(-1.0, 3.0)], vec![1]).unwrap();
        assert_eq!(part.cells()[0].bounds[0], Interval::new(-1.0, 3.0));
    }

    #[test]
    fn zero_cell_count_is_rejected() {
        assert!(matches!(
            Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![0]),
            Err(OpModelError::ZeroCellCount)
        ));
    }

    #[test]
    fn cells_tile_exactly() {
        let part = Partitioning::new(
            vec![Interval::new(-0.3, 1.7), Interval::new(2.0, 5.0)],
            vec![7, 3],
        )
        .unwrap();
        // adjacent cells share edges bitwise and the outer edges are the bounds
        for d in 0..2 {
            let edges = &part.edges[d];
            assert_eq!(edges[0], part.bounds[d].lo());
            assert_eq!(*edges.last().unwrap(), part.bounds[d].hi());
            for w in edges.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = [rng.gen_range(-0.3..=1.7), rng.gen_range(2.0..=5.0)];
            assert!(part.locate(&x).is_some());
        }
        assert!(part.locate(&[-0.31, 3.0]).is_none());
        assert!(part.locate(&[0.0, 5.01]).is_none());
    }

    #[test]
    fn fit_empirical_frequencies() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let samples = vec![vec![0.1], vec![0.1], vec![0.1], vec![0.6]];
        let p = fit_op(&samples, &part).unwrap();
        assert_eq!(p.mass, vec![0.75, 0.25]);
        assert_eq!(p.sample_count, 4);
        assert_eq!(p.out_of_bounds, 0);
    }

    #[test]
    fn fit_uniform_large_sample() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<Vec<f64>> = (0..10_000).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let p = fit_op(&samples, &part).unwrap();
        for m in &p.mass {
            assert!((m - 0.25).abs() < 0.02, "mass {m}");
        }
        let total: f64 = p.mass.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fit_single_sample() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![5]).unwrap();
        let p = fit_op(&[vec![0.55]], &part).unwrap();
        assert_eq!(p.mass[2], 1.0);
        assert_eq!(p.mass.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn fit_counts_out_of_bounds() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let p = fit_op(&[vec![0.5], vec![7.0]], &part).unwrap();
        assert_eq!(p.out_of_bounds, 1);
        assert_eq!(p.sample_count, 1);
        assert!(matches!(
            fit_op(&[vec![7.0]], &part),
            Err(OpModelError::AllSamplesOutOfBounds)
        ));
    }

    #[test]
    fn assess_direct_formula() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let profile = OperationalProfile::from_masses(part, vec![0.3, 0.7], 10).unwrap();
        let report = assess_reliability(&profile, &[unsafe_(), safe()]).unwrap();
        assert_eq!(report.failure_probability, 0.3);
        assert_eq!(report.cells_verified, 2);
    }

    #[test]
    fn assess_all_safe_is_zero() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![4]).unwrap();
        let profile =
            OperationalProfile::from_masses(part, vec![0.25, 0.25, 0.25, 0.25], 4).unwrap();
        let report =
            assess_reliability(&profile, &[safe(), safe(), safe(), safe()]).unwrap();
        assert_eq!(report.failure_probability, 0.0);
    }

    #[test]
    fn assess_uniform_one_failing() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![4]).unwrap();
        let profile =
            OperationalProfile::from_masses(part, vec![0.25, 0.25, 0.25, 0.25], 4).unwrap();
        let report =
            assess_reliability(&profile, &[safe(), unsafe_(), safe(), safe()]).unwrap();
        assert_eq!(report.failure_probability, 0.25);
    }

    #[test]
    fn assess_requires_verdicts_for_massive_cells() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let profile = OperationalProfile::from_masses(part, vec![0.3, 0.7], 10).unwrap();
        let err = assess_reliability(&profile, &[None, safe()]).unwrap_err();
        assert!(matches!(err, OpModelError::MissingVerdict { cell: 0, .. }), "{err}");
        // zero-mass cells may be skipped
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let profile = OperationalProfile::from_masses(part, vec![1.0, 0.0], 10).unwrap();
        let report = assess_reliability(&profile, &[safe(), None]).unwrap();
        assert_eq!(report.failure_probability, 0.0);
        assert_eq!(report.cells_verified, 1);
    }

    #[test]
    fn convergence_all_safe_is_zeros() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let samples: Vec<Vec<f64>> = (0..100).map(|i| vec![(i as f64 + 0.5) / 100.0]).collect();
        let series =
            convergence_curve(&samples, &part, &[safe(), safe()], &[10, 50, 100]).unwrap();
        assert_eq!(series, vec![(10, 0.0), (50, 0.0), (100, 0.0)]);
    }

    #[test]
    fn convergence_final_checkpoint_matches_direct_assessment() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let verdicts = [unsafe_(), safe()];
        let series = convergence_curve(&samples, &part, &verdicts, &[500]).unwrap();
        let profile = fit_op(&samples, &part).unwrap();
        let direct = assess_reliability(&profile, &verdicts).unwrap();
        assert_eq!(series[0], (500, direct.failure_probability));
    }

    #[test]
    fn convergence_two_cell_mixture() {
        // mixture (0.8, 0.2); the failing cell is the second
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                if rng.gen_bool(0.8) {
                    vec![rng.gen_range(0.0..0.5)]
                } else {
                    vec![rng.gen_range(0.5..1.0)]
                }
            })
            .collect();
        let verdicts = [safe(), unsafe_()];
        let series = convergence_curve(&samples, &part, &verdicts, &[100, 10_000]).unwrap();
        let (_, early) = series[0];
        let (_, late) = series[1];
        assert!((late - 0.2).abs() < 0.02, "late estimate {late}");
        assert!((late - 0.2).abs() <= (early - 0.2).abs() + 1e-12);
    }

    #[test]
    fn convergence_rejects_bad_checkpoints() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![1]).unwrap();
        let samples = vec![vec![0.5]; 10];
        assert!(convergence_curve(&samples, &part, &[safe()], &[5, 5]).is_err());
        assert!(convergence_curve(&samples, &part, &[safe()], &[11]).is_err());
        assert!(convergence_curve(&samples, &part, &[safe()], &[0]).is_err());
    }

    #[test]
    fn flip_increases_estimate_by_cell_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..1000 {
            let cells = rng.gen_range(2..=20usize);
            let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![cells]).unwrap();
            let raw: Vec<f64> = (0..cells).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mut mass: Vec<f64> = raw.iter().map(|r| r / total).collect();
            // force the exact-sum invariant the constructor checks
            let correction: f64 = 1.0 - mass.iter().sum::<f64>();
            mass[0] += correction;
            let profile = OperationalProfile::from_masses(part, mass.clone(), 100).unwrap();
            let mut verdicts: Vec<Option<Verdict>> = (0..cells)
                .map(|_| if rng.gen_bool(0.5) { safe() } else { unsafe_() })
                .collect();
            let base = assess_reliability(&profile, &verdicts).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&base.failure_probability));
            // flip one safe cell to unsafe
            let safe_cells: Vec<usize> = verdicts
                .iter()
                .enumerate()
                .filter(|(_, v)| v.as_ref().is_some_and(Verdict::is_safe))
                .map(|(i, _)| i)
                .collect();
            if safe_cells.is_empty() {
                continue;
            }
            let flip = safe_cells[rng.gen_range(0..safe_cells.len())];
            verdicts[flip] = unsafe_();
            let flipped = assess_reliability(&profile, &verdicts).unwrap();
            let delta = flipped.failure_probability - base.failure_probability;
            assert!(delta >= 0.0);
            assert!((delta - mass[flip]).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_is_the_kl_minimizer() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let samples: Vec<Vec<f64>> = (0..500).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let p = fit_op(&samples, &part).unwrap();
        // empirical counts normalized are the fit itself: KL must be zero
        let mut counts = vec![0usize; 4];
        for s in &samples {
            counts[part.locate(s).unwrap()] += 1;
        }
        let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / 500.0).collect();
        assert!(kl_divergence(&p.mass, &empirical) < 1e-12);
    }

    // Doubling the grid and merging sibling cells reproduces the coarse fit.
    #[test]
    fn refinement_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let bounds = vec![Interval::new(-1.0, 2.0), Interval::new(0.5, 0.9)];
        let coarse = Partitioning::new(bounds.clone(), vec![4, 3]).unwrap();
        let fine = Partitioning::new(bounds, vec![8, 6]).unwrap();
        let samples: Vec<Vec<f64>> = (0..5000)
            .map(|_| vec![rng.gen_range(-1.0..=2.0), rng.gen_range(0.5..=0.9)])
            .collect();
        let pc = fit_op(&samples, &coarse).unwrap();
        let pf = fit_op(&samples, &fine).unwrap();
        assert_eq!(pc.sample_count, pf.sample_count);
        let n = pc.sample_count as f64;
        for c0 in 0..4 {
            for c1 in 0..3 {
                let coarse_idx = c0 * 3 + c1;
                // the four fine siblings of the coarse cell
                let mut merged_count = 0.0;
                for f0 in [2 * c0, 2 * c0 + 1] {
                    for f1 in [2 * c1, 2 * c1 + 1] {
                        let fine_idx = f0 * 6 + f1;
                        merged_count += (pf.mass[fine_idx] * n).round();
                    }
                }
                assert_eq!(pc.mass[coarse_idx], merged_count / n);
            }
        }
    }

    #[test]
    fn probabilistic_hook_validates_range() {
        let part = Partitioning::new(vec![Interval::new(0.0, 1.0)], vec![2]).unwrap();
        let profile = OperationalProfile::from_masses(part, vec![0.5, 0.5], 10).unwrap();
        let report =
            assess_with_probabilities(&profile, &[Some(0.25), Some(0.75)]).unwrap();
        assert_eq!(report.failure_probability, 0.5);
        assert!(matches!(
            assess_with_probabilities(&profile, &[Some(1.5), Some(0.0)]),
            Err(OpModelError::InvalidProbability { cell: 0, .. })
        ));
    }
}
