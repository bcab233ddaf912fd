//! Taylor models: a bounded-degree polynomial over a normalized input domain
//! plus an interval remainder.
//!
//! A Taylor model `(p, I)` over domain `D` encloses a function `f` when
//! `f(x) ∈ p(x) + I` for every `x ∈ D`. All models here are expressed over
//! the canonical symbolic box `[-1, 1]^n`; real-world state boxes are mapped
//! in and out through the affine center/radius transform of
//! [`TaylorModel::from_interval`].
//!
//! Soundness under double precision is kept testable by adding a fixed
//! outward slack to the remainder endpoints of every arithmetic operation,
//! instead of directed rounding. Coefficients below a pruning threshold are
//! removed from polynomials with their range absorbed into the remainder.

use std::sync::Arc;

use thiserror::Error;

use crate::interval::Interval;
use crate::poly::Polynomial;

/// Outward slack added to remainder endpoints by every arithmetic operation.
pub const ROUNDING_SLACK: f64 = 1e-12;
/// Coefficients at or below this magnitude are pruned into the remainder.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TmError {
    #[error("Taylor models have different domains")]
    DomainMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("variable index {index} out of range for dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("domain box {index} is not the canonical [-1, 1] range")]
    NonCanonicalDomain { index: usize },
    #[error("Taylor model bounds are not finite")]
    NonFiniteBounds,
}

/// Input domain: one box per symbolic variable, shared read-only between all
/// models of a computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    boxes: Vec<Interval>,
}

impl Domain {
    pub fn new(boxes: Vec<Interval>) -> Self {
        assert!(!boxes.is_empty(), "empty domain");
        Domain { boxes }
    }

    /// The canonical `[-1, 1]^dim` box.
    pub fn canonical(dim: usize) -> Self {
        Domain::new(vec![Interval::UNIT; dim])
    }

    pub fn dim(&self) -> usize {
        self.boxes.len()
    }

    pub fn boxes(&self) -> &[Interval] {
        &self.boxes
    }
}

/// Conservative range of a polynomial over a domain.
pub fn poly_bounds(p: &Polynomial, d: &Domain) -> Result<Interval, TmError> {
    if p.dimension() != d.dim() {
        return Err(TmError::DimensionMismatch {
            expected: d.dim(),
            found: p.dimension(),
        });
    }
    Ok(p.bounds(d.boxes()))
}

fn next_up(v: f64) -> f64 {
    if v.is_nan() || v == f64::INFINITY {
        return v;
    }
    if v == 0.0 {
        return f64::from_bits(1);
    }
    if v > 0.0 {
        f64::from_bits(v.to_bits() + 1)
    } else {
        f64::from_bits(v.to_bits() - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaylorModel {
    poly: Polynomial,
    remainder: Interval,
    domain: Arc<Domain>,
    order: u32,
}

impl TaylorModel {
    /// Assemble a model from parts, pruning tiny coefficients into the
    /// remainder and applying the rounding slack.
    fn finish(poly: Polynomial, remainder: Interval, domain: Arc<Domain>, order: u32) -> Self {
        let (kept, dropped) = poly.split_small(PRUNE_THRESHOLD);
        let mut rem = remainder;
        if !dropped.is_zero() {
            rem = rem.add(&dropped.bounds(domain.boxes()));
        }
        debug_assert!(kept.total_degree() <= order);
        TaylorModel {
            poly: kept,
            remainder: rem.widen(ROUNDING_SLACK),
            domain,
            order,
        }
    }

    /// Construct from explicit parts without widening. The polynomial degree
    /// must not exceed `order`.
    pub fn from_parts(
        poly: Polynomial,
        remainder: Interval,
        domain: &Arc<Domain>,
        order: u32,
    ) -> Result<Self, TmError> {
        if poly.dimension() != domain.dim() {
            return Err(TmError::DimensionMismatch {
                expected: domain.dim(),
                found: poly.dimension(),
            });
        }
        let mut tm = TaylorModel {
            poly,
            remainder,
            domain: domain.clone(),
            order,
        };
        if tm.poly.total_degree() > order {
            tm = tm.truncate(order);
        }
        Ok(tm)
    }

    pub fn zero(domain: &Arc<Domain>, order: u32) -> Self {
        TaylorModel {
            poly: Polynomial::zero(domain.dim()),
            remainder: Interval::ZERO,
            domain: domain.clone(),
            order,
        }
    }

    pub fn constant(c: f64, domain: &Arc<Domain>, order: u32) -> Self {
        TaylorModel {
            poly: Polynomial::constant(c, domain.dim()),
            remainder: Interval::ZERO,
            domain: domain.clone(),
            order,
        }
    }

    /// Affine re-initialization of a state interval: `center + radius * x_i`
    /// with zero remainder, over the canonical domain. The radius is bumped
    /// outward by single ulps where needed so the reconstructed bounds always
    /// contain `iv`; no other slack is added, so `bounds()` of the result
    /// reproduces `iv` to within a couple of ulps.
    pub fn from_interval(
        iv: Interval,
        var_index: usize,
        domain: &Arc<Domain>,
        order: u32,
    ) -> Result<Self, TmError> {
        let dim = domain.dim();
        if var_index >= dim {
            return Err(TmError::VariableOutOfRange {
                index: var_index,
                dim,
            });
        }
        if domain.boxes()[var_index] != Interval::UNIT {
            return Err(TmError::NonCanonicalDomain { index: var_index });
        }
        assert!(order >= 1, "order must be positive");
        let c = iv.center();
        let mut r = (iv.hi() - c).max(c - iv.lo()).max(0.0);
        for _ in 0..8 {
            if c - r <= iv.lo() && c + r >= iv.hi() {
                break;
            }
            r = next_up(r);
        }
        debug_assert!(c - r <= iv.lo() && c + r >= iv.hi());
        let mut poly = Polynomial::constant(c, dim);
        let mut exps = vec![0u32; dim];
        exps[var_index] = 1;
        poly.add_term(exps, r);
        Ok(TaylorModel {
            poly,
            remainder: Interval::ZERO,
            domain: domain.clone(),
            order,
        })
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn remainder(&self) -> Interval {
        self.remainder
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn dimension(&self) -> usize {
        self.domain.dim()
    }

    fn check_domain(&self, other: &Self) -> Result<(), TmError> {
        if Arc::ptr_eq(&self.domain, &other.domain) || self.domain == other.domain {
            Ok(())
        } else {
            Err(TmError::DomainMismatch)
        }
    }

    /// Conservative bounds: polynomial range plus remainder (Minkowski sum).
    pub fn bounds(&self) -> Interval {
        self.poly.bounds(self.domain.boxes()).add(&self.remainder)
    }

    pub fn add(&self, other: &Self) -> Result<Self, TmError> {
        self.check_domain(other)?;
        let order = self.order.max(other.order);
        Ok(Self::finish(
            self.poly.add(&other.poly),
            self.remainder.add(&other.remainder),
            self.domain.clone(),
            order,
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TmError> {
        self.add(&other.scale(-1.0))
    }

    /// Weighted sum `constant + sum(w_i * tm_i)` as a single operation, so
    /// wide affine layers pay one merge pass and one rounding slack per
    /// output instead of one per addend.
    pub fn affine_combination(
        constant: f64,
        terms: &[(f64, &TaylorModel)],
        domain: &Arc<Domain>,
        order: u32,
    ) -> Result<Self, TmError> {
        let mut poly = Polynomial::constant(constant, domain.dim());
        let mut rem = Interval::ZERO;
        for &(w, tm) in terms {
            if w == 0.0 {
                continue;
            }
            if !Arc::ptr_eq(&tm.domain, domain) && tm.domain.as_ref() != domain.as_ref() {
                return Err(TmError::DomainMismatch);
            }
            for (exps, c) in tm.poly.terms() {
                poly.add_term(exps.to_vec(), c * w);
            }
            rem = rem.add(&tm.remainder.scale(w));
        }
        Ok(Self::finish(poly, rem, domain.clone(), order))
    }

    /// Product truncated to total degree `k`; the truncated tail and the
    /// remainder cross terms are folded into the result remainder.
    pub fn mul(&self, other: &Self, k: u32) -> Result<Self, TmError> {
        self.check_domain(other)?;
        let boxes = self.domain.boxes();
        let product = self.poly.mul(&other.poly);
        let (kept, removed) = product.split_by_degree(k);
        let mut rem = self.remainder.mul(&other.remainder);
        // Int(p) * I terms vanish when the paired remainder is exactly zero
        if other.remainder != Interval::ZERO {
            rem = rem.add(&self.poly.bounds(boxes).mul(&other.remainder));
        }
        if self.remainder != Interval::ZERO {
            rem = rem.add(&other.poly.bounds(boxes).mul(&self.remainder));
        }
        if !removed.is_zero() {
            rem = rem.add(&removed.bounds(boxes));
        }
        Ok(Self::finish(kept, rem, self.domain.clone(), k))
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::finish(
            self.poly.scale(c),
            self.remainder.scale(c),
            self.domain.clone(),
            self.order,
        )
    }

    pub fn add_const(&self, c: f64) -> Self {
        let mut poly = self.poly.clone();
        poly.add_term(vec![0; self.dimension()], c);
        Self::finish(poly, self.remainder, self.domain.clone(), self.order)
    }

    /// Remove terms above total degree `k`, bounding them into the remainder.
    /// When nothing is removed the polynomial and remainder come back
    /// unchanged.
    pub fn truncate(&self, k: u32) -> Self {
        let (kept, removed) = self.poly.split_by_degree(k);
        if removed.is_zero() {
            let mut t = self.clone();
            t.order = k;
            return t;
        }
        let rem = self.remainder.add(&removed.bounds(self.domain.boxes()));
        Self::finish(kept, rem, self.domain.clone(), k)
    }

    /// Widen the remainder outward by `radius` (observation noise, activation
    /// error bounds). Exact endpoint arithmetic; no extra slack.
    pub fn inflate(&self, radius: f64) -> Self {
        assert!(radius >= 0.0, "negative inflation radius");
        TaylorModel {
            poly: self.poly.clone(),
            remainder: self.remainder.widen(radius),
            domain: self.domain.clone(),
            order: self.order,
        }
    }
}
