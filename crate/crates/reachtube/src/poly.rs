//! Sparse multivariate polynomials in the power basis.
//!
//! Terms are keyed by their exponent vector in a `BTreeMap`, which gives a
//! deterministic term order for arithmetic and printing. Coefficient pruning
//! below a threshold is deliberately *not* done here; the Taylor-model layer
//! removes tiny terms and absorbs their range into the remainder so that
//! enclosures stay sound.

use std::collections::BTreeMap;
use std::fmt;

use crate::interval::Interval;

/// A single term: coefficient times a product of variable powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }
}

/// Sparse polynomial over `dimension` variables. Zero-coefficient terms are
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dimension: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dimension: usize) -> Self {
        Polynomial {
            dimension,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: f64, dimension: usize) -> Self {
        let mut p = Polynomial::zero(dimension);
        p.add_term(vec![0; dimension], c);
        p
    }

    /// The polynomial `x_i`.
    pub fn variable(index: usize, dimension: usize) -> Self {
        assert!(index < dimension, "variable {index} out of range");
        let mut exps = vec![0; dimension];
        exps[index] = 1;
        let mut p = Polynomial::zero(dimension);
        p.add_term(exps, 1.0);
        p
    }

    /// Univariate polynomial from dense power-basis coefficients
    /// (`coeffs[d]` is the coefficient of `y^d`).
    pub fn univariate(coeffs: &[f64]) -> Self {
        let mut p = Polynomial::zero(1);
        for (d, &c) in coeffs.iter().enumerate() {
            p.add_term(vec![d as u32], c);
        }
        p
    }

    pub fn from_monomials(dimension: usize, monomials: &[Monomial]) -> Self {
        let mut p = Polynomial::zero(dimension);
        for m in monomials {
            assert_eq!(m.exponents.len(), dimension, "exponent vector length");
            p.add_term(m.exponents.clone(), m.coefficient);
        }
        p
    }

    /// Merge a term in, dropping the entry if the coefficient cancels to zero.
    pub fn add_term(&mut self, exponents: Vec<u32>, coefficient: f64) {
        debug_assert_eq!(exponents.len(), self.dimension);
        if coefficient == 0.0 {
            return;
        }
        let entry = self.terms.entry(exponents);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let c = o.get() + coefficient;
                if c == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = c;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coefficient);
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms.get(exponents).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&vec![0; self.dimension])
    }

    /// Maximum total degree over all terms; 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch");
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(-1.0)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        if c == 0.0 {
            return Polynomial::zero(self.dimension);
        }
        Polynomial {
            dimension: self.dimension,
            terms: self.terms.iter().map(|(e, &v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.dimension, other.dimension, "dimension mismatch");
        let mut out = Polynomial::zero(self.dimension);
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exps, ca * cb);
            }
        }
        out
    }

    pub fn powi(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(1.0, self.dimension);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let mut total = 0.0;
        for (exps, &c) in &self.terms {
            let mut v = c;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    v *= xi.powi(e as i32);
                }
            }
            total += v;
        }
        total
    }

    /// Split into terms of total degree `<= k` and the rest.
    pub fn split_by_degree(&self, k: u32) -> (Polynomial, Polynomial) {
        let mut kept = Polynomial::zero(self.dimension);
        let mut removed = Polynomial::zero(self.dimension);
        for (e, &c) in &self.terms {
            if e.iter().sum::<u32>() <= k {
                kept.terms.insert(e.clone(), c);
            } else {
                removed.terms.insert(e.clone(), c);
            }
        }
        (kept, removed)
    }

    /// Split off terms with `|coefficient| <= threshold` so the caller can
    /// fold their range into a remainder.
    pub fn split_small(&self, threshold: f64) -> (Polynomial, Polynomial) {
        let mut kept = Polynomial::zero(self.dimension);
        let mut removed = Polynomial::zero(self.dimension);
        for (e, &c) in &self.terms {
            if c.abs() <= threshold {
                removed.terms.insert(e.clone(), c);
            } else {
                kept.terms.insert(e.clone(), c);
            }
        }
        (kept, removed)
    }

    /// Dense univariate coefficients by power. Panics unless `dimension == 1`.
    pub fn univariate_coeffs(&self) -> Vec<f64> {
        assert_eq!(self.dimension, 1, "univariate_coeffs on multivariate polynomial");
        let deg = self.total_degree() as usize;
        let mut coeffs = vec![0.0; deg + 1];
        for (e, &c) in &self.terms {
            coeffs[e[0] as usize] = c;
        }
        coeffs
    }

    /// Conservative range of one monomial over the given boxes.
    fn monomial_range(exps: &[u32], c: f64, boxes: &[Interval]) -> Interval {
        let mut r = Interval::point(c);
        for (b, &e) in boxes.iter().zip(exps) {
            if e > 0 {
                r = r.mul(&b.powi(e));
            }
        }
        r
    }

    /// Conservative interval containing `{p(x) | x in boxes}`.
    ///
    /// Monomial-wise interval evaluation, refined in two places: even powers
    /// of a single variable are bounded exactly, and a pure `c2*x^2 + c1*x`
    /// pair in one variable is bounded by completing the square (an affine
    /// shift of the same even-power rule). Cross terms stay monomial-wise.
    pub fn bounds(&self, boxes: &[Interval]) -> Interval {
        assert_eq!(self.dimension, boxes.len(), "dimension mismatch");
        let mut total = Interval::ZERO;
        // coefficients of pure x_i and x_i^2 terms, gathered for completion
        let mut linear = vec![0.0; self.dimension];
        let mut quadratic = vec![0.0; self.dimension];

        for (exps, &c) in &self.terms {
            let nonzero: Vec<usize> = (0..self.dimension).filter(|&i| exps[i] > 0).collect();
            match nonzero.as_slice() {
                [] => total = total.add(&Interval::point(c)),
                [i] if exps[*i] == 1 => linear[*i] = c,
                [i] if exps[*i] == 2 => quadratic[*i] = c,
                _ => total = total.add(&Self::monomial_range(exps, c, boxes)),
            }
        }

        for i in 0..self.dimension {
            let (c1, c2) = (linear[i], quadratic[i]);
            if c2 == 0.0 {
                if c1 != 0.0 {
                    total = total.add(&boxes[i].scale(c1));
                }
                continue;
            }
            let shift = c1 / (2.0 * c2);
            if shift.is_finite() && shift.abs() <= 1e8 {
                // c2*x^2 + c1*x == c2*(x + shift)^2 - c2*shift^2
                let shifted = boxes[i].add(&Interval::point(shift));
                let sq = shifted.powi(2).scale(c2);
                total = total.add(&sq.sub(&Interval::point(c2 * shift * shift)));
            } else {
                total = total.add(&boxes[i].powi(2).scale(c2));
                if c1 != 0.0 {
                    total = total.add(&boxes[i].scale(c1));
                }
            }
        }
        total
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{e}")?,
                }
            }
        }
        Ok(())
    }
}
