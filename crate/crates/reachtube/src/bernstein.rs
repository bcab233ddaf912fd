//! Bernstein-polynomial enclosures of scalar activation functions.
//!
//! A degree-`k` Bernstein polynomial interpolates the activation at `k + 1`
//! equally spaced nodes of the pre-activation range `[a, b]`:
//!
//! ```text
//! p(y) = sum_i  act(a + (b-a)*i/k) * C(k,i) * (y-a)^i * (b-y)^(k-i) / (b-a)^k
//! ```
//!
//! The approximation error is bounded conservatively by sampling `m + 1`
//! midpoints and adding a `(b-a)/m` resolution slack. That slack covers the
//! wiggle between samples because every supported activation is Lipschitz-1
//! and the Bernstein operator does not increase Lipschitz constants;
//! activations with larger slopes would need a revisited bound.

use std::fmt;
use std::str::FromStr;

use crate::interval::Interval;
use crate::poly::Polynomial;
use crate::taylor::{TaylorModel, TmError};

/// Scalar activation kinds supported by the propagation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Linear,
}

impl Activation {
    pub fn eval(self, y: f64) -> f64 {
        match self {
            Activation::Relu => y.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-y).exp()),
            Activation::Tanh => y.tanh(),
            Activation::Linear => y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unsupported activation {other:?}")),
        }
    }
}

/// A fitted activation enclosure: `act(y) ∈ poly(y) ± error` for `y ∈ range`.
#[derive(Debug, Clone)]
pub struct BernsteinApprox {
    pub poly: Polynomial,
    pub range: Interval,
    pub order: u32,
    pub error: f64,
    pub sample_steps: u32,
}

fn binomial(k: u32, i: u32) -> f64 {
    let mut c = 1.0;
    for j in 0..i {
        c = c * (k - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Degree-`k` Bernstein fit of `act` on `range`. A degenerate range collapses
/// to the constant `act(a)`.
pub fn fit(act: Activation, range: Interval, k: u32) -> Polynomial {
    assert!(k >= 1, "Bernstein order must be positive");
    let (a, b) = (range.lo(), range.hi());
    if b - a < 1e-12 {
        return Polynomial::constant(act.eval(a), 1);
    }
    let width_pow = (b - a).powi(k as i32);
    // (y - a) and (b - y) as univariate polynomials
    let y_minus_a = Polynomial::univariate(&[-a, 1.0]);
    let b_minus_y = Polynomial::univariate(&[b, -1.0]);
    let mut p = Polynomial::zero(1);
    for i in 0..=k {
        let node = a + (b - a) * i as f64 / k as f64;
        let w = act.eval(node) * binomial(k, i) / width_pow;
        if w == 0.0 {
            continue;
        }
        let basis = y_minus_a.powi(i).mul(&b_minus_y.powi(k - i));
        p = p.add(&basis.scale(w));
    }
    p
}

/// Conservative error bound: the largest `|p - act|` over `m + 1` interval
/// midpoints plus the `(b-a)/m` resolution slack, with an absolute slack for
/// double-precision evaluation.
pub fn error_bound(act: Activation, p: &Polynomial, range: Interval, m: u32) -> f64 {
    assert!(m >= 1, "sampling steps must be positive");
    let (a, b) = (range.lo(), range.hi());
    let step = (b - a) / m as f64;
    let mut eps = 0.0f64;
    for i in 0..=m {
        let y = step * (i as f64 + 0.5) + a;
        let diff = (p.eval(&[y]) - act.eval(y)).abs() + step;
        eps = eps.max(diff);
    }
    eps + 1e-12
}

/// Fit plus error bound, packaged with its parameters.
pub fn approximate(act: Activation, range: Interval, k: u32, m: u32) -> BernsteinApprox {
    let poly = fit(act, range, k);
    let error = error_bound(act, &poly, range, m);
    BernsteinApprox {
        poly,
        range,
        order: k,
        error,
        sample_steps: m,
    }
}

/// Enclose `act` composed with the function enclosed by `tm`.
///
/// The Bernstein polynomial is fitted on the model's current bounds and then
/// evaluated at the model with Horner's scheme, truncating products to the
/// model's own order; the fitted error enters the remainder as `± error`.
pub fn compose(tm: &TaylorModel, act: Activation, k: u32, m: u32) -> Result<TaylorModel, TmError> {
    let range = tm.bounds();
    if !range.is_finite() {
        return Err(TmError::NonFiniteBounds);
    }
    let approx = approximate(act, range, k, m);
    let coeffs = approx.poly.univariate_coeffs();
    let order = tm.order();
    let mut acc = TaylorModel::constant(*coeffs.last().unwrap(), tm.domain(), order);
    for &c in coeffs.iter().rev().skip(1) {
        acc = acc.mul(tm, order)?.add_const(c);
    }
    Ok(acc.inflate(approx.error))
}
