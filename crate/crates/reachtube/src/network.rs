//! Feedforward controller networks and Taylor-model propagation through them.
//!
//! Networks are loaded from a plain JSON weight file:
//!
//! ```json
//! {
//!   "input_dim": 2,
//!   "layers": [
//!     { "weights": [[0.1, -0.3], [0.5, 0.2], [0.0, 1.0]],
//!       "biases": [0.0, 0.1, -0.2],
//!       "activation": "relu" }
//!   ]
//! }
//! ```
//!
//! Weights are row-major, `out x in`. ReLU neurons use a three-case law: a
//! sign-definite pre-activation skips the Bernstein fit entirely (exact zero
//! model below zero, pass-through above), and only ranges containing zero pay
//! for the polynomial enclosure. The always-Bernstein path is kept behind
//! [`PropagationMode`] as a comparison baseline.

use std::fs;
use std::io;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::bernstein::{self, Activation};
use crate::taylor::{TaylorModel, TmError};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("failed to read network file: {0}")]
    Io(#[from] io::Error),
    #[error("failed to parse network file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("network has no layers")]
    Empty,
    #[error("layer {layer}: {message}")]
    InvalidLayer { layer: usize, message: String },
    #[error("layer {layer}: unsupported activation {name:?}")]
    UnsupportedActivation { layer: usize, name: String },
    #[error("layer {layer}: non-finite weight at row {row}, column {col}")]
    NonFiniteWeight {
        layer: usize,
        row: usize,
        col: usize,
    },
    #[error("layer {layer}: non-finite bias at index {index}")]
    NonFiniteBias { layer: usize, index: usize },
}

/// One affine layer with its activation.
#[derive(Debug, Clone)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }
}

/// A validated feedforward network: consecutive layer widths chain correctly
/// and all entries are finite.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    input_dim: usize,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self, NetworkError> {
        if layers.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut width = input_dim;
        for (idx, layer) in layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(NetworkError::InvalidLayer {
                    layer: idx,
                    message: "empty weight matrix".into(),
                });
            }
            if layer.weights.len() != layer.biases.len() {
                return Err(NetworkError::InvalidLayer {
                    layer: idx,
                    message: format!(
                        "weights have {} rows but there are {} biases",
                        layer.weights.len(),
                        layer.biases.len()
                    ),
                });
            }
            for (r, row) in layer.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(NetworkError::InvalidLayer {
                        layer: idx,
                        message: format!(
                            "row {r} has {} columns, expected {width}",
                            row.len()
                        ),
                    });
                }
                for (c, &w) in row.iter().enumerate() {
                    if !w.is_finite() {
                        return Err(NetworkError::NonFiniteWeight {
                            layer: idx,
                            row: r,
                            col: c,
                        });
                    }
                }
            }
            for (i, &b) in layer.biases.iter().enumerate() {
                if !b.is_finite() {
                    return Err(NetworkError::NonFiniteBias { layer: idx, index: i });
                }
            }
            width = layer.output_dim();
        }
        Ok(Network { layers, input_dim })
    }

    pub fn from_json_str(doc: &str) -> Result<Self, NetworkError> {
        #[derive(Deserialize)]
        struct RawLayer {
            weights: Vec<Vec<f64>>,
            biases: Vec<f64>,
            activation: String,
        }
        #[derive(Deserialize)]
        struct RawNetwork {
            input_dim: usize,
            layers: Vec<RawLayer>,
        }

        let raw: RawNetwork = serde_json::from_str(doc)?;
        let layers = raw
            .layers
            .into_iter()
            .enumerate()
            .map(|(idx, l)| {
                let activation = l.activation.parse::<Activation>().map_err(|_| {
                    NetworkError::UnsupportedActivation {
                        layer: idx,
                        name: l.activation.clone(),
                    }
                })?;
                Ok(Layer {
                    weights: l.weights,
                    biases: l.biases,
                    activation,
                })
            })
            .collect::<Result<Vec<_>, NetworkError>>()?;
        Network::new(raw.input_dim, layers)
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, Layer::output_dim)
    }

    /// Exact double-precision forward pass.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim, "input width mismatch");
        let mut values = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.output_dim());
            for (row, &b) in layer.weights.iter().zip(&layer.biases) {
                let pre: f64 = row.iter().zip(&values).map(|(w, v)| w * v).sum::<f64>() + b;
                next.push(layer.activation.eval(pre));
            }
            values = next;
        }
        values
    }
}

/// Whether sign-definite ReLU neurons take the shortcut law or every neuron
/// goes through the Bernstein fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationMode {
    #[default]
    Optimized,
    AlwaysBernstein,
}

/// Parameters of the activation enclosure during propagation.
#[derive(Debug, Clone, Copy)]
pub struct PropagationOptions {
    pub bernstein_order: u32,
    pub bernstein_steps: u32,
    pub mode: PropagationMode,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        PropagationOptions {
            bernstein_order: 4,
            bernstein_steps: 200,
            mode: PropagationMode::Optimized,
        }
    }
}

/// Per-neuron branch counts from one propagation, for diagnostics and the
/// tightness comparisons.
#[derive(Debug, Clone, Copy, Default)]
pub struct PropagationStats {
    pub neurons_negative: usize,
    pub neurons_positive: usize,
    pub neurons_mixed: usize,
    pub neurons_linear: usize,
}

impl PropagationStats {
    pub fn total(&self) -> usize {
        self.neurons_negative + self.neurons_positive + self.neurons_mixed + self.neurons_linear
    }

    /// Fraction of activation neurons whose pre-activation range is
    /// sign-definite.
    pub fn definite_fraction(&self) -> f64 {
        let act = self.neurons_negative + self.neurons_positive + self.neurons_mixed;
        if act == 0 {
            return 1.0;
        }
        (self.neurons_negative + self.neurons_positive) as f64 / act as f64
    }
}

/// The affine image of the input models under one layer, before activation.
/// Sums run in index order so results are deterministic.
pub fn affine_step(tms: &[TaylorModel], layer: &Layer) -> Result<Vec<TaylorModel>, TmError> {
    if tms.len() != layer.input_dim() {
        return Err(TmError::DimensionMismatch {
            expected: layer.input_dim(),
            found: tms.len(),
        });
    }
    let domain = tms[0].domain();
    let order = tms.iter().map(TaylorModel::order).max().unwrap();
    let mut out = Vec::with_capacity(layer.output_dim());
    for (row, &b) in layer.weights.iter().zip(&layer.biases) {
        let terms: Vec<(f64, &TaylorModel)> =
            row.iter().copied().zip(tms.iter()).collect();
        out.push(TaylorModel::affine_combination(b, &terms, domain, order)?);
    }
    Ok(out)
}

/// Three-case ReLU law. A non-positive range collapses to the exact zero
/// model, a non-negative range passes the model through untouched, and only
/// a range containing zero pays for the Bernstein enclosure.
pub fn relu_propagate(tm: &TaylorModel, k: u32, m: u32) -> Result<TaylorModel, TmError> {
    let range = tm.bounds();
    if range.hi() <= 0.0 {
        Ok(TaylorModel::zero(tm.domain(), tm.order()))
    } else if range.lo() >= 0.0 {
        Ok(tm.clone())
    } else {
        bernstein::compose(tm, Activation::Relu, k, m)
    }
}

fn activate(
    tm: &TaylorModel,
    activation: Activation,
    opts: &PropagationOptions,
    stats: &mut PropagationStats,
) -> Result<TaylorModel, TmError> {
    let (k, m) = (opts.bernstein_order, opts.bernstein_steps);
    match activation {
        Activation::Linear => {
            stats.neurons_linear += 1;
            Ok(tm.clone())
        }
        Activation::Relu => {
            let range = tm.bounds();
            if range.hi() <= 0.0 {
                stats.neurons_negative += 1;
            } else if range.lo() >= 0.0 {
                stats.neurons_positive += 1;
            } else {
                stats.neurons_mixed += 1;
            }
            match opts.mode {
                PropagationMode::Optimized => relu_propagate(tm, k, m),
                PropagationMode::AlwaysBernstein => {
                    bernstein::compose(tm, Activation::Relu, k, m)
                }
            }
        }
        act => {
            stats.neurons_mixed += 1;
            bernstein::compose(tm, act, k, m)
        }
    }
}

/// Propagate input models through every layer, returning the output models
/// and the per-neuron branch statistics.
pub fn network_reach_stats(
    net: &Network,
    input_tms: &[TaylorModel],
    opts: &PropagationOptions,
) -> Result<(Vec<TaylorModel>, PropagationStats), TmError> {
    if input_tms.len() != net.input_dim() {
        return Err(TmError::DimensionMismatch {
            expected: net.input_dim(),
            found: input_tms.len(),
        });
    }
    let mut stats = PropagationStats::default();
    let mut tms = input_tms.to_vec();
    for layer in net.layers() {
        let pre = affine_step(&tms, layer)?;
        let mut post = Vec::with_capacity(pre.len());
        for tm in &pre {
            post.push(activate(tm, layer.activation, opts, &mut stats)?);
        }
        tms = post;
    }
    Ok((tms, stats))
}

/// Output Taylor models enclosing `{net(x) | x in the set enclosed by input_tms}`.
pub fn network_reach(
    net: &Network,
    input_tms: &[TaylorModel],
    opts: &PropagationOptions,
) -> Result<Vec<TaylorModel>, TmError> {
    network_reach_stats(net, input_tms, opts).map(|(tms, _)| tms)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::interval::Interval;
    use crate::taylor::Domain;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn canon(dim: usize) -> Arc<Domain> {
        Arc::new(Domain::canonical(dim))
    }

    fn box_inputs(ivs: &[Interval], order: u32) -> Vec<TaylorModel> {
        let domain = canon(ivs.len());
        ivs.iter()
            .enumerate()
            .map(|(i, &iv)| TaylorModel::from_interval(iv, i, &domain, order).unwrap())
            .collect()
    }

    #[test]
    fn load_two_layer_network() {
        let doc = r#"{
            "input_dim": 2,
            "layers": [
                { "weights": [[1.0, 0.0], [0.0, 1.0], [0.5, -0.5]],
                  "biases": [0.0, 0.1, 0.2], "activation": "relu" },
                { "weights": [[1.0, -1.0, 2.0]], "biases": [0.0], "activation": "linear" }
            ]
        }"#;
        let net = Network::from_json_str(doc).unwrap();
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.output_dim(), 1);
        assert_eq!(net.layers().len(), 2);
    }

    #[test]
    fn load_rejects_row_bias_mismatch() {
        let doc = r#"{
            "input_dim": 1,
            "layers": [
                { "weights": [[1.0], [2.0]], "biases": [0.0], "activation": "relu" }
            ]
        }"#;
        let err = Network::from_json_str(doc).unwrap_err();
        assert!(matches!(err, NetworkError::InvalidLayer { layer: 0, .. }), "{err}");
    }

    #[test]
    fn load_rejects_unknown_activation() {
        let doc = r#"{
            "input_dim": 1,
            "layers": [
                { "weights": [[1.0]], "biases": [0.0], "activation": "swish" }
            ]
        }"#;
        let err = Network::from_json_str(doc).unwrap_err();
        assert!(
            matches!(err, NetworkError::UnsupportedActivation { layer: 0, ref name } if name == "swish"),
            "{err}"
        );
    }

    #[test]
    fn load_rejects_non_finite_weight() {
        // out-of-range literals are rejected by the JSON parser itself
        let doc = r#"{
            "input_dim": 1,
            "layers": [
                { "weights": [[1e999]], "biases": [0.0], "activation": "relu" }
            ]
        }"#;
        assert!(matches!(
            Network::from_json_str(doc).unwrap_err(),
            NetworkError::Parse(_)
        ));
        // programmatic construction still names the offending entry
        let err = Network::new(
            1,
            vec![Layer {
                weights: vec![vec![f64::INFINITY]],
                biases: vec![0.0],
                activation: Activation::Relu,
            }],
        )
        .unwrap_err();
        assert!(
            matches!(err, NetworkError::NonFiniteWeight { layer: 0, row: 0, col: 0 }),
            "{err}"
        );
        let err = Network::new(
            1,
            vec![Layer {
                weights: vec![vec![1.0]],
                biases: vec![f64::NAN],
                activation: Activation::Relu,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::NonFiniteBias { layer: 0, index: 0 }), "{err}");
    }

    #[test]
    fn load_rejects_width_chain_break() {
        let doc = r#"{
            "input_dim": 2,
            "layers": [
                { "weights": [[1.0, 0.0]], "biases": [0.0], "activation": "relu" },
                { "weights": [[1.0, 1.0]], "biases": [0.0], "activation": "linear" }
            ]
        }"#;
        assert!(Network::from_json_str(doc).is_err());
    }

    #[test]
    fn affine_step_scales_and_shifts() {
        let tms = box_inputs(&[Interval::UNIT], 2);
        let layer = Layer {
            weights: vec![vec![-0.5]],
            biases: vec![0.2],
            activation: Activation::Linear,
        };
        let out = affine_step(&tms, &layer).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].poly().coefficient(&[1]) - -0.5).abs() < 1e-12);
        assert!((out[0].poly().coefficient(&[0]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn affine_step_identity() {
        let tms = box_inputs(&[Interval::new(-0.5, 0.5), Interval::new(1.0, 2.0)], 2);
        let layer = Layer {
            weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            biases: vec![0.0, 0.0],
            activation: Activation::Linear,
        };
        let out = affine_step(&tms, &layer).unwrap();
        for (o, t) in out.iter().zip(&tms) {
            assert_eq!(o.poly(), t.poly());
        }
    }

    #[test]
    fn affine_step_scales_remainder() {
        let domain = canon(1);
        let t = TaylorModel::from_parts(
            crate::poly::Polynomial::variable(0, 1),
            Interval::new(-0.1, 0.1),
            &domain,
            2,
        )
        .unwrap();
        let layer = Layer {
            weights: vec![vec![2.0]],
            biases: vec![0.0],
            activation: Activation::Linear,
        };
        let out = affine_step(&[t], &layer).unwrap();
        assert!(out[0].remainder().contains_interval(&Interval::new(-0.2, 0.2)));
        // sampling oracle
        let b = out[0].bounds();
        for i in 0..=50 {
            let x = -1.0 + 0.04 * i as f64;
            for r in [-0.1, 0.0, 0.1] {
                assert!(b.contains(2.0 * (x + r)));
            }
        }
    }

    #[test]
    fn affine_step_rejects_width_mismatch() {
        let tms = box_inputs(&[Interval::UNIT], 2);
        let layer = Layer {
            weights: vec![vec![1.0, 1.0]],
            biases: vec![0.0],
            activation: Activation::Linear,
        };
        assert!(affine_step(&tms, &layer).is_err());
    }

    #[test]
    fn relu_law_dead_branch_is_exact_zero() {
        let domain = canon(1);
        let t = TaylorModel::from_interval(Interval::new(-3.0, -1.0), 0, &domain, 2).unwrap();
        let out = relu_propagate(&t, 2, 100).unwrap();
        assert_eq!(out.bounds(), Interval::ZERO);
        assert!(out.poly().is_zero());
    }

    #[test]
    fn relu_law_positive_branch_is_pass_through() {
        let domain = canon(1);
        let t = TaylorModel::from_interval(Interval::new(0.2, 1.5), 0, &domain, 2).unwrap();
        let out = relu_propagate(&t, 2, 100).unwrap();
        assert_eq!(out.poly(), t.poly());
        assert_eq!(out.remainder(), t.remainder());
    }

    #[test]
    fn relu_law_mixed_branch_uses_bernstein() {
        let domain = canon(1);
        let t = TaylorModel::from_interval(Interval::UNIT, 0, &domain, 2).unwrap();
        let out = relu_propagate(&t, 2, 100).unwrap();
        let b = out.bounds();
        assert!(b.contains_interval(&Interval::new(0.0, 1.0)));
        assert!(Interval::new(-0.28, 1.28).contains_interval(&b));
    }

    #[test]
    fn single_linear_layer_bounds() {
        let net = Network::new(
            1,
            vec![Layer {
                weights: vec![vec![-0.5]],
                biases: vec![0.0],
                activation: Activation::Linear,
            }],
        )
        .unwrap();
        let tms = box_inputs(&[Interval::UNIT], 2);
        let out = network_reach(&net, &tms, &PropagationOptions::default()).unwrap();
        let b = out[0].bounds();
        assert!((b.lo() - -0.5).abs() < 1e-9 && (b.hi() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn shifted_relu_neuron_is_dead() {
        let net = Network::new(
            1,
            vec![Layer {
                weights: vec![vec![1.0]],
                biases: vec![-2.0],
                activation: Activation::Relu,
            }],
        )
        .unwrap();
        let tms = box_inputs(&[Interval::UNIT], 2);
        let (out, stats) =
            network_reach_stats(&net, &tms, &PropagationOptions::default()).unwrap();
        assert_eq!(out[0].bounds(), Interval::ZERO);
        assert_eq!(stats.neurons_negative, 1);
    }

    fn random_net(rng: &mut ChaCha8Rng, input_dim: usize, widths: &[usize]) -> Network {
        let mut layers = Vec::new();
        let mut prev = input_dim;
        for (i, &w) in widths.iter().enumerate() {
            let scale = 1.0 / prev as f64;
            let weights: Vec<Vec<f64>> = (0..w)
                .map(|_| (0..prev).map(|_| rng.gen_range(-scale..scale)).collect())
                .collect();
            let biases: Vec<f64> = (0..w).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let activation = if i + 1 == widths.len() {
                Activation::Linear
            } else {
                Activation::Relu
            };
            layers.push(Layer {
                weights,
                biases,
                activation,
            });
            prev = w;
        }
        Network::new(input_dim, layers).unwrap()
    }

    // Monte Carlo enclosure oracle: exact forward passes stay inside the
    // output bounds for randomized small networks.
    #[test]
    fn outputs_enclose_sampled_forward_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..200 {
            let input_dim = rng.gen_range(1..=3usize);
            let n_layers = rng.gen_range(1..=3usize);
            let widths: Vec<usize> = (0..n_layers)
                .map(|i| {
                    if i + 1 == n_layers {
                        rng.gen_range(1..=2)
                    } else {
                        rng.gen_range(2..=16)
                    }
                })
                .collect();
            let net = random_net(&mut rng, input_dim, &widths);
            let ivs: Vec<Interval> = (0..input_dim)
                .map(|_| {
                    let lo = rng.gen_range(-1.0..0.5);
                    Interval::new(lo, lo + rng.gen_range(0.0..1.0))
                })
                .collect();
            let tms = box_inputs(&ivs, 2);
            let mode = if trial % 2 == 0 {
                PropagationMode::Optimized
            } else {
                PropagationMode::AlwaysBernstein
            };
            let opts = PropagationOptions {
                bernstein_order: 2,
                bernstein_steps: 50,
                mode,
            };
            let out = network_reach(&net, &tms, &opts).unwrap();
            let bounds: Vec<Interval> = out.iter().map(TaylorModel::bounds).collect();
            for _ in 0..500 {
                let x: Vec<f64> = ivs
                    .iter()
                    .map(|iv| rng.gen_range(iv.lo()..=iv.hi()))
                    .collect();
                let y = net.eval(&x);
                for (v, b) in y.iter().zip(&bounds) {
                    assert!(
                        b.contains(*v),
                        "trial {trial}: output {v} outside {b} for input {x:?}"
                    );
                }
            }
        }
    }

    // Per-neuron tightness: on sign-definite ranges the shortcut law beats
    // the Bernstein fit outright.
    #[test]
    fn sign_definite_neuron_never_wider_than_bernstein() {
        let domain = canon(1);
        for (lo, hi) in [(0.2, 1.5), (-3.0, -1.0), (0.0, 0.7), (-2.0, 0.0)] {
            let t = TaylorModel::from_interval(Interval::new(lo, hi), 0, &domain, 2).unwrap();
            let law = relu_propagate(&t, 4, 100).unwrap();
            let bern = bernstein::compose(&t, Activation::Relu, 4, 100).unwrap();
            assert!(
                law.bounds().width() <= bern.bounds().width(),
                "[{lo}, {hi}]: {} vs {}",
                law.bounds(),
                bern.bounds()
            );
        }
    }

    // Whole-network tightness under the optimized law.
    #[test]
    fn optimized_law_never_wider_than_bernstein() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let input_dim = rng.gen_range(1..=2usize);
            let hidden = rng.gen_range(2..=8);
            let net = random_net(&mut rng, input_dim, &[hidden, 1]);
            let ivs: Vec<Interval> =
                (0..input_dim).map(|_| Interval::new(-0.5, 0.5)).collect();
            let tms = box_inputs(&ivs, 2);
            let base = PropagationOptions {
                bernstein_order: 2,
                bernstein_steps: 50,
                mode: PropagationMode::Optimized,
            };
            let opt = network_reach(&net, &tms, &base).unwrap();
            let bern = network_reach(
                &net,
                &tms,
                &PropagationOptions {
                    mode: PropagationMode::AlwaysBernstein,
                    ..base
                },
            )
            .unwrap();
            for (o, b) in opt.iter().zip(&bern) {
                assert!(o.bounds().width() <= b.bounds().width());
            }
        }
    }
}
