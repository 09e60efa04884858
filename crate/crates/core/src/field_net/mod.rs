//! Graph network that predicts the external magnetic field `h` per node.
//!
//! The backbone is a GCNII-style stack with initial residual and identity
//! mapping:
//!
//! ```text
//! H0  = relu(W_in X + b_in)
//! P_l = (1 - alpha) Â H_{l-1} + alpha H0
//! H_l = relu(P_l ((1 - beta_l) I + beta_l W_l)),   beta_l = ln(theta / l + 1)
//! Z   = H_L - mean over nodes
//! h   = w_out . Z + b_out
//! ```
//!
//! where `Â = D^-1/2 (A + I) D^-1/2` is the symmetrically normalized
//! adjacency with self-loops. Node embeddings are stored column-wise
//! (`hidden x num_nodes`) so each node's vector is contiguous.
//!
//! Gradients are computed by a hand-written reverse pass ([`backward`]).

mod checkpoint;
mod propagate;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, TrainingState, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use propagate::NormalizedAdjacency;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldNetConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Initial-residual strength.
    pub alpha: f64,
    /// Identity-map strength; layer `l` mixes with `ln(theta_id / l + 1)`.
    pub theta_id: f64,
    /// One convolution weight shared by all layers.
    pub weight_sharing: bool,
    pub input_dim: usize,
    /// Subtract the node mean from the last hidden layer before the head.
    pub center_features: bool,
    /// Subtract the node mean from the output field as well.
    pub zero_sum_output: bool,
}

impl FieldNetConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            num_layers: 4,
            hidden_dim: 64,
            alpha: 0.1,
            theta_id: 0.5,
            weight_sharing: true,
            input_dim,
            center_features: true,
            zero_sum_output: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.theta_id > 0.0 && self.theta_id <= std::f64::consts::E - 1.0) {
            // keeps beta_1 = ln(theta + 1) within (0, 1]
            return Err(Error::InvalidParameter(format!(
                "theta_id must lie in (0, e - 1], got {}",
                self.theta_id
            )));
        }
        if self.hidden_dim == 0 || self.input_dim == 0 {
            return Err(Error::InvalidParameter(
                "hidden_dim and input_dim must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Identity-mix strength of layer `l` (1-based).
    pub fn layer_beta(&self, l: usize) -> f64 {
        (self.theta_id / l as f64 + 1.0).ln()
    }

    fn num_layer_weights(&self) -> usize {
        if self.weight_sharing || self.num_layers == 0 {
            self.num_layers.min(1)
        } else {
            self.num_layers
        }
    }
}

/// Trainable parameters. Gradients use the same container ([`GradientBundle`]).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldNetParams {
    /// `hidden x input`.
    pub embed_weight: DMatrix<f64>,
    pub embed_bias: DVector<f64>,
    /// `hidden x hidden`, one per layer or a single shared matrix.
    pub layer_weights: Vec<DMatrix<f64>>,
    pub head_weight: DVector<f64>,
    pub head_bias: f64,
}

/// `dL/dθ` with the same layout as [`FieldNetParams`].
pub type GradientBundle = FieldNetParams;

impl FieldNetParams {
    pub fn zeros(config: &FieldNetConfig) -> Self {
        let hd = config.hidden_dim;
        Self {
            embed_weight: DMatrix::zeros(hd, config.input_dim),
            embed_bias: DVector::zeros(hd),
            layer_weights: vec![DMatrix::zeros(hd, hd); config.num_layer_weights()],
            head_weight: DVector::zeros(hd),
            head_bias: 0.0,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            embed_weight: DMatrix::zeros(self.embed_weight.nrows(), self.embed_weight.ncols()),
            embed_bias: DVector::zeros(self.embed_bias.len()),
            layer_weights: self
                .layer_weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            head_weight: DVector::zeros(self.head_weight.len()),
            head_bias: 0.0,
        }
    }

    /// Parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![self.embed_weight.as_slice(), self.embed_bias.as_slice()];
        out.extend(self.layer_weights.iter().map(|w| w.as_slice()));
        out.push(self.head_weight.as_slice());
        out.push(std::slice::from_ref(&self.head_bias));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.embed_weight.as_mut_slice(),
            self.embed_bias.as_mut_slice(),
        ];
        out.extend(self.layer_weights.iter_mut().map(|w| w.as_mut_slice()));
        out.push(self.head_weight.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.head_bias));
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::SizeMismatch {
                what: "flat parameter vector",
                expected: self.num_params(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.embed_weight.shape() == other.embed_weight.shape()
            && self.embed_bias.len() == other.embed_bias.len()
            && self.layer_weights.len() == other.layer_weights.len()
            && self
                .layer_weights
                .iter()
                .zip(&other.layer_weights)
                .all(|(a, b)| a.shape() == b.shape())
            && self.head_weight.len() == other.head_weight.len()
    }

    pub fn matches_config(&self, config: &FieldNetConfig) -> bool {
        self.same_shape(&Self::zeros(config))
    }

    /// Order-sensitive checksum used to detect a cache built from other parameters.
    fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for block in self.blocks() {
            for x in block {
                h = (h ^ x.to_bits()).wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Glorot-uniform weights `U(±sqrt(6 / (fan_in + fan_out)))`, zero biases.
pub fn init_params(config: &FieldNetConfig, seed: u64) -> Result<FieldNetParams> {
    config.validate()?;
    let mut rng = rng::seeded_rng(seed);
    let mut glorot = |rows: usize, cols: usize, fan_in: usize, fan_out: usize| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-limit..limit))
    };
    let hd = config.hidden_dim;
    let embed_weight = glorot(hd, config.input_dim, config.input_dim, hd);
    let layer_weights = (0..config.num_layer_weights())
        .map(|_| glorot(hd, hd, hd, hd))
        .collect();
    let head = glorot(hd, 1, hd, 1);
    Ok(FieldNetParams {
        embed_weight,
        embed_bias: DVector::zeros(hd),
        layer_weights,
        head_weight: DVector::from_column_slice(head.as_slice()),
        head_bias: 0.0,
    })
}

/// Activations kept from [`forward`] for the reverse pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    adjacency: NormalizedAdjacency,
    config: FieldNetConfig,
    fingerprint: u64,
    /// `input x n`.
    input: DMatrix<f64>,
    embed_pre: DMatrix<f64>,
    /// `H_0 .. H_L`.
    hidden: Vec<DMatrix<f64>>,
    /// `P_1 .. P_L`.
    mixed: Vec<DMatrix<f64>>,
    /// Pre-activations `U_1 .. U_L`.
    pre: Vec<DMatrix<f64>>,
    centered: DMatrix<f64>,
}

impl ForwardCache {
    pub fn num_nodes(&self) -> usize {
        self.input.ncols()
    }

    /// Last hidden layer before centering (`hidden x n`).
    pub fn last_hidden(&self) -> &DMatrix<f64> {
        self.hidden.last().unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct FieldNetOutput {
    pub field: Vec<f64>,
    pub cache: ForwardCache,
}

fn relu_in_place(m: &mut DMatrix<f64>) {
    m.iter_mut().for_each(|x| *x = x.max(0.0));
}

fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols().max(1) as f64;
    let mean = m.column_sum() / n;
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    out
}

/// Predicts the field for every node of `g` from its node features.
pub fn forward(g: &Graph, params: &FieldNetParams, config: &FieldNetConfig) -> Result<FieldNetOutput> {
    config.validate()?;
    if !params.matches_config(config) {
        return Err(Error::InvalidParameter(
            "parameter shapes do not match the field-net config".into(),
        ));
    }
    let features = g.node_features().ok_or(Error::MissingFeatures)?;
    if features.ncols() != config.input_dim {
        return Err(Error::SizeMismatch {
            what: "node feature columns",
            expected: config.input_dim,
            got: features.ncols(),
        });
    }
    let adjacency = NormalizedAdjacency::new(g);
    let input = features.transpose();
    let n = input.ncols();

    let mut embed_pre = &params.embed_weight * &input;
    for mut col in embed_pre.column_iter_mut() {
        col += &params.embed_bias;
    }
    let mut h0 = embed_pre.clone();
    relu_in_place(&mut h0);

    let mut hidden = vec![h0];
    let mut mixed = Vec::with_capacity(config.num_layers);
    let mut pre = Vec::with_capacity(config.num_layers);
    for l in 1..=config.num_layers {
        let beta = config.layer_beta(l);
        let w = &params.layer_weights[if config.weight_sharing { 0 } else { l - 1 }];
        let mut p = adjacency.apply(&hidden[l - 1]);
        p *= 1.0 - config.alpha;
        p += &hidden[0] * config.alpha;
        let mut u = w * &p;
        u *= beta;
        u += &p * (1.0 - beta);
        let mut h = u.clone();
        relu_in_place(&mut h);
        mixed.push(p);
        pre.push(u);
        hidden.push(h);
    }

    let last = hidden.last().unwrap();
    let centered = if config.center_features {
        center_columns(last)
    } else {
        last.clone()
    };
    let mut field: Vec<f64> = centered
        .tr_mul(&params.head_weight)
        .iter()
        .map(|v| v + params.head_bias)
        .collect();
    if config.zero_sum_output && n > 0 {
        let mean = field.iter().sum::<f64>() / n as f64;
        field.iter_mut().for_each(|v| *v -= mean);
    }

    Ok(FieldNetOutput {
        field,
        cache: ForwardCache {
            adjacency,
            config: config.clone(),
            fingerprint: params.fingerprint(),
            input,
            embed_pre,
            hidden,
            mixed,
            pre,
            centered,
        },
    })
}

/// Gradient of `sum_i upstream_i * h_i` with respect to every parameter.
pub fn backward(
    cache: &ForwardCache,
    params: &FieldNetParams,
    upstream: &[f64],
) -> Result<GradientBundle> {
    let config = &cache.config;
    let n = cache.num_nodes();
    if upstream.len() != n {
        return Err(Error::SizeMismatch {
            what: "upstream gradient length",
            expected: n,
            got: upstream.len(),
        });
    }
    if !params.matches_config(config) || params.fingerprint() != cache.fingerprint {
        return Err(Error::InvalidParameter(
            "forward cache is stale: it was built from different parameters".into(),
        ));
    }
    let mut grad = params.zeros_like();

    let mut dh = DVector::from_column_slice(upstream);
    if config.zero_sum_output && n > 0 {
        let mean = dh.sum() / n as f64;
        dh.add_scalar_mut(-mean);
    }
    grad.head_bias = dh.sum();
    grad.head_weight = &cache.centered * &dh;
    // dZ = w_out dh^T
    let dz = &params.head_weight * dh.transpose();
    let mut d_hidden = if config.center_features {
        center_columns(&dz)
    } else {
        dz
    };

    let mut d_h0_residual = DMatrix::zeros(config.hidden_dim, n);
    for l in (1..=config.num_layers).rev() {
        let beta = config.layer_beta(l);
        let wi = if config.weight_sharing { 0 } else { l - 1 };
        let w = &params.layer_weights[wi];
        let u = &cache.pre[l - 1];
        let p = &cache.mixed[l - 1];
        let mut du = d_hidden;
        du.zip_apply(u, |d, x| {
            if x <= 0.0 {
                *d = 0.0
            }
        });
        // U = (1 - beta) P + beta W P
        grad.layer_weights[wi] += (&du * p.transpose()) * beta;
        let mut dp = w.tr_mul(&du);
        dp *= beta;
        dp += &du * (1.0 - beta);
        // P = (1 - alpha) Â H_{l-1} + alpha H_0, Â symmetric
        d_h0_residual += &dp * config.alpha;
        let mut prev = cache.adjacency.apply(&dp);
        prev *= 1.0 - config.alpha;
        d_hidden = prev;
    }
    d_hidden += d_h0_residual;

    let mut dv = d_hidden;
    dv.zip_apply(&cache.embed_pre, |d, x| {
        if x <= 0.0 {
            *d = 0.0
        }
    });
    grad.embed_weight = &dv * cache.input.transpose();
    grad.embed_bias = dv.column_sum();
    Ok(grad)
}
