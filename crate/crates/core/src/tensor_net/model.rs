use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::multicomplex::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Elu,
    Sin,
    None,
}

impl Activation {
    pub const ALL: [Activation; 6] = [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::Elu,
        Activation::Sin,
        Activation::None,
    ];

    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Sigmoid => x.sigmoid(),
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.relu(),
            Activation::Elu => x.elu(),
            Activation::Sin => x.sin(),
            Activation::None => x,
        }
    }

    /// Derivative at input `z`, given the already computed output `y`.
    pub fn derivative<S: Scalar>(self, z: S, y: S) -> S {
        match self {
            Activation::Sigmoid => y * (S::one() - y),
            Activation::Tanh => S::one() - y * y,
            Activation::Relu => {
                if z.real() > 0.0 {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Elu => {
                if z.real() > 0.0 {
                    S::one()
                } else {
                    y + S::one()
                }
            }
            Activation::Sin => z.cos(),
            Activation::None => S::one(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Sin => "sin",
            Activation::None => "none",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Activation::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    Dense {
        inputs: usize,
        outputs: usize,
        bias: bool,
    },
    Activation(Activation),
}

impl Layer {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        Layer::Dense {
            inputs,
            outputs,
            bias: true,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            Layer::Dense {
                inputs,
                outputs,
                bias,
            } => inputs * outputs + if bias { outputs } else { 0 },
            Layer::Activation(_) => 0,
        }
    }
}

/// Feedforward stack of dense and activation layers over a flat parameter
/// vector. Parameters are laid out layer by layer, weights (row-major,
/// `outputs × inputs`) before bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    layers: Vec<Layer>,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    param_count: usize,
}

impl Model {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let input = layers
            .iter()
            .find_map(|l| match l {
                Layer::Dense { inputs, .. } => Some(*inputs),
                Layer::Activation(_) => None,
            })
            .ok_or_else(|| Error::InvalidArgument("model has no dense layer".into()))?;
        let mut widths = vec![input];
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for (k, layer) in layers.iter().enumerate() {
            let width = *widths.last().unwrap();
            offsets.push(total);
            match *layer {
                Layer::Dense {
                    inputs, outputs, ..
                } => {
                    if inputs != width {
                        return Err(Error::shape(format!("layer {k} inputs"), width, inputs));
                    }
                    if outputs == 0 {
                        return Err(Error::InvalidArgument(format!("layer {k} has no outputs")));
                    }
                    widths.push(outputs);
                }
                Layer::Activation(_) => widths.push(width),
            }
            total += layer.param_count();
        }
        Ok(Self {
            layers,
            widths,
            offsets,
            param_count: total,
        })
    }

    /// Dense layers of the given widths with `activation` after every hidden
    /// layer and `output_activation` (if any) after the last.
    pub fn mlp(
        widths: &[usize],
        activation: Activation,
        output_activation: Option<Activation>,
    ) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArgument("an MLP needs at least two widths".into()));
        }
        let mut layers = Vec::new();
        for (i, pair) in widths.windows(2).enumerate() {
            layers.push(Layer::dense(pair[0], pair[1]));
            let last = i + 2 == widths.len();
            match (last, output_activation) {
                (false, _) => layers.push(Layer::Activation(activation)),
                (true, Some(a)) => layers.push(Layer::Activation(a)),
                (true, None) => {}
            }
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Width entering layer `k` (`k = layers().len()` gives the output width).
    pub fn width(&self, k: usize) -> usize {
        self.widths[k]
    }

    /// Offset of layer `k`'s parameters in the flat vector.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Glorot-uniform weights, zero biases, from a seeded generator.
    pub fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; self.param_count];
        for (k, layer) in self.layers.iter().enumerate() {
            if let Layer::Dense {
                inputs, outputs, ..
            } = *layer
            {
                let limit = (6.0 / (inputs + outputs) as f64).sqrt();
                let start = self.offsets[k];
                for w in &mut params[start..start + inputs * outputs] {
                    *w = rng.random_range(-limit..limit);
                }
            }
        }
        params
    }

    /// Splits a flat parameter vector into per-layer tensors.
    pub fn unflatten<S: Scalar>(&self, params: &[S]) -> Result<Vec<DenseParams<S>>> {
        if params.len() != self.param_count {
            return Err(Error::shape("parameter vector", self.param_count, params.len()));
        }
        let mut out = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            if let Layer::Dense {
                inputs,
                outputs,
                bias,
            } = *layer
            {
                let start = self.offsets[k];
                let mid = start + inputs * outputs;
                let weight = Tensor::from_vec(vec![outputs, inputs], params[start..mid].to_vec())?;
                let bias = bias
                    .then(|| Tensor::from_vec(vec![outputs], params[mid..mid + outputs].to_vec()))
                    .transpose()?;
                out.push(DenseParams {
                    layer: k,
                    weight,
                    bias,
                });
            }
        }
        Ok(out)
    }

    /// Inverse of [`Model::unflatten`].
    pub fn flatten<S: Scalar>(&self, parts: &[DenseParams<S>]) -> Result<Vec<S>> {
        let dense: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, Layer::Dense { .. }))
            .map(|(k, _)| k)
            .collect();
        if dense.len() != parts.len() {
            return Err(Error::shape("dense layer count", dense.len(), parts.len()));
        }
        let mut out = Vec::with_capacity(self.param_count);
        for (&k, part) in dense.iter().zip(parts) {
            let Layer::Dense {
                inputs,
                outputs,
                bias,
            } = self.layers[k]
            else {
                unreachable!()
            };
            if part.layer != k {
                return Err(Error::shape("dense layer index", k, part.layer));
            }
            if part.weight.shape() != [outputs, inputs] {
                return Err(Error::shape(format!("layer {k} weights"), inputs * outputs, part.weight.len()));
            }
            out.extend_from_slice(part.weight.data());
            match (&part.bias, bias) {
                (Some(b), true) if b.len() == outputs => out.extend_from_slice(b.data()),
                (None, false) => {}
                (b, _) => {
                    return Err(Error::shape(
                        format!("layer {k} bias"),
                        if bias { outputs } else { 0 },
                        b.as_ref().map_or(0, Tensor::len),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Parameters of one dense layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseParams<S> {
    pub layer: usize,
    /// `outputs × inputs`
    pub weight: Tensor<S>,
    pub bias: Option<Tensor<S>>,
}
