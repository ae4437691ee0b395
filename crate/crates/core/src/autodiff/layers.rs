//! Layer contract and the element-wise / dense / dropout layers.
//!
//! Sequence tensors are laid out `(batch, time, channels)`. Every layer caches
//! what its backward pass needs during `forward`; `backward` consumes that
//! cache, accumulates parameter gradients into its [`Param`]s and returns the
//! gradient with respect to the input.

use serde::{Deserialize, Serialize};

use super::conv::{Conv1d, ConvTranspose1d};
use super::rng::SeededRng;
use super::tensor::{gemm, Param, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Padding {
    /// Output length `ceil(in / stride)` (conv) or `in * stride` (transposed).
    Same,
    /// No padding: `(in - k) / stride + 1` (conv) or `(in - 1) * stride + k` (transposed).
    Valid,
}

pub trait Layer: Send {
    fn kind(&self) -> &'static str;

    fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut SeededRng) -> Result<Tensor>;

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }
}

/// Serializable description of a single layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
    },
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        sub_window: Option<usize>,
    },
    DepthwiseConv1d {
        channels: usize,
        kernel: usize,
    },
    TransposedConv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        sub_window: Option<usize>,
    },
    Tanh,
    SpatialDropout {
        rate: f64,
    },
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        match *self {
            LayerSpec::Dense { input, output } if input == 0 || output == 0 => {
                bad("dense extents must be positive")
            }
            LayerSpec::Conv1d { kernel, stride, .. }
            | LayerSpec::TransposedConv1d { kernel, stride, .. }
                if kernel == 0 || stride == 0 =>
            {
                bad("kernel and stride must be at least 1")
            }
            LayerSpec::DepthwiseConv1d { kernel: 0, .. } => bad("kernel must be at least 1"),
            LayerSpec::SpatialDropout { rate } if !(0.0..1.0).contains(&rate) => {
                bad("dropout rate must lie in [0, 1)")
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self, rng: &mut SeededRng) -> Result<Box<dyn Layer>> {
        self.validate()?;
        Ok(match *self {
            LayerSpec::Dense { input, output } => Box::new(Dense::new(input, output, rng)),
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                sub_window,
            } => Box::new(Conv1d::new(
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                sub_window,
                rng,
            )),
            LayerSpec::DepthwiseConv1d { channels, kernel } => {
                Box::new(DepthwiseConv1d::new(channels, kernel, rng))
            }
            LayerSpec::TransposedConv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                sub_window,
            } => Box::new(ConvTranspose1d::new(
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                sub_window,
                rng,
            )),
            LayerSpec::Tanh => Box::new(Tanh::default()),
            LayerSpec::SpatialDropout { rate } => Box::new(SpatialDropout::new(rate)),
        })
    }
}

/// Fan-in scaled uniform initialisation, `U(-sqrt(3/fan_in), sqrt(3/fan_in))`.
pub(crate) fn fan_in_uniform(shape: &[usize], fan_in: usize, rng: &mut SeededRng) -> Tensor {
    let limit = (3.0 / fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform_range(-limit, limit)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

pub(crate) fn add_bias_rows(y: &mut [f64], bias: &[f64]) {
    for row in y.chunks_exact_mut(bias.len()) {
        row.copy_from_slice(bias);
    }
}

pub(crate) fn accumulate_bias_grad(grad: &mut [f64], dy: &[f64]) {
    for row in dy.chunks_exact(grad.len()) {
        for (g, d) in grad.iter_mut().zip(row) {
            *g += d;
        }
    }
}

/// Affine map over the trailing axis: `y = x W + b`, `W` stored `(in, out)`.
#[derive(Clone, Debug)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<Tensor>,
}

impl Dense {
    pub fn new(input: usize, output: usize, rng: &mut SeededRng) -> Self {
        Self {
            input,
            output,
            weight: Param::new(fan_in_uniform(&[input, output], input, rng)),
            bias: Param::new(Tensor::zeros(&[output])),
            cache: None,
        }
    }

    /// Identity weights (requires `input == output`) and zero bias.
    pub fn identity(n: usize) -> Self {
        let mut w = Tensor::zeros(&[n, n]);
        for i in 0..n {
            w.data_mut()[i * n + i] = 1.0;
        }
        Self {
            input: n,
            output: n,
            weight: Param::new(w),
            bias: Param::new(Tensor::zeros(&[n])),
            cache: None,
        }
    }
}

impl Layer for Dense {
    fn kind(&self) -> &'static str {
        "dense"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut SeededRng) -> Result<Tensor> {
        let (rows, last) = x.rows();
        if last != self.input {
            return Err(Error::shape("dense", &[self.input], &[last]));
        }
        let mut shape = x.shape().to_vec();
        *shape.last_mut().expect("non-scalar input") = self.output;
        let mut y = vec![0.0; rows * self.output];
        add_bias_rows(&mut y, self.bias.value.data());
        gemm(
            rows,
            self.input,
            self.output,
            x.data(),
            false,
            self.weight.value.data(),
            false,
            1.0,
            &mut y,
        );
        self.cache = Some(x.clone());
        let y = Tensor::new(shape, y)?;
        y.debug_check("dense")?;
        Ok(y)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let x = self.cache.as_ref().ok_or(Error::MissingCache { layer: "dense" })?;
        let (rows, _) = x.rows();
        if dy.len() != rows * self.output {
            return Err(Error::shape("dense backward", &[rows, self.output], dy.shape()));
        }
        gemm(
            self.input,
            rows,
            self.output,
            x.data(),
            true,
            dy.data(),
            false,
            1.0,
            &mut self.weight.grad,
        );
        accumulate_bias_grad(&mut self.bias.grad, dy.data());
        let mut dx = vec![0.0; rows * self.input];
        gemm(
            rows,
            self.output,
            self.input,
            dy.data(),
            false,
            self.weight.value.data(),
            true,
            0.0,
            &mut dx,
        );
        Tensor::new(x.shape().to_vec(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[derive(Clone, Debug, Default)]
pub struct Tanh {
    cache: Option<Tensor>,
}

impl Layer for Tanh {
    fn kind(&self) -> &'static str {
        "tanh"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut SeededRng) -> Result<Tensor> {
        let y = Tensor::new(
            x.shape().to_vec(),
            x.data().iter().map(|v| v.tanh()).collect(),
        )?;
        self.cache = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let y = self.cache.as_ref().ok_or(Error::MissingCache { layer: "tanh" })?;
        if dy.shape() != y.shape() {
            return Err(Error::shape("tanh backward", y.shape(), dy.shape()));
        }
        let dx = y
            .data()
            .iter()
            .zip(dy.data())
            .map(|(y, d)| d * (1.0 - y * y))
            .collect();
        Tensor::new(y.shape().to_vec(), dx)
    }
}

/// Drops whole channels of a `(batch, time, channels)` tensor.
///
/// In train mode each `(sample, channel)` pair is kept with probability
/// `1 - rate` and survivors are scaled by `1 / (1 - rate)`. Eval mode is the
/// identity. [`SpatialDropout::forward_with_mask`] accepts an externally chosen
/// per-channel multiplier instead of the Bernoulli draw.
#[derive(Clone, Debug)]
pub struct SpatialDropout {
    pub rate: f64,
    cache: Option<(Vec<usize>, Option<Vec<f64>>)>,
}

impl SpatialDropout {
    pub fn new(rate: f64) -> Self {
        Self { rate, cache: None }
    }

    /// `mask` holds one multiplier per `(sample, channel)`, row-major.
    pub fn forward_with_mask(&mut self, x: &Tensor, mask: Vec<f64>) -> Result<Tensor> {
        let (b, t, c) = x.dims3("spatial_dropout")?;
        if mask.len() != b * c {
            return Err(Error::shape("spatial_dropout mask", &[b, c], &[mask.len()]));
        }
        let mut y = x.data().to_vec();
        for bi in 0..b {
            for ti in 0..t {
                let row = &mut y[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                for (v, m) in row.iter_mut().zip(&mask[bi * c..(bi + 1) * c]) {
                    *v *= m;
                }
            }
        }
        self.cache = Some((x.shape().to_vec(), Some(mask)));
        Tensor::new(x.shape().to_vec(), y)
    }

    pub fn last_mask(&self) -> Option<&[f64]> {
        self.cache.as_ref().and_then(|(_, m)| m.as_deref())
    }
}

impl Layer for SpatialDropout {
    fn kind(&self) -> &'static str {
        "spatial_dropout"
    }

    fn forward(&mut self, x: &Tensor, mode: Mode, rng: &mut SeededRng) -> Result<Tensor> {
        let (b, _, c) = x.dims3("spatial_dropout")?;
        if mode == Mode::Eval || self.rate == 0.0 {
            self.cache = Some((x.shape().to_vec(), None));
            return Ok(x.clone());
        }
        let scale = 1.0 / (1.0 - self.rate);
        let mask = (0..b * c)
            .map(|_| if rng.uniform() < self.rate { 0.0 } else { scale })
            .collect();
        self.forward_with_mask(x, mask)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let (shape, mask) = self
            .cache
            .as_ref()
            .ok_or(Error::MissingCache { layer: "spatial_dropout" })?;
        if dy.shape() != &shape[..] {
            return Err(Error::shape("spatial_dropout backward", shape, dy.shape()));
        }
        let Some(mask) = mask else {
            return Ok(dy.clone());
        };
        let (b, t, c) = (shape[0], shape[1], shape[2]);
        let mut dx = dy.data().to_vec();
        for bi in 0..b {
            for ti in 0..t {
                let row = &mut dx[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                for (v, m) in row.iter_mut().zip(&mask[bi * c..(bi + 1) * c]) {
                    *v *= m;
                }
            }
        }
        Tensor::new(shape.clone(), dx)
    }
}

/// One filter per channel, stride 1, "same" zero padding. Weight `(kernel, channels)`.
#[derive(Clone, Debug)]
pub struct DepthwiseConv1d {
    pub channels: usize,
    pub kernel: usize,
    pub weight: Param,
    pub bias: Param,
    cache: Option<Tensor>,
}

impl DepthwiseConv1d {
    pub fn new(channels: usize, kernel: usize, rng: &mut SeededRng) -> Self {
        Self {
            channels,
            kernel,
            weight: Param::new(fan_in_uniform(&[kernel, channels], kernel, rng)),
            bias: Param::new(Tensor::zeros(&[channels])),
            cache: None,
        }
    }

    fn pad(&self) -> usize {
        (self.kernel - 1) / 2
    }
}

impl Layer for DepthwiseConv1d {
    fn kind(&self) -> &'static str {
        "depthwise_conv1d"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut SeededRng) -> Result<Tensor> {
        let (b, t, c) = x.dims3("depthwise_conv1d")?;
        if c != self.channels {
            return Err(Error::shape("depthwise_conv1d", &[b, t, self.channels], x.shape()));
        }
        let w = self.weight.value.data();
        let pad = self.pad() as isize;
        let xd = x.data();
        let mut y = vec![0.0; xd.len()];
        for bi in 0..b {
            for ti in 0..t {
                let out = &mut y[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                out.copy_from_slice(self.bias.value.data());
                for k in 0..self.kernel {
                    let src = ti as isize + k as isize - pad;
                    if src < 0 || src >= t as isize {
                        continue;
                    }
                    let xin = &xd[(bi * t + src as usize) * c..(bi * t + src as usize + 1) * c];
                    let wk = &w[k * c..(k + 1) * c];
                    for ((o, xv), wv) in out.iter_mut().zip(xin).zip(wk) {
                        *o += xv * wv;
                    }
                }
            }
        }
        self.cache = Some(x.clone());
        Tensor::new(x.shape().to_vec(), y)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let x = self
            .cache
            .as_ref()
            .ok_or(Error::MissingCache { layer: "depthwise_conv1d" })?;
        if dy.shape() != x.shape() {
            return Err(Error::shape("depthwise_conv1d backward", x.shape(), dy.shape()));
        }
        let (b, t, c) = x.dims3("depthwise_conv1d")?;
        let pad = self.pad() as isize;
        let (xd, dyd) = (x.data(), dy.data());
        let w = self.weight.value.data();
        let mut dx = vec![0.0; xd.len()];
        accumulate_bias_grad(&mut self.bias.grad, dyd);
        for bi in 0..b {
            for ti in 0..t {
                let g = &dyd[(bi * t + ti) * c..(bi * t + ti + 1) * c];
                for k in 0..self.kernel {
                    let src = ti as isize + k as isize - pad;
                    if src < 0 || src >= t as isize {
                        continue;
                    }
                    let base = (bi * t + src as usize) * c;
                    for ch in 0..c {
                        self.weight.grad[k * c + ch] += g[ch] * xd[base + ch];
                        dx[base + ch] += g[ch] * w[k * c + ch];
                    }
                }
            }
        }
        Tensor::new(x.shape().to_vec(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
