//! Strided and transposed 1-D convolutions with optional sub-window isolation.
//!
//! With `sub_window = Some(s)` the output timeline is cut into contiguous
//! blocks of `s` samples and each block only sees the matching block of the
//! input; zero padding is applied at every block edge, so no receptive field
//! crosses a block boundary. `None` treats the whole sequence as one block.
//!
//! Length conventions, for input length `n`, kernel `k`, stride `s`:
//!
//! | layer       | padding | output                 | left pad             |
//! |-------------|---------|------------------------|----------------------|
//! | conv        | same    | `ceil(n / s)`          | `((out-1)s + k - n)/2` |
//! | conv        | valid   | `(n - k) / s + 1`      | 0                    |
//! | transposed  | same    | `n * s`                | `(k - s) / 2`        |
//! | transposed  | valid   | `(n - 1) s + k`        | 0                    |
//!
//! Both layers are lowered to a single GEMM over the whole batch.

use super::layers::{
    accumulate_bias_grad, add_bias_rows, fan_in_uniform, Layer, Mode, Padding,
};
use super::rng::SeededRng;
use super::tensor::{gemm, Param, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub in_len: usize,
    pub out_len: usize,
    pub block_in: usize,
    pub block_out: usize,
    pub pad_left: usize,
}

fn indivisible(msg: String) -> Error {
    Error::Config(format!("indivisible sub-window partition: {msg}"))
}

/// Cross-correlation; weight `(kernel, in_channels, out_channels)`.
#[derive(Clone, Debug)]
pub struct Conv1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
    pub sub_window: Option<usize>,
    pub weight: Param,
    pub bias: Param,
    cache: Option<(Vec<f64>, Vec<usize>, Geometry)>,
}

impl Conv1d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        sub_window: Option<usize>,
        rng: &mut SeededRng,
    ) -> Self {
        let fan_in = kernel * in_channels;
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            sub_window,
            weight: Param::new(fan_in_uniform(&[kernel, in_channels, out_channels], fan_in, rng)),
            bias: Param::new(Tensor::zeros(&[out_channels])),
            cache: None,
        }
    }

    pub fn geometry(&self, in_len: usize) -> Result<Geometry> {
        let (k, s) = (self.kernel, self.stride);
        match (self.padding, self.sub_window) {
            (Padding::Valid, Some(_)) => Err(Error::Config(
                "sub-window partitioning requires same padding".into(),
            )),
            (Padding::Valid, None) => {
                if in_len < k {
                    return Err(Error::SignalTooShort { len: in_len, min: k - 1 });
                }
                let out_len = (in_len - k) / s + 1;
                Ok(Geometry {
                    in_len,
                    out_len,
                    block_in: in_len,
                    block_out: out_len,
                    pad_left: 0,
                })
            }
            (Padding::Same, None) => {
                let out_len = in_len.div_ceil(s);
                let pad_total = ((out_len.max(1) - 1) * s + k).saturating_sub(in_len);
                Ok(Geometry {
                    in_len,
                    out_len,
                    block_in: in_len,
                    block_out: out_len,
                    pad_left: pad_total / 2,
                })
            }
            (Padding::Same, Some(block)) => {
                if block == 0 || in_len % s != 0 || (in_len / s) % block != 0 {
                    return Err(indivisible(format!(
                        "input {in_len}, stride {s}, sub-window {block}"
                    )));
                }
                Ok(Geometry {
                    in_len,
                    out_len: in_len / s,
                    block_in: block * s,
                    block_out: block,
                    pad_left: k.saturating_sub(s) / 2,
                })
            }
        }
    }

    /// Input index feeding output `t` through tap `k`, if any.
    #[inline]
    fn source(&self, g: &Geometry, t: usize, k: usize) -> Option<usize> {
        let block = t / g.block_out;
        let local = (t % g.block_out) * self.stride + k;
        if local < g.pad_left || local - g.pad_left >= g.block_in {
            None
        } else {
            Some(block * g.block_in + local - g.pad_left)
        }
    }
}

impl Layer for Conv1d {
    fn kind(&self) -> &'static str {
        "conv1d"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut SeededRng) -> Result<Tensor> {
        let (b, t_in, c_in) = x.dims3("conv1d")?;
        if c_in != self.in_channels {
            return Err(Error::shape("conv1d", &[b, t_in, self.in_channels], x.shape()));
        }
        let g = self.geometry(t_in)?;
        let width = self.kernel * c_in;
        let rows = b * g.out_len;
        let xd = x.data();
        let mut cols = vec![0.0; rows * width];
        for bi in 0..b {
            for t in 0..g.out_len {
                let row = &mut cols[(bi * g.out_len + t) * width..(bi * g.out_len + t + 1) * width];
                for k in 0..self.kernel {
                    if let Some(src) = self.source(&g, t, k) {
                        let from = (bi * t_in + src) * c_in;
                        row[k * c_in..(k + 1) * c_in].copy_from_slice(&xd[from..from + c_in]);
                    }
                }
            }
        }
        let mut y = vec![0.0; rows * self.out_channels];
        add_bias_rows(&mut y, self.bias.value.data());
        gemm(
            rows,
            width,
            self.out_channels,
            &cols,
            false,
            self.weight.value.data(),
            false,
            1.0,
            &mut y,
        );
        self.cache = Some((cols, x.shape().to_vec(), g));
        let y = Tensor::new(vec![b, g.out_len, self.out_channels], y)?;
        y.debug_check("conv1d")?;
        Ok(y)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let (cols, in_shape, g) = self
            .cache
            .as_ref()
            .ok_or(Error::MissingCache { layer: "conv1d" })?;
        let (b, c_in) = (in_shape[0], in_shape[2]);
        let expected = [b, g.out_len, self.out_channels];
        if dy.shape() != expected {
            return Err(Error::shape("conv1d backward", &expected, dy.shape()));
        }
        let width = self.kernel * c_in;
        let rows = b * g.out_len;
        gemm(
            width,
            rows,
            self.out_channels,
            cols,
            true,
            dy.data(),
            false,
            1.0,
            &mut self.weight.grad,
        );
        accumulate_bias_grad(&mut self.bias.grad, dy.data());
        let mut dcols = vec![0.0; rows * width];
        gemm(
            rows,
            self.out_channels,
            width,
            dy.data(),
            false,
            self.weight.value.data(),
            true,
            0.0,
            &mut dcols,
        );
        let mut dx = vec![0.0; b * g.in_len * c_in];
        for bi in 0..b {
            for t in 0..g.out_len {
                let row = &dcols[(bi * g.out_len + t) * width..(bi * g.out_len + t + 1) * width];
                for k in 0..self.kernel {
                    if let Some(src) = self.source(g, t, k) {
                        let to = (bi * g.in_len + src) * c_in;
                        for (d, v) in dx[to..to + c_in].iter_mut().zip(&row[k * c_in..(k + 1) * c_in]) {
                            *d += v;
                        }
                    }
                }
            }
        }
        Tensor::new(in_shape.clone(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Transposed convolution (fractionally strided upsampling); weight
/// `(in_channels, kernel, out_channels)`.
#[derive(Clone, Debug)]
pub struct ConvTranspose1d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: Padding,
    pub sub_window: Option<usize>,
    pub weight: Param,
    pub bias: Param,
    cache: Option<(Tensor, Geometry)>,
}

impl ConvTranspose1d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
        sub_window: Option<usize>,
        rng: &mut SeededRng,
    ) -> Self {
        // each output sample receives about kernel/stride taps per input channel
        let fan_in = (kernel.div_ceil(stride)) * in_channels;
        Self {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            sub_window,
            weight: Param::new(fan_in_uniform(&[in_channels, kernel, out_channels], fan_in, rng)),
            bias: Param::new(Tensor::zeros(&[out_channels])),
            cache: None,
        }
    }

    pub fn geometry(&self, in_len: usize) -> Result<Geometry> {
        let (k, s) = (self.kernel, self.stride);
        match (self.padding, self.sub_window) {
            (Padding::Valid, Some(_)) => Err(Error::Config(
                "sub-window partitioning requires same padding".into(),
            )),
            (Padding::Valid, None) => {
                let out_len = (in_len.max(1) - 1) * s + k;
                Ok(Geometry {
                    in_len,
                    out_len,
                    block_in: in_len,
                    block_out: out_len,
                    pad_left: 0,
                })
            }
            (Padding::Same, None) => Ok(Geometry {
                in_len,
                out_len: in_len * s,
                block_in: in_len,
                block_out: in_len * s,
                pad_left: k.saturating_sub(s) / 2,
            }),
            (Padding::Same, Some(block)) => {
                if block == 0 || block % s != 0 || (in_len * s) % block != 0 {
                    return Err(indivisible(format!(
                        "input {in_len}, upsample {s}, sub-window {block}"
                    )));
                }
                Ok(Geometry {
                    in_len,
                    out_len: in_len * s,
                    block_in: block / s,
                    block_out: block,
                    pad_left: k.saturating_sub(s) / 2,
                })
            }
        }
    }

    /// Output index receiving input `t` through tap `k`, if any.
    #[inline]
    fn target(&self, g: &Geometry, t: usize, k: usize) -> Option<usize> {
        let block = t / g.block_in;
        let local = (t % g.block_in) * self.stride + k;
        if local < g.pad_left || local - g.pad_left >= g.block_out {
            None
        } else {
            Some(block * g.block_out + local - g.pad_left)
        }
    }
}

impl Layer for ConvTranspose1d {
    fn kind(&self) -> &'static str {
        "transposed_conv1d"
    }

    fn forward(&mut self, x: &Tensor, _mode: Mode, _rng: &mut SeededRng) -> Result<Tensor> {
        let (b, t_in, c_in) = x.dims3("transposed_conv1d")?;
        if c_in != self.in_channels {
            return Err(Error::shape(
                "transposed_conv1d",
                &[b, t_in, self.in_channels],
                x.shape(),
            ));
        }
        let g = self.geometry(t_in)?;
        let width = self.kernel * self.out_channels;
        let c_out = self.out_channels;
        let mut taps = vec![0.0; b * t_in * width];
        gemm(
            b * t_in,
            c_in,
            width,
            x.data(),
            false,
            self.weight.value.data(),
            false,
            0.0,
            &mut taps,
        );
        let mut y = vec![0.0; b * g.out_len * c_out];
        add_bias_rows(&mut y, self.bias.value.data());
        for bi in 0..b {
            for t in 0..t_in {
                let row = &taps[(bi * t_in + t) * width..(bi * t_in + t + 1) * width];
                for k in 0..self.kernel {
                    if let Some(dst) = self.target(&g, t, k) {
                        let to = (bi * g.out_len + dst) * c_out;
                        for (o, v) in y[to..to + c_out].iter_mut().zip(&row[k * c_out..(k + 1) * c_out]) {
                            *o += v;
                        }
                    }
                }
            }
        }
        self.cache = Some((x.clone(), g));
        let y = Tensor::new(vec![b, g.out_len, c_out], y)?;
        y.debug_check("transposed_conv1d")?;
        Ok(y)
    }

    fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let (x, g) = self
            .cache
            .as_ref()
            .ok_or(Error::MissingCache { layer: "transposed_conv1d" })?;
        let (b, t_in, c_in) = x.dims3("transposed_conv1d")?;
        let c_out = self.out_channels;
        let expected = [b, g.out_len, c_out];
        if dy.shape() != expected {
            return Err(Error::shape("transposed_conv1d backward", &expected, dy.shape()));
        }
        let width = self.kernel * c_out;
        let dyd = dy.data();
        let mut dtaps = vec![0.0; b * t_in * width];
        for bi in 0..b {
            for t in 0..t_in {
                let row = &mut dtaps[(bi * t_in + t) * width..(bi * t_in + t + 1) * width];
                for k in 0..self.kernel {
                    if let Some(dst) = self.target(g, t, k) {
                        let from = (bi * g.out_len + dst) * c_out;
                        row[k * c_out..(k + 1) * c_out].copy_from_slice(&dyd[from..from + c_out]);
                    }
                }
            }
        }
        accumulate_bias_grad(&mut self.bias.grad, dyd);
        gemm(
            c_in,
            b * t_in,
            width,
            x.data(),
            true,
            &dtaps,
            false,
            1.0,
            &mut self.weight.grad,
        );
        let mut dx = vec![0.0; b * t_in * c_in];
        gemm(
            b * t_in,
            width,
            c_in,
            &dtaps,
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

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> SeededRng {
        SeededRng::new(3)
    }

    #[test]
    fn strided_kernel_one_halves_length() {
        let mut c = Conv1d::new(1, 1, 1, 2, Padding::Same, None, &mut rng());
        let y = c
            .forward(&Tensor::zeros(&[1, 256, 1]), Mode::Eval, &mut rng())
            .unwrap();
        assert_eq!(y.shape(), &[1, 128, 1]);
    }

    #[test]
    fn transposed_stride_two_doubles_length() {
        let mut c = ConvTranspose1d::new(1, 1, 3, 2, Padding::Same, None, &mut rng());
        let y = c
            .forward(&Tensor::zeros(&[1, 128, 1]), Mode::Eval, &mut rng())
            .unwrap();
        assert_eq!(y.shape(), &[1, 256, 1]);
    }

    #[test]
    fn valid_lengths() {
        let c = Conv1d::new(2, 2, 4, 1, Padding::Valid, None, &mut rng());
        assert_eq!(c.geometry(64).unwrap().out_len, 61);
        let t = ConvTranspose1d::new(2, 2, 4, 1, Padding::Valid, None, &mut rng());
        assert_eq!(t.geometry(61).unwrap().out_len, 64);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut r = rng();
        let mut c = Conv1d::new(2, 3, 3, 1, Padding::Same, None, &mut r);
        let x = Tensor::new(vec![1, 5, 2], (0..10).map(|v| (v as f64).sin()).collect()).unwrap();
        let y = c.forward(&x, Mode::Eval, &mut r).unwrap();
        let w = c.weight.value.data();
        for t in 0..5 {
            for o in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    let s = t as isize + k as isize - 1;
                    if (0..5).contains(&s) {
                        for ci in 0..2 {
                            acc += w[(k * 2 + ci) * 3 + o] * x.data()[s as usize * 2 + ci];
                        }
                    }
                }
                assert!((y.data()[t * 3 + o] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sub_window_receptive_fields_stay_inside_their_block() {
        let mut r = rng();
        let mut c = Conv1d::new(1, 2, 5, 1, Padding::Same, Some(8), &mut r);
        let mut x = Tensor::new(vec![1, 32, 1], (0..32).map(|v| (v as f64 * 0.3).cos()).collect()).unwrap();
        let base = c.forward(&x, Mode::Eval, &mut r).unwrap();
        for t in 8..16 {
            x.data_mut()[t] = 0.0;
        }
        let after = c.forward(&x, Mode::Eval, &mut r).unwrap();
        for t in 0..32 {
            let same = (0..2).all(|o| base.data()[t * 2 + o] == after.data()[t * 2 + o]);
            assert_eq!(same, !(8..16).contains(&t), "t = {t}");
        }
    }

    #[test]
    fn transposed_sub_window_isolation() {
        let mut r = rng();
        let mut c = ConvTranspose1d::new(1, 1, 7, 2, Padding::Same, Some(8), &mut r);
        let mut x = Tensor::new(vec![1, 16, 1], (0..16).map(|v| 1.0 + v as f64).collect()).unwrap();
        let base = c.forward(&x, Mode::Eval, &mut r).unwrap();
        for t in 4..8 {
            x.data_mut()[t] = 0.0;
        }
        let after = c.forward(&x, Mode::Eval, &mut r).unwrap();
        for t in 0..32 {
            let same = base.data()[t] == after.data()[t];
            assert_eq!(same, !(8..16).contains(&t), "t = {t}");
        }
    }

    #[test]
    fn indivisible_partition_is_rejected() {
        let mut r = rng();
        let mut c = Conv1d::new(1, 1, 3, 1, Padding::Same, Some(7), &mut r);
        let err = c.forward(&Tensor::zeros(&[1, 32, 1]), Mode::Eval, &mut r).unwrap_err();
        assert!(err.to_string().contains("indivisible"));
    }
}
