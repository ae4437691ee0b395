//! Model configuration: variants, stage tables and parameter accounting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LatentRegularizer;

/// Ablation variant.
///
/// | variant | latent                         | base decode          | regulariser |
/// |---------|--------------------------------|----------------------|-------------|
/// | A       | fixed 32-d                     | dense                | KLD         |
/// | B       | fixed 32-d                     | dense                | SWD         |
/// | C       | sliding-window frames          | per-frame dense      | SWD         |
/// | D       | sliding-window frames          | transposed conv      | SWD         |
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
    C,
    D,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A, Variant::B, Variant::C, Variant::D];

    pub fn regularizer(self) -> LatentRegularizer {
        match self {
            Variant::A => LatentRegularizer::Kld,
            _ => LatentRegularizer::Swd,
        }
    }

    /// Whether the latent is a sequence of sliding-window frames.
    pub fn dynamic_latent(self) -> bool {
        matches!(self, Variant::C | Variant::D)
    }

    pub fn description(self) -> &'static str {
        match self {
            Variant::A => "fixed latent, dense base decode, KL divergence",
            Variant::B => "fixed latent, dense base decode, sliced Wasserstein",
            Variant::C => "sliding-window latent, dense base decode, sliced Wasserstein",
            Variant::D => "sliding-window latent, transposed-conv base decode, sliced Wasserstein",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Variant::A),
            "B" => Ok(Variant::B),
            "C" => Ok(Variant::C),
            "D" => Ok(Variant::D),
            other => Err(Error::Config(format!("unknown variant {other:?}, expected A, B, C or D"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    /// Strided convolution; `factor` is the stride.
    Encoder,
    /// Transposed convolution when `factor > 1`, plain convolution otherwise;
    /// `factor` is the upsampling ratio.
    Decoder,
}

/// One sub-window convolution stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubWindowSpec {
    pub kind: StageKind,
    pub filters: usize,
    pub kernel: usize,
    pub factor: usize,
    /// Block length on the output timeline.
    pub sub_window: usize,
    pub in_len: usize,
    pub out_len: usize,
    /// Sampling rate the kernel and sub-window are quoted at.
    pub fs: f64,
    pub target_band: (f64, f64),
}

impl SubWindowSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn encoder(filters: usize, in_len: usize, fs: f64, kernel: usize, sub_window: usize, stride: usize, band: (f64, f64)) -> Self {
        Self {
            kind: StageKind::Encoder,
            filters,
            kernel,
            factor: stride,
            sub_window,
            in_len,
            out_len: in_len / stride.max(1),
            fs,
            target_band: band,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn decoder(filters: usize, in_len: usize, upsample: usize, fs: f64, kernel: usize, sub_window: usize, band: (f64, f64)) -> Self {
        Self {
            kind: StageKind::Decoder,
            filters,
            kernel,
            factor: upsample,
            sub_window,
            in_len,
            out_len: in_len * upsample,
            fs,
            target_band: band,
        }
    }

    /// Kernel cut-off `fs / K`.
    pub fn f_c(&self) -> f64 {
        self.fs / self.kernel as f64
    }

    /// Lowest frequency a sub-window can hold, `fs / W_S`.
    pub fn f_l(&self) -> f64 {
        self.fs / self.sub_window as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.filters == 0 || self.kernel == 0 || self.factor == 0 || self.sub_window == 0 {
            return bad(format!("stage extents must be positive: {self:?}"));
        }
        let expect = match self.kind {
            StageKind::Encoder => {
                if self.in_len % self.factor != 0 {
                    return bad(format!("input {} not divisible by stride {}", self.in_len, self.factor));
                }
                self.in_len / self.factor
            }
            StageKind::Decoder => self.in_len * self.factor,
        };
        if self.out_len != expect {
            return bad(format!("stage output {} should be {expect}", self.out_len));
        }
        if self.out_len % self.sub_window != 0 {
            return Err(Error::Config(format!(
                "indivisible sub-window partition: output {} by sub-window {}",
                self.out_len, self.sub_window
            )));
        }
        if self.kind == StageKind::Decoder && self.sub_window % self.factor != 0 {
            return bad(format!("sub-window {} not divisible by upsample {}", self.sub_window, self.factor));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub window: usize,
    pub fs: f64,
    /// Number of neighbour channels feeding the model.
    pub neighbors: usize,
    pub latent_dim: usize,
    pub stats_window_ms: f64,
    pub stats_stride_ms: f64,
    pub swd_projections: usize,
    pub outlier_z: f64,
    /// Half-width of the train-mode output gain, `g ~ U[1 - j, 1 + j]`.
    pub scale_jitter: f64,
    /// Drop neighbours at random during training.
    pub neighbor_dropout: bool,
    /// Standardise each neighbour channel per window before aggregation.
    pub standardize_input: bool,
    pub encoder: Vec<SubWindowSpec>,
    pub decoder: Vec<SubWindowSpec>,
}

const BETA: (f64, f64) = (12.0, 30.0);
const ALPHA: (f64, f64) = (8.0, 12.0);
const THETA: (f64, f64) = (4.0, 8.0);
const DELTA: (f64, f64) = (0.5, 4.0);

impl ModelConfig {
    /// Full-size model: 256-sample windows at 100 Hz, 32-d latent.
    pub fn paper(variant: Variant) -> Self {
        Self {
            variant,
            window: 256,
            fs: 100.0,
            neighbors: 3,
            latent_dim: 32,
            stats_window_ms: 160.0,
            stats_stride_ms: 40.0,
            swd_projections: 50,
            outlier_z: 3.5,
            scale_jitter: 0.1,
            neighbor_dropout: true,
            standardize_input: true,
            encoder: vec![
                SubWindowSpec::encoder(16, 256, 100.0, 5, 8, 1, BETA),
                SubWindowSpec::encoder(32, 256, 100.0, 9, 16, 2, ALPHA),
                SubWindowSpec::encoder(64, 128, 50.0, 9, 16, 2, THETA),
                SubWindowSpec::encoder(128, 64, 25.0, 7, 64, 1, DELTA),
            ],
            decoder: vec![
                SubWindowSpec::decoder(64, 64, 2, 50.0, 13, 128, DELTA),
                SubWindowSpec::decoder(32, 128, 2, 100.0, 15, 32, THETA),
                SubWindowSpec::decoder(16, 256, 1, 100.0, 9, 16, ALPHA),
                SubWindowSpec::decoder(1, 256, 1, 100.0, 5, 8, BETA),
            ],
        }
    }

    /// Quarter-size model (64-sample windows, filters and latent divided by
    /// four) for gradient checks and quick experiments.
    pub fn reduced(variant: Variant) -> Self {
        Self {
            window: 64,
            latent_dim: 8,
            encoder: vec![
                SubWindowSpec::encoder(4, 64, 100.0, 5, 2, 1, BETA),
                SubWindowSpec::encoder(8, 64, 100.0, 9, 4, 2, ALPHA),
                SubWindowSpec::encoder(16, 32, 50.0, 9, 4, 2, THETA),
                SubWindowSpec::encoder(32, 16, 25.0, 7, 16, 1, DELTA),
            ],
            decoder: vec![
                SubWindowSpec::decoder(16, 16, 2, 50.0, 13, 32, DELTA),
                SubWindowSpec::decoder(8, 32, 2, 100.0, 15, 8, THETA),
                SubWindowSpec::decoder(4, 64, 1, 100.0, 9, 4, ALPHA),
                SubWindowSpec::decoder(1, 64, 1, 100.0, 5, 2, BETA),
            ],
            ..Self::paper(variant)
        }
    }

    pub fn with_neighbors(mut self, k: usize) -> Self {
        self.neighbors = k;
        self
    }

    /// `(time steps, channels)` of the encoder output.
    pub fn encoded_shape(&self) -> (usize, usize) {
        let last = self.encoder.last().expect("validated config has stages");
        (last.out_len, last.filters)
    }

    /// Sampling rate of the encoder output timeline.
    pub fn latent_rate(&self) -> f64 {
        self.fs * self.encoded_shape().0 as f64 / self.window as f64
    }

    /// Sliding-statistics window and stride in encoder steps.
    pub fn stats_steps(&self) -> (usize, usize) {
        let rate = self.latent_rate();
        let steps = |ms: f64| (ms * rate / 1000.0).round() as usize;
        (steps(self.stats_window_ms), steps(self.stats_stride_ms))
    }

    /// Number of latent frames (1 for a fixed latent).
    pub fn latent_frames(&self) -> usize {
        if !self.variant.dynamic_latent() {
            return 1;
        }
        let (t, _) = self.encoded_shape();
        let (win, stride) = self.stats_steps();
        (t - win) / stride + 1
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return bad("encoder and decoder need at least one stage".into());
        }
        if self.neighbors == 0 {
            return bad("the target needs at least one neighbour".into());
        }
        if self.latent_dim == 0 || self.swd_projections == 0 {
            return bad("latent_dim and swd_projections must be positive".into());
        }
        if !(self.outlier_z > 0.0) || !(0.0..1.0).contains(&self.scale_jitter) {
            return bad("outlier_z must be positive and scale_jitter in [0, 1)".into());
        }
        let mut len = self.window;
        for s in self.encoder.iter().chain(&self.decoder) {
            s.validate()?;
            if s.in_len != len {
                return bad(format!("stage expects input {} but receives {len}", s.in_len));
            }
            len = s.out_len;
        }
        let (t, _) = self.encoded_shape();
        if self.decoder[0].in_len != t {
            return bad("decoder input must match the encoder output".into());
        }
        if len != self.window || self.decoder.last().map(|s| s.filters) != Some(1) {
            return bad(format!("decoder must end at {} samples with one filter", self.window));
        }
        if self.variant.dynamic_latent() {
            let (win, stride) = self.stats_steps();
            if win == 0 || stride == 0 || win > t || (t - win) % stride != 0 {
                return bad(format!("sliding statistics ({win} steps, stride {stride}) do not tile {t} steps"));
            }
            if stride != 1 && self.variant == Variant::C {
                // overlap-add assumes unit stride on the encoder timeline
                return bad("variant C needs a one-step sliding stride".into());
            }
        }
        Ok(())
    }
}

/// Trainable scalar count per block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBreakdown {
    pub blocks: Vec<(String, usize)>,
    pub total: usize,
}

impl ParamBreakdown {
    pub fn get(&self, name: &str) -> Option<usize> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }
}

fn dense(i: usize, o: usize) -> usize {
    i * o + o
}

/// Parameter count derived from the configuration alone.
pub fn count_parameters(config: &ModelConfig) -> Result<ParamBreakdown> {
    config.validate()?;
    let k = config.neighbors;
    let mut blocks = vec![
        ("aggregator.depthwise".to_string(), 2 * k),
        ("aggregator.combine".to_string(), dense(k, 1)),
    ];
    let mut in_ch = 1;
    for (i, s) in config.encoder.iter().enumerate() {
        blocks.push((format!("encoder.{i}"), s.kernel * in_ch * s.filters + s.filters));
        in_ch = s.filters;
    }
    let (t, c) = config.encoded_shape();
    let d = config.latent_dim;
    if config.variant.dynamic_latent() {
        let (win, _) = config.stats_steps();
        blocks.push(("latent.mu".into(), dense(win * c, d)));
        blocks.push(("latent.log_var".into(), dense(win * c, d)));
        let base = match config.variant {
            Variant::C => dense(d, win * c),
            _ => d * win * c + c,
        };
        blocks.push(("base_decode".into(), base));
    } else {
        blocks.push(("latent.mu".into(), dense(t * c, d)));
        blocks.push(("latent.log_var".into(), dense(t * c, d)));
        blocks.push(("base_decode".into(), dense(d, t * c)));
    }
    for (i, s) in config.decoder.iter().enumerate() {
        blocks.push((format!("decoder.{i}"), s.kernel * in_ch * s.filters + s.filters));
        in_ch = s.filters;
    }
    blocks.push(("head".into(), dense(config.window, config.window)));
    blocks.push(("loss_weights".into(), 2));
    let total = blocks.iter().map(|(_, c)| c).sum();
    Ok(ParamBreakdown { blocks, total })
}
