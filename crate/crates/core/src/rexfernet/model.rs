//! The assembled reconstruction network with a hand-written backward pass.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::blocks::{
    fold_frames, fold_frames_backward, remove_outlier, remove_outlier_backward, sample_latent,
    sample_latent_backward, scale_output, scale_output_backward, select_neighborhood_input,
    unfold_frames, unfold_frames_backward, OutlierCache, ReferenceStats, ScaleCache,
};
use super::config::{count_parameters, ModelConfig, ParamBreakdown, StageKind, Variant};
use crate::autodiff::{
    Checkpoint, Conv1d, ConvTranspose1d, Dense, DepthwiseConv1d, Layer, LayerBlock, Mode, Padding,
    Param, SeededRng, Tanh, Tensor,
};
use crate::eegdata::NeighborMap;
use crate::error::{Error, Result};
use crate::losses::LossWeights;

enum BaseDecoder {
    /// Fixed latent: dense to the whole encoded map.
    Dense(Dense),
    /// Per-frame dense followed by normalised overlap-add.
    Frames(Dense),
    /// Transposed convolution along the frame axis.
    Deconv(ConvTranspose1d),
}

impl BaseDecoder {
    fn params(&self) -> Vec<&Param> {
        match self {
            BaseDecoder::Dense(l) | BaseDecoder::Frames(l) => l.params(),
            BaseDecoder::Deconv(l) => l.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            BaseDecoder::Dense(l) | BaseDecoder::Frames(l) => l.params_mut(),
            BaseDecoder::Deconv(l) => l.params_mut(),
        }
    }
}

struct Cache {
    batch: usize,
    log_var: Vec<f64>,
    eps: Vec<f64>,
    head_out: Vec<f64>,
    outlier: Vec<OutlierCache>,
    scale: Vec<ScaleCache>,
}

/// Outputs of a forward pass. Latents are `(batch, dim)` for a fixed latent
/// and `(batch, frames, dim)` for a sliding-window latent.
#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub recon: Tensor,
    pub mu: Tensor,
    pub log_var: Tensor,
    pub z: Tensor,
    /// Rows whose pre-scaling output was flat and were replaced by the
    /// reference mean.
    pub degenerate: Vec<bool>,
}

pub struct Model {
    config: ModelConfig,
    depthwise: DepthwiseConv1d,
    combine: Dense,
    encoder: Vec<(Conv1d, Tanh)>,
    mu_head: Dense,
    log_var_head: Dense,
    base: BaseDecoder,
    decoder: Vec<(Box<dyn Layer>, Tanh)>,
    head: Dense,
    loss_weights: Param,
    cache: Option<Cache>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("variant", &self.config.variant)
            .field("params", &self.param_count())
            .finish()
    }
}

impl Model {
    pub fn new(config: ModelConfig, rng: &mut SeededRng) -> Result<Self> {
        config.validate()?;
        let k = config.neighbors;
        let depthwise = DepthwiseConv1d::new(k, 1, rng);
        let combine = Dense::new(k, 1, rng);
        let mut in_ch = 1;
        let mut encoder = Vec::new();
        for s in &config.encoder {
            let conv = Conv1d::new(in_ch, s.filters, s.kernel, s.factor, Padding::Same, Some(s.sub_window), rng);
            encoder.push((conv, Tanh::default()));
            in_ch = s.filters;
        }
        let (t, c) = config.encoded_shape();
        let d = config.latent_dim;
        let (win, stride) = config.stats_steps();
        let latent_in = if config.variant.dynamic_latent() { win * c } else { t * c };
        let mu_head = Dense::new(latent_in, d, rng);
        let log_var_head = Dense::new(latent_in, d, rng);
        let base = match config.variant {
            Variant::A | Variant::B => BaseDecoder::Dense(Dense::new(d, t * c, rng)),
            Variant::C => BaseDecoder::Frames(Dense::new(d, win * c, rng)),
            Variant::D => BaseDecoder::Deconv(ConvTranspose1d::new(d, c, win, stride, Padding::Valid, None, rng)),
        };
        let mut decoder: Vec<(Box<dyn Layer>, Tanh)> = Vec::new();
        for s in &config.decoder {
            debug_assert_eq!(s.kind, StageKind::Decoder);
            let layer: Box<dyn Layer> = if s.factor > 1 {
                Box::new(ConvTranspose1d::new(in_ch, s.filters, s.kernel, s.factor, Padding::Same, Some(s.sub_window), rng))
            } else {
                Box::new(Conv1d::new(in_ch, s.filters, s.kernel, 1, Padding::Same, Some(s.sub_window), rng))
            };
            decoder.push((layer, Tanh::default()));
            in_ch = s.filters;
        }
        let head = Dense::new(config.window, config.window, rng);
        Ok(Self {
            config,
            depthwise,
            combine,
            encoder,
            mu_head,
            log_var_head,
            base,
            decoder,
            head,
            loss_weights: Param::new(Tensor::zeros(&[2])),
            cache: None,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn loss_weights(&self) -> LossWeights {
        let v = self.loss_weights.value.data();
        LossWeights { s_mse: v[0], s_mag: v[1] }
    }

    /// Adds gradients for the two uncertainty weights.
    pub fn accumulate_loss_weight_grad(&mut self, d: &LossWeights) {
        self.loss_weights.grad[0] += d.s_mse;
        self.loss_weights.grad[1] += d.s_mag;
    }

    /// Parameters grouped by block, in checkpoint order.
    pub fn blocks(&self) -> Vec<(String, Vec<&Param>)> {
        let mut out = vec![
            ("aggregator.depthwise".to_string(), self.depthwise.params()),
            ("aggregator.combine".to_string(), self.combine.params()),
        ];
        for (i, (l, _)) in self.encoder.iter().enumerate() {
            out.push((format!("encoder.{i}"), l.params()));
        }
        out.push(("latent.mu".into(), self.mu_head.params()));
        out.push(("latent.log_var".into(), self.log_var_head.params()));
        out.push(("base_decode".into(), self.base.params()));
        for (i, (l, _)) in self.decoder.iter().enumerate() {
            out.push((format!("decoder.{i}"), l.params()));
        }
        out.push(("head".into(), self.head.params()));
        out.push(("loss_weights".into(), vec![&self.loss_weights]));
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out = self.depthwise.params_mut();
        out.extend(self.combine.params_mut());
        for (l, _) in &mut self.encoder {
            out.extend(l.params_mut());
        }
        out.extend(self.mu_head.params_mut());
        out.extend(self.log_var_head.params_mut());
        out.extend(self.base.params_mut());
        for (l, _) in &mut self.decoder {
            out.extend(l.params_mut());
        }
        out.extend(self.head.params_mut());
        out.push(&mut self.loss_weights);
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().flat_map(|(_, ps)| ps.iter()).map(|p| p.len()).sum()
    }

    /// Counted from the live parameter tensors, per block.
    pub fn param_breakdown(&self) -> ParamBreakdown {
        let blocks: Vec<(String, usize)> = self
            .blocks()
            .into_iter()
            .map(|(n, ps)| (n, ps.iter().map(|p| p.len()).sum()))
            .collect();
        let total = blocks.iter().map(|(_, c)| c).sum();
        ParamBreakdown { blocks, total }
    }

    /// Runs the network on a `(batch, window, neighbours)` input; `refs`
    /// gives the rescaling statistics of every row.
    pub fn forward(&mut self, input: &Tensor, refs: &[ReferenceStats], mode: Mode, rng: &mut SeededRng) -> Result<ForwardOutput> {
        let cfg = &self.config;
        let (batch, w, k) = input.dims3("model input")?;
        if w != cfg.window || k != cfg.neighbors {
            return Err(Error::shape("model input", &[batch, cfg.window, cfg.neighbors], input.shape()));
        }
        if refs.len() != batch {
            return Err(Error::shape("reference stats", &[batch], &[refs.len()]));
        }
        let (t, c) = cfg.encoded_shape();
        let (win, stride) = cfg.stats_steps();
        let frames = cfg.latent_frames();
        let dynamic = cfg.variant.dynamic_latent();

        let mut x = self.depthwise.forward(input, mode, rng)?;
        x = self.combine.forward(&x, mode, rng)?;
        for (conv, act) in &mut self.encoder {
            x = conv.forward(&x, mode, rng)?;
            x = act.forward(&x, mode, rng)?;
        }
        let h = if dynamic {
            let f = unfold_frames(x.data(), batch, t, c, win, stride);
            Tensor::new(vec![batch, frames, win * c], f)?
        } else {
            x.reshape(&[batch, t * c])?
        };
        let mu = self.mu_head.forward(&h, mode, rng)?;
        let log_var = self.log_var_head.forward(&h, mode, rng)?;
        let (z, eps) = sample_latent(mu.data(), log_var.data(), mode, rng);
        let z = Tensor::new(mu.shape().to_vec(), z)?;

        let mut x = match &mut self.base {
            BaseDecoder::Dense(l) => l.forward(&z, mode, rng)?.reshape(&[batch, t, c])?,
            BaseDecoder::Frames(l) => {
                let f = l.forward(&z, mode, rng)?;
                Tensor::new(vec![batch, t, c], fold_frames(f.data(), batch, t, c, win, stride))?
            }
            BaseDecoder::Deconv(l) => l.forward(&z, mode, rng)?,
        };
        for (layer, act) in &mut self.decoder {
            x = layer.forward(&x, mode, rng)?;
            x = act.forward(&x, mode, rng)?;
        }
        let x = x.reshape(&[batch, w])?;
        let head_out = self.head.forward(&x, mode, rng)?;

        let mut recon = Vec::with_capacity(batch * w);
        let mut outlier = Vec::with_capacity(batch);
        let mut scale = Vec::with_capacity(batch);
        let mut degenerate = Vec::with_capacity(batch);
        for (row, r) in head_out.data().chunks(w).zip(refs) {
            let (clipped, oc) = remove_outlier(row, cfg.outlier_z);
            let (y, sc) = scale_output(&clipped, r, mode, cfg.scale_jitter, rng);
            degenerate.push(sc.degenerate);
            recon.extend(y);
            outlier.push(oc);
            scale.push(sc);
        }
        let recon = Tensor::new(vec![batch, w], recon)?;
        recon.check_finite("model forward")?;
        self.cache = Some(Cache {
            batch,
            log_var: log_var.data().to_vec(),
            eps,
            head_out: head_out.into_data(),
            outlier,
            scale,
        });
        Ok(ForwardOutput { recon, mu, log_var, z, degenerate })
    }

    /// Back-propagates gradients of the reconstruction and of the latent
    /// quantities, accumulating into every parameter.
    pub fn backward(&mut self, d_recon: &[f64], d_mu: &[f64], d_log_var: &[f64], d_z: &[f64]) -> Result<()> {
        let cache = self.cache.take().ok_or(Error::MissingCache { layer: "model" })?;
        let cfg = &self.config;
        let (batch, w) = (cache.batch, cfg.window);
        let (t, c) = cfg.encoded_shape();
        let (win, stride) = cfg.stats_steps();
        let frames = cfg.latent_frames();
        let dynamic = cfg.variant.dynamic_latent();
        let latent_len = cache.log_var.len();
        for (name, g, n) in [("recon", d_recon.len(), batch * w), ("mu", d_mu.len(), latent_len), ("log_var", d_log_var.len(), latent_len), ("z", d_z.len(), latent_len)] {
            if g != n {
                return Err(Error::shape(if name == "recon" { "d_recon" } else { "latent gradient" }, &[n], &[g]));
            }
        }

        let mut d_head = Vec::with_capacity(batch * w);
        for b in 0..batch {
            let dy = &d_recon[b * w..(b + 1) * w];
            let d = scale_output_backward(dy, &cache.scale[b]);
            let x = &cache.head_out[b * w..(b + 1) * w];
            d_head.extend(remove_outlier_backward(&d, x, cfg.outlier_z, &cache.outlier[b]));
        }
        let dx = self.head.backward(&Tensor::new(vec![batch, w], d_head)?)?;
        let mut dx = dx.reshape(&[batch, w, 1])?;
        for (layer, act) in self.decoder.iter_mut().rev() {
            dx = act.backward(&dx)?;
            dx = layer.backward(&dx)?;
        }

        let dz_base = match &mut self.base {
            BaseDecoder::Dense(l) => l.backward(&dx.reshape(&[batch, t * c])?)?,
            BaseDecoder::Frames(l) => {
                let df = fold_frames_backward(dx.data(), batch, t, c, win, stride);
                l.backward(&Tensor::new(vec![batch, frames, win * c], df)?)?
            }
            BaseDecoder::Deconv(l) => l.backward(&dx)?,
        };
        let dz: Vec<f64> = dz_base.data().iter().zip(d_z).map(|(a, b)| a + b).collect();
        let (mut g_mu, mut g_lv) = sample_latent_backward(&dz, &cache.log_var, &cache.eps);
        g_mu.iter_mut().zip(d_mu).for_each(|(a, b)| *a += b);
        g_lv.iter_mut().zip(d_log_var).for_each(|(a, b)| *a += b);
        let lat_shape = dz_base.shape().to_vec();
        let dh_mu = self.mu_head.backward(&Tensor::new(lat_shape.clone(), g_mu)?)?;
        let dh_lv = self.log_var_head.backward(&Tensor::new(lat_shape, g_lv)?)?;
        let dh: Vec<f64> = dh_mu.data().iter().zip(dh_lv.data()).map(|(a, b)| a + b).collect();
        let mut dx = if dynamic {
            Tensor::new(vec![batch, t, c], unfold_frames_backward(&dh, batch, t, c, win, stride))?
        } else {
            Tensor::new(vec![batch, t, c], dh)?
        };
        for (conv, act) in self.encoder.iter_mut().rev() {
            dx = act.backward(&dx)?;
            dx = conv.backward(&dx)?;
        }
        let dx = self.combine.backward(&dx)?;
        self.depthwise.backward(&dx)?;
        Ok(())
    }

    /// Builds the `(batch, window, neighbours)` input for several windows of
    /// the same recording layout.
    pub fn neighborhood_batch(
        &self,
        windows: &[Vec<&[f64]>],
        target: usize,
        nmap: &NeighborMap,
        mode: Mode,
        rng: &mut SeededRng,
    ) -> Result<Tensor> {
        let (w, k) = (self.config.window, self.config.neighbors);
        let mut data = Vec::with_capacity(windows.len() * w * k);
        for chans in windows {
            let s = select_neighborhood_input(chans, target, nmap, mode, self.config.neighbor_dropout, self.config.standardize_input, rng)?;
            if s.neighbors.len() != k || chans[target].len() != w {
                return Err(Error::shape("neighbourhood input", &[w, k], &[chans[target].len(), s.neighbors.len()]));
            }
            data.extend(s.data);
        }
        Tensor::new(vec![windows.len(), w, k], data)
    }

    /// Eval-mode reconstruction of the target channel of one window.
    pub fn reconstruct(&mut self, channels: &[&[f64]], target: usize, nmap: &NeighborMap, reference: &ReferenceStats) -> Result<Vec<f64>> {
        let mut rng = SeededRng::new(0);
        let input = self.neighborhood_batch(&[channels.to_vec()], target, nmap, Mode::Eval, &mut rng)?;
        Ok(self.forward(&input, &[*reference], Mode::Eval, &mut rng)?.recon.into_data())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            layers: self
                .blocks()
                .into_iter()
                .map(|(name, ps)| LayerBlock { name, tensors: ps.iter().map(|p| p.value.clone()).collect() })
                .collect(),
        }
    }

    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        let names: Vec<String> = self.blocks().into_iter().map(|(n, _)| n).collect();
        if ckpt.layers.len() != names.len() {
            return Err(Error::Checkpoint(format!("expected {} blocks, found {}", names.len(), ckpt.layers.len())));
        }
        let mut params = self.params_mut();
        let mut idx = 0;
        for (block, name) in ckpt.layers.iter().zip(&names) {
            if &block.name != name {
                return Err(Error::Checkpoint(format!("expected block {name:?}, found {:?}", block.name)));
            }
            for t in &block.tensors {
                let p = params
                    .get_mut(idx)
                    .ok_or_else(|| Error::Checkpoint("too many tensors".into()))?;
                if p.value.shape() != t.shape() {
                    return Err(Error::Checkpoint(format!("{name}: shape {:?} != {:?}", t.shape(), p.value.shape())));
                }
                p.value = t.clone();
                idx += 1;
            }
        }
        if idx != params.len() {
            return Err(Error::Checkpoint("too few tensors".into()));
        }
        Ok(())
    }

    /// Writes the checkpoint to `path` and the configuration sidecar next to it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_checkpoint().save(path)?;
        let sidecar = ModelSidecar {
            format: SIDECAR_FORMAT.into(),
            version: SIDECAR_VERSION,
            param_count: self.param_count(),
            config: self.config.clone(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let sidecar: ModelSidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        if sidecar.format != SIDECAR_FORMAT || sidecar.version != SIDECAR_VERSION {
            return Err(Error::Checkpoint(format!("unsupported sidecar {} v{}", sidecar.format, sidecar.version)));
        }
        let mut model = Model::new(sidecar.config, &mut SeededRng::new(0))?;
        model.load_checkpoint(&Checkpoint::load(path)?)?;
        Ok(model)
    }

    /// Configuration-derived count, for comparison with [`Model::param_breakdown`].
    pub fn expected_parameters(&self) -> Result<ParamBreakdown> {
        count_parameters(&self.config)
    }
}

pub const SIDECAR_FORMAT: &str = "rexfer-model";
pub const SIDECAR_VERSION: u32 = 1;

/// JSON file stored beside a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSidecar {
    pub format: String,
    pub version: u32,
    pub param_count: usize,
    pub config: ModelConfig,
}

/// `model.ckpt` -> `model.ckpt.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
