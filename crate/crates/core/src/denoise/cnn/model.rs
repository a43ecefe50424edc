use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{
    gather, relu_backward, relu_in_place, scatter, weight_grad, BatchNorm, BnCache, Geometry,
};
use super::tensor::{crop_plane, pad_circular, Tensor};
use crate::error::{Error, Result};
use crate::image::Image;

/// Pixel intensities are divided by this before entering the network.
pub(crate) const INPUT_SCALE: f64 = 255.0;

/// Per block, the batch `(mean, unbiased variance)` of every channel.
pub(crate) type BatchStats = Vec<Vec<(f64, f64)>>;

/// Shape of the symmetric encoder–decoder network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    /// Output channels of each encoder block; its length is the block count.
    pub channels: Vec<usize>,
    pub kernel_size: usize,
    /// Running-statistics decay: `running = m·running + (1 - m)·batch`.
    pub bn_momentum: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture {
            channels: vec![16, 32, 32, 32, 32],
            kernel_size: 3,
            bn_momentum: 0.9,
        }
    }
}

impl Architecture {
    pub fn num_blocks(&self) -> usize {
        self.channels.len()
    }

    /// Spatial sizes fed to the network must be multiples of this.
    pub fn divisor(&self) -> usize {
        1 << self.num_blocks()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() || self.channels.len() > 16 {
            return Err(Error::Model(format!(
                "block count {} must be in 1..=16",
                self.channels.len()
            )));
        }
        if self.channels.contains(&0) {
            return Err(Error::Model("channel counts must be positive".into()));
        }
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::Model(format!(
                "kernel size {} must be odd",
                self.kernel_size
            )));
        }
        if !(0.0..1.0).contains(&self.bn_momentum) {
            return Err(Error::Model(format!(
                "batch-norm momentum {} must be in [0, 1)",
                self.bn_momentum
            )));
        }
        Ok(())
    }

    fn strided(&self) -> Geometry {
        Geometry {
            stride: 2,
            k: self.kernel_size,
            off: self.kernel_size / 2,
        }
    }

    fn same(&self) -> Geometry {
        Geometry {
            stride: 1,
            k: self.kernel_size,
            off: self.kernel_size / 2,
        }
    }

    /// Output channels of decoder block `j`; each matches the encoder
    /// output it is summed with, and the last returns to `channels[0]`.
    fn decoder_channels(&self, j: usize) -> usize {
        let n = self.num_blocks();
        if j + 1 < n {
            self.channels[n - 2 - j]
        } else {
            self.channels[0]
        }
    }
}

/// Convolution (encoder) or transposed convolution (decoder) followed by
/// batch normalization and ReLU. Weights are `[low_ch][high_ch][k][k]`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Block {
    pub low_ch: usize,
    pub high_ch: usize,
    pub weight: Vec<f64>,
    pub bn: BatchNorm,
}

/// Final stride-1 linear layer to one channel, over the last decoder
/// output stacked with the network input.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Head {
    pub in_ch: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Symmetric residual encoder–decoder denoiser.
///
/// Encoder block `i` halves the spatial size with a stride-2 convolution;
/// decoder block `j` doubles it with a stride-2 transposed convolution and
/// adds the output of encoder block `n - 2 - j`, which has the same shape.
/// The network predicts the noise in its input.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub(crate) arch: Architecture,
    pub(crate) encoders: Vec<Block>,
    pub(crate) decoders: Vec<Block>,
    pub(crate) head: Head,
}

/// Activations kept for the backward pass.
pub(crate) struct Cache {
    input: Tensor,
    enc_out: Vec<Tensor>,
    enc_bn: Vec<BnCache>,
    dec_in: Vec<Tensor>,
    dec_act: Vec<Tensor>,
    dec_bn: Vec<BnCache>,
    head_in: Tensor,
}

/// Gradients in [`CnnModel::params_mut`] order.
pub(crate) type Gradients = Vec<Vec<f64>>;

impl CnnModel {
    /// He-initialized model. The head starts near zero so the untrained
    /// denoiser is close to the identity.
    pub fn new<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let k2 = arch.kernel_size * arch.kernel_size;
        let init = |low: usize, high: usize, fan_in: f64, rng: &mut R| -> Vec<f64> {
            let normal = Normal::new(0.0, (2.0 / fan_in).sqrt()).expect("positive std");
            (0..low * high * k2).map(|_| normal.sample(rng)).collect()
        };
        let mut encoders = Vec::with_capacity(arch.num_blocks());
        let mut prev = 1;
        for &c in &arch.channels {
            let weight = init(c, prev, (prev * k2) as f64, rng);
            encoders.push(Block {
                low_ch: c,
                high_ch: prev,
                weight,
                bn: BatchNorm::new(c),
            });
            prev = c;
        }
        let mut decoders = Vec::with_capacity(arch.num_blocks());
        for j in 0..arch.num_blocks() {
            let out = arch.decoder_channels(j);
            // each output pixel of a stride-2 transposed conv sees ~k²/4 taps per input channel
            let fan_in = (prev * k2) as f64 / 4.0;
            let weight = init(prev, out, fan_in.max(1.0), rng);
            decoders.push(Block {
                low_ch: prev,
                high_ch: out,
                weight,
                bn: BatchNorm::new(out),
            });
            prev = out;
        }
        let in_ch = prev + 1;
        let normal = Normal::new(0.0, 1e-3).expect("positive std");
        let head = Head {
            in_ch,
            weight: (0..in_ch * k2).map(|_| normal.sample(rng)).collect(),
            bias: vec![0.0],
        };
        Ok(CnnModel {
            arch,
            encoders,
            decoders,
            head,
        })
    }

    /// A model whose every weight, bias and batch-norm affine parameter is zero.
    pub fn zeroed(arch: Architecture) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut m = CnnModel::new(arch, &mut rng)?;
        for p in m.params_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        Ok(m)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn num_parameters(&self) -> usize {
        self.param_lens().iter().sum()
    }

    pub(crate) fn param_lens(&self) -> Vec<usize> {
        let mut lens = Vec::new();
        for b in self.encoders.iter().chain(&self.decoders) {
            lens.extend([b.weight.len(), b.bn.channels(), b.bn.channels()]);
        }
        lens.extend([self.head.weight.len(), 1]);
        lens
    }

    pub(crate) fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for b in self.encoders.iter().chain(&self.decoders) {
            out.extend([&b.weight[..], &b.bn.gamma[..], &b.bn.beta[..]]);
        }
        out.extend([&self.head.weight[..], &self.head.bias[..]]);
        out
    }

    /// Trainable parameters: per block weight, gamma, beta; then head weight, bias.
    pub(crate) fn params_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for b in self.encoders.iter_mut().chain(self.decoders.iter_mut()) {
            out.push(&mut b.weight);
            out.push(&mut b.bn.gamma);
            out.push(&mut b.bn.beta);
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let d = self.arch.divisor();
        if x.c != 1 || x.h % d != 0 || x.w % d != 0 || x.h == 0 || x.w == 0 {
            return Err(Error::Model(format!(
                "input {}x{}x{} incompatible with a {}-block model (needs 1 channel, sides divisible by {d})",
                x.c,
                x.h,
                x.w,
                self.arch.num_blocks()
            )));
        }
        Ok(())
    }

    fn head_forward(&self, head_in: &Tensor) -> Tensor {
        let mut out = gather(head_in, &self.head.weight, 1, self.arch.same());
        let b = self.head.bias[0];
        out.data.iter_mut().for_each(|v| *v += b);
        out
    }

    /// Inference pass with frozen running statistics. Input is in network
    /// units (intensities / 255); output is the predicted noise.
    pub(crate) fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let n = self.arch.num_blocks();
        let mut enc_out: Vec<Tensor> = Vec::with_capacity(n);
        for (i, blk) in self.encoders.iter().enumerate() {
            let src = if i == 0 { x } else { &enc_out[i - 1] };
            let z = gather(src, &blk.weight, blk.low_ch, self.arch.strided());
            let mut a = blk.bn.forward_eval(&z);
            relu_in_place(&mut a);
            enc_out.push(a);
        }
        let mut d = enc_out[n - 1].clone();
        for (j, blk) in self.decoders.iter().enumerate() {
            let t = scatter(&d, &blk.weight, blk.high_ch, d.h * 2, d.w * 2, self.arch.strided());
            let mut a = blk.bn.forward_eval(&t);
            relu_in_place(&mut a);
            if j + 1 < n {
                a.add_assign(&enc_out[n - 2 - j]);
            }
            d = a;
        }
        Ok(self.head_forward(&d.concat_channels(x)))
    }

    /// Training pass with batch statistics. Returns the output, the cache for
    /// [`Self::backward`] and per-layer batch statistics (encoders, then decoders).
    pub(crate) fn forward_train(&self, x: &Tensor) -> Result<(Tensor, Cache, BatchStats)> {
        self.check_input(x)?;
        let n = self.arch.num_blocks();
        let mut stats = Vec::with_capacity(2 * n);
        let mut enc_out: Vec<Tensor> = Vec::with_capacity(n);
        let mut enc_bn = Vec::with_capacity(n);
        for (i, blk) in self.encoders.iter().enumerate() {
            let src = if i == 0 { x } else { &enc_out[i - 1] };
            let z = gather(src, &blk.weight, blk.low_ch, self.arch.strided());
            let (mut a, cache, s) = blk.bn.forward_train(&z);
            relu_in_place(&mut a);
            enc_out.push(a);
            enc_bn.push(cache);
            stats.push(s);
        }
        let mut dec_in = Vec::with_capacity(n);
        let mut dec_act = Vec::with_capacity(n);
        let mut dec_bn = Vec::with_capacity(n);
        let mut d = enc_out[n - 1].clone();
        for (j, blk) in self.decoders.iter().enumerate() {
            let t = scatter(&d, &blk.weight, blk.high_ch, d.h * 2, d.w * 2, self.arch.strided());
            let (mut a, cache, s) = blk.bn.forward_train(&t);
            relu_in_place(&mut a);
            dec_act.push(a.clone());
            dec_bn.push(cache);
            stats.push(s);
            if j + 1 < n {
                a.add_assign(&enc_out[n - 2 - j]);
            }
            dec_in.push(std::mem::replace(&mut d, a));
        }
        let head_in = d.concat_channels(x);
        let out = self.head_forward(&head_in);
        let cache = Cache {
            input: x.clone(),
            enc_out,
            enc_bn,
            dec_in,
            dec_act,
            dec_bn,
            head_in,
        };
        Ok((out, cache, stats))
    }

    /// Parameter gradients given the loss gradient w.r.t. the output.
    pub(crate) fn backward(&self, dout: &Tensor, cache: &Cache) -> Gradients {
        let n = self.arch.num_blocks();
        let strided = self.arch.strided();
        let mut enc_grads: Vec<[Vec<f64>; 3]> = vec![Default::default(); n];
        let mut dec_grads: Vec<[Vec<f64>; 3]> = vec![Default::default(); n];

        // head
        let head_dw = weight_grad(dout, &cache.head_in, self.arch.same());
        let head_db = vec![dout.data.iter().sum::<f64>()];
        let d_head_in = scatter(
            dout,
            &self.head.weight,
            self.head.in_ch,
            dout.h,
            dout.w,
            self.arch.same(),
        );
        let mut dd = d_head_in.leading_channels(self.head.in_ch - 1);

        // decoders, last to first; skip gradients collect per encoder output
        let mut d_enc: Vec<Option<Tensor>> = vec![None; n];
        for j in (0..n).rev() {
            let blk = &self.decoders[j];
            if j + 1 < n {
                accumulate(&mut d_enc[n - 2 - j], &dd);
            }
            let mut da = dd;
            relu_backward(&mut da, &cache.dec_act[j]);
            let (dt, dgamma, dbeta) = blk.bn.backward(&da, &cache.dec_bn[j]);
            let input = &cache.dec_in[j];
            let dw = weight_grad(input, &dt, strided);
            dd = gather(&dt, &blk.weight, blk.low_ch, strided);
            dec_grads[j] = [dw, dgamma, dbeta];
        }
        accumulate(&mut d_enc[n - 1], &dd);

        for i in (0..n).rev() {
            let blk = &self.encoders[i];
            let mut da = d_enc[i].take().expect("every encoder output receives a gradient");
            relu_backward(&mut da, &cache.enc_out[i]);
            let (dz, dgamma, dbeta) = blk.bn.backward(&da, &cache.enc_bn[i]);
            let src = if i == 0 { &cache.input } else { &cache.enc_out[i - 1] };
            let dw = weight_grad(&dz, src, strided);
            if i > 0 {
                let dsrc = scatter(&dz, &blk.weight, blk.high_ch, src.h, src.w, strided);
                accumulate(&mut d_enc[i - 1], &dsrc);
            }
            enc_grads[i] = [dw, dgamma, dbeta];
        }

        let mut grads = Vec::with_capacity(6 * n + 2);
        for g in enc_grads.into_iter().chain(dec_grads) {
            grads.extend(g);
        }
        grads.push(head_dw);
        grads.push(head_db);
        grads
    }

    pub(crate) fn update_running_stats(&mut self, stats: &[Vec<(f64, f64)>]) {
        let m = self.arch.bn_momentum;
        for (blk, s) in self.encoders.iter_mut().chain(self.decoders.iter_mut()).zip(stats) {
            blk.bn.update_running(s, m);
        }
    }

    /// Predicted noise map of `x`, in intensity units.
    ///
    /// The input is circularly padded up to the next multiple of
    /// `2^num_blocks` and the output cropped back.
    pub fn residual(&self, x: &Image) -> Result<Image> {
        let d = self.arch.divisor();
        let (h, w) = x.dims();
        let (ph, pw) = (h.div_ceil(d) * d, w.div_ceil(d) * d);
        let padded: Vec<f64> = pad_circular(x, ph, pw).iter().map(|v| v / INPUT_SCALE).collect();
        let t = Tensor::from_planes(ph, pw, &[&padded]);
        let out = self.forward_eval(&t)?;
        let cropped = crop_plane(out.plane(0, 0), pw, h, w);
        let data: Vec<f64> = cropped.into_iter().map(|v| v * INPUT_SCALE).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("network produced non-finite output".into()));
        }
        Image::new(h, w, data)
    }

    /// Residual denoising: `x - residual(x)`.
    pub fn denoise(&self, x: &Image) -> Result<Image> {
        Ok(x - &self.residual(x)?)
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: &Tensor) {
    match slot {
        Some(t) => t.add_assign(g),
        None => *slot = Some(g.clone()),
    }
}
