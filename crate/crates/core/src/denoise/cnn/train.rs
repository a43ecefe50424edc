use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model::{Architecture, BatchStats, CnnModel, Gradients, INPUT_SCALE};
use super::tensor::{pad_circular, Tensor};
use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub architecture: Architecture,
    /// Side of the square training patches; need not divide by `2^blocks`.
    pub patch_size: usize,
    /// Per-patch noise σ is drawn uniformly from `[low, high]`.
    pub noise_sigma_range: [f64; 2],
    pub batch_size: usize,
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// The desk-scale configuration.
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::default(),
            patch_size: 32,
            noise_sigma_range: [1.0, 10.0],
            batch_size: 16,
            epochs: 12,
            batches_per_epoch: 50,
            learning_rate: 1e-3,
            seed: 2024,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        let [lo, hi] = self.noise_sigma_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma_range [{lo}, {hi}] must satisfy 0 <= low <= high"
            )));
        }
        if self.patch_size == 0 || self.batch_size == 0 || self.epochs == 0 || self.batches_per_epoch == 0 {
            return Err(Error::InvalidConfig(
                "patch_size, batch_size, epochs and batches_per_epoch must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CnnModel,
    /// Mean batch loss of every epoch.
    pub loss_curve: Vec<f64>,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    fn new(lens: &[usize], lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: lens.iter().map(|&n| vec![0.0; n]).collect(),
            v: lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    fn update(&mut self, params: Vec<&mut Vec<f64>>, grads: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (k, p) in params.into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

impl CnnModel {
    /// Denoising loss `1/(2N) Σ ‖(Y - f(Y)) - X‖²` over a batch of noisy/clean
    /// pairs, in network units (intensities / 255), using batch statistics.
    pub fn loss(&self, noisy: &[Image], clean: &[Image]) -> Result<f64> {
        Ok(self.batch_pass(noisy, clean, false)?.0)
    }

    /// Loss and its gradient w.r.t. [`Self::parameters`].
    pub fn loss_and_gradient(&self, noisy: &[Image], clean: &[Image]) -> Result<(f64, Vec<f64>)> {
        let (loss, grads, _) = self.batch_pass(noisy, clean, true)?;
        Ok((loss, grads.into_iter().flatten().collect()))
    }

    /// All trainable parameters flattened: per encoder then decoder block
    /// the weights, batch-norm scale and shift; then the head weights and bias.
    pub fn parameters(&self) -> Vec<f64> {
        self.params().concat()
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_parameters() {
            return Err(Error::Model(format!(
                "expected {} parameters, got {}",
                self.num_parameters(),
                values.len()
            )));
        }
        let mut off = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.copy_from_slice(&values[off..off + n]);
            off += n;
        }
        Ok(())
    }

    fn batch_pass(
        &self,
        noisy: &[Image],
        clean: &[Image],
        with_grad: bool,
    ) -> Result<(f64, Gradients, BatchStats)> {
        if noisy.is_empty() || noisy.len() != clean.len() {
            return Err(Error::Model(format!(
                "batch needs matching non-empty noisy/clean lists ({} vs {})",
                noisy.len(),
                clean.len()
            )));
        }
        let (h, w) = noisy[0].dims();
        for (a, b) in noisy.iter().zip(clean) {
            a.ensure_dims(h, w)?;
            b.ensure_dims(h, w)?;
        }
        let d = self.arch.divisor();
        let (ph, pw) = (h.div_ceil(d) * d, w.div_ceil(d) * d);
        let n = noisy.len();
        let mut input = Tensor::zeros(n, 1, ph, pw);
        for (k, img) in noisy.iter().enumerate() {
            let padded = pad_circular(img, ph, pw);
            for (dst, v) in input.plane_mut(k, 0).iter_mut().zip(padded) {
                *dst = v / INPUT_SCALE;
            }
        }
        let (out, cache, stats) = self.forward_train(&input)?;
        let mut dout = Tensor::zeros(n, 1, ph, pw);
        let mut loss = 0.0;
        for k in 0..n {
            let pred = out.plane(k, 0);
            let grad = dout.plane_mut(k, 0);
            for i in 0..h {
                for j in 0..w {
                    let target = (noisy[k].get(i, j) - clean[k].get(i, j)) / INPUT_SCALE;
                    let r = pred[i * pw + j] - target;
                    loss += r * r;
                    grad[i * pw + j] = r / n as f64;
                }
            }
        }
        loss /= 2.0 * n as f64;
        if !loss.is_finite() {
            return Err(Error::Model("training loss diverged".into()));
        }
        let grads = if with_grad {
            self.backward(&dout, &cache)
        } else {
            Vec::new()
        };
        Ok((loss, grads, stats))
    }
}

/// Random patch from a random image under one of the 8 square symmetries.
fn sample_patch<R: Rng>(dataset: &[Image], size: usize, rng: &mut R) -> Image {
    let img = &dataset[rng.random_range(0..dataset.len())];
    let top = rng.random_range(0..=img.height() - size);
    let left = rng.random_range(0..=img.width() - size);
    let patch = img.crop_region(top, left, size, size);
    let t = rng.random_range(0..8u8);
    Image::from_fn(size, size, |i, j| {
        let (mut r, mut c) = if t & 1 == 1 { (j, i) } else { (i, j) };
        if t & 2 == 2 {
            r = size - 1 - r;
        }
        if t & 4 == 4 {
            c = size - 1 - c;
        }
        patch.get(r, c)
    })
}

/// Trains the residual denoiser on noisy/clean patch pairs cropped from
/// `dataset`. Fully determined by `cfg.seed`.
pub fn cnn_train(dataset: &[Image], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("training dataset is empty".into()));
    }
    if let Some(small) = dataset
        .iter()
        .find(|img| img.height() < cfg.patch_size || img.width() < cfg.patch_size)
    {
        return Err(Error::InvalidConfig(format!(
            "image {}x{} is smaller than patch size {}",
            small.height(),
            small.width(),
            cfg.patch_size
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut model = CnnModel::new(cfg.architecture.clone(), &mut rng)?;
    let mut adam = Adam::new(&model.param_lens(), cfg.learning_rate);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let [lo, hi] = cfg.noise_sigma_range;
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut total = 0.0;
        for _ in 0..cfg.batches_per_epoch {
            let mut clean = Vec::with_capacity(cfg.batch_size);
            let mut noisy = Vec::with_capacity(cfg.batch_size);
            for _ in 0..cfg.batch_size {
                let patch = sample_patch(dataset, cfg.patch_size, &mut rng);
                let sigma = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                noisy.push(patch.map(|v| v + sigma * unit.sample(&mut rng)));
                clean.push(patch);
            }
            let (loss, grads, stats) = model.batch_pass(&noisy, &clean, true)?;
            total += loss;
            adam.update(model.params_mut(), &grads);
            model.update_running_stats(&stats);
        }
        loss_curve.push(total / cfg.batches_per_epoch as f64);
    }
    Ok(TrainOutcome { model, loss_curve })
}
