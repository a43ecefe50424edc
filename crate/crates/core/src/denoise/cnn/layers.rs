//! Strided periodic convolution kernels shared by the encoder, decoder
//! and output layers, plus batch normalization.
//!
//! A layer couples a "low" tensor (fewer or equal pixels) and a "high"
//! tensor through weights laid out `[low_ch][high_ch][k][k]`, with
//! `high(s·i + u - off, s·j + v - off)` feeding `low(i, j)`. `gather`
//! maps high → low (a strided convolution), `scatter` is its exact
//! adjoint low → high (a transposed convolution).

use super::tensor::Tensor;

pub(crate) const BN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    pub stride: usize,
    pub k: usize,
    pub off: usize,
}

impl Geometry {
    pub fn index_table(&self, high: usize, low: usize) -> Vec<Vec<usize>> {
        (0..self.k)
            .map(|u| {
                (0..low)
                    .map(|i| {
                        ((self.stride * i + u) as isize - self.off as isize).rem_euclid(high as isize)
                            as usize
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn gather(high: &Tensor, weight: &[f64], low_ch: usize, g: Geometry) -> Tensor {
    let (lh, lw) = (high.h / g.stride, high.w / g.stride);
    let rows = g.index_table(high.h, lh);
    let cols = g.index_table(high.w, lw);
    let kk = g.k * g.k;
    let mut out = Tensor::zeros(high.n, low_ch, lh, lw);
    for n in 0..high.n {
        for a in 0..low_ch {
            let dst = out.plane_mut(n, a);
            for b in 0..high.c {
                let src = high.plane(n, b);
                let wbase = (a * high.c + b) * kk;
                for u in 0..g.k {
                    for v in 0..g.k {
                        let wv = weight[wbase + u * g.k + v];
                        if wv == 0.0 {
                            continue;
                        }
                        let cidx = &cols[v];
                        for (i, &r) in rows[u].iter().enumerate() {
                            let src_row = &src[r * high.w..(r + 1) * high.w];
                            let dst_row = &mut dst[i * lw..(i + 1) * lw];
                            for (d, &c) in dst_row.iter_mut().zip(cidx) {
                                *d += wv * src_row[c];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn scatter(
    low: &Tensor,
    weight: &[f64],
    high_ch: usize,
    high_h: usize,
    high_w: usize,
    g: Geometry,
) -> Tensor {
    let rows = g.index_table(high_h, low.h);
    let cols = g.index_table(high_w, low.w);
    let kk = g.k * g.k;
    let mut out = Tensor::zeros(low.n, high_ch, high_h, high_w);
    for n in 0..low.n {
        for b in 0..high_ch {
            let dst = out.plane_mut(n, b);
            for a in 0..low.c {
                let src = low.plane(n, a);
                let wbase = (a * high_ch + b) * kk;
                for u in 0..g.k {
                    for v in 0..g.k {
                        let wv = weight[wbase + u * g.k + v];
                        if wv == 0.0 {
                            continue;
                        }
                        let cidx = &cols[v];
                        for (i, &r) in rows[u].iter().enumerate() {
                            let src_row = &src[i * low.w..(i + 1) * low.w];
                            let dst_row = &mut dst[r * high_w..(r + 1) * high_w];
                            for (&s, &c) in src_row.iter().zip(cidx) {
                                dst_row[c] += wv * s;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// `dW[a][b][u][v] = Σ low[n,a,i,j] · high[n,b,s·i+u-off,s·j+v-off]`.
pub(crate) fn weight_grad(low: &Tensor, high: &Tensor, g: Geometry) -> Vec<f64> {
    let rows = g.index_table(high.h, low.h);
    let cols = g.index_table(high.w, low.w);
    let kk = g.k * g.k;
    let mut dw = vec![0.0; low.c * high.c * kk];
    for n in 0..low.n {
        for a in 0..low.c {
            let lp = low.plane(n, a);
            for b in 0..high.c {
                let hp = high.plane(n, b);
                let wbase = (a * high.c + b) * kk;
                for u in 0..g.k {
                    for v in 0..g.k {
                        let cidx = &cols[v];
                        let mut acc = 0.0;
                        for (i, &r) in rows[u].iter().enumerate() {
                            let lrow = &lp[i * low.w..(i + 1) * low.w];
                            let hrow = &hp[r * high.w..(r + 1) * high.w];
                            for (&l, &c) in lrow.iter().zip(cidx) {
                                acc += l * hrow[c];
                            }
                        }
                        dw[wbase + u * g.k + v] += acc;
                    }
                }
            }
        }
    }
    dw
}

/// Per-channel affine batch normalization with running statistics.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

pub(crate) struct BnCache {
    pub xhat: Tensor,
    pub inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward_eval(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for n in 0..x.n {
            for c in 0..x.c {
                let inv = 1.0 / (self.running_var[c] + BN_EPS).sqrt();
                let (g, b, m) = (self.gamma[c], self.beta[c], self.running_mean[c]);
                for v in out.plane_mut(n, c) {
                    *v = g * (*v - m) * inv + b;
                }
            }
        }
        out
    }

    /// Normalizes with batch statistics. Returns the output, the backward
    /// cache and the batch `(mean, unbiased variance)` per channel.
    pub fn forward_train(&self, x: &Tensor) -> (Tensor, BnCache, Vec<(f64, f64)>) {
        let count = (x.n * x.h * x.w) as f64;
        let mut xhat = x.clone();
        let mut out = x.clone();
        let mut inv_std = vec![0.0; x.c];
        let mut stats = Vec::with_capacity(x.c);
        for c in 0..x.c {
            let mut sum = 0.0;
            for n in 0..x.n {
                sum += x.plane(n, c).iter().sum::<f64>();
            }
            let mean = sum / count;
            let mut sq = 0.0;
            for n in 0..x.n {
                sq += x.plane(n, c).iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
            }
            let var = sq / count;
            let inv = 1.0 / (var + BN_EPS).sqrt();
            inv_std[c] = inv;
            let unbiased = if count > 1.0 { sq / (count - 1.0) } else { var };
            stats.push((mean, unbiased));
            for n in 0..x.n {
                let xh = xhat.plane_mut(n, c);
                for v in xh.iter_mut() {
                    *v = (*v - mean) * inv;
                }
                let (g, b) = (self.gamma[c], self.beta[c]);
                for (o, &h) in out.plane_mut(n, c).iter_mut().zip(xhat.plane(n, c)) {
                    *o = g * h + b;
                }
            }
        }
        (out, BnCache { xhat, inv_std }, stats)
    }

    /// Returns `(dx, dgamma, dbeta)`.
    pub fn backward(&self, dy: &Tensor, cache: &BnCache) -> (Tensor, Vec<f64>, Vec<f64>) {
        let count = (dy.n * dy.h * dy.w) as f64;
        let mut dx = dy.clone();
        let mut dgamma = vec![0.0; dy.c];
        let mut dbeta = vec![0.0; dy.c];
        for c in 0..dy.c {
            let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
            for n in 0..dy.n {
                for (&d, &h) in dy.plane(n, c).iter().zip(cache.xhat.plane(n, c)) {
                    sum_dy += d;
                    sum_dy_xhat += d * h;
                }
            }
            dbeta[c] = sum_dy;
            dgamma[c] = sum_dy_xhat;
            let scale = self.gamma[c] * cache.inv_std[c] / count;
            for n in 0..dy.n {
                let xh = cache.xhat.plane(n, c);
                for (v, &h) in dx.plane_mut(n, c).iter_mut().zip(xh) {
                    *v = scale * (count * *v - sum_dy - h * sum_dy_xhat);
                }
            }
        }
        (dx, dgamma, dbeta)
    }

    pub fn update_running(&mut self, stats: &[(f64, f64)], momentum: f64) {
        for (c, &(mean, var)) in stats.iter().enumerate() {
            self.running_mean[c] = momentum * self.running_mean[c] + (1.0 - momentum) * mean;
            self.running_var[c] = momentum * self.running_var[c] + (1.0 - momentum) * var;
        }
    }
}

pub(crate) fn relu_in_place(t: &mut Tensor) {
    for v in t.data.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes gradient entries where the activation output was clamped.
pub(crate) fn relu_backward(dy: &mut Tensor, activated: &Tensor) {
    for (d, &a) in dy.data.iter_mut().zip(&activated.data) {
        if a <= 0.0 {
            *d = 0.0;
        }
    }
}
