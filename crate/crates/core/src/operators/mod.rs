//! Linear operators of the observation model and their exact adjoints.
//!
//! All convolutions and finite differences use periodic boundaries so that
//! every adjoint is exact and the normal operator is exactly symmetric.

mod kernel;

pub use kernel::Kernel;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Images at least this large are processed with row-parallel loops.
const PAR_THRESHOLD: usize = 128 * 128;

/// Blur kernel, decimation factor and HR grid of `W = D H`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    kernel: Kernel,
    factor: usize,
    hr_height: usize,
    hr_width: usize,
}

impl OperatorSpec {
    pub fn new(kernel: Kernel, factor: usize, hr_height: usize, hr_width: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig("decimation factor must be positive".into()));
        }
        if hr_height == 0 || hr_width == 0 {
            return Err(Error::EmptyImage {
                height: hr_height,
                width: hr_width,
            });
        }
        if hr_height % factor != 0 || hr_width % factor != 0 {
            return Err(Error::Indivisible {
                height: hr_height,
                width: hr_width,
                factor,
            });
        }
        Ok(OperatorSpec {
            kernel,
            factor,
            hr_height,
            hr_width,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn hr_dims(&self) -> (usize, usize) {
        (self.hr_height, self.hr_width)
    }

    pub fn lr_dims(&self) -> (usize, usize) {
        (self.hr_height / self.factor, self.hr_width / self.factor)
    }
}

/// Forward differences of an image along columns (`dx`) and rows (`dy`).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub dx: Image,
    pub dy: Image,
}

impl GradientField {
    pub fn dot(&self, other: &GradientField) -> f64 {
        self.dx.dot(&other.dx) + self.dy.dot(&other.dy)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dx.norm_sq() + self.dy.norm_sq()
    }
}

/// Per-term weights `λ₁, λ₂, λ₃` of the joint fidelity (intensity, gradient, Laplacian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityWeights {
    pub intensity: f64,
    pub gradient: f64,
    pub laplacian: f64,
}

impl FidelityWeights {
    pub const INTENSITY_ONLY: FidelityWeights = FidelityWeights {
        intensity: 1.0,
        gradient: 0.0,
        laplacian: 0.0,
    };

    pub const JOINT: FidelityWeights = FidelityWeights {
        intensity: 1.0,
        gradient: 1.0,
        laplacian: 1.0,
    };

    pub const ZERO: FidelityWeights = FidelityWeights {
        intensity: 0.0,
        gradient: 0.0,
        laplacian: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda1", self.intensity),
            ("lambda2", self.gradient),
            ("lambda3", self.laplacian),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

impl Default for FidelityWeights {
    fn default() -> Self {
        FidelityWeights::JOINT
    }
}

fn fill_rows(h: usize, w: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    if h * w >= PAR_THRESHOLD {
        out.par_chunks_mut(w).enumerate().for_each(|(i, row)| f(i, row));
    } else {
        out.chunks_mut(w).enumerate().for_each(|(i, row)| f(i, row));
    }
    out
}

/// `out(i,j) = Σ k(u,v) · img(i + sign·u, j + sign·v)`, periodic.
fn shifted_sum(img: &Image, kernel: &Kernel, sign: isize) -> Image {
    let (h, w) = img.dims();
    let r = kernel.radius() as isize;
    let data = fill_rows(h, w, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for u in -r..=r {
                for v in -r..=r {
                    acc += kernel.at(u, v)
                        * img.get_wrapped(i as isize + sign * u, j as isize + sign * v);
                }
            }
            *out = acc;
        }
    });
    Image::from_raw(h, w, data)
}

/// Periodic 2-D convolution `H x`; output has the input's dimensions.
pub fn convolve(img: &Image, kernel: &Kernel) -> Image {
    shifted_sum(img, kernel, -1)
}

/// `Hᵀ y`: periodic convolution with the 180°-rotated kernel.
pub fn convolve_adjoint(img: &Image, kernel: &Kernel) -> Image {
    shifted_sum(img, kernel, 1)
}

/// Keeps pixels `(s·i, s·j)`.
pub fn decimate(img: &Image, factor: usize) -> Result<Image> {
    let (h, w) = img.dims();
    if factor == 0 || h % factor != 0 || w % factor != 0 {
        return Err(Error::Indivisible {
            height: h,
            width: w,
            factor,
        });
    }
    let (lh, lw) = (h / factor, w / factor);
    Ok(Image::from_fn(lh, lw, |i, j| img.get(factor * i, factor * j)))
}

/// `Dᵀ y`: zero-filled upsampling onto an `hr_height x hr_width` grid.
pub fn decimate_adjoint(img: &Image, factor: usize, hr_height: usize, hr_width: usize) -> Result<Image> {
    if factor == 0 || img.height() * factor != hr_height || img.width() * factor != hr_width {
        return Err(Error::DimensionMismatch {
            expected: (hr_height, hr_width),
            actual: (img.height() * factor, img.width() * factor),
        });
    }
    let mut out = Image::zeros(hr_height, hr_width);
    for i in 0..img.height() {
        for j in 0..img.width() {
            out.set(factor * i, factor * j, img.get(i, j));
        }
    }
    Ok(out)
}

/// `W x = D H x`.
pub fn apply_w(x: &Image, spec: &OperatorSpec) -> Result<Image> {
    x.ensure_dims(spec.hr_height, spec.hr_width)?;
    decimate(&convolve(x, &spec.kernel), spec.factor)
}

/// `Wᵀ y = Hᵀ Dᵀ y`.
pub fn apply_wt(y: &Image, spec: &OperatorSpec) -> Result<Image> {
    let (lh, lw) = spec.lr_dims();
    y.ensure_dims(lh, lw)?;
    let up = decimate_adjoint(y, spec.factor, spec.hr_height, spec.hr_width)?;
    Ok(convolve_adjoint(&up, &spec.kernel))
}

/// Periodic forward differences.
pub fn gradient(img: &Image) -> GradientField {
    let (h, w) = img.dims();
    let dx = Image::from_fn(h, w, |i, j| img.get(i, (j + 1) % w) - img.get(i, j));
    let dy = Image::from_fn(h, w, |i, j| img.get((i + 1) % h, j) - img.get(i, j));
    GradientField { dx, dy }
}

/// Periodic backward-difference divergence, the negative adjoint of [`gradient`].
pub fn divergence(g: &GradientField) -> Image {
    let (h, w) = g.dx.dims();
    assert_eq!(g.dy.dims(), (h, w), "gradient components differ in size");
    Image::from_fn(h, w, |i, j| {
        g.dx.get(i, j) - g.dx.get(i, (j + w - 1) % w) + g.dy.get(i, j) - g.dy.get((i + h - 1) % h, j)
    })
}

/// `∇ᵀ ∇ u`.
pub fn gradient_normal(img: &Image) -> Image {
    divergence(&gradient(img)).scale(-1.0)
}

/// Periodic 5-point Laplacian; self-adjoint.
pub fn laplacian(img: &Image) -> Image {
    let (h, w) = img.dims();
    Image::from_fn(h, w, |i, j| {
        let (i, j) = (i as isize, j as isize);
        img.get_wrapped(i - 1, j) + img.get_wrapped(i + 1, j) + img.get_wrapped(i, j - 1)
            + img.get_wrapped(i, j + 1)
            - 4.0 * img.get_wrapped(i, j)
    })
}

/// `λ₁ u + λ₂ ∇ᵀ∇ u + λ₃ ΔᵀΔ u` on the LR grid.
pub fn feature_normal(u: &Image, weights: &FidelityWeights) -> Image {
    let mut out = u.scale(weights.intensity);
    if weights.gradient != 0.0 {
        out.axpy(weights.gradient, &gradient_normal(u));
    }
    if weights.laplacian != 0.0 {
        out.axpy(weights.laplacian, &laplacian(&laplacian(u)));
    }
    out
}

/// `A x = Wᵀ(λ₁ + λ₂ ∇ᵀ∇ + λ₃ ΔᵀΔ) W x + γ x`, with `∇`, `Δ` on the LR grid.
pub fn apply_normal_operator(
    x: &Image,
    spec: &OperatorSpec,
    weights: &FidelityWeights,
    gamma: f64,
) -> Result<Image> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} must be positive")));
    }
    weights.validate()?;
    let wx = apply_w(x, spec)?;
    let mut out = apply_wt(&feature_normal(&wx, weights), spec)?;
    out.axpy(gamma, x);
    Ok(out)
}

/// Diagonal of the normal operator.
///
/// Periodic boundaries make the diagonal constant on each decimation phase
/// `(i mod s, j mod s)`, so `s²` probes recover it exactly.
pub fn normal_operator_diagonal(
    spec: &OperatorSpec,
    weights: &FidelityWeights,
    gamma: f64,
) -> Result<Image> {
    let s = spec.factor;
    let (h, w) = spec.hr_dims();
    let mut phase = vec![0.0; s * s];
    for a in 0..s {
        for b in 0..s {
            let mut e = Image::zeros(h, w);
            e.set(a, b, 1.0);
            phase[a * s + b] = apply_normal_operator(&e, spec, weights, gamma)?.get(a, b);
        }
    }
    Ok(Image::from_fn(h, w, |i, j| phase[(i % s) * s + (j % s)]))
}
