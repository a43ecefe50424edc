//! Denoisers usable as the prior step of the splitting scheme.

pub mod cnn;
mod tv;

use std::sync::Arc;

pub use cnn::CnnModel;
pub use tv::{tv_denoise, DEFAULT_ITERATIONS as TV_ITERATIONS, DEFAULT_STEP as TV_STEP};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::{convolve, Kernel};

/// Gaussian smoothing width in pixels per unit of noise σ.
pub const GAUSS_WIDTH_PER_SIGMA: f64 = 0.25;

/// A denoiser taking an image and a noise level in intensity units.
///
/// Implementations must return `x` unchanged for `sigma == 0` and must
/// preserve the image dimensions.
pub trait Denoiser: Send + Sync {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image>;

    fn name(&self) -> &str;
}

/// The built-in denoisers.
#[derive(Debug, Clone)]
pub enum DenoiserHandle {
    Identity,
    /// Periodic Gaussian blur with width `GAUSS_WIDTH_PER_SIGMA · sigma`.
    GaussianSmooth,
    /// ROF with weight `sigma²`, solved by Chambolle's projection.
    TvChambolle { iterations: usize, step: f64 },
    /// Residual CNN; `None` until a model is loaded.
    Cnn(Option<Arc<CnnModel>>),
}

impl DenoiserHandle {
    pub fn tv() -> Self {
        DenoiserHandle::TvChambolle {
            iterations: TV_ITERATIONS,
            step: TV_STEP,
        }
    }

    pub fn cnn(model: CnnModel) -> Self {
        DenoiserHandle::Cnn(Some(Arc::new(model)))
    }
}

impl std::str::FromStr for DenoiserHandle {
    type Err = Error;

    /// Parses `identity`, `gauss`, `tv` or `cnn` (the latter without a model).
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "none" => Ok(DenoiserHandle::Identity),
            "gauss" | "gaussian" | "gaussian_smooth" => Ok(DenoiserHandle::GaussianSmooth),
            "tv" | "tv_chambolle" => Ok(DenoiserHandle::tv()),
            "cnn" => Ok(DenoiserHandle::Cnn(None)),
            other => Err(Error::InvalidConfig(format!("unknown denoiser {other:?}"))),
        }
    }
}

fn gaussian_smooth(x: &Image, sigma: f64) -> Result<Image> {
    let width = GAUSS_WIDTH_PER_SIGMA * sigma;
    let max_radius = (x.height().min(x.width()).saturating_sub(1)) / 2;
    let radius = ((3.0 * width).ceil() as usize).clamp(1, max_radius.max(1));
    let kernel = Kernel::gaussian(2 * radius + 1, width)?;
    Ok(convolve(x, &kernel))
}

impl Denoiser for DenoiserHandle {
    fn denoise(&self, x: &Image, sigma: f64) -> Result<Image> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise level {sigma} must be >= 0")));
        }
        if let DenoiserHandle::Cnn(None) = self {
            return Err(Error::Model("cnn denoiser has no model loaded".into()));
        }
        if sigma == 0.0 {
            return Ok(x.clone());
        }
        match self {
            DenoiserHandle::Identity => Ok(x.clone()),
            DenoiserHandle::GaussianSmooth => gaussian_smooth(x, sigma),
            DenoiserHandle::TvChambolle { iterations, step } => {
                Ok(tv_denoise(x, sigma * sigma, *iterations, *step))
            }
            DenoiserHandle::Cnn(Some(model)) => model.denoise(x),
            DenoiserHandle::Cnn(None) => unreachable!("checked above"),
        }
    }

    fn name(&self) -> &str {
        match self {
            DenoiserHandle::Identity => "identity",
            DenoiserHandle::GaussianSmooth => "gauss",
            DenoiserHandle::TvChambolle { .. } => "tv",
            DenoiserHandle::Cnn(_) => "cnn",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degradation::add_gaussian_noise;

    fn handles() -> Vec<DenoiserHandle> {
        let model = CnnModel::new(
            cnn::Architecture::default(),
            &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1),
        )
        .unwrap();
        vec![
            DenoiserHandle::Identity,
            DenoiserHandle::GaussianSmooth,
            DenoiserHandle::tv(),
            DenoiserHandle::cnn(model),
        ]
    }

    #[test]
    fn zero_sigma_passes_through_and_shapes_hold() {
        let x = Image::from_fn(20, 12, |i, j| ((i * 13 + j * 7) % 200) as f64);
        for h in handles() {
            assert_eq!(h.denoise(&x, 0.0).unwrap(), x, "{}", h.name());
            assert_eq!(h.denoise(&x, 4.0).unwrap().dims(), x.dims(), "{}", h.name());
        }
    }

    #[test]
    fn identity_ignores_sigma() {
        let x = Image::from_fn(6, 6, |i, j| (i + j) as f64);
        assert_eq!(DenoiserHandle::Identity.denoise(&x, 50.0).unwrap(), x);
    }

    #[test]
    fn unloaded_cnn_errors() {
        let x = Image::zeros(8, 8);
        assert!(DenoiserHandle::Cnn(None).denoise(&x, 1.0).is_err());
    }

    #[test]
    fn gaussian_smoothing_pulls_towards_constant() {
        let c = Image::filled(32, 32, 100.0);
        let x = add_gaussian_noise(&c, 8.0, 3).unwrap();
        let z = DenoiserHandle::GaussianSmooth.denoise(&x, 8.0).unwrap();
        assert!((&z - &c).norm() < (&x - &c).norm());
    }

    #[test]
    fn parses_names() {
        for (s, n) in [("identity", "identity"), ("gauss", "gauss"), ("tv", "tv"), ("cnn", "cnn")] {
            assert_eq!(s.parse::<DenoiserHandle>().unwrap().name(), n);
        }
        assert!("bm3d".parse::<DenoiserHandle>().is_err());
    }
}
