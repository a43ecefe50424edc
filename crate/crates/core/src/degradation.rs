//! Seeded simulation of the observation model `y = D H x + n`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::operators::{apply_w, Kernel, OperatorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelType {
    Gaussian,
    Average,
}

impl std::fmt::Display for KernelType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelType::Gaussian => "gaussian",
            KernelType::Average => "average",
        })
    }
}

impl std::str::FromStr for KernelType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" | "gb" => Ok(KernelType::Gaussian),
            "average" | "avg" | "ab" => Ok(KernelType::Average),
            other => Err(Error::InvalidConfig(format!("unknown kernel type {other:?}"))),
        }
    }
}

/// Blur, decimation and noise parameters of one degradation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradationSpec {
    pub kernel_type: KernelType,
    pub kernel_size: usize,
    /// Gaussian width in pixels; ignored by the average kernel.
    pub kernel_sigma: f64,
    pub factor: usize,
    /// Noise standard deviation in `[0, 255]` intensity units.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    /// 3x3 Gaussian (σ = 1), factor 2, noise σ = 1.
    fn default() -> Self {
        DegradationSpec {
            kernel_type: KernelType::Gaussian,
            kernel_size: 3,
            kernel_sigma: 1.0,
            factor: 2,
            noise_sigma: 1.0,
            seed: 0,
        }
    }
}

impl DegradationSpec {
    /// The two Gaussian configurations used in the experiments: 3x3 with σ = 1
    /// and 5x5 with σ = 2.
    pub fn gaussian(kernel_size: usize, factor: usize, noise_sigma: f64, seed: u64) -> Self {
        DegradationSpec {
            kernel_type: KernelType::Gaussian,
            kernel_size,
            kernel_sigma: if kernel_size >= 5 { 2.0 } else { 1.0 },
            factor,
            noise_sigma,
            seed,
        }
    }

    pub fn average(kernel_size: usize, factor: usize, noise_sigma: f64, seed: u64) -> Self {
        DegradationSpec {
            kernel_type: KernelType::Average,
            kernel_size,
            kernel_sigma: 1.0,
            factor,
            noise_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "kernel_size {} must be odd",
                self.kernel_size
            )));
        }
        if self.kernel_type == KernelType::Gaussian
            && !(self.kernel_sigma > 0.0 && self.kernel_sigma.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "kernel_sigma {} must be positive",
                self.kernel_sigma
            )));
        }
        if self.factor == 0 {
            return Err(Error::InvalidConfig("factor must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    /// Operator `W` for an HR image of the given (already divisible) size.
    pub fn operator_spec(&self, hr_height: usize, hr_width: usize) -> Result<OperatorSpec> {
        OperatorSpec::new(make_kernel(self)?, self.factor, hr_height, hr_width)
    }
}

pub fn make_kernel(spec: &DegradationSpec) -> Result<Kernel> {
    spec.validate()?;
    match spec.kernel_type {
        KernelType::Gaussian => Kernel::gaussian(spec.kernel_size, spec.kernel_sigma),
        KernelType::Average => Kernel::average(spec.kernel_size),
    }
}

/// Adds i.i.d. `N(0, sigma²)` noise from a generator seeded with `seed`.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise sigma {sigma}: {e}")))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok(img.map(|v| v + normal.sample(&mut rng)))
}

/// Blurs, decimates and adds noise. The input must already be divisible by
/// the factor; see [`crop_for`].
pub fn degrade(x: &Image, spec: &DegradationSpec) -> Result<Image> {
    let op = spec.operator_spec(x.height(), x.width())?;
    let clean = apply_w(x, &op)?;
    add_gaussian_noise(&clean, spec.noise_sigma, spec.seed)
}

/// Crops bottom/right rows and columns so the image divides by the factor.
pub fn crop_for(x: &Image, spec: &DegradationSpec) -> Result<Image> {
    x.crop_to_multiple(spec.factor)
}
