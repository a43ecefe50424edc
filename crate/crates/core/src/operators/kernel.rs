use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-12;

/// A normalized, odd-sized square blur stencil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    size: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidKernel(format!("size {size} must be odd and positive")));
        }
        if taps.len() != size * size {
            return Err(Error::InvalidKernel(format!(
                "{} taps for a {size}x{size} kernel",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidKernel("non-finite tap".into()));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidKernel(format!("taps sum to {sum}, expected 1")));
        }
        Ok(Kernel { size, taps })
    }

    pub fn identity() -> Self {
        Kernel {
            size: 1,
            taps: vec![1.0],
        }
    }

    pub fn average(size: usize) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidKernel(format!("size {size} must be odd and positive")));
        }
        let n = size * size;
        Kernel::new(size, vec![1.0 / n as f64; n])
    }

    /// Taps `exp(-(u² + v²) / (2σ²))` over offsets `-r..=r`, normalized to sum 1.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidKernel(format!("size {size} must be odd and positive")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidKernel(format!("sigma {sigma} must be positive")));
        }
        let r = (size / 2) as isize;
        let mut taps = Vec::with_capacity(size * size);
        for u in -r..=r {
            for v in -r..=r {
                taps.push((-((u * u + v * v) as f64) / (2.0 * sigma * sigma)).exp());
            }
        }
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        Kernel::new(size, taps)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at offset `(du, dv)` from the center.
    #[inline]
    pub fn at(&self, du: isize, dv: isize) -> f64 {
        let r = self.radius() as isize;
        self.taps[((du + r) as usize) * self.size + (dv + r) as usize]
    }

    /// The kernel rotated by 180 degrees.
    pub fn flipped(&self) -> Kernel {
        Kernel {
            size: self.size,
            taps: self.taps.iter().rev().copied().collect(),
        }
    }
}
