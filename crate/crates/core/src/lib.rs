//! Single-image super-resolution with a joint intensity, gradient and
//! Laplacian data-fidelity term.
//!
//! The observation model is `y = D H x + n` (blur, decimation, noise). The
//! reconstruction alternates a conjugate-gradient solve of the quadratic
//! fidelity subproblem with a plug-in denoiser acting as the prior, in a
//! half-quadratic splitting loop.
//!
//! ```no_run
//! use sisr_core::prelude::*;
//!
//! let hr = load_image("cameraman.pgm")?;
//! let spec = DegradationSpec::gaussian(3, 2, 1.0, 7);
//! let hr = crop_for(&hr, &spec)?;
//! let lr = degrade(&hr, &spec)?;
//! let op = spec.operator_spec(hr.height(), hr.width())?;
//! let cfg = SolverConfig::for_profile(Profile::V2);
//! let (estimate, _trace) = reconstruct(&lr, &op, &cfg, &DenoiserHandle::tv())?;
//! println!("PSNR {:.2} dB", psnr(&hr, &estimate)?);
//! # Ok::<(), sisr_core::Error>(())
//! ```

pub mod degradation;
pub mod denoise;
mod error;
pub mod image;
pub mod interp;
pub mod io;
pub mod metrics;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
pub use image::Image;

pub mod prelude {
    pub use crate::degradation::{crop_for, degrade, make_kernel, DegradationSpec, KernelType};
    pub use crate::denoise::cnn::{cnn_train, load_model, save_model, Architecture, TrainConfig};
    pub use crate::denoise::{CnnModel, Denoiser, DenoiserHandle};
    pub use crate::image::Image;
    pub use crate::io::{load_image, save_image};
    pub use crate::metrics::{error_map, error_stats, psnr, ssim, ErrorStats};
    pub use crate::operators::{FidelityWeights, Kernel, OperatorSpec};
    pub use crate::solver::{reconstruct, Profile, SolveTrace, SolverConfig};
    pub use crate::{Error, Result};
}
