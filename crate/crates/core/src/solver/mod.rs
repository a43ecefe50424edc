//! Half-quadratic splitting with a joint intensity/gradient/Laplacian
//! fidelity term.
//!
//! Each outer iteration solves the quadratic x-subproblem
//! `(Wᵀ(λ₁ + λ₂∇ᵀ∇ + λ₃ΔᵀΔ)W + γI) x = Wᵀ(λ₁ + λ₂∇ᵀ∇ + λ₃ΔᵀΔ) y + γ z`
//! with conjugate gradients, then hands `x` to a denoiser for the
//! z-subproblem, then grows the coupling weight `γ`.

mod cg;

pub use cg::{conjugate_gradient, CgStats};

use serde::{Deserialize, Serialize};

use crate::denoise::Denoiser;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::interp::upsample_bicubic;
use crate::operators::{
    apply_normal_operator, apply_w, apply_wt, feature_normal, gradient, laplacian,
    normal_operator_diagonal, FidelityWeights, OperatorSpec,
};

/// Fidelity configuration compared in the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Intensity term only (`λ₁ = 1, λ₂ = λ₃ = 0`).
    V1,
    /// Intensity, gradient and Laplacian terms (`λ₁ = λ₂ = λ₃ = 1`).
    V2,
}

impl Profile {
    pub fn weights(self) -> FidelityWeights {
        match self {
            Profile::V1 => FidelityWeights::INTENSITY_ONLY,
            Profile::V2 => FidelityWeights::JOINT,
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::V1 => "v1",
            Profile::V2 => "v2",
        })
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "pro.v1" => Ok(Profile::V1),
            "v2" | "pro.v2" => Ok(Profile::V2),
            other => Err(Error::InvalidConfig(format!("unknown profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    None,
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub gamma0: f64,
    pub gamma_growth: f64,
    /// Prior weight; sets the denoiser level `sqrt(lambda_reg / (2γ))`.
    pub lambda_reg: f64,
    pub outer_iters: usize,
    pub cg_max_iters: usize,
    pub cg_tol: f64,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1.0,
            gamma0: 0.05,
            gamma_growth: 1.3,
            lambda_reg: 0.5,
            outer_iters: 12,
            cg_max_iters: 200,
            cg_tol: 1e-6,
            preconditioner: Preconditioner::None,
        }
    }
}

impl SolverConfig {
    pub fn for_profile(profile: Profile) -> Self {
        SolverConfig::default().with_profile(profile)
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        let w = profile.weights();
        self.lambda1 = w.intensity;
        self.lambda2 = w.gradient;
        self.lambda3 = w.laplacian;
        self
    }

    pub fn weights(&self) -> FidelityWeights {
        FidelityWeights {
            intensity: self.lambda1,
            gradient: self.lambda2,
            laplacian: self.lambda3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights().validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {v} must be positive")))
            }
        };
        positive("gamma0", self.gamma0)?;
        positive("lambda_reg", self.lambda_reg)?;
        positive("cg_tol", self.cg_tol)?;
        if !(self.gamma_growth >= 1.0 && self.gamma_growth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma_growth = {} must be >= 1",
                self.gamma_growth
            )));
        }
        if self.outer_iters == 0 || self.cg_max_iters == 0 {
            return Err(Error::InvalidConfig(
                "outer_iters and cg_max_iters must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Denoiser noise level for coupling weight `gamma`.
    pub fn effective_sigma(&self, gamma: f64) -> f64 {
        (self.lambda_reg / (2.0 * gamma)).sqrt()
    }
}

/// Diagnostics of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub gamma: f64,
    /// Joint fidelity `F(x, y)` of the new `x`.
    pub fidelity: f64,
    /// `‖y - W x‖²`.
    pub data_term: f64,
    /// `‖z - x‖²` after the denoising step.
    pub coupling: f64,
    pub cg: CgStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
}

impl SolveTrace {
    pub const CSV_HEADER: &'static str = "iteration,fidelity,data_term,coupling,cg_iters,cg_residual";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (k, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.10e},{:.10e},{:.10e},{},{:.6e}\n",
                k + 1,
                r.fidelity,
                r.data_term,
                r.coupling,
                r.cg.iterations,
                r.cg.final_residual
            ));
        }
        out
    }
}

/// `λ₁‖y - Wx‖² + λ₂‖∇y - ∇Wx‖² + λ₃‖Δy - ΔWx‖²`, with `∇`, `Δ` on the LR grid.
pub fn fidelity(x: &Image, y: &Image, spec: &OperatorSpec, weights: &FidelityWeights) -> Result<f64> {
    weights.validate()?;
    let (lh, lw) = spec.lr_dims();
    y.ensure_dims(lh, lw)?;
    let diff = y - &apply_w(x, spec)?;
    let mut total = weights.intensity * diff.norm_sq();
    if weights.gradient != 0.0 {
        total += weights.gradient * gradient(&diff).norm_sq();
    }
    if weights.laplacian != 0.0 {
        total += weights.laplacian * laplacian(&diff).norm_sq();
    }
    Ok(total)
}

/// Right-hand side `Wᵀ(λ₁ + λ₂∇ᵀ∇ + λ₃ΔᵀΔ) y + γ z`.
pub fn normal_rhs(
    y: &Image,
    z: &Image,
    spec: &OperatorSpec,
    weights: &FidelityWeights,
    gamma: f64,
) -> Result<Image> {
    let (h, w) = spec.hr_dims();
    z.ensure_dims(h, w)?;
    let mut b = apply_wt(&feature_normal(y, weights), spec)?;
    b.axpy(gamma, z);
    Ok(b)
}

/// x-subproblem: CG on the normal equations, warm-started at `x_init`.
pub fn solve_x(
    z: &Image,
    y: &Image,
    spec: &OperatorSpec,
    cfg: &SolverConfig,
    gamma: f64,
    x_init: &Image,
) -> Result<(Image, CgStats)> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} must be positive")));
    }
    cfg.validate()?;
    let weights = cfg.weights();
    let (h, w) = spec.hr_dims();
    x_init.ensure_dims(h, w)?;
    let b = normal_rhs(y, z, spec, &weights, gamma)?;
    let inv_diag = match cfg.preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => Some(normal_operator_diagonal(spec, &weights, gamma)?.map(|d| 1.0 / d)),
    };
    conjugate_gradient(
        |v: &Image| apply_normal_operator(v, spec, &weights, gamma),
        &b,
        x_init.clone(),
        cfg.cg_tol,
        cfg.cg_max_iters,
        inv_diag.as_ref(),
    )
}

/// z-subproblem: denoise `x` at level `sqrt(lambda_reg / (2γ))`.
pub fn solve_z(x: &Image, cfg: &SolverConfig, gamma: f64, denoiser: &dyn Denoiser) -> Result<Image> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} must be positive")));
    }
    let z = denoiser.denoise(x, cfg.effective_sigma(gamma))?;
    z.ensure_same_dims(x)?;
    Ok(z)
}

/// Runs the splitting scheme from a bicubic upsampling of `y` and returns
/// the final `x` with one trace record per outer iteration.
pub fn reconstruct(
    y: &Image,
    spec: &OperatorSpec,
    cfg: &SolverConfig,
    denoiser: &dyn Denoiser,
) -> Result<(Image, SolveTrace)> {
    cfg.validate()?;
    let (lh, lw) = spec.lr_dims();
    y.ensure_dims(lh, lw)?;
    let weights = cfg.weights();
    let mut x = upsample_bicubic(y, spec.factor())?;
    let mut z = x.clone();
    let mut gamma = cfg.gamma0;
    let mut trace = SolveTrace::default();
    for _ in 0..cfg.outer_iters {
        let (x_next, cg) = solve_x(&z, y, spec, cfg, gamma, &x)?;
        x = x_next;
        z = solve_z(&x, cfg, gamma, denoiser)?;
        let data_term = (y - &apply_w(&x, spec)?).norm_sq();
        trace.records.push(IterationRecord {
            gamma,
            fidelity: fidelity(&x, y, spec, &weights)?,
            data_term,
            coupling: (&z - &x).norm_sq(),
            cg,
        });
        gamma *= cfg.gamma_growth;
    }
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::DenoiserHandle;
    use crate::operators::Kernel;

    fn probe(h: usize, w: usize, seed: u64) -> Image {
        let mut s = seed;
        Image::from_fn(h, w, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 255.0
        })
    }

    #[test]
    fn zero_weights_return_z() {
        let spec = OperatorSpec::new(Kernel::gaussian(3, 1.0).unwrap(), 2, 8, 8).unwrap();
        let cfg = SolverConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            ..SolverConfig::default()
        };
        let z = probe(8, 8, 1);
        let y = probe(4, 4, 2);
        let (x, stats) = solve_x(&z, &y, &spec, &cfg, 0.4, &probe(8, 8, 3)).unwrap();
        assert!(stats.iterations <= 1);
        assert!((&x - &z).max_abs() < 1e-12);
    }

    #[test]
    fn identity_operator_averages() {
        let spec = OperatorSpec::new(Kernel::identity(), 1, 6, 6).unwrap();
        let cfg = SolverConfig::for_profile(Profile::V1);
        let (y, z) = (probe(6, 6, 4), probe(6, 6, 5));
        let (x, stats) = solve_x(&z, &y, &spec, &cfg, 1.0, &Image::zeros(6, 6)).unwrap();
        assert!(stats.converged);
        let expected = (&y + &z).scale(0.5);
        assert!((&x - &expected).norm() <= cfg.cg_tol * expected.norm() * 2.0);
    }

    #[test]
    fn fidelity_vanishes_on_consistent_data() {
        let spec = OperatorSpec::new(Kernel::average(3).unwrap(), 2, 8, 8).unwrap();
        let x = probe(8, 8, 6);
        let y = apply_w(&x, &spec).unwrap();
        assert!(fidelity(&x, &y, &spec, &FidelityWeights::JOINT).unwrap() < 1e-18);
        let y2 = probe(4, 4, 7);
        let v1 = fidelity(&x, &y2, &spec, &FidelityWeights::INTENSITY_ONLY).unwrap();
        let direct = (&y2 - &apply_w(&x, &spec).unwrap()).norm_sq();
        assert!((v1 - direct).abs() < 1e-9 * direct);
    }

    #[test]
    fn effective_sigma_scaling() {
        let cfg = SolverConfig::default();
        let ratio = cfg.effective_sigma(0.2) / cfg.effective_sigma(0.4);
        assert!((ratio - 2f64.sqrt()).abs() < 1e-14);
        assert!((cfg.effective_sigma(0.05) - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn identity_denoiser_returns_x() {
        let x = probe(8, 8, 8);
        let z = solve_z(&x, &SolverConfig::default(), 0.3, &DenoiserHandle::Identity).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn trace_has_one_record_per_iteration() {
        let spec = OperatorSpec::new(Kernel::gaussian(3, 1.0).unwrap(), 2, 16, 16).unwrap();
        let y = probe(8, 8, 9);
        let cfg = SolverConfig {
            outer_iters: 4,
            ..SolverConfig::default()
        };
        let (x, trace) = reconstruct(&y, &spec, &cfg, &DenoiserHandle::tv()).unwrap();
        assert_eq!(x.dims(), (16, 16));
        assert_eq!(trace.len(), 4);
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with(SolveTrace::CSV_HEADER));
    }

    #[test]
    fn solve_x_is_deterministic() {
        let spec = OperatorSpec::new(Kernel::gaussian(3, 1.0).unwrap(), 2, 16, 16).unwrap();
        let cfg = SolverConfig::default();
        let (z, y, x0) = (probe(16, 16, 1), probe(8, 8, 2), probe(16, 16, 3));
        let a = solve_x(&z, &y, &spec, &cfg, 0.1, &x0).unwrap();
        let b = solve_x(&z, &y, &spec, &cfg, 0.1, &x0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_gamma_and_config() {
        let spec = OperatorSpec::new(Kernel::identity(), 1, 4, 4).unwrap();
        let img = Image::zeros(4, 4);
        let cfg = SolverConfig::default();
        assert!(solve_x(&img, &img, &spec, &cfg, 0.0, &img).is_err());
        assert!(solve_z(&img, &cfg, -1.0, &DenoiserHandle::Identity).is_err());
        let bad = SolverConfig {
            gamma_growth: 0.5,
            ..cfg
        };
        assert!(reconstruct(&img, &spec, &bad, &DenoiserHandle::Identity).is_err());
    }

    #[test]
    fn profiles_parse_and_map() {
        assert_eq!("v1".parse::<Profile>().unwrap(), Profile::V1);
        assert_eq!(SolverConfig::for_profile(Profile::V1).weights(), FidelityWeights::INTENSITY_ONLY);
        assert_eq!(SolverConfig::for_profile(Profile::V2).weights(), FidelityWeights::JOINT);
    }
}
