//! Run configuration: the TOML file read by `--config` and the manifest
//! written next to every command's outputs share one schema.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sisr_core::degradation::{DegradationSpec, KernelType};
use sisr_core::denoise::cnn::{load_model, TrainConfig};
use sisr_core::denoise::DenoiserHandle;
use sisr_core::solver::{Profile, SolverConfig};

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Degrade,
    Reconstruct,
    Eval,
    Ablate,
    Train,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Degrade => "degrade",
            Command::Reconstruct => "reconstruct",
            Command::Eval => "eval",
            Command::Ablate => "ablate",
            Command::Train => "train",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DenoiserKind {
    Identity,
    Gauss,
    #[default]
    Tv,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileArg {
    V1,
    V2,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::V1 => Profile::V1,
            ProfileArg::V2 => Profile::V2,
        }
    }
}

/// Degradation grid swept by `ablate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationGrid {
    pub kernels: Vec<KernelType>,
    pub noise_levels: Vec<f64>,
}

impl Default for AblationGrid {
    fn default() -> Self {
        AblationGrid {
            kernels: vec![KernelType::Gaussian, KernelType::Average],
            noise_levels: vec![1.0, 3.0, 5.0],
        }
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub command: Option<Command>,
    pub inputs: Vec<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Overrides the degradation and training seeds when set.
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub denoiser: Option<DenoiserKind>,
    pub model: Option<PathBuf>,
    pub degradation: DegradationSpec,
    pub solver: SolverConfig,
    pub train: TrainConfig,
    pub ablation: AblationGrid,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing manifest")
    }

    /// Folds the top-level seed and profile into the sections they control.
    pub fn resolve(&mut self) {
        if let Some(seed) = self.seed {
            self.degradation.seed = seed;
            self.train.seed = seed;
        }
        if let Some(profile) = self.profile {
            self.solver = self.solver.clone().with_profile(profile);
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn denoiser_handle(&self) -> Result<DenoiserHandle> {
        Ok(match self.denoiser.unwrap_or_default() {
            DenoiserKind::Identity => DenoiserHandle::Identity,
            DenoiserKind::Gauss => DenoiserHandle::GaussianSmooth,
            DenoiserKind::Tv => DenoiserHandle::tv(),
            DenoiserKind::Cnn => {
                let path = self
                    .model
                    .as_ref()
                    .context("the cnn denoiser needs a trained model (--model)")?;
                let model = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
                DenoiserHandle::cnn(model)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_through_toml() {
        let mut m = RunManifest {
            command: Some(Command::Ablate),
            inputs: vec![PathBuf::from("a.pgm"), PathBuf::from("b.pgm")],
            seed: Some(9),
            profile: Some(Profile::V1),
            denoiser: Some(DenoiserKind::Gauss),
            ..RunManifest::default()
        };
        m.resolve();
        let back: RunManifest = toml::from_str(&m.to_toml().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.degradation.seed, 9);
        assert_eq!(back.solver.lambda2, 0.0);
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let m: RunManifest = toml::from_str("[solver]\nouter_iters = 3\n[degradation]\nfactor = 3\n").unwrap();
        assert_eq!(m.solver.outer_iters, 3);
        assert_eq!(m.solver.cg_max_iters, SolverConfig::default().cg_max_iters);
        assert_eq!(m.degradation.factor, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunManifest>("[solver]\nouter_iter = 3\n").is_err());
    }

    #[test]
    fn cnn_without_model_is_an_error() {
        let m = RunManifest {
            denoiser: Some(DenoiserKind::Cnn),
            ..RunManifest::default()
        };
        assert!(m.denoiser_handle().is_err());
    }
}
