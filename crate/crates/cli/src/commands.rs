use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use sisr_core::degradation::{crop_for, degrade, DegradationSpec, KernelType};
use sisr_core::denoise::cnn::{cnn_train, encode_model};
use sisr_core::denoise::DenoiserHandle;
use sisr_core::io::{encode_pgm, load_image, write_atomic};
use sisr_core::metrics::{error_map, error_stats, format_sig, psnr, ssim};
use sisr_core::solver::{reconstruct, Profile, SolverConfig};
use sisr_core::Image;

use crate::config::{Command, RunManifest, MANIFEST_NAME};

pub const EVAL_HEADER: &str = "psnr,ssim,max,mean,var";
pub const ABLATION_HEADER: &str = "image,kernel,noise_sigma,v1_psnr,v1_ssim,v2_psnr,v2_ssim";

/// Files produced by a command, written only once every one is computed.
struct Outputs {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn image(&mut self, name: &'static str, img: &Image) {
        self.files.push((name, encode_pgm(img)));
    }

    fn text(&mut self, name: &'static str, text: String) {
        self.files.push((name, text.into_bytes()));
    }

    fn write(self, manifest: &RunManifest) -> Result<()> {
        let dir = manifest.out_dir();
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        write_atomic(&dir.join(MANIFEST_NAME), manifest.to_toml()?.as_bytes())?;
        Ok(())
    }
}

pub fn run(manifest: &RunManifest) -> Result<()> {
    let outputs = match manifest.command.context("manifest names no command")? {
        Command::Degrade => degrade_cmd(manifest)?,
        Command::Reconstruct => reconstruct_cmd(manifest)?,
        Command::Eval => eval_cmd(manifest)?,
        Command::Ablate => ablate_cmd(manifest)?,
        Command::Train => train_cmd(manifest)?,
    };
    outputs.write(manifest)
}

fn load(path: &Path) -> Result<Image> {
    load_image(path).with_context(|| format!("loading {}", path.display()))
}

fn single_input(manifest: &RunManifest) -> Result<&Path> {
    match manifest.inputs.as_slice() {
        [one] => Ok(one),
        other => bail!("expected one input image, got {}", other.len()),
    }
}

fn degrade_cmd(manifest: &RunManifest) -> Result<Outputs> {
    let hr = load(single_input(manifest)?)?;
    let spec = &manifest.degradation;
    let hr = crop_for(&hr, spec)?;
    let lr = degrade(&hr, spec)?;
    println!(
        "degraded {}x{} -> {}x{}",
        hr.height(),
        hr.width(),
        lr.height(),
        lr.width()
    );
    let mut out = Outputs::new();
    out.image("lr.pgm", &lr);
    Ok(out)
}

fn reconstruct_cmd(manifest: &RunManifest) -> Result<Outputs> {
    let lr = load(single_input(manifest)?)?;
    let s = manifest.degradation.factor;
    let op = manifest.degradation.operator_spec(lr.height() * s, lr.width() * s)?;
    let denoiser = manifest.denoiser_handle()?;
    let (estimate, trace) = reconstruct(&lr, &op, &manifest.solver, &denoiser)?;
    let last = trace.records.last().context("empty trace")?;
    println!(
        "reconstructed {}x{} in {} iterations, final fidelity {}",
        estimate.height(),
        estimate.width(),
        trace.len(),
        format_sig(last.fidelity, 6)
    );
    let mut out = Outputs::new();
    out.image("estimate.pgm", &estimate);
    out.text("trace.csv", trace.to_csv());
    Ok(out)
}

fn eval_cmd(manifest: &RunManifest) -> Result<Outputs> {
    let [reference, estimate] = manifest.inputs.as_slice() else {
        bail!("eval takes a reference and an estimate, got {} images", manifest.inputs.len());
    };
    let reference = load(reference)?;
    let estimate = load(estimate)?;
    let stats = error_stats(&reference, &estimate)?;
    let row = [
        psnr(&reference, &estimate)?,
        ssim(&reference, &estimate)?,
        stats.max_abs,
        stats.mean_abs,
        stats.var_abs,
    ]
    .iter()
    .map(|&v| format_sig(v, 6))
    .collect::<Vec<_>>()
    .join(",");
    println!("{EVAL_HEADER}\n{row}");
    let mut out = Outputs::new();
    out.text("metrics.csv", format!("{EVAL_HEADER}\n{row}\n"));
    out.image("error_map.pgm", &error_map(&reference, &estimate)?);
    Ok(out)
}

struct Cell {
    image: usize,
    kernel: KernelType,
    noise: f64,
}

struct CellResult {
    psnr: [f64; 2],
    ssim: [f64; 2],
}

fn run_cell(
    hr: &Image,
    spec: &DegradationSpec,
    solver: &SolverConfig,
    denoiser: &DenoiserHandle,
) -> Result<CellResult> {
    let lr = degrade(hr, spec)?;
    let op = spec.operator_spec(hr.height(), hr.width())?;
    let mut result = CellResult {
        psnr: [0.0; 2],
        ssim: [0.0; 2],
    };
    for (k, profile) in [Profile::V1, Profile::V2].into_iter().enumerate() {
        let cfg = solver.clone().with_profile(profile);
        let (x, _) = reconstruct(&lr, &op, &cfg, denoiser)?;
        result.psnr[k] = psnr(hr, &x)?;
        result.ssim[k] = ssim(hr, &x)?;
    }
    Ok(result)
}

fn image_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn ablate_cmd(manifest: &RunManifest) -> Result<Outputs> {
    let grid = &manifest.ablation;
    ensure!(
        !grid.kernels.is_empty() && !grid.noise_levels.is_empty(),
        "ablation grid is empty"
    );
    let base = &manifest.degradation;
    base.validate()?;
    let mut named: Vec<(String, &PathBuf)> = manifest.inputs.iter().map(|p| (image_name(p), p)).collect();
    named.sort();
    let images = named
        .iter()
        .map(|(_, p)| crop_for(&load(p)?, base).map_err(Into::into))
        .collect::<Result<Vec<_>>>()?;
    let denoiser = manifest.denoiser_handle()?;

    let mut kernels = grid.kernels.clone();
    kernels.sort();
    kernels.dedup();
    let mut noise_levels = grid.noise_levels.clone();
    noise_levels.sort_by(f64::total_cmp);
    noise_levels.dedup();
    let cells: Vec<Cell> = (0..images.len())
        .flat_map(|image| {
            let noise_levels = &noise_levels;
            kernels
                .iter()
                .flat_map(move |&kernel| noise_levels.iter().map(move |&noise| Cell { image, kernel, noise }))
        })
        .collect();

    let results = cells
        .par_iter()
        .enumerate()
        .map(|(index, cell)| {
            let spec = DegradationSpec {
                kernel_type: cell.kernel,
                noise_sigma: cell.noise,
                seed: base.seed.wrapping_add(index as u64),
                ..base.clone()
            };
            run_cell(&images[cell.image], &spec, &manifest.solver, &denoiser)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = format!("{ABLATION_HEADER}\n");
    let (mut psnr_wins, mut ssim_wins) = (0, 0);
    for (cell, r) in cells.iter().zip(&results) {
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            named[cell.image].0,
            cell.kernel,
            format_sig(cell.noise, 6),
            format_sig(r.psnr[0], 6),
            format_sig(r.ssim[0], 6),
            format_sig(r.psnr[1], 6),
            format_sig(r.ssim[1], 6),
        ));
        psnr_wins += usize::from(r.psnr[1] >= r.psnr[0]);
        ssim_wins += usize::from(r.ssim[1] >= r.ssim[0]);
    }
    let n = cells.len();
    let summary = format!(
        "cells {n}\nv2_psnr_wins {psnr_wins}\nv1_psnr_wins {}\nv2_ssim_wins {ssim_wins}\nv1_ssim_wins {}\n",
        n - psnr_wins,
        n - ssim_wins
    );
    print!("{table}{summary}");
    let mut out = Outputs::new();
    out.text("ablation.csv", table);
    out.text("summary.txt", summary);
    Ok(out)
}

fn train_cmd(manifest: &RunManifest) -> Result<Outputs> {
    let dataset = manifest.inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let outcome = cnn_train(&dataset, &manifest.train)?;
    let mut curve = String::from("epoch,loss\n");
    for (epoch, loss) in outcome.loss_curve.iter().enumerate() {
        curve.push_str(&format!("{},{:.10e}\n", epoch + 1, loss));
    }
    if let (Some(first), Some(last)) = (outcome.loss_curve.first(), outcome.loss_curve.last()) {
        println!(
            "trained {} parameters, loss {} -> {}",
            outcome.model.num_parameters(),
            format_sig(*first, 6),
            format_sig(*last, 6)
        );
    }
    let mut out = Outputs::new();
    out.files.push(("model.bin", encode_model(&outcome.model)));
    out.text("loss_curve.csv", curve);
    Ok(out)
}
