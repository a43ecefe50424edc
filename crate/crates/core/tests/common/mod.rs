//! Shared fixtures and dense-matrix oracles built directly from index formulas.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use sisr_core::operators::Kernel;
use sisr_core::Image;

pub fn random_image(rng: &mut ChaCha20Rng, h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_kernel(rng: &mut ChaCha20Rng) -> Kernel {
    let size = [1, 3, 5][rng.random_range(0..3)];
    let raw: Vec<f64> = (0..size * size).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut taps: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    // absorb rounding so the taps sum to one exactly enough
    let drift: f64 = 1.0 - taps.iter().sum::<f64>();
    taps[0] += drift;
    Kernel::new(size, taps).unwrap()
}

pub fn to_vector(img: &Image) -> DVector<f64> {
    DVector::from_column_slice(img.data())
}

pub fn to_image(v: &DVector<f64>, h: usize, w: usize) -> Image {
    Image::new(h, w, v.iter().copied().collect()).unwrap()
}

/// Columns are `f(e_k)` for each row-major basis image `e_k`.
pub fn materialize(h: usize, w: usize, f: impl Fn(&Image) -> Image) -> DMatrix<f64> {
    let mut cols = Vec::with_capacity(h * w);
    for k in 0..h * w {
        let mut e = Image::zeros(h, w);
        e.set(k / w, k % w, 1.0);
        cols.push(to_vector(&f(&e)));
    }
    DMatrix::from_columns(&cols)
}

fn idx(i: usize, j: usize, w: usize) -> usize {
    i * w + j
}

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// Periodic blur: `(Hx)(i,j) = Σ k(u,v) x(i-u, j-v)`.
pub fn blur_matrix(h: usize, w: usize, kernel: &Kernel) -> DMatrix<f64> {
    let size = kernel.size();
    let r = (size / 2) as isize;
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w {
            for a in 0..size {
                for b in 0..size {
                    let (u, v) = (a as isize - r, b as isize - r);
                    let src = idx(wrap(i as isize - u, h), wrap(j as isize - v, w), w);
                    m[(idx(i, j, w), src)] += kernel.taps()[a * size + b];
                }
            }
        }
    }
    m
}

pub fn decimation_matrix(h: usize, w: usize, s: usize) -> DMatrix<f64> {
    let (lh, lw) = (h / s, w / s);
    let mut m = DMatrix::zeros(lh * lw, h * w);
    for i in 0..lh {
        for j in 0..lw {
            m[(idx(i, j, lw), idx(s * i, s * j, w))] = 1.0;
        }
    }
    m
}

/// Forward differences stacked as `[∂x; ∂y]`.
pub fn gradient_matrix(h: usize, w: usize) -> DMatrix<f64> {
    let n = h * w;
    let mut m = DMatrix::zeros(2 * n, n);
    for i in 0..h {
        for j in 0..w {
            let k = idx(i, j, w);
            m[(k, idx(i, (j + 1) % w, w))] += 1.0;
            m[(k, k)] -= 1.0;
            m[(n + k, idx((i + 1) % h, j, w))] += 1.0;
            m[(n + k, k)] -= 1.0;
        }
    }
    m
}

pub fn laplacian_matrix(h: usize, w: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w {
            let k = idx(i, j, w);
            m[(k, k)] -= 4.0;
            m[(k, idx((i + h - 1) % h, j, w))] += 1.0;
            m[(k, idx((i + 1) % h, j, w))] += 1.0;
            m[(k, idx(i, (j + w - 1) % w, w))] += 1.0;
            m[(k, idx(i, (j + 1) % w, w))] += 1.0;
        }
    }
    m
}

/// `Wᵀ(λ₁I + λ₂GᵀG + λ₃LᵀL)W + γI` assembled from the index-formula matrices.
pub fn dense_normal_matrix(
    h: usize,
    w: usize,
    s: usize,
    kernel: &Kernel,
    weights: [f64; 3],
    gamma: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let wmat = decimation_matrix(h, w, s) * blur_matrix(h, w, kernel);
    let (lh, lw) = (h / s, w / s);
    let g = gradient_matrix(lh, lw);
    let l = laplacian_matrix(lh, lw);
    let feature = DMatrix::identity(lh * lw, lh * lw) * weights[0]
        + g.transpose() * &g * weights[1]
        + l.transpose() * &l * weights[2];
    let a = wmat.transpose() * &feature * &wmat + DMatrix::identity(h * w, h * w) * gamma;
    (a, wmat, feature)
}
