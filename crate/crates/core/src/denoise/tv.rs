//! Chambolle's dual projection algorithm for the ROF model
//! `min_u ½‖u - f‖² + weight · TV(u)` with periodic differences.

use crate::image::Image;
use crate::operators::{divergence, gradient, GradientField};

pub const DEFAULT_ITERATIONS: usize = 30;
pub const DEFAULT_STEP: f64 = 0.248;

pub fn tv_denoise(f: &Image, weight: f64, iterations: usize, step: f64) -> Image {
    if weight <= 0.0 || iterations == 0 {
        return f.clone();
    }
    let (h, w) = f.dims();
    let mut p = GradientField {
        dx: Image::zeros(h, w),
        dy: Image::zeros(h, w),
    };
    let f_scaled = f.scale(1.0 / weight);
    for _ in 0..iterations {
        let g = gradient(&(&divergence(&p) - &f_scaled));
        let (px, py) = (p.dx.data_mut(), p.dy.data_mut());
        for k in 0..px.len() {
            let (gx, gy) = (g.dx.data()[k], g.dy.data()[k]);
            let denom = 1.0 + step * (gx * gx + gy * gy).sqrt();
            px[k] = (px[k] + step * gx) / denom;
            py[k] = (py[k] + step * gy) / denom;
        }
    }
    let mut u = f.clone();
    u.axpy(-weight, &divergence(&p));
    u
}
