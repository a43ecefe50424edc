//! Catmull-Rom bicubic upsampling (a = -0.5) with periodic boundaries.
//!
//! HR pixel `(s·i, s·j)` lands exactly on LR pixel `(i, j)`, matching the
//! phase of [`crate::operators::decimate`].

use crate::error::{Error, Result};
use crate::image::Image;

const A: f64 = -0.5;

fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

/// Per-output-index `(base, [w0..w3])` for taps `base-1 ..= base+2`.
fn taps(out_len: usize, factor: usize) -> Vec<(isize, [f64; 4])> {
    (0..out_len)
        .map(|o| {
            let base = (o / factor) as isize;
            let t = (o % factor) as f64 / factor as f64;
            let w = [
                cubic_weight(1.0 + t),
                cubic_weight(t),
                cubic_weight(1.0 - t),
                cubic_weight(2.0 - t),
            ];
            (base, w)
        })
        .collect()
}

pub fn upsample_bicubic(img: &Image, factor: usize) -> Result<Image> {
    if factor == 0 {
        return Err(Error::InvalidConfig("upsampling factor must be positive".into()));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (h, w) = img.dims();
    let (oh, ow) = (h * factor, w * factor);
    let col_taps = taps(ow, factor);
    let row_taps = taps(oh, factor);
    // horizontal pass: h x ow
    let mut horiz = vec![0.0; h * ow];
    for i in 0..h {
        for (j, (base, wt)) in col_taps.iter().enumerate() {
            horiz[i * ow + j] = (0..4)
                .map(|k| wt[k] * img.get_wrapped(i as isize, base - 1 + k as isize))
                .sum();
        }
    }
    let horiz = Image::from_raw(h, ow, horiz);
    Ok(Image::from_fn(oh, ow, |i, j| {
        let (base, wt) = row_taps[i];
        (0..4)
            .map(|k| wt[k] * horiz.get_wrapped(base - 1 + k as isize, j as isize))
            .sum()
    }))
}
