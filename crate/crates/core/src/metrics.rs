//! Image quality metrics: PSNR, SSIM and absolute-error statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

pub const PEAK: f64 = 255.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

/// Error maps map absolute error `[0, ERROR_MAP_RANGE]` linearly onto `[0, 255]`.
pub const ERROR_MAP_RANGE: f64 = 50.0;

/// Peak signal-to-noise ratio in dB for a peak of 255.
///
/// Identical images have zero MSE; the result is then `f64::INFINITY`,
/// which no finite pair can produce.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PEAK * PEAK / mse).log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable "valid" filtering: output is `(h - 10) x (w - 10)`.
fn filter_valid(data: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * ow];
    for i in 0..h {
        let src = &data[i * w..(i + 1) * w];
        for j in 0..ow {
            rows[i * ow + j] = win.iter().zip(&src[j..j + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = win
                .iter()
                .enumerate()
                .map(|(k, wk)| wk * rows[(i + k) * ow + j])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over an 11x11 Gaussian window (σ = 1.5),
/// with `C1 = (0.01·255)²` and `C2 = (0.03·255)²`, evaluated at every
/// position where the window fits inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let win = gaussian_window();
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> {
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
    };
    let mu_a = filter_valid(a.data(), h, w, &win);
    let mu_b = filter_valid(b.data(), h, w, &win);
    let e_aa = filter_valid(&prod(|x, _| x * x), h, w, &win);
    let e_bb = filter_valid(&prod(|_, y| y * y), h, w, &win);
    let e_ab = filter_valid(&prod(|x, y| x * y), h, w, &win);

    let n = mu_a.len();
    let mut total = 0.0;
    for k in 0..n {
        let (ma, mb) = (mu_a[k], mu_b[k]);
        let var_a = e_aa[k] - ma * ma;
        let var_b = e_bb[k] - mb * mb;
        let cov = e_ab[k] - ma * mb;
        let num = (2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2);
        let den = (ma * ma + mb * mb + SSIM_C1) * (var_a + var_b + SSIM_C2);
        total += num / den;
    }
    Ok(total / n as f64)
}

/// Statistics of the absolute error `|a - b|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Population variance (divides by N).
    pub var_abs: f64,
}

impl ErrorStats {
    pub const CSV_HEADER: &'static str = "max_abs,mean_abs,var_abs";

    /// One CSV row with 6 significant digits per field.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{}",
            format_sig(self.max_abs, 6),
            format_sig(self.mean_abs, 6),
            format_sig(self.var_abs, 6)
        )
    }
}

pub fn error_stats(a: &Image, b: &Image) -> Result<ErrorStats> {
    a.ensure_same_dims(b)?;
    let abs: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).collect();
    let n = abs.len() as f64;
    let max_abs = abs.iter().fold(0.0f64, |m, &v| m.max(v));
    let mean_abs = abs.iter().sum::<f64>() / n;
    let var_abs = abs.iter().map(|v| (v - mean_abs) * (v - mean_abs)).sum::<f64>() / n;
    Ok(ErrorStats {
        max_abs,
        // summation rounding must not break mean ≤ max
        mean_abs: mean_abs.min(max_abs),
        var_abs,
    })
}

/// `|a - b|` scaled so that an error of [`ERROR_MAP_RANGE`] or more is white.
pub fn error_map(a: &Image, b: &Image) -> Result<Image> {
    a.ensure_same_dims(b)?;
    let scale = 255.0 / ERROR_MAP_RANGE;
    Ok(a.zip_map(b, |x, y| ((x - y).abs() * scale).min(255.0)))
}

/// Formats like C's `%.{digits}g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    // exponent after rounding to `digits` significant digits
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> Image {
        Image::from_fn(h, w, |i, j| ((i * 17 + j * 31) % 256) as f64)
    }

    #[test]
    fn psnr_sentinel_and_closed_forms() {
        let x = ramp(8, 8);
        assert_eq!(psnr(&x, &x).unwrap(), f64::INFINITY);
        let zeros = Image::zeros(5, 3);
        assert_eq!(psnr(&zeros, &Image::filled(5, 3, 255.0)).unwrap(), 0.0);
        let p = psnr(&zeros, &Image::filled(5, 3, 1.0)).unwrap();
        assert!((p - 48.130_803_608_679_1).abs() < 1e-9, "{p}");
        assert!(psnr(&zeros, &Image::zeros(3, 5)).is_err());
    }

    #[test]
    fn ssim_identity_constant_and_bounds() {
        let x = ramp(16, 20);
        assert_eq!(ssim(&x, &x).unwrap(), 1.0);
        let c = Image::filled(12, 12, 100.0);
        assert_eq!(ssim(&c, &c).unwrap(), 1.0);
        let inv = x.map(|v| 255.0 - v);
        let s = ssim(&x, &inv).unwrap();
        assert!((-1.0..1.0).contains(&s), "{s}");
        assert!(matches!(
            ssim(&Image::zeros(10, 20), &Image::zeros(10, 20)),
            Err(Error::TooSmall { .. })
        ));
    }

    #[test]
    fn error_stats_hand_cases() {
        let a = Image::new(1, 4, vec![2.0, -2.0, 2.0, -2.0]).unwrap();
        let zero = Image::zeros(1, 4);
        let s = error_stats(&a, &zero).unwrap();
        assert_eq!(
            s,
            ErrorStats {
                max_abs: 2.0,
                mean_abs: 2.0,
                var_abs: 0.0
            }
        );
        let b = Image::new(2, 2, vec![0.0, 1.0, 3.0, 4.0]).unwrap();
        let s = error_stats(&b, &Image::zeros(2, 2)).unwrap();
        assert_eq!(s.max_abs, 4.0);
        assert_eq!(s.mean_abs, 2.0);
        assert_eq!(s.var_abs, 2.5);
        let s = error_stats(&b, &b).unwrap();
        assert_eq!((s.max_abs, s.mean_abs, s.var_abs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(129.0, 6), "129");
        assert_eq!(format_sig(5.2, 6), "5.2");
        assert_eq!(format_sig(39.554_321_9, 6), "39.5543");
        assert_eq!(format_sig(0.000_123_456_78, 6), "0.000123457");
        assert_eq!(format_sig(1.234_567e-7, 6), "1.23457e-07");
        assert_eq!(format_sig(123_456_789.0, 6), "1.23457e+08");
        assert_eq!(format_sig(999_999.5, 6), "1e+06");
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(
            ErrorStats {
                max_abs: 129.0,
                mean_abs: 5.2,
                var_abs: 39.55
            }
            .to_csv_row(),
            "129,5.2,39.55"
        );
    }

    #[test]
    fn error_map_single_pixel() {
        let a = Image::zeros(4, 4);
        let mut b = a.clone();
        b.set(2, 1, 10.0);
        let m = error_map(&a, &b).unwrap();
        let nonzero: Vec<_> = m.data().iter().enumerate().filter(|(_, &v)| v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, 2 * 4 + 1);
        assert_eq!(*nonzero[0].1, 51.0);
        b.set(0, 0, 400.0);
        assert_eq!(error_map(&a, &b).unwrap().get(0, 0), 255.0);
    }
}
