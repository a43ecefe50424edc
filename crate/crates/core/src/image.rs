//! The pixel container shared by every stage of the pipeline.
//!
//! An [`Image`] is a row-major grid of `f64` intensities, nominally in
//! `[0, 255]`. It stores HR estimates, LR observations, auxiliary
//! variables, gradient components and error maps alike.

use std::ops::{Add, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image, validating the shape and that every value is finite.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyImage { height, width });
        }
        if data.len() != height * width {
            return Err(Error::DataLength {
                height,
                width,
                len: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    /// Internal constructor for buffers produced by finite arithmetic.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Image {
            height,
            width,
            data,
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        assert!(value.is_finite(), "fill value must be finite");
        Image::from_raw(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                let v = f(i, j);
                assert!(v.is_finite(), "generator produced non-finite value at ({i}, {j})");
                data.push(v);
            }
        }
        Image::from_raw(height, width, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the pixels. Callers must keep every value finite.
    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Pixel lookup with periodic wrap-around in both axes.
    #[inline]
    pub fn get_wrapped(&self, row: isize, col: isize) -> f64 {
        let r = row.rem_euclid(self.height as isize) as usize;
        let c = col.rem_euclid(self.width as isize) as usize;
        self.data[r * self.width + c]
    }

    pub fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }

    pub fn ensure_dims(&self, height: usize, width: usize) -> Result<()> {
        if self.dims() != (height, width) {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                actual: self.dims(),
            });
        }
        Ok(())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::from_raw(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        assert_eq!(self.dims(), other.dims(), "zip_map on mismatched images");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::from_raw(self.height, self.width, data)
    }

    pub fn scale(&self, factor: f64) -> Image {
        self.map(|v| v * factor)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Image) {
        assert_eq!(self.dims(), other.dims(), "axpy on mismatched images");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn dot(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims(), "dot on mismatched images");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Image {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Keeps the top-left `height x width` region.
    pub fn crop(&self, height: usize, width: usize) -> Result<Image> {
        if height == 0 || width == 0 || height > self.height || width > self.width {
            return Err(Error::DimensionMismatch {
                expected: (height, width),
                actual: self.dims(),
            });
        }
        Ok(self.crop_region(0, 0, height, width))
    }

    pub(crate) fn crop_region(&self, top: usize, left: usize, height: usize, width: usize) -> Image {
        let mut data = Vec::with_capacity(height * width);
        for i in top..top + height {
            let row = &self.data[i * self.width..(i + 1) * self.width];
            data.extend_from_slice(&row[left..left + width]);
        }
        Image::from_raw(height, width, data)
    }

    /// Crops bottom/right so both dimensions become multiples of `factor`.
    pub fn crop_to_multiple(&self, factor: usize) -> Result<Image> {
        if factor == 0 {
            return Err(Error::InvalidConfig("factor must be positive".into()));
        }
        let h = self.height - self.height % factor;
        let w = self.width - self.width % factor;
        if h == 0 || w == 0 {
            return Err(Error::Indivisible {
                height: self.height,
                width: self.width,
                factor,
            });
        }
        Ok(self.crop_region(0, 0, h, w))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Add for &Image {
    type Output = Image;

    fn add(self, rhs: &Image) -> Image {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Image {
    type Output = Image;

    fn sub(self, rhs: &Image) -> Image {
        self.zip_map(rhs, |a, b| a - b)
    }
}
