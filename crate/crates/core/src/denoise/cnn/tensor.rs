use crate::image::Image;

/// Dense `N x C x H x W` buffer, row-major within each plane.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tensor {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Tensor {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.h * self.w
    }

    #[inline]
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let p = self.plane_len();
        let start = (n * self.c + c) * p;
        &self.data[start..start + p]
    }

    #[inline]
    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let p = self.plane_len();
        let start = (n * self.c + c) * p;
        &mut self.data[start..start + p]
    }

    pub fn from_planes(h: usize, w: usize, planes: &[&[f64]]) -> Self {
        let mut t = Tensor::zeros(planes.len(), 1, h, w);
        for (k, p) in planes.iter().enumerate() {
            t.plane_mut(k, 0).copy_from_slice(p);
        }
        t
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Stacks the channels of `self` and `other` (same N, H, W).
    pub fn concat_channels(&self, other: &Tensor) -> Tensor {
        debug_assert_eq!((self.n, self.h, self.w), (other.n, other.h, other.w));
        let mut out = Tensor::zeros(self.n, self.c + other.c, self.h, self.w);
        for n in 0..self.n {
            for c in 0..self.c {
                out.plane_mut(n, c).copy_from_slice(self.plane(n, c));
            }
            for c in 0..other.c {
                out.plane_mut(n, self.c + c).copy_from_slice(other.plane(n, c));
            }
        }
        out
    }

    /// The first `c` channels.
    pub fn leading_channels(&self, c: usize) -> Tensor {
        let mut out = Tensor::zeros(self.n, c, self.h, self.w);
        for n in 0..self.n {
            for k in 0..c {
                out.plane_mut(n, k).copy_from_slice(self.plane(n, k));
            }
        }
        out
    }
}

/// Circularly pads `img` up to `h x w` (both ≥ the image size).
pub(crate) fn pad_circular(img: &Image, h: usize, w: usize) -> Vec<f64> {
    let (ih, iw) = img.dims();
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        for j in 0..w {
            out.push(img.get(i % ih, j % iw));
        }
    }
    out
}

/// Top-left `h x w` region of a `pw`-wide plane.
pub(crate) fn crop_plane(plane: &[f64], pw: usize, h: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(h * w);
    for i in 0..h {
        out.extend_from_slice(&plane[i * pw..i * pw + w]);
    }
    out
}
