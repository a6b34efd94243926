//! Separable Gaussian smoothing.

use crate::error::{Error, Result};
use crate::image::{reflect_index, Image, Plane};

/// A truncated, renormalised Gaussian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianSpec {
    pub sigma: f64,
    pub radius: usize,
}

impl GaussianSpec {
    /// Gaussian with the default truncation radius `ceil(3 sigma)` (at least 1).
    pub fn new(sigma: f64) -> Result<Self> {
        Self::with_radius(sigma, ((3.0 * sigma).ceil() as usize).max(1))
    }

    pub fn with_radius(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParam(format!("gaussian sigma must be > 0, got {sigma}")));
        }
        if radius == 0 {
            return Err(Error::InvalidParam("gaussian radius must be >= 1".into()));
        }
        Ok(Self { sigma, radius })
    }

    /// Taps for offsets `-radius..=radius`, summing to one.
    pub fn kernel_1d(&self) -> Vec<f64> {
        let r = self.radius as isize;
        let denom = 2.0 * self.sigma * self.sigma;
        let mut k: Vec<f64> = (-r..=r)
            .map(|i| (-((i * i) as f64) / denom).exp())
            .collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        k
    }
}

fn blur_rows(src: &Plane, taps: &[f64], radius: usize) -> Plane {
    let (w, h) = src.dims();
    let mut out = Vec::with_capacity(w * h);
    let idx: Vec<Vec<usize>> = (0..w)
        .map(|x| {
            (0..taps.len())
                .map(|t| reflect_index(x as isize + t as isize - radius as isize, w))
                .collect()
        })
        .collect();
    for y in 0..h {
        let row = src.row(y);
        for ix in &idx {
            out.push(ix.iter().zip(taps).map(|(&i, &k)| row[i] * k).sum());
        }
    }
    Plane::new(w, h, out).expect("same dims")
}

fn transpose(p: &Plane) -> Plane {
    let (w, h) = p.dims();
    Plane::from_fn(h, w, |x, y| p.get(y, x))
}

/// Separable Gaussian blur of one plane; same-size output.
///
/// Samples beyond the border are taken from a symmetric reflection, so
/// constants are preserved everywhere.
pub fn blur_plane(plane: &Plane, spec: GaussianSpec) -> Plane {
    let taps = spec.kernel_1d();
    let rows = blur_rows(plane, &taps, spec.radius);
    transpose(&blur_rows(&transpose(&rows), &taps, spec.radius))
}

pub fn gaussian_blur(img: &Image, spec: GaussianSpec) -> Image {
    let planes = img.planes().iter().map(|p| blur_plane(p, spec)).collect();
    Image::from_planes(planes).expect("blur preserves shape")
}
