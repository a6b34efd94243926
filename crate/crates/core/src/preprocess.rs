//! ON/OFF contrast encoding of an image.

use crate::error::{Error, Result};
use crate::eval::BoundingBox;
use crate::filter::{blur_plane, GaussianSpec};
use crate::image::{mirror_pad_plane, unpad_plane, Image, Padding, Plane};

/// Non-negative multi-channel array, possibly padded.
///
/// For preprocessed images, channels come in ON/OFF pairs: plane `2c` holds
/// the positive part of the contrast in colour channel `c` and plane `2c + 1`
/// the negated negative part.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStack {
    planes: Vec<Plane>,
    pad: Padding,
}

impl ChannelStack {
    pub fn new(planes: Vec<Plane>, pad: Padding) -> Result<Self> {
        let Some(first) = planes.first() else {
            return Err(Error::EmptyInput("channel stack needs at least one plane"));
        };
        let dims = first.dims();
        if planes.iter().any(|p| p.dims() != dims) {
            return Err(Error::DimensionMismatch("stack planes differ in size".into()));
        }
        if planes.iter().any(|p| p.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite())) {
            return Err(Error::InvalidImage("stack values must be finite and non-negative".into()));
        }
        if pad.left + pad.right >= dims.0 || pad.top + pad.bottom >= dims.1 {
            return Err(Error::DimensionMismatch(format!(
                "padding {pad:?} leaves nothing of a {}x{} stack",
                dims.0, dims.1
            )));
        }
        Ok(Self { planes, pad })
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.planes[0].dims()
    }

    pub fn pad(&self) -> Padding {
        self.pad
    }

    /// Size of the image before padding.
    pub fn original_dims(&self) -> (usize, usize) {
        (
            self.width() - self.pad.left - self.pad.right,
            self.height() - self.pad.top - self.pad.bottom,
        )
    }

    pub fn plane(&self, i: usize) -> &Plane {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    /// Copies the region `bbox`, given in unpadded image coordinates, from
    /// every channel.
    pub fn extract(&self, bbox: &BoundingBox) -> Result<Vec<Plane>> {
        let (ow, oh) = self.original_dims();
        if !bbox.inside(ow, oh) {
            return Err(Error::OutOfBounds {
                x: bbox.x,
                y: bbox.y,
                w: bbox.w,
                h: bbox.h,
                width: ow,
                height: oh,
            });
        }
        let shifted = bbox.translate(self.pad.left as i64, self.pad.top as i64);
        self.planes.iter().map(|p| p.crop_box(&shifted)).collect()
    }

    /// Planes with the padding removed.
    pub fn unpadded(&self) -> Result<Vec<Plane>> {
        self.planes.iter().map(|p| unpad_plane(p, self.pad)).collect()
    }
}

/// Gaussian width used for a `template_w`x`template_h` template: half the
/// smaller side.
pub fn default_sigma(template_w: usize, template_h: usize) -> f64 {
    0.5 * template_w.min(template_h) as f64
}

/// Encodes `img` for matching with `template_w`x`template_h` templates.
///
/// The image is mirror-padded by the template width on the left and right and
/// by the template height on top and bottom, a local mean `m` is estimated
/// with a Gaussian of sigma [`default_sigma`], and each colour channel of
/// `2 (I - m)` is split into its rectified positive and negative parts. The
/// result stays padded.
pub fn preprocess(img: &Image, template_w: usize, template_h: usize) -> Result<ChannelStack> {
    preprocess_with_sigma(img, template_w, template_h, default_sigma(template_w, template_h))
}

pub fn preprocess_with_sigma(
    img: &Image,
    template_w: usize,
    template_h: usize,
    sigma: f64,
) -> Result<ChannelStack> {
    if template_w == 0 || template_h == 0 {
        return Err(Error::InvalidParam("template dimensions must be >= 1".into()));
    }
    let spec = GaussianSpec::new(sigma)?;
    let pad = Padding::symmetric(template_w, template_h);
    let mut planes = Vec::with_capacity(2 * img.channels());
    for channel in img.planes() {
        let padded = mirror_pad_plane(channel, pad)?;
        let mean = blur_plane(&padded, spec);
        let (w, h) = padded.dims();
        let mut on = Vec::with_capacity(w * h);
        let mut off = Vec::with_capacity(w * h);
        for (&v, &m) in padded.data().iter().zip(mean.data()) {
            let x = 2.0 * (v - m);
            on.push(x.max(0.0));
            off.push((-x).max(0.0));
        }
        planes.push(Plane::new(w, h, on)?);
        planes.push(Plane::new(w, h, off)?);
    }
    ChannelStack::new(planes, pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::gaussian_blur;
    use crate::image::mirror_pad;

    fn textured(w: usize, h: usize, channels: usize) -> Image {
        let planes = (0..channels)
            .map(|c| {
                Plane::from_fn(w, h, |x, y| {
                    (((x * 37 + y * 91 + c * 53) % 101) as f64 / 100.0).powf(1.3)
                })
            })
            .collect();
        Image::from_planes(planes).unwrap()
    }

    #[test]
    fn constant_image_gives_zero_planes() {
        let img = Image::gray(Plane::filled(20, 15, 0.6)).unwrap();
        let stack = preprocess(&img, 5, 4).unwrap();
        assert_eq!(stack.channels(), 2);
        assert_eq!(stack.dims(), (30, 23));
        assert!(stack
            .planes()
            .iter()
            .all(|p| p.data().iter().all(|&v| v.abs() < 1e-12)));
    }

    #[test]
    fn channel_counts() {
        assert_eq!(preprocess(&textured(16, 16, 1), 4, 4).unwrap().channels(), 2);
        assert_eq!(preprocess(&textured(16, 16, 3), 4, 4).unwrap().channels(), 6);
    }

    #[test]
    fn on_off_reconstruct_contrast() {
        let img = textured(24, 18, 3);
        let (tw, th) = (7, 5);
        let stack = preprocess(&img, tw, th).unwrap();
        let pad = Padding::symmetric(tw, th);
        let padded = mirror_pad(&img, pad).unwrap();
        let mean = gaussian_blur(&padded, GaussianSpec::new(default_sigma(tw, th)).unwrap());
        for c in 0..3 {
            let (on, off) = (stack.plane(2 * c), stack.plane(2 * c + 1));
            for i in 0..on.len() {
                let x = 2.0 * (padded.plane(c).data()[i] - mean.plane(c).data()[i]);
                assert!((on.data()[i] - off.data()[i] - x).abs() < 1e-12);
                assert_eq!(on.data()[i].min(off.data()[i]), 0.0);
            }
        }
        assert_eq!(stack.original_dims(), (24, 18));
    }

    #[test]
    fn extract_uses_image_coordinates() {
        let img = textured(20, 20, 1);
        let stack = preprocess(&img, 4, 4).unwrap();
        let patch = stack.extract(&BoundingBox::new(0, 0, 4, 4).unwrap()).unwrap();
        assert_eq!(patch[0], stack.plane(0).crop(4, 4, 4, 4).unwrap());
        assert!(stack.extract(&BoundingBox::new(17, 0, 4, 4).unwrap()).is_err());
    }
}
