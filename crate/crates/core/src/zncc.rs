//! Zero-mean normalised cross-correlation baseline.
//!
//! Each channel is scored independently and the channel maps are summed.
//! The map has the image's size; entry `(x, y)` scores the placement whose
//! template centre (`((w - 1) / 2, (h - 1) / 2)`) lies on `(x, y)`. Placements
//! where the template would hang over the border score 0, as do flat image
//! patches.

use crate::conv::{xcorr2_same, ConvMode};
use crate::error::{Error, Result};
use crate::image::{convert_colorspace, Colorspace, Image, Plane};

/// Summed per-channel ZNCC, values in `[-channels, channels]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZnccMap {
    pub map: Plane,
    pub channels: usize,
}

/// Summed-area table with one row and column of leading zeros.
struct Integral {
    stride: usize,
    data: Vec<f64>,
}

impl Integral {
    fn new(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let stride = w + 1;
        let mut data = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(x, y);
                data[(y + 1) * stride + x + 1] = data[y * stride + x + 1] + row;
            }
        }
        Self { stride, data }
    }

    fn sum(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        let s = self.stride;
        self.data[(y + h) * s + x + w] - self.data[y * s + x + w] - self.data[(y + h) * s + x]
            + self.data[y * s + x]
    }
}

/// ZNCC of one channel. `None` when the template has no variance.
pub fn zncc_plane(image: &Plane, template: &Plane, mode: ConvMode) -> Result<Option<Plane>> {
    let (w, h) = image.dims();
    let (tw, th) = template.dims();
    if tw > w || th > h {
        return Err(Error::KernelTooLarge {
            kernel_w: tw,
            kernel_h: th,
            plane_w: w,
            plane_h: h,
        });
    }
    let n = (tw * th) as f64;
    let t_mean = template.sum() / n;
    let t_dev = template.map(|v| v - t_mean);
    let t_norm2: f64 = t_dev.data().iter().map(|v| v * v).sum();
    if t_norm2 <= 1e-20 * n {
        return Ok(None);
    }
    // shift by the global mean to keep the running sums well conditioned
    let g_mean = image.sum() / (w * h) as f64;
    let shifted = image.map(|v| v - g_mean);
    let s1 = Integral::new(w, h, |x, y| shifted.get(x, y));
    let s2 = Integral::new(w, h, |x, y| shifted.get(x, y).powi(2));
    let g_var = s2.sum(0, 0, w, h) / (w * h) as f64;
    let flat = (1e-12 * n * g_var).max(1e-20 * n);
    // sum_u I(u) (T(u) - mean T) is unaffected by the shift since the
    // deviations sum to zero
    let numer = xcorr2_same(&shifted, &t_dev, mode)?;
    let (cx, cy) = ((tw - 1) / 2, (th - 1) / 2);
    let mut out = Plane::zeros(w, h);
    for y in cy..=(h - th + cy) {
        for x in cx..=(w - tw + cx) {
            let (x0, y0) = (x - cx, y - cy);
            let a = s1.sum(x0, y0, tw, th);
            let var = s2.sum(x0, y0, tw, th) - a * a / n;
            if var <= flat {
                continue;
            }
            out.set(x, y, numer.get(x, y) / (var * t_norm2).sqrt());
        }
    }
    Ok(Some(out))
}

/// Summed per-channel ZNCC after converting image and template to `colorspace`.
///
/// Channels where the template is flat contribute nothing; a template flat in
/// every channel is rejected.
pub fn zncc_match(img: &Image, template: &Image, colorspace: Colorspace) -> Result<ZnccMap> {
    zncc_match_with(img, template, colorspace, ConvMode::Auto)
}

pub fn zncc_match_with(
    img: &Image,
    template: &Image,
    colorspace: Colorspace,
    mode: ConvMode,
) -> Result<ZnccMap> {
    let convert = |im: &Image| {
        if im.is_color() {
            convert_colorspace(im, colorspace)
        } else {
            Ok(im.clone())
        }
    };
    let (img, template) = (convert(img)?, convert(template)?);
    if img.channels() != template.channels() {
        return Err(Error::DimensionMismatch(format!(
            "image has {} channels, template {}",
            img.channels(),
            template.channels()
        )));
    }
    let mut total: Option<Plane> = None;
    for (ip, tp) in img.planes().iter().zip(template.planes()) {
        if let Some(m) = zncc_plane(ip, tp, mode)? {
            total = Some(match total {
                None => m,
                Some(mut acc) => {
                    acc.data_mut()
                        .iter_mut()
                        .zip(m.data())
                        .for_each(|(a, b)| *a += b);
                    acc
                }
            });
        }
    }
    let map = total.ok_or_else(|| Error::DegenerateTemplate("template has zero variance".into()))?;
    Ok(ZnccMap {
        map,
        channels: img.channels(),
    })
}
