//! Image files in and out, and resampling.

use std::path::Path;

use image::imageops::{self, FilterType};
use image::{ColorType, DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::image::{Image, Plane};

/// Reads an image with values in `[0, 1]`. Grayscale files (with or without
/// alpha) give one channel, everything else three RGB channels. Alpha is
/// dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let dynamic = image::open(path).map_err(|source| Error::ImageCodec {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_dynamic(&dynamic))
}

/// Width and height from the file header.
pub fn image_dims(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let (w, h) = image::image_dimensions(path).map_err(|source| Error::ImageCodec {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((w as usize, h as usize))
}

pub fn from_dynamic(dynamic: &DynamicImage) -> Image {
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    let gray = matches!(
        dynamic.color(),
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16
    );
    if gray {
        let buf = dynamic.to_luma32f();
        let plane = Plane::from_fn(w, h, |x, y| buf.get_pixel(x as u32, y as u32).0[0] as f64);
        Image::gray(plane).expect("non-empty")
    } else {
        let buf = dynamic.to_rgb32f();
        let data: Vec<f64> = buf.into_raw().into_iter().map(f64::from).collect();
        Image::from_interleaved(w, h, 3, &data).expect("rgb buffer")
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_buffer<P, C>(path: &Path, buf: &ImageBuffer<P, C>) -> Result<()>
where
    P: image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    buf.save(path).map_err(|source| Error::ImageCodec {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a plane with values in `[0, 1]` as 8-bit grayscale; the format
/// follows the file extension.
pub fn save_gray(path: impl AsRef<Path>, plane: &Plane) -> Result<()> {
    let (w, h) = plane.dims();
    let buf = ImageBuffer::<Luma<u8>, _>::from_fn(w as u32, h as u32, |x, y| {
        Luma([to_u8(plane.get(x as usize, y as usize))])
    });
    write_buffer(path.as_ref(), &buf)
}

/// Writes a one- or three-channel image with values in `[0, 1]`.
pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    if !img.is_color() {
        return save_gray(path, img.plane(0));
    }
    let (w, h) = img.dims();
    let buf = ImageBuffer::<Rgb<u8>, _>::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        Rgb([
            to_u8(img.plane(0).get(x, y)),
            to_u8(img.plane(1).get(x, y)),
            to_u8(img.plane(2).get(x, y)),
        ])
    });
    write_buffer(path.as_ref(), &buf)
}

/// Min-max scaling to `[0, 1]`; a constant plane maps to zeros.
pub fn normalize_min_max(plane: &Plane) -> Plane {
    let (lo, hi) = (plane.min(), plane.max());
    if !(hi > lo) {
        return Plane::zeros(plane.width(), plane.height());
    }
    plane.map(|v| (v - lo) / (hi - lo))
}

/// Writes a heatmap min-max scaled to the full gray range.
pub fn save_heatmap(path: impl AsRef<Path>, plane: &Plane) -> Result<()> {
    save_gray(path, &normalize_min_max(plane))
}

/// Output size for a scale factor: each side rounded, at least one pixel.
pub fn scaled_dims(dims: (usize, usize), scale: f64) -> (usize, usize) {
    let f = |n: usize| ((n as f64 * scale).round() as usize).max(1);
    (f(dims.0), f(dims.1))
}

/// Resamples every channel by `scale` with a triangle (bilinear) filter.
pub fn rescale(img: &Image, scale: f64) -> Result<Image> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParam(format!("scale must be positive, got {scale}")));
    }
    if scale == 1.0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let (nw, nh) = scaled_dims((w, h), scale);
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let buf = ImageBuffer::<Luma<f32>, _>::from_fn(w as u32, h as u32, |x, y| {
                Luma([p.get(x as usize, y as usize) as f32])
            });
            let out = imageops::resize(&buf, nw as u32, nh as u32, FilterType::Triangle);
            Plane::from_fn(nw, nh, |x, y| out.get_pixel(x as u32, y as u32).0[0] as f64)
        })
        .collect();
    Image::from_planes(planes)
}
