//! Image representation, colourspace conversion and mirror padding.

use crate::error::{Error, Result};
use crate::eval::BoundingBox;

/// A dense row-major 2D array of `f64`.
///
/// Used for image channels, preprocessed ON/OFF planes, kernels and
/// similarity maps alike.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "plane {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
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
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Location and value of the largest element; ties resolve to the first
    /// element in raster order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width, self.data[best])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of the `w`x`h` region whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Plane> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                w: w as i64,
                h: h as i64,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            data.extend_from_slice(&self.data[row * self.width + x..row * self.width + x + w]);
        }
        Ok(Plane {
            width: w,
            height: h,
            data,
        })
    }

    pub fn crop_box(&self, bbox: &BoundingBox) -> Result<Plane> {
        if !bbox.inside(self.width, self.height) {
            return Err(Error::OutOfBounds {
                x: bbox.x,
                y: bbox.y,
                w: bbox.w,
                h: bbox.h,
                width: self.width,
                height: self.height,
            });
        }
        self.crop(bbox.x as usize, bbox.y as usize, bbox.w as usize, bbox.h as usize)
    }

    /// Writes `src` into this plane with its top-left corner at `(x, y)`.
    pub fn paste(&mut self, src: &Plane, x: usize, y: usize) -> Result<()> {
        if x + src.width > self.width || y + src.height > self.height {
            return Err(Error::OutOfBounds {
                x: x as i64,
                y: y as i64,
                w: src.width as i64,
                h: src.height as i64,
                width: self.width,
                height: self.height,
            });
        }
        for row in 0..src.height {
            let dst = (y + row) * self.width + x;
            self.data[dst..dst + src.width].copy_from_slice(src.row(row));
        }
        Ok(())
    }

    /// The plane rotated by 180 degrees.
    pub fn rot180(&self) -> Plane {
        let mut data = self.data.clone();
        data.reverse();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Padding applied to each border, in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Padding {
    pub left: usize,
    pub right: usize,
    pub top: usize,
    pub bottom: usize,
}

impl Padding {
    pub const NONE: Padding = Padding {
        left: 0,
        right: 0,
        top: 0,
        bottom: 0,
    };

    pub fn new(left: usize, right: usize, top: usize, bottom: usize) -> Self {
        Self {
            left,
            right,
            top,
            bottom,
        }
    }

    /// `horizontal` on the left and right, `vertical` on top and bottom.
    pub fn symmetric(horizontal: usize, vertical: usize) -> Self {
        Self::new(horizontal, horizontal, vertical, vertical)
    }

    pub fn is_none(&self) -> bool {
        *self == Self::NONE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Colorspace {
    Gray,
    Rgb,
    CieLab,
    Hsv,
}

impl std::str::FromStr for Colorspace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gray" | "grey" => Ok(Colorspace::Gray),
            "rgb" => Ok(Colorspace::Rgb),
            "lab" | "cielab" => Ok(Colorspace::CieLab),
            "hsv" => Ok(Colorspace::Hsv),
            other => Err(Error::InvalidParam(format!("unknown colourspace {other:?}"))),
        }
    }
}

/// A grayscale (1 channel) or colour (3 channel) image with values in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    planes: Vec<Plane>,
}

impl Image {
    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != 1 && planes.len() != 3 {
            return Err(Error::InvalidImage(format!(
                "expected 1 or 3 channels, got {}",
                planes.len()
            )));
        }
        let (width, height) = planes[0].dims();
        if planes.iter().any(|p| p.dims() != (width, height)) {
            return Err(Error::InvalidImage("channel dimensions differ".into()));
        }
        if planes.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidImage("non-finite pixel value".into()));
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn gray(plane: Plane) -> Result<Self> {
        Self::from_planes(vec![plane])
    }

    /// Builds an image from interleaved samples (`channels` values per pixel).
    pub fn from_interleaved(
        width: usize,
        height: usize,
        channels: usize,
        samples: &[f64],
    ) -> Result<Self> {
        if samples.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "{width}x{height}x{channels} image needs {} samples, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        let planes = (0..channels)
            .map(|c| {
                Plane::new(
                    width,
                    height,
                    samples.iter().skip(c).step_by(channels).copied().collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_planes(planes)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn plane(&self, c: usize) -> &Plane {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn is_color(&self) -> bool {
        self.planes.len() == 3
    }

    pub fn pixel(&self, x: usize, y: usize) -> Vec<f64> {
        self.planes.iter().map(|p| p.get(x, y)).collect()
    }

    pub fn crop(&self, bbox: &BoundingBox) -> Result<Image> {
        let planes = self
            .planes
            .iter()
            .map(|p| p.crop_box(bbox))
            .collect::<Result<Vec<_>>>()?;
        Ok(Image {
            width: bbox.w as usize,
            height: bbox.h as usize,
            planes,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            planes: self.planes.iter().map(|p| p.map(&f)).collect(),
        }
    }
}

/// Rec. 601 luma, the weighting used by common `rgb2gray` implementations.
pub fn luminance(r: f64, g: f64, b: f64) -> f64 {
    0.298_936_021_293_775_4 * r + 0.587_043_074_451_121_1 * g + 0.114_020_904_255_103_5 * b
}

/// Converts an RGB image to `target`.
///
/// Source images with three channels are taken to be sRGB. CIELab and HSV
/// channels are rescaled to [0, 1]: L* by 1/100, a* and b* affinely from
/// [-128, 127], hue by 1/360.
pub fn convert_colorspace(img: &Image, target: Colorspace) -> Result<Image> {
    if img.channels() == 1 {
        return match target {
            Colorspace::Gray => Ok(img.clone()),
            other => Err(Error::GrayscaleSource(other)),
        };
    }
    let (w, h) = img.dims();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    match target {
        Colorspace::Rgb => Ok(img.clone()),
        Colorspace::Gray => {
            let data = (0..w * h)
                .map(|i| luminance(r.data()[i], g.data()[i], b.data()[i]))
                .collect();
            Image::gray(Plane::new(w, h, data)?)
        }
        Colorspace::Hsv | Colorspace::CieLab => {
            let mut out = [
                Vec::with_capacity(w * h),
                Vec::with_capacity(w * h),
                Vec::with_capacity(w * h),
            ];
            for i in 0..w * h {
                let px = [r.data()[i], g.data()[i], b.data()[i]];
                let conv = if target == Colorspace::Hsv {
                    rgb_to_hsv_unit(px)
                } else {
                    rgb_to_lab_unit(px)
                };
                for c in 0..3 {
                    out[c].push(conv[c]);
                }
            }
            let [a, b, c] = out;
            Image::from_planes(vec![
                Plane::new(w, h, a)?,
                Plane::new(w, h, b)?,
                Plane::new(w, h, c)?,
            ])
        }
    }
}

fn rgb_to_hsv_unit([r, g, b]: [f64; 3]) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let hue = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let sat = if max <= 0.0 { 0.0 } else { delta / max };
    [hue / 6.0, sat, max]
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn rgb_to_lab_unit(px: [f64; 3]) -> [f64; 3] {
    // sRGB (D65) -> XYZ -> L*a*b*
    let [r, g, b] = px.map(srgb_to_linear);
    let x = 0.412_456_4 * r + 0.357_576_1 * g + 0.180_437_5 * b;
    let y = 0.212_672_9 * r + 0.715_152_2 * g + 0.072_175_0 * b;
    let z = 0.019_333_9 * r + 0.119_192_0 * g + 0.950_304_1 * b;
    const XN: f64 = 0.950_47;
    const ZN: f64 = 1.088_83;
    fn f(t: f64) -> f64 {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    }
    let (fx, fy, fz) = (f(x / XN), f(y), f(z / ZN));
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let bb = 200.0 * (fy - fz);
    [
        (l / 100.0).clamp(0.0, 1.0),
        ((a + 128.0) / 255.0).clamp(0.0, 1.0),
        ((bb + 128.0) / 255.0).clamp(0.0, 1.0),
    ]
}

/// Symmetric reflection of `i` into `0..n` with the edge sample repeated
/// (`... b a | a b c | c b ...`). Works for any offset, folding repeatedly.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

pub fn mirror_pad_plane(plane: &Plane, pad: Padding) -> Result<Plane> {
    let (w, h) = plane.dims();
    for (amount, dim) in [(pad.left, w), (pad.right, w), (pad.top, h), (pad.bottom, h)] {
        if amount > dim {
            return Err(Error::PadTooLarge { pad: amount, dim });
        }
    }
    let out_w = w + pad.left + pad.right;
    let out_h = h + pad.top + pad.bottom;
    let cols: Vec<usize> = (0..out_w)
        .map(|x| reflect_index(x as isize - pad.left as isize, w))
        .collect();
    let mut data = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let src = plane.row(reflect_index(y as isize - pad.top as isize, h));
        data.extend(cols.iter().map(|&x| src[x]));
    }
    Plane::new(out_w, out_h, data)
}

/// Pads every channel with mirror reflections of the border pixels; the edge
/// pixel itself is repeated.
pub fn mirror_pad(img: &Image, pad: Padding) -> Result<Image> {
    let planes = img
        .planes()
        .iter()
        .map(|p| mirror_pad_plane(p, pad))
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(planes)
}

/// Removes `pad` from every border of `plane`.
pub fn unpad_plane(plane: &Plane, pad: Padding) -> Result<Plane> {
    let (w, h) = plane.dims();
    if pad.left + pad.right >= w || pad.top + pad.bottom >= h {
        return Err(Error::DimensionMismatch(format!(
            "cannot remove padding {pad:?} from a {w}x{h} plane"
        )));
    }
    plane.crop(
        pad.left,
        pad.top,
        w - pad.left - pad.right,
        h - pad.top - pad.bottom,
    )
}
