//! Harris keypoints, keypoint rejection rules and additional-template selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{local_maxima, BoundingBox, Homography};
use crate::filter::{blur_plane, GaussianSpec};
use crate::image::{convert_colorspace, reflect_index, Colorspace, Image, Plane};
use crate::preprocess::ChannelStack;
use crate::zncc::zncc_match;

/// Harris sensitivity.
pub const HARRIS_KAPPA: f64 = 0.04;
/// Gaussian integration scale of the structure tensor.
pub const HARRIS_SIGMA: f64 = 1.5;
/// Responses below this fraction of the strongest one are ignored.
pub const HARRIS_FLOOR: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub response: f64,
}

impl Keypoint {
    pub fn manhattan(&self, other: &Keypoint) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarrisResult {
    /// Sorted by descending response.
    pub keypoints: Vec<Keypoint>,
    /// Fewer keypoints than requested were found.
    pub short: bool,
}

fn gray_plane(img: &Image) -> Result<Plane> {
    Ok(if img.is_color() {
        convert_colorspace(img, Colorspace::Gray)?.into_planes().remove(0)
    } else {
        img.plane(0).clone()
    })
}

/// Corner response `det(M) - kappa trace(M)^2` of the Gaussian-weighted
/// structure tensor built from 3x3 Sobel gradients.
pub fn harris_response(img: &Image) -> Result<Plane> {
    let g = gray_plane(img)?;
    let (w, h) = g.dims();
    let at = |x: isize, y: isize| g.get(reflect_index(x, w), reflect_index(y, h));
    let mut ixx = Plane::zeros(w, h);
    let mut iyy = Plane::zeros(w, h);
    let mut ixy = Plane::zeros(w, h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let (ux, uy) = (x as usize, y as usize);
            ixx.set(ux, uy, gx * gx);
            iyy.set(ux, uy, gy * gy);
            ixy.set(ux, uy, gx * gy);
        }
    }
    let spec = GaussianSpec::new(HARRIS_SIGMA)?;
    let (sxx, syy, sxy) = (blur_plane(&ixx, spec), blur_plane(&iyy, spec), blur_plane(&ixy, spec));
    Ok(Plane::from_fn(w, h, |x, y| {
        let (a, b, c) = (sxx.get(x, y), syy.get(x, y), sxy.get(x, y));
        a * b - c * c - HARRIS_KAPPA * (a + b) * (a + b)
    }))
}

/// Up to `count` corners, strongest first, no two closer than
/// `min_manhattan` pixels (Manhattan distance).
pub fn harris_detect(img: &Image, count: usize, min_manhattan: usize) -> Result<HarrisResult> {
    let response = harris_response(img)?;
    let top = response.max();
    let mut keypoints: Vec<Keypoint> = Vec::new();
    if top > 0.0 {
        let floor = HARRIS_FLOOR * top;
        for p in local_maxima(&response) {
            if keypoints.len() >= count || p.score <= floor {
                break;
            }
            let kp = Keypoint {
                x: p.x,
                y: p.y,
                response: p.score,
            };
            if keypoints.iter().all(|k| k.manhattan(&kp) >= min_manhattan) {
                keypoints.push(kp);
            }
        }
    }
    Ok(HarrisResult {
        short: keypoints.len() < count,
        keypoints,
    })
}

/// A query image a keypoint must also be usable in.
#[derive(Clone, Copy, Debug)]
pub struct QueryView {
    pub dims: (usize, usize),
    pub homography: Homography,
}

/// Template box centred on a (possibly fractional) location, rounded to the
/// nearest pixel.
pub fn box_around(x: f64, y: f64, template: (usize, usize)) -> BoundingBox {
    BoundingBox::centered(x.round() as i64, y.round() as i64, template.0 as i64, template.1 as i64)
        .expect("template dims >= 1")
}

/// Applies the keypoint rejection rules, keeping at most `max_keep`.
///
/// In response order, a keypoint is dropped when its template box leaves the
/// first image, when the box around its mapped location leaves any query
/// image, or when it lies closer than `min(min_spacing, template size)`
/// (Manhattan) to a keypoint already kept.
pub fn filter_keypoints_vgg(
    keypoints: &[Keypoint],
    template: (usize, usize),
    img1_dims: (usize, usize),
    queries: &[QueryView],
    min_spacing: usize,
    max_keep: usize,
) -> Vec<Keypoint> {
    let spacing = min_spacing.min(template.0.min(template.1));
    let mut kept: Vec<Keypoint> = Vec::new();
    for kp in keypoints {
        if kept.len() >= max_keep {
            break;
        }
        if !box_around(kp.x as f64, kp.y as f64, template).inside(img1_dims.0, img1_dims.1) {
            continue;
        }
        let fits = queries.iter().all(|q| match q.homography.apply(kp.x as f64, kp.y as f64) {
            Ok((u, v)) => box_around(u, v, template).inside(q.dims.0, q.dims.1),
            Err(_) => false,
        });
        if !fits {
            continue;
        }
        if kept.iter().any(|k| k.manhattan(kp) < spacing) {
            continue;
        }
        kept.push(*kp);
    }
    kept
}

/// Copy of `bbox` from an image.
pub fn extract_patch(img: &Image, bbox: &BoundingBox) -> Result<Image> {
    img.crop(bbox)
}

/// Copy of `bbox` (unpadded coordinates) from every channel of a stack.
pub fn extract_stack_patch(stack: &ChannelStack, bbox: &BoundingBox) -> Result<Vec<Plane>> {
    stack.extract(bbox)
}

/// How additional templates are chosen.
#[derive(Clone, Debug)]
pub enum SelectionStrategy<'a> {
    /// Around the strongest local maxima of the target's ZNCC map.
    MaxCorrelation,
    /// Around Harris corners, strongest first.
    Keypoint,
    /// Uniformly random placements.
    Random { seed: u64 },
    /// `inner` applied to an unrelated image.
    FromOtherImage {
        source: &'a Image,
        inner: Box<SelectionStrategy<'a>>,
    },
}

/// Random placements tried per requested box.
const RANDOM_ATTEMPTS_PER_BOX: usize = 200;

/// Boxes for up to `max_count` additional templates of the target's size.
///
/// Boxes never overlap each other and, when drawn from `img1`, never overlap
/// the target. Fewer than `max_count` come back when no more fit. For
/// [`SelectionStrategy::FromOtherImage`] the boxes refer to the other image.
pub fn select_additional(
    img1: &Image,
    target: &BoundingBox,
    strategy: &SelectionStrategy<'_>,
    max_count: usize,
) -> Result<Vec<BoundingBox>> {
    if !target.inside(img1.width(), img1.height()) {
        return Err(Error::OutOfBounds {
            x: target.x,
            y: target.y,
            w: target.w,
            h: target.h,
            width: img1.width(),
            height: img1.height(),
        });
    }
    if max_count == 0 {
        return Ok(Vec::new());
    }
    match strategy {
        SelectionStrategy::FromOtherImage { source, inner } => {
            if matches!(**inner, SelectionStrategy::FromOtherImage { .. }) {
                return Err(Error::InvalidParam("nested other-image strategy".into()));
            }
            let template = img1.crop(target)?;
            select_in(source, &template, None, inner, max_count)
        }
        _ => {
            let template = img1.crop(target)?;
            select_in(img1, &template, Some(*target), strategy, max_count)
        }
    }
}

fn select_in(
    search: &Image,
    template: &Image,
    exclude: Option<BoundingBox>,
    strategy: &SelectionStrategy<'_>,
    max_count: usize,
) -> Result<Vec<BoundingBox>> {
    let (w, h) = search.dims();
    let dims = template.dims();
    if dims.0 > w || dims.1 > h {
        return Ok(Vec::new());
    }
    let mut accepted: Vec<BoundingBox> = Vec::new();
    let offer = |b: BoundingBox, accepted: &mut Vec<BoundingBox>| {
        let clear = exclude.is_none_or(|t| !t.overlaps(&b)) && accepted.iter().all(|a| !a.overlaps(&b));
        if clear {
            accepted.push(b);
        }
        accepted.len() >= max_count
    };
    let centred = |x: usize, y: usize| box_around(x as f64, y as f64, dims).clip_into(w, h);
    match strategy {
        SelectionStrategy::MaxCorrelation => {
            let colorspace = if search.is_color() { Colorspace::Hsv } else { Colorspace::Gray };
            let map = match zncc_match(search, template, colorspace) {
                Ok(m) => m.map,
                // a flat target has no correlation structure to follow
                Err(Error::DegenerateTemplate(_)) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            for p in local_maxima(&map) {
                if offer(centred(p.x, p.y), &mut accepted) {
                    break;
                }
            }
        }
        SelectionStrategy::Keypoint => {
            let kps = harris_detect(search, usize::MAX, 0)?.keypoints;
            for kp in kps {
                if offer(centred(kp.x, kp.y), &mut accepted) {
                    break;
                }
            }
        }
        SelectionStrategy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..RANDOM_ATTEMPTS_PER_BOX * max_count {
                let x = rng.random_range(0..=(w - dims.0)) as i64;
                let y = rng.random_range(0..=(h - dims.1)) as i64;
                let b = BoundingBox::new(x, y, dims.0 as i64, dims.1 as i64)?;
                if offer(b, &mut accepted) {
                    break;
                }
            }
        }
        SelectionStrategy::FromOtherImage { .. } => {
            return Err(Error::InvalidParam("nested other-image strategy".into()));
        }
    }
    Ok(accepted)
}
