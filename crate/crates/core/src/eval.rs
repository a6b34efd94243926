//! Ground-truth geometry and benchmark metrics.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::image::Plane;

/// Axis-aligned integer rectangle; `(x, y)` is the top-left pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub x: i64,
    pub y: i64,
    pub w: i64,
    pub h: i64,
}

impl BoundingBox {
    pub fn new(x: i64, y: i64, w: i64, h: i64) -> Result<Self> {
        if w < 1 || h < 1 {
            return Err(Error::InvalidParam(format!("box size must be >= 1, got {w}x{h}")));
        }
        Ok(Self { x, y, w, h })
    }

    /// Box of size `w`x`h` whose centre pixel (same convention as kernel
    /// centres: `((w - 1) / 2, (h - 1) / 2)`) lands on `(cx, cy)`.
    pub fn centered(cx: i64, cy: i64, w: i64, h: i64) -> Result<Self> {
        Self::new(cx - (w - 1) / 2, cy - (h - 1) / 2, w, h)
    }

    pub fn center(&self) -> (i64, i64) {
        (self.x + (self.w - 1) / 2, self.y + (self.h - 1) / 2)
    }

    pub fn right(&self) -> i64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i64 {
        self.y + self.h
    }

    pub fn area(&self) -> i64 {
        self.w * self.h
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let w = self.right().min(other.right()) - self.x.max(other.x);
        let h = self.bottom().min(other.bottom()) - self.y.max(other.y);
        w.max(0) * h.max(0)
    }

    pub fn overlaps(&self, other: &BoundingBox) -> bool {
        self.intersection_area(other) > 0
    }

    /// Whether the box lies entirely within a `width`x`height` image.
    pub fn inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0 && self.y >= 0 && self.right() <= width as i64 && self.bottom() <= height as i64
    }

    /// Shifts the box so it lies inside the image (size unchanged when it fits,
    /// otherwise also shrunk to the image).
    pub fn clip_into(&self, width: usize, height: usize) -> Self {
        let (width, height) = (width as i64, height as i64);
        let w = self.w.min(width);
        let h = self.h.min(height);
        Self {
            x: self.x.clamp(0, width - w),
            y: self.y.clamp(0, height - h),
            w,
            h,
        }
    }
}

/// Intersection over union.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Plane projective transform acting on homogeneous pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography(Matrix3<f64>);

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        let det = m.determinant();
        if !(det.abs() > 1e-12) || !m.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularHomography(det));
        }
        Ok(Self(m))
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v))
    }

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self(Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .0
            .try_inverse()
            .ok_or(Error::SingularHomography(self.0.determinant()))?;
        Self::new(inv)
    }

    pub fn apply(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let p = self.0 * Vector3::new(x, y, 1.0);
        if p.z.abs() < 1e-12 {
            return Err(Error::PointAtInfinity { x, y });
        }
        Ok((p.x / p.z, p.y / p.z))
    }

    /// The same mapping expressed in coordinates scaled by `s`: `S H S^-1`.
    pub fn rescaled(&self, s: f64) -> Result<Self> {
        let scale = Matrix3::new(s, 0.0, 0.0, 0.0, s, 0.0, 0.0, 0.0, 1.0);
        let inv = Matrix3::new(1.0 / s, 0.0, 0.0, 0.0, 1.0 / s, 0.0, 0.0, 0.0, 1.0);
        Self::new(scale * self.0 * inv)
    }
}

/// Fraction of cases whose IoU exceeds each threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub success: Vec<f64>,
    /// Mean of `success` over the thresholds.
    pub auc: f64,
}

impl SuccessCurve {
    /// 100 thresholds `0.00, 0.01, ..., 0.99`: the left Riemann samples of [0, 1].
    pub fn default_thresholds() -> Vec<f64> {
        (0..100).map(|i| i as f64 / 100.0).collect()
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::EmptyInput("threshold grid"));
    }
    if thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParam("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

pub fn success_curve(ious: &[f64], thresholds: &[f64]) -> Result<SuccessCurve> {
    if ious.is_empty() {
        return Err(Error::EmptyInput("success curve needs at least one IoU"));
    }
    check_thresholds(thresholds)?;
    let n = ious.len() as f64;
    let success: Vec<f64> = thresholds
        .iter()
        .map(|&t| ious.iter().filter(|&&v| v > t).count() as f64 / n)
        .collect();
    let auc = success.iter().sum::<f64>() / success.len() as f64;
    Ok(SuccessCurve {
        thresholds: thresholds.to_vec(),
        success,
        auc,
    })
}

/// A local maximum of a 2D array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// Local maxima over the 8-neighbourhood.
///
/// A sample qualifies if it is no smaller than any neighbour, strictly larger
/// than at least one, and strictly larger than every neighbour that precedes
/// it in raster order. Isolated peaks are the usual strict maxima; a flat-topped
/// peak is reported once, at its first pixel; a constant array has none.
/// Results are sorted by descending score, ties in raster order.
pub fn local_maxima(plane: &Plane) -> Vec<Peak> {
    let (w, h) = plane.dims();
    let mut peaks = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = plane.get(x, y);
            if v.is_nan() {
                continue;
            }
            let mut ok = true;
            let mut above_one = false;
            'n: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let n = plane.get(nx as usize, ny as usize);
                    let precedes = dy < 0 || (dy == 0 && dx < 0);
                    if n > v || (precedes && n == v) {
                        ok = false;
                        break 'n;
                    }
                    if n < v {
                        above_one = true;
                    }
                }
            }
            if ok && above_one {
                peaks.push(Peak { x, y, score: v });
            }
        }
    }
    peaks.sort_by(|a, b| b.score.total_cmp(&a.score));
    peaks
}

/// The `k` highest local maxima.
pub fn top_k_peaks(plane: &Plane, k: usize) -> Vec<Peak> {
    let mut peaks = local_maxima(plane);
    peaks.truncate(k);
    peaks
}

/// A predicted box with its similarity score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub score: f64,
}

/// Boxes of `box_dims` centred on every local maximum whose value exceeds
/// `threshold`, clipped to the array.
pub fn detect_matches(plane: &Plane, threshold: f64, box_dims: (usize, usize)) -> Vec<Detection> {
    let (w, h) = plane.dims();
    local_maxima(plane)
        .into_iter()
        .take_while(|p| p.score > threshold)
        .map(|p| Detection {
            bbox: BoundingBox::centered(p.x as i64, p.y as i64, box_dims.0 as i64, box_dims.1 as i64)
                .expect("box dims >= 1")
                .clip_into(w, h),
            score: p.score,
        })
        .collect()
}

/// Detections and ground truth for one (template, image) pairing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionCase {
    pub detections: Vec<Detection>,
    pub ground_truth: Vec<BoundingBox>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    /// Largest f-score over all thresholds.
    pub best_fscore: f64,
    pub best_threshold: f64,
}

/// `n` evenly spaced thresholds from 0 to `max_score` inclusive.
pub fn uniform_thresholds(max_score: f64, n: usize) -> Vec<f64> {
    let top = if max_score > 0.0 { max_score } else { 1.0 };
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Counts for one case at one threshold.
///
/// Detections scoring above `threshold` are visited by descending score; each
/// claims the unclaimed ground-truth box it overlaps most, provided the IoU is
/// at least `iou_min`. Claiming detections are true positives, the rest false
/// positives, and unclaimed ground truth false negatives.
pub fn match_case(case: &DetectionCase, threshold: f64, iou_min: f64) -> (usize, usize, usize) {
    let mut dets: Vec<&Detection> = case.detections.iter().filter(|d| d.score > threshold).collect();
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut claimed = vec![false; case.ground_truth.len()];
    let (mut tp, mut fp) = (0, 0);
    for d in dets {
        let best = case
            .ground_truth
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed[*i])
            .map(|(i, g)| (i, iou(&d.bbox, g)))
            .filter(|&(_, v)| v >= iou_min)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, _)) => {
                claimed[i] = true;
                tp += 1;
            }
            None => fp += 1,
        }
    }
    let fn_ = claimed.iter().filter(|c| !**c).count();
    (tp, fp, fn_)
}

/// Pooled precision/recall over all cases for each threshold.
pub fn pr_curve(cases: &[DetectionCase], iou_min: f64, thresholds: &[f64]) -> Result<PrCurve> {
    check_thresholds(thresholds)?;
    let points: Vec<PrPoint> = thresholds
        .iter()
        .map(|&t| {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for case in cases {
                let (a, b, c) = match_case(case, t, iou_min);
                tp += a;
                fp += b;
                fn_ += c;
            }
            let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
            PrPoint {
                threshold: t,
                tp,
                fp,
                fn_,
                precision: if tp + fp == 0 { 1.0 } else { ratio(tp, tp + fp) },
                recall: ratio(tp, tp + fn_),
                fscore: ratio(2 * tp, 2 * tp + fp + fn_),
            }
        })
        .collect();
    let best = points
        .iter()
        .max_by(|a, b| a.fscore.total_cmp(&b.fscore))
        .expect("non-empty thresholds");
    Ok(PrCurve {
        best_fscore: best.fscore,
        best_threshold: best.threshold,
        points,
    })
}
