//! Benchmark protocols: pair correspondence, sequence correspondence,
//! sequence detection and parameter sweeps.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::datasets::{PairCase, SequenceCase};
use crate::dim::{self, bank_from_specs, match_bank, DimParams, PatchSpec};
use crate::error::{Error, Result};
use crate::eval::{
    detect_matches, iou, pr_curve, success_curve, top_k_peaks, uniform_thresholds, BoundingBox, DetectionCase,
    PrCurve, SuccessCurve,
};
use crate::image::{Colorspace, Image, Plane};
use crate::io::load_image;
use crate::keypoints::{box_around, filter_keypoints_vgg, harris_detect, Keypoint, QueryView, SelectionStrategy};
use crate::zncc::zncc_match;

/// Peaks inspected by the top-k variant of the pair benchmark.
pub const TOP_K: usize = 7;
/// Keypoint spacing cap for the sequence protocols.
pub const KEYPOINT_SPACING: usize = 24;
/// Templates per sequence in the correspondence protocol.
pub const CORRESPOND_KEYPOINTS: usize = 25;
/// Templates per sequence in the detection protocol.
pub const DETECT_KEYPOINTS: usize = 10;
/// Overlap needed for a detection to count.
pub const DETECT_IOU: f64 = 0.5;
/// Thresholds on the precision/recall grid.
pub const PR_THRESHOLDS: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dim,
    Zncc,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dim" => Ok(Method::Dim),
            "zncc" => Ok(Method::Zncc),
            _ => Err(Error::InvalidParam(format!("unknown method {s:?}"))),
        }
    }
}

/// Where additional DIM templates come from.
#[derive(Clone, Debug, PartialEq)]
pub enum AdditionalKind {
    MaxCorrelation,
    Keypoint,
    Random,
    /// Max-correlation placements in an unrelated image.
    Other(PathBuf),
}

impl FromStr for AdditionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(p) = s.strip_prefix("other:") {
            return Ok(AdditionalKind::Other(PathBuf::from(p)));
        }
        match s.to_ascii_lowercase().as_str() {
            "maxcorr" => Ok(AdditionalKind::MaxCorrelation),
            "keypoint" => Ok(AdditionalKind::Keypoint),
            "random" => Ok(AdditionalKind::Random),
            _ => Err(Error::InvalidParam(format!(
                "unknown additional-template source {s:?} (maxcorr, keypoint, random, other:<path>)"
            ))),
        }
    }
}

/// How one template is matched against one query image.
#[derive(Clone, Debug)]
pub struct MatchConfig {
    pub method: Method,
    pub params: DimParams,
    pub additional: AdditionalKind,
    pub max_additional: usize,
    pub seed: u64,
    /// Colourspace for ZNCC on colour images.
    pub zncc_colorspace: Colorspace,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            method: Method::Dim,
            params: DimParams::default(),
            additional: AdditionalKind::MaxCorrelation,
            max_additional: 4,
            seed: 0,
            zncc_colorspace: Colorspace::Hsv,
        }
    }
}

impl MatchConfig {
    pub fn zncc() -> Self {
        Self {
            method: Method::Zncc,
            ..Self::default()
        }
    }

    pub fn dim(max_additional: usize) -> Self {
        Self {
            max_additional,
            ..Self::default()
        }
    }

    /// Loads the unrelated image for [`AdditionalKind::Other`].
    pub fn load_other(&self) -> Result<Option<Image>> {
        match &self.additional {
            AdditionalKind::Other(p) => load_image(p).map(Some),
            _ => Ok(None),
        }
    }

    fn strategy<'a>(&self, other: Option<&'a Image>) -> Result<SelectionStrategy<'a>> {
        Ok(match &self.additional {
            AdditionalKind::MaxCorrelation => SelectionStrategy::MaxCorrelation,
            AdditionalKind::Keypoint => SelectionStrategy::Keypoint,
            AdditionalKind::Random => SelectionStrategy::Random { seed: self.seed },
            AdditionalKind::Other(p) => SelectionStrategy::FromOtherImage {
                source: other.ok_or_else(|| {
                    Error::InvalidParam(format!("unrelated image {} not loaded", p.display()))
                })?,
                inner: Box::new(SelectionStrategy::MaxCorrelation),
            },
        })
    }
}

fn zncc_map(img: &Image, template: &Image, colorspace: Colorspace) -> Result<Plane> {
    let space = if img.is_color() { colorspace } else { Colorspace::Gray };
    Ok(zncc_match(img, template, space)?.map)
}

/// Similarity of the `target` region of `img1` over `img2`, with the
/// additional templates DIM used.
pub fn correspondence_map(
    img1: &Image,
    target: &BoundingBox,
    img2: &Image,
    cfg: &MatchConfig,
    other: Option<&Image>,
) -> Result<(Plane, Vec<BoundingBox>)> {
    match cfg.method {
        Method::Zncc => Ok((zncc_map(img2, &img1.crop(target)?, cfg.zncc_colorspace)?, Vec::new())),
        Method::Dim => {
            let strategy = cfg.strategy(other)?;
            let extra = crate::keypoints::select_additional(img1, target, &strategy, cfg.max_additional)?;
            let source = other.filter(|_| matches!(cfg.additional, AdditionalKind::Other(_))).unwrap_or(img1);
            let specs: Vec<PatchSpec<'_>> = extra.iter().map(|b| PatchSpec::new(source, *b)).collect();
            let field = dim::match_templates(img2, PatchSpec::new(img1, *target), &specs, &cfg.params)?;
            Ok((field.into_maps().swap_remove(0), extra))
        }
    }
}

/// Box of `dims` centred on the first maximum of `map`. Not clipped.
pub fn predicted_box(map: &Plane, dims: (usize, usize)) -> BoundingBox {
    let (x, y, _) = map.argmax();
    box_around(x as f64, y as f64, dims)
}

/// Outcome of one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairOutcome {
    pub id: String,
    pub predicted: BoundingBox,
    pub iou: f64,
    /// Best IoU among the boxes around the top local maxima.
    pub iou_top_k: f64,
    pub n_additional: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct PairReport {
    pub outcomes: Vec<PairOutcome>,
    pub curve: SuccessCurve,
    pub curve_top_k: SuccessCurve,
    pub seconds: f64,
}

fn evaluate_pair(case: &PairCase, cfg: &MatchConfig, other: Option<&Image>) -> Result<PairOutcome> {
    let start = Instant::now();
    let wrap = |e: Error| match e {
        Error::Dataset { .. } => e,
        other => Error::dataset(&case.id, other.to_string()),
    };
    let (img1, img2) = case.load_images().map_err(wrap)?;
    let (map, extra) = correspondence_map(&img1, &case.gt_box1, &img2, cfg, other).map_err(wrap)?;
    let dims = (case.gt_box1.w as usize, case.gt_box1.h as usize);
    let predicted = predicted_box(&map, dims);
    let iou_top_k = top_k_peaks(&map, TOP_K)
        .iter()
        .map(|p| iou(&box_around(p.x as f64, p.y as f64, dims), &case.gt_box2))
        .fold(iou(&predicted, &case.gt_box2), f64::max);
    Ok(PairOutcome {
        id: case.id.clone(),
        predicted,
        iou: iou(&predicted, &case.gt_box2),
        iou_top_k,
        n_additional: extra.len(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Pair correspondence benchmark: template from the first frame, predicted
/// location at the similarity maximum in the second.
pub fn run_pairs(cases: &[PairCase], cfg: &MatchConfig) -> Result<PairReport> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("no pair cases"));
    }
    let start = Instant::now();
    let other = cfg.load_other()?;
    let outcomes = cases
        .par_iter()
        .map(|c| evaluate_pair(c, cfg, other.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let ious: Vec<f64> = outcomes.iter().map(|o| o.iou).collect();
    let top: Vec<f64> = outcomes.iter().map(|o| o.iou_top_k).collect();
    let grid = SuccessCurve::default_thresholds();
    Ok(PairReport {
        curve: success_curve(&ious, &grid)?,
        curve_top_k: success_curve(&top, &grid)?,
        outcomes,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn query_views(seq: &SequenceCase) -> Vec<QueryView> {
    seq.images[1..]
        .iter()
        .zip(&seq.homographies)
        .map(|(img, h)| QueryView {
            dims: img.dims(),
            homography: *h,
        })
        .collect()
}

/// Keypoints of the first image that survive the rejection rules, at most `keep`.
pub fn sequence_keypoints(seq: &SequenceCase, template: usize, keep: usize) -> Result<Vec<Keypoint>> {
    let candidates = harris_detect(&seq.images[0], usize::MAX, 0)?.keypoints;
    Ok(filter_keypoints_vgg(
        &candidates,
        (template, template),
        seq.images[0].dims(),
        &query_views(seq),
        KEYPOINT_SPACING,
        keep,
    ))
}

fn ground_truth_box(seq: &SequenceCase, query: usize, kp: &Keypoint, template: usize) -> Result<BoundingBox> {
    let (u, v) = seq.homographies[query - 1].apply(kp.x as f64, kp.y as f64)?;
    Ok(box_around(u, v, (template, template)))
}

fn template_box(kp: &Keypoint, template: usize) -> BoundingBox {
    box_around(kp.x as f64, kp.y as f64, (template, template))
}

/// Similarity maps of all `templates` (boxes in `sources`) over `query`; DIM
/// uses them as one competing bank.
fn bank_maps(
    templates: &[PatchSpec<'_>],
    query: &Image,
    method: Method,
    params: &DimParams,
    zncc_colorspace: Colorspace,
) -> Result<Vec<Plane>> {
    match method {
        Method::Dim => {
            let bank = bank_from_specs(templates, params)?;
            Ok(match_bank(query, &bank, params)?.into_maps())
        }
        Method::Zncc => templates
            .par_iter()
            .map(|s| zncc_map(query, &s.image.crop(&s.bbox)?, zncc_colorspace))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceMatch {
    pub sequence: String,
    pub keypoint: Keypoint,
    /// Index of the query image, 1..=5.
    pub query: usize,
    pub iou: f64,
}

#[derive(Clone, Debug)]
pub struct CorrespondReport {
    pub template: usize,
    pub matches: Vec<SequenceMatch>,
    pub per_sequence: Vec<(String, SuccessCurve)>,
    pub pooled: SuccessCurve,
    pub seconds: f64,
}

/// Sequence correspondence: templates around keypoints of image 1, matched
/// in images 2..6; DIM matches all of a sequence's templates as one bank.
pub fn run_sequence_correspond(
    seqs: &[SequenceCase],
    method: Method,
    params: &DimParams,
    template: usize,
) -> Result<CorrespondReport> {
    if seqs.is_empty() {
        return Err(Error::EmptyInput("no sequences"));
    }
    let start = Instant::now();
    let grid = SuccessCurve::default_thresholds();
    let mut matches = Vec::new();
    let mut per_sequence = Vec::new();
    for seq in seqs {
        let wrap = |e: Error| Error::dataset(&seq.name, e.to_string());
        let kps = sequence_keypoints(seq, template, CORRESPOND_KEYPOINTS).map_err(wrap)?;
        if kps.is_empty() {
            return Err(Error::dataset(&seq.name, "no usable keypoints"));
        }
        let specs: Vec<PatchSpec<'_>> = kps
            .iter()
            .map(|k| PatchSpec::new(&seq.images[0], template_box(k, template)))
            .collect();
        let mut ious = Vec::new();
        for q in 1..seq.images.len() {
            let maps = bank_maps(&specs, &seq.images[q], method, params, Colorspace::Hsv).map_err(wrap)?;
            for (kp, map) in kps.iter().zip(&maps) {
                let gt = ground_truth_box(seq, q, kp, template).map_err(wrap)?;
                let v = iou(&predicted_box(map, (template, template)), &gt);
                ious.push(v);
                matches.push(SequenceMatch {
                    sequence: seq.name.clone(),
                    keypoint: *kp,
                    query: q,
                    iou: v,
                });
            }
        }
        per_sequence.push((seq.name.clone(), success_curve(&ious, &grid)?));
    }
    let all: Vec<f64> = matches.iter().map(|m| m.iou).collect();
    Ok(CorrespondReport {
        template,
        pooled: success_curve(&all, &grid)?,
        matches,
        per_sequence,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug)]
pub struct DetectReport {
    pub template: usize,
    pub templates: usize,
    pub queries: usize,
    pub curve: PrCurve,
    pub seconds: f64,
}

/// Sequence detection: templates from image 1 of every colour sequence are
/// matched against images 2..6 of every sequence; every local maximum above
/// a global threshold is a detection.
pub fn run_sequence_detect(
    seqs: &[SequenceCase],
    method: Method,
    params: &DimParams,
    template: usize,
    per_sequence: usize,
) -> Result<DetectReport> {
    let start = Instant::now();
    let colour: Vec<&SequenceCase> = seqs.iter().filter(|s| s.is_color()).collect();
    if colour.is_empty() {
        return Err(Error::EmptyInput("no colour sequences"));
    }
    // (sequence index, keypoint)
    let mut owners: Vec<(usize, Keypoint)> = Vec::new();
    let mut specs: Vec<PatchSpec<'_>> = Vec::new();
    for (n, seq) in colour.iter().enumerate() {
        let kps = sequence_keypoints(seq, template, per_sequence).map_err(|e| Error::dataset(&seq.name, e.to_string()))?;
        for k in kps {
            owners.push((n, k));
            specs.push(PatchSpec::new(&seq.images[0], template_box(&k, template)));
        }
    }
    if specs.is_empty() {
        return Err(Error::EmptyInput("no usable keypoints"));
    }
    let mut cases = Vec::new();
    let mut queries = 0;
    for (n, seq) in colour.iter().enumerate() {
        for q in 1..seq.images.len() {
            queries += 1;
            let img = &seq.images[q];
            let maps = bank_maps(&specs, img, method, params, Colorspace::Hsv)
                .map_err(|e| Error::dataset(&seq.name, e.to_string()))?;
            for ((owner, kp), map) in owners.iter().zip(&maps) {
                let ground_truth = if *owner == n {
                    vec![ground_truth_box(seq, q, kp, template)?]
                } else {
                    Vec::new()
                };
                cases.push(DetectionCase {
                    detections: detect_matches(map, 0.0, (template, template)),
                    ground_truth,
                });
            }
        }
    }
    let top = cases
        .iter()
        .flat_map(|c| c.detections.iter().map(|d| d.score))
        .fold(0.0, f64::max);
    let curve = pr_curve(&cases, DETECT_IOU, &uniform_thresholds(top, PR_THRESHOLDS))?;
    Ok(DetectReport {
        template,
        templates: specs.len(),
        queries,
        curve,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Parameters varied by the sensitivity sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Sigma,
    Epsilon1,
    Epsilon2,
    Lambda,
    Iterations,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma" => Ok(SweepParam::Sigma),
            "epsilon1" => Ok(SweepParam::Epsilon1),
            "epsilon2" => Ok(SweepParam::Epsilon2),
            "lambda" => Ok(SweepParam::Lambda),
            "iterations" => Ok(SweepParam::Iterations),
            _ => Err(Error::InvalidParam(format!(
                "unknown sweep parameter {s:?} (sigma, epsilon1, epsilon2, lambda, iterations)"
            ))),
        }
    }
}

/// `base` with one parameter multiplied by `factor`. Iteration counts are
/// rounded and kept at one or more; `bank_len` resolves the default count.
pub fn scaled_params(base: &DimParams, param: SweepParam, factor: f64, bank_len: usize) -> Result<DimParams> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::InvalidParam(format!("sweep factor must be > 0, got {factor}")));
    }
    let mut p = base.clone();
    match param {
        SweepParam::Sigma => p.sigma_scale *= factor,
        SweepParam::Epsilon1 => p.epsilon1_scale *= factor,
        SweepParam::Epsilon2 => p.epsilon2 *= factor,
        SweepParam::Lambda => p.lambda *= factor,
        SweepParam::Iterations => {
            let n = base.resolved_iterations(bank_len) as f64 * factor;
            p.iterations = Some((n.round() as usize).max(1));
        }
    }
    p.validate()?;
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub factor: f64,
    pub auc: f64,
    pub auc_top_k: f64,
}

/// Pair-benchmark AUC with one parameter scaled by each factor.
pub fn run_sweep(cases: &[PairCase], cfg: &MatchConfig, param: SweepParam, factors: &[f64]) -> Result<Vec<SweepPoint>> {
    factors
        .iter()
        .map(|&f| {
            let mut c = cfg.clone();
            c.params = scaled_params(&cfg.params, param, f, 1 + cfg.max_additional)?;
            let r = run_pairs(cases, &c)?;
            Ok(SweepPoint {
                factor: f,
                auc: r.curve.auc,
                auc_top_k: r.curve_top_k.auc,
            })
        })
        .collect()
}
