//! Template matching by divisive input modulation.

mod bank;
mod field;
mod params;
mod postprocess;
mod solver;

pub use bank::{build_bank, Template, TemplateBank, TemplateOrigin, TemplateRole};
pub use field::{crop_field, SimilarityField};
pub use params::{DimParams, SMALL_BANK};
pub use postprocess::{ellipse_kernel, postprocess_sum};
pub use solver::{dim_solve, dim_step, kl_divergence, reconstruct, DimSolver};

use crate::error::{Error, Result};
use crate::eval::BoundingBox;
use crate::image::{convert_colorspace, Image, Plane};
use crate::preprocess::{preprocess_with_sigma, ChannelStack};

/// A template region: `bbox` within `image`.
#[derive(Clone, Copy, Debug)]
pub struct PatchSpec<'a> {
    pub image: &'a Image,
    pub bbox: BoundingBox,
}

impl<'a> PatchSpec<'a> {
    pub fn new(image: &'a Image, bbox: BoundingBox) -> Self {
        Self { image, bbox }
    }
}

/// Converts colour images to the configured colourspace and preprocesses
/// for `template_w`x`template_h` templates.
pub fn prepare_input(
    img: &Image,
    template_w: usize,
    template_h: usize,
    params: &DimParams,
) -> Result<ChannelStack> {
    let converted;
    let src = if img.is_color() {
        converted = convert_colorspace(img, params.colorspace)?;
        &converted
    } else {
        img
    };
    preprocess_with_sigma(src, template_w, template_h, params.sigma(template_w, template_h))
}

/// Cuts every patch out of its preprocessed source image. Each distinct
/// source image is preprocessed once.
pub fn extract_templates(specs: &[PatchSpec<'_>], params: &DimParams) -> Result<Vec<Vec<Plane>>> {
    let Some(first) = specs.first() else {
        return Err(Error::EmptyInput("no template patches"));
    };
    let (tw, th) = (first.bbox.w, first.bbox.h);
    if specs.iter().any(|s| (s.bbox.w, s.bbox.h) != (tw, th)) {
        return Err(Error::DimensionMismatch("all templates must share one size".into()));
    }
    let mut prepared: Vec<(&Image, ChannelStack)> = Vec::new();
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let idx = match prepared.iter().position(|(img, _)| std::ptr::eq(*img, spec.image)) {
            Some(i) => i,
            None => {
                prepared.push((spec.image, prepare_input(spec.image, tw as usize, th as usize, params)?));
                prepared.len() - 1
            }
        };
        out.push(prepared[idx].1.extract(&spec.bbox)?);
    }
    Ok(out)
}

/// Bank from target and additional patches; origins record the box and the
/// index of the distinct source image.
pub fn bank_from_specs(specs: &[PatchSpec<'_>], params: &DimParams) -> Result<TemplateBank> {
    let patches = extract_templates(specs, params)?;
    let mut sources: Vec<&Image> = Vec::new();
    let origins = specs
        .iter()
        .map(|s| {
            let n = sources
                .iter()
                .position(|img| std::ptr::eq(*img, s.image))
                .unwrap_or_else(|| {
                    sources.push(s.image);
                    sources.len() - 1
                });
            Some(TemplateOrigin {
                source: format!("source-{n}"),
                bbox: s.bbox,
            })
        })
        .collect();
    build_bank(&patches)?.with_origins(origins)
}

/// Matches a prepared bank against `img`: preprocess, solve, crop to the
/// image and pool over the elliptical neighbourhood.
pub fn match_bank(img: &Image, bank: &TemplateBank, params: &DimParams) -> Result<SimilarityField> {
    let (tw, th) = bank.template_dims();
    let x = prepare_input(img, tw, th, params)?;
    if x.channels() != bank.channels() {
        return Err(Error::DimensionMismatch(format!(
            "image encodes to {} channels, templates have {}",
            x.channels(),
            bank.channels()
        )));
    }
    let y = dim_solve(&x, bank, params)?;
    postprocess_sum(&crop_field(&y)?, tw, th, params.lambda, params.conv_mode)
}

/// Full pipeline for one query image. Map 0 of the result belongs to the
/// target template; the others follow `additional` in order.
pub fn match_templates(
    img: &Image,
    target: PatchSpec<'_>,
    additional: &[PatchSpec<'_>],
    params: &DimParams,
) -> Result<SimilarityField> {
    params.validate()?;
    let mut specs = Vec::with_capacity(1 + additional.len());
    specs.push(target);
    specs.extend_from_slice(additional);
    let bank = bank_from_specs(&specs, params)?;
    match_bank(img, &bank, params)
}
