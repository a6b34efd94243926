use crate::error::{Error, Result};
use crate::eval::BoundingBox;
use crate::image::Plane;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TemplateRole {
    Target,
    Additional,
}

/// Where a template was cut from.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateOrigin {
    /// Free-form identifier of the source image.
    pub source: String,
    pub bbox: BoundingBox,
}

#[derive(Clone, Debug)]
pub struct Template {
    /// Per-channel weights summing to one over all channels and pixels.
    pub w: Vec<Plane>,
    /// `w` rescaled so its largest value over all channels is one.
    pub v: Vec<Plane>,
    /// Ratio `v / w`.
    pub v_scale: f64,
    pub role: TemplateRole,
    pub origin: Option<TemplateOrigin>,
}

/// Templates competing to explain an image. All share width, height and
/// channel count; the first one is the target.
#[derive(Clone, Debug)]
pub struct TemplateBank {
    templates: Vec<Template>,
    width: usize,
    height: usize,
    channels: usize,
}

impl TemplateBank {
    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn template_dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn template(&self, j: usize) -> &Template {
        &self.templates[j]
    }

    pub fn w(&self, j: usize, i: usize) -> &Plane {
        &self.templates[j].w[i]
    }

    pub fn v(&self, j: usize, i: usize) -> &Plane {
        &self.templates[j].v[i]
    }

    /// Largest total weight any input pixel receives from the bank: the
    /// maximum over channels and kernel positions of `sum_j v_ji`.
    pub fn max_summed_v(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.channels {
            let mut acc = vec![0.0; self.width * self.height];
            for t in &self.templates {
                for (a, &b) in acc.iter_mut().zip(t.v[i].data()) {
                    *a += b;
                }
            }
            best = acc.into_iter().fold(best, f64::max);
        }
        best
    }

    pub fn with_origins(mut self, origins: Vec<Option<TemplateOrigin>>) -> Result<Self> {
        if origins.len() != self.templates.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} origins for {} templates",
                origins.len(),
                self.templates.len()
            )));
        }
        for (t, o) in self.templates.iter_mut().zip(origins) {
            t.origin = o;
        }
        Ok(self)
    }
}

/// Normalises preprocessed patches into a bank. The first patch is the
/// target, the rest are additional templates.
pub fn build_bank(patches: &[Vec<Plane>]) -> Result<TemplateBank> {
    let Some(first) = patches.first() else {
        return Err(Error::EmptyInput("template bank needs at least one patch"));
    };
    let channels = first.len();
    if channels == 0 {
        return Err(Error::EmptyInput("template patch has no channels"));
    }
    let (width, height) = first[0].dims();
    let mut templates = Vec::with_capacity(patches.len());
    for (j, patch) in patches.iter().enumerate() {
        if patch.len() != channels || patch.iter().any(|p| p.dims() != (width, height)) {
            return Err(Error::DimensionMismatch(format!(
                "patch {j} does not match the {width}x{height}x{channels} shape of patch 0"
            )));
        }
        if patch.iter().any(|p| p.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite())) {
            return Err(Error::DegenerateTemplate(format!(
                "patch {j} has negative or non-finite values"
            )));
        }
        let total: f64 = patch.iter().map(Plane::sum).sum();
        let peak = patch.iter().map(Plane::max).fold(0.0, f64::max);
        if !(total > 0.0) || !(peak > 0.0) {
            return Err(Error::DegenerateTemplate(format!("patch {j} is all zero")));
        }
        templates.push(Template {
            w: patch.iter().map(|p| p.map(|v| v / total)).collect(),
            v: patch.iter().map(|p| p.map(|v| v / peak)).collect(),
            v_scale: total / peak,
            role: if j == 0 {
                TemplateRole::Target
            } else {
                TemplateRole::Additional
            },
            origin: None,
        });
    }
    Ok(TemplateBank {
        templates,
        width,
        height,
        channels,
    })
}
