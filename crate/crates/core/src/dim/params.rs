use crate::conv::ConvMode;
use crate::error::{Error, Result};
use crate::image::Colorspace;

use super::bank::TemplateBank;

/// Settings for the DIM matcher.
#[derive(Clone, Debug, PartialEq)]
pub struct DimParams {
    /// Floor on the reconstruction before division.
    pub epsilon2: f64,
    /// Floor on similarity values before the multiplicative update. `None`
    /// derives it from the bank as `epsilon2 / max(sum_j v_ji)`.
    pub epsilon1: Option<f64>,
    /// Multiplier applied to `epsilon1` (derived or explicit).
    pub epsilon1_scale: f64,
    /// `None`: 10 iterations for banks of up to 31 templates, 20 for larger ones.
    pub iterations: Option<usize>,
    /// Size of the elliptical pooling region relative to the template.
    pub lambda: f64,
    /// Multiplier on the preprocessing Gaussian (half the smaller template side).
    pub sigma_scale: f64,
    pub conv_mode: ConvMode,
    /// Colourspace colour images are converted to before preprocessing.
    pub colorspace: Colorspace,
}

impl Default for DimParams {
    fn default() -> Self {
        Self {
            epsilon2: 1e-2,
            epsilon1: None,
            epsilon1_scale: 1.0,
            iterations: None,
            lambda: 0.025,
            sigma_scale: 1.0,
            conv_mode: ConvMode::Auto,
            colorspace: Colorspace::CieLab,
        }
    }
}

/// Bank size up to which the shorter iteration schedule is used.
pub const SMALL_BANK: usize = 31;

impl DimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} must be > 0, got {v}")))
            }
        };
        positive("epsilon2", self.epsilon2)?;
        positive("epsilon1_scale", self.epsilon1_scale)?;
        positive("sigma_scale", self.sigma_scale)?;
        if let Some(e) = self.epsilon1 {
            positive("epsilon1", e)?;
        }
        if self.iterations == Some(0) {
            return Err(Error::InvalidParam("iterations must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParam(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    pub fn resolved_epsilon1(&self, bank: &TemplateBank) -> f64 {
        let base = self
            .epsilon1
            .unwrap_or_else(|| self.epsilon2 / bank.max_summed_v());
        base * self.epsilon1_scale
    }

    pub fn resolved_iterations(&self, bank_len: usize) -> usize {
        self.iterations
            .unwrap_or(if bank_len <= SMALL_BANK { 10 } else { 20 })
    }

    pub fn sigma(&self, template_w: usize, template_h: usize) -> f64 {
        self.sigma_scale * crate::preprocess::default_sigma(template_w, template_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let p = DimParams::default();
        assert_eq!(p.epsilon2, 0.01);
        assert_eq!(p.lambda, 0.025);
        assert_eq!(p.resolved_iterations(1), 10);
        assert_eq!(p.resolved_iterations(31), 10);
        assert_eq!(p.resolved_iterations(70), 20);
        assert_eq!(p.sigma(17, 33), 8.5);
        p.validate().unwrap();
    }

    #[test]
    fn invalid() {
        for p in [
            DimParams { epsilon2: 0.0, ..Default::default() },
            DimParams { epsilon1: Some(-1.0), ..Default::default() },
            DimParams { iterations: Some(0), ..Default::default() },
            DimParams { lambda: -0.1, ..Default::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }
}
