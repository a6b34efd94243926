use crate::conv::{conv2_same, ConvMode};
use crate::error::Result;
use crate::image::Plane;

use super::field::SimilarityField;

/// Binary kernel covering an ellipse `lambda * template_w` wide and
/// `lambda * template_h` tall.
///
/// Offset `(dx, dy)` is inside when `(2 dx / (lambda w))^2 + (2 dy / (lambda h))^2 <= 1`;
/// a zero offset contributes nothing to its axis term, so the centre pixel is
/// always included and tiny ellipses degrade to a single pixel.
pub fn ellipse_kernel(template_w: usize, template_h: usize, lambda: f64) -> Plane {
    let semi_x = 0.5 * lambda * template_w as f64;
    let semi_y = 0.5 * lambda * template_h as f64;
    let rx = semi_x.floor() as usize;
    let ry = semi_y.floor() as usize;
    let term = |d: f64, s: f64| if d == 0.0 { 0.0 } else { (d / s).powi(2) };
    Plane::from_fn(2 * rx + 1, 2 * ry + 1, |x, y| {
        let dx = x as f64 - rx as f64;
        let dy = y as f64 - ry as f64;
        if term(dx, semi_x) + term(dy, semi_y) <= 1.0 {
            1.0
        } else {
            0.0
        }
    })
}

fn pooled(map: &Plane, kernel: &Plane, mode: ConvMode) -> Result<Plane> {
    let (w, h) = map.dims();
    let (kw, kh) = kernel.dims();
    if kw <= w && kh <= h {
        return conv2_same(map, kernel, mode);
    }
    // embed in a zero canvas large enough for the kernel, then cut back out
    let (cw, ch) = (w.max(kw), h.max(kh));
    let (ox, oy) = ((cw - w) / 2, (ch - h) / 2);
    let mut canvas = Plane::zeros(cw, ch);
    canvas.paste(map, ox, oy)?;
    conv2_same(&canvas, kernel, mode)?.crop(ox, oy, w, h)
}

/// Sums each similarity map over the elliptical neighbourhood given by
/// [`ellipse_kernel`].
pub fn postprocess_sum(
    field: &SimilarityField,
    template_w: usize,
    template_h: usize,
    lambda: f64,
    mode: ConvMode,
) -> Result<SimilarityField> {
    let kernel = ellipse_kernel(template_w, template_h, lambda);
    if kernel.len() == 1 {
        return Ok(field.clone());
    }
    let maps = field
        .maps()
        .iter()
        .map(|m| Ok(pooled(m, &kernel, mode)?.map(|v| v.max(0.0))))
        .collect::<Result<Vec<_>>>()?;
    Ok(field.with_maps(maps))
}
