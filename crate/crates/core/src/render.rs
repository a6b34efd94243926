//! Minimal raster drawing for report images.

use crate::eval::BoundingBox;
use crate::image::{Image, Plane};

pub(crate) type Color = [f64; 3];

pub(crate) const PALETTE: [Color; 6] = [
    [0.85, 0.1, 0.1],
    [0.1, 0.35, 0.85],
    [0.1, 0.6, 0.2],
    [0.9, 0.55, 0.0],
    [0.55, 0.2, 0.7],
    [0.3, 0.3, 0.3],
];

/// RGB copy of an image; grayscale is replicated into three channels.
pub(crate) fn to_rgb(img: &Image) -> Image {
    if img.is_color() {
        img.clone()
    } else {
        let p = img.plane(0).clone();
        Image::from_planes(vec![p.clone(), p.clone(), p]).expect("three planes")
    }
}

fn put(planes: &mut [Plane], x: i64, y: i64, c: Color) {
    let (w, h) = planes[0].dims();
    if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
        for (p, v) in planes.iter_mut().zip(c) {
            p.set(x as usize, y as usize, v);
        }
    }
}

fn line(planes: &mut [Plane], (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Color) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        put(planes, x, y, c);
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Draws box outlines onto an RGB copy of `img`.
pub(crate) fn annotate(img: &Image, boxes: &[(BoundingBox, Color)]) -> Image {
    let mut planes = to_rgb(img).into_planes();
    for (b, c) in boxes {
        let (l, t, r, btm) = (b.x, b.y, b.right() - 1, b.bottom() - 1);
        line(&mut planes, (l, t), (r, t), *c);
        line(&mut planes, (r, t), (r, btm), *c);
        line(&mut planes, (r, btm), (l, btm), *c);
        line(&mut planes, (l, btm), (l, t), *c);
    }
    Image::from_planes(planes).expect("three planes")
}

/// Line plot of curves over the unit square on a white canvas with a frame
/// and 0.1 grid.
pub(crate) fn plot_curves(series: &[Vec<(f64, f64)>], width: usize, height: usize) -> Image {
    let margin = 20i64;
    let mut planes = vec![Plane::filled(width, height, 1.0); 3];
    let (pw, ph) = (width as i64 - 2 * margin, height as i64 - 2 * margin);
    let to_px = |(x, y): (f64, f64)| {
        let x = x.clamp(0.0, 1.0);
        let y = y.clamp(0.0, 1.0);
        (
            margin + (x * pw as f64).round() as i64,
            margin + ph - (y * ph as f64).round() as i64,
        )
    };
    let grid = [0.85; 3];
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        line(&mut planes, to_px((t, 0.0)), to_px((t, 1.0)), grid);
        line(&mut planes, to_px((0.0, t)), to_px((1.0, t)), grid);
    }
    let frame = [0.0; 3];
    line(&mut planes, to_px((0.0, 0.0)), to_px((1.0, 0.0)), frame);
    line(&mut planes, to_px((0.0, 0.0)), to_px((0.0, 1.0)), frame);
    for (n, s) in series.iter().enumerate() {
        let c = PALETTE[n % PALETTE.len()];
        for pair in s.windows(2) {
            line(&mut planes, to_px(pair[0]), to_px(pair[1]), c);
        }
    }
    Image::from_planes(planes).expect("three planes")
}
