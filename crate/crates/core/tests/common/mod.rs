//! Naive reference implementations shared by the integration tests.
#![allow(dead_code)]

use dimmatch::{Image, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `out(x, y) = sum_{u, v} p(x + u - cx, y + v - cy) k(u, v)`, zero outside.
pub fn naive_xcorr(p: &Plane, k: &Plane) -> Plane {
    let (w, h) = p.dims();
    let (kw, kh) = k.dims();
    let (cx, cy) = (((kw - 1) / 2) as i64, ((kh - 1) / 2) as i64);
    Plane::from_fn(w, h, |x, y| {
        let mut s = 0.0;
        for v in 0..kh {
            for u in 0..kw {
                let (px, py) = (x as i64 + u as i64 - cx, y as i64 + v as i64 - cy);
                if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                    s += p.get(px as usize, py as usize) * k.get(u, v);
                }
            }
        }
        s
    })
}

/// Convolution: correlation with the kernel rotated by 180 degrees.
pub fn naive_conv(p: &Plane, k: &Plane) -> Plane {
    naive_xcorr(p, &k.rot180())
}

/// Double-loop ZNCC of one channel; overhanging placements and flat patches 0.
pub fn naive_zncc(img: &Plane, tpl: &Plane) -> Plane {
    let (w, h) = img.dims();
    let (tw, th) = tpl.dims();
    let (cx, cy) = ((tw - 1) / 2, (th - 1) / 2);
    let n = (tw * th) as f64;
    let tm = tpl.sum() / n;
    let tn: f64 = tpl.data().iter().map(|v| (v - tm).powi(2)).sum::<f64>().sqrt();
    Plane::from_fn(w, h, |x, y| {
        if x < cx || y < cy || x - cx + tw > w || y - cy + th > h {
            return 0.0;
        }
        let (x0, y0) = (x - cx, y - cy);
        let mut pm = 0.0;
        for v in 0..th {
            for u in 0..tw {
                pm += img.get(x0 + u, y0 + v);
            }
        }
        pm /= n;
        let (mut num, mut pn) = (0.0, 0.0);
        for v in 0..th {
            for u in 0..tw {
                let d = img.get(x0 + u, y0 + v) - pm;
                num += d * (tpl.get(u, v) - tm);
                pn += d * d;
            }
        }
        if pn <= 1e-20 {
            0.0
        } else {
            num / (pn.sqrt() * tn)
        }
    })
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |_, _| rng.random_range(0.0..1.0))
}

pub fn random_image(seed: u64, w: usize, h: usize, channels: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_planes((0..channels).map(|_| random_plane(&mut rng, w, h)).collect()).unwrap()
}

pub fn max_rel_err(a: &Plane, b: &Plane) -> f64 {
    let scale = b.max_abs().max(1e-300);
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}
