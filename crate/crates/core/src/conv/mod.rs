//! Same-size 2D cross-correlation and convolution.
//!
//! Two interchangeable backends compute identical results up to round-off:
//! a direct O(MNmn) sum and a Fourier-space product. The kernel centre is
//! `((w - 1) / 2, (h - 1) / 2)` (integer division), so for odd kernels the
//! centre is the middle sample and for even kernels it sits just above and to
//! the left of the geometric middle. Samples outside the plane count as zero.

pub mod fourier;

use crate::error::{Error, Result};
use crate::image::Plane;

use self::fourier::FourierGrid;

/// Kernels share the plane representation.
pub type Kernel2D = Plane;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ConvMode {
    Direct,
    Fourier,
    #[default]
    Auto,
}

impl std::str::FromStr for ConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(ConvMode::Direct),
            "fourier" | "fft" => Ok(ConvMode::Fourier),
            "auto" => Ok(ConvMode::Auto),
            other => Err(Error::InvalidParam(format!("unknown convolution mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Direct,
    Fourier,
}

/// Backend choice for one plane/kernel size pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvPlan {
    pub mode: ConvMode,
    pub plane: (usize, usize),
    pub kernel: (usize, usize),
}

impl ConvPlan {
    pub fn new(mode: ConvMode, plane: (usize, usize), kernel: (usize, usize)) -> Self {
        Self {
            mode,
            plane,
            kernel,
        }
    }

    /// `Auto` picks the Fourier backend once the kernel area exceeds the log
    /// of the (already padded) plane area, where the O(MN log MN) transform
    /// overtakes the O(MNmn) direct sum.
    pub fn backend(&self) -> Backend {
        match self.mode {
            ConvMode::Direct => Backend::Direct,
            ConvMode::Fourier => Backend::Fourier,
            ConvMode::Auto => {
                let kernel_area = (self.kernel.0 * self.kernel.1) as f64;
                let plane_area = (self.plane.0 * self.plane.1) as f64;
                if kernel_area > plane_area.ln() {
                    Backend::Fourier
                } else {
                    Backend::Direct
                }
            }
        }
    }
}

fn check(plane: &Plane, kernel: &Kernel2D) -> Result<()> {
    if kernel.width() > plane.width() || kernel.height() > plane.height() {
        return Err(Error::KernelTooLarge {
            kernel_w: kernel.width(),
            kernel_h: kernel.height(),
            plane_w: plane.width(),
            plane_h: plane.height(),
        });
    }
    Ok(())
}

/// Direct same-size correlation: `out(y, x) = sum k(u, v) p(y + u - cy, x + v - cx)`.
pub(crate) fn xcorr_direct(plane: &Plane, kernel: &Kernel2D) -> Plane {
    let (w, h) = plane.dims();
    let (kw, kh) = kernel.dims();
    let (cx, cy) = ((kw - 1) / 2, (kh - 1) / 2);
    let mut out = vec![0.0; w * h];
    let pd = plane.data();
    for u in 0..kh {
        // rows y with 0 <= y + u - cy < h
        let y0 = cy.saturating_sub(u);
        let y1 = (h + cy).saturating_sub(u).min(h);
        for v in 0..kw {
            let k = kernel.get(v, u);
            if k == 0.0 {
                continue;
            }
            let x0 = cx.saturating_sub(v);
            let x1 = (w + cx).saturating_sub(v).min(w);
            if x0 >= x1 {
                continue;
            }
            for y in y0..y1 {
                let src = (y + u - cy) * w + (x0 + v - cx);
                let dst = y * w + x0;
                let n = x1 - x0;
                for (o, &p) in out[dst..dst + n].iter_mut().zip(&pd[src..src + n]) {
                    *o += k * p;
                }
            }
        }
    }
    Plane::new(w, h, out).expect("same dims")
}

/// Same-size cross-correlation of `plane` with `kernel`.
pub fn xcorr2_same(plane: &Plane, kernel: &Kernel2D, mode: ConvMode) -> Result<Plane> {
    check(plane, kernel)?;
    Ok(
        match ConvPlan::new(mode, plane.dims(), kernel.dims()).backend() {
            Backend::Direct => xcorr_direct(plane, kernel),
            Backend::Fourier => {
                let grid = FourierGrid::for_linear(plane.dims(), kernel.dims());
                let ps = grid.forward(plane);
                let ks = grid.forward(kernel);
                let mut acc = fourier::Spectrum::zeros_like(&ps);
                acc.add_conj_product(&ks, &ps, 1.0);
                grid.extract_xcorr(&grid.inverse(acc), plane.dims(), kernel.dims())
            }
        },
    )
}

/// Same-size convolution: correlation with the kernel rotated by 180 degrees.
pub fn conv2_same(plane: &Plane, kernel: &Kernel2D, mode: ConvMode) -> Result<Plane> {
    check(plane, kernel)?;
    Ok(
        match ConvPlan::new(mode, plane.dims(), kernel.dims()).backend() {
            Backend::Direct => xcorr_direct(plane, &kernel.rot180()),
            Backend::Fourier => {
                let grid = FourierGrid::for_linear(plane.dims(), kernel.dims());
                let ps = grid.forward(plane);
                let ks = grid.forward(kernel);
                let mut acc = fourier::Spectrum::zeros_like(&ps);
                acc.add_product(&ks, &ps, 1.0);
                grid.extract_conv(&grid.inverse(acc), plane.dims(), kernel.dims())
            }
        },
    )
}

/// `max |a - b| / max |b|`, the discrepancy measure used to compare backends.
pub fn relative_error(a: &Plane, b: &Plane) -> f64 {
    assert_eq!(a.dims(), b.dims());
    let diff = a
        .data()
        .iter()
        .zip(b.data())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.max_abs();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
