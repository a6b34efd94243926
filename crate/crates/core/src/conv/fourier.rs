//! Real-to-complex 2D transforms for linear (non-circular) correlation.
//!
//! Planes are zero-padded into a grid of at least `plane + kernel - 1` samples
//! per axis, rounded up to a 7-smooth length. Spectra are stored column-major
//! (one contiguous run of `rows` values per retained frequency column) so that
//! the column pass is a single batched FFT.

use std::sync::{Arc, Mutex, OnceLock};

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::image::Plane;

struct Planners {
    real: RealFftPlanner<f64>,
    complex: FftPlanner<f64>,
}

fn planners() -> &'static Mutex<Planners> {
    static PLANNERS: OnceLock<Mutex<Planners>> = OnceLock::new();
    PLANNERS.get_or_init(|| {
        Mutex::new(Planners {
            real: RealFftPlanner::new(),
            complex: FftPlanner::new(),
        })
    })
}

/// Smallest `m >= n` whose only prime factors are 2, 3, 5 and 7.
pub fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Frequency-domain representation of a zero-padded plane.
#[derive(Clone, Debug)]
pub struct Spectrum {
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros_like(other: &Spectrum) -> Spectrum {
        Spectrum {
            data: vec![Complex64::new(0.0, 0.0); other.data.len()],
        }
    }

    /// `self += scale * a * b`
    pub fn add_product(&mut self, a: &Spectrum, b: &Spectrum, scale: f64) {
        for ((acc, &x), &y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *acc += x * y * scale;
        }
    }

    /// `self += scale * conj(a) * b`
    pub fn add_conj_product(&mut self, a: &Spectrum, b: &Spectrum, scale: f64) {
        for ((acc, &x), &y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *acc += x.conj() * y * scale;
        }
    }
}

/// A transform grid together with its cached FFT plans.
#[derive(Clone)]
pub struct FourierGrid {
    rows: usize,
    cols: usize,
    spec_cols: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierGrid")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl FourierGrid {
    /// Grid large enough for linear correlation of a `plane` with a `kernel`
    /// (both given as `(width, height)`).
    pub fn for_linear(plane: (usize, usize), kernel: (usize, usize)) -> Self {
        Self::with_size(
            fast_len(plane.1 + kernel.1 - 1),
            fast_len(plane.0 + kernel.0 - 1),
        )
    }

    pub fn with_size(rows: usize, cols: usize) -> Self {
        let mut p = planners().lock().unwrap_or_else(|e| e.into_inner());
        let r2c = p.real.plan_fft_forward(cols);
        let c2r = p.real.plan_fft_inverse(cols);
        let col_fwd = p.complex.plan_fft_forward(rows);
        let col_inv = p.complex.plan_fft_inverse(rows);
        Self {
            rows,
            cols,
            spec_cols: cols / 2 + 1,
            r2c,
            c2r,
            col_fwd,
            col_inv,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Bytes held by one spectrum on this grid.
    pub fn spectrum_bytes(&self) -> usize {
        self.rows * self.spec_cols * std::mem::size_of::<Complex64>()
    }

    /// Transform of `plane` placed at the grid origin, zero elsewhere.
    pub fn forward(&self, plane: &Plane) -> Spectrum {
        assert!(plane.width() <= self.cols && plane.height() <= self.rows);
        let zero = Complex64::new(0.0, 0.0);
        let mut data = vec![zero; self.rows * self.spec_cols];
        let mut input = self.r2c.make_input_vec();
        let mut output = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for r in 0..plane.height() {
            input[..plane.width()].copy_from_slice(plane.row(r));
            input[plane.width()..].iter_mut().for_each(|v| *v = 0.0);
            self.r2c
                .process_with_scratch(&mut input, &mut output, &mut scratch)
                .expect("buffer sizes come from the plan");
            for (c, &v) in output.iter().enumerate() {
                data[c * self.rows + r] = v;
            }
        }
        // rows beyond the plane are zero and stay zero after the row pass
        self.col_fwd.process(&mut data);
        Spectrum { data }
    }

    /// Inverse transform, normalised, as a `rows * cols` row-major buffer.
    pub fn inverse(&self, mut spectrum: Spectrum) -> Vec<f64> {
        self.col_inv.process(&mut spectrum.data);
        let norm = 1.0 / (self.rows * self.cols) as f64;
        let mut out = vec![0.0; self.rows * self.cols];
        let mut input = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        for r in 0..self.rows {
            for (c, v) in input.iter_mut().enumerate() {
                *v = spectrum.data[c * self.rows + r];
            }
            // the DC (and Nyquist) bins of a real signal are real
            input[0].im = 0.0;
            if self.cols.is_multiple_of(2) {
                input[self.spec_cols - 1].im = 0.0;
            }
            let row = &mut out[r * self.cols..(r + 1) * self.cols];
            self.c2r
                .process_with_scratch(&mut input, row, &mut scratch)
                .expect("buffer sizes come from the plan");
            row.iter_mut().for_each(|v| *v *= norm);
        }
        out
    }

    /// Same-size convolution read out of a full circular result.
    pub fn extract_conv(&self, full: &[f64], plane: (usize, usize), kernel: (usize, usize)) -> Plane {
        let (kw, kh) = kernel;
        let off_x = kw - 1 - (kw - 1) / 2;
        let off_y = kh - 1 - (kh - 1) / 2;
        Plane::from_fn(plane.0, plane.1, |x, y| {
            full[(y + off_y) * self.cols + x + off_x]
        })
    }

    /// Same-size correlation read out of a full circular result.
    pub fn extract_xcorr(&self, full: &[f64], plane: (usize, usize), kernel: (usize, usize)) -> Plane {
        let (kw, kh) = kernel;
        let (cx, cy) = ((kw - 1) / 2, (kh - 1) / 2);
        let (rows, cols) = (self.rows, self.cols);
        Plane::from_fn(plane.0, plane.1, |x, y| {
            let yy = (y + rows - cy) % rows;
            let xx = (x + cols - cx) % cols;
            full[yy * cols + xx]
        })
    }
}
