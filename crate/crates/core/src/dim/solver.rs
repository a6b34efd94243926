//! The DIM iteration.
//!
//! With `X_i` the preprocessed input channels, `Y_j` the similarity maps and
//! `w_ji`, `v_ji` the two normalisations of each template channel:
//!
//! ```text
//! R_i = sum_j conv(Y_j, v_ji)
//! E_i = X_i / max(eps2, R_i)
//! Y_j <- max(eps1, Y_j) * sum_i xcorr(E_i, w_ji)
//! ```
//!
//! starting from `Y = 0`. The Fourier engine keeps one spectrum per template
//! channel (`v_ji` is a scalar multiple of `w_ji`, so the same spectrum serves
//! both the convolution and the correlation) and does the sums over `j` and
//! `i` in the frequency domain, so an iteration costs `2 (p + k)` transforms.

use std::borrow::Cow;

use rayon::prelude::*;

use crate::conv::fourier::{FourierGrid, Spectrum};
use crate::conv::{conv2_same, xcorr2_same, Backend, ConvMode, ConvPlan};
use crate::error::{Error, Result};
use crate::image::Plane;
use crate::preprocess::ChannelStack;

use super::bank::TemplateBank;
use super::field::SimilarityField;
use super::params::DimParams;

/// Above this many bytes of kernel spectra, spectra are recomputed on demand.
const SPECTRUM_CACHE_BYTES: usize = 1 << 30;

enum Engine {
    Direct,
    Fourier {
        grid: FourierGrid,
        /// Indexed `j * channels + i`; `None` when over the cache budget.
        spectra: Option<Vec<Spectrum>>,
    },
}

/// A bank prepared for solving on inputs of one size.
pub struct DimSolver<'a> {
    bank: &'a TemplateBank,
    dims: (usize, usize),
    epsilon1: f64,
    epsilon2: f64,
    engine: Engine,
}

impl<'a> DimSolver<'a> {
    pub fn new(bank: &'a TemplateBank, dims: (usize, usize), params: &DimParams) -> Result<Self> {
        params.validate()?;
        let kernel = bank.template_dims();
        if kernel.0 > dims.0 || kernel.1 > dims.1 {
            return Err(Error::KernelTooLarge {
                kernel_w: kernel.0,
                kernel_h: kernel.1,
                plane_w: dims.0,
                plane_h: dims.1,
            });
        }
        let engine = match ConvPlan::new(params.conv_mode, dims, kernel).backend() {
            Backend::Direct => Engine::Direct,
            Backend::Fourier => {
                let grid = FourierGrid::for_linear(dims, kernel);
                let count = bank.len() * bank.channels();
                let spectra = (count * grid.spectrum_bytes() <= SPECTRUM_CACHE_BYTES).then(|| {
                    (0..count)
                        .into_par_iter()
                        .map(|n| grid.forward(bank.w(n / bank.channels(), n % bank.channels())))
                        .collect()
                });
                Engine::Fourier { grid, spectra }
            }
        };
        Ok(Self {
            bank,
            dims,
            epsilon1: params.resolved_epsilon1(bank),
            epsilon2: params.epsilon2,
            engine,
        })
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    pub fn epsilon2(&self) -> f64 {
        self.epsilon2
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn spectrum<'s>(&'s self, j: usize, i: usize) -> Cow<'s, Spectrum> {
        match &self.engine {
            Engine::Fourier { spectra: Some(s), .. } => Cow::Borrowed(&s[j * self.bank.channels() + i]),
            Engine::Fourier { grid, spectra: None } => Cow::Owned(grid.forward(self.bank.w(j, i))),
            Engine::Direct => unreachable!("direct engine has no spectra"),
        }
    }

    fn check_planes(&self, planes: &[Plane], expected: usize, what: &str) -> Result<()> {
        if planes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{what}: expected {expected} planes, got {}",
                planes.len()
            )));
        }
        if planes.iter().any(|p| p.dims() != self.dims) {
            return Err(Error::DimensionMismatch(format!(
                "{what}: planes must be {}x{}",
                self.dims.0, self.dims.1
            )));
        }
        Ok(())
    }

    /// Reconstruction `R_i = sum_j conv(Y_j, v_ji)`, clamped at zero.
    pub fn reconstruct(&self, y: &[Plane]) -> Result<Vec<Plane>> {
        self.check_planes(y, self.bank.len(), "similarity maps")?;
        let k = self.bank.channels();
        let (w, h) = self.dims;
        let active: Vec<usize> = (0..y.len())
            .filter(|&j| y[j].data().iter().any(|&v| v != 0.0))
            .collect();
        if active.is_empty() {
            return Ok(vec![Plane::zeros(w, h); k]);
        }
        let kernel = self.bank.template_dims();
        let out = match &self.engine {
            Engine::Direct => (0..k)
                .into_par_iter()
                .map(|i| {
                    let mut acc = Plane::zeros(w, h);
                    for &j in &active {
                        let r = conv2_same(&y[j], self.bank.v(j, i), ConvMode::Direct)?;
                        add_into(&mut acc, &r);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?,
            Engine::Fourier { grid, .. } => {
                let y_hat: Vec<Spectrum> = active.par_iter().map(|&j| grid.forward(&y[j])).collect();
                (0..k)
                    .into_par_iter()
                    .map(|i| {
                        let mut acc = Spectrum::zeros_like(&y_hat[0]);
                        for (n, &j) in active.iter().enumerate() {
                            let scale = self.bank.template(j).v_scale;
                            acc.add_product(&self.spectrum(j, i), &y_hat[n], scale);
                        }
                        grid.extract_conv(&grid.inverse(acc), self.dims, kernel)
                    })
                    .collect()
            }
        };
        Ok(out.into_iter().map(clamp_non_negative).collect())
    }

    /// One update of every similarity map.
    pub fn step(&self, x: &[Plane], y: &[Plane]) -> Result<Vec<Plane>> {
        self.check_planes(x, self.bank.channels(), "input channels")?;
        let r = self.reconstruct(y)?;
        let eps2 = self.epsilon2;
        let e: Vec<Plane> = x
            .par_iter()
            .zip(&r)
            .map(|(xi, ri)| {
                let data = xi
                    .data()
                    .iter()
                    .zip(ri.data())
                    .map(|(&xv, &rv)| xv / rv.max(eps2))
                    .collect();
                Plane::new(self.dims.0, self.dims.1, data).expect("same dims")
            })
            .collect();
        let kernel = self.bank.template_dims();
        let k = self.bank.channels();
        let correlations: Vec<Plane> = match &self.engine {
            Engine::Direct => (0..self.bank.len())
                .into_par_iter()
                .map(|j| {
                    let mut acc = Plane::zeros(self.dims.0, self.dims.1);
                    for (i, ei) in e.iter().enumerate() {
                        add_into(&mut acc, &xcorr2_same(ei, self.bank.w(j, i), ConvMode::Direct)?);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()?,
            Engine::Fourier { grid, .. } => {
                let e_hat: Vec<Spectrum> = e.par_iter().map(|ei| grid.forward(ei)).collect();
                (0..self.bank.len())
                    .into_par_iter()
                    .map(|j| {
                        let mut acc = Spectrum::zeros_like(&e_hat[0]);
                        for (i, ei) in e_hat.iter().enumerate().take(k) {
                            acc.add_conj_product(&self.spectrum(j, i), ei, 1.0);
                        }
                        grid.extract_xcorr(&grid.inverse(acc), self.dims, kernel)
                    })
                    .collect()
            }
        };
        let eps1 = self.epsilon1;
        Ok(correlations
            .into_par_iter()
            .zip(y.par_iter())
            .map(|(c, yj)| {
                let data = c
                    .data()
                    .iter()
                    .zip(yj.data())
                    .map(|(&cv, &yv)| yv.max(eps1) * cv.max(0.0))
                    .collect();
                Plane::new(self.dims.0, self.dims.1, data).expect("same dims")
            })
            .collect())
    }

    /// Runs `iterations` updates from an all-zero start.
    pub fn solve(&self, x: &ChannelStack, iterations: usize) -> Result<SimilarityField> {
        if x.dims() != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "input is {}x{}, solver prepared for {}x{}",
                x.width(),
                x.height(),
                self.dims.0,
                self.dims.1
            )));
        }
        let mut y = vec![Plane::zeros(self.dims.0, self.dims.1); self.bank.len()];
        for _ in 0..iterations {
            y = self.step(x.planes(), &y)?;
        }
        SimilarityField::new(y, x.pad())
    }
}

fn add_into(acc: &mut Plane, other: &Plane) {
    for (a, &b) in acc.data_mut().iter_mut().zip(other.data()) {
        *a += b;
    }
}

fn clamp_non_negative(p: Plane) -> Plane {
    let mut p = p;
    p.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    p
}

/// A single update of `y` given input `x`.
pub fn dim_step(
    x: &ChannelStack,
    y: &SimilarityField,
    bank: &TemplateBank,
    params: &DimParams,
) -> Result<SimilarityField> {
    if y.dims() != x.dims() || y.len() != bank.len() {
        return Err(Error::DimensionMismatch(
            "similarity field does not match the input and bank".into(),
        ));
    }
    if y.maps().iter().any(|m| m.data().iter().any(|&v| !(v >= 0.0))) {
        return Err(Error::InvalidParam("similarity values must be non-negative".into()));
    }
    let solver = DimSolver::new(bank, x.dims(), params)?;
    Ok(y.with_maps(solver.step(x.planes(), y.maps())?))
}

/// Steady-state similarity: `Y = 0` followed by the configured number of
/// updates. The result is still padded.
pub fn dim_solve(x: &ChannelStack, bank: &TemplateBank, params: &DimParams) -> Result<SimilarityField> {
    let solver = DimSolver::new(bank, x.dims(), params)?;
    solver.solve(x, params.resolved_iterations(bank.len()))
}

/// Reconstruction of the input implied by `y`.
pub fn reconstruct(
    x: &ChannelStack,
    y: &SimilarityField,
    bank: &TemplateBank,
    params: &DimParams,
) -> Result<Vec<Plane>> {
    DimSolver::new(bank, x.dims(), params)?.reconstruct(y.maps())
}

/// Generalised Kullback-Leibler divergence `sum X log(X / R') - X + R'` with
/// `R' = max(epsilon2, R)`.
pub fn kl_divergence(x: &[Plane], r: &[Plane], epsilon2: f64) -> f64 {
    x.iter()
        .zip(r)
        .map(|(xi, ri)| {
            xi.data()
                .iter()
                .zip(ri.data())
                .map(|(&xv, &rv)| {
                    let rc = rv.max(epsilon2);
                    if xv > 0.0 {
                        xv * (xv / rc).ln() - xv + rc
                    } else {
                        rc
                    }
                })
                .sum::<f64>()
        })
        .sum()
}
