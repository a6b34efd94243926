//! Template matching by explaining away.
//!
//! `dimmatch` implements Divisive Input Modulation (DIM): every template in a
//! bank is reproduced at every image location and the bank competes to
//! reconstruct a contrast-encoded version of the image. Similarity maps that
//! come out of the competition are sparse and tolerant to appearance change.
//! A zero-mean normalised cross-correlation (ZNCC) baseline is provided for
//! comparison, together with the correspondence and detection benchmarks used
//! to evaluate both.
//!
//! # Pipeline
//! 1. [`preprocess`]: mirror-pad, subtract a Gaussian local mean and split each
//!    colour channel into rectified ON/OFF planes ([`ChannelStack`]).
//! 2. [`dim::build_bank`]: normalise template patches into a [`dim::TemplateBank`].
//! 3. [`dim::dim_solve`]: run the multiplicative update from a zero start.
//! 4. [`dim::crop_field`] and [`dim::postprocess_sum`]: return to image
//!    coordinates and pool similarity over a small elliptical neighbourhood.
//!
//! [`dim::match_templates`] composes the whole thing.
//!
//! # Modules
//! - [`image`], [`filter`], [`preprocess`]: image representation and input encoding.
//! - [`conv`]: direct and Fourier-space 2D correlation/convolution.
//! - [`dim`]: the matcher.
//! - [`zncc`]: the baseline.
//! - [`keypoints`]: Harris corners, keypoint rejection rules, additional-template selection.
//! - [`eval`]: boxes, homographies, success curves, precision/recall.
//! - [`datasets`]: benchmark layouts and synthetic scenes.
//! - [`bench`]: the correspondence, detection and sweep protocols.
//! - [`cli`]: the `dimmatch` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod conv;
pub mod datasets;
pub mod dim;
mod error;
pub mod eval;
pub mod filter;
pub mod image;
pub mod io;
pub mod keypoints;
pub mod preprocess;
mod render;
pub mod zncc;

pub use crate::error::{Error, Result};
pub use crate::eval::{BoundingBox, Homography};
pub use crate::image::{Colorspace, Image, Padding, Plane};
pub use crate::preprocess::{preprocess, ChannelStack};
