use std::path::PathBuf;

use crate::image::Colorspace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grayscale source cannot be converted to {0:?}")]
    GrayscaleSource(Colorspace),

    #[error("pad too large: {pad} px exceeds image dimension {dim} px")]
    PadTooLarge { pad: usize, dim: usize },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("kernel {kernel_w}x{kernel_h} is larger than plane {plane_w}x{plane_h}")]
    KernelTooLarge {
        kernel_w: usize,
        kernel_h: usize,
        plane_w: usize,
        plane_h: usize,
    },

    #[error("degenerate template: {0}")]
    DegenerateTemplate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("similarity field is already cropped")]
    AlreadyCropped,

    #[error("box ({x}, {y}, {w}x{h}) is outside the {width}x{height} array")]
    OutOfBounds {
        x: i64,
        y: i64,
        w: i64,
        h: i64,
        width: usize,
        height: usize,
    },

    #[error("homography maps ({x}, {y}) to infinity")]
    PointAtInfinity { x: f64, y: f64 },

    #[error("singular homography (det = {0:e})")]
    SingularHomography(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("cannot place {requested} plants of {tpl_w}x{tpl_h} in a {img_w}x{img_h} image (capacity {capacity})")]
    InfeasiblePacking {
        requested: usize,
        capacity: usize,
        tpl_w: usize,
        tpl_h: usize,
        img_w: usize,
        img_h: usize,
    },

    #[error("dataset case {case}: {msg}")]
    Dataset { case: String, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    ImageCodec {
        path: PathBuf,
        source: ::image::ImageError,
    },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dataset(case: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Dataset {
            case: case.into(),
            msg: msg.into(),
        }
    }
}
