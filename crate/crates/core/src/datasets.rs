//! Benchmark dataset layouts and synthetic test scenes.
//!
//! # Pair layout
//! ```text
//! <root>/<case>/1.<ext>   first frame
//! <root>/<case>/2.<ext>   second frame
//! <root>/<case>/gt.txt    two lines "x y w h": target box in frame 1, then frame 2
//! ```
//! Cases are the subdirectories of `root` in name order. `<ext>` is one of
//! png, ppm, pgm, jpg, jpeg. Coordinates are 0-based pixels, the separator is
//! whitespace or commas.
//!
//! # Sequence layout
//! ```text
//! <root>/img1.<ext> .. img6.<ext>
//! <root>/H1to2p .. H1to6p   3x3 row-major homographies, whitespace separated
//! ```
//! The homography `H1tokp` maps pixel coordinates of image 1 to image `k`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::eval::{BoundingBox, Homography};
use crate::filter::{blur_plane, GaussianSpec};
use crate::image::{Image, Plane};
use crate::io::{image_dims, load_image, rescale, save_image, scaled_dims};

pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "ppm", "pgm", "jpg", "jpeg"];

/// One correspondence pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCase {
    pub id: String,
    pub image1: PathBuf,
    pub image2: PathBuf,
    pub gt_box1: BoundingBox,
    pub gt_box2: BoundingBox,
}

impl PairCase {
    pub fn load_images(&self) -> Result<(Image, Image)> {
        Ok((load_image(&self.image1)?, load_image(&self.image2)?))
    }
}

fn find_image(dir: &Path, stem: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

fn parse_numbers(case: &str, what: &str, line: &str) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::dataset(case, format!("{what}: cannot parse {t:?}")))
        })
        .collect()
}

fn parse_box(case: &str, line: &str) -> Result<BoundingBox> {
    let v = parse_numbers(case, "ground truth", line)?;
    if v.len() != 4 {
        return Err(Error::dataset(
            case,
            format!("ground truth line {line:?} needs 4 values, has {}", v.len()),
        ));
    }
    if v.iter().any(|x| x.fract() != 0.0) {
        return Err(Error::dataset(case, format!("ground truth line {line:?} is not integral")));
    }
    BoundingBox::new(v[0] as i64, v[1] as i64, v[2] as i64, v[3] as i64)
        .map_err(|e| Error::dataset(case, e.to_string()))
}

fn sorted_subdirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn load_pair_case(dir: &Path) -> Result<PairCase> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let image1 = find_image(dir, "1").ok_or_else(|| Error::dataset(&id, "missing image 1"))?;
    let image2 = find_image(dir, "2").ok_or_else(|| Error::dataset(&id, "missing image 2"))?;
    let gt_path = dir.join("gt.txt");
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::dataset(&id, format!("gt.txt: {e}")))?;
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if lines.len() != 2 {
        return Err(Error::dataset(&id, format!("gt.txt needs 2 boxes, has {}", lines.len())));
    }
    let gt_box1 = parse_box(&id, lines[0])?;
    let gt_box2 = parse_box(&id, lines[1])?;
    for (n, (path, b)) in [(&image1, &gt_box1), (&image2, &gt_box2)].into_iter().enumerate() {
        let (w, h) = image_dims(path).map_err(|e| Error::dataset(&id, e.to_string()))?;
        if !b.inside(w, h) {
            return Err(Error::dataset(
                &id,
                format!("box {} {:?} exceeds the {w}x{h} image", n + 1, b),
            ));
        }
    }
    Ok(PairCase {
        id,
        image1,
        image2,
        gt_box1,
        gt_box2,
    })
}

/// All pair cases under `root`, in directory-name order.
pub fn load_bbs_dataset(root: impl AsRef<Path>) -> Result<Vec<PairCase>> {
    sorted_subdirs(root.as_ref())?
        .iter()
        .map(|d| load_pair_case(d))
        .collect()
}

/// Writes one case in the pair layout (PNG frames).
pub fn write_bbs_case(
    root: impl AsRef<Path>,
    id: &str,
    images: (&Image, &Image),
    boxes: (BoundingBox, BoundingBox),
) -> Result<PathBuf> {
    let dir = root.as_ref().join(id);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_image(dir.join("1.png"), images.0)?;
    save_image(dir.join("2.png"), images.1)?;
    let text = [boxes.0, boxes.1]
        .iter()
        .map(|b| format!("{} {} {} {}\n", b.x, b.y, b.w, b.h))
        .collect::<String>();
    let gt = dir.join("gt.txt");
    fs::write(&gt, text).map_err(|e| Error::io(&gt, e))?;
    Ok(dir)
}

/// A six-image sequence with ground-truth homographies from image 1.
#[derive(Clone, Debug)]
pub struct SequenceCase {
    pub name: String,
    pub paths: Vec<PathBuf>,
    /// Rescaled images, `images[0]` is the reference.
    pub images: Vec<Image>,
    /// `homographies[k - 2]` maps image 1 to image `k`, in rescaled pixels.
    pub homographies: Vec<Homography>,
    pub scale: f64,
}

impl SequenceCase {
    pub fn is_color(&self) -> bool {
        self.images.iter().all(Image::is_color)
    }
}

pub const SEQUENCE_LEN: usize = 6;

/// Reads a homography file of nine row-major values.
pub fn read_homography(path: impl AsRef<Path>, case: &str) -> Result<Homography> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::dataset(case, format!("{}: {e}", path.display())))?;
    let v = parse_numbers(case, "homography", &text)?;
    let arr: [f64; 9] = v.try_into().map_err(|v: Vec<f64>| {
        Error::dataset(case, format!("{} holds {} values, expected 9", path.display(), v.len()))
    })?;
    Homography::from_row_major(arr).map_err(|e| Error::dataset(case, e.to_string()))
}

/// Loads a sequence, resampling images by `scale` and conjugating the
/// homographies with the scaling.
pub fn load_vgg_sequence(root: impl AsRef<Path>, scale: f64) -> Result<SequenceCase> {
    let root = root.as_ref();
    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let paths = (1..=SEQUENCE_LEN)
        .map(|k| find_image(root, &format!("img{k}")).ok_or_else(|| Error::dataset(&name, format!("missing img{k}"))))
        .collect::<Result<Vec<_>>>()?;
    let homographies = (2..=SEQUENCE_LEN)
        .map(|k| read_homography(root.join(format!("H1to{k}p")), &name)?.rescaled(scale))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| match e {
            Error::Dataset { .. } => e,
            other => Error::dataset(&name, other.to_string()),
        })?;
    let images = paths
        .iter()
        .map(|p| {
            let img = load_image(p)?;
            let out = rescale(&img, scale)?;
            debug_assert_eq!(out.dims(), scaled_dims(img.dims(), scale));
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceCase {
        name,
        paths,
        images,
        homographies,
        scale,
    })
}

/// Subdirectories of `root` holding a sequence, in name order.
pub fn list_vgg_sequences(root: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    Ok(sorted_subdirs(root.as_ref())?
        .into_iter()
        .filter(|d| find_image(d, "img1").is_some())
        .collect())
}

/// A synthetic scene with planted patches.
#[derive(Clone, Debug)]
pub struct SynthScene {
    /// Scene with pixel noise.
    pub image: Image,
    /// The same scene before noise.
    pub clean: Image,
    /// Where each plant went.
    pub boxes: Vec<BoundingBox>,
    pub plants: Vec<Image>,
}

/// Number of non-overlapping `tpl` boxes the grid placement can hold.
pub fn packing_capacity(tpl: (usize, usize), img: (usize, usize)) -> usize {
    if tpl.0 == 0 || tpl.1 == 0 {
        return 0;
    }
    (img.0 / tpl.0) * (img.1 / tpl.1)
}

/// Random patches of uniform noise in `channels` channels.
pub fn random_plants(seed: u64, n: usize, tpl: (usize, usize), channels: usize) -> Vec<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    (0..n)
        .map(|_| {
            let planes = (0..channels)
                .map(|_| Plane::from_fn(tpl.0, tpl.1, |_, _| rng.random_range(0.0..1.0)))
                .collect();
            Image::from_planes(planes).expect("valid plant")
        })
        .collect()
}

/// A three-channel scene of `n_plants` uniform-noise patches over a smooth
/// random background, plus Gaussian pixel noise of standard deviation
/// `noise_sigma` (clamped to `[0, 1]`).
pub fn synth_scene(
    seed: u64,
    n_plants: usize,
    tpl_dims: (usize, usize),
    img_dims: (usize, usize),
    noise_sigma: f64,
) -> Result<SynthScene> {
    let plants = random_plants(seed, n_plants, tpl_dims, 3);
    synth_scene_with_plants(seed, &plants, img_dims, noise_sigma)
}

/// Plants the given patches (same size and channel count) at random
/// non-overlapping positions. The image is split into a grid of cells at
/// least one patch in size; each plant takes a distinct cell and a random
/// offset inside it.
pub fn synth_scene_with_plants(
    seed: u64,
    plants: &[Image],
    img_dims: (usize, usize),
    noise_sigma: f64,
) -> Result<SynthScene> {
    let Some(first) = plants.first() else {
        return Err(Error::EmptyInput("no plants"));
    };
    let tpl = first.dims();
    let channels = first.channels();
    if plants.iter().any(|p| p.dims() != tpl || p.channels() != channels) {
        return Err(Error::DimensionMismatch("plants must share size and channels".into()));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidParam(format!("noise sigma {noise_sigma}")));
    }
    let capacity = packing_capacity(tpl, img_dims);
    if plants.len() > capacity {
        return Err(Error::InfeasiblePacking {
            requested: plants.len(),
            capacity,
            tpl_w: tpl.0,
            tpl_h: tpl.1,
            img_w: img_dims.0,
            img_h: img_dims.1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = img_dims;
    let blur = GaussianSpec::new(1.0)?;
    let mut planes: Vec<Plane> = (0..channels)
        .map(|_| blur_plane(&Plane::from_fn(w, h, |_, _| rng.random_range(0.0..1.0)), blur))
        .collect();

    let (cols, rows) = (w / tpl.0, h / tpl.1);
    let (cell_w, cell_h) = (w / cols, h / rows);
    let mut cells: Vec<usize> = (0..cols * rows).collect();
    cells.shuffle(&mut rng);
    let mut boxes = Vec::with_capacity(plants.len());
    for (plant, &cell) in plants.iter().zip(&cells) {
        let x = (cell % cols) * cell_w + rng.random_range(0..=cell_w - tpl.0);
        let y = (cell / cols) * cell_h + rng.random_range(0..=cell_h - tpl.1);
        for (dst, src) in planes.iter_mut().zip(plant.planes()) {
            dst.paste(src, x, y)?;
        }
        boxes.push(BoundingBox::new(x as i64, y as i64, tpl.0 as i64, tpl.1 as i64)?);
    }
    let clean = Image::from_planes(planes)?;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(1);
    let image = if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParam(e.to_string()))?;
        let noisy = clean
            .planes()
            .iter()
            .map(|p| {
                let data = p
                    .data()
                    .iter()
                    .map(|&v| (v + normal.sample(&mut noise_rng)).clamp(0.0, 1.0))
                    .collect();
                Plane::new(w, h, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Image::from_planes(noisy)?
    } else {
        clean.clone()
    };
    Ok(SynthScene {
        image,
        clean,
        boxes,
        plants: plants.to_vec(),
    })
}
