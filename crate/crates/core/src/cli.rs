//! The `dimmatch` command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    self, correspondence_map, predicted_box, AdditionalKind, MatchConfig, Method, PairReport, SweepParam,
};
use crate::conv::ConvMode;
use crate::datasets::{self, load_bbs_dataset, load_vgg_sequence, SequenceCase};
use crate::dim::{self, DimParams, PatchSpec};
use crate::error::{Error, Result};
use crate::eval::{top_k_peaks, BoundingBox, SuccessCurve};
use crate::image::Colorspace;
use crate::io::{load_image, save_heatmap, save_image};
use crate::render::{annotate, plot_curves, PALETTE};

#[derive(Parser, Debug)]
#[command(name = "dimmatch", version, about = "Template matching by divisive input modulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Match one template against one image and write a heatmap, an annotated image and the top peaks.
    Match(MatchArgs),
    /// Pair correspondence benchmark.
    BenchBbs(BenchArgs),
    /// Sequence correspondence benchmark.
    BenchVggCorrespond(SequenceArgs),
    /// Sequence detection benchmark (colour sequences only).
    BenchVggDetect(SequenceArgs),
    /// Pair-benchmark AUC with one DIM parameter scaled.
    Sweep(SweepArgs),
    /// Direct versus Fourier solver timings on synthetic scenes.
    Timing(TimingArgs),
    /// Write a synthetic dataset in the pair layout.
    SynthBbs(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Matching method: dim or zncc.
    #[arg(long, default_value = "dim")]
    pub method: Method,
    /// Additional templates: maxcorr, keypoint, random or other:<path>.
    #[arg(long, default_value = "maxcorr")]
    pub additional: AdditionalKind,
    #[arg(long, default_value_t = 4)]
    pub max_additional: usize,
    /// Fixed DIM iteration count (default: 10, or 20 for banks over 31 templates).
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value_t = 0.025)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon2: f64,
    /// Explicit epsilon1 (default: derived from the template bank).
    #[arg(long)]
    pub epsilon1: Option<f64>,
    /// Multiplier on the preprocessing Gaussian.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_scale: f64,
    /// Convolution backend: auto, direct or fourier.
    #[arg(long, default_value = "auto")]
    pub conv: ConvMode,
    /// Colourspace for DIM on colour images.
    #[arg(long, default_value = "lab")]
    pub dim_colorspace: Colorspace,
    /// Colourspace for ZNCC on colour images.
    #[arg(long, default_value = "hsv")]
    pub zncc_colorspace: Colorspace,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl CommonArgs {
    pub fn params(&self) -> Result<DimParams> {
        let p = DimParams {
            epsilon2: self.epsilon2,
            epsilon1: self.epsilon1,
            iterations: self.iterations,
            lambda: self.lambda,
            sigma_scale: self.sigma_scale,
            conv_mode: self.conv,
            colorspace: self.dim_colorspace,
            ..DimParams::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn match_config(&self) -> Result<MatchConfig> {
        Ok(MatchConfig {
            method: self.method,
            params: self.params()?,
            additional: self.additional.clone(),
            max_additional: self.max_additional,
            seed: self.seed,
            zncc_colorspace: self.zncc_colorspace,
        })
    }
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Image to search.
    #[arg(long)]
    pub image: PathBuf,
    /// Image the template is cut from (default: the searched image).
    #[arg(long)]
    pub template_image: Option<PathBuf>,
    /// Template box as x,y,w,h.
    #[arg(long, value_parser = parse_box)]
    pub r#box: BoundingBox,
    /// Peaks written to the CSV.
    #[arg(long, default_value_t = 7)]
    pub top_k: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Dataset root.
    #[arg(long, env = "DIM_DATASET_ROOT")]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SequenceArgs {
    /// Directory of sequences.
    #[arg(long, env = "DIM_DATASET_ROOT")]
    pub dataset: PathBuf,
    /// Square template sizes.
    #[arg(long, value_delimiter = ',', default_value = "17,33,49")]
    pub template_size: Vec<usize>,
    /// Resampling applied to every image.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, env = "DIM_DATASET_ROOT")]
    pub dataset: PathBuf,
    /// sigma, epsilon1, epsilon2, lambda or iterations.
    #[arg(long)]
    pub param: SweepParam,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1,2,5,10")]
    pub factors: Vec<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct TimingArgs {
    /// Square image side.
    #[arg(long, default_value_t = 256)]
    pub image_size: usize,
    #[arg(long, value_delimiter = ',', default_value = "9,17,33")]
    pub template_size: Vec<usize>,
    /// Templates in the bank.
    #[arg(long, default_value_t = 5)]
    pub templates: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    #[arg(long, default_value_t = 128)]
    pub image_size: usize,
    #[arg(long, default_value_t = 17)]
    pub template_size: usize,
    /// Pixel noise added to the second frame.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_box(s: &str) -> std::result::Result<BoundingBox, String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 4 {
        return Err(format!("expected x,y,w,h, got {s:?}"));
    }
    BoundingBox::new(v[0], v[1], v[2], v[3]).map_err(|e| e.to_string())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a header and rows of already formatted fields.
fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn success_rows(curves: &[(&str, &SuccessCurve)]) -> Vec<Vec<String>> {
    let Some((_, first)) = curves.first() else {
        return Vec::new();
    };
    first
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![format!("{t:.2}")];
            row.extend(curves.iter().map(|(_, c)| format!("{:.6}", c.success[i])));
            row
        })
        .collect()
}

fn write_success(dir: &Path, stem: &str, curves: &[(&str, &SuccessCurve)]) -> Result<()> {
    let mut header = vec!["threshold"];
    header.extend(curves.iter().map(|(n, _)| *n));
    write_csv(&dir.join(format!("{stem}.csv")), &header, success_rows(curves))?;
    let series: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(_, c)| c.thresholds.iter().copied().zip(c.success.iter().copied()).collect())
        .collect();
    save_image(dir.join(format!("{stem}.png")), &plot_curves(&series, 420, 320))
}

fn cmd_match(a: &MatchArgs) -> Result<()> {
    let cfg = a.common.match_config()?;
    let img = load_image(&a.image)?;
    let tpl_img = match &a.template_image {
        Some(p) => load_image(p)?,
        None => img.clone(),
    };
    let other = cfg.load_other()?;
    let (map, extra) = correspondence_map(&tpl_img, &a.r#box, &img, &cfg, other.as_ref())?;
    let out = &a.common.out;
    create_dir(out)?;
    save_heatmap(out.join("heatmap.png"), &map)?;
    let dims = (a.r#box.w as usize, a.r#box.h as usize);
    let peaks = top_k_peaks(&map, a.top_k);
    let mut boxes: Vec<_> = peaks
        .iter()
        .skip(1)
        .map(|p| (crate::keypoints::box_around(p.x as f64, p.y as f64, dims), PALETTE[1]))
        .collect();
    boxes.push((predicted_box(&map, dims), PALETTE[0]));
    save_image(out.join("detections.png"), &annotate(&img, &boxes))?;
    write_csv(
        &out.join("peaks.csv"),
        &["rank", "x", "y", "score"],
        peaks
            .iter()
            .enumerate()
            .map(|(i, p)| vec![(i + 1).to_string(), p.x.to_string(), p.y.to_string(), format!("{:.9e}", p.score)]),
    )?;
    let (x, y, v) = map.argmax();
    println!("best match centre ({x}, {y}) score {v:.6e}; {} additional templates", extra.len());
    Ok(())
}

fn write_pair_report(dir: &Path, r: &PairReport) -> Result<()> {
    create_dir(dir)?;
    write_csv(
        &dir.join("pairs.csv"),
        &["case", "pred_x", "pred_y", "pred_w", "pred_h", "iou", "iou_top7", "additional", "seconds"],
        r.outcomes.iter().map(|o| {
            vec![
                o.id.clone(),
                o.predicted.x.to_string(),
                o.predicted.y.to_string(),
                o.predicted.w.to_string(),
                o.predicted.h.to_string(),
                format!("{:.6}", o.iou),
                format!("{:.6}", o.iou_top_k),
                o.n_additional.to_string(),
                format!("{:.3}", o.seconds),
            ]
        }),
    )?;
    write_success(dir, "success", &[("single_peak", &r.curve), ("top7", &r.curve_top_k)])
}

fn cmd_bench_bbs(a: &BenchArgs) -> Result<()> {
    let cfg = a.common.match_config()?;
    let cases = load_bbs_dataset(&a.dataset)?;
    if cases.is_empty() {
        return Err(Error::EmptyInput("dataset holds no pairs"));
    }
    let r = bench::run_pairs(&cases, &cfg)?;
    write_pair_report(&a.common.out, &r)?;
    println!(
        "{} pairs: AUC {:.4} (top-7 {:.4}), {:.1} s",
        r.outcomes.len(),
        r.curve.auc,
        r.curve_top_k.auc,
        r.seconds
    );
    Ok(())
}

fn load_sequences(root: &Path, scale: f64) -> Result<Vec<SequenceCase>> {
    let dirs = datasets::list_vgg_sequences(root)?;
    if dirs.is_empty() {
        return Err(Error::EmptyInput("dataset holds no sequences"));
    }
    dirs.iter().map(|d| load_vgg_sequence(d, scale)).collect()
}

fn cmd_bench_vgg_correspond(a: &SequenceArgs) -> Result<()> {
    let params = a.common.params()?;
    let seqs = load_sequences(&a.dataset, a.scale)?;
    create_dir(&a.common.out)?;
    let mut summary = Vec::new();
    for &t in &a.template_size {
        let r = bench::run_sequence_correspond(&seqs, a.common.method, &params, t)?;
        write_csv(
            &a.common.out.join(format!("matches_{t}.csv")),
            &["sequence", "kp_x", "kp_y", "query", "iou"],
            r.matches.iter().map(|m| {
                vec![
                    m.sequence.clone(),
                    m.keypoint.x.to_string(),
                    m.keypoint.y.to_string(),
                    (m.query + 1).to_string(),
                    format!("{:.6}", m.iou),
                ]
            }),
        )?;
        let mut curves: Vec<(&str, &SuccessCurve)> = vec![("pooled", &r.pooled)];
        curves.extend(r.per_sequence.iter().map(|(n, c)| (n.as_str(), c)));
        write_success(&a.common.out, &format!("success_{t}"), &curves)?;
        println!("template {t}: pooled AUC {:.4} over {} matches, {:.1} s", r.pooled.auc, r.matches.len(), r.seconds);
        summary.push(vec![t.to_string(), format!("{:.6}", r.pooled.auc), r.matches.len().to_string()]);
    }
    write_csv(&a.common.out.join("summary.csv"), &["template", "auc", "matches"], summary)
}

fn cmd_bench_vgg_detect(a: &SequenceArgs) -> Result<()> {
    let params = a.common.params()?;
    let seqs = load_sequences(&a.dataset, a.scale)?;
    create_dir(&a.common.out)?;
    let mut summary = Vec::new();
    for &t in &a.template_size {
        let r = bench::run_sequence_detect(&seqs, a.common.method, &params, t, bench::DETECT_KEYPOINTS)?;
        write_csv(
            &a.common.out.join(format!("pr_{t}.csv")),
            &["threshold", "tp", "fp", "fn", "precision", "recall", "fscore"],
            r.curve.points.iter().map(|p| {
                vec![
                    format!("{:.9e}", p.threshold),
                    p.tp.to_string(),
                    p.fp.to_string(),
                    p.fn_.to_string(),
                    format!("{:.6}", p.precision),
                    format!("{:.6}", p.recall),
                    format!("{:.6}", p.fscore),
                ]
            }),
        )?;
        let series = vec![r.curve.points.iter().map(|p| (p.recall, p.precision)).collect()];
        save_image(a.common.out.join(format!("pr_{t}.png")), &plot_curves(&series, 420, 320))?;
        println!(
            "template {t}: best f-score {:.4} at {:.4e} ({} templates, {} queries, {:.1} s)",
            r.curve.best_fscore, r.curve.best_threshold, r.templates, r.queries, r.seconds
        );
        summary.push(vec![t.to_string(), format!("{:.6}", r.curve.best_fscore), r.templates.to_string()]);
    }
    write_csv(&a.common.out.join("summary.csv"), &["template", "best_fscore", "templates"], summary)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let cfg = a.common.match_config()?;
    let cases = load_bbs_dataset(&a.dataset)?;
    if cases.is_empty() {
        return Err(Error::EmptyInput("dataset holds no pairs"));
    }
    let points = bench::run_sweep(&cases, &cfg, a.param, &a.factors)?;
    create_dir(&a.common.out)?;
    for p in &points {
        println!("{:?} x{}: AUC {:.4}", a.param, p.factor, p.auc);
    }
    write_csv(
        &a.common.out.join("sweep.csv"),
        &["factor", "auc", "auc_top7"],
        points
            .iter()
            .map(|p| vec![p.factor.to_string(), format!("{:.6}", p.auc), format!("{:.6}", p.auc_top_k)]),
    )
}

fn cmd_timing(a: &TimingArgs) -> Result<()> {
    let base = a.common.params()?;
    create_dir(&a.common.out)?;
    let mut rows = Vec::new();
    for &t in &a.template_size {
        let scene = datasets::synth_scene(a.common.seed, a.templates, (t, t), (a.image_size, a.image_size), 0.02)?;
        let specs: Vec<PatchSpec<'_>> = scene.boxes.iter().map(|b| PatchSpec::new(&scene.image, *b)).collect();
        for mode in [ConvMode::Direct, ConvMode::Fourier] {
            let params = DimParams {
                conv_mode: mode,
                ..base.clone()
            };
            let bank = dim::bank_from_specs(&specs, &params)?;
            let mut best = f64::INFINITY;
            for _ in 0..a.repeats.max(1) {
                let start = Instant::now();
                dim::match_bank(&scene.image, &bank, &params)?;
                best = best.min(start.elapsed().as_secs_f64());
            }
            println!("template {t}, {mode:?}: {best:.4} s");
            rows.push(vec![
                a.image_size.to_string(),
                t.to_string(),
                a.templates.to_string(),
                format!("{mode:?}").to_lowercase(),
                format!("{best:.6}"),
            ]);
        }
    }
    write_csv(
        &a.common.out.join("timing.csv"),
        &["image", "template", "templates", "backend", "seconds"],
        rows,
    )
}

fn cmd_synth_bbs(a: &SynthArgs) -> Result<()> {
    let dims = (a.image_size, a.image_size);
    let tpl = (a.template_size, a.template_size);
    for n in 0..a.pairs {
        let seed = a.common.seed.wrapping_add(n as u64);
        let plant = datasets::random_plants(seed, 1, tpl, 3);
        let first = datasets::synth_scene_with_plants(seed.wrapping_mul(2).wrapping_add(1), &plant, dims, 0.0)?;
        let second = datasets::synth_scene_with_plants(seed.wrapping_mul(2).wrapping_add(2), &plant, dims, a.noise)?;
        datasets::write_bbs_case(
            &a.common.out,
            &format!("pair{n:03}"),
            (&first.image, &second.image),
            (first.boxes[0], second.boxes[0]),
        )?;
    }
    println!("wrote {} pairs to {}", a.pairs, a.common.out.display());
    Ok(())
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Match(a) => &a.common,
        Command::BenchBbs(a) => &a.common,
        Command::BenchVggCorrespond(a) | Command::BenchVggDetect(a) => &a.common,
        Command::Sweep(a) => &a.common,
        Command::Timing(a) => &a.common,
        Command::SynthBbs(a) => &a.common,
    }
}

/// Runs a parsed command on a pool of `--threads` workers.
pub fn execute(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common(&cli.command).threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Match(a) => cmd_match(a),
        Command::BenchBbs(a) => cmd_bench_bbs(a),
        Command::BenchVggCorrespond(a) => cmd_bench_vgg_correspond(a),
        Command::BenchVggDetect(a) => cmd_bench_vgg_detect(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Timing(a) => cmd_timing(a),
        Command::SynthBbs(a) => cmd_synth_bbs(a),
    })
}

/// Entry point of the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
