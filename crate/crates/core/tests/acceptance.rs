//! Acceptance suite. Prints one line per criterion and fails if any criterion
//! fails. Dataset-backed criteria run when their roots are set:
//!
//! - `DIM_BBS_ROOT`: pair dataset (criteria 9, 10, 13)
//! - `DIM_OTHER_IMAGE`: unrelated image for criterion 10
//! - `DIM_VGG_ROOT`: directory of sequences (criteria 11, 12)

mod common;

use std::path::PathBuf;
use std::time::Instant;

use common::{max_rel_err, naive_xcorr, naive_zncc, random_image, random_plane};
use dimmatch::bench::{self, AdditionalKind, MatchConfig, Method, SweepParam};
use dimmatch::conv::{conv2_same, relative_error, xcorr2_same, ConvMode};
use dimmatch::datasets::{self, load_bbs_dataset, load_vgg_sequence, PairCase, SequenceCase};
use dimmatch::dim::{self, bank_from_specs, dim_solve, kl_divergence, prepare_input, DimParams, DimSolver, PatchSpec};
use dimmatch::eval::{iou, pr_curve, success_curve, BoundingBox, Detection, DetectionCase, SuccessCurve};
use dimmatch::keypoints::{select_additional, SelectionStrategy};
use dimmatch::zncc::{zncc_match, zncc_plane};
use dimmatch::{ChannelStack, Colorspace, Padding, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances.
const CONV_REL_TOL: f64 = 1e-6;
const CLOSED_FORM_REL_TOL: f64 = 1e-10;
const ZNCC_ABS_TOL: f64 = 1e-10;
const METRIC_TOL: f64 = 1e-12;
const KL_MIN_SCENES: usize = 95;
const LOCALIZE_MIN_SCENES: usize = 95;
const LOCALIZE_PX: i64 = 1;
const SPARSITY_MIN_SCENES: usize = 90;
const SPARSITY_LEVEL: f64 = 0.1;
const BBS_TOL: f64 = 0.02;
const VGG_CORRESPOND_TOL: f64 = 0.02;
const VGG_DETECT_TOL: f64 = 0.03;
const SWEEP_TOL: f64 = 0.02;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from).filter(|p| p.exists())
}

fn conv_backends() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (w, h) = (rng.random_range(1..=48), rng.random_range(1..=48));
        let (kw, kh) = (rng.random_range(1..=w.min(25)), rng.random_range(1..=h.min(25)));
        let p = random_plane(&mut rng, w, h);
        let k = random_plane(&mut rng, kw, kh);
        for f in [xcorr2_same, conv2_same] {
            let d = f(&p, &k, ConvMode::Direct).unwrap();
            let q = f(&p, &k, ConvMode::Fourier).unwrap();
            worst = worst.max(relative_error(&q, &d));
        }
    }
    verdict(
        worst <= CONV_REL_TOL,
        format!("200 instances, max relative error {worst:.2e} (tol {CONV_REL_TOL:e})"),
    )
}

fn random_box(rng: &mut ChaCha8Rng, img: (usize, usize), tpl: (usize, usize)) -> BoundingBox {
    let x = rng.random_range(0..=img.0 - tpl.0) as i64;
    let y = rng.random_range(0..=img.1 - tpl.1) as i64;
    BoundingBox::new(x, y, tpl.0 as i64, tpl.1 as i64).unwrap()
}

fn closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for scene in 0..20 {
        let dims = (rng.random_range(30..=60), rng.random_range(30..=60));
        let channels = if scene % 2 == 0 { 1 } else { 3 };
        let img = random_image(100 + scene, dims.0, dims.1, channels);
        let tpl = (rng.random_range(3..=11), rng.random_range(3..=11));
        let n = rng.random_range(1..=4);
        let specs: Vec<PatchSpec<'_>> = (0..n).map(|_| PatchSpec::new(&img, random_box(&mut rng, dims, tpl))).collect();
        let params = DimParams {
            iterations: Some(1),
            ..DimParams::default()
        };
        let bank = bank_from_specs(&specs, &params).unwrap();
        let x = prepare_input(&img, tpl.0, tpl.1, &params).unwrap();
        let y = dim_solve(&x, &bank, &params).unwrap();
        let ratio = params.resolved_epsilon1(&bank) / params.epsilon2;
        for j in 0..bank.len() {
            let mut oracle = Plane::zeros(x.width(), x.height());
            for i in 0..bank.channels() {
                let c = naive_xcorr(x.plane(i), bank.w(j, i));
                for (o, v) in oracle.data_mut().iter_mut().zip(c.data()) {
                    *o += ratio * v;
                }
            }
            worst = worst.max(max_rel_err(y.map(j), &oracle));
        }
    }
    verdict(
        worst <= CLOSED_FORM_REL_TOL,
        format!("20 scenes, max relative error {worst:.2e} (tol {CLOSED_FORM_REL_TOL:e})"),
    )
}

fn zero_fixed_point() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for case in 0..6 {
        let channels = if case % 2 == 0 { 2 } else { 6 };
        let tpl = (rng.random_range(3..=9), rng.random_range(3..=9));
        let pad = Padding::symmetric(tpl.0, tpl.1);
        let dims = (40 + 2 * tpl.0, 36 + 2 * tpl.1);
        let x = ChannelStack::new(vec![Plane::zeros(dims.0, dims.1); channels], pad).unwrap();
        let patches: Vec<Vec<Plane>> = (0..3)
            .map(|_| (0..channels).map(|_| random_plane(&mut rng, tpl.0, tpl.1)).collect())
            .collect();
        let bank = dim::build_bank(&patches).unwrap();
        for iterations in [1, 2, 10, 25] {
            for conv_mode in [ConvMode::Direct, ConvMode::Fourier] {
                let params = DimParams {
                    iterations: Some(iterations),
                    conv_mode,
                    ..DimParams::default()
                };
                let y = dim_solve(&x, &bank, &params).unwrap();
                if y.maps().iter().any(|m| m.data().iter().any(|&v| v != 0.0)) {
                    return Fail(format!("non-zero response after {iterations} iterations ({conv_mode:?})"));
                }
                checked += 1;
            }
        }
    }
    Pass(format!("{checked} solves from X = 0 stayed exactly 0"))
}

fn kl_descent() -> Outcome {
    let mut descended = 0;
    for seed in 0..100u64 {
        let scene = datasets::synth_scene(seed, 3, (9, 9), (48, 48), 0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut specs: Vec<PatchSpec<'_>> = scene.boxes.iter().map(|b| PatchSpec::new(&scene.image, *b)).collect();
        specs.push(PatchSpec::new(&scene.image, random_box(&mut rng, (48, 48), (9, 9))));
        let params = DimParams::default();
        let bank = bank_from_specs(&specs, &params).unwrap();
        let x = prepare_input(&scene.image, 9, 9, &params).unwrap();
        let solver = DimSolver::new(&bank, x.dims(), &params).unwrap();
        let kl_after = |n: usize| {
            let y = solver.solve(&x, n).unwrap();
            let r = solver.reconstruct(y.maps()).unwrap();
            kl_divergence(x.planes(), &r, params.epsilon2)
        };
        if kl_after(params.resolved_iterations(bank.len())) < kl_after(1) {
            descended += 1;
        }
    }
    verdict(
        descended >= KL_MIN_SCENES,
        format!("KL decreased on {descended}/100 scenes (need {KL_MIN_SCENES})"),
    )
}

/// Query scene with one plant, plus a separate source scene the template is
/// cut from.
struct PlantedPair {
    query: datasets::SynthScene,
    source: datasets::SynthScene,
}

fn planted_pair(seed: u64) -> PlantedPair {
    let plant = datasets::random_plants(seed, 1, (17, 17), 3);
    PlantedPair {
        query: datasets::synth_scene_with_plants(2 * seed + 1, &plant, (128, 128), 0.02).unwrap(),
        source: datasets::synth_scene_with_plants(2 * seed + 2, &plant, (128, 128), 0.0).unwrap(),
    }
}

fn chebyshev(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn argmax(map: &Plane) -> (i64, i64) {
    let (x, y, _) = map.argmax();
    (x as i64, y as i64)
}

fn planted_localization() -> Outcome {
    let params = DimParams::default();
    let (mut dim_hits, mut zncc_exact, mut agree) = (0, 0, 0);
    for seed in 0..100u64 {
        let pair = planted_pair(seed);
        let target = PatchSpec::new(&pair.source.image, pair.source.boxes[0]);
        let centre = pair.query.boxes[0].center();
        let noisy = dim::match_templates(&pair.query.image, target, &[], &params).unwrap();
        if chebyshev(argmax(noisy.map(0)), centre) <= LOCALIZE_PX {
            dim_hits += 1;
        }
        let clean = dim::match_templates(&pair.query.clean, target, &[], &params).unwrap();
        let z = zncc_match(&pair.query.clean, &pair.query.plants[0], Colorspace::Hsv).unwrap();
        let z_peak = argmax(&z.map);
        if z_peak == centre {
            zncc_exact += 1;
        }
        if chebyshev(argmax(clean.map(0)), z_peak) <= LOCALIZE_PX {
            agree += 1;
        }
    }
    verdict(
        dim_hits >= LOCALIZE_MIN_SCENES && zncc_exact == 100 && agree == 100,
        format!(
            "DIM within {LOCALIZE_PX} px on {dim_hits}/100 noisy scenes (need {LOCALIZE_MIN_SCENES}); noise-free: ZNCC exact {zncc_exact}/100, DIM agrees with ZNCC {agree}/100"
        ),
    )
}

fn fraction_above(map: &Plane, level: f64) -> f64 {
    let cut = level * map.max();
    map.data().iter().filter(|&&v| v > cut).count() as f64 / map.len() as f64
}

fn sparsity_ordering() -> Outcome {
    let params = DimParams::default();
    let mut sparser = 0;
    let (mut dim_mean, mut zncc_mean) = (0.0, 0.0);
    for seed in 0..100u64 {
        let pair = planted_pair(seed);
        let src = &pair.source.image;
        let target = pair.source.boxes[0];
        let extra = select_additional(src, &target, &SelectionStrategy::MaxCorrelation, 4).unwrap();
        let specs: Vec<PatchSpec<'_>> = extra.iter().map(|b| PatchSpec::new(src, *b)).collect();
        let d = dim::match_templates(&pair.query.image, PatchSpec::new(src, target), &specs, &params).unwrap();
        let z = zncc_match(&pair.query.image, &src.crop(&target).unwrap(), Colorspace::Hsv).unwrap();
        let (fd, fz) = (fraction_above(d.map(0), SPARSITY_LEVEL), fraction_above(&z.map, SPARSITY_LEVEL));
        dim_mean += fd / 100.0;
        zncc_mean += fz / 100.0;
        if fd < fz {
            sparser += 1;
        }
    }
    verdict(
        sparser >= SPARSITY_MIN_SCENES,
        format!(
            "DIM sparser on {sparser}/100 scenes (need {SPARSITY_MIN_SCENES}); mean fraction above {SPARSITY_LEVEL} of max: DIM {dim_mean:.4}, ZNCC {zncc_mean:.4}"
        ),
    )
}

fn zncc_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let (w, h) = (rng.random_range(16..=30), rng.random_range(16..=30));
        let (tw, th) = (rng.random_range(2..=9), rng.random_range(2..=9));
        let channels = if case % 2 == 0 { 1 } else { 3 };
        let img = random_image(500 + case, w, h, channels);
        let tpl = random_image(900 + case, tw, th, channels);
        let fast = if channels == 1 {
            zncc_plane(img.plane(0), tpl.plane(0), ConvMode::Auto).unwrap().unwrap()
        } else {
            zncc_match(&img, &tpl, Colorspace::Rgb).unwrap().map
        };
        let mut naive = Plane::zeros(w, h);
        for c in 0..channels {
            let m = naive_zncc(img.plane(c), tpl.plane(c));
            for (a, b) in naive.data_mut().iter_mut().zip(m.data()) {
                *a += b;
            }
        }
        let diff = fast
            .data()
            .iter()
            .zip(naive.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    verdict(
        worst <= ZNCC_ABS_TOL,
        format!("50 instances, max abs difference {worst:.2e} (tol {ZNCC_ABS_TOL:e})"),
    )
}

fn metric_oracles() -> Outcome {
    let bb = |x, y, w, h| BoundingBox::new(x, y, w, h).unwrap();
    let grid = SuccessCurve::default_thresholds();
    let auc = |v: &[f64]| success_curve(v, &grid).unwrap().auc;
    let det = |b: BoundingBox, score: f64| Detection { bbox: b, score };
    let f = |cases: &[DetectionCase]| pr_curve(cases, 0.5, &[0.0]).unwrap().best_fscore;
    let gt = bb(10, 10, 10, 10);
    let checks = [
        ("iou identical", iou(&gt, &gt), 1.0),
        ("iou disjoint", iou(&bb(0, 0, 5, 5), &bb(5, 0, 5, 5)), 0.0),
        ("iou half shift", iou(&bb(0, 0, 10, 10), &bb(5, 0, 10, 10)), 1.0 / 3.0),
        ("auc all ones", auc(&[1.0; 5]), 1.0),
        ("auc all zeros", auc(&[0.0; 5]), 0.0),
        ("auc {0.2, 0.8}", auc(&[0.2, 0.8]), 0.5),
        (
            "f perfect",
            f(&[DetectionCase {
                detections: vec![det(gt, 1.0)],
                ground_truth: vec![gt],
            }]),
            1.0,
        ),
        (
            "f nothing detected",
            f(&[DetectionCase {
                detections: vec![],
                ground_truth: vec![gt],
            }]),
            0.0,
        ),
        (
            "f duplicate detection",
            f(&[DetectionCase {
                detections: vec![det(gt, 1.0), det(gt.translate(1, 0), 0.9)],
                ground_truth: vec![gt],
            }]),
            2.0 / 3.0,
        ),
    ];
    let bad: Vec<String> = checks
        .iter()
        .filter(|(_, got, want)| !within(*got, *want, METRIC_TOL))
        .map(|(n, got, want)| format!("{n}: {got} != {want}"))
        .collect();
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} hand-computed cases", checks.len())
        } else {
            bad.join("; ")
        },
    )
}

fn load_pairs() -> Result<Vec<PairCase>, Outcome> {
    let Some(root) = env_path("DIM_BBS_ROOT") else {
        return Err(Skip("DIM_BBS_ROOT not set; pair dataset not staged".into()));
    };
    load_bbs_dataset(&root).map_err(|e| Fail(format!("loading {}: {e}", root.display())))
}

fn bbs_table() -> Outcome {
    let cases = match load_pairs() {
        Ok(c) => c,
        Err(o) => return o,
    };
    let runs = [
        ("DIM up to 4 additional", MatchConfig::dim(4), 0.69),
        ("DIM single template", MatchConfig::dim(0), 0.58),
        ("ZNCC", MatchConfig::zncc(), 0.54),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, cfg, target) in runs {
        match bench::run_pairs(&cases, &cfg) {
            Ok(r) => {
                ok &= within(r.curve.auc, target, BBS_TOL);
                parts.push(format!("{name} {:.3} (target {target}, {:.0} s)", r.curve.auc, r.seconds));
            }
            Err(e) => return Fail(format!("{name}: {e}")),
        }
    }
    verdict(ok, parts.join("; "))
}

fn additional_scaling() -> Outcome {
    let cases = match load_pairs() {
        Ok(c) => c,
        Err(o) => return o,
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, kind) in [
        ("maxcorr", AdditionalKind::MaxCorrelation),
        ("keypoint", AdditionalKind::Keypoint),
        ("random", AdditionalKind::Random),
    ] {
        for n in [20, 30] {
            let cfg = MatchConfig {
                additional: kind.clone(),
                ..MatchConfig::dim(n)
            };
            match bench::run_pairs(&cases, &cfg) {
                Ok(r) => {
                    ok &= (0.66 - BBS_TOL..=0.69 + BBS_TOL).contains(&r.curve.auc);
                    parts.push(format!("{name}@{n} {:.3}", r.curve.auc));
                }
                Err(e) => return Fail(format!("{name}@{n}: {e}")),
            }
        }
    }
    match env_path("DIM_OTHER_IMAGE") {
        Some(p) => {
            let cfg = MatchConfig {
                additional: AdditionalKind::Other(p),
                ..MatchConfig::dim(20)
            };
            match bench::run_pairs(&cases, &cfg) {
                Ok(r) => {
                    ok &= r.curve.auc >= 0.64;
                    parts.push(format!("unrelated@20 {:.3} (need >= 0.64)", r.curve.auc));
                }
                Err(e) => return Fail(format!("unrelated image: {e}")),
            }
        }
        None => parts.push("unrelated-image part skipped: DIM_OTHER_IMAGE not set".into()),
    }
    verdict(ok, format!("plateau band [0.66, 0.69] +/- {BBS_TOL}: {}", parts.join(", ")))
}

fn load_sequences() -> Result<Vec<SequenceCase>, Outcome> {
    let Some(root) = env_path("DIM_VGG_ROOT") else {
        return Err(Skip("DIM_VGG_ROOT not set; sequence dataset not staged".into()));
    };
    let dirs = datasets::list_vgg_sequences(&root).map_err(|e| Fail(e.to_string()))?;
    dirs.iter()
        .map(|d| load_vgg_sequence(d, 0.5).map_err(|e| Fail(e.to_string())))
        .collect()
}

fn vgg_correspondence() -> Outcome {
    let seqs = match load_sequences() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let targets = [
        (Method::Dim, [0.5591, 0.6308, 0.6569]),
        (Method::Zncc, [0.4996, 0.5937, 0.6314]),
    ];
    let params = DimParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, want) in targets {
        for (t, target) in [17, 33, 49].into_iter().zip(want) {
            match bench::run_sequence_correspond(&seqs, method, &params, t) {
                Ok(r) => {
                    ok &= within(r.pooled.auc, target, VGG_CORRESPOND_TOL);
                    parts.push(format!("{method:?}/{t} {:.4} (target {target})", r.pooled.auc));
                }
                Err(e) => return Fail(e.to_string()),
            }
        }
    }
    verdict(ok, parts.join("; "))
}

fn vgg_detection() -> Outcome {
    let seqs = match load_sequences() {
        Ok(s) => s,
        Err(o) => return o,
    };
    let targets = [
        (Method::Dim, [0.6542, 0.7230, 0.7513]),
        (Method::Zncc, [0.2842, 0.5508, 0.5493]),
    ];
    let params = DimParams::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, want) in targets {
        for (t, target) in [17, 33, 49].into_iter().zip(want) {
            match bench::run_sequence_detect(&seqs, method, &params, t, bench::DETECT_KEYPOINTS) {
                Ok(r) => {
                    ok &= within(r.curve.best_fscore, target, VGG_DETECT_TOL);
                    parts.push(format!("{method:?}/{t} {:.4} (target {target})", r.curve.best_fscore));
                }
                Err(e) => return Fail(e.to_string()),
            }
        }
    }
    verdict(ok, parts.join("; "))
}

fn parameter_sensitivity() -> Outcome {
    let cases = match load_pairs() {
        Ok(c) => c,
        Err(o) => return o,
    };
    let cfg = MatchConfig::dim(4);
    let spots = [
        ("baseline", SweepParam::Lambda, 1.0, 0.690),
        ("lambda/10", SweepParam::Lambda, 0.1, 0.695),
        ("iterations/10", SweepParam::Iterations, 0.1, 0.451),
        ("epsilon2*10", SweepParam::Epsilon2, 10.0, 0.624),
        ("sigma*10", SweepParam::Sigma, 10.0, 0.554),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, param, factor, target) in spots {
        match bench::run_sweep(&cases, &cfg, param, &[factor]) {
            Ok(p) => {
                ok &= within(p[0].auc, target, SWEEP_TOL);
                parts.push(format!("{name} {:.3} (target {target})", p[0].auc));
            }
            Err(e) => return Fail(format!("{name}: {e}")),
        }
    }
    verdict(ok, parts.join("; "))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "convolution backend equivalence", conv_backends),
        (2, "first-iteration closed form", closed_form),
        (3, "zero fixed point", zero_fixed_point),
        (4, "KL descent", kl_descent),
        (5, "planted-template localization", planted_localization),
        (6, "sparsity ordering", sparsity_ordering),
        (7, "ZNCC brute-force equivalence", zncc_brute_force),
        (8, "metric oracles", metric_oracles),
        (9, "pair benchmark AUC", bbs_table),
        (10, "additional-template scaling", additional_scaling),
        (11, "sequence correspondence AUC", vgg_correspondence),
        (12, "sequence detection f-score", vgg_detection),
        (13, "parameter sensitivity", parameter_sensitivity),
    ];
    let filter: Option<u32> = std::env::args()
        .skip(1)
        .find(|a| !a.starts_with('-'))
        .and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("[{tag}] criterion {id:>2} {name}: {detail} [{secs:.1}s]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
