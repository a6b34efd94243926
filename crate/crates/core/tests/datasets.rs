use std::fs;
use std::path::Path;

use dimmatch::bench::{run_sequence_correspond, run_sequence_detect, Method};
use dimmatch::datasets::{load_bbs_dataset, load_vgg_sequence, synth_scene, write_bbs_case};
use dimmatch::dim::DimParams;
use dimmatch::io::{load_image, save_image};
use dimmatch::{BoundingBox, Error, Homography, Image};

fn bb(x: i64, y: i64, w: i64, h: i64) -> BoundingBox {
    BoundingBox::new(x, y, w, h).unwrap()
}

fn scene(seed: u64) -> Image {
    synth_scene(seed, 6, (12, 12), (96, 80), 0.0).unwrap().image
}

#[test]
fn pair_layout_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut expected = Vec::new();
    for n in 0..3u64 {
        let (a, b) = (scene(n), scene(n + 10));
        let boxes = (bb(n as i64, 2, 20, 15), bb(5, n as i64 * 3, 20, 15));
        write_bbs_case(dir.path(), &format!("case{n}"), (&a, &b), boxes).unwrap();
        expected.push((format!("case{n}"), boxes, a));
    }
    let cases = load_bbs_dataset(dir.path()).unwrap();
    assert_eq!(cases.len(), 3);
    for (c, (id, boxes, a)) in cases.iter().zip(&expected) {
        assert_eq!(&c.id, id);
        assert_eq!((c.gt_box1, c.gt_box2), *boxes);
        let (img1, _) = c.load_images().unwrap();
        // 8-bit storage
        for (p, q) in img1.planes().iter().zip(a.planes()) {
            assert!(p.data().iter().zip(q.data()).all(|(u, v)| (u - v).abs() <= 0.5 / 255.0 + 1e-9));
        }
    }
    assert_eq!(load_bbs_dataset(dir.path()).unwrap(), cases);
}

#[test]
fn pair_layout_errors_name_the_case() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene(1);
    let case = write_bbs_case(dir.path(), "bad", (&img, &img), (bb(0, 0, 5, 5), bb(0, 0, 5, 5))).unwrap();
    let gt = case.join("gt.txt");

    fs::write(&gt, "0 0 5 5\n0 0 5\n").unwrap();
    let err = load_bbs_dataset(dir.path()).unwrap_err();
    assert!(matches!(&err, Error::Dataset { case, .. } if case == "bad"), "{err}");

    fs::write(&gt, "0,0,5,5\n90,70,10,10\n").unwrap();
    let err = load_bbs_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("exceeds"), "{err}");

    fs::write(&gt, "0 0 5 5\n1 1 5 5\n").unwrap();
    assert_eq!(load_bbs_dataset(dir.path()).unwrap()[0].gt_box2, bb(1, 1, 5, 5));

    fs::remove_file(case.join("2.png")).unwrap();
    let err = load_bbs_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("missing image 2"), "{err}");
}

fn write_sequence(dir: &Path, images: &[Image], h: [f64; 9]) {
    fs::create_dir_all(dir).unwrap();
    for (k, img) in images.iter().enumerate() {
        save_image(dir.join(format!("img{}.png", k + 1)), img).unwrap();
    }
    let text = h.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    for k in 2..=6 {
        fs::write(dir.join(format!("H1to{k}p")), &text).unwrap();
    }
}

const IDENTITY: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

#[test]
fn sequence_identity_at_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene(2);
    write_sequence(dir.path(), &vec![img; 6], IDENTITY);
    let s = load_vgg_sequence(dir.path(), 1.0).unwrap();
    assert_eq!(s.images.len(), 6);
    assert_eq!(s.homographies.len(), 5);
    assert_eq!(s.images[3], load_image(dir.path().join("img1.png")).unwrap());
    assert_eq!(s.homographies[0].apply(12.0, 7.0).unwrap(), (12.0, 7.0));
}

#[test]
fn sequence_rescaling_conjugates_homographies() {
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path(), &vec![scene(3); 6], [1.0, 0.0, 8.0, 0.0, 1.0, -4.0, 0.0, 0.0, 1.0]);
    let s = load_vgg_sequence(dir.path(), 0.5).unwrap();
    assert_eq!(s.images[0].dims(), (48, 40));
    // (100, 60) -> (108, 56) at full size, so (50, 30) -> (54, 28) at half size
    let (u, v) = s.homographies[2].apply(50.0, 30.0).unwrap();
    assert!((u - 54.0).abs() < 1e-9 && (v - 28.0).abs() < 1e-9);
}

#[test]
fn sequence_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_sequence(dir.path(), &vec![scene(4); 6], IDENTITY);
    fs::write(dir.path().join("H1to4p"), "1 0 0 0 1 0 0 0 0").unwrap();
    let err = load_vgg_sequence(dir.path(), 1.0).unwrap_err();
    assert!(err.to_string().contains("singular"), "{err}");
    fs::write(dir.path().join("H1to4p"), "1 0 0 0 1 0 0 0").unwrap();
    assert!(load_vgg_sequence(dir.path(), 1.0).is_err());
    fs::write(dir.path().join("H1to4p"), "1 0 0 0 1 0 0 0 1").unwrap();
    fs::remove_file(dir.path().join("img6.png")).unwrap();
    let err = load_vgg_sequence(dir.path(), 1.0).unwrap_err();
    assert!(err.to_string().contains("img6"), "{err}");
}

#[test]
fn self_sequence_is_matched_perfectly_by_zncc() {
    let dir = tempfile::tempdir().unwrap();
    let img = synth_scene(11, 20, (12, 12), (128, 112), 0.0).unwrap().image;
    let seq_dir = dir.path().join("self");
    write_sequence(&seq_dir, &vec![img; 6], IDENTITY);
    let seq = load_vgg_sequence(&seq_dir, 1.0).unwrap();
    let r = run_sequence_correspond(std::slice::from_ref(&seq), Method::Zncc, &DimParams::default(), 17).unwrap();
    assert!(!r.matches.is_empty());
    assert_eq!(r.matches.len() % 5, 0);
    assert_eq!(r.pooled.auc, 1.0);
}

#[test]
fn detection_protocol_counts_every_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let mut seqs = Vec::new();
    for n in 0..2u64 {
        let img = synth_scene(20 + n, 20, (12, 12), (120, 100), 0.0).unwrap().image;
        let d = dir.path().join(format!("s{n}"));
        write_sequence(&d, &vec![img; 6], IDENTITY);
        seqs.push(load_vgg_sequence(&d, 1.0).unwrap());
    }
    let r = run_sequence_detect(&seqs, Method::Zncc, &DimParams::default(), 17, 3).unwrap();
    assert_eq!(r.queries, 10);
    assert!(r.templates <= 6 && r.templates > 0);
    // every template has exactly one ground-truth box in each query of its own sequence
    let p = &r.curve.points[0];
    assert_eq!(p.tp + p.fn_, r.templates * 5);
    assert!(r.curve.best_fscore > 0.5);
    let d = run_sequence_detect(&seqs, Method::Dim, &DimParams::default(), 17, 3).unwrap();
    assert!(d.curve.best_fscore > 0.5);
}

#[test]
fn homography_file_is_row_major() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("H");
    fs::write(&p, "2 0 1\n0 3 0\n0 0 1\n").unwrap();
    let h = dimmatch::datasets::read_homography(&p, "x").unwrap();
    assert_eq!(h, Homography::from_row_major([2.0, 0.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0]).unwrap());
    assert_eq!(h.apply(1.0, 1.0).unwrap(), (3.0, 3.0));
}
