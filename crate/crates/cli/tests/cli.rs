use std::path::Path;
use std::process::{Command, Output};

use proxmag::{cimg, Complex64, ComplexImage, Shape};

fn proxmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxmag"))
        .args(args)
        .env("PROXMAG_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn pgm_pixels(path: &Path, n: usize) -> Vec<u8> {
    let bytes = std::fs::read(path).unwrap();
    assert!(bytes.starts_with(b"P5"));
    bytes[bytes.len() - n..].to_vec()
}

fn write_image(path: &Path, shape: Shape, data: Vec<Complex64>) {
    cimg::write(path, &ComplexImage::new(shape, data).unwrap()).unwrap();
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let out = proxmag(&["simulate", "--size", "16", "--seed", seed, "-o", p(dir)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["phase_history_c0.cimg", "geometry_c0.json", "truth.cimg", "truth_mag_db.pgm"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(
        std::fs::read(a.join("phase_history_c0.cimg")).unwrap(),
        std::fs::read(c.join("phase_history_c0.cimg")).unwrap()
    );
}

#[test]
fn zero_phantom_gives_all_zero_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("zero.json");
    std::fs::write(&cfg, r#"{"scene": {"phantom": {"type": "zero"}, "height": 8, "width": 8, "snr_db": null}}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = proxmag(&["simulate", "--config", p(&cfg), "-o", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let data = cimg::read(out_dir.join("phase_history_c0.cimg")).unwrap();
    assert!(!data.is_empty());
    assert!(data.data().iter().all(|v| v.re == 0.0 && v.im == 0.0));
}

#[test]
fn flags_override_config_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"seed": 5, "scene": {"height": 8, "width": 8}}"#).unwrap();
    let out_dir = tmp.path().join("out");
    let out = proxmag(&["simulate", "--config", p(&cfg), "--seed", "7", "-o", p(&out_dir)]);
    assert_eq!(code(&out), 0);
    let echo: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("experiment.json")).unwrap()).unwrap();
    assert_eq!(echo["seed"], 7);
    assert_eq!(echo["scene"]["height"], 8);
}

#[test]
fn exit_codes_separate_usage_from_runtime_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"sede": 1}"#).unwrap();
    assert_eq!(code(&proxmag(&["simulate", "--config", p(&bad)])), 2);
    assert_eq!(code(&proxmag(&["simulate", "--config", p(&tmp.path().join("missing.json"))])), 2);
    assert_eq!(code(&proxmag(&["simulate", "--size", "0", "-o", p(tmp.path())])), 2);
    let stray = tmp.path().join("stray.json");
    std::fs::write(&stray, r#"{"regularizer": {"name": "box", "lambda": 1.0, "params": {"alpha": 1.0}}}"#).unwrap();
    assert_eq!(code(&proxmag(&["simulate", "--config", p(&stray), "-o", p(tmp.path())])), 2);
    assert_eq!(code(&proxmag(&["reconstruct", "--regularizer", "tv-magic", "-o", p(tmp.path())])), 2);
    assert_eq!(code(&proxmag(&["prox-test", "no-such-suite"])), 2);
    assert_eq!(code(&proxmag(&["frobnicate"])), 2);
    assert_eq!(code(&proxmag(&["reconstruct", "-o", p(&tmp.path().join("empty"))])), 1);
    let out = proxmag(&["prox-test", "levelset", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("properties passed"));
}

#[test]
fn mag_db_matches_hand_computed_levels() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.cimg");
    let mags = [1.0, 0.1, 0.01, 0.05, 0.0];
    write_image(&input, Shape::single(1, 5), mags.iter().map(|&m| Complex64::new(0.0, m)).collect());
    let out = tmp.path().join("out.pgm");
    assert_eq!(code(&proxmag(&["render", "mag-db", p(&input), "-o", p(&out)])), 0);
    // 20·log10 gives 0, −20, −40, −26.02 dB; (dB + 31)/25·255 clipped to [0, 255].
    assert_eq!(pgm_pixels(&out, 5), vec![255, 112, 0, 51, 0]);

    let out = tmp.path().join("wide.pgm");
    assert_eq!(
        code(&proxmag(&["render", "mag-db", p(&input), "-o", p(&out), "--db-min", "-40", "--db-max", "0"])),
        0
    );
    // (dB + 40)/40·255: 255, 127.5, 0, 88.9, 0.
    assert_eq!(pgm_pixels(&out, 5), vec![255, 128, 0, 89, 0]);
}

#[test]
fn constant_magnitude_renders_at_window_top() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.cimg");
    let data = (0..4).map(|k| Complex64::from_polar(2.5, k as f64)).collect();
    write_image(&input, Shape::single(2, 2), data);
    let out = tmp.path().join("out.pgm");
    assert_eq!(code(&proxmag(&["render", "mag-db", p(&input), "-o", p(&out)])), 0);
    assert_eq!(pgm_pixels(&out, 4), vec![255; 4]);
}

#[test]
fn phase_difference_with_itself_is_zero_and_shapes_must_match() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.cimg");
    let b = tmp.path().join("b.cimg");
    write_image(&a, Shape::single(2, 2), (0..4).map(|k| Complex64::from_polar(1.0 + k as f64, 0.7 * k as f64)).collect());
    write_image(&b, Shape::single(1, 4), vec![Complex64::new(1.0, 0.0); 4]);
    let out = tmp.path().join("d.cimg");
    assert_eq!(code(&proxmag(&["render", "phase-diff", p(&a), "--other", p(&a), "-o", p(&out)])), 0);
    let d = cimg::read(&out).unwrap();
    assert!(d.data().iter().all(|v| v.arg().abs() < 1e-12 && (v.norm() - 1.0).abs() < 1e-12));
    let png = tmp.path().join("d.png");
    assert_eq!(code(&proxmag(&["render", "phase-diff", p(&a), "--other", p(&b), "-o", p(&png)])), 2);
    assert_eq!(code(&proxmag(&["render", "phase-diff", p(&a), "-o", p(&png)])), 2);
    assert_eq!(code(&proxmag(&["render", "phase", p(&a), "-o", p(&png)])), 0);
}

fn trace_objectives(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(proxmag::solvers::TRACE_CSV_HEADER));
    lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect()
}

fn is_non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
}

#[test]
fn least_squares_run_has_a_monotone_tail() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&proxmag(&["simulate", "--size", "16", "--seed", "2", "-o", p(dir)])), 0);
    let out = proxmag(&["reconstruct", "-o", p(dir), "--lambda", "0", "--iterations", "200"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let obj = trace_objectives(&dir.join("recon_trace.csv"));
    assert_eq!(obj.len(), 201);
    assert!(is_non_increasing(&obj[100..]), "{obj:?}");
    assert!(obj[200] < obj[0]);
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("recon_metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["final_reg"], 0.0);
    assert!(metrics["psnr_db"].as_f64().unwrap().is_finite());
}

#[test]
fn gtik_reconstructs_three_channels_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out_dir = tmp.path().join("out");
    assert_eq!(code(&proxmag(&["simulate", "--size", "16", "--channels", "3", "-o", p(&data)])), 0);
    let out = proxmag(&[
        "reconstruct", "--data", p(&data), "-o", p(&out_dir), "--regularizer", "gtik", "--lambda", "0.5", "--iterations", "120",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = cimg::read(out_dir.join("recon.cimg")).unwrap();
    assert_eq!(rec.shape(), Shape::new(3, 16, 16));
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("recon_metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["channels"], 3);
    assert_eq!(metrics["iterations"], 120);
    let obj = trace_objectives(&out_dir.join("recon_trace.csv"));
    // PDHG overshoots early; the tail settles into monotone descent.
    assert!(is_non_increasing(&obj[60..]), "{obj:?}");
    for f in ["recon_mag_db.pgm", "recon_mag_db.png", "recon_phase.png"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}
