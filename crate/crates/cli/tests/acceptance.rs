//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use echoaug::diffusion::{sample, GaussianOracle, NoiseSchedule};
use echoaug::ef::{
    biplane_volume, ef_fraction, exam_ef, is_out_of_range, Cycle, DiscStack, ExamRecord, PhaseFrame,
};
use echoaug::metrics::{boundary_pixels, dice, hausdorff_mm, squared_distance_transform, ssim};
use echoaug::repaint::{inpaint, RepaintConfig};
use echoaug::rng::{seeded, stream};
use echoaug::survey::binomial_test;
use echoaug::transform::sample_spec;
use echoaug::{
    apply_transform, sector_mask, AugmentationKind, AugmentationSpec, Frame64, Geometry64, Image64, KeepMask, Label,
    LabelMask,
};
use ndarray::Array2;
use rand::Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn repaint_preservation() -> Result<String, String> {
    let train = NoiseSchedule::<f64>::cosine(250).map_err(|e| e.to_string())?;
    let config = RepaintConfig {
        jump_length: 5,
        resamples: 3,
        inference_steps: 50,
    };
    let chain = config.chain(&train).map_err(|e| e.to_string())?;
    let oracle = GaussianOracle::uniform((64, 64), 0.0, 0.2, chain).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = stream(2024, "repaint-acceptance", trial);
        let input = Image64::from_fn(64, 64, |_| rng.random::<f64>()).unwrap();
        let density = rng.random_range(0.1..0.9);
        let keep = KeepMask::new(Array2::from_shape_fn((64, 64), |_| rng.random_bool(density)));
        let out = inpaint(&train, &oracle, &input, &keep, &config, &mut rng).map_err(|e| e.to_string())?;
        for ((idx, k), v) in keep.as_array().indexed_iter().zip(out.pixels()) {
            if *k {
                worst = worst.max((v - input.pixels()[idx]).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("kept pixel moved by {worst:e}"))?;
    Ok(format!("100 triples at 64x64, max kept-pixel deviation {worst:e}"))
}

fn sampler_correctness() -> Result<String, String> {
    let schedule = NoiseSchedule::<f64>::cosine(100).map_err(|e| e.to_string())?;
    let oracle = GaussianOracle::uniform((8, 8), 0.3, 0.01, schedule.clone()).map_err(|e| e.to_string())?;
    let n = 5000;
    let mut sum = Array2::<f64>::zeros((8, 8));
    let mut sq = Array2::<f64>::zeros((8, 8));
    for i in 0..n {
        let x = sample(&schedule, &oracle, (8, 8), &mut stream(7, "sampler-acceptance", i)).map_err(|e| e.to_string())?;
        sum += &x;
        sq += &(&x * &x);
    }
    let nf = n as f64;
    let mean = sum.sum() / (nf * 64.0);
    ensure((mean - 0.3).abs() <= 0.05, || format!("pixel mean {mean}"))?;
    let mut worst = 0.0f64;
    for (s, q) in sum.iter().zip(sq.iter()) {
        let m = s / nf;
        let var = (q - nf * m * m) / (nf - 1.0);
        worst = worst.max((var / 0.01 - 1.0).abs());
    }
    ensure(worst <= 0.15, || format!("per-pixel variance off by {:.1}%", worst * 100.0))?;
    Ok(format!("mean {mean:.4}, worst per-pixel variance error {:.1}%", worst * 100.0))
}

fn schedule_identities() -> Result<String, String> {
    let s = NoiseSchedule::<f64>::cosine(4000).map_err(|e| e.to_string())?;
    let ab = s.alpha_bars();
    ensure(ab.windows(2).all(|w| w[1] < w[0]), || "alpha_bar not strictly decreasing".into())?;
    ensure(ab[0] > 0.999, || format!("alpha_bar[0] = {}", ab[0]))?;
    ensure(ab[3999] < 1e-4, || format!("alpha_bar[3999] = {:e}", ab[3999]))?;
    let mut prod = 1.0;
    let mut worst = 0.0f64;
    for (a, b) in s.alphas().iter().zip(ab) {
        prod *= a;
        worst = worst.max((prod - b).abs());
    }
    ensure(worst <= 1e-12, || format!("cumulative product off by {worst:e}"))?;
    Ok(format!(
        "alpha_bar[0] = {:.6}, alpha_bar[3999] = {:.3e}, cumprod error {worst:e}",
        ab[0], ab[3999]
    ))
}

/// Pixels at least `margin` px from the outside of `inside`.
fn eroded(inside: &Array2<bool>, margin: f64) -> Array2<bool> {
    let outside = inside.mapv(|v| !v);
    match squared_distance_transform(&outside) {
        Some(dt) => Array2::from_shape_fn(inside.dim(), |idx| inside[idx] && dt[idx] >= margin * margin),
        None => inside.clone(),
    }
}

fn transform_suite() -> Result<String, String> {
    let frame = common::synthetic_frame(3, 256);
    for spec in [
        AugmentationSpec::identity(),
        AugmentationSpec::combination(None, None, None, None),
    ] {
        let out = apply_transform(&frame, &spec).map_err(|e| e.to_string())?;
        ensure(out.frame == frame, || "identity spec changed the frame".into())?;
    }

    let there = apply_transform(&frame, &AugmentationSpec::tilt(30.0)).map_err(|e| e.to_string())?;
    let back = apply_transform(&there.frame, &AugmentationSpec::tilt(-30.0)).map_err(|e| e.to_string())?;
    let sector = sector_mask(&frame.geometry);
    let interior = eroded(&sector, 3.0);
    let (tr, tc) = frame.geometry.tip();
    let (sin, cos) = 30f64.to_radians().sin_cos();
    let (mut err, mut n, mut disagree) = (0.0, 0usize, 0usize);
    let (src_mask, out_mask) = (frame.mask.as_ref().unwrap(), back.frame.mask.as_ref().unwrap());
    for ((r, c), inner) in interior.indexed_iter() {
        let (dy, dx) = (r as f64 - tr, c as f64 - tc);
        let (rr, rc) = (tr + dy * cos - dx * sin, tc + dy * sin + dx * cos);
        // interpolation loss only: skip content rotated off the canvas
        if !*inner || !(3.0..=252.0).contains(&rr) || !(3.0..=252.0).contains(&rc) {
            continue;
        }
        err += (frame.image.pixels()[[r, c]] - back.frame.image.pixels()[[r, c]]).abs();
        n += 1;
        disagree += usize::from(src_mask.get(r, c) != out_mask.get(r, c));
    }
    let mae = err / n as f64;
    let sector_px = sector.iter().filter(|v| **v).count();
    let mask_frac = disagree as f64 / sector_px as f64;
    ensure(n > 1000, || format!("only {n} interior pixels compared"))?;
    ensure(mae <= 0.02, || format!("tilt round-trip MAE {mae}"))?;
    ensure(mask_frac <= 0.02, || format!("mask disagreement {mask_frac}"))?;

    let g = Geometry64::new((0.0, 127.5), 120.0, 70.0, 250.0, (256, 256)).unwrap();
    let flat = Frame64::new(Image64::zeros(256, 256), None, g).unwrap();
    let deep = apply_transform(&flat, &AugmentationSpec::depth(150.0)).map_err(|e| e.to_string())?;
    let expected = 120.0 * (256.0 + 150.0) / 256.0;
    let depth_err = (deep.frame.geometry.depth_mm() - expected).abs() / expected;
    ensure(depth_err <= 1e-9, || format!("depth {} vs {expected}", deep.frame.geometry.depth_mm()))?;

    let mut rng = seeded(99);
    let mut counts = [0usize; 4];
    let draws = 100_000;
    for _ in 0..draws {
        let spec = sample_spec::<f64, _>(AugmentationKind::Combination, &mut rng);
        for (c, f) in counts.iter_mut().zip(spec.flags()) {
            *c += usize::from(f);
        }
    }
    let freqs: Vec<f64> = counts.iter().map(|c| *c as f64 / draws as f64).collect();
    ensure(freqs.iter().all(|f| (f - 0.5).abs() <= 0.01), || format!("flag frequencies {freqs:?}"))?;
    Ok(format!(
        "tilt MAE {mae:.4} over {n} px, mask disagreement {:.2}%, depth {:.4} mm, flags {:.3?}",
        mask_frac * 100.0,
        deep.frame.geometry.depth_mm(),
        freqs
    ))
}

fn brute_hausdorff(a: &LabelMask, b: &LabelMask) -> f64 {
    let pts = |m: &LabelMask| -> Vec<(f64, f64)> {
        let (rows, cols) = m.shape();
        let mut out = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if m.get(r, c) != Label::Lv {
                    continue;
                }
                let edge = r == 0 || c == 0 || r + 1 == rows || c + 1 == cols || {
                    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
                        .iter()
                        .any(|&(y, x)| m.get(y, x) != Label::Lv)
                };
                if edge {
                    out.push((r as f64, c as f64));
                }
            }
        }
        out
    };
    let (pa, pb) = (pts(a), pts(b));
    let directed = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        from.iter()
            .map(|p| to.iter().map(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(&pa, &pb).max(directed(&pb, &pa))
}

fn naive_ssim(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let w: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let total: f64 = w.iter().flat_map(|a| w.iter().map(move |b| a * b)).sum();
    let (rows, cols) = x.dim();
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut acc = 0.0;
    let mut count = 0;
    for r in 0..=rows - 11 {
        for c in 0..=cols - 11 {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = w[i] * w[j] / total;
                    mx += k * x[[r + i, c + j]];
                    my += k * y[[r + i, c + j]];
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = w[i] * w[j] / total;
                    let (dx, dy) = (x[[r + i, c + j]] - mx, y[[r + i, c + j]] - my);
                    vx += k * dx * dx;
                    vy += k * dy * dy;
                    cxy += k * dx * dy;
                }
            }
            acc += (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    acc / count as f64
}

fn random_blob_mask(rng: &mut impl Rng) -> LabelMask {
    let (cy, cx) = (rng.random_range(6.0..26.0), rng.random_range(6.0..26.0));
    let (ry, rx) = (rng.random_range(2.0..10.0), rng.random_range(2.0..10.0));
    let noise = rng.random_range(0.0..0.2);
    let mut m = Array2::from_shape_fn((32, 32), |(r, c)| {
        let e = ((r as f64 - cy) / ry).powi(2) + ((c as f64 - cx) / rx).powi(2);
        u8::from(e <= 1.0)
    });
    for v in m.iter_mut() {
        if rng.random_bool(noise) {
            *v = rng.random_range(0..4);
        }
    }
    if !m.iter().any(|v| *v == 1) {
        m[[16, 16]] = 1;
    }
    LabelMask::new(m).unwrap()
}

fn metric_oracles() -> Result<String, String> {
    let mut rng = seeded(5);
    let mut worst_hd = 0.0f64;
    for i in 0..200 {
        let (a, b) = (random_blob_mask(&mut rng), random_blob_mask(&mut rng));
        let d = dice(&a, &b, Label::Lv).map_err(|e| e.to_string())?;
        let (na, nb) = (a.count(Label::Lv), b.count(Label::Lv));
        let both = a
            .classes()
            .iter()
            .zip(b.classes())
            .filter(|(x, y)| **x == 1 && **y == 1)
            .count();
        let brute = 2.0 * both as f64 / (na + nb) as f64;
        ensure(d == brute, || format!("pair {i}: dice {d} vs {brute}"))?;
        let hd = hausdorff_mm(&a, &b, Label::Lv, 0.37).map_err(|e| e.to_string())?;
        let brute = brute_hausdorff(&a, &b) * 0.37;
        worst_hd = worst_hd.max((hd - brute).abs());
        ensure(boundary_pixels(&a, Label::Lv).iter().any(|v| *v), || "empty boundary".into())?;
    }
    ensure(worst_hd <= 1e-9, || format!("hausdorff off by {worst_hd:e}"))?;
    let mut worst_ssim = 0.0f64;
    for _ in 0..5 {
        let x = Image64::from_fn(40, 36, |_| rng.random::<f64>()).unwrap();
        let y = Image64::from_fn(40, 36, |(r, c)| (x.pixels()[[r, c]] * 0.7 + 0.3 * rng.random::<f64>()).min(1.0)).unwrap();
        let fast = ssim(&x, &y).map_err(|e| e.to_string())?;
        worst_ssim = worst_ssim.max((fast - naive_ssim(x.pixels(), y.pixels())).abs());
    }
    ensure(worst_ssim <= 1e-6, || format!("ssim off by {worst_ssim:e}"))?;
    Ok(format!("200 pairs: dice exact, hausdorff error {worst_hd:e}; ssim error {worst_ssim:e}"))
}

fn ellipsoid_stack(a: f64, b: f64, discs: usize) -> DiscStack<f64> {
    let len = 2.0 * a;
    let d = (0..discs)
        .map(|i| {
            let x = (i as f64 + 0.5) * len / discs as f64 - a;
            2.0 * b * (1.0 - (x / a).powi(2)).max(0.0).sqrt()
        })
        .collect();
    DiscStack::new(len, d).unwrap()
}

fn rect_phase(h: usize, w: usize, depth: f64, angle: f64) -> PhaseFrame<f64> {
    PhaseFrame {
        mask: LabelMask::from_fn(96, 64, |(r, c)| u8::from((10..10 + h).contains(&r) && (8..8 + w).contains(&c)))
            .unwrap(),
        geometry: Geometry64::from_mm_per_px((0.0, 32.0), depth, angle, 0.5, (96, 64)).unwrap(),
    }
}

fn ef_numerics() -> Result<String, String> {
    let sphere = biplane_volume(&ellipsoid_stack(30.0, 30.0, 20), &ellipsoid_stack(30.0, 30.0, 20)).unwrap();
    let exact = 4.0 / 3.0 * std::f64::consts::PI * 27_000.0 / 1000.0;
    let sphere_err = (sphere - exact).abs() / exact;
    ensure(sphere_err <= 0.02, || format!("sphere volume {sphere} vs {exact}"))?;

    let (a, b, c) = (45.0, 20.0, 15.0);
    let exact = 4.0 / 3.0 * std::f64::consts::PI * a * b * c / 1000.0;
    let errs: Vec<f64> = [5, 20, 80]
        .iter()
        .map(|&n| {
            let v = biplane_volume(&ellipsoid_stack(a, b, n), &ellipsoid_stack(a, c, n)).unwrap();
            (v - exact).abs() / exact
        })
        .collect();
    ensure(errs[1] <= 0.02, || format!("ellipsoid error {} at 20 discs", errs[1]))?;
    ensure(errs[0] > errs[1] && errs[1] > errs[2], || format!("errors not decreasing: {errs:?}"))?;

    for (edv, esv, want) in [(100.0, 40.0, 0.6), (100.0, 100.0, 0.0), (100.0, 0.0, 1.0)] {
        let got = ef_fraction(edv, esv).unwrap().value;
        ensure(got == want, || format!("ef({edv}, {esv}) = {got}"))?;
    }

    // heights and widths per cycle: (ed_h, ed_w, es_h, es_w)
    let a2c_dims = [(60, 30, 48, 22), (56, 28, 44, 20), (52, 26, 40, 18)];
    let a4c_dims = [(58, 32, 46, 24), (54, 29, 42, 21), (50, 27, 41, 19)];
    let cycles = |dims: &[(usize, usize, usize, usize)]| -> Vec<Cycle<f64>> {
        dims.iter()
            .map(|&(eh, ew, sh, sw)| Cycle {
                ed: rect_phase(eh, ew, 120.0, 65.0),
                es: rect_phase(sh, sw, 120.0, 65.0),
            })
            .collect()
    };
    let exam = ExamRecord {
        patient_id: "fixture".into(),
        a2c: cycles(&a2c_dims),
        a4c: cycles(&a4c_dims),
        manual_ef: None,
    };
    let result = exam_ef(&exam);
    let result = result.result().ok_or("3x3 fixture omitted")?;
    let mm = 0.5;
    let vol = |ha: usize, wa: usize, hb: usize, wb: usize| {
        std::f64::consts::FRAC_PI_4 * (wa as f64 * mm) * (wb as f64 * mm) * (ha.max(hb) as f64 * mm) / 1000.0
    };
    let mut hand = 0.0;
    for &(aeh, aew, ash, asw) in &a2c_dims {
        for &(beh, bew, bsh, bsw) in &a4c_dims {
            let edv = vol(aeh, aew, beh, bew);
            let esv = vol(ash, asw, bsh, bsw);
            hand += (edv - esv) / edv;
        }
    }
    hand /= 9.0;
    ensure(result.pairs.len() == 9, || format!("{} pairs", result.pairs.len()))?;
    ensure((result.ef - hand).abs() <= 1e-12, || format!("exam EF {} vs hand {hand}", result.ef))?;
    Ok(format!(
        "sphere error {:.2}%, ellipsoid errors {:.3?}% at 5/20/80 discs, 3x3 exam EF {:.6}",
        sphere_err * 100.0,
        errs.iter().map(|e| e * 100.0).collect::<Vec<_>>(),
        result.ef
    ))
}

fn survey_statistics() -> Result<String, String> {
    let cardio = binomial_test(86, 135);
    let others = binomial_test(168, 315);
    let within = |v: f64, target: f64| ((v - target) / target).abs() <= 0.10;
    ensure(within(cardio.one_sided, 0.0009), || format!("one-sided {}", cardio.one_sided))?;
    ensure(within(others.two_sided, 0.246), || format!("two-sided {}", others.two_sided))?;
    ensure((cardio.one_sided - 0.0009188955543857831).abs() < 1e-12, || "one-sided drifted".into())?;
    ensure((others.two_sided - 0.25976290382816497).abs() < 1e-12, || "two-sided drifted".into())?;
    Ok(format!(
        "86/135 one-sided p = {:.6}, 168/315 two-sided p = {:.4}",
        cardio.one_sided, others.two_sided
    ))
}

fn dataset_multiplier() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = tmp.path().join("in");
    common::write_dataset(&input, 10, 128);
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = common::run(&[
            "augment",
            "--input",
            common::path_str(&input),
            "--output",
            common::path_str(&out),
            "--variants",
            "5",
            "--seed",
            "17",
            "--workers",
            "4",
            "--train-steps",
            "1000",
            "--steps",
            "25",
            "--jump",
            "5",
            "--resamples",
            "2",
        ]);
        ensure(status.status.success(), || {
            format!("augment failed: {}", String::from_utf8_lossy(&status.stderr))
        })?;
        outs.push(out);
    }
    let count = |suffix: &str| {
        std::fs::read_dir(&outs[0])
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(suffix))
            .count()
    };
    let records = count("_img.png");
    ensure(records == 60, || format!("{records} records"))?;
    ensure(count("_msk.png") == 60 && count("_meta.txt") == 60, || "incomplete triplets".into())?;
    ensure(common::snapshot(&outs[0]) == common::snapshot(&outs[1]), || "runs differ".into())?;
    Ok(format!("10 frames -> {records} records, two runs byte-identical"))
}

fn normal_range_split() -> Result<String, String> {
    let cycle = |ed: (f64, f64), es: (f64, f64)| Cycle {
        ed: rect_phase(60, 30, ed.0, ed.1),
        es: rect_phase(50, 20, es.0, es.1),
    };
    let exam = |es: (f64, f64)| ExamRecord {
        patient_id: "p".into(),
        a2c: vec![cycle((120.0, 65.0), (120.0, 65.0))],
        a4c: vec![cycle((120.0, 65.0), es)],
        manual_ef: None,
    };
    let cases = [
        ((120.0, 65.0), false),
        ((155.0, 65.0), true),
        ((150.0, 70.0), false),
        ((120.0, 70.5), true),
        ((150.000001, 60.0), true),
    ];
    for (es, want) in cases {
        let got = is_out_of_range(&exam(es)).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("{es:?}: got {got}"))?;
    }
    Ok("150 mm / 70 deg in range, 155 mm and 70.5 deg out of range".into())
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("RePaint preservation", repaint_preservation),
        ("sampler correctness", sampler_correctness),
        ("schedule identities", schedule_identities),
        ("transform suite", transform_suite),
        ("metric oracles", metric_oracles),
        ("EF numerics", ef_numerics),
        ("survey statistics", survey_statistics),
        ("dataset multiplier", dataset_multiplier),
        ("normal-range split", normal_range_split),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
