use echoaug::diffusion::{GaussianOracle, NoiseSchedule};
use echoaug::metrics::{dice, hausdorff_mm, ssim};
use echoaug::pipeline::{blacken_unsourced, compute_repaint_mask};
use echoaug::repaint::{inpaint, repaint_time_sequence, RepaintConfig};
use echoaug::rng::stream;
use echoaug::survey::binomial_test;
use echoaug::transform::sample_spec;
use echoaug::{apply_transform, sector_mask, AugmentationKind, Frame64, Geometry64, Image64, KeepMask, Label, LabelMask};
use ndarray::Array2;
use proptest::prelude::*;

fn mask_from(bits: &[bool], side: usize) -> LabelMask {
    LabelMask::from_fn(side, side, |(r, c)| u8::from(bits[r * side + c])).unwrap()
}

fn sector_frame(size: usize) -> Frame64 {
    let g = Geometry64::centered((size, size), 140.0, 70.0, 0.9).unwrap();
    let inside = sector_mask(&g);
    let image = Image64::from_fn(size, size, |(r, c)| if inside[[r, c]] { 0.2 + 0.6 * ((r + c) % 5) as f64 / 4.0 } else { 0.0 }).unwrap();
    Frame64::new(image, None, g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn respaced_alpha_bar_is_decreasing(train in 10usize..600, frac in 0.05f64..1.0) {
        let steps = ((train as f64 * frac) as usize).max(1);
        let s = NoiseSchedule::<f64>::cosine(train).unwrap().respaced(steps).unwrap();
        prop_assert_eq!(s.len(), steps);
        for w in s.alpha_bars().windows(2) {
            prop_assert!(w[1] < w[0]);
        }
        for t in 0..s.len() {
            prop_assert!(s.beta(t) > 0.0 && s.beta(t) < 1.0);
        }
    }

    #[test]
    fn repaint_sequence_runs_down_to_zero((steps, jump) in (1usize..80).prop_flat_map(|s| (Just(s), 1..=s.min(10))), resamples in 1usize..5) {
        let seq = repaint_time_sequence(steps, jump, resamples).unwrap();
        prop_assert_eq!(seq.first().copied(), Some(steps - 1));
        prop_assert_eq!(seq.last().copied(), Some(0));
        prop_assert!(seq.iter().all(|&t| t < steps));
    }

    #[test]
    fn kept_pixels_are_untouched(seed in any::<u64>(), density in 0.0f64..1.0) {
        let train = NoiseSchedule::<f64>::cosine(40).unwrap();
        let config = RepaintConfig { jump_length: 3, resamples: 2, inference_steps: 10 };
        let oracle = GaussianOracle::uniform((12, 12), 0.1, 0.3, config.chain(&train).unwrap()).unwrap();
        let mut rng = stream(seed, "prop-repaint", 0);
        let input = Image64::from_fn(12, 12, |(r, c)| ((r * 31 + c * 17) % 97) as f64 / 96.0).unwrap();
        let keep = KeepMask::new(Array2::from_shape_fn((12, 12), |(r, c)| ((r * 12 + c) as f64 / 144.0) < density));
        let out = inpaint(&train, &oracle, &input, &keep, &config, &mut rng).unwrap();
        for ((idx, k), v) in keep.as_array().indexed_iter().zip(out.pixels()) {
            if *k {
                prop_assert_eq!(*v, input.pixels()[idx]);
            }
        }
    }

    #[test]
    fn dice_and_hausdorff_are_symmetric(a in prop::collection::vec(any::<bool>(), 144), b in prop::collection::vec(any::<bool>(), 144)) {
        let (ma, mb) = (mask_from(&a, 12), mask_from(&b, 12));
        match (dice(&ma, &mb, Label::Lv), dice(&mb, &ma, Label::Lv)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x, y);
                prop_assert!((0.0..=1.0).contains(&x));
            }
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
        if let (Ok(x), Ok(y)) = (hausdorff_mm(&ma, &mb, Label::Lv, 0.5), hausdorff_mm(&mb, &ma, Label::Lv, 0.5)) {
            prop_assert_eq!(x, y);
            prop_assert!(x >= 0.0);
        }
        if let Ok(d) = dice(&ma, &ma, Label::Lv) {
            prop_assert_eq!(d, 1.0);
        }
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = stream(seed, "prop-ssim", 0);
        let x = Image64::from_fn(16, 16, |_| rng.random::<f64>()).unwrap();
        let y = Image64::from_fn(16, 16, |_| rng.random::<f64>()).unwrap();
        let (s, t) = (ssim(&x, &y).unwrap(), ssim(&y, &x).unwrap());
        prop_assert!((s - t).abs() < 1e-12);
        prop_assert!(s <= 1.0 + 1e-12);
        prop_assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repaint_region_is_unsourced_target(seed in any::<u64>(), kind in 0usize..5) {
        let kind = [
            AugmentationKind::DepthIncrease,
            AugmentationKind::Tilt,
            AugmentationKind::SectorWidth,
            AugmentationKind::Translation,
            AugmentationKind::Combination,
        ][kind];
        let mut rng = stream(seed, "prop-transform", 0);
        let spec = sample_spec::<f64, _>(kind, &mut rng);
        prop_assert!(spec.validate().is_ok());
        let out = apply_transform(&sector_frame(48), &spec).unwrap();
        let target = sector_mask(&out.frame.geometry.upright());
        let content = out.original_content();
        let keep = compute_repaint_mask(&out);
        let black = blacken_unsourced(&out);
        for (idx, k) in keep.as_array().indexed_iter() {
            prop_assert_eq!(!*k, target[idx] && !content[idx], "at {:?}", idx);
            if !target[idx] {
                prop_assert_eq!(black.image.pixels()[idx], 0.0);
            }
        }
    }

    #[test]
    fn binomial_p_values_are_symmetric(n in 1u64..200, frac in 0.0f64..=1.0) {
        let k = (n as f64 * frac) as u64;
        let (a, b) = (binomial_test(k, n), binomial_test(n - k, n));
        prop_assert!((a.two_sided - b.two_sided).abs() < 1e-12);
        prop_assert!(a.two_sided > 0.0 && a.two_sided <= 1.0);
        prop_assert!(a.one_sided > 0.0 && a.one_sided <= 1.0);
    }
}
