use proptest::prelude::*;
use sisr_core::io::{load_image, save_image};
use sisr_core::metrics::{error_stats, psnr};
use sisr_core::operators::{apply_normal_operator, decimate, decimate_adjoint, FidelityWeights, Kernel, OperatorSpec};
use sisr_core::Image;

fn image(h: usize, w: usize, lo: f64, hi: f64) -> impl Strategy<Value = Image> {
    proptest::collection::vec(lo..hi, h * w).prop_map(move |data| Image::new(h, w, data).unwrap())
}

fn image_pair() -> impl Strategy<Value = (Image, Image)> {
    (1usize..10, 1usize..10).prop_flat_map(|(h, w)| (image(h, w, 0.0, 255.0), image(h, w, 0.0, 255.0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psnr_is_symmetric((a, b) in image_pair()) {
        let ab = psnr(&a, &b).unwrap();
        let ba = psnr(&b, &a).unwrap();
        prop_assert!(ab == ba || (ab - ba).abs() <= 1e-12 * ab.abs());
    }

    #[test]
    fn error_stats_are_symmetric_and_ordered((a, b) in image_pair()) {
        let ab = error_stats(&a, &b).unwrap();
        let ba = error_stats(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.mean_abs <= ab.max_abs);
        prop_assert!(ab.var_abs >= 0.0);
    }

    #[test]
    fn pgm_round_trip_preserves_quantized_pixels(
        img in (1usize..12, 1usize..12).prop_flat_map(|(h, w)| {
            proptest::collection::vec(0u8..=255, h * w)
                .prop_map(move |px| Image::new(h, w, px.into_iter().map(f64::from).collect()).unwrap())
        })
    ) {
        let dir = tempfile::tempdir().unwrap();
        for name in ["img.pgm", "img.png"] {
            let path = dir.path().join(name);
            save_image(&img, &path).unwrap();
            prop_assert_eq!(&load_image(&path).unwrap(), &img);
        }
    }

    #[test]
    fn normal_operator_is_linear(
        a in image(8, 8, -10.0, 10.0),
        b in image(8, 8, -10.0, 10.0),
        alpha in -3.0f64..3.0,
        gamma in 0.01f64..2.0,
    ) {
        let spec = OperatorSpec::new(Kernel::gaussian(3, 1.0).unwrap(), 2, 8, 8).unwrap();
        let apply = |x: &Image| apply_normal_operator(x, &spec, &FidelityWeights::JOINT, gamma).unwrap();
        let mut combo = a.clone();
        combo.axpy(alpha, &b);
        let mut expected = apply(&a);
        expected.axpy(alpha, &apply(&b));
        let scale = 1.0 + expected.max_abs();
        prop_assert!((&apply(&combo) - &expected).max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn decimation_undoes_zero_fill(s in 1usize..5, lh in 1usize..6, lw in 1usize..6, seed in any::<u64>()) {
        let mut state = seed;
        let lr = Image::from_fn(lh, lw, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 40) as f64
        });
        let up = decimate_adjoint(&lr, s, s * lh, s * lw).unwrap();
        prop_assert_eq!(decimate(&up, s).unwrap(), lr);
        prop_assert_eq!(up.norm_sq(), decimate(&up, s).unwrap().norm_sq());
    }
}
