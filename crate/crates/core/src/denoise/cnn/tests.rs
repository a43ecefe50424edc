use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::image::Image;

fn micro_arch() -> Architecture {
    Architecture {
        channels: vec![2],
        kernel_size: 3,
        bn_momentum: 0.9,
    }
}

fn textured(h: usize, w: usize, seed: u64) -> Image {
    let mut s = seed;
    Image::from_fn(h, w, |i, j| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let noise = (s >> 11) as f64 / (1u64 << 53) as f64;
        80.0 + 60.0 * ((i as f64 * 0.7).sin() + (j as f64 * 0.4).cos()) + 20.0 * noise
    })
}

#[test]
fn zero_model_predicts_zero_residual() {
    let model = CnnModel::zeroed(Architecture::default()).unwrap();
    let x = textured(40, 24, 1);
    let r = model.residual(&x).unwrap();
    assert_eq!(r.dims(), (40, 24));
    assert!(r.data().iter().all(|&v| v == 0.0));
}

#[test]
fn default_model_preserves_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = CnnModel::new(Architecture::default(), &mut rng).unwrap();
    for (h, w) in [(64, 64), (35, 35), (33, 70)] {
        let x = textured(h, w, 2);
        assert_eq!(model.denoise(&x).unwrap().dims(), (h, w));
    }
}

#[test]
fn residual_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = CnnModel::new(Architecture::default(), &mut rng).unwrap();
    let x = textured(32, 32, 5);
    let d = model.denoise(&x).unwrap();
    let r = model.residual(&x).unwrap();
    for k in 0..x.len() {
        assert_eq!(d.data()[k], x.data()[k] - r.data()[k]);
    }
}

#[test]
fn analytic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut model = CnnModel::new(micro_arch(), &mut rng).unwrap();
    // make the head non-trivial so every path carries gradient
    let mut p = model.parameters();
    let n = p.len();
    for (k, v) in p.iter_mut().enumerate().skip(n - 28) {
        *v = 0.05 * ((k * 7 % 13) as f64 - 6.0);
    }
    model.set_parameters(&p).unwrap();
    let clean = vec![textured(8, 8, 21), textured(8, 8, 22)];
    let noisy: Vec<Image> = clean
        .iter()
        .enumerate()
        .map(|(k, c)| &textured(8, 8, 30 + k as u64).scale(0.2) + c)
        .collect();

    let (_, grad) = model.loss_and_gradient(&noisy, &clean).unwrap();
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    for k in 0..p.len() {
        let mut probe = model.clone();
        let mut q = p.clone();
        q[k] = p[k] + step;
        probe.set_parameters(&q).unwrap();
        let up = probe.loss(&noisy, &clean).unwrap();
        q[k] = p[k] - step;
        probe.set_parameters(&q).unwrap();
        let down = probe.loss(&noisy, &clean).unwrap();
        let fd = (up - down) / (2.0 * step);
        let scale = grad[k].abs().max(fd.abs()).max(1e-8);
        worst = worst.max((grad[k] - fd).abs() / scale);
    }
    assert!(worst <= 1e-4, "max relative deviation {worst:e}");
}

#[test]
fn save_load_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut model = CnnModel::new(Architecture::default(), &mut rng).unwrap();
    model.encoders[1].bn.running_mean[3] = 0.25;
    model.decoders[2].bn.running_var[0] = 1.75;
    let bytes = encode_model(&model);
    let back = decode_model(&bytes).unwrap();
    assert_eq!(back, model);
    let x = textured(64, 64, 9);
    assert_eq!(model.residual(&x).unwrap(), back.residual(&x).unwrap());
}

#[test]
fn decode_rejects_corruption() {
    let model = CnnModel::zeroed(micro_arch()).unwrap();
    let bytes = encode_model(&model);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_model(&bad).unwrap_err().to_string().contains("magic"));
    let mut bad = bytes.clone();
    bad[8] = 2;
    assert!(decode_model(&bad).unwrap_err().to_string().contains("version"));
    assert!(decode_model(&bytes[..bytes.len() - 1]).is_err());
    let mut long = bytes.clone();
    long.push(0);
    assert!(decode_model(&long).is_err());
}

#[test]
fn training_is_seeded_and_descends() {
    let data = vec![textured(24, 24, 1), textured(20, 28, 2)];
    let cfg = TrainConfig {
        architecture: Architecture {
            channels: vec![4, 4],
            kernel_size: 3,
            bn_momentum: 0.9,
        },
        patch_size: 12,
        noise_sigma_range: [5.0, 10.0],
        batch_size: 4,
        epochs: 6,
        batches_per_epoch: 10,
        learning_rate: 3e-3,
        seed: 5,
    };
    let a = cnn_train(&data, &cfg).unwrap();
    let b = cnn_train(&data, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.loss_curve, b.loss_curve);
    assert_eq!(a.loss_curve.len(), 6);
    assert!(a.loss_curve.last() < a.loss_curve.first(), "{:?}", a.loss_curve);
}

#[test]
fn training_rejects_bad_inputs() {
    let cfg = TrainConfig::default();
    assert!(cnn_train(&[], &cfg).is_err());
    assert!(cnn_train(&[Image::zeros(16, 16)], &cfg).is_err());
    let bad = TrainConfig {
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    assert!(cnn_train(&[Image::zeros(64, 64)], &bad).is_err());
}
