mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sisr_core::operators::*;
use sisr_core::Image;

const TRIALS: usize = 50;
const TOL: f64 = 1e-10;

fn relative_gap(lhs: f64, rhs: f64, a: f64, b: f64) -> f64 {
    (lhs - rhs).abs() / (a * b)
}

fn dims(rng: &mut ChaCha20Rng, factor: usize) -> (usize, usize) {
    let max = 16 / factor;
    (factor * rng.random_range(1..=max), factor * rng.random_range(1..=max))
}

#[test]
fn blur_adjoint() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..TRIALS {
        let (h, w) = dims(&mut rng, 1);
        let k = random_kernel(&mut rng);
        let a = random_image(&mut rng, h, w);
        let b = random_image(&mut rng, h, w);
        let gap = relative_gap(convolve(&a, &k).dot(&b), a.dot(&convolve_adjoint(&b, &k)), a.norm(), b.norm());
        assert!(gap <= TOL, "{h}x{w} kernel {}: {gap}", k.size());
    }
}

#[test]
fn decimation_adjoint() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for _ in 0..TRIALS {
        let s = rng.random_range(1..=4);
        let (h, w) = dims(&mut rng, s);
        let a = random_image(&mut rng, h, w);
        let b = random_image(&mut rng, h / s, w / s);
        let lhs = decimate(&a, s).unwrap().dot(&b);
        let rhs = a.dot(&decimate_adjoint(&b, s, h, w).unwrap());
        assert!(relative_gap(lhs, rhs, a.norm(), b.norm()) <= TOL);
    }
}

#[test]
fn degradation_operator_adjoint() {
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for _ in 0..TRIALS {
        let s = rng.random_range(1..=4);
        let (h, w) = dims(&mut rng, s);
        let spec = OperatorSpec::new(random_kernel(&mut rng), s, h, w).unwrap();
        let a = random_image(&mut rng, h, w);
        let b = random_image(&mut rng, h / s, w / s);
        let lhs = apply_w(&a, &spec).unwrap().dot(&b);
        let rhs = a.dot(&apply_wt(&b, &spec).unwrap());
        assert!(relative_gap(lhs, rhs, a.norm(), b.norm()) <= TOL);
    }
}

#[test]
fn gradient_divergence_adjoint() {
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for _ in 0..TRIALS {
        let (h, w) = dims(&mut rng, 1);
        let a = random_image(&mut rng, h, w);
        let g = GradientField {
            dx: random_image(&mut rng, h, w),
            dy: random_image(&mut rng, h, w),
        };
        let lhs = gradient(&a).dot(&g);
        let rhs = -a.dot(&divergence(&g));
        assert!(relative_gap(lhs, rhs, a.norm(), g.norm_sq().sqrt()) <= TOL);
    }
}

#[test]
fn laplacian_self_adjoint() {
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    for _ in 0..TRIALS {
        let (h, w) = dims(&mut rng, 1);
        let a = random_image(&mut rng, h, w);
        let b = random_image(&mut rng, h, w);
        let gap = relative_gap(laplacian(&a).dot(&b), a.dot(&laplacian(&b)), a.norm(), b.norm());
        assert!(gap <= TOL);
    }
}

#[test]
fn operators_match_index_formula_matrices() {
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    for &(h, w, s) in &[(6, 8, 2), (9, 6, 3), (5, 7, 1)] {
        let k = random_kernel(&mut rng);
        let blur = materialize(h, w, |e| convolve(e, &k));
        assert!((blur - blur_matrix(h, w, &k)).abs().max() < 1e-14);

        let spec = OperatorSpec::new(k.clone(), s, h, w).unwrap();
        let wmat = materialize(h, w, |e| apply_w(e, &spec).unwrap());
        let expected = decimation_matrix(h, w, s) * blur_matrix(h, w, &k);
        assert!((wmat - expected).abs().max() < 1e-14);

        let grad = materialize(h, w, |e| {
            let g = gradient(e);
            let mut stacked = g.dx.data().to_vec();
            stacked.extend_from_slice(g.dy.data());
            Image::new(2 * h, w, stacked).unwrap()
        });
        assert!((grad - gradient_matrix(h, w)).abs().max() < 1e-14);

        let lap = materialize(h, w, laplacian);
        assert!((lap - laplacian_matrix(h, w)).abs().max() < 1e-14);
    }
}

#[test]
fn adjoints_hold_above_parallel_threshold() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    let k = Kernel::gaussian(5, 2.0).unwrap();
    let a = random_image(&mut rng, 160, 130);
    let b = random_image(&mut rng, 160, 130);
    let gap = relative_gap(convolve(&a, &k).dot(&b), a.dot(&convolve_adjoint(&b, &k)), a.norm(), b.norm());
    assert!(gap <= TOL);
}
