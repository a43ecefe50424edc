//! Shared fixtures for the criterion benchmarks.

use sisr_core::degradation::{degrade, DegradationSpec};
use sisr_core::operators::OperatorSpec;
use sisr_core::Image;

/// Smooth synthetic HR scene with edges, sized `n x n`.
pub fn scene(n: usize) -> Image {
    Image::from_fn(n, n, |i, j| {
        let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
        let disk = if (x - 0.5).powi(2) + (y - 0.4).powi(2) < 0.08 { 90.0 } else { 0.0 };
        100.0 + 60.0 * (6.0 * x).sin() * (4.0 * y).cos() + disk
    })
}

/// HR scene, its LR observation and the matching operator (3x3 Gaussian, factor 2, σ = 1).
pub fn desk_problem(n: usize) -> (Image, Image, OperatorSpec) {
    let hr = scene(n);
    let spec = DegradationSpec::gaussian(3, 2, 1.0, 1);
    let lr = degrade(&hr, &spec).expect("divisible scene");
    let op = spec.operator_spec(n, n).expect("divisible scene");
    (hr, lr, op)
}
