//! Conjugate gradients for symmetric positive definite operators on images.
//!
//! Plain CG minimizes the A-norm of the error, so its residual 2-norm can
//! oscillate from one iteration to the next. The solver therefore carries a
//! minimal-residual smoothed companion iterate alongside the CG iterate: each
//! step takes the point on the segment between the previous smoothed iterate
//! and the new CG iterate with the smallest residual. Its residual norm never
//! exceeds either the previous smoothed residual or the current CG residual,
//! so the reported history is non-increasing and the solve stops no later
//! than plain CG would. The smoothed iterate is what gets returned.

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// `‖A x - b‖ / ‖b‖` of the returned (smoothed) iterate, tracked recursively.
    pub final_residual: f64,
    /// Relative residual before the first iteration and after each one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Solves `A x = b` from `x0`, stopping once `‖r‖ ≤ tol·‖b‖` or after
/// `max_iters` iterations. `inv_diag`, when given, is applied as a Jacobi
/// preconditioner (elementwise multiplication of the residual).
pub fn conjugate_gradient<F>(
    apply: F,
    b: &Image,
    x0: Image,
    tol: f64,
    max_iters: usize,
    inv_diag: Option<&Image>,
) -> Result<(Image, CgStats)>
where
    F: Fn(&Image) -> Result<Image>,
{
    b.ensure_same_dims(&x0)?;
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok((
            Image::zeros(b.height(), b.width()),
            CgStats {
                iterations: 0,
                final_residual: 0.0,
                residual_history: vec![0.0],
                converged: true,
            },
        ));
    }
    let precondition = |r: &Image| match inv_diag {
        Some(d) => r.zip_map(d, |a, b| a * b),
        None => r.clone(),
    };

    let mut x = x0;
    let mut r = b - &apply(&x)?;
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut xs = x.clone();
    let mut s = r.clone();
    let mut rel = s.norm() / b_norm;
    let mut history = vec![rel];
    let mut iterations = 0;

    while rel > tol && iterations < max_iters {
        let ap = apply(&p)?;
        let pap = p.dot(&ap);
        if pap.is_nan() || pap <= 0.0 {
            if pap.is_finite() {
                // search direction vanished: nothing left to reduce
                break;
            }
            return Err(Error::NonFiniteSolve(format!("p·Ap = {pap} at iteration {iterations}")));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        z = precondition(&r);
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, &zi) in p.data_mut().iter_mut().zip(z.data()) {
            *pi = zi + beta * *pi;
        }
        iterations += 1;
        smooth(&mut xs, &mut s, &x, &r);
        rel = s.norm() / b_norm;
        history.push(rel);
        if !rel.is_finite() {
            return Err(Error::NonFiniteSolve(format!("residual {rel} at iteration {iterations}")));
        }
    }
    if xs.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSolve("iterate contains non-finite values".into()));
    }
    Ok((
        xs,
        CgStats {
            iterations,
            final_residual: rel,
            residual_history: history,
            converged: rel <= tol,
        },
    ))
}

/// Moves `(xs, s)` to the minimum-residual point on the segment towards
/// `(x, r)`. `s` stays the residual of `xs` because residuals are affine in
/// the iterate.
fn smooth(xs: &mut Image, s: &mut Image, x: &Image, r: &Image) {
    let d = r - &*s;
    let dd = d.norm_sq();
    if dd == 0.0 {
        return;
    }
    let eta = -s.dot(&d) / dd;
    s.axpy(eta, &d);
    for (a, &b) in xs.data_mut().iter_mut().zip(x.data()) {
        *a += eta * (b - *a);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_system() {
        let d = Image::from_fn(3, 3, |i, j| 1.0 + (i * 3 + j) as f64);
        let b = Image::from_fn(3, 3, |i, j| (i + 2 * j) as f64 - 2.0);
        let apply = |x: &Image| Ok(x.zip_map(&d, |a, b| a * b));
        let (x, stats) = conjugate_gradient(apply, &b, Image::zeros(3, 3), 1e-12, 50, None).unwrap();
        assert!(stats.converged);
        let expected = b.zip_map(&d, |a, b| a / b);
        assert!((&x - &expected).max_abs() < 1e-10);
        // the Jacobi-preconditioned solve converges in one step
        let inv = d.map(|v| 1.0 / v);
        let (x, stats) = conjugate_gradient(apply, &b, Image::zeros(3, 3), 1e-12, 50, Some(&inv)).unwrap();
        assert_eq!(stats.iterations, 1);
        assert!((&x - &expected).max_abs() < 1e-12);
    }

    #[test]
    fn residual_history_is_monotone_on_ill_conditioned_system() {
        let d = Image::from_fn(6, 6, |i, j| 10f64.powf((i * 6 + j) as f64 / 7.0));
        let b = Image::from_fn(6, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let apply = |x: &Image| Ok(x.zip_map(&d, |a, b| a * b));
        let (x, stats) = conjugate_gradient(apply, &b, Image::zeros(6, 6), 1e-10, 500, None).unwrap();
        assert!(stats.converged);
        for w in stats.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", stats.residual_history);
        }
        let true_res = (&b - &apply(&x).unwrap()).norm() / b.norm();
        assert!(true_res <= 1e-9, "{true_res}");
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let b = Image::zeros(2, 2);
        let (x, stats) =
            conjugate_gradient(|x: &Image| Ok(x.clone()), &b, Image::filled(2, 2, 3.0), 1e-8, 10, None).unwrap();
        assert_eq!(x, b);
        assert_eq!(stats.iterations, 0);
    }
}
