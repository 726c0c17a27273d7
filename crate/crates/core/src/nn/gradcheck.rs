//! Central finite-difference gradient checks.
//!
//! Relative error per entry is `|analytic - numeric| / max(|analytic|,
//! |numeric|, 1e-6)`; the floor keeps gradients that are zero up to
//! rounding from dominating the report.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::dense::DenseMatrix;
use crate::nn::layers::Parameterized;

const FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

/// Adds `N(0, std²)` noise to every parameter. Zero-initialised biases can
/// leave whole rows of a later pre-activation at exactly 0, a ReLU hinge
/// where central differences are meaningless; checking at a jittered point
/// avoids that.
pub fn jitter_params<P: Parameterized + ?Sized, R: Rng + ?Sized>(
    model: &mut P,
    std: f64,
    rng: &mut R,
) {
    model.visit_params(&mut |p| {
        for v in p.value.as_mut_slice() {
            *v += std * rng.sample::<f64, _>(StandardNormal);
        }
    });
}

/// Compares the gradients written by `compute_grads` with central
/// differences of `loss`, for every scalar parameter of `model`.
pub fn check_param_gradients<P: Parameterized + ?Sized>(
    model: &mut P,
    mut compute_grads: impl FnMut(&mut P),
    mut loss: impl FnMut(&P) -> f64,
    h: f64,
) -> GradCheckReport {
    compute_grads(model);
    let analytic = model.flat_grads();
    let mut report = GradCheckReport {
        checked: analytic.len(),
        max_abs_error: 0.0,
        max_rel_error: 0.0,
    };
    for (i, &a) in analytic.iter().enumerate() {
        let mut original = 0.0;
        model.with_param_entry(i, &mut |v| {
            original = *v;
            *v = original + h;
        });
        let plus = loss(model);
        model.with_param_entry(i, &mut |v| *v = original - h);
        let minus = loss(model);
        model.with_param_entry(i, &mut |v| *v = original);
        let numeric = (plus - minus) / (2.0 * h);
        report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
        report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
    }
    report
}

/// Maximum relative error between `analytic(x)` and the central-difference
/// gradient of `loss` at `x`.
pub fn check_input_gradient(
    x: &DenseMatrix,
    analytic: impl Fn(&DenseMatrix) -> DenseMatrix,
    loss: impl Fn(&DenseMatrix) -> f64,
    h: f64,
) -> f64 {
    let grad = analytic(x);
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for i in 0..x.as_slice().len() {
        let original = x.as_slice()[i];
        probe.as_mut_slice()[i] = original + h;
        let plus = loss(&probe);
        probe.as_mut_slice()[i] = original - h;
        let minus = loss(&probe);
        probe.as_mut_slice()[i] = original;
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_error(grad.as_slice()[i], numeric));
    }
    worst
}
