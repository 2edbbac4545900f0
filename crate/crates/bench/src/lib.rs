//! Shared fixtures for the estimator benchmarks.

use std::sync::Arc;

use latdeconv_core::field::{add_noise, InnovationSpec, LinearFieldSpec};
use latdeconv_core::lattice::make_rect_region;
use latdeconv_core::{FieldModel, FieldSample, NoiseModel, Site};

/// Noisy observations of an i.i.d. standard normal field on a `side × side` square.
pub fn noisy_square(side: usize, noise: NoiseModel, seed: u64) -> FieldSample {
    let region = Arc::new(make_rect_region(&[side, side], &Site::origin(2)).expect("valid square"));
    let model = FieldModel::Linear(LinearFieldSpec::iid(2, InnovationSpec::StandardNormal).expect("valid field"));
    let x = model.simulate(&region, seed).expect("simulation");
    add_noise(&x, &noise, seed)
}

/// `count` equally spaced points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (count - 1) as f64;
    (0..count).map(|k| lo + h * k as f64).collect()
}
