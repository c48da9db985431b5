//! Seeded random instances for property suites.

use crate::linalg::CMatrix;
use crate::model::TwoChannelProblem;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A purely discrete problem with `n1 ⊕ n2` eigenvalues and a complex
/// Gaussian coupling rescaled so that `‖B₁₂‖₂ = ratio · d₀`.
///
/// Eigenvalues are drawn as a sorted sequence with spacings in `[0.3, 1.5]`
/// and distributed over the channels at random, so the spectra may interleave.
pub fn random_problem(n1: usize, n2: usize, ratio: f64, seed: u64) -> TwoChannelProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n1 + n2;
    let mut x = rng.random_range(-3.0..0.0);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(x);
        x += rng.random_range(0.3..1.5);
    }
    let mut labels: Vec<bool> = (0..n).map(|k| k < n1).collect();
    labels.shuffle(&mut rng);
    let d1: Vec<f64> = points
        .iter()
        .zip(&labels)
        .filter(|(_, l)| **l)
        .map(|(p, _)| *p)
        .collect();
    let d2: Vec<f64> = points
        .iter()
        .zip(&labels)
        .filter(|(_, l)| !**l)
        .map(|(p, _)| *p)
        .collect();

    let mut b = CMatrix::from_fn(n1, n2, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let unscaled =
        TwoChannelProblem::from_matrices(&d1, &d2, b.clone()).expect("generated spectra are valid");
    let hs = unscaled.hs_norm();
    if hs > 0.0 {
        b *= Complex64::new(ratio * unscaled.gap() / hs, 0.0);
    }
    TwoChannelProblem::from_matrices(&d1, &d2, b).expect("generated spectra are valid")
}
