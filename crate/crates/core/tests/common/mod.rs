#![allow(dead_code)]

use g2lab_core::homogeneous::{ModelAlgebra, SolderFrame};
use g2lab_core::AltForm;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, scale: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|_, _| rng.random_range(-scale..scale))
}

/// A frame with `det E ≥ 0.2`, bounded away from singular.
pub fn random_frame(rng: &mut ChaCha8Rng) -> SolderFrame {
    loop {
        let e = Matrix3::identity() * 1.2 + uniform_matrix(rng, 0.6);
        if e.determinant() >= 0.2 {
            return SolderFrame::new(e).unwrap();
        }
    }
}

pub fn random_three_form(rng: &mut ChaCha8Rng) -> AltForm {
    let c: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
    AltForm::from_coeffs(6, 3, &c).unwrap()
}

/// Symmetric part with spectrum in `[floor, floor + spread]` plus a random
/// antisymmetric part.
pub fn random_gated_k(rng: &mut ChaCha8Rng, floor: f64, spread: f64, skew: f64) -> Matrix3<f64> {
    let q = nalgebra::Rotation3::from_euler_angles(
        rng.random_range(-3.0..3.0),
        rng.random_range(-1.5..1.5),
        rng.random_range(-3.0..3.0),
    )
    .into_inner();
    let d = Matrix3::from_diagonal(&nalgebra::Vector3::from_fn(|_, _| floor + rng.random_range(0.0..spread)));
    let n = uniform_matrix(rng, skew);
    q * d * q.transpose() + (n - n.transpose()) * 0.5
}

pub fn presets() -> Vec<ModelAlgebra> {
    g2lab_core::homogeneous::PRESETS
        .iter()
        .map(|p| ModelAlgebra::preset(p).unwrap())
        .collect()
}

/// Einstein tensor of the diagonal frame `diag(a, b, c)` on the unimodular
/// algebra `[X_j, X_k] = n_i X_i` (cyclic), from the closed-form Ricci
/// eigenvalues `2 μ_j μ_k` with `μ_i = ½Σλ − λ_i`.
pub fn milnor_einstein(n: [f64; 3], diag: [f64; 3]) -> Matrix3<f64> {
    let [a, b, c] = diag;
    let lam = [n[0] * a / (b * c), n[1] * b / (c * a), n[2] * c / (a * b)];
    let half = 0.5 * (lam[0] + lam[1] + lam[2]);
    let mu = [half - lam[0], half - lam[1], half - lam[2]];
    let ric = [2.0 * mu[1] * mu[2], 2.0 * mu[2] * mu[0], 2.0 * mu[0] * mu[1]];
    let r = ric[0] + ric[1] + ric[2];
    Matrix3::from_diagonal(&nalgebra::Vector3::new(ric[0] - r / 2.0, ric[1] - r / 2.0, ric[2] - r / 2.0))
}

pub const UNIMODULAR: [(&str, [f64; 3]); 6] = [
    ("abelian", [0.0, 0.0, 0.0]),
    ("su2", [1.0, 1.0, 1.0]),
    ("heisenberg", [1.0, 0.0, 0.0]),
    ("e11", [1.0, -1.0, 0.0]),
    ("e2", [1.0, 1.0, 0.0]),
    ("sl2r", [1.0, 1.0, -1.0]),
];

/// The antisymmetric generator of rotations in the (1,2) plane.
pub fn n12() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
}

/// `exp(θ N12)` in closed form.
pub fn rotation12(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
