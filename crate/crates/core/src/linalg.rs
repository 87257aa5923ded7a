use nalgebra::{Matrix3, SymmetricEigen};

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

pub(crate) fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn min_sym_eigenvalue(m: &Matrix3<f64>) -> f64 {
    SymmetricEigen::new(sym(m)).eigenvalues.min()
}

pub(crate) fn max_abs3(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| f64::max(acc, x.abs()))
}

/// Levi-Civita symbol on `{0,1,2}`.
pub(crate) const fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        0.0
    } else if (i + 1) % 3 == j {
        1.0
    } else {
        -1.0
    }
}

/// Indices of the three samples used to differentiate at sample `i` of `n`.
pub(crate) fn stencil(n: usize, i: usize) -> [usize; 3] {
    if i == 0 {
        [0, 1, 2]
    } else if i + 1 == n {
        [n - 3, n - 2, n - 1]
    } else {
        [i - 1, i, i + 1]
    }
}

/// Weights of the derivative at `x` of the quadratic through `nodes`.
pub(crate) fn three_point_weights(nodes: [f64; 3], x: f64) -> [f64; 3] {
    let [x0, x1, x2] = nodes;
    [
        ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
        ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
        ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1)),
    ]
}

/// Nearest rotation to `m` in the Frobenius sense (`UVᵀ` from its SVD).
pub(crate) fn polar_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    u * vt
}
