//! Left-invariant geometry of 3-dimensional Lie groups used as base models.
//!
//! A base model is a Lie algebra with structure constants `cⁱ_jk`
//! (`[X_j, X_k] = cⁱ_jk X_i`, `dσⁱ = −½ cⁱ_jk σʲ∧σᵏ`). The bundle `M × SO(3)`
//! carries the invariant coframe `(σ, μ)` where `μ` are the right-invariant
//! Maurer–Cartan forms of the fiber, `dμⁱ = +½ εᵢⱼₖ μʲ∧μᵏ`. Everything is
//! evaluated in the identity gauge:
//!
//! * solder form `eⁱ = E_ij σʲ`,
//! * connection `aⁱ = μⁱ + A_ij σʲ`,
//! * curvature `da + ½[a∧a] = G_ij êⁱ X_j` with `êⁱ = ½ εᵢⱼₖ eʲ∧eᵏ`.
//!
//! Because `e` and `a` are equivariant rather than invariant, their covariant
//! exterior derivatives pick up `−[μ∧·]` in this coframe; invariant scalar
//! forms such as ψ and ω use the plain differential [`ModelAlgebra::d`].

use alloc::string::{String, ToString};
use core::fmt;

use nalgebra::{Matrix3, SMatrix, SVector};

use crate::exterior::{slots, AltForm};
use crate::linalg::{levi_civita as eps, max_abs3};
use crate::{Error, Result};

pub type ConnectionMatrix = Matrix3<f64>;
pub type CurvatureMatrix = Matrix3<f64>;

/// Residual threshold for the Levi-Civita solve and horizontality checks,
/// relative to the size of the inputs.
pub const STRUCTURE_EPS: f64 = 1e-12;

/// Preset names accepted by [`ModelAlgebra::preset`].
pub const PRESETS: [&str; 6] = ["abelian", "su2", "heisenberg", "e11", "e2", "sl2r"];

/// Structure constants of a 3-dimensional real Lie algebra.
#[derive(Clone, PartialEq)]
pub struct ModelAlgebra {
    name: String,
    /// `c[i][j][k] = cⁱ_jk`.
    c: [[[f64; 3]; 3]; 3],
}

impl fmt::Debug for ModelAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelAlgebra({})", self.name)
    }
}

impl ModelAlgebra {
    /// Validates antisymmetry and the Jacobi identity.
    pub fn new(name: &str, c: [[[f64; 3]; 3]; 3]) -> Result<Self> {
        let mut scale: f64 = 0.0;
        let mut antisym: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    scale = scale.max(c[i][j][k].abs());
                    antisym = antisym.max((c[i][j][k] + c[i][k][j]).abs());
                }
            }
        }
        if antisym > 1e-12 * scale.max(1.0) {
            return Err(Error::NotAntisymmetric(antisym));
        }
        let mut jacobi: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        for m in 0..3 {
                            s += c[m][a][b] * c[l][m][cc]
                                + c[m][b][cc] * c[l][m][a]
                                + c[m][cc][a] * c[l][m][b];
                        }
                        jacobi = jacobi.max(s.abs());
                    }
                }
            }
        }
        if jacobi > 1e-10 * scale.max(1.0) * scale.max(1.0) {
            return Err(Error::JacobiViolation(jacobi));
        }
        Ok(ModelAlgebra {
            name: name.to_string(),
            c,
        })
    }

    /// Unimodular algebra with `[X₂,X₃] = n₁X₁`, `[X₃,X₁] = n₂X₂`, `[X₁,X₂] = n₃X₃`.
    pub fn unimodular(name: &str, n: [f64; 3]) -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        for (i, ci) in c.iter_mut().enumerate() {
            for (j, cij) in ci.iter_mut().enumerate() {
                for (k, cijk) in cij.iter_mut().enumerate() {
                    *cijk = n[i] * eps(i, j, k);
                }
            }
        }
        ModelAlgebra {
            name: name.to_string(),
            c,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let n = match name {
            "abelian" => [0.0, 0.0, 0.0],
            "su2" => [1.0, 1.0, 1.0],
            "heisenberg" => [1.0, 0.0, 0.0],
            "e11" => [1.0, -1.0, 0.0],
            "e2" => [1.0, 1.0, 0.0],
            "sl2r" => [1.0, 1.0, -1.0],
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Ok(Self::unimodular(name, n))
    }

    pub fn abelian() -> Self {
        Self::unimodular("abelian", [0.0; 3])
    }

    pub fn su2() -> Self {
        Self::unimodular("su2", [1.0; 3])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn structure_constants(&self) -> &[[[f64; 3]; 3]; 3] {
        &self.c
    }

    /// `dσⁱ` as a 2-form on a coframe of dimension `dim`.
    fn d_sigma(&self, i: usize, dim: usize) -> AltForm {
        let mut out = AltForm::zero(dim, 2).expect("supported dimension");
        for j in 0..3 {
            for k in (j + 1)..3 {
                let c = self.c[i][j][k];
                if c != 0.0 {
                    out += AltForm::basis(dim, &[slots::SIGMA[j], slots::SIGMA[k]])
                        .expect("valid slots")
                        * -c;
                }
            }
        }
        out
    }

    /// `dμⁱ = ½ εᵢⱼₖ μʲ∧μᵏ`, i.e. `dμ¹ = μ²∧μ³` and cyclic.
    fn d_mu(i: usize, dim: usize) -> AltForm {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        AltForm::basis(dim, &[slots::MU[j], slots::MU[k]]).expect("valid slots")
    }

    /// Exterior derivative of a constant-coefficient form in the invariant
    /// coframe (`d dt = 0` in dimension 7).
    pub fn d(&self, alpha: &AltForm) -> AltForm {
        let dim = alpha.dim();
        let mut out = AltForm::zero(dim, (alpha.degree() + 1).min(dim)).expect("supported");
        if alpha.degree() == dim {
            return out;
        }
        let mut generators = [AltForm::zero(dim, 2).expect("supported"); 7];
        for i in 0..3 {
            generators[slots::SIGMA[i]] = self.d_sigma(i, dim);
            generators[slots::MU[i]] = Self::d_mu(i, dim);
        }
        let mut slot_list = [0usize; 7];
        for (mask, c) in alpha.terms() {
            let mut n = 0;
            let mut bits = mask;
            while bits != 0 {
                slot_list[n] = bits.trailing_zeros() as usize;
                n += 1;
                bits &= bits - 1;
            }
            for p in 0..n {
                let dg = &generators[slot_list[p]];
                if dg.is_zero() {
                    continue;
                }
                let left = AltForm::basis(dim, &slot_list[..p]).expect("valid");
                let right = AltForm::basis(dim, &slot_list[p + 1..n]).expect("valid");
                let term = left.wedge(dg).and_then(|x| x.wedge(&right)).expect("fits");
                let sign = if p % 2 == 0 { c } else { -c };
                out += term * sign;
            }
        }
        out
    }
}

/// A solder frame `eⁱ = E_ij σʲ` with `det E > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolderFrame(Matrix3<f64>);

impl SolderFrame {
    pub fn new(e: Matrix3<f64>) -> Result<Self> {
        let det = e.determinant();
        let scale = max_abs3(&e);
        if !(det > 1e-14 * scale * scale * scale) || !det.is_finite() {
            return Err(Error::SingularFrame);
        }
        Ok(SolderFrame(e))
    }

    pub fn identity() -> Self {
        SolderFrame(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// Γ = EᵀE, the metric on the base in σ-coordinates.
    pub fn metric(&self) -> Matrix3<f64> {
        metric_of_frame(&self.0)
    }
}

pub fn metric_of_frame(e: &Matrix3<f64>) -> Matrix3<f64> {
    e.transpose() * e
}

/// The solder 1-forms `eⁱ` on a coframe of dimension `dim`.
pub fn solder_forms(e: &Matrix3<f64>, dim: usize) -> [AltForm; 3] {
    core::array::from_fn(|i| {
        let mut f = AltForm::zero(dim, 1).expect("supported");
        for j in 0..3 {
            f.coeffs_mut()[slots::SIGMA[j]] = e[(i, j)];
        }
        f
    })
}

/// The connection 1-forms `aⁱ = μⁱ + A_ij σʲ`.
pub fn connection_forms(a: &ConnectionMatrix, dim: usize) -> [AltForm; 3] {
    core::array::from_fn(|i| {
        let mut f = AltForm::zero(dim, 1).expect("supported");
        for j in 0..3 {
            f.coeffs_mut()[slots::SIGMA[j]] = a[(i, j)];
        }
        f.coeffs_mut()[slots::MU[i]] = 1.0;
        f
    })
}

fn horizontal_part(a: &ConnectionMatrix, dim: usize) -> [AltForm; 3] {
    core::array::from_fn(|i| {
        let mut f = AltForm::zero(dim, 1).expect("supported");
        for j in 0..3 {
            f.coeffs_mut()[slots::SIGMA[j]] = a[(i, j)];
        }
        f
    })
}

/// `Tⁱ = deⁱ + ε_jki aʲ∧eᵏ − ε_jki μʲ∧eᵏ`, the torsion of `a` at the identity
/// gauge (the `μ` terms of the bracket cancel against the derivative of the
/// equivariant frame).
pub fn torsion(e: &SolderFrame, a: &ConnectionMatrix, alg: &ModelAlgebra) -> [AltForm; 3] {
    let es = solder_forms(e.matrix(), 6);
    let ah = horizontal_part(a, 6);
    core::array::from_fn(|i| {
        let mut t = alg.d(&es[i]);
        for j in 0..3 {
            for k in 0..3 {
                let s = eps(j, k, i);
                if s != 0.0 {
                    t += ah[j].wedge(&es[k]).expect("fits") * s;
                }
            }
        }
        t
    })
}

pub fn torsion_residual(e: &SolderFrame, a: &ConnectionMatrix, alg: &ModelAlgebra) -> f64 {
    torsion(e, a, alg)
        .iter()
        .fold(0.0, |m, t| f64::max(m, t.norm_inf()))
}

const SIGMA_PAIRS: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];

fn torsion_vector(e: &SolderFrame, a: &ConnectionMatrix, alg: &ModelAlgebra) -> SVector<f64, 9> {
    let t = torsion(e, a, alg);
    SVector::from_fn(|r, _| t[r / 3].coeff(&SIGMA_PAIRS[r % 3]))
}

/// The unique torsion-free connection for the frame `e`.
pub fn levi_civita(e: &SolderFrame, alg: &ModelAlgebra) -> Result<ConnectionMatrix> {
    let base = torsion_vector(e, &Matrix3::zeros(), alg);
    let mut lin = SMatrix::<f64, 9, 9>::zeros();
    for p in 0..9 {
        let mut unit = Matrix3::zeros();
        unit[(p / 3, p % 3)] = 1.0;
        let col = torsion_vector(e, &unit, alg) - base;
        lin.set_column(p, &col);
    }
    let sol = lin.lu().solve(&(-base)).ok_or(Error::SingularFrame)?;
    Ok(Matrix3::from_fn(|i, j| sol[3 * i + j]))
}

/// The curvature 2-forms `Fⁱ` of `a = μ + Aσ` at the identity gauge.
pub fn curvature_forms(a: &ConnectionMatrix, alg: &ModelAlgebra) -> [AltForm; 3] {
    let full = connection_forms(a, 6);
    let mu: [AltForm; 3] = core::array::from_fn(|i| {
        AltForm::basis(6, &[slots::MU[i]]).expect("valid")
    });
    core::array::from_fn(|i| {
        let mut f = alg.d(&full[i]);
        for j in 0..3 {
            for k in 0..3 {
                let s = eps(j, k, i);
                if s != 0.0 {
                    f += full[j].wedge(&full[k]).expect("fits") * (0.5 * s);
                    f += mu[j].wedge(&full[k]).expect("fits") * -s;
                }
            }
        }
        f
    })
}

/// Solves `Fʲ = G_ij êⁱ` for the curvature matrix `G`.
pub fn curvature(
    a: &ConnectionMatrix,
    e: &SolderFrame,
    alg: &ModelAlgebra,
) -> Result<CurvatureMatrix> {
    let forms = curvature_forms(a, alg);
    let scale = 1.0 + max_abs3(a) * max_abs3(a);
    let mut vertical: f64 = 0.0;
    let mut fm = Matrix3::zeros();
    for (j, f) in forms.iter().enumerate() {
        for (mask, c) in f.terms() {
            let touches_fiber = slots::MU.iter().any(|&s| mask & (1 << s) != 0);
            if touches_fiber {
                vertical = vertical.max(c.abs());
            }
        }
        for (col, pair) in SIGMA_PAIRS.iter().enumerate() {
            fm[(j, col)] = f.coeff(pair);
        }
    }
    if vertical > STRUCTURE_EPS * scale {
        return Err(Error::NonHorizontalCurvature(vertical));
    }
    let es = solder_forms(e.matrix(), 6);
    let mut hat = Matrix3::zeros();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let ehat = es[j].wedge(&es[k]).expect("fits");
        for (col, pair) in SIGMA_PAIRS.iter().enumerate() {
            hat[(i, col)] = ehat.coeff(pair);
        }
    }
    // fm = Gᵀ · hat
    let inv = hat.try_inverse().ok_or(Error::SingularFrame)?;
    Ok((fm * inv).transpose())
}

/// Einstein tensor `Ric − ½R·Id` of the metric `EᵀE`, in the orthonormal
/// frame dual to `e`, from the Koszul formula on the frame structure
/// constants. Does not touch the bundle connection.
pub fn einstein_oracle(e: &SolderFrame, alg: &ModelAlgebra) -> Result<Matrix3<f64>> {
    let em = e.matrix();
    let inv = em.try_inverse().ok_or(Error::SingularFrame)?;
    let c = &alg.c;
    // [e_b, e_c] = C[a][b][c] e_a
    let mut cf = [[[0.0; 3]; 3]; 3];
    for (a, cfa) in cf.iter_mut().enumerate() {
        for (b, cfab) in cfa.iter_mut().enumerate() {
            for (cc, x) in cfab.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            s += em[(a, i)] * c[i][j][k] * inv[(j, b)] * inv[(k, cc)];
                        }
                    }
                }
                *x = s;
            }
        }
    }
    // ⟨[e_a, e_b], e_c⟩
    let bracket = |a: usize, b: usize, cc: usize| cf[cc][a][b];
    // ∇_{e_a} e_b = gamma[a][b][c] e_c
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for (a, ga) in gamma.iter_mut().enumerate() {
        for (b, gab) in ga.iter_mut().enumerate() {
            for (cc, x) in gab.iter_mut().enumerate() {
                *x = 0.5 * (bracket(a, b, cc) - bracket(b, cc, a) + bracket(cc, a, b));
            }
        }
    }
    // ⟨R(e_a, e_b) e_c, e_d⟩
    let riemann = |a: usize, b: usize, cc: usize, d: usize| {
        let mut s = 0.0;
        for k in 0..3 {
            s += gamma[b][cc][k] * gamma[a][k][d];
            s -= gamma[a][cc][k] * gamma[b][k][d];
            s -= cf[k][a][b] * gamma[k][cc][d];
        }
        s
    };
    let mut ric = Matrix3::<f64>::zeros();
    for y in 0..3 {
        for z in 0..3 {
            ric[(y, z)] = (0..3).map(|a| riemann(a, y, z, a)).sum();
        }
    }
    let scalar = ric.trace();
    Ok(ric - Matrix3::identity() * (0.5 * scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rotation(axis: [f64; 3], angle: f64) -> Matrix3<f64> {
        nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(nalgebra::Vector3::from(axis)),
            angle,
        )
        .into_inner()
    }

    fn frame(seed: f64) -> SolderFrame {
        let m = Matrix3::from_fn(|i, j| {
            let x = (seed * (1.0 + i as f64) + 0.7 * j as f64).sin();
            if i == j {
                1.2 + 0.3 * x
            } else {
                0.25 * x
            }
        });
        SolderFrame::new(m).unwrap()
    }

    #[test]
    fn presets_satisfy_jacobi() {
        for name in PRESETS {
            let alg = ModelAlgebra::preset(name).unwrap();
            assert!(ModelAlgebra::new(name, *alg.structure_constants()).is_ok());
        }
        assert!(ModelAlgebra::preset("bianchi-v").is_err());
    }

    #[test]
    fn rejects_broken_structure_constants() {
        let mut c = [[[0.0; 3]; 3]; 3];
        c[0][0][1] = 1.0;
        assert!(matches!(
            ModelAlgebra::new("x", c),
            Err(Error::NotAntisymmetric(_))
        ));
        // [X0,X1] = X0 + X2 (antisymmetric) ... Jacobi fails for this choice
        let mut c = [[[0.0; 3]; 3]; 3];
        c[0][0][1] = 1.0;
        c[0][1][0] = -1.0;
        c[2][0][1] = 1.0;
        c[2][1][0] = -1.0;
        c[1][0][2] = 1.0;
        c[1][2][0] = -1.0;
        assert!(matches!(
            ModelAlgebra::new("x", c),
            Err(Error::JacobiViolation(_))
        ));
    }

    #[test]
    fn maurer_cartan_differentials() {
        let alg = ModelAlgebra::su2();
        let s1 = AltForm::basis(6, &[0]).unwrap();
        assert_eq!(alg.d(&s1), -AltForm::basis(6, &[1, 2]).unwrap());
        let m1 = AltForm::basis(6, &[3]).unwrap();
        assert_eq!(alg.d(&m1), AltForm::basis(6, &[4, 5]).unwrap());
        let dt = AltForm::basis(7, &[6]).unwrap();
        assert!(alg.d(&dt).is_zero());
    }

    #[test]
    fn levi_civita_examples() {
        let abel = ModelAlgebra::abelian();
        let a = levi_civita(&frame(0.3), &abel).unwrap();
        assert_abs_diff_eq!(a.norm(), 0.0, epsilon = 1e-14);
        let su2 = ModelAlgebra::su2();
        for c in [0.5, 1.0, 2.0, 3.7] {
            let e = SolderFrame::new(Matrix3::identity() * c).unwrap();
            let a = levi_civita(&e, &su2).unwrap();
            assert_abs_diff_eq!((a - Matrix3::identity() * 0.5).norm(), 0.0, epsilon = 1e-13);
            assert!(torsion_residual(&e, &a, &su2) <= 1e-12);
            let g = curvature(&a, &e, &su2).unwrap();
            let want = Matrix3::identity() * (-1.0 / (4.0 * c * c));
            assert_abs_diff_eq!((g - want).norm(), 0.0, epsilon = 1e-12);
            let ein = einstein_oracle(&e, &su2).unwrap();
            assert_abs_diff_eq!((ein - want).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_curvature() {
        let abel = ModelAlgebra::abelian();
        let g = curvature(&Matrix3::zeros(), &SolderFrame::identity(), &abel).unwrap();
        assert_eq!(g, Matrix3::zeros());
        assert_eq!(einstein_oracle(&frame(1.0), &abel).unwrap(), Matrix3::zeros());
    }

    #[test]
    fn curvature_matches_oracle_on_all_presets() {
        for name in PRESETS {
            let alg = ModelAlgebra::preset(name).unwrap();
            for s in 0..10 {
                let e = frame(0.37 * s as f64 + 0.1);
                let a = levi_civita(&e, &alg).unwrap();
                assert!(torsion_residual(&e, &a, &alg) <= 1e-12, "{name}");
                let g = curvature(&a, &e, &alg).unwrap();
                let ein = einstein_oracle(&e, &alg).unwrap();
                assert!((g - g.transpose()).amax() <= 1e-10);
                assert!((g - ein).amax() <= 1e-10, "{name}: {g} vs {ein}");
            }
        }
    }

    #[test]
    fn gauge_equivariance() {
        let alg = ModelAlgebra::preset("sl2r").unwrap();
        let e = frame(0.9);
        let r = rotation([0.3, -1.0, 0.5], 0.8);
        let re = SolderFrame::new(r * e.matrix()).unwrap();
        let a = levi_civita(&e, &alg).unwrap();
        let ra = levi_civita(&re, &alg).unwrap();
        assert!((ra - r * a).amax() < 1e-12);
        let g = curvature(&a, &e, &alg).unwrap();
        let rg = curvature(&ra, &re, &alg).unwrap();
        assert!((rg - r * g * r.transpose()).amax() < 1e-12);
        assert!((re.metric() - e.metric()).amax() < 1e-12);
    }

    #[test]
    fn metric_examples() {
        assert_eq!(metric_of_frame(&Matrix3::identity()), Matrix3::identity());
        let d = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(
            metric_of_frame(&d),
            Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 4.0, 9.0))
        );
    }

    #[test]
    fn singular_frames_rejected() {
        assert!(SolderFrame::new(Matrix3::zeros()).is_err());
        assert!(SolderFrame::new(-Matrix3::identity()).is_err());
    }

    #[test]
    fn differential_squares_to_zero() {
        for name in PRESETS {
            let alg = ModelAlgebra::preset(name).unwrap();
            for deg in 0..6 {
                let mut a = AltForm::zero(6, deg).unwrap();
                for (i, x) in a.coeffs_mut().iter_mut().enumerate() {
                    *x = ((i * 7 + deg) as f64).cos();
                }
                assert!(alg.d(&alg.d(&a)).norm_inf() < 1e-13, "{name} degree {deg}");
            }
        }
    }
}
