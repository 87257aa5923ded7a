//! SO(3)-invariant forms on the slice `M × SO(3)` that vanish along the
//! fibers, in the identity-gauge parametrisation
//!
//! ```text
//! ψ = −f e¹²³ + e¹a²³ + e²a³¹ + e³a¹²,      ω = K_ij aⁱ∧eʲ.
//! ```

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector};

use crate::exterior::{slots, AltForm, TangentVector};
use crate::homogeneous::{connection_forms, solder_forms, ConnectionMatrix, ModelAlgebra, SolderFrame};
use crate::stable_forms::{is_definite6, DefinitenessMode};
use crate::{Error, Result};

pub type KMatrix = Matrix3<f64>;

/// Relative threshold for round-trip and vanishing checks.
pub const ROUND_TRIP_EPS: f64 = 1e-12;

/// Reduced data `(f, A, E)` of an invariant definite 3-form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTriple {
    pub f: f64,
    pub a: ConnectionMatrix,
    pub e: SolderFrame,
}

impl InvariantTriple {
    pub fn new(f: f64, a: ConnectionMatrix, e: SolderFrame) -> Result<Self> {
        if !(f > 0.0) {
            return Err(Error::NotDecomposable(f));
        }
        Ok(InvariantTriple { f, a, e })
    }

    /// The triple of `τ*ψ` for a constant gauge rotation τ: `(f, τᵀA, τᵀE)`.
    pub fn gauge_pullback(&self, tau: &Matrix3<f64>) -> Result<Self> {
        Ok(InvariantTriple {
            f: self.f,
            a: tau.transpose() * self.a,
            e: SolderFrame::new(tau.transpose() * self.e.matrix())?,
        })
    }
}

/// Linear map on slice tangent vectors that realises a constant gauge
/// rotation: `μ ↦ Rμ`, `σ` fixed. Pulling an assembled form back along it
/// gives the form of [`InvariantTriple::gauge_pullback`].
pub fn fiber_rotation(r: &Matrix3<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::identity(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            g[(slots::MU[i], slots::MU[j])] = r[(i, j)];
        }
    }
    g
}

fn wedge3(a: &AltForm, b: &AltForm, c: &AltForm) -> AltForm {
    a.wedge(b).and_then(|x| x.wedge(c)).expect("degree fits")
}

fn assemble_parts(f: f64, a: &ConnectionMatrix, e: &Matrix3<f64>) -> AltForm {
    let es = solder_forms(e, 6);
    let as_ = connection_forms(a, 6);
    let mut psi = wedge3(&es[0], &es[1], &es[2]) * -f;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        psi += wedge3(&es[i], &as_[j], &as_[k]);
    }
    psi
}

pub fn assemble_psi(t: &InvariantTriple) -> AltForm {
    assemble_parts(t.f, &t.a, t.e.matrix())
}

pub fn assemble_omega(k: &KMatrix, t: &InvariantTriple) -> AltForm {
    let es = solder_forms(t.e.matrix(), 6);
    let as_ = connection_forms(&t.a, 6);
    let mut om = AltForm::zero(6, 2).expect("supported");
    for i in 0..3 {
        for j in 0..3 {
            if k[(i, j)] != 0.0 {
                om += as_[i].wedge(&es[j]).expect("fits") * k[(i, j)];
            }
        }
    }
    om
}

fn fiber_vector(i: usize) -> TangentVector {
    TangentVector::basis(6, slots::MU[i]).expect("valid slot")
}

fn check_slice_form(form: &AltForm, degree: usize) -> Result<()> {
    if form.dim() != 6 {
        return Err(Error::DimensionMismatch {
            left: form.dim(),
            right: 6,
        });
    }
    if form.degree() != degree {
        return Err(Error::DegreeMismatch {
            expected: degree,
            found: form.degree(),
        });
    }
    Ok(())
}

fn mixed_block(psi: &AltForm) -> SVector<f64, 9> {
    const PAIRS: [[usize; 2]; 3] = [[0, 1], [0, 2], [1, 2]];
    SVector::from_fn(|r, _| psi.coeff(&[slots::MU[r / 3], PAIRS[r % 3][0], PAIRS[r % 3][1]]))
}

/// Recovers the unique `(f, A, E)` with `assemble_psi = ψ`.
pub fn decompose_psi(psi: &AltForm) -> Result<InvariantTriple> {
    check_slice_form(psi, 3)?;
    let scale = psi.norm_inf().max(1.0);
    let fiber = psi.coeff(&slots::MU);
    if fiber.abs() > ROUND_TRIP_EPS * scale {
        return Err(Error::FiberNonVanishing(fiber));
    }
    if !is_definite6(psi, DefinitenessMode::Exact)?.definite {
        return Err(Error::NotDefinite);
    }
    // eⁱ = ι(X_k*)ι(X_j*)ψ for (i, j, k) cyclic
    let mut e = Matrix3::zeros();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let ei = psi.interior(&fiber_vector(j))?.interior(&fiber_vector(k))?;
        for s in 0..3 {
            e[(i, s)] = ei.coeffs()[slots::SIGMA[s]];
        }
    }
    let frame = SolderFrame::new(e).map_err(|_| Error::NotDecomposable(e.determinant()))?;

    let base = assemble_parts(0.0, &Matrix3::zeros(), &e);
    let base_block = mixed_block(&base);
    let mut lin = SMatrix::<f64, 9, 9>::zeros();
    for p in 0..9 {
        let mut unit = Matrix3::zeros();
        unit[(p / 3, p % 3)] = 1.0;
        lin.set_column(p, &(mixed_block(&assemble_parts(0.0, &unit, &e)) - base_block));
    }
    let sol = lin
        .lu()
        .solve(&(mixed_block(psi) - base_block))
        .ok_or(Error::NotDecomposable(f64::INFINITY))?;
    let a = Matrix3::from_fn(|i, j| sol[3 * i + j]);

    let top = [slots::SIGMA[0], slots::SIGMA[1], slots::SIGMA[2]];
    let without_f = assemble_parts(0.0, &a, &e).coeff(&top);
    let f = (without_f - psi.coeff(&top)) / frame.det();
    if !(f > 0.0) {
        return Err(Error::NotDecomposable(f));
    }
    let triple = InvariantTriple { f, a, e: frame };
    let residual = (assemble_psi(&triple) - *psi).norm_inf();
    if residual > ROUND_TRIP_EPS * scale {
        return Err(Error::NotDecomposable(residual));
    }
    Ok(triple)
}

/// Recovers `K` from `ι(X_i*)ω = K_ij eʲ`.
pub fn decompose_omega(omega: &AltForm, t: &InvariantTriple) -> Result<KMatrix> {
    check_slice_form(omega, 2)?;
    let mut c = Matrix3::zeros();
    for l in 0..3 {
        let contracted = omega.interior(&fiber_vector(l))?;
        for m in 0..3 {
            c[(l, m)] = contracted.coeffs()[slots::SIGMA[m]];
        }
    }
    let inv = t.e.matrix().try_inverse().ok_or(Error::SingularFrame)?;
    let k = c * inv;
    let residual = (assemble_omega(&k, t) - *omega).norm_inf();
    if residual > ROUND_TRIP_EPS * omega.norm_inf().max(1.0) {
        return Err(Error::NotInPencil(residual));
    }
    Ok(k)
}

/// Re-export of the invariant-coframe differential.
pub fn slice_d(alpha: &AltForm, alg: &ModelAlgebra) -> AltForm {
    alg.d(alpha)
}

/// `‖dψ‖∞` for the assembled ψ of `t`.
pub fn closedness_residual(t: &InvariantTriple, alg: &ModelAlgebra) -> f64 {
    alg.d(&assemble_psi(t)).norm_inf()
}

/// `‖ω∧ψ‖∞ / max(1, ‖ω‖∞‖ψ‖∞)`.
pub fn one_one_defect(omega: &AltForm, psi: &AltForm) -> Result<f64> {
    let five = omega.wedge(psi)?;
    Ok(five.norm_inf() / (omega.norm_inf() * psi.norm_inf()).max(1.0))
}

/// Whether ω is of type (1,1) for `J_ψ`, tested as `ω∧ψ = 0`.
pub fn is_one_one(omega: &AltForm, psi: &AltForm) -> Result<bool> {
    check_slice_form(omega, 2)?;
    check_slice_form(psi, 3)?;
    if !is_definite6(psi, DefinitenessMode::Exact)?.definite {
        return Err(Error::NotDefinite);
    }
    Ok(one_one_defect(omega, psi)? <= ROUND_TRIP_EPS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::levi_civita;
    use crate::stable_forms::normal_form_psi0;
    use approx::assert_abs_diff_eq;

    fn b(s: &[usize]) -> AltForm {
        AltForm::basis(6, s).unwrap()
    }

    fn unit_triple() -> InvariantTriple {
        InvariantTriple::new(1.0, Matrix3::zeros(), SolderFrame::identity()).unwrap()
    }

    #[test]
    fn assemble_unit_triple_is_normal_form() {
        let psi = assemble_psi(&unit_triple());
        let want = -b(&[0, 1, 2]) + b(&[0, 4, 5]) + b(&[1, 5, 3]) + b(&[2, 3, 4]);
        assert_eq!(psi, want);
        assert_eq!(psi, normal_form_psi0());
        assert_eq!(psi.coeff(&slots::MU), 0.0);
    }

    #[test]
    fn decompose_examples() {
        let t = decompose_psi(&assemble_psi(&unit_triple())).unwrap();
        assert_eq!(t.f, 1.0);
        assert_eq!(t.a, Matrix3::zeros());
        assert_eq!(*t.e.matrix(), Matrix3::identity());

        let t2 = InvariantTriple::new(
            2.0,
            Matrix3::identity() * 0.5,
            SolderFrame::new(Matrix3::identity() * 3.0).unwrap(),
        )
        .unwrap();
        let back = decompose_psi(&assemble_psi(&t2)).unwrap();
        assert_abs_diff_eq!(back.f, 2.0, epsilon = 1e-13);
        assert!((back.a - t2.a).amax() < 1e-13);
        assert!((back.e.matrix() - t2.e.matrix()).amax() < 1e-13);

        let bad = assemble_psi(&unit_triple()) + b(&[3, 4, 5]) * 0.1;
        assert!(matches!(decompose_psi(&bad), Err(Error::FiberNonVanishing(_))));
    }

    #[test]
    fn decompose_rejects_other_orbits() {
        let split = b(&[3, 4, 5]) * 0.0 + b(&[0, 1, 2]) + b(&[0, 3, 4]);
        assert!(decompose_psi(&split).is_err());
    }

    #[test]
    fn omega_examples() {
        let om = assemble_omega(&Matrix3::identity(), &unit_triple());
        assert_eq!(om, b(&[3, 0]) + b(&[4, 1]) + b(&[5, 2]));
        let k = decompose_omega(&om, &unit_triple()).unwrap();
        assert_eq!(k, Matrix3::identity());
        let with_base = om + b(&[0, 1]);
        assert!(matches!(
            decompose_omega(&with_base, &unit_triple()),
            Err(Error::NotInPencil(_))
        ));
    }

    #[test]
    fn omega_vanishes_on_fiber_and_horizontal_planes() {
        let t = InvariantTriple::new(
            1.3,
            Matrix3::from_fn(|i, j| 0.1 * (i as f64) - 0.2 * (j as f64)),
            SolderFrame::new(Matrix3::from_fn(|i, j| if i == j { 1.5 } else { 0.2 })).unwrap(),
        )
        .unwrap();
        let k = Matrix3::from_fn(|i, j| (1 + i + 2 * j) as f64 * 0.3);
        let om = assemble_omega(&k, &t);
        for i in 0..3 {
            for j in 0..3 {
                let x = om.interior(&fiber_vector(i)).unwrap();
                assert_eq!(x.interior(&fiber_vector(j)).unwrap().coeffs()[0], 0.0);
            }
        }
        // horizontal lifts of ∂σ_j: ∂σ_j − A_ij ∂μ_i
        for j in 0..3 {
            let mut h = [0.0; 6];
            h[j] = 1.0;
            for i in 0..3 {
                h[3 + i] = -t.a[(i, j)];
            }
            let hj = TangentVector::new(&h).unwrap();
            for l in 0..3 {
                let mut g = [0.0; 6];
                g[l] = 1.0;
                for i in 0..3 {
                    g[3 + i] = -t.a[(i, l)];
                }
                let hl = TangentVector::new(&g).unwrap();
                let v = om.interior(&hj).unwrap().interior(&hl).unwrap().coeffs()[0];
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn closedness_detects_levi_civita() {
        let su2 = ModelAlgebra::su2();
        let e = SolderFrame::identity();
        let lc = levi_civita(&e, &su2).unwrap();
        let good = InvariantTriple::new(1.0, lc, e).unwrap();
        assert!(closedness_residual(&good, &su2) <= 1e-12);
        let bad = InvariantTriple::new(1.0, Matrix3::zeros(), e).unwrap();
        assert!(closedness_residual(&bad, &su2) > 0.1);
        let abel = ModelAlgebra::abelian();
        assert!(closedness_residual(&unit_triple(), &abel) == 0.0);
    }

    #[test]
    fn one_one_examples() {
        let t = unit_triple();
        let psi = assemble_psi(&t);
        assert!(is_one_one(&assemble_omega(&Matrix3::identity(), &t), &psi).unwrap());
        let mut n = Matrix3::zeros();
        n[(0, 1)] = 1.0;
        n[(1, 0)] = -1.0;
        assert!(!is_one_one(&assemble_omega(&n, &t), &psi).unwrap());
        assert!(is_one_one(&AltForm::zero(6, 2).unwrap(), &psi).unwrap());
        let split = b(&[0, 1, 2]) + b(&[3, 4, 5]);
        assert!(matches!(
            is_one_one(&AltForm::zero(6, 2).unwrap(), &split),
            Err(Error::NotDefinite)
        ));
    }

    #[test]
    fn gauge_pullback_matches_fiber_rotation() {
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1).into_inner();
        let t = InvariantTriple::new(
            1.7,
            Matrix3::from_fn(|i, j| 0.2 * i as f64 - 0.1 * j as f64 + 0.05),
            SolderFrame::new(Matrix3::from_fn(|i, j| if i == j { 1.2 } else { 0.15 * (i + j) as f64 }))
                .unwrap(),
        )
        .unwrap();
        let pulled = assemble_psi(&t).pullback(&fiber_rotation(&r)).unwrap();
        let via_triple = assemble_psi(&t.gauge_pullback(&r).unwrap());
        assert!((pulled - via_triple).norm_inf() < 1e-13);
        let k = Matrix3::from_fn(|i, j| 0.3 * i as f64 + 0.1 * j as f64);
        let pulled_om = assemble_omega(&k, &t).pullback(&fiber_rotation(&r)).unwrap();
        let via = assemble_omega(&(r.transpose() * k * r), &t.gauge_pullback(&r).unwrap());
        assert!((pulled_om - via).norm_inf() < 1e-13);
    }

    #[test]
    fn negative_f_is_rejected() {
        assert!(InvariantTriple::new(0.0, Matrix3::zeros(), SolderFrame::identity()).is_err());
        let psi = assemble_parts(-1.0, &Matrix3::zeros(), &Matrix3::identity());
        assert!(decompose_psi(&psi).is_err());
    }
}
