//! Classification and induced geometry of 3-forms in dimensions 6 and 7.
//!
//! In dimension 6 the orbit of a 3-form is read off the quartic invariant
//! built from the contraction endomorphism `K_ψ(v) = ι(v)ψ∧ψ ∈ Λ⁵ ≅ V`; a
//! second, independent test applies the rank-4 contraction criterion on
//! sampled directions. In dimension 7 the bilinear form
//! `b(u,v)·vol = ι(u)φ∧ι(v)φ∧φ` gives the metric and volume of a definite φ.

use nalgebra::{DMatrix, Matrix6, SMatrix, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exterior::{slots, AltForm, TangentVector};
use crate::linalg::{powf, sqrt};
use crate::{Error, Result};

pub type Matrix7 = SMatrix<f64, 7, 7>;

/// `tr K²` of the normal form ψ₀ against [`standard_volume`]`(6)`.
const TRACE_K2_PSI0: f64 = -24.0;

/// Relative width of the degenerate band around `λ = 0`.
pub const LAMBDA_EPS: f64 = 1e-10;

/// Relative eigenvalue floor for definiteness of the G₂ bilinear form.
pub const SPD_EPS: f64 = 1e-10;

/// `ψ₀ = −w¹²³ + w¹v²³ + w²v³¹ + w³v¹²`.
pub fn normal_form_psi0() -> AltForm {
    psi0_in(6)
}

/// `φ₀ = (v¹w¹ + v²w² + v³w³)∧v⁰ + ψ₀`.
pub fn normal_form_phi0() -> AltForm {
    let b = |s: &[usize]| AltForm::basis(7, s).expect("valid slots");
    let mut phi = psi0_in(7);
    for i in 1..=3 {
        phi += b(&[slots::v(i), slots::w(i), slots::V0]);
    }
    phi
}

fn psi0_in(dim: usize) -> AltForm {
    use slots::{v, w};
    let b = |s: &[usize]| AltForm::basis(dim, s).expect("valid slots");
    -b(&[w(1), w(2), w(3)])
        + b(&[w(1), v(2), v(3)])
        + b(&[w(2), v(3), v(1)])
        + b(&[w(3), v(1), v(2)])
}

/// `v¹∧w¹∧v²∧w²∧v³∧w³` (∧`v⁰` in dimension 7). Equal to `σ¹²³∧μ¹²³(∧dt)`.
pub fn standard_volume(dim: usize) -> Result<AltForm> {
    use slots::{v, w};
    let mut order = alloc::vec![v(1), w(1), v(2), w(2), v(3), w(3)];
    if dim == 7 {
        order.push(slots::V0);
    }
    AltForm::basis(dim, &order)
}

fn volume_scale(vol: &AltForm, dim: usize) -> Result<f64> {
    if vol.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: vol.dim(),
            right: dim,
        });
    }
    if vol.degree() != dim {
        return Err(Error::DegreeMismatch {
            expected: dim,
            found: vol.degree(),
        });
    }
    let c = vol.coeffs()[0];
    if c == 0.0 {
        return Err(Error::ZeroVolume);
    }
    Ok(c)
}

fn check_three_form(psi: &AltForm, dim: usize) -> Result<()> {
    if psi.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: psi.dim(),
            right: dim,
        });
    }
    if psi.degree() != 3 {
        return Err(Error::DegreeMismatch {
            expected: 3,
            found: psi.degree(),
        });
    }
    Ok(())
}

/// The endomorphism `K_ψ` defined by `ι(K_ψ v) vol = ι(v)ψ ∧ ψ`.
pub fn contraction_endomorphism(psi: &AltForm, vol: &AltForm) -> Result<Matrix6<f64>> {
    check_three_form(psi, 6)?;
    let c = volume_scale(vol, 6)?;
    let mut k = Matrix6::zeros();
    for j in 0..6 {
        let x = TangentVector::basis(6, j)?;
        let five = psi.interior(&x)?.wedge(psi)?;
        // ι(u)(c e^{012345}) = c Σ_s (−1)^s u_s e^{…ŝ…}
        for s in 0..6 {
            let rest: alloc::vec::Vec<usize> = (0..6).filter(|&r| r != s).collect();
            let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
            k[(s, j)] = sign * five.coeff(&rest) / c;
        }
    }
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orbit6 {
    Definite,
    OtherOpenOrbit,
    Degenerate,
}

/// Orbit verdict with the normalised quartic invariant (`λ(ψ₀) = −1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitVerdict6 {
    pub verdict: Orbit6,
    pub lambda: f64,
}

pub fn hitchin_lambda(psi: &AltForm, vol: &AltForm) -> Result<OrbitVerdict6> {
    let k = contraction_endomorphism(psi, vol)?;
    let c = volume_scale(vol, 6)?;
    let lambda = -(k * k).trace() / TRACE_K2_PSI0;
    let n = psi.norm_inf();
    let band = LAMBDA_EPS * n * n * n * n / (c * c);
    let verdict = if lambda.abs() <= band {
        Orbit6::Degenerate
    } else if lambda < 0.0 {
        Orbit6::Definite
    } else {
        Orbit6::OtherOpenOrbit
    };
    Ok(OrbitVerdict6 { verdict, lambda })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefinitenessMode {
    /// Sign of the quartic invariant.
    Exact,
    /// Rank-4 contraction test over `samples` seeded random directions.
    Sampled { samples: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Definiteness {
    pub definite: bool,
    /// A nonzero direction whose contraction does not have rank 4.
    pub witness: Option<TangentVector>,
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
}

pub fn is_definite6(psi: &AltForm, mode: DefinitenessMode) -> Result<Definiteness> {
    check_three_form(psi, 6)?;
    match mode {
        DefinitenessMode::Exact => {
            let v = hitchin_lambda(psi, &standard_volume(6)?)?;
            Ok(Definiteness {
                definite: v.verdict == Orbit6::Definite,
                witness: None,
                lambda: Some(v.lambda),
                seed: None,
            })
        }
        DefinitenessMode::Sampled { samples, seed } => {
            let witness = sampled_rank_witness(psi, samples, seed)?;
            Ok(Definiteness {
                definite: witness.is_none(),
                witness,
                lambda: None,
                seed: Some(seed),
            })
        }
    }
}

fn unit_direction(rng: &mut ChaCha8Rng) -> [f64; 6] {
    loop {
        let mut v = [0.0; 6];
        for x in v.iter_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if (0.01..=1.0).contains(&n2) {
            let n = sqrt(n2);
            return v.map(|x| x / n);
        }
    }
}

fn contraction_rank(psi: &AltForm, v: &[f64]) -> Result<(usize, AltForm)> {
    let beta = psi.interior(&TangentVector::new(v)?)?;
    Ok((beta.two_form_rank()?, beta))
}

/// Searches for a direction `v ≠ 0` with `rank ι(v)ψ ≠ 4`.
///
/// Each random direction `v` is tested, then the 2-plane `ker ι(v)ψ ∋ v` is
/// searched for a root of the quadratic map `w ↦ (ι(w)ψ)²`. Off the definite
/// orbit that plane always meets the rank-deficient locus, while a random
/// direction alone almost never lands on it.
fn sampled_rank_witness(psi: &AltForm, samples: usize, seed: u64) -> Result<Option<TangentVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if psi.is_zero() {
        let v = unit_direction(&mut rng);
        return Ok(Some(TangentVector::new(&v)?));
    }
    for _ in 0..samples {
        let v = unit_direction(&mut rng);
        let (rank, beta) = contraction_rank(psi, &v)?;
        if rank != 4 {
            return Ok(Some(TangentVector::new(&v)?));
        }
        let m = beta.to_matrix()?;
        let svd = SVD::new(m, false, true);
        let vt = svd.v_t.expect("requested");
        let mut order = [0usize, 1, 2, 3, 4, 5];
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
        let k1: alloc::vec::Vec<f64> = vt.row(order[0]).iter().copied().collect();
        let k2: alloc::vec::Vec<f64> = vt.row(order[1]).iter().copied().collect();
        for w in kernel_plane_roots(psi, &k1, &k2)? {
            let (rank, _) = contraction_rank(psi, &w)?;
            if rank != 4 {
                return Ok(Some(TangentVector::new(&w)?));
            }
        }
    }
    Ok(None)
}

/// Candidate roots `w = x·k1 + y·k2` of `(ι(w)ψ)² = 0`, taken from the
/// coefficient of the 4-form with the largest quadratic.
fn kernel_plane_roots(psi: &AltForm, k1: &[f64], k2: &[f64]) -> Result<alloc::vec::Vec<[f64; 6]>> {
    let b1 = psi.interior(&TangentVector::new(k1)?)?;
    let b2 = psi.interior(&TangentVector::new(k2)?)?;
    let q11 = b1.wedge(&b1)?;
    let q12 = b1.wedge(&b2)?;
    let q22 = b2.wedge(&b2)?;
    let mut best = 0;
    let mut best_size = -1.0;
    for i in 0..q11.len() {
        let size = q11.coeffs()[i].abs() + q12.coeffs()[i].abs() + q22.coeffs()[i].abs();
        if size > best_size {
            best = i;
            best_size = size;
        }
    }
    let (a, b, d) = (q11.coeffs()[best], q12.coeffs()[best], q22.coeffs()[best]);
    let scale = best_size.max(f64::MIN_POSITIVE);
    let disc = b * b - a * d;
    let mut pairs: alloc::vec::Vec<(f64, f64)> = alloc::vec::Vec::new();
    if disc < -1e-12 * scale * scale {
        return Ok(alloc::vec::Vec::new());
    }
    let root = sqrt(disc.max(0.0));
    // a x² + 2b x y + d y² = 0
    if a.abs() <= 1e-14 * scale {
        pairs.push((1.0, 0.0));
        if b.abs() > 1e-14 * scale {
            pairs.push((-d, 2.0 * b));
        }
    } else {
        let q = -(b + if b >= 0.0 { root } else { -root });
        pairs.push((q, a));
        if q != 0.0 {
            pairs.push((d, q));
        } else {
            pairs.push((-b, a));
        }
    }
    Ok(pairs
        .into_iter()
        .map(|(x, y)| {
            let mut w = [0.0; 6];
            for i in 0..6 {
                w[i] = x * k1[i] + y * k2[i];
            }
            let n = sqrt(w.iter().map(|c| c * c).sum());
            w.map(|c| c / n)
        })
        .collect())
}

/// The almost complex structure of a definite ψ as a matrix on tangent
/// vectors (column `j` is `J ∂_j`). On ψ₀, `J ∂v_j = ∂w_j`.
pub fn almost_complex(psi: &AltForm, vol: &AltForm) -> Result<Matrix6<f64>> {
    let verdict = hitchin_lambda(psi, vol)?;
    if verdict.verdict != Orbit6::Definite {
        return Err(Error::NotDefinite);
    }
    let k = contraction_endomorphism(psi, vol)?;
    let scale = sqrt(-(k * k).trace() / 6.0);
    Ok(-k / scale)
}

/// `b_ij` with `ι(eᵢ)φ∧ι(eⱼ)φ∧φ = b_ij · vol`.
pub fn g2_bilinear(phi: &AltForm, vol: &AltForm) -> Result<Matrix7> {
    check_three_form(phi, 7)?;
    let c = volume_scale(vol, 7)?;
    let mut contractions = [AltForm::zero(7, 2)?; 7];
    for (i, slot) in contractions.iter_mut().enumerate() {
        *slot = phi.interior(&TangentVector::basis(7, i)?)?;
    }
    let mut b = Matrix7::zeros();
    for i in 0..7 {
        let left = contractions[i].wedge(phi)?;
        for j in i..7 {
            let top = contractions[j].wedge(&left)?;
            let value = top.coeffs()[0] / c;
            b[(i, j)] = value;
            b[(j, i)] = value;
        }
    }
    Ok(b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct G2MetricData {
    /// The bilinear form relative to the oriented reference volume.
    pub bilinear: Matrix7,
    pub metric: Matrix7,
    /// `√det g`, relative to the oriented reference volume.
    pub volume: f64,
    /// `+1` if φ induces the orientation of the supplied reference volume,
    /// `−1` if the reference had to be reversed.
    pub orientation: i8,
}

impl G2MetricData {
    pub fn is_positively_oriented(&self) -> bool {
        self.orientation > 0
    }
}

pub fn g2_metric_volume(phi: &AltForm, vol: &AltForm) -> Result<G2MetricData> {
    let raw = g2_bilinear(phi, vol)?;
    let eig = SymmetricEigen::new(raw).eigenvalues;
    let size = eig.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    let floor = SPD_EPS * size;
    if size == 0.0 {
        return Err(Error::NotDefinite);
    }
    let (bilinear, orientation) = if eig.iter().all(|&x| x > floor) {
        (raw, 1)
    } else if eig.iter().all(|&x| x < -floor) {
        (-raw, -1)
    } else {
        return Err(Error::NotDefinite);
    };
    let det = bilinear.determinant();
    let metric = bilinear * (powf(6.0, -2.0 / 9.0) * powf(det, -1.0 / 9.0));
    let volume = sqrt(metric.determinant());
    Ok(G2MetricData {
        bilinear,
        metric,
        volume,
        orientation,
    })
}

/// Converts a 6×6 or 7×7 nalgebra matrix to the dynamic form used by
/// [`AltForm::pullback`].
pub fn to_dynamic<const N: usize>(m: &SMatrix<f64, N, N>) -> DMatrix<f64> {
    DMatrix::from_fn(N, N, |i, j| m[(i, j)])
}
