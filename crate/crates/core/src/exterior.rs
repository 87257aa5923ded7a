//! Dense exterior algebra over a fixed coframe of dimension 6 or 7.
//!
//! Slots are global and ordered: `σ¹ σ² σ³ μ¹ μ² μ³` in dimension 6, with `dt`
//! appended in dimension 7. A degree-`k` form stores one coefficient per
//! `k`-subset of slots, subsets taken in lexicographic order. Every size is
//! tiny (at most `C(7,3) = 35` coefficients), so forms are plain `Copy` values.
//!
//! The normal-form labelling `(v¹,w¹,v²,w²,v³,w³[,v⁰])` lands on the same
//! slots through [`slots::v`], [`slots::w`] and [`slots::V0`]: `wⁱ ↦ σⁱ`,
//! `vⁱ ↦ μⁱ`, `v⁰ ↦ dt`.

use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Largest coefficient count over all supported `(dim, degree)` pairs.
pub const MAX_TERMS: usize = 35;

/// Relative tolerance used by [`AltForm::two_form_rank`].
pub const RANK_EPS: f64 = 1e-12;

/// Slot indices of the global coframe.
pub mod slots {
    /// `σ¹, σ², σ³`: the base directions.
    pub const SIGMA: [usize; 3] = [0, 1, 2];
    /// `μ¹, μ², μ³`: the fiber directions.
    pub const MU: [usize; 3] = [3, 4, 5];
    /// `dt`, present in dimension 7 only.
    pub const DT: usize = 6;
    /// `v⁰` of the seven-dimensional normal form.
    pub const V0: usize = DT;

    /// Slot of `vⁱ` (1-based, as in the normal forms).
    pub const fn v(i: usize) -> usize {
        MU[i - 1]
    }

    /// Slot of `wⁱ` (1-based).
    pub const fn w(i: usize) -> usize {
        SIGMA[i - 1]
    }

    pub(crate) const LABELS: [&str; 7] = ["s1", "s2", "s3", "m1", "m2", "m3", "dt"];
}

/// The coframe a form lives on, identified by its dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coframe {
    dim: usize,
}

impl Coframe {
    pub const SLICE: Coframe = Coframe { dim: 6 };
    pub const TOTAL: Coframe = Coframe { dim: 7 };

    pub fn new(dim: usize) -> Result<Self> {
        match dim {
            6 | 7 => Ok(Coframe { dim }),
            _ => Err(Error::UnsupportedDimension(dim)),
        }
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    /// ASCII label of a slot (`s1`..`s3`, `m1`..`m3`, `dt`).
    pub fn label(self, slot: usize) -> &'static str {
        slots::LABELS[slot]
    }
}

pub(crate) const fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1;
    let mut i = 0;
    while i < k {
        r = r * (n - i) / (i + 1);
        i += 1;
    }
    r
}

/// Lexicographic rank of a `k`-subset of `0..n` given as a bitmask.
fn rank_of(n: usize, mask: u8) -> usize {
    let k = mask.count_ones() as usize;
    let mut rank = 0;
    let mut prev: usize = 0;
    let mut placed = 0;
    for c in 0..n {
        if mask & (1 << c) == 0 {
            continue;
        }
        placed += 1;
        for j in prev..c {
            rank += binomial(n - 1 - j, k - placed);
        }
        prev = c + 1;
    }
    rank
}

/// Bitmask of the subset with lexicographic rank `rank`.
fn mask_of(n: usize, k: usize, mut rank: usize) -> u8 {
    let mut mask = 0u8;
    let mut start = 0;
    for placed in 1..=k {
        let mut c = start;
        loop {
            let block = binomial(n - 1 - c, k - placed);
            if rank < block {
                break;
            }
            rank -= block;
            c += 1;
        }
        mask |= 1 << c;
        start = c + 1;
    }
    mask
}

/// Sign of the shuffle that sorts the concatenation of `a` then `b`.
fn merge_sign(a: u8, b: u8) -> f64 {
    let mut swaps = 0;
    let mut bits = a;
    while bits != 0 {
        let i = bits.trailing_zeros();
        // elements of b strictly below i must jump over i
        swaps += (b & ((1u8 << i) - 1)).count_ones();
        bits &= bits - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A tangent vector, with components dual to the coframe slots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    dim: usize,
    comps: [f64; 7],
}

impl TangentVector {
    pub fn new(components: &[f64]) -> Result<Self> {
        let dim = Coframe::new(components.len())?.dim();
        let mut comps = [0.0; 7];
        comps[..dim].copy_from_slice(components);
        Ok(TangentVector { dim, comps })
    }

    /// The coordinate vector `∂` dual to `slot`.
    pub fn basis(dim: usize, slot: usize) -> Result<Self> {
        Coframe::new(dim)?;
        if slot >= dim {
            return Err(Error::SlotOutOfRange { slot, dim });
        }
        let mut comps = [0.0; 7];
        comps[slot] = 1.0;
        Ok(TangentVector { dim, comps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.comps[..self.dim]
    }
}

/// A constant-coefficient alternating form on the 6- or 7-dimensional coframe.
#[derive(Clone, Copy, PartialEq)]
pub struct AltForm {
    dim: usize,
    degree: usize,
    coeffs: [f64; MAX_TERMS],
}

impl AltForm {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        Coframe::new(dim)?;
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, dim });
        }
        Ok(AltForm {
            dim,
            degree,
            coeffs: [0.0; MAX_TERMS],
        })
    }

    pub fn from_coeffs(dim: usize, degree: usize, coeffs: &[f64]) -> Result<Self> {
        let mut form = Self::zero(dim, degree)?;
        let len = binomial(dim, degree);
        if coeffs.len() != len {
            return Err(Error::CoefficientCount {
                expected: len,
                found: coeffs.len(),
            });
        }
        form.coeffs[..len].copy_from_slice(coeffs);
        Ok(form)
    }

    pub fn scalar(dim: usize, value: f64) -> Result<Self> {
        let mut form = Self::zero(dim, 0)?;
        form.coeffs[0] = value;
        Ok(form)
    }

    /// The 1-form `Σ cᵢ eⁱ`.
    pub fn one_form(components: &[f64]) -> Result<Self> {
        Self::from_coeffs(components.len(), 1, components)
    }

    /// The wedge of basis covectors in the given slot order, e.g. `[3, 0]` is
    /// `μ¹∧σ¹ = −σ¹∧μ¹`. Repeated slots give zero.
    pub fn basis(dim: usize, slot_list: &[usize]) -> Result<Self> {
        let mut form = Self::zero(dim, slot_list.len())?;
        if let Some((mask, sign)) = sorted_mask(slot_list, dim)? {
            form.coeffs[rank_of(dim, mask)] = sign;
        }
        Ok(form)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        binomial(self.dim, self.degree)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.len()]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        let len = self.len();
        &mut self.coeffs[..len]
    }

    /// Coefficient of the basis element `e^{slots}`; unsorted slot lists pick
    /// up the permutation sign.
    pub fn coeff(&self, slot_list: &[usize]) -> f64 {
        if slot_list.len() != self.degree {
            return 0.0;
        }
        match sorted_mask(slot_list, self.dim) {
            Ok(Some((mask, sign))) => sign * self.coeffs[rank_of(self.dim, mask)],
            _ => 0.0,
        }
    }

    pub fn set_coeff(&mut self, slot_list: &[usize], value: f64) -> Result<()> {
        if slot_list.len() != self.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                found: slot_list.len(),
            });
        }
        if let Some((mask, sign)) = sorted_mask(slot_list, self.dim)? {
            self.coeffs[rank_of(self.dim, mask)] = sign * value;
        }
        Ok(())
    }

    /// Nonzero terms as `(slot bitmask, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        let (n, k) = (self.dim, self.degree);
        self.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(move |(i, c)| (mask_of(n, k, i), *c))
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, c| f64::max(m, c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|c| *c == 0.0)
    }

    fn check_same_dim(&self, other: &AltForm) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &AltForm) -> Result<AltForm> {
        self.check_same_dim(other)?;
        let degree = self.degree + other.degree;
        let mut out = AltForm::zero(self.dim, degree)?;
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                if ma & mb != 0 {
                    continue;
                }
                out.coeffs[rank_of(self.dim, ma | mb)] += merge_sign(ma, mb) * ca * cb;
            }
        }
        Ok(out)
    }

    /// `ι(X)α`.
    pub fn interior(&self, x: &TangentVector) -> Result<AltForm> {
        if x.dim != self.dim {
            return Err(Error::DimensionMismatch {
                left: x.dim,
                right: self.dim,
            });
        }
        if self.degree == 0 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut out = AltForm::zero(self.dim, self.degree - 1)?;
        for (mask, c) in self.terms() {
            let mut bits = mask;
            let mut position = 0;
            while bits != 0 {
                let slot = bits.trailing_zeros() as usize;
                let xs = x.comps[slot];
                if xs != 0.0 {
                    let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
                    out.coeffs[rank_of(self.dim, mask & !(1 << slot))] += sign * xs * c;
                }
                bits &= bits - 1;
                position += 1;
            }
        }
        Ok(out)
    }

    /// Rank of a 2-form: `2r` for the largest `r` with `βʳ ≠ 0`.
    pub fn two_form_rank(&self) -> Result<usize> {
        if self.degree != 2 {
            return Err(Error::DegreeMismatch {
                expected: 2,
                found: self.degree,
            });
        }
        let scale = self.norm_inf();
        if scale == 0.0 {
            return Ok(0);
        }
        let unit = *self * (1.0 / scale);
        let mut power = unit;
        let mut rank = 2;
        while 2 * (rank / 2 + 1) <= self.dim {
            power = power.wedge(&unit)?;
            if power.norm_inf() <= RANK_EPS {
                break;
            }
            rank += 2;
        }
        Ok(rank)
    }

    /// Pullback along the linear map `g` acting on tangent vectors:
    /// `(g*α)(v₁,…,v_k) = α(g v₁,…,g v_k)`, so `eⁱ ↦ Σⱼ g_ij eʲ`.
    pub fn pullback(&self, g: &DMatrix<f64>) -> Result<AltForm> {
        let n = self.dim;
        if g.nrows() != n || g.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: g.nrows(),
            });
        }
        let mut images = [AltForm::zero(n, 1)?; 7];
        for (i, image) in images.iter_mut().enumerate().take(n) {
            for j in 0..n {
                image.coeffs[j] = g[(i, j)];
            }
        }
        let mut out = AltForm::zero(n, self.degree)?;
        for (mask, c) in self.terms() {
            let mut term = AltForm::scalar(n, c)?;
            let mut bits = mask;
            while bits != 0 {
                let slot = bits.trailing_zeros() as usize;
                term = term.wedge(&images[slot])?;
                bits &= bits - 1;
            }
            out += term;
        }
        Ok(out)
    }

    /// Restriction to the coordinate hyperplane `{x_slot = 0}`, re-indexed onto
    /// the remaining slots in order.
    pub fn restrict_dropping(&self, slot: usize) -> Result<AltForm> {
        if slot >= self.dim {
            return Err(Error::SlotOutOfRange {
                slot,
                dim: self.dim,
            });
        }
        let mut out = AltForm::zero(self.dim - 1, self.degree)?;
        for (mask, c) in self.terms() {
            if mask & (1 << slot) != 0 {
                continue;
            }
            let low = mask & ((1u8 << slot) - 1);
            let high = (mask >> (slot + 1)) << slot;
            out.coeffs[rank_of(out.dim, low | high)] = c;
        }
        Ok(out)
    }

    /// Pullback along the projection that forgets `slot`: the inverse
    /// re-indexing of [`AltForm::restrict_dropping`].
    pub fn extend_inserting(&self, slot: usize) -> Result<AltForm> {
        if slot > self.dim {
            return Err(Error::SlotOutOfRange {
                slot,
                dim: self.dim + 1,
            });
        }
        let mut out = AltForm::zero(self.dim + 1, self.degree)?;
        for (mask, c) in self.terms() {
            let low = mask & ((1u8 << slot) - 1);
            let high = (mask >> slot) << (slot + 1);
            out.coeffs[rank_of(out.dim, low | high)] = c;
        }
        Ok(out)
    }

    /// Antisymmetric matrix `β_ij` with `β = Σ_{i<j} β_ij eⁱ∧eʲ`.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::DegreeMismatch {
                expected: 2,
                found: self.degree,
            });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (mask, c) in self.terms() {
            let i = mask.trailing_zeros() as usize;
            let j = (mask & (mask - 1)).trailing_zeros() as usize;
            m[(i, j)] = c;
            m[(j, i)] = -c;
        }
        Ok(m)
    }
}

/// Sorts a slot list into a bitmask; `None` if a slot repeats.
fn sorted_mask(slot_list: &[usize], dim: usize) -> Result<Option<(u8, f64)>> {
    let mut mask = 0u8;
    let mut sign = 1.0;
    for &s in slot_list {
        if s >= dim {
            return Err(Error::SlotOutOfRange { slot: s, dim });
        }
        if mask & (1 << s) != 0 {
            return Ok(None);
        }
        // moving s past the already-placed larger slots
        if (mask >> s).count_ones() % 2 == 1 {
            sign = -sign;
        }
        mask |= 1 << s;
    }
    Ok(Some((mask, sign)))
}

impl fmt::Debug for AltForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AltForm(dim={}, deg={}, {})", self.dim, self.degree, self)
    }
}

impl fmt::Display for AltForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (mask, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            let mut bits = mask;
            while bits != 0 {
                let slot = bits.trailing_zeros() as usize;
                write!(f, "{}{}", if bits == mask { "*" } else { "^" }, slots::LABELS[slot])?;
                bits &= bits - 1;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for AltForm {
    type Output = AltForm;

    /// Panics on a dimension or degree mismatch.
    fn add(mut self, rhs: AltForm) -> AltForm {
        self += rhs;
        self
    }
}

impl AddAssign for AltForm {
    fn add_assign(&mut self, rhs: AltForm) {
        assert!(
            self.dim == rhs.dim && self.degree == rhs.degree,
            "adding forms of different shape"
        );
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
    }
}

impl Sub for AltForm {
    type Output = AltForm;

    fn sub(self, rhs: AltForm) -> AltForm {
        self + (-rhs)
    }
}

impl Neg for AltForm {
    type Output = AltForm;

    fn neg(self) -> AltForm {
        self * -1.0
    }
}

impl Mul<f64> for AltForm {
    type Output = AltForm;

    fn mul(mut self, rhs: f64) -> AltForm {
        for c in self.coeffs.iter_mut() {
            *c *= rhs;
        }
        self
    }
}
