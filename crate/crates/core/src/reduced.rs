//! Projection of invariant triples to `(f, Γ)` with `Γ = EᵀE`, and the
//! reduced relation between such pairs.
//!
//! Along a reduced path the relation asks that `Γ̇` be positive definite and
//! that
//!
//! ```text
//! ḟ = −½ (G + f·Id)_ij (E⁻ᵀ Γ̇ E⁻¹)_ij
//! ```
//!
//! where `E` is any frame with `EᵀE = Γ` and `G` the Einstein tensor of `Γ`
//! in that frame. The contraction does not depend on the choice of `E`.
//! [`Reading::Literal`] contracts against `Γ` itself instead, which reduces
//! to `ḟ = −½(tr G + 3f)`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, Matrix3};

use crate::flow::FlowTrace;
use crate::homogeneous::{einstein_oracle, ModelAlgebra, SolderFrame};
use crate::invariant_forms::InvariantTriple;
use crate::linalg::{max_abs3, min_sym_eigenvalue, stencil, sym, three_point_weights};
use crate::stable_forms::SPD_EPS;
use crate::{Error, Result};

/// Default absolute tolerance on the `ḟ` identity.
pub const TOL_F: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedPoint {
    pub f: f64,
    pub gamma: Matrix3<f64>,
}

impl ReducedPoint {
    pub fn new(f: f64, gamma: Matrix3<f64>) -> Option<Self> {
        let asym = max_abs3(&(gamma - gamma.transpose()));
        if !(f > 0.0) || asym > 1e-12 * max_abs3(&gamma).max(1.0) {
            return None;
        }
        if !(min_sym_eigenvalue(&gamma) > SPD_EPS * max_abs3(&gamma)) {
            return None;
        }
        Some(ReducedPoint { f, gamma: sym(&gamma) })
    }

    /// A frame `E` with `EᵀE = Γ` (the transposed Cholesky factor).
    pub fn frame(&self) -> Result<SolderFrame> {
        let l = Cholesky::new(self.gamma).ok_or(Error::SingularFrame)?.unpack();
        SolderFrame::new(l.transpose())
    }
}

pub fn project(t: &InvariantTriple) -> ReducedPoint {
    ReducedPoint {
        f: t.f,
        gamma: sym(&t.e.metric()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedPath {
    times: Vec<f64>,
    points: Vec<ReducedPoint>,
    gamma_dot: Option<Vec<Matrix3<f64>>>,
}

impl ReducedPath {
    pub fn new(samples: Vec<(f64, f64, Matrix3<f64>)>) -> Result<Self> {
        let mut times = Vec::with_capacity(samples.len());
        let mut points = Vec::with_capacity(samples.len());
        for (i, (t, f, gamma)) in samples.into_iter().enumerate() {
            if i > 0 && !(t > times[i - 1]) {
                return Err(Error::NonIncreasingTime(i));
            }
            times.push(t);
            points.push(ReducedPoint::new(f, gamma).ok_or(Error::NonSpdSample(i))?);
        }
        Ok(ReducedPath {
            times,
            points,
            gamma_dot: None,
        })
    }

    /// Attaches exact `Γ̇` values, used by the lift in place of differences.
    pub fn with_gamma_dot(mut self, gamma_dot: Vec<Matrix3<f64>>) -> Result<Self> {
        if gamma_dot.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: gamma_dot.len(),
                right: self.len(),
            });
        }
        self.gamma_dot = Some(gamma_dot.iter().map(sym).collect());
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[ReducedPoint] {
        &self.points
    }

    pub fn has_exact_gamma_dot(&self) -> bool {
        self.gamma_dot.is_some()
    }

    fn weights(&self, i: usize) -> ([usize; 3], [f64; 3]) {
        let idx = stencil(self.len(), i);
        let nodes = [self.times[idx[0]], self.times[idx[1]], self.times[idx[2]]];
        (idx, three_point_weights(nodes, self.times[i]))
    }

    /// `(ḟ, Γ̇)` at sample `i` by three-point differences.
    pub fn derivative(&self, i: usize) -> Result<(f64, Matrix3<f64>)> {
        if self.len() < 3 {
            return Err(Error::TooFewRecords {
                needed: 3,
                found: self.len(),
            });
        }
        let (idx, w) = self.weights(i);
        let mut df = 0.0;
        let mut dg = Matrix3::zeros();
        for k in 0..3 {
            df += w[k] * self.points[idx[k]].f;
            dg += self.points[idx[k]].gamma * w[k];
        }
        Ok((df, sym(&dg)))
    }

    /// `Γ̇` at sample `i`, exact when attached and differenced otherwise.
    pub fn gamma_dot(&self, i: usize) -> Result<Matrix3<f64>> {
        match &self.gamma_dot {
            Some(g) => Ok(g[i]),
            None => Ok(self.derivative(i)?.1),
        }
    }

    /// Every second sample, keeping the last.
    pub fn subsample(&self) -> Self {
        let n = self.len();
        let keep: Vec<usize> = (0..n).filter(|i| i % 2 == 0 || *i == n - 1).collect();
        ReducedPath {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            points: keep.iter().map(|&i| self.points[i]).collect(),
            gamma_dot: self
                .gamma_dot
                .as_ref()
                .map(|g| keep.iter().map(|&i| g[i]).collect()),
        }
    }

    pub fn max_step(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Projects every record of a flow, attaching `Γ̇ = Eᵀ(K + Kᵀ)E`.
pub fn project_trace(trace: &FlowTrace) -> Result<ReducedPath> {
    let samples = trace
        .records()
        .iter()
        .map(|r| (r.t, r.f, r.e.transpose() * r.e))
        .collect();
    let gamma_dot = trace
        .records()
        .iter()
        .map(|r| r.e.transpose() * (r.k + r.k.transpose()) * r.e)
        .collect();
    ReducedPath::new(samples)?.with_gamma_dot(gamma_dot)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reading {
    /// Contraction against `Γ̇`.
    #[default]
    GammaDot,
    /// Contraction against `Γ`, as literally printed.
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedOptions {
    pub reading: Reading,
    pub tol_f: f64,
    /// Coefficient `c` of the `c·h²` allowance added to `tol_f`.
    pub h2_allowance: f64,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions {
            reading: Reading::GammaDot,
            tol_f: TOL_F,
            h2_allowance: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedSample {
    pub t: f64,
    pub f_dot: f64,
    /// `−½(G + f)·(E⁻ᵀΓ̇E⁻¹)`.
    pub rhs: f64,
    /// `−½(tr G + 3f)`.
    pub rhs_literal: f64,
    pub residual: f64,
    pub residual_literal: f64,
    pub min_gamma_dot_eig: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedReport {
    pub verdict: bool,
    pub reading: Reading,
    pub tolerance: f64,
    pub samples: Vec<ReducedSample>,
    pub max_residual: f64,
    pub max_residual_literal: f64,
    /// `(sample, check, value)` of the first violated condition.
    pub witness: Option<(usize, &'static str, f64)>,
}

/// Checks the reduced relation along `path`.
pub fn check_reduced(path: &ReducedPath, alg: &ModelAlgebra, opts: &ReducedOptions) -> Result<ReducedReport> {
    let n = path.len();
    if n < 3 {
        return Err(Error::TooFewRecords { needed: 3, found: n });
    }
    let h = path.max_step();
    let tolerance = opts.tol_f + opts.h2_allowance * h * h;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let p = path.points()[i];
        let (f_dot, gamma_dot) = path.derivative(i)?;
        let e = p.frame()?;
        let g = einstein_oracle(&e, alg)?;
        let inv = e.matrix().try_inverse().ok_or(Error::SingularFrame)?;
        let velocity = inv.transpose() * gamma_dot * inv;
        let rhs = -0.5 * (g + Matrix3::identity() * p.f).component_mul(&velocity).sum();
        let rhs_literal = -0.5 * (g.trace() + 3.0 * p.f);
        let min_gamma_dot_eig = min_sym_eigenvalue(&gamma_dot);
        let s = ReducedSample {
            t: path.times()[i],
            f_dot,
            rhs,
            rhs_literal,
            residual: (f_dot - rhs).abs(),
            residual_literal: (f_dot - rhs_literal).abs(),
            min_gamma_dot_eig,
        };
        samples.push(s);
    }
    let positivity = (1..n - 1)
        .find(|&i| !(samples[i].min_gamma_dot_eig > 0.0))
        .map(|i| (i, "positive-metric-velocity", samples[i].min_gamma_dot_eig));
    let residual = |s: &ReducedSample| match opts.reading {
        Reading::GammaDot => s.residual,
        Reading::Literal => s.residual_literal,
    };
    let witness = positivity.or_else(|| {
        samples
            .iter()
            .position(|s| !(residual(s) <= tolerance))
            .map(|i| (i, "f-evolution", residual(&samples[i])))
    });
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let max_residual_literal = samples.iter().map(|s| s.residual_literal).fold(0.0, f64::max);
    Ok(ReducedReport {
        verdict: witness.is_none(),
        reading: opts.reading,
        tolerance,
        samples,
        max_residual,
        max_residual_literal,
        witness,
    })
}

/// Projects a flow and checks the reduced relation along it.
pub fn theorem1_report(trace: &FlowTrace, opts: &ReducedOptions) -> Result<ReducedReport> {
    check_reduced(&project_trace(trace)?, trace.algebra(), opts)
}

/// Largest `ḟ`-identity residual of the projected flow (the `Γ̇` reading).
pub fn theorem1_consistency(trace: &FlowTrace) -> Result<f64> {
    Ok(theorem1_report(trace, &ReducedOptions::default())?.max_residual)
}
