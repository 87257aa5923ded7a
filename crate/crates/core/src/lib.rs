//! Executable model of SO(3)-invariant G₂-cobordisms on homogeneous base
//! 3-manifolds.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! * [`exterior`]: constant-coefficient forms on the 6- and 7-dimensional coframes,
//! * [`stable_forms`]: definiteness of 3-forms, `J_ψ`, and the G₂ metric and volume,
//! * [`homogeneous`]: left-invariant base models, Levi-Civita connections,
//!   curvature and an independent Einstein-tensor oracle,
//! * [`invariant_forms`]: the `(f, A, E)` and `K` parametrisations of invariant
//!   forms on the slice `M × SO(3)`,
//! * [`flow`]: the cobordism evolution of `(E, f)` and its certificates,
//! * [`reduced`]: the projection to `(f, Γ)` and the reduced relation,
//! * [`lifting`]: horizontal lifts and gauge recovery.

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the tensor notation.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod exterior;
pub mod flow;
pub mod homogeneous;
pub mod invariant_forms;
pub mod lifting;
pub mod reduced;
pub mod stable_forms;

mod linalg;

pub use exterior::{AltForm, Coframe, TangentVector};
pub use flow::{FlowState, FlowTrace, KPolicy};
pub use homogeneous::ModelAlgebra;
pub use invariant_forms::InvariantTriple;
pub use lifting::{GaugeRotation, LiftResult};
pub use reduced::{ReducedPath, ReducedPoint};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unsupported coframe dimension {0} (expected 6 or 7)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degree {degree} exceeds dimension {dim}")]
    DegreeOverflow { degree: usize, dim: usize },
    #[error("expected a form of degree {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("expected {expected} coefficients, found {found}")]
    CoefficientCount { expected: usize, found: usize },
    #[error("slot {slot} out of range for dimension {dim}")]
    SlotOutOfRange { slot: usize, dim: usize },
    #[error("reference volume form is zero")]
    ZeroVolume,
    #[error("3-form is not definite")]
    NotDefinite,
    #[error("3-form is definite but induces the opposite orientation")]
    WrongOrientation,
    #[error("structure constants are not antisymmetric (defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("structure constants violate the Jacobi identity (defect {0:e})")]
    JacobiViolation(f64),
    #[error("unknown model preset `{0}`")]
    UnknownPreset(alloc::string::String),
    #[error("solder frame is singular or has non-positive determinant")]
    SingularFrame,
    #[error("curvature has vertical components of size {0:e}")]
    NonHorizontalCurvature(f64),
    #[error("3-form is not of the invariant (f, a, e) shape (residual {0:e})")]
    NotDecomposable(f64),
    #[error("3-form does not vanish along the fiber (coefficient {0:e})")]
    FiberNonVanishing(f64),
    #[error("2-form is not of the form K_ij a^i ^ e^j (residual {0:e})")]
    NotInPencil(f64),
    #[error("symmetric part of K has eigenvalue {eigenvalue:e} below the gate at t = {t}")]
    PolicyViolation { t: f64, eigenvalue: f64 },
    #[error("f became non-positive ({f:e}) during step {step} ending at t = {t}")]
    NonPositiveF { t: f64, step: usize, f: f64 },
    #[error("invalid integration request: {0}")]
    InvalidInterval(&'static str),
    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("sample times must be strictly increasing (index {0})")]
    NonIncreasingTime(usize),
    #[error("sample {0} is not a valid reduced point (f <= 0 or metric not SPD)")]
    NonSpdSample(usize),
    #[error("initial frame does not induce the initial metric (defect {0:e})")]
    FrameMetricMismatch(f64),
    #[error("frames induce different metrics (orthogonality defect {0:e})")]
    MetricMismatch(f64),
    #[error("gauge candidate has negative determinant ({0})")]
    OrientationFlip(f64),
    #[error("witness check `{check}` failed at sample {index} (value {value:e})")]
    WitnessFailure {
        check: &'static str,
        index: usize,
        value: f64,
    },
}
