//! Horizontal lifts of metric paths to frame paths, gauge recovery, and the
//! pipeline that turns a gated flow into a split (one-one) witness family.

use alloc::vec::Vec;

use nalgebra::Matrix3;

use crate::exterior::AltForm;
use crate::flow::{evolution_residuals, phi_from_triple, FlowTrace};
use crate::homogeneous::{levi_civita, metric_of_frame, SolderFrame};
use crate::invariant_forms::{assemble_omega, assemble_psi, one_one_defect, InvariantTriple, ROUND_TRIP_EPS};
use crate::linalg::{max_abs3, polar_rotation, sym};
use crate::reduced::{project, project_trace, theorem1_report, ReducedOptions, ReducedPath};
use crate::stable_forms::{g2_metric_volume, standard_volume};
use crate::{Error, Result};

/// Tolerance on `RᵀR = Id` and `det R = 1` for a [`GaugeRotation`].
pub const ROTATION_EPS: f64 = 1e-10;

/// A constant gauge rotation, acting on triples by `(f, A, E) ↦ (f, τᵀA, τᵀE)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeRotation(Matrix3<f64>);

impl GaugeRotation {
    pub fn new(r: Matrix3<f64>) -> Option<Self> {
        let defect = max_abs3(&(r.transpose() * r - Matrix3::identity()));
        if defect <= ROTATION_EPS && (r.determinant() - 1.0).abs() <= ROTATION_EPS {
            Some(GaugeRotation(r))
        } else {
            None
        }
    }

    pub fn identity() -> Self {
        GaugeRotation(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `‖τ − Id‖∞`.
    pub fn distance_from_identity(&self) -> f64 {
        max_abs3(&(self.0 - Matrix3::identity()))
    }

    pub fn apply(&self, t: &InvariantTriple) -> Result<InvariantTriple> {
        t.gauge_pullback(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeFit {
    pub rotation: GaugeRotation,
    /// `‖τᵀτ − Id‖∞` before projection.
    pub defect: f64,
    /// `det τ` before projection.
    pub det: f64,
}

/// The symmetric `S` with `d(ẼᵀẼ)/dt = Γ̇` for `Ẽ' = SẼ`.
pub fn horizontal_velocity(e: &Matrix3<f64>, gamma_dot: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    SolderFrame::new(*e)?;
    let inv = e.try_inverse().ok_or(Error::SingularFrame)?;
    Ok(sym(&(inv.transpose() * sym(gamma_dot) * inv * 0.5)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSample {
    pub t: f64,
    pub psi: AltForm,
    pub omega: AltForm,
    pub one_one_defect: f64,
    pub r_closed: f64,
    pub r_evolution: f64,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftResult {
    pub times: Vec<f64>,
    pub frames: Vec<Matrix3<f64>>,
    pub velocities: Vec<Matrix3<f64>>,
    pub f: Vec<f64>,
    /// `‖ẼᵀẼ − Γ‖∞` per sample.
    pub tracking: Vec<f64>,
    pub gauge: Option<GaugeFit>,
    pub witness: Vec<WitnessSample>,
    /// `‖π(τ*ψ_target) − π(ψ_end)‖∞`; NaN until a gauge is recovered.
    pub coherence: f64,
}

impl LiftResult {
    pub fn tau(&self) -> Option<&GaugeRotation> {
        self.gauge.as_ref().map(|g| &g.rotation)
    }

    pub fn max_tracking(&self) -> f64 {
        self.tracking.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_symmetry_defect(&self) -> f64 {
        self.velocities
            .iter()
            .map(|s| max_abs3(&(s - s.transpose())))
            .fold(0.0, f64::max)
    }
}

fn hermite_slope(g0: &Matrix3<f64>, g1: &Matrix3<f64>, m0: &Matrix3<f64>, m1: &Matrix3<f64>, h: f64, s: f64) -> Matrix3<f64> {
    (g1 - g0) * ((6.0 * s - 6.0 * s * s) / h) + m0 * (3.0 * s * s - 4.0 * s + 1.0) + m1 * (3.0 * s * s - 2.0 * s)
}

/// Integrates `Ẽ' = S(Ẽ, Γ̇)Ẽ` from `e_init` along `path`, with `substeps`
/// RK4 steps per sample interval and `Γ` interpolated by cubic Hermite
/// segments through the samples and their slopes.
pub fn horizontal_lift(path: &ReducedPath, e_init: &SolderFrame, substeps: usize) -> Result<LiftResult> {
    let n = path.len();
    if n < 3 {
        return Err(Error::TooFewRecords { needed: 3, found: n });
    }
    if substeps == 0 {
        return Err(Error::InvalidInterval("substeps must be positive"));
    }
    let gamma0 = path.points()[0].gamma;
    let mismatch = max_abs3(&(e_init.metric() - gamma0));
    if mismatch > 1e-10 * max_abs3(&gamma0).max(1.0) {
        return Err(Error::FrameMetricMismatch(mismatch));
    }
    let slopes: Vec<Matrix3<f64>> = (0..n).map(|i| path.gamma_dot(i)).collect::<Result<_>>()?;
    let times = path.times();
    let mut frames = Vec::with_capacity(n);
    let mut e = *e_init.matrix();
    frames.push(e);
    for i in 0..n - 1 {
        let (g0, g1) = (path.points()[i].gamma, path.points()[i + 1].gamma);
        let (m0, m1) = (slopes[i], slopes[i + 1]);
        let big_h = times[i + 1] - times[i];
        let h = big_h / substeps as f64;
        let rhs = |s: f64, e: &Matrix3<f64>| -> Result<Matrix3<f64>> {
            let gd = hermite_slope(&g0, &g1, &m0, &m1, big_h, s);
            Ok(horizontal_velocity(e, &gd)? * e)
        };
        for k in 0..substeps {
            let s0 = k as f64 / substeps as f64;
            let ds = 1.0 / substeps as f64;
            let k1 = rhs(s0, &e)?;
            let k2 = rhs(s0 + 0.5 * ds, &(e + k1 * (0.5 * h)))?;
            let k3 = rhs(s0 + 0.5 * ds, &(e + k2 * (0.5 * h)))?;
            let k4 = rhs(s0 + ds, &(e + k3 * h))?;
            e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        SolderFrame::new(e)?;
        frames.push(e);
    }
    let velocities = frames
        .iter()
        .zip(&slopes)
        .map(|(e, gd)| horizontal_velocity(e, gd))
        .collect::<Result<Vec<_>>>()?;
    let tracking = frames
        .iter()
        .zip(path.points())
        .map(|(e, p)| max_abs3(&(metric_of_frame(e) - p.gamma)))
        .collect();
    Ok(LiftResult {
        times: times.to_vec(),
        frames,
        velocities,
        f: path.points().iter().map(|p| p.f).collect(),
        tracking,
        gauge: None,
        witness: Vec::new(),
        coherence: f64::NAN,
    })
}

/// The rotation `τ = E_target·Ẽ_end⁻¹`, projected onto SO(3), so that
/// `τᵀE_target = Ẽ_end` whenever the two frames induce the same metric.
pub fn recover_gauge(e_end: &SolderFrame, e_target: &SolderFrame, tol: f64) -> Result<GaugeFit> {
    let inv = e_end.matrix().try_inverse().ok_or(Error::SingularFrame)?;
    let raw = e_target.matrix() * inv;
    let defect = max_abs3(&(raw.transpose() * raw - Matrix3::identity()));
    if !(defect <= tol) {
        return Err(Error::MetricMismatch(defect));
    }
    let det = raw.determinant();
    if det < 0.0 {
        return Err(Error::OrientationFlip(det));
    }
    let rotation = GaugeRotation::new(polar_rotation(&raw)).ok_or(Error::MetricMismatch(defect))?;
    Ok(GaugeFit { rotation, defect, det })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineOptions {
    pub substeps: usize,
    pub tracking_tol: f64,
    pub gauge_tol: f64,
    pub one_one_tol: f64,
    pub closed_tol: f64,
    pub evolution_tol: f64,
    pub reduced: ReducedOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            substeps: 4,
            tracking_tol: 1e-8,
            gauge_tol: 1e-8,
            one_one_tol: ROUND_TRIP_EPS,
            closed_tol: 1e-10,
            evolution_tol: 1e-4,
            reduced: ReducedOptions::default(),
        }
    }
}

fn require(check: &'static str, values: impl Iterator<Item = f64>, ok: impl Fn(f64) -> bool) -> Result<()> {
    for (index, value) in values.enumerate() {
        if !ok(value) {
            return Err(Error::WitnessFailure { check, index, value });
        }
    }
    Ok(())
}

/// Projects a gated flow, lifts it horizontally from its initial frame,
/// recovers the gauge against its final frame and certifies the lifted
/// family `(ψ_t, ω_t)` sample by sample.
pub fn theorem3_pipeline(trace: &FlowTrace, opts: &PipelineOptions) -> Result<LiftResult> {
    let alg = trace.algebra();
    let reduced = theorem1_report(trace, &opts.reduced)?;
    if let Some((index, check, value)) = reduced.witness {
        return Err(Error::WitnessFailure { check, index, value });
    }
    let path = project_trace(trace)?;
    let e0 = SolderFrame::new(trace.first().e)?;
    let mut lift = horizontal_lift(&path, &e0, opts.substeps)?;
    require("metric-tracking", lift.tracking.iter().copied(), |v| v <= opts.tracking_tol)?;

    let e_end = SolderFrame::new(lift.frames[lift.frames.len() - 1])?;
    let target = trace.last().triple()?;
    let fit = recover_gauge(&e_end, &target.e, opts.gauge_tol)?;

    let vol = standard_volume(7)?;
    let mut psi = Vec::with_capacity(path.len());
    let mut d_omega = Vec::with_capacity(path.len());
    let mut samples = Vec::with_capacity(path.len());
    for i in 0..path.len() {
        let e = SolderFrame::new(lift.frames[i])?;
        let triple = InvariantTriple {
            f: lift.f[i],
            a: levi_civita(&e, alg)?,
            e,
        };
        let s = lift.velocities[i];
        let p = assemble_psi(&triple);
        let w = assemble_omega(&s, &triple);
        let data = g2_metric_volume(&phi_from_triple(&triple, &s), &vol)?;
        samples.push(WitnessSample {
            t: lift.times[i],
            psi: p,
            omega: w,
            one_one_defect: one_one_defect(&w, &p)?,
            r_closed: alg.d(&p).norm_inf(),
            r_evolution: f64::NAN,
            volume: if data.is_positively_oriented() { data.volume } else { -data.volume },
        });
        psi.push(p);
        d_omega.push(alg.d(&w));
    }
    let ev = evolution_residuals(&lift.times, &psi, &d_omega)?;
    for (s, r) in samples.iter_mut().zip(ev) {
        s.r_evolution = r;
    }
    require("one-one", samples.iter().map(|s| s.one_one_defect), |v| v <= opts.one_one_tol)?;
    require("closed", samples.iter().map(|s| s.r_closed), |v| v <= opts.closed_tol)?;
    require("evolution", samples.iter().map(|s| s.r_evolution), |v| v <= opts.evolution_tol)?;
    require("positive-volume", samples.iter().map(|s| s.volume), |v| v > 0.0)?;

    let pulled = fit.rotation.apply(&target)?;
    let end_triple = InvariantTriple {
        f: lift.f[lift.f.len() - 1],
        a: Matrix3::zeros(),
        e: e_end,
    };
    let (p1, p2) = (project(&pulled), project(&end_triple));
    lift.coherence = max_abs3(&(p1.gamma - p2.gamma)).max((p1.f - p2.f).abs());
    require("gauge-coherence", core::iter::once(lift.coherence), |v| v <= opts.tracking_tol)?;
    lift.gauge = Some(fit);
    lift.witness = samples;
    Ok(lift)
}
