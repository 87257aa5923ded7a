//! The cobordism evolution `Ė = KE`, `ḟ = −f tr K − tr(KG)` with `A` the
//! Levi-Civita connection of `E` and `G` its curvature, integrated with a
//! fixed-step classical Runge–Kutta scheme.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::Matrix3;

use crate::exterior::{slots, AltForm};
use crate::homogeneous::{curvature, levi_civita, ModelAlgebra, SolderFrame};
use crate::invariant_forms::{assemble_omega, assemble_psi, InvariantTriple, KMatrix};
use crate::linalg::{min_sym_eigenvalue, stencil, three_point_weights};
use crate::{Error, Result};

/// Default floor on the smallest eigenvalue of `sym K`.
pub const KAPPA_MIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub e: SolderFrame,
    pub f: f64,
}

impl FlowState {
    pub fn new(t: f64, e: Matrix3<f64>, f: f64) -> Result<Self> {
        let e = SolderFrame::new(e)?;
        if !(f > 0.0) {
            return Err(Error::NonPositiveF { t, step: 0, f });
        }
        Ok(FlowState { t, e, f })
    }

    pub fn triple(&self, alg: &ModelAlgebra) -> Result<InvariantTriple> {
        Ok(InvariantTriple {
            f: self.f,
            a: levi_civita(&self.e, alg)?,
            e: self.e,
        })
    }
}

pub type TimeFn = dyn Fn(f64) -> KMatrix + Send + Sync;
pub type StateFn = dyn Fn(f64, &Matrix3<f64>, f64) -> KMatrix + Send + Sync;

/// How `K` is chosen along the flow.
#[derive(Clone)]
pub enum KPolicy {
    Constant(KMatrix),
    /// `K(t) = Σ_p C_p t^p`.
    Polynomial(Vec<KMatrix>),
    TimeFunction(Arc<TimeFn>),
    StateFunction(Arc<StateFn>),
}

impl KPolicy {
    pub fn eval(&self, t: f64, e: &Matrix3<f64>, f: f64) -> KMatrix {
        match self {
            KPolicy::Constant(k) => *k,
            KPolicy::Polynomial(cs) => cs.iter().rev().fold(Matrix3::zeros(), |acc, c| acc * t + c),
            KPolicy::TimeFunction(g) => g(t),
            KPolicy::StateFunction(g) => g(t, e, f),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            KPolicy::Constant(k) => alloc::format!("constant {:?}", k.transpose().as_slice()),
            KPolicy::Polynomial(cs) => alloc::format!("polynomial of degree {}", cs.len().saturating_sub(1)),
            KPolicy::TimeFunction(_) => String::from("time function"),
            KPolicy::StateFunction(_) => String::from("state function"),
        }
    }
}

impl fmt::Debug for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// One accepted sample of a flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowRecord {
    pub t: f64,
    pub e: Matrix3<f64>,
    pub f: f64,
    pub k: KMatrix,
    pub a: Matrix3<f64>,
    pub g: Matrix3<f64>,
    pub r_closed: f64,
    pub r_evolution: f64,
}

impl FlowRecord {
    pub fn triple(&self) -> Result<InvariantTriple> {
        Ok(InvariantTriple {
            f: self.f,
            a: self.a,
            e: SolderFrame::new(self.e)?,
        })
    }

    pub fn psi(&self) -> Result<AltForm> {
        Ok(assemble_psi(&self.triple()?))
    }

    pub fn omega(&self) -> Result<AltForm> {
        Ok(assemble_omega(&self.k, &self.triple()?))
    }
}

#[derive(Clone, Debug)]
pub struct FlowTrace {
    records: Vec<FlowRecord>,
    alg: ModelAlgebra,
    step: f64,
    policy: String,
    seed: Option<u64>,
}

impl FlowTrace {
    /// Wraps hand-built records; times must increase strictly.
    pub fn from_records(alg: ModelAlgebra, records: Vec<FlowRecord>, policy: &str) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::TooFewRecords {
                needed: 2,
                found: records.len(),
            });
        }
        for (i, w) in records.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::NonIncreasingTime(i + 1));
            }
        }
        let step = (records[records.len() - 1].t - records[0].t) / (records.len() - 1) as f64;
        Ok(FlowTrace {
            records,
            alg,
            step,
            policy: String::from(policy),
            seed: None,
        })
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [FlowRecord] {
        &mut self.records
    }

    pub fn algebra(&self) -> &ModelAlgebra {
        &self.alg
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn policy(&self) -> &str {
        &self.policy
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn first(&self) -> &FlowRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &FlowRecord {
        &self.records[self.records.len() - 1]
    }
}

/// Right-hand side `(Ė, ḟ)` of the evolution.
pub fn flow_rhs(s: &FlowState, k: &KMatrix, alg: &ModelAlgebra) -> Result<(Matrix3<f64>, f64)> {
    let a = levi_civita(&s.e, alg)?;
    let g = curvature(&a, &s.e, alg)?;
    Ok((k * s.e.matrix(), -s.f * k.trace() - (k * g).trace()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub t2: f64,
    pub steps: usize,
    pub kappa_min: f64,
}

impl FlowConfig {
    pub fn new(t2: f64, steps: usize) -> Self {
        FlowConfig {
            t2,
            steps,
            kappa_min: KAPPA_MIN,
        }
    }
}

fn gated_k(policy: &KPolicy, t: f64, e: &Matrix3<f64>, f: f64, kappa_min: f64) -> Result<KMatrix> {
    let k = policy.eval(t, e, f);
    let eigenvalue = min_sym_eigenvalue(&k);
    if !(eigenvalue >= kappa_min) {
        return Err(Error::PolicyViolation { t, eigenvalue });
    }
    Ok(k)
}

fn stage(
    policy: &KPolicy,
    alg: &ModelAlgebra,
    t: f64,
    e: Matrix3<f64>,
    f: f64,
    kappa_min: f64,
) -> Result<(Matrix3<f64>, f64)> {
    let k = gated_k(policy, t, &e, f, kappa_min)?;
    let s = FlowState {
        t,
        e: SolderFrame::new(e)?,
        f,
    };
    flow_rhs(&s, &k, alg)
}

fn record(
    policy: &KPolicy,
    alg: &ModelAlgebra,
    t: f64,
    e: SolderFrame,
    f: f64,
    kappa_min: f64,
) -> Result<FlowRecord> {
    let k = gated_k(policy, t, e.matrix(), f, kappa_min)?;
    let a = levi_civita(&e, alg)?;
    let g = curvature(&a, &e, alg)?;
    let triple = InvariantTriple { f, a, e };
    Ok(FlowRecord {
        t,
        e: *e.matrix(),
        f,
        k,
        a,
        g,
        r_closed: alg.d(&assemble_psi(&triple)).norm_inf(),
        r_evolution: f64::NAN,
    })
}

/// Integrates from `s0` to `cfg.t2` in `cfg.steps` uniform RK4 steps.
///
/// Every stage evaluation of `K` is gated on `λ_min(sym K) ≥ κmin`.
/// Residuals are attached when the trace has at least three records.
pub fn integrate(
    s0: &FlowState,
    policy: &KPolicy,
    alg: &ModelAlgebra,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    if cfg.steps == 0 {
        return Err(Error::InvalidInterval("steps must be positive"));
    }
    if !(cfg.t2 > s0.t) || !cfg.t2.is_finite() {
        return Err(Error::InvalidInterval("t2 must exceed t1"));
    }
    if !(cfg.kappa_min > 0.0) {
        return Err(Error::InvalidInterval("kappa_min must be positive"));
    }
    let h = (cfg.t2 - s0.t) / cfg.steps as f64;
    let km = cfg.kappa_min;
    let mut records = Vec::with_capacity(cfg.steps + 1);
    records.push(record(policy, alg, s0.t, s0.e, s0.f, km)?);
    let (mut e, mut f) = (*s0.e.matrix(), s0.f);
    for n in 0..cfg.steps {
        let t = s0.t + n as f64 * h;
        let (k1e, k1f) = stage(policy, alg, t, e, f, km)?;
        let (k2e, k2f) = stage(policy, alg, t + 0.5 * h, e + k1e * (0.5 * h), f + 0.5 * h * k1f, km)?;
        let (k3e, k3f) = stage(policy, alg, t + 0.5 * h, e + k2e * (0.5 * h), f + 0.5 * h * k2f, km)?;
        let (k4e, k4f) = stage(policy, alg, t + h, e + k3e * h, f + h * k3f, km)?;
        e += (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (h / 6.0);
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        let t_next = if n + 1 == cfg.steps {
            cfg.t2
        } else {
            s0.t + (n + 1) as f64 * h
        };
        if !(f > 0.0) {
            return Err(Error::NonPositiveF {
                t: t_next,
                step: n + 1,
                f,
            });
        }
        records.push(record(policy, alg, t_next, SolderFrame::new(e)?, f, km)?);
    }
    let mut trace = FlowTrace {
        records,
        alg: alg.clone(),
        step: h,
        policy: policy.describe(),
        seed: None,
    };
    if trace.records.len() >= 3 {
        let residuals = dphi_residual(&trace)?;
        for (rec, (_, r_ev)) in trace.records.iter_mut().zip(residuals) {
            rec.r_evolution = r_ev;
        }
    }
    Ok(trace)
}

/// `φ = ω∧dt + ψ` on the 7-dimensional coframe.
pub fn assemble_phi(s: &FlowState, k: &KMatrix, alg: &ModelAlgebra) -> Result<AltForm> {
    let triple = s.triple(alg)?;
    Ok(phi_from_triple(&triple, k))
}

pub fn phi_from_triple(triple: &InvariantTriple, k: &KMatrix) -> AltForm {
    let psi = assemble_psi(triple).extend_inserting(slots::DT).expect("slice form");
    let omega = assemble_omega(k, triple).extend_inserting(slots::DT).expect("slice form");
    let dt = AltForm::basis(7, &[slots::DT]).expect("valid slot");
    omega.wedge(&dt).expect("fits") + psi
}

/// `‖∂ψ/∂t − dω‖∞` at each sample of a family, with three-point differences
/// in `t` (one-sided at the ends).
pub fn evolution_residuals(times: &[f64], psi: &[AltForm], d_omega: &[AltForm]) -> Result<Vec<f64>> {
    let n = times.len();
    if n < 3 {
        return Err(Error::TooFewRecords { needed: 3, found: n });
    }
    Ok((0..n)
        .map(|i| {
            let idx = stencil(n, i);
            let w = three_point_weights([times[idx[0]], times[idx[1]], times[idx[2]]], times[i]);
            let mut r = d_omega[i] * -1.0;
            for (wk, &j) in w.iter().zip(idx.iter()) {
                r += psi[j] * *wk;
            }
            r.norm_inf()
        })
        .collect())
}

/// Per record `(r_closed, r_evolution)`: `‖dψ_t‖∞` and `‖∂ψ/∂t − dω_t‖∞`.
pub fn dphi_residual(trace: &FlowTrace) -> Result<Vec<(f64, f64)>> {
    let recs = trace.records();
    if recs.len() < 3 {
        return Err(Error::TooFewRecords {
            needed: 3,
            found: recs.len(),
        });
    }
    let alg = trace.algebra();
    let mut psi = Vec::with_capacity(recs.len());
    let mut d_omega = Vec::with_capacity(recs.len());
    for r in recs {
        let triple = r.triple()?;
        psi.push(assemble_psi(&triple));
        d_omega.push(alg.d(&assemble_omega(&r.k, &triple)));
    }
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let ev = evolution_residuals(&times, &psi, &d_omega)?;
    Ok(psi
        .iter()
        .zip(ev)
        .map(|(p, r)| (alg.d(p).norm_inf(), r))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeReport {
    /// `det E` strictly increases at every step.
    pub monotone: bool,
    pub det: Vec<f64>,
    pub trace_k: Vec<f64>,
    /// Largest `|d(det E)/dt − tr K det E|`, differentiated as in
    /// [`evolution_residuals`].
    pub rate_defect: f64,
    /// First step `n` with `det E(t_n) ≤ det E(t_{n−1})`.
    pub first_failure: Option<usize>,
}

/// Frame-volume monotonicity along a trace.
pub fn volume_monotone(trace: &FlowTrace) -> VolumeReport {
    let recs = trace.records();
    let det: Vec<f64> = recs.iter().map(|r| r.e.determinant()).collect();
    let trace_k: Vec<f64> = recs.iter().map(|r| r.k.trace()).collect();
    let first_failure = det.windows(2).position(|w| !(w[1] > w[0])).map(|i| i + 1);
    let n = recs.len();
    let mut rate_defect: f64 = 0.0;
    if n >= 3 {
        for i in 0..n {
            let idx = stencil(n, i);
            let w = three_point_weights([recs[idx[0]].t, recs[idx[1]].t, recs[idx[2]].t], recs[i].t);
            let rate: f64 = (0..3).map(|k| w[k] * det[idx[k]]).sum();
            rate_defect = rate_defect.max((rate - trace_k[i] * det[i]).abs());
        }
    }
    VolumeReport {
        monotone: first_failure.is_none(),
        det,
        trace_k,
        rate_defect,
        first_failure,
    }
}
