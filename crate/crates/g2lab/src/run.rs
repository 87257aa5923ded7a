//! Dispatch from a scenario to the core routines and the artifacts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use g2lab_core::flow::{integrate, phi_from_triple, volume_monotone, FlowTrace};
use g2lab_core::homogeneous::ModelAlgebra;
use g2lab_core::invariant_forms::{decompose_omega, decompose_psi, is_one_one, one_one_defect, slice_d};
use g2lab_core::lifting::{horizontal_lift, recover_gauge, theorem3_pipeline, GaugeFit, LiftResult, PipelineOptions};
use g2lab_core::reduced::{check_reduced, project_trace, Reading, ReducedOptions, ReducedReport};
use g2lab_core::stable_forms::{
    g2_metric_volume, hitchin_lambda, is_definite6, standard_volume, DefinitenessMode, Orbit6,
};
use g2lab_core::{AltForm, Error};

use crate::io::{matrix_rows, write_json, write_lift, write_reduced, write_trace};
use crate::report::{Report, Status};
use crate::scenario::{rows, Command, Scenario};
use crate::RunError;

pub const CLOSED_TOL: f64 = 1e-10;
pub const EVOLUTION_TOL: f64 = 1e-3;
pub const TRACKING_TOL: f64 = 1e-8;

const GATE: &str = "symmetric part of K positive definite above kappa_min";
const POSITIVE_F: &str = "f stays positive";
const CLOSED: &str = "d psi_t = 0 on every slice";
const EVOLUTION: &str = "d psi_t/dt = d omega_t";
const DEFINITE: &str = "psi_t definite on every slice";
const VOLUME: &str = "phi definite with positive volume for the product orientation";
const MONOTONE: &str = "det E strictly increasing (endpoint forms differ)";
const REDUCED: &str = "projected path satisfies the reduced relation";
const TRACKING: &str = "lifted frames reproduce the metric path";
const SYMMETRIC: &str = "lift velocity symmetric (horizontal)";
const GAUGE: &str = "gauge candidate orthogonal before projection";
const ONE_ONE: &str = "omega_t wedge psi_t = 0 (slice orthogonal to dt)";
const COHERENCE: &str = "pulled-back target projects to the lift endpoint";

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub paper_literal: bool,
}

/// Runs one scenario file, writes its artifacts under `out` and returns the
/// report (also written as `report.json`).
pub fn run_file(path: &Path, cli_command: Option<Command>, out: &Path, opts: RunOptions) -> Report {
    let scenario_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = Scenario::load(path);
    let command = loaded
        .as_ref()
        .ok()
        .and_then(|s| s.resolve_command(cli_command).ok())
        .or(cli_command);
    let mut report = Report::new(command.map(Command::name).unwrap_or("unknown"), path.display().to_string());
    let outcome = loaded.and_then(|sc| {
        report.seed = sc.seed;
        let cmd = sc.resolve_command(cli_command)?;
        std::fs::create_dir_all(out).map_err(|e| RunError::Io(format!("{}: {e}", out.display())))?;
        let ctx = Ctx {
            sc: &sc,
            dir: &scenario_dir,
            out,
            opts,
        };
        match cmd {
            Command::Flow => ctx.flow(&mut report),
            Command::Theorem3 => ctx.theorem3(&mut report),
            Command::Lift => ctx.lift(&mut report),
            Command::CheckForm => ctx.check_form(&mut report),
            Command::Decompose => ctx.decompose(&mut report),
            Command::ReducedCheck => ctx.reduced_check(&mut report),
        }
    });
    if let Err(e) = outcome {
        report.error(e.to_string());
    }
    report.finish();
    if out.is_dir() {
        let file = out.join("report.json");
        report.artifacts.push("report.json".into());
        if let Err(e) = write_json(&file, &report) {
            report.error(e.to_string());
            report.finish();
        }
    }
    report
}

struct Ctx<'a> {
    sc: &'a Scenario,
    dir: &'a Path,
    out: &'a Path,
    opts: RunOptions,
}

#[derive(Serialize)]
struct TraceMeta<'a> {
    tool: &'static str,
    version: &'static str,
    model: &'a str,
    structure_constants: [[[f64; 3]; 3]; 3],
    policy: &'a str,
    interval: [f64; 2],
    steps: usize,
    step: f64,
    kappa_min: f64,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct LiftMeta {
    tool: &'static str,
    version: &'static str,
    samples: usize,
    max_tracking: f64,
    max_symmetry_defect: f64,
    tau: Option<[f64; 9]>,
    tau_orthogonality_defect: Option<f64>,
    tau_det: Option<f64>,
    tau_distance_from_identity: Option<f64>,
}

fn lift_meta(lift: &LiftResult) -> LiftMeta {
    let tau = lift.gauge.map(|g| {
        let m = g.rotation.matrix();
        let mut a = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                a[3 * i + j] = m[(i, j)];
            }
        }
        a
    });
    LiftMeta {
        tool: "g2lab",
        version: env!("CARGO_PKG_VERSION"),
        samples: lift.times.len(),
        max_tracking: lift.max_tracking(),
        max_symmetry_defect: lift.max_symmetry_defect(),
        tau,
        tau_orthogonality_defect: lift.gauge.map(|g| g.defect),
        tau_det: lift.gauge.map(|g| g.det),
        tau_distance_from_identity: lift.gauge.map(|g| g.rotation.distance_from_identity()),
    }
}

fn gauge_results(report: &mut Report, fit: &GaugeFit) {
    report.result("tau", json!(matrix_rows(fit.rotation.matrix())));
    report.result("tau_orthogonality_defect", fit.defect);
    report.result("tau_det", fit.rotation.matrix().determinant());
    report.result("tau_distance_from_identity", fit.rotation.distance_from_identity());
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

impl Ctx<'_> {
    fn reading(&self) -> Reading {
        if self.opts.paper_literal {
            Reading::Literal
        } else {
            Reading::GammaDot
        }
    }

    fn reduced_options(&self) -> ReducedOptions {
        ReducedOptions {
            reading: self.reading(),
            tol_f: self.sc.tolerances.reduced_f.unwrap_or(g2lab_core::reduced::TOL_F),
            ..Default::default()
        }
    }

    fn artifact(&self, report: &mut Report, name: &str) -> PathBuf {
        report.artifacts.push(name.to_string());
        self.out.join(name)
    }

    /// Integrates the scenario's flow; gate and positivity violations are
    /// recorded as failed checks and yield `None`.
    fn run_flow(&self, report: &mut Report, alg: &ModelAlgebra) -> Result<Option<FlowTrace>, RunError> {
        let s0 = self.sc.initial_state()?;
        let policy = self.sc.policy()?;
        let cfg = self.sc.flow_config()?;
        report.result("kappa_min", cfg.kappa_min);
        match integrate(&s0, &policy, alg, &cfg) {
            Ok(trace) => {
                let trace = match self.sc.seed {
                    Some(seed) => trace.with_seed(seed),
                    None => trace,
                };
                let meta = TraceMeta {
                    tool: "g2lab",
                    version: env!("CARGO_PKG_VERSION"),
                    model: alg.name(),
                    structure_constants: *alg.structure_constants(),
                    policy: trace.policy(),
                    interval: self.sc.interval()?,
                    steps: cfg.steps,
                    step: trace.step(),
                    kappa_min: cfg.kappa_min,
                    seed: trace.seed(),
                };
                write_trace(&self.artifact(report, "trace.csv"), &trace)?;
                write_json(&self.artifact(report, "trace.meta.json"), &meta)?;
                let min_eig = trace
                    .records()
                    .iter()
                    .map(|r| {
                        let s = (r.k + r.k.transpose()) * 0.5;
                        s.symmetric_eigenvalues().min()
                    })
                    .fold(f64::INFINITY, f64::min);
                report.check("positive-symmetric-K", GATE, true, min_eig, Some(cfg.kappa_min));
                let min_f = trace.records().iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
                report.check("positive-f", POSITIVE_F, true, min_f, None);
                Ok(Some(trace))
            }
            Err(Error::PolicyViolation { t, eigenvalue }) => {
                report.fail_at(
                    "positive-symmetric-K",
                    GATE,
                    None,
                    Some(t),
                    eigenvalue,
                    format!("smallest eigenvalue of sym K is {eigenvalue:e} at t = {t}"),
                );
                Ok(None)
            }
            Err(Error::NonPositiveF { t, step, f }) => {
                report.fail_at(
                    "positive-f",
                    POSITIVE_F,
                    Some(step),
                    Some(t),
                    f,
                    format!("f reached {f:e} in step {step}"),
                );
                Ok(None)
            }
            Err(e) => Err(RunError::Core(e)),
        }
    }

    fn reduced_checks(&self, report: &mut Report, rep: &ReducedReport) {
        let interior = &rep.samples[1..rep.samples.len() - 1];
        let min_eig = interior
            .iter()
            .map(|s| s.min_gamma_dot_eig)
            .fold(f64::INFINITY, f64::min);
        let selected = match rep.reading {
            Reading::GammaDot => rep.max_residual,
            Reading::Literal => rep.max_residual_literal,
        };
        report.check("positive-metric-velocity", "d gamma/dt positive definite", min_eig > 0.0, min_eig, None);
        let f_ok = rep.witness.is_none_or(|(_, c, _)| c != "f-evolution");
        report.check("reduced-relation", REDUCED, f_ok, selected, Some(rep.tolerance));
        if let (Some(w), false) = (&mut report.witness, rep.verdict) {
            if let Some((i, check, value)) = rep.witness {
                if w.check == "reduced-relation" || w.check == "positive-metric-velocity" {
                    w.check = check.to_string();
                    w.index = Some(i);
                    w.t = Some(rep.samples[i].t);
                    w.value = Some(value);
                }
            }
        }
        report.result(
            "reading",
            match rep.reading {
                Reading::GammaDot => "metric-velocity",
                Reading::Literal => "literal",
            },
        );
        report.result("reduced_max_residual", rep.max_residual);
        report.result("reduced_max_residual_literal", rep.max_residual_literal);
    }

    fn flow(&self, report: &mut Report) -> Result<(), RunError> {
        let alg = self.sc.model()?;
        report.model = Some(alg.name().to_string());
        let Some(trace) = self.run_flow(report, &alg)? else {
            return Ok(());
        };
        let tol_closed = self.sc.tolerances.closed.unwrap_or(CLOSED_TOL);
        let tol_ev = self.sc.tolerances.evolution.unwrap_or(EVOLUTION_TOL);
        let recs = trace.records();
        let closed = max_of(recs.iter().map(|r| r.r_closed));
        let evolution = max_of(recs.iter().map(|r| r.r_evolution));
        report.check("closed", CLOSED, closed <= tol_closed, closed, Some(tol_closed));
        report.check("evolution", EVOLUTION, evolution <= tol_ev, evolution, Some(tol_ev));

        let vol7 = standard_volume(7)?;
        let mut worst_lambda = f64::NEG_INFINITY;
        let mut min_volume = f64::INFINITY;
        let mut all_one_one = true;
        for r in recs {
            let triple = r.triple()?;
            let psi = g2lab_core::invariant_forms::assemble_psi(&triple);
            let d = is_definite6(&psi, DefinitenessMode::Exact)?;
            worst_lambda = worst_lambda.max(d.lambda.unwrap_or(f64::NAN));
            let data = g2_metric_volume(&phi_from_triple(&triple, &r.k), &vol7);
            min_volume = min_volume.min(match data {
                Ok(d) if d.is_positively_oriented() => d.volume,
                Ok(d) => -d.volume,
                Err(_) => f64::NAN,
            });
            all_one_one &= is_one_one(&g2lab_core::invariant_forms::assemble_omega(&r.k, &triple), &psi)?;
        }
        report.check("definite-slices", DEFINITE, worst_lambda < 0.0, worst_lambda, None);
        report.check("positive-volume", VOLUME, min_volume > 0.0, min_volume, None);
        let vol = volume_monotone(&trace);
        let min_increment = vol.det.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        report.check("volume-monotone", MONOTONE, vol.monotone, min_increment, None);

        let path = project_trace(&trace)?;
        write_reduced(&self.artifact(report, "reduced.csv"), &path)?;
        let rep = check_reduced(&path, &alg, &self.reduced_options())?;
        self.reduced_checks(report, &rep);

        let last = trace.last();
        report.result("t_final", last.t);
        report.result("f_final", last.f);
        report.result("detE_final", last.e.determinant());
        report.result("E_final", json!(matrix_rows(&last.e)));
        report.result("volume_rate_defect", vol.rate_defect);
        report.result("one_one_at_every_record", all_one_one);
        report.result(
            "psi_endpoint_gap",
            (last.psi()? - trace.first().psi()?).norm_inf(),
        );
        Ok(())
    }

    fn pipeline_options(&self) -> PipelineOptions {
        let t = &self.sc.tolerances;
        let d = PipelineOptions::default();
        PipelineOptions {
            substeps: self.sc.substeps.unwrap_or(d.substeps),
            tracking_tol: t.tracking.unwrap_or(d.tracking_tol),
            gauge_tol: t.gauge.unwrap_or(d.gauge_tol),
            one_one_tol: t.one_one.unwrap_or(d.one_one_tol),
            closed_tol: t.closed.unwrap_or(d.closed_tol),
            evolution_tol: t.evolution.unwrap_or(d.evolution_tol),
            reduced: self.reduced_options(),
        }
    }

    fn theorem3(&self, report: &mut Report) -> Result<(), RunError> {
        let alg = self.sc.model()?;
        report.model = Some(alg.name().to_string());
        let Some(trace) = self.run_flow(report, &alg)? else {
            return Ok(());
        };
        let opts = self.pipeline_options();
        let rep = check_reduced(&project_trace(&trace)?, &alg, &opts.reduced)?;
        self.reduced_checks(report, &rep);
        if !rep.verdict {
            return Ok(());
        }
        let lift = match theorem3_pipeline(&trace, &opts) {
            Ok(lift) => lift,
            Err(Error::WitnessFailure { check, index, value }) => {
                report.fail_at(
                    "witness",
                    "lifted family certifies the split relation",
                    Some(index),
                    trace.records().get(index).map(|r| r.t),
                    value,
                    format!("check `{check}` failed at sample {index}"),
                );
                if let Some(w) = &mut report.witness {
                    w.check = check.to_string();
                }
                return Ok(());
            }
            Err(e @ (Error::MetricMismatch(_) | Error::OrientationFlip(_))) => {
                report.fail_at("gauge-rotation", GAUGE, None, None, f64::NAN, e.to_string());
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        let fit = lift.gauge.expect("pipeline recovers a gauge");
        report.check("metric-tracking", TRACKING, true, lift.max_tracking(), Some(opts.tracking_tol));
        report.check("symmetric-velocity", SYMMETRIC, lift.max_symmetry_defect() <= 1e-12, lift.max_symmetry_defect(), Some(1e-12));
        report.check("gauge-rotation", GAUGE, true, fit.defect, Some(opts.gauge_tol));
        let w = &lift.witness;
        report.check("one-one", ONE_ONE, true, max_of(w.iter().map(|s| s.one_one_defect)), Some(opts.one_one_tol));
        report.check("closed", CLOSED, true, max_of(w.iter().map(|s| s.r_closed)), Some(opts.closed_tol));
        report.check("evolution", EVOLUTION, true, max_of(w.iter().map(|s| s.r_evolution)), Some(opts.evolution_tol));
        report.check("positive-volume", VOLUME, true, w.iter().map(|s| s.volume).fold(f64::INFINITY, f64::min), None);
        report.check("gauge-coherence", COHERENCE, true, lift.coherence, Some(opts.tracking_tol));
        gauge_results(report, &fit);
        write_lift(&self.artifact(report, "lift.csv"), &lift)?;
        write_json(&self.artifact(report, "lift.meta.json"), &lift_meta(&lift))?;
        Ok(())
    }

    fn lift(&self, report: &mut Report) -> Result<(), RunError> {
        let alg = self.sc.model.as_ref().map(|_| self.sc.model()).transpose()?;
        if let Some(a) = &alg {
            report.model = Some(a.name().to_string());
        }
        let path = match self.sc.path_file(self.dir) {
            Some(file) => crate::io::read_reduced(&file)?,
            None => {
                let alg = alg.as_ref().ok_or_else(|| RunError::Schema("path: missing (or give a flow to project)".into()))?;
                match self.run_flow(report, alg)? {
                    Some(trace) => project_trace(&trace)?,
                    None => return Ok(()),
                }
            }
        };
        let e0 = self.sc.initial_frame()?;
        let substeps = self.sc.substeps.unwrap_or(4);
        let mut lift = horizontal_lift(&path, &e0, substeps)?;
        let tol = self.sc.tolerances.tracking.unwrap_or(TRACKING_TOL);
        report.check("metric-tracking", TRACKING, lift.max_tracking() <= tol, lift.max_tracking(), Some(tol));
        report.check("symmetric-velocity", SYMMETRIC, lift.max_symmetry_defect() <= 1e-12, lift.max_symmetry_defect(), Some(1e-12));
        if let Some(a) = &alg {
            let rep = check_reduced(&path, a, &self.reduced_options())?;
            self.reduced_checks(report, &rep);
        }
        if let Some(target) = &self.sc.target_e {
            let target = g2lab_core::homogeneous::SolderFrame::new(rows(target))
                .map_err(|e| RunError::Schema(format!("target_E: {e}")))?;
            let end = g2lab_core::homogeneous::SolderFrame::new(lift.frames[lift.frames.len() - 1])?;
            let gauge_tol = self.sc.tolerances.gauge.unwrap_or(TRACKING_TOL);
            match recover_gauge(&end, &target, gauge_tol) {
                Ok(fit) => {
                    report.check("gauge-rotation", GAUGE, true, fit.defect, Some(gauge_tol));
                    gauge_results(report, &fit);
                    lift.gauge = Some(fit);
                }
                Err(Error::MetricMismatch(d)) => {
                    report.fail_at("gauge-rotation", GAUGE, None, None, d, format!("orthogonality defect {d:e}"));
                }
                Err(e) => return Err(e.into()),
            }
        }
        let last = lift.frames.len() - 1;
        report.result("E_final", json!(matrix_rows(&lift.frames[last])));
        write_lift(&self.artifact(report, "lift.csv"), &lift)?;
        write_json(&self.artifact(report, "lift.meta.json"), &lift_meta(&lift))?;
        Ok(())
    }

    fn check_form(&self, report: &mut Report) -> Result<(), RunError> {
        let coeffs = self.sc.form()?;
        if coeffs.len() == 20 {
            let psi = AltForm::from_coeffs(6, 3, coeffs)?;
            let verdict = hitchin_lambda(&psi, &standard_volume(6)?)?;
            let orbit = match verdict.verdict {
                Orbit6::Definite => "definite",
                Orbit6::OtherOpenOrbit => "other-open-orbit",
                Orbit6::Degenerate => "degenerate",
            };
            report.result("dimension", 6);
            report.result("orbit", orbit);
            report.result("lambda", verdict.lambda);
            let definite = verdict.verdict == Orbit6::Definite;
            report.check("definite", "3-form lies in the definite open orbit (lambda < 0)", definite, verdict.lambda, None);
            if let Some((samples, seed)) = self.sc.sampling()? {
                let s = is_definite6(&psi, DefinitenessMode::Sampled { samples, seed })?;
                report.result("sampled_definite", s.definite);
                if let Some(w) = s.witness {
                    report.result("sampled_witness", json!(w.components()));
                }
                report.check(
                    "sampling-agrees",
                    "rank-4 sampling agrees with the lambda sign",
                    s.definite == definite,
                    samples as f64,
                    None,
                );
            }
        } else {
            let phi = AltForm::from_coeffs(7, 3, coeffs)?;
            report.result("dimension", 7);
            match g2_metric_volume(&phi, &standard_volume(7)?) {
                Ok(data) => {
                    report.result("orientation", data.orientation);
                    report.result("volume", data.volume);
                    let metric: Vec<Vec<f64>> = (0..7).map(|i| (0..7).map(|j| data.metric[(i, j)]).collect()).collect();
                    report.result("metric", json!(metric));
                    report.check("definite", "3-form induces a definite G2 metric", true, data.volume, None);
                }
                Err(Error::NotDefinite | Error::ZeroVolume) => {
                    report.check("definite", "3-form induces a definite G2 metric", false, 0.0, None);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    fn decompose(&self, report: &mut Report) -> Result<(), RunError> {
        let coeffs = self.sc.form()?;
        if coeffs.len() != 20 {
            return Err(RunError::Schema("form: decompose expects the 20 coefficients of a slice 3-form".into()));
        }
        let psi = AltForm::from_coeffs(6, 3, coeffs)?;
        const SHAPE: &str = "psi = -f e123 + e1 a23 + e2 a31 + e3 a12";
        let triple = match decompose_psi(&psi) {
            Ok(t) => t,
            Err(e @ (Error::NotDecomposable(_) | Error::FiberNonVanishing(_) | Error::NotDefinite)) => {
                let v = match e {
                    Error::NotDecomposable(v) | Error::FiberNonVanishing(v) => v,
                    _ => f64::NAN,
                };
                report.fail_at("decomposable", SHAPE, None, None, v, e.to_string());
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        report.check("decomposable", SHAPE, true, 0.0, None);
        report.result("f", triple.f);
        report.result("A", json!(matrix_rows(&triple.a)));
        report.result("E", json!(matrix_rows(triple.e.matrix())));
        if self.sc.model.is_some() {
            let alg = self.sc.model()?;
            report.model = Some(alg.name().to_string());
            report.result("closedness_residual", slice_d(&psi, &alg).norm_inf());
        }
        if let Some(om) = &self.sc.omega {
            let omega = AltForm::from_coeffs(6, 2, om).map_err(|e| RunError::Schema(format!("omega: {e}")))?;
            const PENCIL: &str = "omega = K_ij a^i e^j";
            match decompose_omega(&omega, &triple) {
                Ok(k) => {
                    report.check("in-pencil", PENCIL, true, 0.0, None);
                    report.result("K", json!(matrix_rows(&k)));
                    let asym = (k - k.transpose()).amax();
                    report.result("K_antisymmetry", asym);
                    report.result("one_one", is_one_one(&omega, &psi)?);
                    report.result("one_one_defect", one_one_defect(&omega, &psi)?);
                }
                Err(Error::NotInPencil(v)) => {
                    report.fail_at("in-pencil", PENCIL, None, None, v, format!("residual {v:e}"));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }

    fn reduced_check(&self, report: &mut Report) -> Result<(), RunError> {
        let alg = self.sc.model()?;
        report.model = Some(alg.name().to_string());
        let file = self.sc.path_file(self.dir).ok_or_else(|| RunError::Schema("path: missing".into()))?;
        let path = crate::io::read_reduced(&file)?;
        let rep = check_reduced(&path, &alg, &self.reduced_options())?;
        self.reduced_checks(report, &rep);
        report.result("samples", path.len());
        Ok(())
    }
}

/// Output directory for one of several scenarios run together.
pub fn output_dir(base: &Path, scenario: &Path, many: bool) -> PathBuf {
    if many {
        base.join(scenario.file_stem().unwrap_or_default())
    } else {
        base.to_path_buf()
    }
}

pub fn status_line(report: &Report) -> String {
    format!("{}: {} [{}]", report.scenario, report.status.as_str(), report.command)
}

pub fn worst_status(reports: &[Report]) -> Status {
    reports
        .iter()
        .map(|r| r.status)
        .max_by_key(|s| s.exit_code())
        .unwrap_or(Status::Pass)
}
