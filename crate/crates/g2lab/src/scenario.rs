//! Scenario files: JSON documents describing one run.

use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::Deserialize;

use g2lab_core::flow::{FlowConfig, FlowState, KPolicy, KAPPA_MIN};
use g2lab_core::homogeneous::{ModelAlgebra, SolderFrame};

use crate::RunError;

pub type Rows = [[f64; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Flow,
    Lift,
    Theorem3,
    CheckForm,
    Decompose,
    ReducedCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Lift => "lift",
            Command::Theorem3 => "theorem3",
            Command::CheckForm => "check-form",
            Command::Decompose => "decompose",
            Command::ReducedCheck => "reduced-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum ModelSpec {
    Preset(String),
    Custom {
        name: String,
        structure_constants: [[[f64; 3]; 3]; 3],
    },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initial {
    #[serde(rename = "E")]
    pub e: Rows,
    pub f: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Constant(Rows),
    /// Coefficients `C_p` of `K(t) = Σ C_p t^p`.
    Polynomial(Vec<Rows>),
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub closed: Option<f64>,
    pub evolution: Option<f64>,
    pub reduced_f: Option<f64>,
    pub tracking: Option<f64>,
    pub gauge: Option<f64>,
    pub one_one: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Option<Command>,
    pub model: Option<ModelSpec>,
    pub initial: Option<Initial>,
    pub policy: Option<PolicySpec>,
    pub interval: Option<[f64; 2]>,
    pub steps: Option<usize>,
    pub kappa_min: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub seed: Option<u64>,
    /// 20 (dimension 6) or 35 (dimension 7) coefficients in lexicographic order.
    pub form: Option<Vec<f64>>,
    /// 15 coefficients of a 2-form on the slice.
    pub omega: Option<Vec<f64>>,
    pub sampling: Option<Sampling>,
    /// Reduced path CSV, relative to the scenario file.
    pub path: Option<PathBuf>,
    /// Frame to recover the gauge against at the end of a lift.
    #[serde(rename = "target_E")]
    pub target_e: Option<Rows>,
    pub substeps: Option<usize>,
}

pub fn rows(m: &Rows) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| m[i][j])
}

fn missing(field: &str) -> RunError {
    RunError::Schema(format!("{field}: missing"))
}

fn invalid(field: &str, why: impl std::fmt::Display) -> RunError {
    RunError::Schema(format!("{field}: {why}"))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            RunError::Schema(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The command to run; a command on the command line must agree with
    /// the one in the file.
    pub fn resolve_command(&self, cli: Option<Command>) -> Result<Command, RunError> {
        match (cli, self.command) {
            (Some(a), Some(b)) if a != b => Err(invalid(
                "command",
                format!("scenario says `{}` but `{}` was requested", b.name(), a.name()),
            )),
            (Some(a), _) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(missing("command")),
        }
    }

    pub fn model(&self) -> Result<ModelAlgebra, RunError> {
        let spec = self.model.as_ref().ok_or_else(|| missing("model"))?;
        let alg = match spec {
            ModelSpec::Preset(name) => ModelAlgebra::preset(name),
            ModelSpec::Custom {
                name,
                structure_constants,
            } => ModelAlgebra::new(name, *structure_constants),
        };
        alg.map_err(RunError::Core)
    }

    pub fn initial_state(&self) -> Result<FlowState, RunError> {
        let init = self.initial.as_ref().ok_or_else(|| missing("initial"))?;
        let t1 = self.interval()?[0];
        let f = init.f.ok_or_else(|| missing("initial.f"))?;
        FlowState::new(t1, rows(&init.e), f).map_err(|e| invalid("initial", e))
    }

    pub fn initial_frame(&self) -> Result<SolderFrame, RunError> {
        let init = self.initial.as_ref().ok_or_else(|| missing("initial"))?;
        SolderFrame::new(rows(&init.e)).map_err(|e| invalid("initial.E", e))
    }

    pub fn interval(&self) -> Result<[f64; 2], RunError> {
        let iv = self.interval.ok_or_else(|| missing("interval"))?;
        if !(iv[0] < iv[1]) || !iv[0].is_finite() || !iv[1].is_finite() {
            return Err(invalid("interval", "expected finite t1 < t2"));
        }
        Ok(iv)
    }

    pub fn policy(&self) -> Result<KPolicy, RunError> {
        match self.policy.as_ref().ok_or_else(|| missing("policy"))? {
            PolicySpec::Constant(k) => Ok(KPolicy::Constant(rows(k))),
            PolicySpec::Polynomial(cs) if cs.is_empty() => Err(invalid("policy.polynomial", "no coefficients")),
            PolicySpec::Polynomial(cs) => Ok(KPolicy::Polynomial(cs.iter().map(rows).collect())),
        }
    }

    pub fn flow_config(&self) -> Result<FlowConfig, RunError> {
        let steps = self.steps.ok_or_else(|| missing("steps"))?;
        if steps < 2 {
            return Err(invalid("steps", "need at least 2 steps for residuals"));
        }
        let kappa_min = self.kappa_min.unwrap_or(KAPPA_MIN);
        if !(kappa_min > 0.0) {
            return Err(invalid("kappa_min", "must be positive"));
        }
        Ok(FlowConfig {
            t2: self.interval()?[1],
            steps,
            kappa_min,
        })
    }

    pub fn form(&self) -> Result<&[f64], RunError> {
        let c = self.form.as_deref().ok_or_else(|| missing("form"))?;
        if c.len() != 20 && c.len() != 35 {
            return Err(invalid("form", format!("expected 20 or 35 coefficients, found {}", c.len())));
        }
        Ok(c)
    }

    /// Sampling parameters; a seed is mandatory whenever sampling is requested.
    pub fn sampling(&self) -> Result<Option<(usize, u64)>, RunError> {
        match &self.sampling {
            None => Ok(None),
            Some(s) => {
                let seed = self.seed.ok_or_else(|| missing("seed (required when sampling is used)"))?;
                if s.samples == 0 {
                    return Err(invalid("sampling.samples", "must be positive"));
                }
                Ok(Some((s.samples, seed)))
            }
        }
    }

    pub fn path_file(&self, scenario_dir: &Path) -> Option<PathBuf> {
        self.path.as_ref().map(|p| scenario_dir.join(p))
    }
}
