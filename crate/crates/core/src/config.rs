//! JSON experiment configuration and CSV matrix files.
//!
//! Matrix files hold one matrix row per line as interleaved `re,im` pairs.
//! Relative paths resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::BilinearControlSystem;
use crate::models::{all_up_state, build_central_spin, CentralSpinSpec};
use crate::observability::DensityState;
use crate::operator::OperatorMatrix;
use crate::pulse::{InitPulse, OptimizationConfig, StepRule, Target};

/// Problems with a configuration or its input files.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Matrix { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    CentralSpin(CentralSpinSpec),
    /// Generic system from matrix files.
    Matrices {
        drift: PathBuf,
        controls: Vec<PathBuf>,
        observable: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseConfig {
    /// GRAPE over the phase with the experiment's optimizer settings.
    Optimize,
    /// Single-control Gaussian; `center` is on the global clock.
    Gaussian { amplitude: f64, center: f64, sigma: f64 },
    /// Explicit amplitudes, one row per slot.
    Fixed { amplitudes: Vec<Vec<f64>> },
}

impl PhaseConfig {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseConfig::Optimize => "optimize",
            PhaseConfig::Gaussian { .. } => "gaussian",
            PhaseConfig::Fixed { .. } => "fixed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    AllUp,
    MaximallyMixed,
    MatrixFile { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub max_iters: usize,
    pub gradient_tol: f64,
    #[serde(default)]
    pub step_rule: StepRule,
    /// Initial amplitudes are uniform in `[−init_scale, init_scale]`; 0 starts from zero.
    pub init_scale: f64,
    #[serde(default)]
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 200,
            gradient_tol: 1e-8,
            step_rule: StepRule::default(),
            init_scale: 1.0,
            target: Target::Maximize,
            clip: None,
        }
    }
}

fn default_rank_tol() -> f64 {
    crate::lie::DEFAULT_RANK_TOL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    /// Length of every phase.
    pub tau: f64,
    /// Slots per phase.
    pub n_slots: usize,
    pub phases: Vec<PhaseConfig>,
    pub initial_state: InitialState,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Two-phase protocol: GRAPE on `[0, τ]`, then free evolution under a
    /// Gaussian centred at `t = 0` with `σ = 0.1` on `[τ, 2τ]`.
    pub fn central_spin_protocol(spec: CentralSpinSpec) -> Self {
        Self {
            system: SystemConfig::CentralSpin(spec),
            tau: 1.0,
            n_slots: 1000,
            phases: vec![
                PhaseConfig::Optimize,
                PhaseConfig::Gaussian {
                    amplitude: 1.0,
                    center: 0.0,
                    sigma: 0.1,
                },
            ],
            initial_state: InitialState::AllUp,
            outputs: OutputConfig::default(),
            rank_tol: default_rank_tol(),
            optimizer: OptimizerSettings::default(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text).map_err(|source| ConfigError::Json {
            path: path.into(),
            source,
        })
    }

    /// Pretty JSON with a trailing newline; stable under parse/serialise round trips.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config is always serialisable");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be positive, got {}", self.tau));
        }
        if self.n_slots == 0 {
            return bad("n_slots must be at least 1".into());
        }
        if self.phases.is_empty() {
            return bad("at least one phase is required".into());
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad(format!("rank_tol must lie in (0, 1), got {}", self.rank_tol));
        }
        match &self.system {
            SystemConfig::CentralSpin(spec) => spec.validate()?,
            SystemConfig::Matrices { controls, .. } if controls.is_empty() => {
                return bad("a matrix system needs at least one control".into())
            }
            SystemConfig::Matrices { .. } => {}
        }
        for (k, phase) in self.phases.iter().enumerate() {
            match phase {
                PhaseConfig::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                    return bad(format!("phase {k}: sigma must be positive"))
                }
                PhaseConfig::Fixed { amplitudes } if amplitudes.len() != self.n_slots => {
                    return bad(format!(
                        "phase {k}: {} amplitude rows for {} slots",
                        amplitudes.len(),
                        self.n_slots
                    ))
                }
                _ => {}
            }
        }
        self.optimization_config().validate()?;
        Ok(())
    }

    pub fn optimization_config(&self) -> OptimizationConfig {
        let o = &self.optimizer;
        OptimizationConfig {
            n_slots: self.n_slots,
            horizon: self.tau,
            max_iters: o.max_iters,
            gradient_tol: o.gradient_tol,
            step_rule: o.step_rule,
            init_pulse: if o.init_scale > 0.0 {
                InitPulse::Random {
                    seed: self.seed,
                    scale: o.init_scale,
                }
            } else {
                InitPulse::Zeros
            },
            target: o.target,
            clip: o.clip,
        }
    }

    pub fn build_system(&self, base: &Path) -> Result<BilinearControlSystem<f64>, ConfigError> {
        match &self.system {
            SystemConfig::CentralSpin(spec) => Ok(build_central_spin(spec)?),
            SystemConfig::Matrices {
                drift,
                controls,
                observable,
            } => {
                let drift = read_matrix_csv(&base.join(drift))?;
                let controls = controls
                    .iter()
                    .map(|p| read_matrix_csv(&base.join(p)))
                    .collect::<Result<Vec<_>, _>>()?;
                let observable = read_matrix_csv(&base.join(observable))?;
                Ok(BilinearControlSystem::new(drift, controls, observable)?)
            }
        }
    }

    pub fn build_initial_state(&self, base: &Path, dim: usize) -> Result<DensityState<f64>, ConfigError> {
        let rho = match (&self.initial_state, &self.system) {
            (InitialState::AllUp, SystemConfig::CentralSpin(spec)) => all_up_state(spec.n_bath),
            (InitialState::AllUp, _) => {
                let mut psi = vec![Complex::new(0.0, 0.0); dim];
                psi[0] = Complex::new(1.0, 0.0);
                DensityState::pure(&psi)?
            }
            (InitialState::MaximallyMixed, _) => DensityState::maximally_mixed(dim),
            (InitialState::MatrixFile { path }, _) => DensityState::new(read_matrix_csv(&base.join(path))?)?,
        };
        if rho.dim() != dim {
            return Err(ConfigError::Invalid(format!(
                "initial state has dim {}, system has {dim}",
                rho.dim()
            )));
        }
        Ok(rho)
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<OperatorMatrix<f64>, ConfigError> {
    let err = |message: String| ConfigError::Matrix {
        path: path.into(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("line {}: {e}", i + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(err("empty matrix file".into()));
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 2 * n {
            return Err(err(format!(
                "row {} has {} values, expected {} (re,im pairs)",
                i + 1,
                row.len(),
                2 * n
            )));
        }
        entries.extend(row.chunks(2).map(|p| (p[0], p[1])));
    }
    Ok(OperatorMatrix::from_row_major(n, &entries)?)
}

pub fn write_matrix_csv(path: &Path, m: &OperatorMatrix<f64>) -> Result<(), ConfigError> {
    let io = |e: csv::Error| ConfigError::Matrix {
        path: path.into(),
        message: e.to_string(),
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(io)?;
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .flat_map(|j| {
                let z = m.get(i, j);
                [format!("{:.16e}", z.re), format!("{:.16e}", z.im)]
            })
            .collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|source| ConfigError::Io {
        path: path.into(),
        source,
    })
}
