//! End-to-end experiment runner: closure, decomposition, per-phase control,
//! propagation, thermodynamic recording and export.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, ExperimentConfig, PhaseConfig};
use crate::dynamics::{gaussian_schedule, propagate, record_thermo, ControlSchedule};
use crate::error::Error;
use crate::lie::{close_algebra, gram_schmidt, observability_space, ClosureReport, OperatorBasis};
use crate::observability::DensityState;
use crate::pulse::grape_optimize_from;
use crate::thermo::ThermoSample;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{step}: {source}")]
    Setup {
        step: &'static str,
        #[source]
        source: Error,
    },
    #[error("phase {phase} ({kind}), {step}: {source}")]
    Phase {
        phase: usize,
        kind: &'static str,
        step: &'static str,
        #[source]
        source: Error,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl ExperimentError {
    /// Breakdowns such as a non-PSD effective state or a diverging optimizer,
    /// as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        match self {
            ExperimentError::Setup { source, .. } | ExperimentError::Phase { source, .. } => source.is_numerical(),
            ExperimentError::Config(ConfigError::Model(e)) => e.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub max_iters: usize,
    pub init_scale: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub kind: String,
    pub t0: f64,
    pub t1: f64,
    #[serde(rename = "Q")]
    pub heat: f64,
    #[serde(rename = "W")]
    pub work: f64,
    #[serde(rename = "dS")]
    pub entropy_change: f64,
    pub terminal_output: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSummary>,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(rename = "dim_L")]
    pub dim_l: usize,
    #[serde(rename = "depth_L")]
    pub depth_l: usize,
    #[serde(rename = "dim_V")]
    pub dim_v: usize,
    #[serde(rename = "depth_V")]
    pub depth_v: usize,
    #[serde(rename = "Q")]
    pub heat: Vec<f64>,
    #[serde(rename = "W")]
    pub work: Vec<f64>,
    #[serde(rename = "dS")]
    pub entropy_change: Vec<f64>,
    #[serde(rename = "J_terminal")]
    pub j_terminal: Option<f64>,
    pub seed: u64,
    pub rank_tol: f64,
    pub phases: Vec<PhaseReport>,
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub lie: ClosureReport,
    pub observability: ClosureReport,
    pub phases: Vec<PhaseReport>,
    /// One trajectory per phase; each starts at the previous phase's end.
    pub trajectories: Vec<Vec<ThermoSample>>,
    pub seed: u64,
    pub rank_tol: f64,
}

impl ExperimentReport {
    pub fn summary(&self) -> Summary {
        Summary {
            dim_l: self.lie.dimension,
            depth_l: self.lie.max_depth,
            dim_v: self.observability.dimension,
            depth_v: self.observability.max_depth,
            heat: self.phases.iter().map(|p| p.heat).collect(),
            work: self.phases.iter().map(|p| p.work).collect(),
            entropy_change: self.phases.iter().map(|p| p.entropy_change).collect(),
            j_terminal: self
                .phases
                .iter()
                .rev()
                .find(|p| p.optimizer.is_some())
                .map(|p| p.terminal_output),
            seed: self.seed,
            rank_tol: self.rank_tol,
            phases: self.phases.clone(),
        }
    }

    /// All phases joined, without repeating shared boundary samples.
    pub fn combined(&self) -> Vec<ThermoSample> {
        let mut out = Vec::new();
        for (k, traj) in self.trajectories.iter().enumerate() {
            out.extend(traj.iter().skip(usize::from(k > 0)).cloned());
        }
        out
    }
}

/// Closure products shared by the pipeline and the CLI.
pub struct Closure {
    pub lie: OperatorBasis<f64>,
    pub lie_report: ClosureReport,
    /// Orthonormalised observability basis.
    pub v: OperatorBasis<f64>,
    pub v_report: ClosureReport,
}

pub fn compute_closure(
    sys: &crate::dynamics::BilinearControlSystem<f64>,
    rank_tol: f64,
) -> Result<Closure, ExperimentError> {
    let setup = |step| move |source| ExperimentError::Setup { step, source };
    let (lie, lie_report) = close_algebra(&sys.generators(), rank_tol).map_err(setup("close algebra"))?;
    let (v, v_report) = observability_space(&lie, sys.observable(), rank_tol).map_err(setup("observability space"))?;
    let v = gram_schmidt(&v).map_err(setup("gram-schmidt"))?;
    Ok(Closure {
        lie,
        lie_report,
        v,
        v_report,
    })
}

pub fn closure_for_config(cfg: &ExperimentConfig, base: &Path) -> Result<Closure, ExperimentError> {
    cfg.validate()?;
    let sys = cfg.build_system(base)?;
    compute_closure(&sys, cfg.rank_tol)
}

/// Runs every phase in order. Relative paths in `cfg` resolve against `base`.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    let sys = cfg.build_system(base)?;
    let mut rho: DensityState<f64> = cfg.build_initial_state(base, sys.dim())?;
    let closure = compute_closure(&sys, cfg.rank_tol)?;
    let opt_cfg = cfg.optimization_config();

    let mut phases = Vec::with_capacity(cfg.phases.len());
    let mut trajectories = Vec::with_capacity(cfg.phases.len());
    for (index, phase) in cfg.phases.iter().enumerate() {
        let kind = phase.name();
        let fail = |step| {
            move |source| ExperimentError::Phase {
                phase: index,
                kind,
                step,
                source,
            }
        };
        let t0 = cfg.tau * index as f64;
        let t1 = t0 + cfg.tau;
        let (sched, optimizer) = match phase {
            PhaseConfig::Optimize => {
                let init = opt_cfg
                    .initial_schedule::<f64>(sys.n_controls())
                    .map_err(fail("initial pulse"))?;
                let init = ControlSchedule::new(t0, t1, init.amplitudes().to_vec()).map_err(fail("initial pulse"))?;
                let res = grape_optimize_from(&sys, &rho, &opt_cfg, init).map_err(fail("optimize"))?;
                let summary = OptimizerSummary {
                    iterations: res.iterations,
                    converged: res.converged,
                    gradient_norm: res.gradient_norm,
                    max_iters: opt_cfg.max_iters,
                    init_scale: cfg.optimizer.init_scale,
                    seed: res.seed,
                };
                (res.schedule, Some(summary))
            }
            PhaseConfig::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                let s =
                    gaussian_schedule(t0, t1, cfg.n_slots, *amplitude, *center, *sigma).map_err(fail("schedule"))?;
                (s, None)
            }
            PhaseConfig::Fixed { amplitudes } => {
                let s = ControlSchedule::new(t0, t1, amplitudes.clone()).map_err(fail("schedule"))?;
                (s, None)
            }
        };
        let states = propagate(&sys, &sched, &rho).map_err(fail("propagate"))?;
        let end = states.last().expect("nonempty").clone();
        let traj = record_thermo(&sys, &sched, &closure.v, states, false).map_err(fail("record thermo"))?;
        phases.push(PhaseReport {
            kind: kind.to_string(),
            t0,
            t1,
            heat: traj.heat(),
            work: traj.work(),
            entropy_change: traj.entropy_change(),
            terminal_output: traj.last().output,
            optimizer,
        });
        trajectories.push(traj.samples);
        rho = end;
    }
    Ok(ExperimentReport {
        lie: closure.lie_report,
        observability: closure.v_report,
        phases,
        trajectories,
        seed: cfg.seed,
        rank_tol: cfg.rank_tol,
    })
}

pub const CSV_HEADER: [&str; 6] = ["t", "y", "O", "U", "S", "D"];

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory_csv(path: &Path, samples: &[ThermoSample]) -> Result<(), ExperimentError> {
    let err = |message: String| ExperimentError::Output {
        path: path.into(),
        message,
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(e.to_string()))?;
    w.write_record(CSV_HEADER).map_err(|e| err(e.to_string()))?;
    for s in samples {
        let row = [s.t, s.output, s.obs_energy, s.unobs_energy, s.entropy, s.dissipation].map(fmt17);
        w.write_record(&row).map_err(|e| err(e.to_string()))?;
    }
    w.flush().map_err(|e| err(e.to_string()))
}

/// Writes `phase_<k>.csv` per phase, `trajectory.csv` for the joined series
/// and `summary.json`; returns the written paths.
pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::Output {
        path: dir.into(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();
    for (k, traj) in report.trajectories.iter().enumerate() {
        let path = dir.join(format!("phase_{k}.csv"));
        write_trajectory_csv(&path, traj)?;
        written.push(path);
    }
    let path = dir.join("trajectory.csv");
    write_trajectory_csv(&path, &report.combined())?;
    written.push(path);
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&report.summary()).expect("summary is serialisable");
    fs::write(&path, json + "\n").map_err(|e| ExperimentError::Output {
        path: path.clone(),
        message: e.to_string(),
    })?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{InitialState, SystemConfig};
    use crate::models::CentralSpinSpec;

    fn small(phases: Vec<PhaseConfig>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::central_spin_protocol(CentralSpinSpec::uniform(1, 2.0, -1.0));
        cfg.n_slots = 40;
        cfg.phases = phases;
        cfg.initial_state = InitialState::MaximallyMixed;
        cfg.optimizer.max_iters = 5;
        cfg
    }

    #[test]
    fn invalid_config_is_a_validation_error() {
        let mut cfg = small(vec![PhaseConfig::Optimize]);
        cfg.system = SystemConfig::CentralSpin(CentralSpinSpec::uniform(0, 1.0, -1.0));
        let err = run_experiment(&cfg, Path::new(".")).unwrap_err();
        assert!(matches!(err, ExperimentError::Config(_)) && !err.is_numerical());
    }

    #[test]
    fn maximally_mixed_run_writes_consistent_outputs() {
        let cfg = small(vec![
            PhaseConfig::Optimize,
            PhaseConfig::Gaussian {
                amplitude: 1.0,
                center: 0.0,
                sigma: 0.1,
            },
        ]);
        let report = run_experiment(&cfg, Path::new(".")).unwrap();
        assert_eq!(report.lie.dimension, 15);
        assert_eq!(report.phases.len(), 2);
        // I/n is a fixed point: nothing moves
        for p in &report.phases {
            assert!(p.heat.abs() < 1e-12 && p.work.abs() < 1e-12 && p.entropy_change.abs() < 1e-12);
        }
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,y,O,U,S,D");
        assert_eq!(lines.len() - 1, cfg.n_slots * cfg.phases.len() + 1);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
        let summary: Summary =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary, report.summary());
        assert!(summary.j_terminal.is_some());
    }

    #[test]
    fn non_psd_effective_state_is_numerical() {
        let cfg = small(vec![PhaseConfig::Gaussian {
            amplitude: 0.0,
            center: 0.0,
            sigma: 0.1,
        }]);
        let cfg = ExperimentConfig {
            initial_state: InitialState::AllUp,
            ..cfg
        };
        match run_experiment(&cfg, Path::new(".")) {
            Ok(report) => assert!(report.phases[0].heat.is_finite()),
            Err(e) => {
                assert!(e.is_numerical(), "{e}");
                assert!(e.to_string().contains("record thermo"));
            }
        }
    }
}
