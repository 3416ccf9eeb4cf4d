//! Invariant suite run against a configured system.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, SystemConfig};
use crate::dynamics::{propagate, ControlSchedule};
use crate::experiment::{compute_closure, ExperimentError};
use crate::lie::{close_algebra, is_ideal};
use crate::models::{build_central_spin, dim_formula, CentralSpinSpec};
use crate::observability::{decompose_state, measured_output, output_from_decomposition, split_hamiltonian};
use crate::operator::hs_inner;
use crate::pulse::{finite_diff_gradient, objective_and_gradient};
use crate::sampling::random_density;
use crate::thermo::{dissipation_operator, effective_spectrum, energies, heat_rate, time_derivative, PSD_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Runs the suite; `slow` adds the four-bath-spin closure check.
pub fn run_checks(cfg: &ExperimentConfig, base: &Path, slow: bool) -> Result<Vec<CheckOutcome>, ExperimentError> {
    cfg.validate()?;
    let sys = cfg.build_system(base)?;
    let rho0 = cfg.build_initial_state(base, sys.dim())?;
    let closure = compute_closure(&sys, cfg.rank_tol)?;
    let mut out = Vec::new();
    let setup = |step| move |source| ExperimentError::Setup { step, source };

    out.push(CheckOutcome::new(
        "closure",
        true,
        format!(
            "dim L = {} (depth {}), dim V = {} (depth {})",
            closure.lie_report.dimension,
            closure.lie_report.max_depth,
            closure.v_report.dimension,
            closure.v_report.max_depth
        ),
    ));
    if let SystemConfig::CentralSpin(spec) = &cfg.system {
        if spec.has_equal_couplings() {
            let expected = dim_formula(spec.n_bath as u64);
            out.push(CheckOutcome::new(
                "dim formula",
                closure.lie_report.dimension as u64 == expected,
                format!("closure {} vs formula {expected}", closure.lie_report.dimension),
            ));
        }
    }
    if slow {
        let sys4 = build_central_spin::<f64>(&CentralSpinSpec::uniform(4, 10.0, -3.0)).map_err(setup("build N=4"))?;
        let (_, report) = close_algebra(&sys4.generators(), cfg.rank_tol).map_err(setup("close N=4"))?;
        out.push(CheckOutcome::new(
            "dim formula N=4",
            report.dimension as u64 == dim_formula(4),
            format!("closure {} vs formula {}", report.dimension, dim_formula(4)),
        ));
    }

    let gram = closure.v.gram_deviation();
    out.push(CheckOutcome::new(
        "orthonormal V",
        gram < 1e-10,
        format!("max |G - I| = {gram:.3e}"),
    ));
    let ideal = is_ideal(&closure.v, &closure.lie, cfg.rank_tol);
    out.push(CheckOutcome::new("V ideal of L", ideal, "i[L, V] within V".into()));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rho = random_density::<f64, _>(sys.dim(), &mut rng);
        let dec = decompose_state(&rho, &closure.v).map_err(setup("decompose"))?;
        let y = measured_output(&rho, sys.observable()).map_err(setup("output"))?;
        let y_o = output_from_decomposition(&dec, sys.observable()).map_err(setup("output"))?;
        worst = worst.max((y - y_o).abs());
    }
    out.push(CheckOutcome::new(
        "output identity",
        worst < 1e-10,
        format!("max deviation {worst:.3e} over 100 states"),
    ));

    let dec0 = decompose_state(&rho0, &closure.v).map_err(setup("decompose"))?;
    let psd = effective_spectrum(&dec0);
    out.push(CheckOutcome::new(
        "effective state PSD",
        psd.is_ok(),
        match psd {
            Ok(spec) => format!("min eigenvalue {:.3e}", spec.min()),
            Err(e) => format!("{e} (tolerance {PSD_TOL:e})"),
        },
    ));

    // free evolution of the initial state under the drift
    let free = ControlSchedule::zeros(0.0, cfg.tau, cfg.n_slots, sys.n_controls()).map_err(setup("schedule"))?;
    let states = propagate(&sys, &free, &rho0).map_err(setup("propagate"))?;
    let split = split_hamiltonian(sys.drift(), &closure.v).map_err(setup("split"))?;
    let d = dissipation_operator(&split);
    let mut obs = Vec::with_capacity(states.len());
    let mut unobs = Vec::with_capacity(states.len());
    let mut qdot = Vec::with_capacity(states.len());
    let mut drift_trace = 0.0f64;
    let mut drift_purity = 0.0f64;
    for s in &states {
        let (o, u) = energies(s, &split).map_err(setup("energies"))?;
        obs.push(o);
        unobs.push(u);
        qdot.push(heat_rate(s, &d).map_err(setup("heat rate"))?);
        drift_trace = drift_trace.max((s.matrix().trace().re - 1.0).abs());
        drift_purity = drift_purity.max((s.purity() - rho0.purity()).abs());
    }
    let e0 = hs_inner(sys.drift(), rho0.matrix()).map_err(setup("energy"))?.re;
    let de = obs
        .iter()
        .zip(&unobs)
        .fold(0.0f64, |m, (o, u)| m.max((o + u - e0).abs()));
    out.push(CheckOutcome::new(
        "energy conservation",
        de < 1e-9,
        format!("max |dE| = {de:.3e}"),
    ));
    out.push(CheckOutcome::new(
        "unitarity",
        drift_trace < 1e-10 && drift_purity < 1e-10,
        format!("trace drift {drift_trace:.3e}, purity drift {drift_purity:.3e}"),
    ));
    let fd = time_derivative(&unobs, free.dt()).map_err(setup("derivative"))?;
    let worst_q = (1..fd.len() - 1).fold(0.0f64, |m, k| m.max((qdot[k] - fd[k]).abs() / qdot[k].abs().max(1.0)));
    out.push(CheckOutcome::new(
        "heat-rate identity",
        worst_q < 1e-5,
        format!("max relative deviation {worst_q:.3e}"),
    ));

    if sys.n_controls() > 0 {
        let rows = (0..10)
            .map(|k| vec![(k as f64 * 0.7).sin(); sys.n_controls()])
            .collect();
        let sched = ControlSchedule::new(0.0, cfg.tau, rows).map_err(setup("schedule"))?;
        // a generic state: the configured one may be stationary (e.g. I/n)
        let rho = random_density::<f64, _>(sys.dim(), &mut rng);
        let (_, g) = objective_and_gradient(&sys, &rho, &sched).map_err(setup("gradient"))?;
        let f = finite_diff_gradient(&sys, &rho, &sched, 1e-5).map_err(setup("gradient"))?;
        let scale = g.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        let err = g
            .iter()
            .flatten()
            .zip(f.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale;
        out.push(CheckOutcome::new(
            "gradient",
            err < 1e-5,
            format!("relative deviation {err:.3e}"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitialState;

    #[test]
    fn small_central_spin_mixed_state_passes() {
        let mut cfg = ExperimentConfig::central_spin_protocol(CentralSpinSpec::uniform(1, 2.0, -1.0));
        cfg.n_slots = 200;
        cfg.initial_state = InitialState::MaximallyMixed;
        let checks = run_checks(&cfg, Path::new("."), false).unwrap();
        for c in &checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(checks.iter().any(|c| c.name == "dim formula"));
    }
}
