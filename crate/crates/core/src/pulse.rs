//! GRAPE gradient ascent on the terminal objective `J[u] = ⟨S, ρ(τ)⟩`.
//!
//! Gradients use exact derivatives of the slot propagators, so they are valid
//! for any slot length, not only in the small-`Δt` limit.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{BilinearControlSystem, ControlSchedule};
use crate::error::{Error, Result};
use crate::observability::DensityState;
use crate::operator::{
    c, cis_neg, herm_eig_unchecked, hs_inner_unchecked, propagator_from_spectrum, OperatorMatrix, Spectrum,
};
use crate::scalar::Real;

/// Sufficient-increase constant of the Armijo test.
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StepRule {
    Fixed {
        step: f64,
    },
    /// Armijo backtracking; the trial step grows by `grow` after every accepted step.
    Backtracking {
        initial: f64,
        shrink: f64,
        grow: f64,
        max_shrinks: usize,
    },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            initial: 1.0,
            shrink: 0.5,
            grow: 2.0,
            max_shrinks: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitPulse {
    Zeros,
    /// Uniform in `[−scale, scale]`.
    Random {
        seed: u64,
        scale: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Maximize,
    Minimize,
}

impl Target {
    fn sign(self) -> f64 {
        match self {
            Target::Maximize => 1.0,
            Target::Minimize => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub n_slots: usize,
    pub horizon: f64,
    pub max_iters: usize,
    pub gradient_tol: f64,
    #[serde(default)]
    pub step_rule: StepRule,
    pub init_pulse: InitPulse,
    #[serde(default)]
    pub target: Target,
    /// Optional box bound `|u| ≤ clip` applied after each step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            n_slots: 1000,
            horizon: 1.0,
            max_iters: 500,
            gradient_tol: 1e-8,
            step_rule: StepRule::default(),
            init_pulse: InitPulse::Random { seed: 0, scale: 1.0 },
            target: Target::Maximize,
            clip: None,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n_slots == 0 {
            return bad("n_slots must be at least 1");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if !(self.gradient_tol > 0.0) {
            return bad("gradient_tol must be positive");
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0) => return bad("fixed step must be positive"),
            StepRule::Backtracking {
                initial, shrink, grow, ..
            } if !(initial > 0.0 && shrink > 0.0 && shrink < 1.0 && grow >= 1.0) => {
                return bad("backtracking needs initial > 0, 0 < shrink < 1, grow >= 1")
            }
            _ => {}
        }
        if let InitPulse::Random { scale, .. } = self.init_pulse {
            if !(scale >= 0.0 && scale.is_finite()) {
                return bad("init scale must be finite and non-negative");
            }
        }
        if matches!(self.clip, Some(b) if !(b > 0.0)) {
            return bad("clip bound must be positive");
        }
        Ok(())
    }

    pub fn seed(&self) -> Option<u64> {
        match self.init_pulse {
            InitPulse::Random { seed, .. } => Some(seed),
            InitPulse::Zeros => None,
        }
    }

    /// Starting schedule on `[0, horizon]`.
    pub fn initial_schedule<T: Real>(&self, n_controls: usize) -> Result<ControlSchedule<T>> {
        self.validate()?;
        let rows = match self.init_pulse {
            InitPulse::Zeros => vec![vec![T::zero(); n_controls]; self.n_slots],
            InitPulse::Random { seed, scale } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..self.n_slots)
                    .map(|_| {
                        (0..n_controls)
                            .map(|_| T::lit(scale * rng.random_range(-1.0..=1.0)))
                            .collect()
                    })
                    .collect()
            }
        };
        ControlSchedule::new(T::zero(), T::lit(self.horizon), rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult<T: Real> {
    pub schedule: ControlSchedule<T>,
    /// `J` before the first step and after every accepted step.
    pub objective_history: Vec<T>,
    pub terminal_output: T,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the gradient at the returned schedule.
    pub gradient_norm: T,
    pub seed: Option<u64>,
}

/// `J = ⟨S, ρ(τ)⟩`.
pub fn objective<T: Real>(
    sys: &BilinearControlSystem<T>,
    rho0: &DensityState<T>,
    sched: &ControlSchedule<T>,
) -> Result<T> {
    let end = crate::dynamics::propagate_terminal(sys, sched, rho0)?;
    Ok(hs_inner_unchecked(sys.observable(), end.matrix()).re)
}

/// Divided differences of `λ ↦ e^{−iλΔt}` on the spectrum, the kernel of the
/// propagator's Fréchet derivative:
/// `Γₐᵦ = −iΔt · e^{−i(λₐ+λᵦ)Δt/2} · sinc((λₐ−λᵦ)Δt/2)`.
fn divided_differences<T: Real>(spec: &Spectrum<T>, dt: T) -> DMatrix<Complex<T>> {
    let n = spec.eigenvalues.len();
    let half = T::lit(0.5);
    DMatrix::from_fn(n, n, |a, b| {
        let (la, lb) = (spec.eigenvalues[a], spec.eigenvalues[b]);
        let x = (la - lb) * dt * half;
        let sinc = if x.abs() < T::lit(1e-8) {
            T::one() - x * x / T::lit(6.0)
        } else {
            x.sin() / x
        };
        cis_neg((la + lb) * dt * half) * c(T::zero(), -dt * sinc)
    })
}

/// Objective and its gradient `∂J/∂u[k][j]` via a forward sweep and a
/// backward costate sweep `Λₖ = Uₖ† Λₖ₊₁ Uₖ`, `Λ_N = S`.
pub fn objective_and_gradient<T: Real>(
    sys: &BilinearControlSystem<T>,
    rho0: &DensityState<T>,
    sched: &ControlSchedule<T>,
) -> Result<(T, Vec<Vec<T>>)> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    if sched.n_controls() != sys.n_controls() {
        return Err(Error::LengthMismatch {
            what: "schedule controls",
            expected: sys.n_controls(),
            found: sched.n_controls(),
        });
    }
    let dt = sched.dt();
    let spectra: Vec<Spectrum<T>> = sched
        .amplitudes()
        .iter()
        .map(|u| Ok(herm_eig_unchecked(&sys.hamiltonian(u)?)))
        .collect::<Result<_>>()?;
    let props: Vec<OperatorMatrix<T>> = spectra.iter().map(|s| propagator_from_spectrum(s, dt)).collect();
    let mut states = Vec::with_capacity(props.len() + 1);
    states.push(rho0.matrix().clone());
    for u in &props {
        let next = states.last().expect("nonempty").conjugate_by(u);
        states.push(next);
    }
    let j = hs_inner_unchecked(sys.observable(), states.last().expect("nonempty")).re;

    let two = T::lit(2.0);
    let mut grad = vec![vec![T::zero(); sys.n_controls()]; props.len()];
    let mut costate = sys.observable().clone();
    for k in (0..props.len()).rev() {
        let spec = &spectra[k];
        let u_dag = props[k].dagger();
        // ∂J/∂u = 2 Re Tr(dU · ρₖ U† Λₖ₊₁)
        let m = &(&states[k] * &u_dag) * &costate;
        let m_eig = spec.to_eigenbasis(&m);
        let gamma = divided_differences(spec, dt);
        for (jc, hc) in sys.controls().iter().enumerate() {
            let hc_eig = spec.to_eigenbasis(hc);
            let mut tr = c(T::zero(), T::zero());
            for a in 0..gamma.nrows() {
                for b in 0..gamma.ncols() {
                    tr += gamma[(a, b)] * hc_eig[(a, b)] * m_eig[(b, a)];
                }
            }
            grad[k][jc] = two * tr.re;
        }
        costate = &(&u_dag * &costate) * &props[k];
    }
    Ok((j, grad))
}

/// Central differences `(J(uₖ + ε) − J(uₖ − ε)) / 2ε` for every slot and control.
pub fn finite_diff_gradient<T: Real>(
    sys: &BilinearControlSystem<T>,
    rho0: &DensityState<T>,
    sched: &ControlSchedule<T>,
    eps: T,
) -> Result<Vec<Vec<T>>> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let mut work = sched.clone();
    let mut grad = vec![vec![T::zero(); sched.n_controls()]; sched.n_slots()];
    for (k, row) in grad.iter_mut().enumerate() {
        for (j, g) in row.iter_mut().enumerate() {
            let base = sched.slot(k)[j];
            work.slot_mut(k)[j] = base + eps;
            let plus = objective(sys, rho0, &work)?;
            work.slot_mut(k)[j] = base - eps;
            let minus = objective(sys, rho0, &work)?;
            work.slot_mut(k)[j] = base;
            *g = (plus - minus) / (T::lit(2.0) * eps);
        }
    }
    Ok(grad)
}

fn max_abs<T: Real>(g: &[Vec<T>]) -> T {
    g.iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()))
}

/// `⟨dir, to − from⟩`.
fn directional_gain<T: Real>(dir: &[Vec<T>], from: &ControlSchedule<T>, to: &ControlSchedule<T>) -> T {
    let moved = from
        .amplitudes()
        .iter()
        .flatten()
        .zip(to.amplitudes().iter().flatten())
        .map(|(a, b)| *b - *a);
    dir.iter()
        .flatten()
        .zip(moved)
        .fold(T::zero(), |acc, (d, m)| acc + *d * m)
}

fn stepped<T: Real>(
    sched: &ControlSchedule<T>,
    grad: &[Vec<T>],
    alpha: T,
    clip: Option<f64>,
) -> Result<ControlSchedule<T>> {
    let mut next = sched.clone();
    for (k, row) in grad.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            let mut u = sched.slot(k)[j] + alpha * *g;
            if let Some(b) = clip {
                let b = T::lit(b);
                u = u.max(-b).min(b);
            }
            next.slot_mut(k)[j] = u;
        }
    }
    Ok(next)
}

/// Gradient ascent from the configured initial pulse.
pub fn grape_optimize<T: Real>(
    sys: &BilinearControlSystem<T>,
    rho0: &DensityState<T>,
    cfg: &OptimizationConfig,
) -> Result<OptimizationResult<T>> {
    let init = cfg.initial_schedule(sys.n_controls())?;
    grape_optimize_from(sys, rho0, cfg, init)
}

/// Gradient ascent from a supplied schedule (its grid overrides `n_slots`/`horizon`).
pub fn grape_optimize_from<T: Real>(
    sys: &BilinearControlSystem<T>,
    rho0: &DensityState<T>,
    cfg: &OptimizationConfig,
    init: ControlSchedule<T>,
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    let sign = T::lit(cfg.target.sign());
    let zero_step: Vec<Vec<T>> = vec![vec![T::zero(); init.n_controls()]; init.n_slots()];
    let mut sched = stepped(&init, &zero_step, T::zero(), cfg.clip)?;
    let (mut j, mut grad) = objective_and_gradient(sys, rho0, &sched)?;
    if !j.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut history = vec![j];
    let mut iterations = 0;
    let mut alpha = match cfg.step_rule {
        StepRule::Fixed { step } => T::lit(step),
        StepRule::Backtracking { initial, .. } => T::lit(initial),
    };
    let tol = T::lit(cfg.gradient_tol);
    while iterations < cfg.max_iters && max_abs(&grad) >= tol {
        iterations += 1;
        let dir: Vec<Vec<T>> = grad.iter().map(|r| r.iter().map(|g| sign * *g).collect()).collect();
        let next = match cfg.step_rule {
            StepRule::Fixed { .. } => {
                let next = stepped(&sched, &dir, alpha, cfg.clip)?;
                if next.amplitudes().iter().flatten().any(|u| !u.is_finite()) {
                    return Err(Error::DivergentStep { iteration: iterations });
                }
                Some(next)
            }
            StepRule::Backtracking {
                shrink,
                grow,
                max_shrinks,
                ..
            } => {
                let mut accepted = None;
                for _ in 0..=max_shrinks {
                    let trial = stepped(&sched, &dir, alpha, cfg.clip)?;
                    let jt = objective(sys, rho0, &trial)?;
                    if !jt.is_finite() {
                        return Err(Error::NonFiniteObjective { iteration: iterations });
                    }
                    // projected Armijo: predicted gain along the actual (clipped) displacement
                    let predicted = directional_gain(&dir, &sched, &trial);
                    if predicted > T::zero() && sign * (jt - j) >= T::lit(ARMIJO) * predicted {
                        accepted = Some(trial);
                        alpha *= T::lit(grow);
                        break;
                    }
                    alpha *= T::lit(shrink);
                }
                accepted
            }
        };
        let Some(next) = next else {
            // no ascent step at machine precision: stationary for practical purposes
            break;
        };
        sched = next;
        let (jn, gn) = objective_and_gradient(sys, rho0, &sched)?;
        if !jn.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: iterations });
        }
        j = jn;
        grad = gn;
        history.push(j);
    }
    let gradient_norm = max_abs(&grad);
    Ok(OptimizationResult {
        schedule: sched,
        objective_history: history,
        terminal_output: j,
        converged: gradient_norm < tol,
        iterations,
        gradient_norm,
        seed: cfg.seed(),
    })
}
