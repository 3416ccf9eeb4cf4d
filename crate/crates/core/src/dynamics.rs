//! Piecewise-constant propagation of bilinear control systems and
//! thermodynamic trajectory recording.

use crate::error::{Error, Result};
use crate::lie::OperatorBasis;
use crate::observability::DensityState;
use crate::operator::{herm_eig_unchecked, propagator_from_spectrum, OperatorMatrix, DEFAULT_TOL};
use crate::scalar::Real;
use crate::thermo::{sample_at, ThermoSample};

/// `H(u) = H₀ + Σᵢ uᵢ Hᵢ` with a measured observable `S`.
#[derive(Clone, Debug)]
pub struct BilinearControlSystem<T: Real> {
    drift: OperatorMatrix<T>,
    controls: Vec<OperatorMatrix<T>>,
    observable: OperatorMatrix<T>,
}

impl<T: Real> BilinearControlSystem<T> {
    pub fn new(
        drift: OperatorMatrix<T>,
        controls: Vec<OperatorMatrix<T>>,
        observable: OperatorMatrix<T>,
    ) -> Result<Self> {
        let tol = T::lit(DEFAULT_TOL);
        drift.ensure_hermitian(tol)?;
        drift.check_dim(&observable)?;
        observable.ensure_hermitian(tol)?;
        for h in &controls {
            drift.check_dim(h)?;
            h.ensure_hermitian(tol)?;
        }
        Ok(Self {
            drift,
            controls,
            observable,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn drift(&self) -> &OperatorMatrix<T> {
        &self.drift
    }

    pub fn controls(&self) -> &[OperatorMatrix<T>] {
        &self.controls
    }

    pub fn observable(&self) -> &OperatorMatrix<T> {
        &self.observable
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// Drift followed by the controls: the generating set of the dynamical Lie algebra.
    pub fn generators(&self) -> Vec<OperatorMatrix<T>> {
        std::iter::once(self.drift.clone())
            .chain(self.controls.iter().cloned())
            .collect()
    }

    pub fn hamiltonian(&self, amplitudes: &[T]) -> Result<OperatorMatrix<T>> {
        if amplitudes.len() != self.controls.len() {
            return Err(Error::LengthMismatch {
                what: "slot amplitudes",
                expected: self.controls.len(),
                found: amplitudes.len(),
            });
        }
        Ok(self
            .controls
            .iter()
            .zip(amplitudes)
            .fold(self.drift.clone(), |h, (hc, u)| h.add_scaled(*u, hc)))
    }
}

/// Piecewise-constant amplitudes on a uniform grid over `[t0, t1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSchedule<T: Real> {
    t0: T,
    t1: T,
    /// One row per slot, one column per control.
    amplitudes: Vec<Vec<T>>,
}

impl<T: Real> ControlSchedule<T> {
    pub fn new(t0: T, t1: T, amplitudes: Vec<Vec<T>>) -> Result<Self> {
        if !(t1 > t0) {
            return Err(Error::InvalidSchedule(format!(
                "t1 = {} must exceed t0 = {}",
                t1.as_f64(),
                t0.as_f64()
            )));
        }
        if amplitudes.is_empty() {
            return Err(Error::InvalidSchedule("no slots".into()));
        }
        let width = amplitudes[0].len();
        for (k, row) in amplitudes.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidSchedule(format!(
                    "slot {k} has {} amplitudes, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|u| !u.is_finite()) {
                return Err(Error::InvalidSchedule(format!("slot {k} has a non-finite amplitude")));
            }
        }
        Ok(Self { t0, t1, amplitudes })
    }

    pub fn zeros(t0: T, t1: T, n_slots: usize, n_controls: usize) -> Result<Self> {
        Self::new(t0, t1, vec![vec![T::zero(); n_controls]; n_slots])
    }

    /// Samples `f(t)` at slot midpoints for a single control.
    pub fn from_fn(t0: T, t1: T, n_slots: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if n_slots == 0 {
            return Err(Error::InvalidSchedule("no slots".into()));
        }
        let dt = (t1 - t0) / T::lit(n_slots as f64);
        let rows = (0..n_slots)
            .map(|k| vec![f(t0 + (T::lit(k as f64) + T::lit(0.5)) * dt)])
            .collect();
        Self::new(t0, t1, rows)
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn t1(&self) -> T {
        self.t1
    }

    pub fn n_slots(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_controls(&self) -> usize {
        self.amplitudes[0].len()
    }

    pub fn dt(&self) -> T {
        (self.t1 - self.t0) / T::lit(self.n_slots() as f64)
    }

    /// Start of slot `k`; `k = n_slots` gives `t1`.
    pub fn boundary(&self, k: usize) -> T {
        self.t0 + T::lit(k as f64) * self.dt()
    }

    pub fn amplitudes(&self) -> &[Vec<T>] {
        &self.amplitudes
    }

    pub fn slot(&self, k: usize) -> &[T] {
        &self.amplitudes[k]
    }

    pub(crate) fn slot_mut(&mut self, k: usize) -> &mut [T] {
        &mut self.amplitudes[k]
    }
}

/// Single-control Gaussian `A·exp(−(t − t_c)²/(2σ²))` sampled at slot midpoints.
pub fn gaussian_schedule<T: Real>(
    t0: T,
    t1: T,
    n_slots: usize,
    amplitude: T,
    center: T,
    sigma: T,
) -> Result<ControlSchedule<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {}",
            sigma.as_f64()
        )));
    }
    let two_var = T::lit(2.0) * sigma * sigma;
    ControlSchedule::from_fn(t0, t1, n_slots, |t| {
        let d = t - center;
        amplitude * (-(d * d) / two_var).exp()
    })
}

fn check_compatible<T: Real>(sys: &BilinearControlSystem<T>, sched: &ControlSchedule<T>) -> Result<()> {
    if sched.n_controls() != sys.n_controls() {
        return Err(Error::LengthMismatch {
            what: "schedule controls",
            expected: sys.n_controls(),
            found: sched.n_controls(),
        });
    }
    Ok(())
}

/// Slot propagators `Uₖ = exp(−i H(uₖ) Δt)`.
pub fn slot_propagators<T: Real>(
    sys: &BilinearControlSystem<T>,
    sched: &ControlSchedule<T>,
) -> Result<Vec<OperatorMatrix<T>>> {
    check_compatible(sys, sched)?;
    let dt = sched.dt();
    sched
        .amplitudes()
        .iter()
        .map(|u| Ok(propagator_from_spectrum(&herm_eig_unchecked(&sys.hamiltonian(u)?), dt)))
        .collect()
}

/// States at every slot boundary, `n_slots + 1` of them, starting with `rho0`.
pub fn propagate<T: Real>(
    sys: &BilinearControlSystem<T>,
    sched: &ControlSchedule<T>,
    rho0: &DensityState<T>,
) -> Result<Vec<DensityState<T>>> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    let mut states = Vec::with_capacity(sched.n_slots() + 1);
    states.push(rho0.clone());
    for u in slot_propagators(sys, sched)? {
        let next = states.last().expect("nonempty").evolve(&u);
        states.push(next);
    }
    Ok(states)
}

/// Terminal state only.
pub fn propagate_terminal<T: Real>(
    sys: &BilinearControlSystem<T>,
    sched: &ControlSchedule<T>,
    rho0: &DensityState<T>,
) -> Result<DensityState<T>> {
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            found: rho0.dim(),
        });
    }
    Ok(slot_propagators(sys, sched)?
        .iter()
        .fold(rho0.clone(), |rho, u| rho.evolve(u)))
}

#[derive(Clone, Debug)]
pub struct ThermoTrajectory<T: Real> {
    pub samples: Vec<ThermoSample>,
    pub states: Option<Vec<DensityState<T>>>,
}

impl<T: Real> ThermoTrajectory<T> {
    pub fn first(&self) -> &ThermoSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &ThermoSample {
        self.samples.last().expect("nonempty trajectory")
    }

    /// `Q = 𝒰(end) − 𝒰(start)`.
    pub fn heat(&self) -> f64 {
        self.last().unobs_energy - self.first().unobs_energy
    }

    /// `W = 𝒪(end) − 𝒪(start)`.
    pub fn work(&self) -> f64 {
        self.last().obs_energy - self.first().obs_energy
    }

    pub fn entropy_change(&self) -> f64 {
        self.last().entropy - self.first().entropy
    }

    pub fn series(&self, f: impl Fn(&ThermoSample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
}

/// Samples every boundary state against the Hamiltonian of the slot it opens;
/// the final boundary uses the last slot.
pub fn record_thermo<T: Real>(
    sys: &BilinearControlSystem<T>,
    sched: &ControlSchedule<T>,
    v: &OperatorBasis<T>,
    states: Vec<DensityState<T>>,
    keep_states: bool,
) -> Result<ThermoTrajectory<T>> {
    check_compatible(sys, sched)?;
    if states.len() != sched.n_slots() + 1 {
        return Err(Error::LengthMismatch {
            what: "trajectory states",
            expected: sched.n_slots() + 1,
            found: states.len(),
        });
    }
    let last = sched.n_slots() - 1;
    let samples = states
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let h = sys.hamiltonian(sched.slot(k.min(last)))?;
            sample_at(sched.boundary(k), rho, &h, sys.observable(), v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermoTrajectory {
        samples,
        states: keep_states.then_some(states),
    })
}
