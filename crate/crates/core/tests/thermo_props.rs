//! Trajectory-level thermodynamic identities on a two-qubit system with a
//! diagonal observable space, where the effective state is always positive.

use obs_thermo::dynamics::{propagate, record_thermo, BilinearControlSystem, ControlSchedule, ThermoTrajectory};
use obs_thermo::lie::{gram_schmidt, OperatorBasis};
use obs_thermo::observability::DensityState;
use obs_thermo::operator::{kron, pauli, OperatorMatrix};
use obs_thermo::sampling::{random_density, random_hermitian};
use obs_thermo::thermo::{
    clausius_form, entropy_rate, fisher_pure, heat_rate_fisher, theta_rates, time_derivative, trapezoid,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Op = OperatorMatrix<f64>;

const SLOTS: usize = 1000;

fn diag_basis() -> OperatorBasis<f64> {
    let (z, i) = (pauli::z::<f64>(), pauli::identity::<f64>());
    let els = vec![kron(&z, &i), kron(&i, &z), kron(&z, &z)];
    gram_schmidt(&OperatorBasis::new(4, els, vec![0; 3]).unwrap()).unwrap()
}

struct Run {
    h: Op,
    v: OperatorBasis<f64>,
    states: Vec<DensityState<f64>>,
    traj: ThermoTrajectory<f64>,
    dt: f64,
}

fn run(seed: u64) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian::<f64, _>(4, &mut rng);
    let s = kron(&pauli::z(), &pauli::identity());
    let sys = BilinearControlSystem::new(h.clone(), vec![kron(&pauli::x(), &pauli::identity())], s).unwrap();
    let sched = ControlSchedule::zeros(0.0, 1.0, SLOTS, 1).unwrap();
    let rho0 = random_density(4, &mut rng);
    let v = diag_basis();
    let states = propagate(&sys, &sched, &rho0).unwrap();
    let traj = record_thermo(&sys, &sched, &v, states.clone(), false).unwrap();
    Run {
        h,
        v,
        states,
        traj,
        dt: sched.dt(),
    }
}

/// Deviation relative to the largest magnitude the series reaches.
fn rel(a: f64, b: f64, scale: &[f64]) -> f64 {
    (a - b).abs() / scale.iter().fold(1e-12f64, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn first_law_and_conservation(seed: u64) {
        let r = run(seed);
        let total: Vec<f64> = r.traj.series(|s| s.obs_energy + s.unobs_energy);
        prop_assert!(total.iter().all(|e| (e - total[0]).abs() < 1e-10));
        prop_assert!((r.traj.heat() + r.traj.work()).abs() < 1e-10);
        let q_dot = r.traj.series(|s| s.dissipation);
        let integrated = trapezoid(&q_dot, r.dt);
        prop_assert!((integrated - r.traj.heat()).abs() < 1e-5, "{} vs {}", integrated, r.traj.heat());
    }

    #[test]
    fn heat_rate_matches_unobservable_energy_derivative(seed: u64) {
        let r = run(seed);
        let fd = time_derivative(&r.traj.series(|s| s.unobs_energy), r.dt).unwrap();
        let q_dot = r.traj.series(|s| s.dissipation);
        for k in 1..SLOTS {
            prop_assert!(rel(q_dot[k], fd[k], &q_dot) < 1e-5, "k = {}: {} vs {}", k, q_dot[k], fd[k]);
        }
    }

    #[test]
    fn entropy_bounds_and_rate(seed: u64) {
        let r = run(seed);
        let s = r.traj.series(|s| s.entropy);
        prop_assert!(s.iter().all(|x| *x >= 0.0 && *x <= 4f64.ln() + 1e-12));
        // log of near-zero eigenvalues makes the second-order stencil the limiting error
        let fd = time_derivative(&s, r.dt).unwrap();
        for k in (1..SLOTS).step_by(37) {
            let exact = entropy_rate(&r.states[k], &r.h, &r.v).unwrap();
            prop_assert!(rel(exact, fd[k], &fd) < 1e-4, "k = {}: {} vs {}", k, exact, fd[k]);
            let clausius = clausius_form(&r.states[k], &r.h, &r.v).unwrap();
            prop_assert!((clausius - exact).abs() < 1e-9 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn fisher_heat_rate_matches_dissipation(seed: u64) {
        let r = run(seed);
        let fisher = fisher_pure(&r.v);
        let zero = vec![0.0; r.v.len()];
        for k in (0..=SLOTS).step_by(50) {
            let sample = &r.traj.samples[k];
            let theta_dot = theta_rates(&r.states[k], &r.h, &r.v);
            let q = heat_rate_fisher(&sample.theta, &theta_dot, &sample.h_coeffs, &zero, &fisher).unwrap();
            prop_assert!((q - sample.dissipation).abs() < 1e-10 * (1.0 + q.abs()));
        }
    }
}

#[test]
fn trajectory_stays_a_density_matrix() {
    let r = run(11);
    let (p0, last) = (r.states[0].purity(), r.states.last().unwrap());
    let trace = last.matrix().trace().re;
    assert!((trace - 1.0).abs() < 1e-10, "trace {trace}");
    assert!((last.purity() - p0).abs() < 1e-10);
}
