use std::sync::OnceLock;

use obs_thermo::dynamics::{propagate_terminal, BilinearControlSystem, ControlSchedule};
use obs_thermo::lie::{close_algebra, gram_schmidt, observability_space, project_onto, OperatorBasis};
use obs_thermo::models::{all_up_state, build_central_spin, CentralSpinSpec};
use obs_thermo::observability::{
    decompose_state, measured_output, output_from_decomposition, split_hamiltonian, DensityState,
};
use obs_thermo::operator::{herm_eig, hs_inner, OperatorMatrix};
use obs_thermo::sampling::{random_density, random_hermitian};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Op = OperatorMatrix<f64>;

struct Fixture {
    sys: BilinearControlSystem<f64>,
    v: OperatorBasis<f64>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let sys = build_central_spin(&CentralSpinSpec::uniform(3, 10.0, -3.0)).unwrap();
        let (lie, _) = close_algebra(&sys.generators(), 1e-9).unwrap();
        let (v, _) = observability_space(&lie, sys.observable(), 1e-9).unwrap();
        Fixture {
            sys,
            v: gram_schmidt(&v).unwrap(),
        }
    })
}

/// Traceless Hermitian direction orthogonal to `span V`, unit operator norm.
fn unobservable_direction(v: &OperatorBasis<f64>, rng: &mut ChaCha8Rng) -> Op {
    let n = v.dim();
    let x = random_hermitian::<f64, _>(n, rng);
    let x = &x - &Op::identity(n).scale(x.trace().re / n as f64);
    let perp = project_onto(v, &x).unwrap().residual;
    let spec = herm_eig(&perp).unwrap();
    perp.scale(1.0 / spec.max().abs().max(spec.min().abs()))
}

#[test]
fn output_identity_on_random_states() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = f.sys.observable();
    for _ in 0..1000 {
        let rho = random_density::<f64, _>(16, &mut rng);
        let dec = decompose_state(&rho, &f.v).unwrap();
        let y = measured_output(&rho, s).unwrap();
        assert!((y - output_from_decomposition(&dec, s).unwrap()).abs() < 1e-10);
        let recon = &(&dec.rho_o + &dec.rho_u) + &Op::identity(16).scale(1.0 / 16.0);
        assert!(recon.max_diff(rho.matrix()) < 1e-10);
        assert!(f
            .v
            .elements()
            .iter()
            .all(|b| hs_inner(b, &dec.rho_u).unwrap().norm() < 1e-10));
    }
}

#[test]
fn all_up_state_has_zero_output() {
    let f = fixture();
    assert!(measured_output(&all_up_state(3), f.sys.observable()).unwrap().abs() < 1e-15);
}

#[test]
fn microcanonical_states_give_trace_output() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = f.sys.observable();
    for _ in 0..10 {
        let dir = unobservable_direction(&f.v, &mut rng);
        let rho = DensityState::new(&Op::identity(16).scale(1.0 / 16.0) + &dir.scale(1.0 / 32.0)).unwrap();
        let y = measured_output(&rho, s).unwrap();
        assert!((y - s.trace().re / 16.0).abs() < 1e-10);
        assert!(decompose_state(&rho, &f.v).unwrap().rho_o.max_abs() < 1e-12);
    }
}

#[test]
fn states_with_equal_theta_are_indistinguishable() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // mix toward I/n so a small unobservable shift keeps positivity
    let base = random_density::<f64, _>(16, &mut rng);
    let rho1 = DensityState::new(&base.matrix().scale(0.5) + &Op::identity(16).scale(0.5 / 16.0)).unwrap();
    let shift = unobservable_direction(&f.v, &mut rng).scale(0.5 / 16.0 * 0.9);
    let rho2 = DensityState::new(rho1.matrix() + &shift).unwrap();
    let t1 = decompose_state(&rho1, &f.v).unwrap().theta;
    let t2 = decompose_state(&rho2, &f.v).unwrap().theta;
    assert!(t1.iter().zip(&t2).all(|(a, b)| (a - b).abs() < 1e-12));
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let rows = (0..20).map(|_| vec![rng.random_range(-5.0..5.0)]).collect();
        let sched = ControlSchedule::new(0.0, 1.0, rows).unwrap();
        let y1 = measured_output(&propagate_terminal(&f.sys, &sched, &rho1).unwrap(), f.sys.observable()).unwrap();
        let y2 = measured_output(&propagate_terminal(&f.sys, &sched, &rho2).unwrap(), f.sys.observable()).unwrap();
        worst = worst.max((y1 - y2).abs());
    }
    assert!(worst < 1e-8, "max output deviation {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent(s: u64) {
        let f = fixture();
        let rho = random_density::<f64, _>(16, &mut ChaCha8Rng::seed_from_u64(s));
        let dec = decompose_state(&rho, &f.v).unwrap();
        let eff = DensityState::new(dec.effective_state.clone());
        // the effective state need not be a valid density matrix; project it directly
        let again = project_onto(&f.v, &dec.rho_o).unwrap();
        prop_assert!(again.coeffs.iter().zip(&dec.theta).all(|(a, b)| (a - b).abs() < 1e-10));
        if let Ok(eff) = eff {
            let theta2 = decompose_state(&eff, &f.v).unwrap().theta;
            prop_assert!(theta2.iter().zip(&dec.theta).all(|(a, b)| (a - b).abs() < 1e-10));
        }
    }

    #[test]
    fn hamiltonian_split_is_orthogonal(s: u64) {
        let f = fixture();
        let h = random_hermitian::<f64, _>(16, &mut ChaCha8Rng::seed_from_u64(s));
        let split = split_hamiltonian(&h, &f.v).unwrap();
        prop_assert!((&split.h_o + &split.h_u).max_diff(&h) < 1e-10);
        let hu0 = &split.h_u - &Op::identity(16).scale(split.h_u.trace().re / 16.0);
        prop_assert!(hs_inner(&split.h_o, &hu0).unwrap().norm() < 1e-10 * h.norm().powi(2));
        prop_assert!(project_onto(&f.v, &split.h_u).unwrap().in_span.max_abs() < 1e-10 * h.norm());
    }
}
