use obs_thermo::operator::{commutator, embed_site, expm, expm_unitary, herm_eig, hs_inner, pauli, OperatorMatrix};
use obs_thermo::sampling::random_hermitian;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Op = OperatorMatrix<f64>;

fn herm(n: usize, seed: u64) -> Op {
    random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hs_inner_is_conjugate_symmetric(n in 2usize..6, s1: u64, s2: u64) {
        let a = Op::from_fn(n, |i, j| herm(n, s1).get(i, j) * num_complex::Complex::new(1.0, (i + j) as f64));
        let b = herm(n, s2);
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12 * (1.0 + ab.norm()));
        let aa = hs_inner(&a, &a).unwrap();
        prop_assert!(aa.re >= 0.0 && aa.im.abs() < 1e-12 * aa.re.max(1.0));
    }

    #[test]
    fn jacobi_identity(n in 2usize..6, s: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (a, b, c) = (random_hermitian::<f64, _>(n, &mut rng), random_hermitian(n, &mut rng), random_hermitian(n, &mut rng));
        let br = |x: &Op, y: &Op| commutator(x, y).unwrap();
        let total = &(&br(&a, &br(&b, &c)) + &br(&b, &br(&c, &a))) + &br(&c, &br(&a, &b));
        prop_assert!(total.max_abs() < 1e-10 * (1.0 + a.norm() * b.norm() * c.norm()));
    }

    #[test]
    fn commutator_of_hermitians_is_skew(n in 2usize..6, s1: u64, s2: u64) {
        let c = commutator(&herm(n, s1), &herm(n, s2)).unwrap();
        prop_assert!(c.is_skew_hermitian(1e-12));
    }

    #[test]
    fn propagator_group_law(n in 2usize..9, s: u64, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let h = herm(n, s);
        let u1 = expm_unitary(&h, t1).unwrap();
        let u2 = expm_unitary(&h, t2).unwrap();
        let u12 = expm_unitary(&h, t1 + t2).unwrap();
        prop_assert!((&u1 * &u2).max_diff(&u12) < 1e-10);
        prop_assert!(u12.is_unitary(1e-12));
    }

    #[test]
    fn eigen_and_taylor_exponentials_agree(n in 2usize..9, s: u64, dt in 0.0f64..1.0) {
        let h = herm(n, s);
        let taylor = expm(&h.scale_complex(num_complex::Complex::new(0.0, -dt)));
        prop_assert!(expm_unitary(&h, dt).unwrap().max_diff(&taylor) < 1e-11);
    }

    #[test]
    fn spectrum_reconstructs(n in 1usize..9, s: u64) {
        let h = herm(n, s);
        let spec = herm_eig(&h).unwrap();
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(spec.map_real(|x| x).max_diff(&h) < 1e-10 * (1.0 + h.norm()));
    }

    #[test]
    fn distinct_site_embeddings_commute(sites in 2usize..5, i in 0usize..5, j in 0usize..5, pi in 0usize..3, pj in 0usize..3) {
        prop_assume!(i < sites && j < sites && i != j);
        let p = [pauli::x::<f64>(), pauli::y(), pauli::z()];
        let a = embed_site(&p[pi], i, sites).unwrap();
        let b = embed_site(&p[pj], j, sites).unwrap();
        prop_assert_eq!(commutator(&a, &b).unwrap().max_abs(), 0.0);
        prop_assert_eq!(a.trace().re, 0.0);
    }
}

#[test]
fn sixteen_dim_propagator_is_unitary() {
    let h = herm(16, 99);
    assert!(expm_unitary(&h, 0.37).unwrap().is_unitary(1e-12));
}
