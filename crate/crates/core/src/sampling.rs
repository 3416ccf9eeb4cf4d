//! Random operators and states for invariant checks.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::observability::DensityState;
use crate::operator::{c, OperatorMatrix};
use crate::scalar::Real;

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    c(T::lit(rng.sample(StandardNormal)), T::lit(rng.sample(StandardNormal)))
}

/// Hermitian matrix with Gaussian entries (GUE up to scale).
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> OperatorMatrix<T> {
    OperatorMatrix::from_fn(n, |_, _| gaussian(rng)).hermitian_part()
}

/// Haar-random pure state.
pub fn random_pure_state<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityState<T> {
    let psi: Vec<Complex<T>> = (0..n).map(|_| gaussian(rng)).collect();
    DensityState::pure(&psi).expect("nonzero Gaussian vector")
}

/// Full-rank mixed state `G G† / Tr(G G†)` with Gaussian `G` (Hilbert–Schmidt measure).
pub fn random_density<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityState<T> {
    let g = OperatorMatrix::<T>::from_fn(n, |_, _| gaussian(rng));
    let m = &g * &g.dagger();
    let tr = m.trace().re;
    DensityState::new(m.scale(T::one() / tr).hermitian_part()).expect("Wishart matrix is a valid state")
}
