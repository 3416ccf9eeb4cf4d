//! Observability decomposition of states and Hamiltonians relative to an
//! orthonormal basis of `i𝓥`.
//!
//! `ρ = I/n + ρₒ + ρᵤ` with `ρₒ = Σᵢ ⟨Bᵢ, ρ⟩ Bᵢ` (positive projection) and
//! `ρᵤ` the traceless remainder orthogonal to the basis.

use crate::error::{Error, Result};
use crate::lie::{project_unchecked, OperatorBasis};
use crate::operator::{c, commutator_unchecked, herm_eig_unchecked, hs_inner_unchecked, OperatorMatrix, DEFAULT_TOL};
use crate::scalar::Real;

/// Hermitian, unit-trace, positive semidefinite density matrix.
#[derive(Clone, Debug)]
pub struct DensityState<T: Real> {
    matrix: OperatorMatrix<T>,
    purity: T,
}

impl<T: Real> DensityState<T> {
    pub fn new(matrix: OperatorMatrix<T>) -> Result<Self> {
        let tol = T::lit(DEFAULT_TOL);
        if !matrix.is_hermitian(tol) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:.3e})",
                matrix.hermitian_deviation().as_f64()
            )));
        }
        let tr = matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re.as_f64())));
        }
        let min = herm_eig_unchecked(&matrix).min();
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {:.3e}", min.as_f64())));
        }
        Ok(Self::trusted(matrix))
    }

    /// Skips validation; for states produced by unitary conjugation of a valid state.
    pub(crate) fn trusted(matrix: OperatorMatrix<T>) -> Self {
        let purity = hs_inner_unchecked(&matrix, &matrix).re;
        Self { matrix, purity }
    }

    /// `|ψ⟩⟨ψ|` for a normalised copy of `psi`.
    pub fn pure(psi: &[num_complex::Complex<T>]) -> Result<Self> {
        let norm2 = psi.iter().fold(T::zero(), |a, z| a + z.re * z.re + z.im * z.im);
        if norm2 == T::zero() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let inv = c(T::one() / norm2.sqrt(), T::zero());
        let scaled: Vec<_> = psi.iter().map(|z| *z * inv).collect();
        Ok(Self::trusted(OperatorMatrix::outer(&scaled)))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self::trusted(OperatorMatrix::identity(n).scale(T::one() / T::lit(n as f64)))
    }

    pub fn matrix(&self) -> &OperatorMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> OperatorMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> T {
        self.purity
    }

    pub fn is_pure(&self, tol: T) -> bool {
        (self.purity - T::one()).abs() <= tol
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn evolve(&self, u: &OperatorMatrix<T>) -> Self {
        Self::trusted(self.matrix.conjugate_by(u))
    }
}

#[derive(Clone, Debug)]
pub struct StateDecomposition<T: Real> {
    /// Component in `span i𝓥`.
    pub rho_o: OperatorMatrix<T>,
    /// Traceless component orthogonal to `i𝓥`.
    pub rho_u: OperatorMatrix<T>,
    /// `θᵢ = ⟨Bᵢ, ρ⟩`.
    pub theta: Vec<T>,
    /// `ρₒ + I/n`; not guaranteed to be positive semidefinite.
    pub effective_state: OperatorMatrix<T>,
}

pub fn decompose_state<T: Real>(rho: &DensityState<T>, v: &OperatorBasis<T>) -> Result<StateDecomposition<T>> {
    v.ensure_orthonormal()?;
    v.ensure_dim(rho.dim())?;
    let n = rho.dim();
    let mixed = OperatorMatrix::identity(n).scale(T::one() / T::lit(n as f64));
    let shifted = rho.matrix() - &mixed;
    let p = project_unchecked(v, &shifted);
    let effective_state = &p.in_span + &mixed;
    Ok(StateDecomposition {
        rho_o: p.in_span,
        rho_u: p.residual,
        theta: p.coeffs,
        effective_state,
    })
}

/// `y = ⟨S, ρ⟩ = Tr(Sρ)`.
pub fn measured_output<T: Real>(rho: &DensityState<T>, s: &OperatorMatrix<T>) -> Result<T> {
    rho.matrix().check_dim(s)?;
    s.ensure_hermitian(T::lit(DEFAULT_TOL))?;
    Ok(hs_inner_unchecked(s, rho.matrix()).re)
}

/// Output reconstructed from the observable component alone: `Tr(S)/n + ⟨S, ρₒ⟩`.
pub fn output_from_decomposition<T: Real>(dec: &StateDecomposition<T>, s: &OperatorMatrix<T>) -> Result<T> {
    dec.rho_o.check_dim(s)?;
    let n = T::lit(s.dim() as f64);
    Ok(s.trace().re / n + hs_inner_unchecked(s, &dec.rho_o).re)
}

#[derive(Clone, Debug)]
pub struct HamiltonianSplit<T: Real> {
    pub h_o: OperatorMatrix<T>,
    /// Remainder, including any identity component.
    pub h_u: OperatorMatrix<T>,
    /// `hⱼ = ⟨H, Bⱼ⟩`.
    pub h_coeffs: Vec<T>,
}

pub fn split_hamiltonian<T: Real>(h: &OperatorMatrix<T>, v: &OperatorBasis<T>) -> Result<HamiltonianSplit<T>> {
    v.ensure_orthonormal()?;
    v.ensure_dim(h.dim())?;
    let p = project_unchecked(v, h);
    Ok(HamiltonianSplit {
        h_o: p.in_span,
        h_u: p.residual,
        h_coeffs: p.coeffs,
    })
}

/// How a basis element behaves under the dynamics generated by an algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stationarity {
    CommutesWithAlgebra,
    SimultaneousEigenvector,
    Neither,
}

/// Classifies each `Bᵢ ∈ v`: commutes with every element of `lie`, is a common
/// eigenvector of `ad_H` for every `H ∈ lie`, or neither. Tolerance 1e-10
/// relative to `‖H‖‖Bᵢ‖`.
pub fn stationarity_check<T: Real>(v: &OperatorBasis<T>, lie: &OperatorBasis<T>) -> Vec<Stationarity> {
    let tol = T::lit(DEFAULT_TOL);
    v.elements()
        .iter()
        .map(|b| {
            let bn = b.norm();
            let bb = hs_inner_unchecked(b, b);
            let mut commutes = true;
            let mut eigen = true;
            for h in lie.elements() {
                let scale = tol * h.norm() * bn;
                let comm = commutator_unchecked(h, b);
                if comm.norm() <= scale {
                    continue;
                }
                commutes = false;
                let lambda = hs_inner_unchecked(b, &comm) / bb;
                let residual = &comm - &b.scale_complex(lambda);
                if residual.norm() > scale {
                    eigen = false;
                    break;
                }
            }
            match (commutes, eigen) {
                (true, _) => Stationarity::CommutesWithAlgebra,
                (false, true) => Stationarity::SimultaneousEigenvector,
                _ => Stationarity::Neither,
            }
        })
        .collect()
}
