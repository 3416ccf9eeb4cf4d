//! Heat, work, entropy and dissipation accounting on top of the observability
//! decomposition, plus SLD Fisher information.
//!
//! Energies are expectation values of the split Hamiltonian: `𝒪 = ⟨Hₒ, ρ⟩`,
//! `𝒰 = ⟨Hᵤ, ρ⟩`. The heat rate is `d𝒰/dt`, the work rate `d𝒪/dt`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::OperatorBasis;
use crate::observability::{decompose_state, split_hamiltonian, DensityState, HamiltonianSplit, StateDecomposition};
use crate::operator::{c, commutator_unchecked, herm_eig_unchecked, hs_inner_unchecked, OperatorMatrix, Spectrum};
use crate::scalar::Real;

/// Eigenvalues of the effective state below this are an error.
pub const PSD_TOL: f64 = 1e-9;
/// Pairwise commutator bound for treating a basis as abelian.
pub const ABELIAN_TOL: f64 = 1e-10;
/// `|hⱼ|` and `|⟨𝒟ⱼ⟩|` below this are treated as zero in the Clausius form.
pub const CLAUSIUS_ZERO: f64 = 1e-12;
/// Eigenvalue pair sums below this are dropped when solving for SLDs.
pub const SLD_PAIR_TOL: f64 = 1e-12;

/// One point of a thermodynamic time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoSample {
    pub t: f64,
    pub obs_energy: f64,
    pub unobs_energy: f64,
    pub entropy: f64,
    pub dissipation: f64,
    pub output: f64,
    pub theta: Vec<f64>,
    pub h_coeffs: Vec<f64>,
}

/// `(𝒪, 𝒰)`.
pub fn energies<T: Real>(rho: &DensityState<T>, split: &HamiltonianSplit<T>) -> Result<(T, T)> {
    rho.matrix().check_dim(&split.h_o)?;
    Ok((
        hs_inner_unchecked(&split.h_o, rho.matrix()).re,
        hs_inner_unchecked(&split.h_u, rho.matrix()).re,
    ))
}

/// `𝒟 = i[Hₒ, Hᵤ]`.
pub fn dissipation_operator<T: Real>(split: &HamiltonianSplit<T>) -> OperatorMatrix<T> {
    commutator_unchecked(&split.h_o, &split.h_u).scale_complex(c(T::zero(), T::one()))
}

/// Instantaneous heat rate `⟨𝒟, ρ⟩` for a time-independent Hamiltonian.
pub fn heat_rate<T: Real>(rho: &DensityState<T>, d: &OperatorMatrix<T>) -> Result<T> {
    rho.matrix().check_dim(d)?;
    Ok(hs_inner_unchecked(d, rho.matrix()).re)
}

/// Derivative of a uniformly sampled series: centred in the interior,
/// second-order one-sided at the endpoints.
pub fn time_derivative<T: Real>(values: &[T], dt: T) -> Result<Vec<T>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: n });
    }
    let two = T::lit(2.0);
    let mut out = Vec::with_capacity(n);
    out.push((-T::lit(3.0) * values[0] + T::lit(4.0) * values[1] - values[2]) / (two * dt));
    for k in 1..n - 1 {
        out.push((values[k + 1] - values[k - 1]) / (two * dt));
    }
    out.push((T::lit(3.0) * values[n - 1] - T::lit(4.0) * values[n - 2] + values[n - 3]) / (two * dt));
    Ok(out)
}

/// Heat and work rates `(Q̇, Ẇ) = (d𝒰/dt, d𝒪/dt)` from recorded energy series.
pub fn heat_work_rates<T: Real>(obs: &[T], unobs: &[T], dt: T) -> Result<(Vec<T>, Vec<T>)> {
    if obs.len() != unobs.len() {
        return Err(Error::LengthMismatch {
            what: "unobservable energy series",
            expected: obs.len(),
            found: unobs.len(),
        });
    }
    Ok((time_derivative(unobs, dt)?, time_derivative(obs, dt)?))
}

/// Work rate `Ẇ = d𝒪/dt` on a recorded series.
pub fn work_rate<T: Real>(obs: &[T], dt: T) -> Result<Vec<T>> {
    time_derivative(obs, dt)
}

/// Trapezoidal integral of a uniformly sampled series.
pub fn trapezoid<T: Real>(values: &[T], dt: T) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let half = T::lit(0.5);
    let inner = values[1..values.len() - 1].iter().fold(T::zero(), |a, v| a + *v);
    dt * (inner + half * (values[0] + values[values.len() - 1]))
}

/// Eigendecomposition of `ρₒ + I/n` after the PSD guard: eigenvalues in
/// `[−PSD_TOL, 0)` are clamped to zero and the trace renormalised.
pub fn effective_spectrum<T: Real>(dec: &StateDecomposition<T>) -> Result<Spectrum<T>> {
    let mut spec = herm_eig_unchecked(&dec.effective_state);
    let min = spec.min();
    if min < -T::lit(PSD_TOL) {
        return Err(Error::NonPositiveEffectiveState {
            min_eigenvalue: min.as_f64(),
        });
    }
    spec.eigenvalues.iter_mut().for_each(|l| *l = l.max(T::zero()));
    let total = spec.eigenvalues.iter().fold(T::zero(), |a, l| a + *l);
    spec.eigenvalues.iter_mut().for_each(|l| *l /= total);
    Ok(spec)
}

/// `𝒮 = −Tr[(ρₒ + I/n) log(ρₒ + I/n)]` with `0 log 0 = 0`.
pub fn generalized_entropy<T: Real>(dec: &StateDecomposition<T>) -> Result<T> {
    let spec = effective_spectrum(dec)?;
    Ok(spec
        .eigenvalues
        .iter()
        .filter(|l| **l > T::zero())
        .fold(T::zero(), |acc, l| acc - *l * l.ln()))
}

/// `log` of the effective state on its support (zero on the kernel).
fn effective_log<T: Real>(dec: &StateDecomposition<T>) -> Result<OperatorMatrix<T>> {
    let spec = effective_spectrum(dec)?;
    Ok(spec.map_real(|l| if l > T::zero() { l.ln() } else { T::zero() }))
}

/// `θ̇ⱼ = ⟨Bⱼ, −i[H, ρ]⟩`.
pub fn theta_rates<T: Real>(rho: &DensityState<T>, h: &OperatorMatrix<T>, v: &OperatorBasis<T>) -> Vec<T> {
    let rho_dot = commutator_unchecked(h, rho.matrix()).scale_complex(c(T::zero(), -T::one()));
    v.elements()
        .iter()
        .map(|b| hs_inner_unchecked(b, &rho_dot).re)
        .collect()
}

/// `𝒮̇ = −⟨dρₒ/dt, log(ρₒ + I/n)⟩` under unitary dynamics generated by `h`.
pub fn entropy_rate<T: Real>(rho: &DensityState<T>, h: &OperatorMatrix<T>, v: &OperatorBasis<T>) -> Result<T> {
    let dec = decompose_state(rho, v)?;
    rho.matrix().check_dim(h)?;
    let log = effective_log(&dec)?;
    let rates = theta_rates(rho, h, v);
    Ok(v.elements()
        .iter()
        .zip(&rates)
        .fold(T::zero(), |acc, (b, r)| acc - *r * hs_inner_unchecked(b, &log).re))
}

/// Per-basis dissipators `𝒟ⱼ = −i hⱼ [Hᵤ, Bⱼ]` (orthonormal basis); they sum to `𝒟`.
pub fn basis_dissipators<T: Real>(split: &HamiltonianSplit<T>, v: &OperatorBasis<T>) -> Vec<OperatorMatrix<T>> {
    v.elements()
        .iter()
        .zip(&split.h_coeffs)
        .map(|(b, h)| commutator_unchecked(&split.h_u, b).scale_complex(c(T::zero(), -*h)))
        .collect()
}

/// Largest pairwise commutator norm in the basis, with its indices.
fn max_pair_commutator<T: Real>(v: &OperatorBasis<T>) -> (usize, usize, T) {
    let els = v.elements();
    let mut worst = (0, 0, T::zero());
    for i in 0..els.len() {
        for j in i + 1..els.len() {
            let n = commutator_unchecked(&els[i], &els[j]).norm();
            if n > worst.2 {
                worst = (i, j, n);
            }
        }
    }
    worst
}

/// Entropy rate assembled channel by channel from the per-basis dissipators,
/// valid when `v` is abelian:
///
/// `𝒮̇ = Σⱼ (⟨𝒟ⱼ⟩ / hⱼ) ⟨Bⱼ, log(ρₒ + I/n)⟩`.
///
/// The sign matches the positive projection convention for `ρₒ`.
pub fn clausius_form<T: Real>(rho: &DensityState<T>, h: &OperatorMatrix<T>, v: &OperatorBasis<T>) -> Result<T> {
    let (i, j, norm) = max_pair_commutator(v);
    if norm >= T::lit(ABELIAN_TOL) {
        return Err(Error::NotAbelian {
            i,
            j,
            norm: norm.as_f64(),
        });
    }
    let split = split_hamiltonian(h, v)?;
    let dec = decompose_state(rho, v)?;
    let log = effective_log(&dec)?;
    let zero = T::lit(CLAUSIUS_ZERO);
    let mut rate = T::zero();
    for (index, ((b, d), hj)) in v
        .elements()
        .iter()
        .zip(basis_dissipators(&split, v))
        .zip(&split.h_coeffs)
        .enumerate()
    {
        let expect = hs_inner_unchecked(&d, rho.matrix()).re;
        if hj.abs() < zero {
            if expect.abs() < zero {
                continue;
            }
            return Err(Error::SingularClausiusTerm { index });
        }
        rate += expect / *hj * hs_inner_unchecked(b, &log).re;
    }
    Ok(rate)
}

/// Real symmetric Fisher information matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix<T: Real> {
    pub entries: DMatrix<T>,
}

impl<T: Real> FisherMatrix<T> {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn asymmetry(&self) -> T {
        let m = &self.entries;
        let mut dev = T::zero();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        dev
    }

    pub fn min_eigenvalue(&self) -> T {
        let sym = (&self.entries + self.entries.transpose()) * T::lit(0.5);
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
    }

    /// Largest entry of `F − other`.
    pub fn max_diff(&self, other: &DMatrix<T>) -> T {
        self.entries
            .iter()
            .zip(other.iter())
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
    }

    pub fn inverse(&self) -> Option<DMatrix<T>> {
        self.entries.clone().try_inverse()
    }
}

/// Pure-state Fisher information as the metric of the basis: `Fᵢⱼ = ⟨Bᵢ, Bⱼ⟩`.
pub fn fisher_pure<T: Real>(v: &OperatorBasis<T>) -> FisherMatrix<T> {
    FisherMatrix { entries: v.gram() }
}

/// Symmetric logarithmic derivatives solving `2Bⱼ = Lⱼρ + ρLⱼ` in the
/// eigenbasis of `ρ`.
///
/// Entries with `λₐ + λ_b < SLD_PAIR_TOL` are set to zero. For a mixed state
/// that is only allowed where `Bⱼ` has no support.
pub fn sld_operators<T: Real>(rho: &DensityState<T>, v: &OperatorBasis<T>) -> Result<Vec<OperatorMatrix<T>>> {
    v.ensure_dim(rho.dim())?;
    let spec = herm_eig_unchecked(rho.matrix());
    let pure = rho.is_pure(T::lit(1e-10));
    let n = rho.dim();
    let pair_tol = T::lit(SLD_PAIR_TOL);
    let vecs = &spec.eigenvectors;
    let mut out = Vec::with_capacity(v.len());
    for b in v.elements() {
        let bt = spec.to_eigenbasis(b);
        let support_tol = pair_tol * b.norm();
        let mut lt = DMatrix::<Complex<T>>::zeros(n, n);
        for a in 0..n {
            for bb in 0..n {
                let sum = spec.eigenvalues[a] + spec.eigenvalues[bb];
                if sum >= pair_tol {
                    lt[(a, bb)] = bt[(a, bb)] * c(T::lit(2.0) / sum, T::zero());
                } else if !pure && (bt[(a, bb)].re.abs() + bt[(a, bb)].im.abs()) > support_tol {
                    return Err(Error::SingularSld { a, b: bb });
                }
            }
        }
        out.push(OperatorMatrix::from_fn(n, |_, _| c(T::zero(), T::zero())).add_scaled(
            T::one(),
            &OperatorMatrix::from_matrix(vecs * lt * vecs.adjoint()).expect("finite SLD"),
        ));
    }
    Ok(out)
}

/// SLD Fisher information `Fᵢⱼ = ½⟨ρ, [Lᵢ, Lⱼ]₊⟩`, computed directly from the SLDs.
pub fn sld_fisher_oracle<T: Real>(rho: &DensityState<T>, v: &OperatorBasis<T>) -> Result<FisherMatrix<T>> {
    let slds = sld_operators(rho, v)?;
    // L_j ρ for every j, then F_ij = Re Tr(L_i L_j ρ) by symmetry of the trace.
    let l_rho: Vec<_> = slds.iter().map(|l| l * rho.matrix()).collect();
    let r = slds.len();
    let mut f = DMatrix::zeros(r, r);
    for i in 0..r {
        let li_dag = slds[i].dagger();
        for j in i..r {
            let val = hs_inner_unchecked(&li_dag, &l_rho[j]).re;
            f[(i, j)] = val;
            f[(j, i)] = val;
        }
    }
    Ok(FisherMatrix { entries: f })
}

/// Heat rate from observable-space quantities:
/// `Q̇ = −Σᵢⱼ (θ̇ᵢ hⱼ + θᵢ ḣⱼ) Fᵢⱼ`.
pub fn heat_rate_fisher<T: Real>(
    theta: &[T],
    theta_dot: &[T],
    h: &[T],
    h_dot: &[T],
    fisher: &FisherMatrix<T>,
) -> Result<T> {
    let r = fisher.size();
    for (what, len) in [
        ("theta", theta.len()),
        ("theta_dot", theta_dot.len()),
        ("h", h.len()),
        ("h_dot", h_dot.len()),
    ] {
        if len != r {
            return Err(Error::LengthMismatch {
                what,
                expected: r,
                found: len,
            });
        }
    }
    let f = &fisher.entries;
    let mut acc = T::zero();
    for i in 0..r {
        for j in 0..r {
            acc += (theta_dot[i] * h[j] + theta[i] * h_dot[j]) * f[(i, j)];
        }
    }
    Ok(-acc)
}

/// Evaluates every thermodynamic quantity at one instant.
pub fn sample_at<T: Real>(
    t: T,
    rho: &DensityState<T>,
    h: &OperatorMatrix<T>,
    s: &OperatorMatrix<T>,
    v: &OperatorBasis<T>,
) -> Result<ThermoSample> {
    let dec = decompose_state(rho, v)?;
    let split = split_hamiltonian(h, v)?;
    let (obs, unobs) = energies(rho, &split)?;
    let entropy = generalized_entropy(&dec)?;
    let dissipation = heat_rate(rho, &dissipation_operator(&split))?;
    let output = hs_inner_unchecked(s, rho.matrix()).re;
    Ok(ThermoSample {
        t: t.as_f64(),
        obs_energy: obs.as_f64(),
        unobs_energy: unobs.as_f64(),
        entropy: entropy.as_f64(),
        dissipation: dissipation.as_f64(),
        output: output.as_f64(),
        theta: dec.theta.iter().map(|x| x.as_f64()).collect(),
        h_coeffs: split.h_coeffs.iter().map(|x| x.as_f64()).collect(),
    })
}
