//! Central spin model: one spin-½ coupled by isotropic exchange to `N`
//! non-interacting bath spins in a common z-field, driven on the central spin.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dynamics::BilinearControlSystem;
use crate::error::{Error, Result};
use crate::observability::DensityState;
use crate::operator::{embed_site, kron, pauli, OperatorMatrix};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli<T: Real>(self) -> OperatorMatrix<T> {
        match self {
            Axis::X => pauli::x(),
            Axis::Y => pauli::y(),
            Axis::Z => pauli::z(),
        }
    }
}

fn default_control_axis() -> Axis {
    Axis::Y
}

fn default_measurement_axis() -> Axis {
    Axis::X
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralSpinSpec {
    pub n_bath: usize,
    pub field: f64,
    /// One exchange constant per bath spin.
    pub couplings: Vec<f64>,
    #[serde(default = "default_control_axis")]
    pub control_axis: Axis,
    #[serde(default = "default_measurement_axis")]
    pub measurement_axis: Axis,
}

impl CentralSpinSpec {
    /// Equal couplings `γ` on every bath spin, y control, x measurement.
    pub fn uniform(n_bath: usize, field: f64, coupling: f64) -> Self {
        Self {
            n_bath,
            field,
            couplings: vec![coupling; n_bath],
            control_axis: Axis::Y,
            measurement_axis: Axis::X,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bath < 1 {
            return Err(Error::InvalidParameter(
                "central spin model needs at least one bath spin".into(),
            ));
        }
        if self.couplings.len() != self.n_bath {
            return Err(Error::LengthMismatch {
                what: "couplings",
                expected: self.n_bath,
                found: self.couplings.len(),
            });
        }
        if !self.field.is_finite() || self.couplings.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("field and couplings must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << (self.n_bath + 1)
    }

    pub fn has_equal_couplings(&self) -> bool {
        self.couplings.windows(2).all(|w| w[0] == w[1])
    }
}

/// `H₀ = −B(σz⊗I + Σⱼ σzʲ) + Σⱼ γⱼ(σx⊗σxʲ + σy⊗σyʲ + σz⊗σzʲ)`, control
/// `−σ_c ⊗ I` (amplitudes enter with a positive sign), observable `σ_m ⊗ I`.
pub fn build_central_spin<T: Real>(spec: &CentralSpinSpec) -> Result<BilinearControlSystem<T>> {
    spec.validate()?;
    let sites = spec.n_bath + 1;
    let n = spec.dim();
    let b = T::lit(spec.field);
    let mut drift = OperatorMatrix::zeros(n);
    for site in 0..sites {
        drift = drift.add_scaled(-b, &embed_site(&pauli::z(), site, sites)?);
    }
    let paulis = [pauli::x::<T>(), pauli::y(), pauli::z()];
    for (j, gamma) in spec.couplings.iter().enumerate() {
        for p in &paulis {
            let pair = &embed_site(p, 0, sites)? * &embed_site(p, j + 1, sites)?;
            drift = drift.add_scaled(T::lit(*gamma), &pair);
        }
    }
    let bath_id = OperatorMatrix::identity(n / 2);
    let control = kron(&spec.control_axis.pauli::<T>(), &bath_id).scale(-T::one());
    let observable = kron(&spec.measurement_axis.pauli::<T>(), &bath_id);
    BilinearControlSystem::new(drift, vec![control], observable)
}

/// Closed form for `dim 𝓛` of the equal-coupling model:
/// `(2+N)(9+4N(4+N))/6` for even `N`, `(1+N)(3+2N)(7+2N)/6` for odd `N`.
pub fn dim_formula(n_bath: u64) -> u64 {
    let n = n_bath;
    if n.is_multiple_of(2) {
        (2 + n) * (9 + 4 * n * (4 + n)) / 6
    } else {
        (1 + n) * (3 + 2 * n) * (7 + 2 * n) / 6
    }
}

/// Every spin up: `|0…0⟩⟨0…0|`.
pub fn all_up_state<T: Real>(n_bath: usize) -> DensityState<T> {
    let n = 1usize << (n_bath + 1);
    let mut psi = vec![Complex::new(T::zero(), T::zero()); n];
    psi[0] = Complex::new(T::one(), T::zero());
    DensityState::pure(&psi).expect("basis vector")
}

/// `⟨↑…↑|H₀|↑…↑⟩ = −B(N+1) + Σⱼ γⱼ`.
pub fn all_up_energy(spec: &CentralSpinSpec) -> f64 {
    -spec.field * (spec.n_bath as f64 + 1.0) + spec.couplings.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::close_algebra;
    use crate::observability::measured_output;
    use crate::operator::hs_inner;

    #[test]
    fn formula_values() {
        assert_eq!(dim_formula(1), 15);
        assert_eq!(dim_formula(2), 38);
        assert_eq!(dim_formula(3), 78);
        assert_eq!(dim_formula(4), 137);
    }

    #[test]
    fn construction_checks() {
        let sys = build_central_spin::<f64>(&CentralSpinSpec::uniform(3, 10.0, -3.0)).unwrap();
        assert_eq!(sys.dim(), 16);
        let small = CentralSpinSpec::uniform(1, 10.0, -1.0);
        let sys1 = build_central_spin::<f64>(&small).unwrap();
        assert_eq!(sys1.dim(), 4);
        assert!(sys1.drift().is_hermitian(1e-14) && sys1.drift().trace().norm() < 1e-14);
        assert!(build_central_spin::<f64>(&CentralSpinSpec::uniform(0, 1.0, -1.0)).is_err());
        let mut mismatched = CentralSpinSpec::uniform(2, 1.0, -1.0);
        mismatched.couplings.pop();
        assert!(build_central_spin::<f64>(&mismatched).is_err());
    }

    #[test]
    fn all_up_expectations() {
        let spec = CentralSpinSpec {
            couplings: vec![-3.0, -2.0, -1.5],
            ..CentralSpinSpec::uniform(3, 10.0, 0.0)
        };
        let sys = build_central_spin::<f64>(&spec).unwrap();
        let rho = all_up_state(3);
        let e = hs_inner(sys.drift(), rho.matrix()).unwrap().re;
        assert!((e - all_up_energy(&spec)).abs() < 1e-12);
        assert!(measured_output(&rho, sys.observable()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn closure_matches_formula_for_small_baths() {
        for n in 1..=2 {
            let sys = build_central_spin::<f64>(&CentralSpinSpec::uniform(n, 10.0, -3.0)).unwrap();
            let (_, report) = close_algebra(&sys.generators(), 1e-9).unwrap();
            assert_eq!(report.dimension as u64, dim_formula(n as u64));
        }
    }

    #[test]
    fn spec_serde_defaults() {
        let spec: CentralSpinSpec =
            serde_json::from_str(r#"{"n_bath":2,"field":1.0,"couplings":[-1.0,-1.0]}"#).unwrap();
        assert_eq!(spec.control_axis, Axis::Y);
        assert_eq!(spec.measurement_axis, Axis::X);
        assert!(spec.has_equal_couplings());
    }
}
