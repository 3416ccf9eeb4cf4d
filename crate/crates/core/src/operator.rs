//! Dense complex operators with Hilbert–Schmidt geometry.
//!
//! Everything here is a pure function on immutable inputs. Operators are
//! stored densely; the target dimensions are at most a few dozen.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default relative tolerance for structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Square complex matrix acting on an `n`-dimensional Hilbert space.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    data: DMatrix<Complex<T>>,
}

impl<T: Real> fmt::Debug for OperatorMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorMatrix({}x{}) {:?}", self.dim(), self.dim(), self.data)
    }
}

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn conj<T: Real>(z: Complex<T>) -> Complex<T> {
    Complex::new(z.re, -z.im)
}

#[inline]
pub(crate) fn abs2<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

/// `exp(-i * phase)`.
#[inline]
pub(crate) fn cis_neg<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), -phase.sin())
}

impl<T: Real> OperatorMatrix<T> {
    pub fn from_matrix(data: DMatrix<Complex<T>>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        Ok(Self { data })
    }

    /// Wraps a matrix already known to be square.
    pub(crate) fn from_square(data: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    /// Builds an operator from row-major `(re, im)` pairs.
    pub fn from_row_major(dim: usize, entries: &[(T, T)]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                what: "matrix entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(dim, dim, |i, j| {
            let (re, im) = entries[i * dim + j];
            c(re, im)
        }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        Self::from_square(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_square(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_square(DMatrix::identity(dim, dim))
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                c(values[i], T::zero())
            } else {
                c(T::zero(), T::zero())
            }
        })
    }

    /// Projector `|psi><psi|` for a (not necessarily normalised) vector.
    pub fn outer(psi: &[Complex<T>]) -> Self {
        let n = psi.len();
        Self::from_fn(n, |i, j| psi[i] * conj(psi[j]))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self::from_square(self.data.adjoint())
    }

    pub fn trace(&self) -> Complex<T> {
        self.data.trace()
    }

    /// Frobenius (Hilbert–Schmidt) norm.
    pub fn norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + abs2(*z)).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(abs2(*z).sqrt()))
    }

    pub fn scale(&self, s: T) -> Self {
        self.scale_complex(c(s, T::zero()))
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        Self::from_square(self.data.map(|z| z * s))
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        let sc = c(s, T::zero());
        Self::from_square(self.data.zip_map(&other.data, |a, b| a + b * sc))
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Largest entry of `A - A†`.
    pub fn hermitian_deviation(&self) -> T {
        let n = self.dim();
        let mut dev = T::zero();
        for i in 0..n {
            for j in i..n {
                let d = self.data[(i, j)] - conj(self.data[(j, i)]);
                dev = dev.max(abs2(d).sqrt());
            }
        }
        dev
    }

    /// `max|A - A†| <= tol * ‖A‖`.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_deviation() <= tol * self.norm()
    }

    pub fn ensure_hermitian(&self, tol: T) -> Result<()> {
        if self.is_hermitian(tol) {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.hermitian_deviation().as_f64(),
            })
        }
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let half = c(T::lit(0.5), T::zero());
        Self::from_square(self.data.zip_map(&self.data.adjoint(), |a, b| (a + b) * half))
    }

    pub fn is_skew_hermitian(&self, tol: T) -> bool {
        let sum = &self.data + self.data.adjoint();
        let dev = sum.iter().fold(T::zero(), |acc, z| acc.max(abs2(*z).sqrt()));
        dev <= tol * self.norm()
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        let n = self.dim();
        let prod = self.data.adjoint() * &self.data;
        let id = DMatrix::<Complex<T>>::identity(n, n);
        (prod - id).iter().all(|z| abs2(*z).sqrt() <= tol)
    }

    pub fn is_traceless(&self, tol: T) -> bool {
        abs2(self.trace()).sqrt() <= tol * self.norm().max(T::one())
    }

    /// Real and imaginary parts stacked row-major: `2 n²` real coordinates.
    pub fn to_real_vec(&self) -> Vec<T> {
        let n = self.dim();
        let mut out = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.data[(i, j)].re);
            }
        }
        for i in 0..n {
            for j in 0..n {
                out.push(self.data[(i, j)].im);
            }
        }
        out
    }

    /// Element-wise maximum deviation from another operator.
    pub fn max_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(T::zero(), |acc, (a, b)| acc.max(abs2(*a - *b).sqrt()))
    }

    /// Conjugation `U A U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        Self::from_square(&u.data * &self.data * u.data.adjoint())
    }
}

impl<T: Real> Add for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn add(self, rhs: Self) -> OperatorMatrix<T> {
        OperatorMatrix::from_square(&self.data + &rhs.data)
    }
}

impl<T: Real> Sub for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn sub(self, rhs: Self) -> OperatorMatrix<T> {
        OperatorMatrix::from_square(&self.data - &rhs.data)
    }
}

impl<T: Real> Mul for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn mul(self, rhs: Self) -> OperatorMatrix<T> {
        OperatorMatrix::from_square(&self.data * &rhs.data)
    }
}

impl<T: Real> Neg for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn neg(self) -> OperatorMatrix<T> {
        OperatorMatrix::from_square(-&self.data)
    }
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Result<Complex<T>> {
    a.check_dim(b)?;
    Ok(hs_inner_unchecked(a, b))
}

#[inline]
pub(crate) fn hs_inner_unchecked<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Complex<T> {
    a.data
        .iter()
        .zip(b.data.iter())
        .fold(c(T::zero(), T::zero()), |acc, (x, y)| acc + conj(*x) * *y)
}

/// `ab − ba`.
pub fn commutator<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    a.check_dim(b)?;
    Ok(commutator_unchecked(a, b))
}

pub(crate) fn commutator_unchecked<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    OperatorMatrix::from_square(&a.data * &b.data - &b.data * &a.data)
}

/// `ab + ba`.
pub fn anticommutator<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    a.check_dim(b)?;
    Ok(OperatorMatrix::from_square(&a.data * &b.data + &b.data * &a.data))
}

/// Lie bracket on Hermitian representatives: `i[a, b]`, Hermitian for Hermitian inputs.
pub fn hermitian_bracket<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    a.check_dim(b)?;
    Ok(hermitian_bracket_unchecked(a, b))
}

pub(crate) fn hermitian_bracket_unchecked<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    commutator_unchecked(a, b).scale_complex(c(T::zero(), T::one()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    OperatorMatrix::from_square(a.data.kronecker(&b.data))
}

/// `I₂ ⊗ … ⊗ op ⊗ … ⊗ I₂` with `op` at position `site` (site 0 is the leftmost factor).
pub fn embed_site<T: Real>(op: &OperatorMatrix<T>, site: usize, n_sites: usize) -> Result<OperatorMatrix<T>> {
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: op.dim(),
        });
    }
    let id = OperatorMatrix::<T>::identity(2);
    let mut acc = if site == 0 { op.clone() } else { id.clone() };
    for k in 1..n_sites {
        acc = kron(&acc, if k == site { op } else { &id });
    }
    Ok(acc)
}

/// Pauli matrices and the 2×2 identity.
pub mod pauli {
    use super::*;

    pub fn identity<T: Real>() -> OperatorMatrix<T> {
        OperatorMatrix::identity(2)
    }

    pub fn x<T: Real>() -> OperatorMatrix<T> {
        let (o, l) = (T::zero(), T::one());
        OperatorMatrix::from_fn(2, |i, j| if i != j { c(l, o) } else { c(o, o) })
    }

    pub fn y<T: Real>() -> OperatorMatrix<T> {
        let (o, l) = (T::zero(), T::one());
        OperatorMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c(o, -l),
            (1, 0) => c(o, l),
            _ => c(o, o),
        })
    }

    pub fn z<T: Real>() -> OperatorMatrix<T> {
        OperatorMatrix::diagonal(&[T::one(), -T::one()])
    }
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Columns are the eigenvectors.
    pub eigenvectors: DMatrix<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    /// `V f(Λ) V†` for a real function of the eigenvalues.
    pub fn map_real(&self, f: impl Fn(T) -> T) -> OperatorMatrix<T> {
        self.map_complex(|x| c(f(x), T::zero()))
    }

    pub fn map_complex(&self, f: impl Fn(T) -> Complex<T>) -> OperatorMatrix<T> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, lam) in self.eigenvalues.iter().enumerate() {
            let fk = f(*lam);
            scaled.column_mut(k).iter_mut().for_each(|z| *z *= fk);
        }
        OperatorMatrix::from_square(scaled * v.adjoint())
    }

    /// Expresses an operator in the eigenbasis: `V† A V`.
    pub fn to_eigenbasis(&self, a: &OperatorMatrix<T>) -> DMatrix<Complex<T>> {
        self.eigenvectors.adjoint() * &a.data * &self.eigenvectors
    }

    pub fn min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> T {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }
}

/// Hermitian eigendecomposition; input must be Hermitian to 1e-10 (relative).
pub fn herm_eig<T: Real>(a: &OperatorMatrix<T>) -> Result<Spectrum<T>> {
    a.ensure_hermitian(T::lit(DEFAULT_TOL))?;
    Ok(herm_eig_unchecked(a))
}

pub(crate) fn herm_eig_unchecked<T: Real>(a: &OperatorMatrix<T>) -> Spectrum<T> {
    let sym = a.hermitian_part();
    let eig = SymmetricEigen::new(sym.data);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = DMatrix::from_fn(a.dim(), a.dim(), |r, k| eig.eigenvectors[(r, order[k])]);
    Spectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Propagator `exp(−i H dt)` via Hermitian eigendecomposition.
pub fn expm_unitary<T: Real>(h: &OperatorMatrix<T>, dt: T) -> Result<OperatorMatrix<T>> {
    let spec = herm_eig(h)?;
    Ok(propagator_from_spectrum(&spec, dt))
}

pub(crate) fn propagator_from_spectrum<T: Real>(spec: &Spectrum<T>, dt: T) -> OperatorMatrix<T> {
    spec.map_complex(|lam| cis_neg(lam * dt))
}

/// General matrix exponential by scaling and squaring with a Taylor core.
///
/// Independent of the eigendecomposition route; used to cross-check it.
pub fn expm<T: Real>(a: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    let n = a.dim();
    let norm = a.norm();
    let mut squarings = 0u32;
    let mut scale = T::one();
    let half = T::lit(0.5);
    while norm * scale > half {
        scale *= half;
        squarings += 1;
    }
    let x = a.scale(scale);
    let mut term = OperatorMatrix::<T>::identity(n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = (&term * &x).scale(T::one() / T::lit(k as f64));
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    type Op = OperatorMatrix<f64>;

    fn random_hermitian(n: usize, seed: u64) -> Op {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = Op::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a.hermitian_part()
    }

    #[test]
    fn hs_inner_examples() {
        let id = pauli::identity::<f64>();
        assert_eq!(hs_inner(&id, &id).unwrap(), c(2.0, 0.0));
        assert_eq!(hs_inner(&pauli::x(), &pauli::y::<f64>()).unwrap(), c(0.0, 0.0));
        assert_eq!(hs_inner(&pauli::z(), &pauli::z::<f64>()).unwrap(), c(2.0, 0.0));
        assert!(matches!(
            hs_inner(&Op::identity(2), &Op::identity(4)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pauli_commutators() {
        let xy = commutator(&pauli::x::<f64>(), &pauli::y()).unwrap();
        let expected = pauli::z::<f64>().scale_complex(c(0.0, 2.0));
        assert!(xy.max_diff(&expected) < 1e-15);
        let a = random_hermitian(4, 1);
        assert!(commutator(&a, &a).unwrap().max_abs() < 1e-15);
        assert!(anticommutator(&pauli::x::<f64>(), &pauli::y()).unwrap().max_abs() < 1e-15);
        let b = random_hermitian(4, 2);
        assert!(commutator(&a, &b).unwrap().is_skew_hermitian(1e-12));
        assert!(hermitian_bracket(&a, &b).unwrap().is_hermitian(1e-12));
    }

    #[test]
    fn embedding() {
        let e = embed_site(&pauli::x::<f64>(), 0, 2).unwrap();
        assert!(e.max_diff(&kron(&pauli::x(), &pauli::identity())) < 1e-15);
        let e = embed_site(&pauli::z::<f64>(), 1, 2).unwrap();
        assert!(e.max_diff(&kron(&pauli::identity(), &pauli::z())) < 1e-15);
        assert_eq!(e.trace(), c(0.0, 0.0));
        let e = embed_site(&pauli::identity::<f64>(), 0, 3).unwrap();
        assert!(e.max_diff(&Op::identity(8)) < 1e-15);
        assert!(matches!(
            embed_site(&pauli::x::<f64>(), 3, 3),
            Err(Error::SiteOutOfRange { site: 3, n_sites: 3 })
        ));
        // distinct sites commute exactly
        let a = embed_site(&pauli::x::<f64>(), 0, 3).unwrap();
        let b = embed_site(&pauli::y::<f64>(), 2, 3).unwrap();
        assert_eq!(commutator(&a, &b).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn expm_examples() {
        let u = expm_unitary(&pauli::z::<f64>(), PI / 2.0).unwrap();
        assert!((u.get(0, 0) - c(0.0, -1.0)).norm() < 1e-15);
        assert!((u.get(1, 1) - c(0.0, 1.0)).norm() < 1e-15);
        let h = random_hermitian(5, 3);
        assert!(expm_unitary(&h, 0.0).unwrap().max_diff(&Op::identity(5)) < 1e-14);
        assert!(matches!(
            expm_unitary(&Op::from_fn(2, |i, j| c((i + 2 * j) as f64, 0.0)), 0.1),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn expm_routes_agree_and_unitary() {
        let h = random_hermitian(16, 4);
        let dt = 0.37;
        let u = expm_unitary(&h, dt).unwrap();
        assert!(u.is_unitary(1e-12));
        let oracle = expm(&h.scale_complex(c(0.0, -dt)));
        assert!(u.max_diff(&oracle) < 1e-11, "{}", u.max_diff(&oracle));
    }

    #[test]
    fn herm_eig_examples() {
        let s = herm_eig(&pauli::z::<f64>()).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 1.0]);
        let s = herm_eig(&Op::identity(4).scale(0.25)).unwrap();
        assert!(s.eigenvalues.iter().all(|l| (l - 0.25).abs() < 1e-15));
        let psi: Vec<_> = [0.6, 0.0, 0.8].iter().map(|&x| c(x, 0.0)).collect();
        let s = herm_eig(&Op::outer(&psi)).unwrap();
        assert!(s.eigenvalues[..2].iter().all(|l| l.abs() < 1e-14));
        assert!((s.eigenvalues[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_invariants() {
        let a = random_hermitian(12, 5);
        let s = herm_eig(&a).unwrap();
        let v = OperatorMatrix::from_square(s.eigenvectors.clone());
        assert!(v.is_unitary(1e-12));
        for k in 0..12 {
            let col = s.eigenvectors.column(k);
            let lhs = a.matrix() * col;
            let err = (lhs - col * c(s.eigenvalues[k], 0.0)).norm();
            assert!(err < 1e-10 * a.norm());
        }
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn generic_over_f32() {
        let u = expm_unitary(&pauli::x::<f32>(), 0.3).unwrap();
        assert!(u.is_unitary(1e-5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn hs_inner_conjugate_symmetric(seed in any::<u64>()) {
                let a = random_hermitian(6, seed).scale_complex(c(0.3, 0.7));
                let b = random_hermitian(6, seed ^ 0xdead);
                let ab = hs_inner(&a, &b).unwrap();
                let ba = hs_inner(&b, &a).unwrap();
                prop_assert!((ab - conj(ba)).norm() < 1e-12);
                let aa = hs_inner(&a, &a).unwrap();
                prop_assert!(aa.im.abs() < 1e-12 && aa.re >= 0.0);
            }

            #[test]
            fn jacobi_identity(seed in any::<u64>()) {
                let a = random_hermitian(5, seed);
                let b = random_hermitian(5, seed.wrapping_add(1));
                let cc = random_hermitian(5, seed.wrapping_add(2));
                let t1 = commutator(&a, &commutator(&b, &cc).unwrap()).unwrap();
                let t2 = commutator(&b, &commutator(&cc, &a).unwrap()).unwrap();
                let t3 = commutator(&cc, &commutator(&a, &b).unwrap()).unwrap();
                prop_assert!((&(&t1 + &t2) + &t3).max_abs() < 1e-10);
            }

            #[test]
            fn propagator_group_law(seed in any::<u64>(), dt1 in -2.0f64..2.0, dt2 in -2.0f64..2.0) {
                let h = random_hermitian(6, seed);
                let u1 = expm_unitary(&h, dt1).unwrap();
                let u2 = expm_unitary(&h, dt2).unwrap();
                let u12 = expm_unitary(&h, dt1 + dt2).unwrap();
                prop_assert!((&u1 * &u2).max_diff(&u12) < 1e-10);
            }
        }
    }
}
